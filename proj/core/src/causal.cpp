#include "dnr/causal.hpp"

#include <algorithm>
#include <unordered_map>

namespace dnr::causal {

namespace {

void insert_sorted(std::vector<int>& v, int value) {
    auto it = std::lower_bound(v.begin(), v.end(), value);
    if (it == v.end() || *it != value) v.insert(it, value);
}

}  // namespace

int CausalDag::add_node(const std::string& name) {
    if (name.empty()) throw invalid_input("graph: empty node name");
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    names_.push_back(name);
    parents_.emplace_back();
    children_.emplace_back();
    return static_cast<int>(names_.size() - 1);
}

bool CausalDag::has_node(const std::string& name) const {
    for (const auto& n : names_)
        if (n == name) return true;
    return false;
}

int CausalDag::node(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    throw invalid_input("graph: unknown node '" + name + "'");
}

bool CausalDag::has_edge(int from, int to) const {
    const auto& ch = children_.at(static_cast<std::size_t>(from));
    return std::binary_search(ch.begin(), ch.end(), to);
}

void CausalDag::add_edge(const std::string& from, const std::string& to) {
    const int a = add_node(from);
    const int b = add_node(to);
    add_edge(a, b);
}

void CausalDag::add_edge(int from, int to) {
    const auto n = static_cast<int>(node_count());
    if (from < 0 || from >= n || to < 0 || to >= n)
        throw invalid_input("graph: edge endpoint out of range");
    if (from == to) throw invalid_input("graph: self-loop on '" + name(from) + "'");
    if (has_edge(from, to)) return;  // edges are a set
    if (reachable(to, from))
        throw invalid_input("graph: edge " + name(from) + " -> " + name(to) +
                            " would create a cycle");
    insert_sorted(children_[static_cast<std::size_t>(from)], to);
    insert_sorted(parents_[static_cast<std::size_t>(to)], from);
    edges_.emplace_back(from, to);
}

bool CausalDag::reachable(int from, int to) const {
    if (from == to) return true;
    std::vector<int> stack{from};
    std::vector<char> seen(node_count(), 0);
    seen[static_cast<std::size_t>(from)] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int c : children_[static_cast<std::size_t>(v)]) {
            if (c == to) return true;
            if (!seen[static_cast<std::size_t>(c)]) {
                seen[static_cast<std::size_t>(c)] = 1;
                stack.push_back(c);
            }
        }
    }
    return false;
}

NodeSet CausalDag::descendants(int id) const {
    NodeSet out;
    std::vector<int> stack{id};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int c : children_[static_cast<std::size_t>(v)])
            if (out.insert(c).second) stack.push_back(c);
    }
    return out;
}

std::vector<int> CausalDag::topological_order() const {
    std::vector<std::size_t> indegree(node_count(), 0);
    for (std::size_t i = 0; i < node_count(); ++i)
        indegree[i] = parents_[i].size();
    std::vector<int> ready, order;
    for (std::size_t i = 0; i < node_count(); ++i)
        if (indegree[i] == 0) ready.push_back(static_cast<int>(i));
    while (!ready.empty()) {
        // smallest id first keeps the order canonical
        const auto it = std::min_element(ready.begin(), ready.end());
        const int v = *it;
        ready.erase(it);
        order.push_back(v);
        for (int c : children_[static_cast<std::size_t>(v)])
            if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
    }
    return order;
}

Junction junction_at(const NodePath& path, std::size_t i) {
    // i indexes path.nodes, 1 <= i <= length-1
    const bool in_forward = path.steps[i - 1] == Step::forward;    // edge points at node i
    const bool out_forward = path.steps[i] == Step::forward;      // edge leaves node i
    if (in_forward && !out_forward) return Junction::collider;    // -> v <-
    if (!in_forward && out_forward) return Junction::fork;        // <- v ->
    return Junction::chain;                                       // -> v -> or <- v <-
}

std::vector<NodePath> enumerate_paths(const CausalDag& g, int x, int y) {
    if (x == y) throw invalid_input("paths: endpoints must differ");
    if (g.node_count() > kMaxPathNodes)
        throw capacity_error("paths: graph exceeds the " + std::to_string(kMaxPathNodes) +
                             "-node enumeration cap");
    const auto n = static_cast<int>(g.node_count());
    if (x < 0 || x >= n || y < 0 || y >= n) throw invalid_input("paths: node out of range");

    // Undirected neighbors with the step annotation, sorted by node id so the
    // DFS emits paths in lexicographic node-sequence order.
    std::vector<std::vector<std::pair<int, Step>>> adj(g.node_count());
    for (int v = 0; v < n; ++v) {
        for (int c : g.children(v)) adj[static_cast<std::size_t>(v)].push_back({c, Step::forward});
        for (int p : g.parents(v)) adj[static_cast<std::size_t>(v)].push_back({p, Step::backward});
        std::sort(adj[static_cast<std::size_t>(v)].begin(), adj[static_cast<std::size_t>(v)].end());
    }

    std::vector<NodePath> out;
    NodePath cur;
    cur.nodes.push_back(x);
    std::vector<char> on_path(g.node_count(), 0);
    on_path[static_cast<std::size_t>(x)] = 1;

    // Iterative DFS with an explicit next-neighbor cursor per depth.
    std::vector<std::size_t> cursor{0};
    while (!cursor.empty()) {
        const int v = cur.nodes.back();
        auto& next = cursor.back();
        if (v == y || next >= adj[static_cast<std::size_t>(v)].size()) {
            if (v == y) out.push_back(cur);
            on_path[static_cast<std::size_t>(v)] = 0;
            cur.nodes.pop_back();
            if (!cur.steps.empty()) cur.steps.pop_back();
            cursor.pop_back();
            continue;
        }
        const auto [w, step] = adj[static_cast<std::size_t>(v)][next++];
        if (on_path[static_cast<std::size_t>(w)]) continue;
        on_path[static_cast<std::size_t>(w)] = 1;
        cur.nodes.push_back(w);
        cur.steps.push_back(step);
        cursor.push_back(0);
    }
    return out;
}

bool is_path_blocked(const CausalDag& g, const NodePath& path, const NodeSet& z) {
    for (std::size_t i = 1; i < path.nodes.size() - 1; ++i) {
        const int v = path.nodes[i];
        if (junction_at(path, i) == Junction::collider) {
            if (z.count(v)) continue;  // conditioned collider: open here
            bool opened = false;
            for (int d : g.descendants(v))
                if (z.count(d)) {
                    opened = true;
                    break;
                }
            if (!opened) return true;
        } else {
            if (z.count(v)) return true;  // conditioned chain/fork blocks
        }
    }
    return false;
}

bool is_d_separated(const CausalDag& g, int x, int y, const NodeSet& z) {
    if (z.count(x) || z.count(y))
        throw invalid_input("d-separation: query nodes must not be conditioned on");
    for (const auto& path : enumerate_paths(g, x, y))
        if (!is_path_blocked(g, path, z)) return false;
    return true;
}

std::vector<NodePath> classic_backdoor_paths(const CausalDag& g, int x, int y) {
    std::vector<NodePath> out;
    for (auto& path : enumerate_paths(g, x, y))
        if (path.steps.front() == Step::backward) out.push_back(std::move(path));
    return out;
}

bool satisfies_backdoor_criterion(const CausalDag& g, int x, int y, const NodeSet& z) {
    if (z.count(x) || z.count(y))
        throw invalid_input("backdoor criterion: query nodes must not be in the adjustment set");
    const NodeSet desc = g.descendants(x);
    for (int v : z)
        if (desc.count(v)) return false;
    for (const auto& path : classic_backdoor_paths(g, x, y))
        if (is_path_blocked(g, path, z) == false) return false;
    return true;
}

std::string to_string(PathKind kind) {
    switch (kind) {
        case PathKind::causal: return "causal";
        case PathKind::classic_backdoor: return "classic-backdoor";
        case PathKind::general_backdoor: return "general-backdoor";
        case PathKind::blocked: return "blocked";
    }
    return "?";
}

PathClassification classify_path(const CausalDag& g, const NodePath& path, const NodeSet& w) {
    PathClassification c;
    c.path = path;
    c.is_directed_causal =
        std::all_of(path.steps.begin(), path.steps.end(),
                    [](Step s) { return s == Step::forward; });
    c.open_given_conditioning = !is_path_blocked(g, path, w);

    if (c.is_directed_causal) {
        c.kind = PathKind::causal;
        return c;
    }
    if (!c.open_given_conditioning) {
        c.kind = PathKind::blocked;
        return c;
    }
    c.kind = path.steps.front() == Step::backward ? PathKind::classic_backdoor
                                                  : PathKind::general_backdoor;

    // Confounder: the source the dependence radiates from. On an open path
    // every sub-path is itself open (its chains and forks are unconditioned,
    // its colliders are opened), so the source is simply the first interior
    // fork; failing that, an endpoint whose incident edge points away.
    for (std::size_t i = 1; i < path.nodes.size() - 1; ++i)
        if (junction_at(path, i) == Junction::fork) {
            c.confounder = path.nodes[i];
            return c;
        }
    if (path.steps.front() == Step::forward)
        c.confounder = path.nodes.front();
    else if (path.steps.back() == Step::backward)
        c.confounder = path.nodes.back();
    return c;
}

std::vector<PathClassification> general_backdoor_paths(const CausalDag& g, int x, int y,
                                                       const NodeSet& w) {
    if (w.count(x) || w.count(y))
        throw invalid_input("backdoor paths: query nodes must not be conditioned on");
    std::vector<PathClassification> out;
    for (const auto& path : enumerate_paths(g, x, y)) {
        auto c = classify_path(g, path, w);
        if (c.kind == PathKind::classic_backdoor || c.kind == PathKind::general_backdoor)
            out.push_back(std::move(c));
    }
    return out;
}

std::string format_path(const CausalDag& g, const NodePath& path) {
    std::string out = g.name(path.nodes.front());
    for (std::size_t i = 0; i < path.steps.size(); ++i) {
        out += path.steps[i] == Step::forward ? " -> " : " <- ";
        out += g.name(path.nodes[i + 1]);
    }
    return out;
}

}  // namespace dnr::causal
