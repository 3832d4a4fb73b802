#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dnr/errors.hpp"

namespace dnr::causal {

using NodeSet = std::set<int>;

// Directed acyclic graph over named variables. Nodes are created on first
// mention; edges are a set (re-adding an existing edge is a no-op). Self
// loops and cycle-creating edges throw invalid_input.
class CausalDag {
public:
    int add_node(const std::string& name);
    void add_edge(const std::string& from, const std::string& to);
    void add_edge(int from, int to);

    std::size_t node_count() const { return names_.size(); }
    bool has_node(const std::string& name) const;
    int node(const std::string& name) const;  // throws invalid_input when absent
    const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }

    const std::vector<int>& parents(int id) const { return parents_.at(static_cast<std::size_t>(id)); }
    const std::vector<int>& children(int id) const { return children_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    bool has_edge(int from, int to) const;

    // Proper descendants (excludes the node itself).
    NodeSet descendants(int id) const;
    bool reachable(int from, int to) const;  // along edge directions, from != to paths
    std::vector<int> topological_order() const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<int>> parents_;   // sorted
    std::vector<std::vector<int>> children_;  // sorted
    std::vector<std::pair<int, int>> edges_;  // insertion order
};

// One step along a path: whether the edge is traversed cause→effect
// (forward) or effect→cause (backward).
enum class Step { forward, backward };

// Simple path in the undirected sense, annotated with per-step directions.
// nodes.size() == steps.size() + 1.
struct NodePath {
    std::vector<int> nodes;
    std::vector<Step> steps;

    std::size_t length() const { return steps.size(); }
};

// Role of an interior path node, determined by its two incident steps.
enum class Junction { chain, fork, collider };

Junction junction_at(const NodePath& path, std::size_t interior_index);

// All simple paths between x and y (undirected traversal, directions
// annotated), ordered lexicographically by node-id sequence. Graphs larger
// than kMaxPathNodes nodes throw capacity_error — enumeration is exact, not
// approximate, and meant for small graphs.
inline constexpr std::size_t kMaxPathNodes = 20;
std::vector<NodePath> enumerate_paths(const CausalDag& g, int x, int y);

// d-separation blocking rule for one path: blocked iff some interior chain or
// fork node is conditioned on, or some interior collider has neither itself
// nor any descendant conditioned on.
bool is_path_blocked(const CausalDag& g, const NodePath& path, const NodeSet& z);

// True iff every path between x and y is blocked by z. x, y must not be in z.
bool is_d_separated(const CausalDag& g, int x, int y, const NodeSet& z);

// Structural filter: the paths between x and y whose first edge points into
// x (independent of any conditioning set).
std::vector<NodePath> classic_backdoor_paths(const CausalDag& g, int x, int y);

// Adjustment-set admissibility: no member of z is a descendant of x, and z
// blocks every classic backdoor path from x to y. x, y must not be in z.
bool satisfies_backdoor_criterion(const CausalDag& g, int x, int y, const NodeSet& z);

enum class PathKind { causal, classic_backdoor, general_backdoor, blocked };

std::string to_string(PathKind kind);

// Full annotation of one x..y path under a conditioning set. The confounder
// is populated exactly for the two backdoor kinds: the path node from which
// dependence flows to both endpoints — the first interior fork in path
// order, or, when the path has no interior fork, the endpoint whose incident
// edge points away from it (the x side preferred when both qualify).
struct PathClassification {
    NodePath path;
    bool open_given_conditioning = false;
    bool is_directed_causal = false;       // every step forward: a causal x->y route
    std::optional<int> confounder;
    PathKind kind = PathKind::blocked;
};

PathClassification classify_path(const CausalDag& g, const NodePath& path, const NodeSet& w);

// Every open-given-w, non-directed-causal path between x and y, annotated.
// Conditioning can open collider routes that the classic criterion never
// sees; those arrive here with kind general_backdoor.
std::vector<PathClassification> general_backdoor_paths(const CausalDag& g, int x, int y,
                                                       const NodeSet& w);

// "X -> K <- P -> F -> Y" rendering for reports.
std::string format_path(const CausalDag& g, const NodePath& path);

}  // namespace dnr::causal
