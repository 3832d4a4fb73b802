#include "dnr/scm.hpp"

#include <algorithm>
#include <cmath>

#include "dnr/rng.hpp"

namespace dnr::causal {

namespace {

constexpr double kRowSumTolerance = 1e-12;

std::size_t checked_state_count(const std::vector<std::size_t>& sizes) {
    std::size_t states = 1;
    for (std::size_t s : sizes) {
        if (s == 0) throw invalid_input("scm: empty domain");
        if (states > kMaxJointStates / s)
            throw capacity_error("scm: joint state space exceeds " +
                                 std::to_string(kMaxJointStates) + " states");
        states *= s;
    }
    return states;
}

}  // namespace

DiscreteScm::DiscreteScm(CausalDag dag, std::vector<std::vector<std::string>> domains,
                         std::vector<Cpt> cpts)
    : dag_(std::move(dag)), domains_(std::move(domains)), cpts_(std::move(cpts)) {
    const std::size_t n = dag_.node_count();
    if (domains_.size() != n || cpts_.size() != n)
        throw invalid_input("scm: need one domain and one CPT per node");
    for (std::size_t v = 0; v < n; ++v) {
        if (domains_[v].empty()) throw invalid_input("scm: empty domain for '" + dag_.name(static_cast<int>(v)) + "'");
        const Cpt& c = cpts_[v];
        auto declared = c.parents;
        std::sort(declared.begin(), declared.end());
        if (std::adjacent_find(declared.begin(), declared.end()) != declared.end())
            throw invalid_input("scm: duplicate parent in CPT of '" + dag_.name(static_cast<int>(v)) + "'");
        if (declared != dag_.parents(static_cast<int>(v)))
            throw invalid_input("scm: CPT parents of '" + dag_.name(static_cast<int>(v)) +
                                "' do not match the graph");
        std::size_t rows = 1;
        for (int p : c.parents) rows *= domain_size(p);
        if (c.table.rows != rows || c.table.cols != domains_[v].size())
            throw invalid_input("scm: CPT shape mismatch for '" + dag_.name(static_cast<int>(v)) + "'");
        for (std::size_t r = 0; r < rows; ++r) {
            double sum = 0.0;
            for (std::size_t k = 0; k < c.table.cols; ++k) {
                const double val = c.table(r, k);
                if (!(val >= 0.0) || !std::isfinite(val))
                    throw invalid_input("scm: CPT entry must be a finite nonnegative real");
                sum += val;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                throw invalid_input("scm: CPT row of '" + dag_.name(static_cast<int>(v)) +
                                    "' does not sum to 1");
        }
    }
}

int DiscreteScm::value_index(int node, const std::string& label) const {
    const auto& dom = domain(node);
    for (std::size_t i = 0; i < dom.size(); ++i)
        if (dom[i] == label) return static_cast<int>(i);
    throw invalid_input("scm: value '" + label + "' not in the domain of '" +
                        dag_.name(node) + "'");
}

JointTable::JointTable(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    const std::size_t states = checked_state_count(sizes_);
    stride_.assign(sizes_.size(), 1);
    for (std::size_t i = sizes_.size(); i-- > 1;)
        stride_[i - 1] = stride_[i] * sizes_[i];
    p_.assign(states, 0.0);
}

int JointTable::value(std::size_t flat, int node) const {
    const auto i = static_cast<std::size_t>(node);
    return static_cast<int>(flat / stride_[i] % sizes_[i]);
}

double JointTable::marginal(const Assignment& fixed) const {
    double s = 0.0;
    for (std::size_t flat = 0; flat < p_.size(); ++flat) {
        bool match = true;
        for (const auto& [node, val] : fixed)
            if (value(flat, node) != val) {
                match = false;
                break;
            }
        if (match) s += p_[flat];
    }
    return s;
}

std::vector<double> JointTable::conditional(int target, const Assignment& evidence) const {
    std::vector<double> out(domain_size(target), 0.0);
    double denom = 0.0;
    for (std::size_t flat = 0; flat < p_.size(); ++flat) {
        bool match = true;
        for (const auto& [node, val] : evidence)
            if (value(flat, node) != val) {
                match = false;
                break;
            }
        if (!match) continue;
        denom += p_[flat];
        out[static_cast<std::size_t>(value(flat, target))] += p_[flat];
    }
    if (denom <= 0.0) throw conditioning_error("conditional: zero-probability evidence");
    for (double& v : out) v /= denom;
    return out;
}

JointTable joint_distribution(const DiscreteScm& scm) {
    const auto n = static_cast<int>(scm.dag().node_count());
    std::vector<std::size_t> sizes(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) sizes[static_cast<std::size_t>(v)] = scm.domain_size(v);
    JointTable joint(sizes);

    for (std::size_t flat = 0; flat < joint.states(); ++flat) {
        double prob = 1.0;
        for (int v = 0; v < n && prob > 0.0; ++v) {
            const Cpt& c = scm.cpt(v);
            std::size_t row = 0;
            for (int p : c.parents)
                row = row * scm.domain_size(p) + static_cast<std::size_t>(joint.value(flat, p));
            prob *= c.table(row, static_cast<std::size_t>(joint.value(flat, v)));
        }
        joint.at(flat) = prob;
    }
    return joint;
}

std::vector<double> conditional(const DiscreteScm& scm, int target, const Assignment& evidence) {
    return joint_distribution(scm).conditional(target, evidence);
}

DiscreteScm intervene(const DiscreteScm& scm, const Assignment& do_set) {
    const auto n = static_cast<int>(scm.dag().node_count());
    std::vector<int> clamped(static_cast<std::size_t>(n), -1);
    for (const auto& [node, val] : do_set) {
        if (node < 0 || node >= n) throw invalid_input("intervene: node out of range");
        if (val < 0 || static_cast<std::size_t>(val) >= scm.domain_size(node))
            throw invalid_input("intervene: value outside the node's domain");
        clamped[static_cast<std::size_t>(node)] = val;
    }

    CausalDag dag;
    for (int v = 0; v < n; ++v) dag.add_node(scm.dag().name(v));
    for (const auto& [from, to] : scm.dag().edges())
        if (clamped[static_cast<std::size_t>(to)] < 0) dag.add_edge(from, to);

    std::vector<std::vector<std::string>> domains;
    std::vector<Cpt> cpts;
    for (int v = 0; v < n; ++v) {
        domains.push_back(scm.domain(v));
        if (const int val = clamped[static_cast<std::size_t>(v)]; val >= 0) {
            Cpt c;
            c.table = Matrix(1, scm.domain_size(v), 0.0);
            c.table(0, static_cast<std::size_t>(val)) = 1.0;
            cpts.push_back(std::move(c));
        } else {
            cpts.push_back(scm.cpt(v));
        }
    }
    return DiscreteScm(std::move(dag), std::move(domains), std::move(cpts));
}

std::vector<double> backdoor_adjust(const DiscreteScm& scm, int x, int x_value, int y,
                                    const std::vector<int>& z, const Assignment& w) {
    const auto n = static_cast<int>(scm.dag().node_count());
    if (x < 0 || x >= n || y < 0 || y >= n || x == y)
        throw invalid_input("adjust: bad treatment/outcome nodes");
    if (x_value < 0 || static_cast<std::size_t>(x_value) >= scm.domain_size(x))
        throw invalid_input("adjust: treatment value outside its domain");
    for (int v : z) {
        if (v == x || v == y) throw invalid_input("adjust: z must exclude treatment and outcome");
        for (const auto& [node, _] : w)
            if (node == v) throw invalid_input("adjust: z overlaps the covariate assignment");
    }
    for (const auto& [node, _] : w)
        if (node == x || node == y)
            throw invalid_input("adjust: covariates must exclude treatment and outcome");

    const JointTable observational = joint_distribution(scm);
    const JointTable interventional = joint_distribution(intervene(scm, {{x, x_value}}));

    const double w_mass = interventional.marginal(w);
    if (w_mass <= 0.0)
        throw conditioning_error("adjust: covariate assignment has zero probability under do()");

    // Enumerate assignments of z in mixed radix.
    std::size_t z_states = 1;
    for (int v : z) z_states *= scm.domain_size(v);

    std::vector<double> out(scm.domain_size(y), 0.0);
    for (std::size_t zi = 0; zi < z_states; ++zi) {
        Assignment zw = w;
        std::size_t rem = zi;
        for (std::size_t k = z.size(); k-- > 0;) {
            zw.push_back({z[k], static_cast<int>(rem % scm.domain_size(z[k]))});
            rem /= scm.domain_size(z[k]);
        }
        const double weight = interventional.marginal(zw) / w_mass;  // P_do(x)(z | w)
        if (weight <= 0.0) continue;  // zero-weight stratum contributes nothing

        Assignment xzw = zw;
        xzw.push_back({x, x_value});
        const auto py = observational.conditional(y, xzw);  // P(y | x, w, z)
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += weight * py[k];
    }
    return out;
}

double conditional_mutual_information(const JointTable& joint, int x, int y,
                                      const std::vector<int>& z) {
    // I(X;Y|Z) = sum p(x,y,z) * ln [ p(z) p(x,y,z) / (p(x,z) p(y,z)) ]
    // accumulated over the full joint; assignments sharing (x,y,z) cells are
    // grouped by flattening those coordinates.
    std::size_t cells = joint.domain_size(x) * joint.domain_size(y);
    for (int v : z) cells *= joint.domain_size(v);

    std::vector<double> pxyz(cells, 0.0);
    auto cell_of = [&](std::size_t flat) {
        std::size_t c = static_cast<std::size_t>(joint.value(flat, x));
        c = c * joint.domain_size(y) + static_cast<std::size_t>(joint.value(flat, y));
        for (int v : z) c = c * joint.domain_size(v) + static_cast<std::size_t>(joint.value(flat, v));
        return c;
    };
    for (std::size_t flat = 0; flat < joint.states(); ++flat) pxyz[cell_of(flat)] += joint.at(flat);

    // Marginal helpers over the grouped table.
    const std::size_t nx = joint.domain_size(x), ny = joint.domain_size(y);
    const std::size_t nz = cells / (nx * ny);
    std::vector<double> pz(nz, 0.0), pxz(nx * nz, 0.0), pyz(ny * nz, 0.0);
    for (std::size_t c = 0; c < cells; ++c) {
        const std::size_t zc = c % nz;
        const std::size_t yc = c / nz % ny;
        const std::size_t xc = c / nz / ny;
        pz[zc] += pxyz[c];
        pxz[xc * nz + zc] += pxyz[c];
        pyz[yc * nz + zc] += pxyz[c];
    }

    double info = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        const double pj = pxyz[c];
        if (pj <= 0.0) continue;
        const std::size_t zc = c % nz;
        const std::size_t yc = c / nz % ny;
        const std::size_t xc = c / nz / ny;
        info += pj * std::log(pz[zc] * pj / (pxz[xc * nz + zc] * pyz[yc * nz + zc]));
    }
    return info;
}

DiscreteScm random_binary_scm(const CausalDag& dag, std::uint64_t seed) {
    Rng rng(seed);
    const auto n = static_cast<int>(dag.node_count());
    std::vector<std::vector<std::string>> domains(static_cast<std::size_t>(n), {"0", "1"});
    std::vector<Cpt> cpts;
    for (int v = 0; v < n; ++v) {
        Cpt c;
        c.parents = dag.parents(v);  // sorted ids as the canonical order
        std::size_t rows = 1;
        for (std::size_t k = 0; k < c.parents.size(); ++k) rows *= 2;
        c.table = Matrix(rows, 2, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double p1 = rng.uniform(0.05, 0.95);
            c.table(r, 0) = 1.0 - p1;
            c.table(r, 1) = p1;
        }
        cpts.push_back(std::move(c));
    }
    return DiscreteScm(dag, domains, std::move(cpts));
}

}  // namespace dnr::causal
