#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dnr/causal.hpp"
#include "dnr/matrix.hpp"

namespace dnr::causal {

// (node id, value index) pairs; an evidence or do() assignment.
using Assignment = std::vector<std::pair<int, int>>;

// Conditional probability table of one node. Rows enumerate parent
// assignments in mixed radix over `parents` (first listed parent most
// significant); columns enumerate the node's own domain values.
struct Cpt {
    std::vector<int> parents;  // explicit order; must equal the graph parents as a set
    Matrix table;              // rows x |domain|, each row sums to 1 within 1e-12
};

// Finite structural causal model: DAG + per-node finite domains + CPTs.
// Immutable after construction; the constructor validates shapes,
// nonnegativity, and row normalization.
class DiscreteScm {
public:
    DiscreteScm(CausalDag dag, std::vector<std::vector<std::string>> domains,
                std::vector<Cpt> cpts);

    const CausalDag& dag() const { return dag_; }
    std::size_t domain_size(int node) const { return domains_.at(static_cast<std::size_t>(node)).size(); }
    const std::vector<std::string>& domain(int node) const { return domains_.at(static_cast<std::size_t>(node)); }
    const Cpt& cpt(int node) const { return cpts_.at(static_cast<std::size_t>(node)); }

    // Value index of a domain label; throws invalid_input when absent.
    int value_index(int node, const std::string& label) const;

private:
    CausalDag dag_;
    std::vector<std::vector<std::string>> domains_;
    std::vector<Cpt> cpts_;
};

// Exact joint over all nodes, mixed radix with node 0 most significant.
// State spaces beyond kMaxJointStates throw capacity_error.
inline constexpr std::size_t kMaxJointStates = 1000000;

class JointTable {
public:
    JointTable(std::vector<std::size_t> sizes);

    std::size_t states() const { return p_.size(); }
    std::size_t num_nodes() const { return sizes_.size(); }
    std::size_t domain_size(int node) const { return sizes_.at(static_cast<std::size_t>(node)); }

    double& at(std::size_t flat) { return p_[flat]; }
    double at(std::size_t flat) const { return p_[flat]; }

    // Decode one node's value from a flat state index.
    int value(std::size_t flat, int node) const;

    // Sum of probabilities of states consistent with the assignment.
    double marginal(const Assignment& fixed) const;

    // P(target = v | evidence) for every v; throws conditioning_error when
    // the evidence has zero probability.
    std::vector<double> conditional(int target, const Assignment& evidence) const;

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> stride_;
    std::vector<double> p_;
};

JointTable joint_distribution(const DiscreteScm& scm);

// Exact P(target | evidence) by marginalizing the joint.
std::vector<double> conditional(const DiscreteScm& scm, int target, const Assignment& evidence);

// Severed-graph intervention: each assigned node loses its incoming edges and
// its CPT becomes a point mass. The result is the ground-truth oracle that
// adjustment formulas are validated against.
DiscreteScm intervene(const DiscreteScm& scm, const Assignment& do_set);

// Covariate-specific backdoor adjustment:
//     sum_z  P(y | x, w, z) * P_do(x)(z | w)
// where the weight is the post-intervention conditional of the adjustment
// assignment z given the covariate assignment w. Whenever z and w contain no
// descendant of x — in particular in every classic-criterion use with empty
// w — the weight equals the observational P(z | w) and, for empty w, the
// plain P(z), so the formula reduces to the standard adjustment sum. With
// empty z it reduces to P(y | x, w). Returns the distribution over y's
// domain. z must be disjoint from {x, y} and from w's nodes; zero-probability
// conditioning throws conditioning_error.
std::vector<double> backdoor_adjust(const DiscreteScm& scm, int x, int x_value, int y,
                                    const std::vector<int>& z, const Assignment& w);

// Exact conditional mutual information I(x; y | z) in nats, computed from
// the joint. Zero (within numerical noise) exactly when x and y are
// conditionally independent given z.
double conditional_mutual_information(const JointTable& joint, int x, int y,
                                      const std::vector<int>& z);

// All-binary parameterization of a DAG with CPT entries drawn uniformly from
// [0.05, 0.95] (bounded away from 0/1 so every conditioning event has
// positive probability). Deterministic in the seed.
DiscreteScm random_binary_scm(const CausalDag& dag, std::uint64_t seed);

}  // namespace dnr::causal
