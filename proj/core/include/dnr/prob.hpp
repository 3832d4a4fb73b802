#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "dnr/errors.hpp"

namespace dnr {

// Distillation temperature: logits are divided by `value` before the softmax.
struct Temperature {
    double value = 1.0;

    Temperature() = default;
    explicit Temperature(double v) : value(v) {
        if (!(v > 0.0)) throw invalid_input("temperature must be positive");
    }
};

// softmax(z/T), computed with a max shift so arbitrarily large logits stay in
// range. Throws invalid_input on non-finite logits or an empty vector.
std::vector<double> softmax(std::span<const double> logits, Temperature t);

// Softmax restricted to the `keep` indices (equivalent to softmax of the
// sub-vector). Output order follows `keep`, which must be non-empty, sorted,
// duplicate-free, and in range; an empty set throws degenerate_group.
std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::size_t> keep, Temperature t);

// Sum of p over `group_a` vs the rest: [sum_a, 1 - sum_a] up to the input's
// own normalization. group_a must be a non-empty proper subset of indices
// (sorted, duplicate-free), otherwise invalid_split.
std::array<double, 2> binary_split(std::span<const double> p,
                                   std::span<const std::size_t> group_a);

// KL(p || q) = sum_i p_i * ln(p_i / q_i), natural log, with 0*ln(0/q) = 0.
// Throws infinite_divergence when some p_i > 0 has q_i <= 0, invalid_input on
// length mismatch or negative entries.
double kl_divergence(std::span<const double> p, std::span<const double> q);

namespace detail {

// ln of softmax denominator under max shift: max(z)/T + ln(sum exp(z/T - max/T)).
// Shared by softmax and log-domain callers.
double log_sum_exp(std::span<const double> logits, double temperature);

}  // namespace detail

}  // namespace dnr
