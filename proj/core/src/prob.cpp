#include "dnr/prob.hpp"

#include <algorithm>
#include <cmath>

namespace dnr {

namespace detail {

double log_sum_exp(std::span<const double> logits, double temperature) {
    double mx = -HUGE_VAL;
    for (double z : logits) mx = std::max(mx, z / temperature);
    double s = 0.0;
    for (double z : logits) s += std::exp(z / temperature - mx);
    return mx + std::log(s);
}

namespace {

void check_finite(std::span<const double> logits) {
    if (logits.empty()) throw invalid_input("softmax: empty logit vector");
    for (double z : logits)
        if (!std::isfinite(z)) throw invalid_input("softmax: non-finite logit");
}

void check_index_set(std::span<const std::size_t> idx, std::size_t n, const char* what) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= n) throw invalid_input(std::string(what) + ": index out of range");
        if (k > 0 && idx[k] <= idx[k - 1])
            throw invalid_input(std::string(what) + ": indices must be sorted and unique");
    }
}

}  // namespace

}  // namespace detail

std::vector<double> softmax(std::span<const double> logits, Temperature t) {
    detail::check_finite(logits);
    const double lse = detail::log_sum_exp(logits, t.value);
    std::vector<double> p(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) p[i] = std::exp(logits[i] / t.value - lse);
    return p;
}

std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::size_t> keep, Temperature t) {
    if (keep.empty()) throw degenerate_group("masked_softmax: empty keep set");
    detail::check_finite(logits);
    detail::check_index_set(keep, logits.size(), "masked_softmax");
    std::vector<double> sub(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) sub[k] = logits[keep[k]];
    const double lse = detail::log_sum_exp(sub, t.value);
    std::vector<double> p(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) p[k] = std::exp(sub[k] / t.value - lse);
    return p;
}

std::array<double, 2> binary_split(std::span<const double> p,
                                   std::span<const std::size_t> group_a) {
    if (group_a.empty()) throw invalid_split("binary_split: empty group");
    if (group_a.size() >= p.size()) throw invalid_split("binary_split: group covers all indices");
    detail::check_index_set(group_a, p.size(), "binary_split");
    double in = 0.0, total = 0.0;
    for (double v : p) total += v;
    for (std::size_t i : group_a) in += p[i];
    return {in, total - in};
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw invalid_input("kl_divergence: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw invalid_input("kl_divergence: negative entry");
        if (p[i] == 0.0) continue;  // 0 * ln(0/q) = 0
        if (q[i] <= 0.0) throw infinite_divergence("kl_divergence: p > 0 where q = 0");
        s += p[i] * std::log(p[i] / q[i]);
    }
    return s;
}

}  // namespace dnr
