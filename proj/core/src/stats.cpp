#include "dnr/stats.hpp"

#include <cmath>
#include <vector>

#include "dnr/errors.hpp"

namespace dnr::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double standard_error(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw invalid_input("incomplete beta: a, b must be positive");
    if (x < 0.0 || x > 1.0) throw invalid_input("incomplete beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    // The continued fraction converges fast for x < (a+1)/(a+b+2); use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
    if (!(dof > 0.0)) throw invalid_input("t cdf: dof must be positive");
    if (t == 0.0) return 0.5;
    const double x = dof / (dof + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

PairedTTest paired_one_sided(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw invalid_input("paired test: unequal sample sizes");
    if (a.size() < 2) throw invalid_input("paired test: need at least two pairs");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];

    PairedTTest r;
    r.n = diff.size();
    r.mean_diff = mean(diff);
    const double sd = sample_stddev(diff);
    if (sd == 0.0) {
        // Degenerate: all differences identical. The direction decides.
        r.t_stat = r.mean_diff > 0.0 ? HUGE_VAL : (r.mean_diff < 0.0 ? -HUGE_VAL : 0.0);
        r.p_value = r.mean_diff > 0.0 ? 0.0 : 1.0;
        if (r.mean_diff == 0.0) r.p_value = 0.5;
        return r;
    }
    r.t_stat = r.mean_diff / (sd / std::sqrt(static_cast<double>(r.n)));
    r.p_value = 1.0 - student_t_cdf(r.t_stat, static_cast<double>(r.n - 1));
    return r;
}

}  // namespace dnr::stats
