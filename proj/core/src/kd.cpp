#include "dnr/kd.hpp"

#include <cmath>

#include "dnr/errors.hpp"

namespace dnr::kd {

namespace {

// All class indices except those in `drop` (drop must be sorted).
std::vector<std::size_t> complement(std::size_t n, std::initializer_list<std::size_t> drop) {
    std::vector<std::size_t> keep;
    keep.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool dropped = false;
        for (std::size_t d : drop) dropped |= (i == d);
        if (!dropped) keep.push_back(i);
    }
    return keep;
}

double binary_kl(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
        if (a[i] > 0.0) s += a[i] * std::log(a[i] / b[i]);
    return s;
}

// Gradient factor of a two-group split KL with respect to each member logit:
// for the split [sum_A q, sum_B q] of a softmax q at temperature T, the
// derivative with respect to logit j is (q_j / T) * (1 - a_g / b_g) where g
// is j's group, a the teacher split, b the student split.
struct SplitGrad {
    double factor_a;  // 1 - a[0]/b[0]
    double factor_b;  // 1 - a[1]/b[1]
};

SplitGrad split_grad(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return {1.0 - a[0] / b[0], 1.0 - a[1] / b[1]};
}

}  // namespace

void SampleBatch::validate() const {
    if (!teacher_logits.same_shape(student_logits))
        throw invalid_input("batch: teacher/student logit shapes differ");
    if (num_classes() < 2) throw invalid_input("batch: need at least two classes");
    if (background_index >= num_classes()) throw invalid_input("batch: background index out of range");
    if (labels.size() != size()) throw invalid_input("batch: one label per row required");
    if (!teacher_logits.all_finite() || !student_logits.all_finite())
        throw invalid_input("batch: non-finite logit");
    for (int lab : labels) {
        if (lab == kBackground) continue;
        if (lab < 0 || static_cast<std::size_t>(lab) >= num_classes())
            throw invalid_input("batch: label out of range");
        if (static_cast<std::size_t>(lab) == background_index)
            throw invalid_input("batch: foreground label equals background index");
    }
}

double vanilla_kd(const SampleBatch& batch, Temperature t) {
    batch.validate();
    if (batch.size() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto p = softmax(batch.teacher_logits.row(i), t);
        const auto q = softmax(batch.student_logits.row(i), t);
        total += kl_divergence(p, q);
    }
    return total / static_cast<double>(batch.size());
}

LossDecomposition decompose(const SampleBatch& batch, Temperature t) {
    batch.validate();
    const std::size_t nc = batch.num_classes();
    const std::size_t bg = batch.background_index;

    LossDecomposition dec;
    dec.samples.resize(batch.size());
    auto& agg = dec.batch;

    for (std::size_t i = 0; i < batch.size(); ++i) {
        SampleTerms& s = dec.samples[i];
        const auto teacher = batch.teacher_logits.row(i);
        const auto student = batch.student_logits.row(i);
        const auto p = softmax(teacher, t);
        const auto q = softmax(student, t);
        s.vanilla_kd = kl_divergence(p, q);
        s.foreground = batch.labels[i] != kBackground;

        if (s.foreground) {
            const std::size_t target = static_cast<std::size_t>(batch.labels[i]);
            s.p_not_target = 1.0 - p[target];
            s.tdd = binary_kl({p[target], 1.0 - p[target]}, {q[target], 1.0 - q[target]});

            const auto keep1 = complement(nc, {target});  // non-target classes
            const auto p1 = masked_softmax(teacher, keep1, t);
            const auto q1 = masked_softmax(student, keep1, t);
            std::size_t bg_at = 0;
            while (keep1[bg_at] != bg) ++bg_at;
            s.p_not_bg_pos = 1.0 - p1[bg_at];
            if (keep1.size() >= 2)
                s.fbd_pos = binary_kl({p1[bg_at], 1.0 - p1[bg_at]}, {q1[bg_at], 1.0 - q1[bg_at]});

            const auto keep2 = complement(nc, {target, bg});  // non-target foreground
            if (keep2.size() >= 2) {
                const auto p2 = masked_softmax(teacher, keep2, t);
                const auto q2 = masked_softmax(student, keep2, t);
                s.fcd_pos = kl_divergence(p2, q2);
            }

            ++agg.n_fg;
            agg.tdd += s.tdd;
            agg.fbd_pos_weighted += s.p_not_target * s.fbd_pos;
            agg.fcd_pos_weighted += s.p_not_target * s.p_not_bg_pos * s.fcd_pos;
            agg.vanilla_fg += s.vanilla_kd;
        } else {
            s.p_not_bg_neg = 1.0 - p[bg];
            s.fbd_neg = binary_kl({p[bg], 1.0 - p[bg]}, {q[bg], 1.0 - q[bg]});

            const auto keep3 = complement(nc, {bg});  // foreground classes
            if (keep3.size() >= 2) {
                const auto p3 = masked_softmax(teacher, keep3, t);
                const auto q3 = masked_softmax(student, keep3, t);
                s.fcd_neg = kl_divergence(p3, q3);
            }

            ++agg.n_bg;
            agg.fbd_neg += s.fbd_neg;
            agg.fcd_neg_weighted += s.p_not_bg_neg * s.fcd_neg;
            agg.vanilla_bg += s.vanilla_kd;
        }
    }

    agg.vanilla_all = agg.vanilla_fg + agg.vanilla_bg;
    if (batch.size() > 0) agg.vanilla_all /= static_cast<double>(batch.size());
    if (agg.n_fg > 0) {
        const double n = static_cast<double>(agg.n_fg);
        agg.tdd /= n;
        agg.fbd_pos_weighted /= n;
        agg.fcd_pos_weighted /= n;
        agg.vanilla_fg /= n;
    }
    if (agg.n_bg > 0) {
        const double n = static_cast<double>(agg.n_bg);
        agg.fbd_neg /= n;
        agg.fcd_neg_weighted /= n;
        agg.vanilla_bg /= n;
    }
    return dec;
}

double dnr_loss(const LossDecomposition& dec, const DnRHyperparams& h) {
    const auto& a = dec.batch;
    return h.alpha * a.fbd_pos_weighted + a.fcd_pos_weighted + h.beta * a.fbd_neg +
           a.fcd_neg_weighted;
}

double dnr_with_tdd(const LossDecomposition& dec, const DnRHyperparams& h, bool include_tdd) {
    return dnr_loss(dec, h) + (include_tdd ? dec.batch.tdd : 0.0);
}

double term_loss(const SampleBatch& batch, const DnRHyperparams& h, const TermFlags& flags) {
    double total = 0.0;
    if (flags.tdd || flags.fbd_pos || flags.fbd_neg || flags.fcd) {
        const auto dec = decompose(batch, h.temperature);
        const auto& a = dec.batch;
        if (flags.tdd) total += a.tdd;
        if (flags.fbd_pos) total += h.alpha * a.fbd_pos_weighted;
        if (flags.fbd_neg) total += h.beta * a.fbd_neg;
        if (flags.fcd) total += a.fcd_pos_weighted + a.fcd_neg_weighted;
    }
    if (flags.kd_vanilla) {
        // Independent full-distribution route (does not reuse decompose),
        // aggregated per group like every other term.
        batch.validate();
        double fg = 0.0, bgs = 0.0;
        std::size_t n_fg = 0, n_bg = 0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto p = softmax(batch.teacher_logits.row(i), h.temperature);
            const auto q = softmax(batch.student_logits.row(i), h.temperature);
            const double kl = kl_divergence(p, q);
            if (batch.labels[i] != kBackground) {
                fg += kl;
                ++n_fg;
            } else {
                bgs += kl;
                ++n_bg;
            }
        }
        if (n_fg > 0) total += fg / static_cast<double>(n_fg);
        if (n_bg > 0) total += bgs / static_cast<double>(n_bg);
    }
    return total;
}

LossGradient term_gradient(const SampleBatch& batch, const DnRHyperparams& h,
                           const TermFlags& flags) {
    batch.validate();
    const std::size_t nc = batch.num_classes();
    const std::size_t bg = batch.background_index;
    const Temperature t = h.temperature;
    const double tv = t.value;

    std::size_t n_fg = 0, n_bg = 0;
    for (int lab : batch.labels) (lab != kBackground ? n_fg : n_bg)++;

    LossGradient grad{Matrix(batch.size(), nc, 0.0)};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto teacher = batch.teacher_logits.row(i);
        const auto student = batch.student_logits.row(i);
        const bool fg_row = batch.labels[i] != kBackground;
        const double w = 1.0 / static_cast<double>(fg_row ? n_fg : n_bg);
        auto g = grad.d_student_logits.row(i);

        const auto p = softmax(teacher, t);
        const auto q = softmax(student, t);

        if (flags.kd_vanilla)
            for (std::size_t j = 0; j < nc; ++j) g[j] += w * (q[j] - p[j]) / tv;

        if (fg_row) {
            const std::size_t target = static_cast<std::size_t>(batch.labels[i]);
            const double c1 = 1.0 - p[target];

            if (flags.tdd) {
                const auto sg = split_grad({p[target], 1.0 - p[target]},
                                           {q[target], 1.0 - q[target]});
                for (std::size_t j = 0; j < nc; ++j)
                    g[j] += w * (q[j] / tv) * (j == target ? sg.factor_a : sg.factor_b);
            }

            const auto keep1 = complement(nc, {target});
            if ((flags.fbd_pos && keep1.size() >= 2) || flags.fcd) {
                const auto p1 = masked_softmax(teacher, keep1, t);
                const auto q1 = masked_softmax(student, keep1, t);
                std::size_t bg_at = 0;
                while (keep1[bg_at] != bg) ++bg_at;
                const double c2 = 1.0 - p1[bg_at];

                if (flags.fbd_pos && keep1.size() >= 2) {
                    const auto sg = split_grad({p1[bg_at], 1.0 - p1[bg_at]},
                                               {q1[bg_at], 1.0 - q1[bg_at]});
                    for (std::size_t k = 0; k < keep1.size(); ++k)
                        g[keep1[k]] += w * h.alpha * c1 * (q1[k] / tv) *
                                       (keep1[k] == bg ? sg.factor_a : sg.factor_b);
                }

                const auto keep2 = complement(nc, {target, bg});
                if (flags.fcd && keep2.size() >= 2) {
                    const auto p2 = masked_softmax(teacher, keep2, t);
                    const auto q2 = masked_softmax(student, keep2, t);
                    for (std::size_t k = 0; k < keep2.size(); ++k)
                        g[keep2[k]] += w * c1 * c2 * (q2[k] - p2[k]) / tv;
                }
            }
        } else {
            if (flags.fbd_neg) {
                const auto sg = split_grad({p[bg], 1.0 - p[bg]}, {q[bg], 1.0 - q[bg]});
                for (std::size_t j = 0; j < nc; ++j)
                    g[j] += w * h.beta * (q[j] / tv) * (j == bg ? sg.factor_a : sg.factor_b);
            }

            const auto keep3 = complement(nc, {bg});
            if (flags.fcd && keep3.size() >= 2) {
                const double c3 = 1.0 - p[bg];
                const auto p3 = masked_softmax(teacher, keep3, t);
                const auto q3 = masked_softmax(student, keep3, t);
                for (std::size_t k = 0; k < keep3.size(); ++k)
                    g[keep3[k]] += w * c3 * (q3[k] - p3[k]) / tv;
            }
        }
    }
    return grad;
}

LossGradient dnr_gradient(const SampleBatch& batch, const DnRHyperparams& h) {
    return term_gradient(batch, h, TermFlags::dnr());
}

LossGradient finite_difference_gradient(
    const std::function<double(const SampleBatch&, const DnRHyperparams&)>& loss_fn,
    const SampleBatch& batch, const DnRHyperparams& h, double step) {
    if (!(step > 0.0)) throw invalid_input("finite differences: step must be positive");
    SampleBatch probe = batch;
    LossGradient grad{Matrix(batch.student_logits.rows, batch.student_logits.cols, 0.0)};
    for (std::size_t k = 0; k < probe.student_logits.data.size(); ++k) {
        const double saved = probe.student_logits.data[k];
        probe.student_logits.data[k] = saved + step;
        const double hi = loss_fn(probe, h);
        probe.student_logits.data[k] = saved - step;
        const double lo = loss_fn(probe, h);
        probe.student_logits.data[k] = saved;
        grad.d_student_logits.data[k] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

SampleBatch random_batch(Rng& rng, const RandomBatchSpec& spec) {
    if (spec.max_rows == 0) throw invalid_input("random_batch: max_rows must be positive");
    if (spec.min_classes < 2 || spec.min_classes > spec.max_classes) {
        throw invalid_input("random_batch: need 2 <= min_classes <= max_classes");
    }
    const std::size_t n = 1 + static_cast<std::size_t>(rng.below(spec.max_rows));
    const std::size_t nc =
        spec.min_classes +
        static_cast<std::size_t>(rng.below(spec.max_classes - spec.min_classes + 1));

    SampleBatch batch;
    batch.teacher_logits = Matrix(n, nc, 0.0);
    batch.student_logits = Matrix(n, nc, 0.0);
    batch.labels.resize(n, kBackground);
    batch.background_index = nc - 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < nc; ++c) {
            batch.teacher_logits(i, c) = spec.logit_stddev * rng.normal();
            batch.student_logits(i, c) = spec.logit_stddev * rng.normal();
        }
        if (rng.uniform() >= spec.background_probability) {
            batch.labels[i] = static_cast<int>(rng.below(nc - 1));  // never the background index
        }
    }
    return batch;
}

}  // namespace dnr::kd
