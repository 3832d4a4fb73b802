#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "dnr/matrix.hpp"
#include "dnr/prob.hpp"
#include "dnr/rng.hpp"

namespace dnr::kd {

// Label value marking a background-class row.
inline constexpr int kBackground = -1;

// One minibatch of teacher/student logits with per-row labels.
struct SampleBatch {
    Matrix teacher_logits;           // N x N_C
    Matrix student_logits;           // N x N_C
    std::vector<int> labels;         // per row: foreground class index, or kBackground
    std::size_t background_index = 0;  // class index playing the background role

    std::size_t size() const { return teacher_logits.rows; }
    std::size_t num_classes() const { return teacher_logits.cols; }

    // Throws invalid_input unless shapes match, all logits are finite,
    // N_C >= 2, background_index < N_C, and every label is either kBackground
    // or a foreground class index distinct from background_index.
    void validate() const;
};

// Loss hyperparameters: term weights, softmax temperature, and the overall
// distillation weight used by the trainer.
struct DnRHyperparams {
    double alpha = 1.0;              // weight of the foreground-sample binary term
    double beta = 1.0;               // weight of the background-sample binary term
    Temperature temperature{1.0};    // softmax temperature for every KL term
    double loss_weight_lambda = 1.0;  // multiplier applied by the trainer, not by dnr_loss

    static DnRHyperparams coco() { return {4.0, 0.5, Temperature{5.0}, 5.0}; }
    static DnRHyperparams voc() { return {10.0, 2.0, Temperature{10.0}, 1.0}; }
};

// Disentangled KL terms for one sample. Foreground rows populate tdd /
// fbd_pos / fcd_pos, background rows populate fbd_neg / fcd_neg; unused terms
// stay 0. Groups too small to carry information (a restricted distribution
// with fewer than two classes, or a binary split with an empty side) yield an
// exact 0 rather than an error.
struct SampleTerms {
    bool foreground = false;
    double vanilla_kd = 0.0;    // full-distribution KL for this row (cross-check)
    double tdd = 0.0;           // binary KL: target vs all non-target mass
    double fbd_pos = 0.0;       // binary KL: background vs foreground mass, target excluded
    double fcd_pos = 0.0;       // KL over non-target foreground classes
    double fbd_neg = 0.0;       // binary KL: background vs foreground mass, full softmax
    double fcd_neg = 0.0;       // KL over foreground classes
    double p_not_target = 0.0;  // teacher's non-target mass (weights fbd_pos, fcd_pos)
    double p_not_bg_pos = 0.0;  // teacher's foreground mass within the target-excluded softmax
    double p_not_bg_neg = 0.0;  // teacher's foreground mass within the full softmax
};

// Group sizes and the per-group means that the remerged loss consumes.
// Weighted terms carry their teacher coefficients: e.g. fbd_pos_weighted is
// mean over foreground rows of p_not_target * fbd_pos. Empty groups
// contribute 0 to every mean.
struct BatchAggregates {
    std::size_t n_fg = 0;
    std::size_t n_bg = 0;
    double tdd = 0.0;               // mean over fg rows of tdd
    double fbd_pos_weighted = 0.0;  // mean over fg rows of p_not_target * fbd_pos
    double fcd_pos_weighted = 0.0;  // mean over fg rows of p_not_target * p_not_bg_pos * fcd_pos
    double fbd_neg = 0.0;           // mean over bg rows of fbd_neg
    double fcd_neg_weighted = 0.0;  // mean over bg rows of p_not_bg_neg * fcd_neg
    double vanilla_fg = 0.0;        // mean over fg rows of vanilla_kd
    double vanilla_bg = 0.0;        // mean over bg rows of vanilla_kd
    double vanilla_all = 0.0;       // mean over all rows of vanilla_kd
};

struct LossDecomposition {
    std::vector<SampleTerms> samples;
    BatchAggregates batch;
};

// Gradient of a scalar loss with respect to every student logit.
struct LossGradient {
    Matrix d_student_logits;  // same shape as student_logits
};

// Mean over all rows of KL(softmax(teacher/T) || softmax(student/T)) on the
// full class distribution.
double vanilla_kd(const SampleBatch& batch, Temperature t);

// Per-sample disentanglement. For each row the terms satisfy, exactly:
//   foreground:  vanilla_kd = tdd + p_not_target * fbd_pos
//                             + p_not_target * p_not_bg_pos * fcd_pos
//   background:  vanilla_kd = fbd_neg + p_not_bg_neg * fcd_neg
// which the test suite verifies to 1e-9 on random batches.
LossDecomposition decompose(const SampleBatch& batch, Temperature t);

// The remerged loss: alpha * mean+(p_not_target * fbd_pos)
//                  + mean+(p_not_target * p_not_bg_pos * fcd_pos)
//                  + beta * mean-(fbd_neg) + mean-(p_not_bg_neg * fcd_neg)
// where mean+ / mean- average over foreground / background rows separately
// and an empty group contributes 0. The target/non-target (tdd) term is
// deliberately excluded; loss_weight_lambda is not applied here.
double dnr_loss(const LossDecomposition& dec, const DnRHyperparams& h);

// dnr_loss plus mean+(tdd) when include_tdd is set. With alpha = beta = 1 and
// include_tdd, the result equals the per-group-averaged vanilla KD,
// mean+(vanilla) + mean-(vanilla), by the decomposition identities above.
double dnr_with_tdd(const LossDecomposition& dec, const DnRHyperparams& h, bool include_tdd);

// Term selection for the generalized evaluator and for trainer variants.
// kd_vanilla is mutually exclusive with the other flags in trainer configs
// but term_loss itself accepts any combination.
struct TermFlags {
    bool kd_vanilla = false;  // full-distribution KL (independent of decompose)
    bool tdd = false;
    bool fbd_pos = false;
    bool fbd_neg = false;
    bool fcd = false;  // both restricted-distribution terms (fg and bg rows)

    static TermFlags dnr() { return {.fbd_pos = true, .fbd_neg = true, .fcd = true}; }
    static TermFlags vanilla() { return {.kd_vanilla = true}; }
    bool any() const { return kd_vanilla || tdd || fbd_pos || fbd_neg || fcd; }
};

// Sum of the selected aggregated terms. Every term — including kd_vanilla —
// is averaged per group (foreground and background rows separately) so that
// flag combinations remain mutually consistent: with alpha = beta = 1, the
// {tdd, fbd_pos, fbd_neg, fcd} selection equals the kd_vanilla selection
// exactly. Weighting: fbd_pos gets alpha, fbd_neg gets beta, fcd and tdd are
// unweighted, teacher coefficients are always applied.
double term_loss(const SampleBatch& batch, const DnRHyperparams& h, const TermFlags& flags);

// Exact analytic gradient of term_loss with respect to the student logits;
// teacher logits and the teacher coefficients are treated as constants.
LossGradient term_gradient(const SampleBatch& batch, const DnRHyperparams& h,
                           const TermFlags& flags);

// Gradient of dnr_loss(decompose(batch, h.temperature), h).
LossGradient dnr_gradient(const SampleBatch& batch, const DnRHyperparams& h);

// Central finite differences of an arbitrary scalar loss over the student
// logits; the verification oracle for the analytic gradients. step > 0.
LossGradient finite_difference_gradient(
    const std::function<double(const SampleBatch&, const DnRHyperparams&)>& loss_fn,
    const SampleBatch& batch, const DnRHyperparams& h, double step);

// Seeded batch generator shared by the gradient-check command and the stress
// suites: row count uniform in [1, max_rows], class count uniform in
// [min_classes, max_classes], gaussian logits, background as the last class.
struct RandomBatchSpec {
    std::size_t max_rows = 8;
    std::size_t min_classes = 3;
    std::size_t max_classes = 10;
    double logit_stddev = 2.0;
    double background_probability = 0.5;
};

SampleBatch random_batch(Rng& rng, const RandomBatchSpec& spec);

}  // namespace dnr::kd
