#include <cmath>

#include "dnr/errors.hpp"
#include "dnr/kd.hpp"
#include "dnr/rng.hpp"
#include "doctest.h"

using namespace dnr::kd;
using dnr::Matrix;
using dnr::Rng;
using dnr::Temperature;

namespace {

double max_rel_err(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const double scale = std::max({1.0, std::abs(a.data[k]), std::abs(b.data[k])});
        worst = std::max(worst, std::abs(a.data[k] - b.data[k]) / scale);
    }
    return worst;
}

double check_against_fd(const SampleBatch& batch, const DnRHyperparams& h,
                        const TermFlags& flags) {
    const LossGradient analytic = term_gradient(batch, h, flags);
    const LossGradient numeric = finite_difference_gradient(
        [&flags](const SampleBatch& b, const DnRHyperparams& hh) {
            return term_loss(b, hh, flags);
        },
        batch, h, 1e-5);
    return max_rel_err(analytic.d_student_logits, numeric.d_student_logits);
}

}  // namespace

TEST_CASE("remerged-loss gradient matches finite differences on random batches") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        RandomBatchSpec spec;
        if (trial % 5 == 3) spec.min_classes = spec.max_classes = 3;
        if (trial % 5 == 4) spec.min_classes = spec.max_classes = 2;  // degenerate groups
        const SampleBatch b = random_batch(rng, spec);
        DnRHyperparams h;
        h.alpha = 4.0;
        h.beta = 0.5;
        const double temps[3] = {1.0, 5.0, 10.0};
        h.temperature = Temperature{temps[trial % 3]};

        const LossGradient analytic = dnr_gradient(b, h);
        const LossGradient numeric = finite_difference_gradient(
            [](const SampleBatch& bb, const DnRHyperparams& hh) {
                return dnr_loss(decompose(bb, hh.temperature), hh);
            },
            b, h, 1e-5);
        CHECK(max_rel_err(analytic.d_student_logits, numeric.d_student_logits) < 1e-5);
    }
}

TEST_CASE("every single-term gradient matches finite differences") {
    Rng rng(19);
    const TermFlags selections[] = {
        TermFlags{.kd_vanilla = true}, TermFlags{.tdd = true},      TermFlags{.fbd_pos = true},
        TermFlags{.fbd_neg = true},    TermFlags{.fcd = true},
        TermFlags{.tdd = true, .fbd_pos = true, .fbd_neg = true, .fcd = true},
    };
    for (int trial = 0; trial < 12; ++trial) {
        RandomBatchSpec spec;
        const SampleBatch b = random_batch(rng, spec);
        DnRHyperparams h;
        h.alpha = 2.0;
        h.beta = 0.25;
        h.temperature = Temperature{trial % 2 == 0 ? 5.0 : 1.0};
        for (const TermFlags& flags : selections) {
            CHECK(check_against_fd(b, h, flags) < 1e-5);
        }
    }
}

TEST_CASE("degenerate restricted groups contribute exactly zero gradient") {
    // Two classes: the remerged loss is identically zero for every sample
    // (restricted groups are too small), so the gradient must vanish.
    SampleBatch b;
    b.teacher_logits = Matrix(2, 2, 0.0);
    b.student_logits = Matrix(2, 2, 0.0);
    b.teacher_logits(0, 0) = 1.5;
    b.teacher_logits(1, 1) = -0.5;
    b.student_logits(0, 1) = 2.0;
    b.student_logits(1, 0) = 0.7;
    b.labels = {0, kBackground};
    b.background_index = 1;

    DnRHyperparams h;
    h.alpha = 4.0;
    h.beta = 0.5;
    const LossGradient g = dnr_gradient(b, h);
    bool fg_row_zero = true;
    for (std::size_t c = 0; c < 2; ++c) {
        if (g.d_student_logits(0, c) != 0.0) fg_row_zero = false;
    }
    CHECK(fg_row_zero);  // fbd_pos and fcd_pos are both degenerate for the fg row
    // The background row still carries its binary term.
    CHECK(dnr_loss(decompose(b, h.temperature), h) > 0.0);
}

TEST_CASE("teacher logits are constants: gradient is zero when student matches teacher") {
    // At student == teacher every KL term sits at its minimum, so the
    // student-side gradient must vanish there.
    Rng rng(31);
    RandomBatchSpec spec;
    SampleBatch b = random_batch(rng, spec);
    b.student_logits = b.teacher_logits;
    DnRHyperparams h;
    h.temperature = Temperature{5.0};
    const LossGradient g = dnr_gradient(b, h);
    for (const double v : g.d_student_logits.data) {
        CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("finite differences validate the step") {
    SampleBatch b;
    b.teacher_logits = Matrix(1, 3, 0.0);
    b.student_logits = Matrix(1, 3, 0.0);
    b.labels = {0};
    b.background_index = 2;
    DnRHyperparams h;
    const auto loss_fn = [](const SampleBatch& bb, const DnRHyperparams& hh) {
        return vanilla_kd(bb, hh.temperature);
    };
    CHECK_THROWS_AS(finite_difference_gradient(loss_fn, b, h, 0.0), dnr::invalid_input);
    CHECK_THROWS_AS(finite_difference_gradient(loss_fn, b, h, -1e-5), dnr::invalid_input);
}
