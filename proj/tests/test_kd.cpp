#include <cmath>
#include <vector>

#include "dnr/errors.hpp"
#include "dnr/kd.hpp"
#include "dnr/rng.hpp"
#include "doctest.h"

using namespace dnr::kd;
using dnr::Matrix;
using dnr::Rng;
using dnr::Temperature;

namespace {

SampleBatch make_batch(const std::vector<std::vector<double>>& teacher,
                       const std::vector<std::vector<double>>& student,
                       const std::vector<int>& labels, std::size_t background_index) {
    SampleBatch b;
    const std::size_t n = teacher.size();
    const std::size_t nc = teacher.front().size();
    b.teacher_logits = Matrix(n, nc, 0.0);
    b.student_logits = Matrix(n, nc, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < nc; ++c) {
            b.teacher_logits(i, c) = teacher[i][c];
            b.student_logits(i, c) = student[i][c];
        }
    }
    b.labels = labels;
    b.background_index = background_index;
    return b;
}

// The fixed two-row batch whose terms were evaluated independently at
// 30-digit precision: one foreground row (label 1) and one background row,
// four classes with the last one acting as background, temperature 2.
SampleBatch reference_batch() {
    return make_batch({{2.0, 1.0, 0.5, -0.5}, {0.5, -1.0, 1.5, 2.5}},
                      {{1.0, 2.0, 0.0, 0.5}, {1.5, 0.0, 1.0, 0.5}}, {1, kBackground}, 3);
}

double recombined(const SampleTerms& s) {
    return s.foreground ? s.tdd + s.p_not_target * s.fbd_pos +
                              s.p_not_target * s.p_not_bg_pos * s.fcd_pos
                        : s.fbd_neg + s.p_not_bg_neg * s.fcd_neg;
}

}  // namespace

TEST_CASE("hyperparameter presets") {
    const DnRHyperparams coco = DnRHyperparams::coco();
    CHECK(coco.alpha == 4.0);
    CHECK(coco.beta == 0.5);
    CHECK(coco.temperature.value == 5.0);
    CHECK(coco.loss_weight_lambda == 5.0);
    const DnRHyperparams voc = DnRHyperparams::voc();
    CHECK(voc.alpha == 10.0);
    CHECK(voc.beta == 2.0);
    CHECK(voc.temperature.value == 10.0);
    CHECK(voc.loss_weight_lambda == 1.0);
}

TEST_CASE("batch validation rejects malformed input") {
    SampleBatch b = reference_batch();
    CHECK_NOTHROW(b.validate());

    SampleBatch shape = b;
    shape.student_logits = Matrix(1, 4, 0.0);
    CHECK_THROWS_AS(shape.validate(), dnr::invalid_input);

    SampleBatch bad_label = b;
    bad_label.labels[0] = 3;  // equals the background index
    CHECK_THROWS_AS(bad_label.validate(), dnr::invalid_input);
    bad_label.labels[0] = 7;  // out of range
    CHECK_THROWS_AS(bad_label.validate(), dnr::invalid_input);

    SampleBatch bad_bg = b;
    bad_bg.background_index = 4;
    CHECK_THROWS_AS(bad_bg.validate(), dnr::invalid_input);

    SampleBatch non_finite = b;
    non_finite.teacher_logits(0, 0) = std::nan("");
    CHECK_THROWS_AS(non_finite.validate(), dnr::invalid_input);
}

TEST_CASE("vanilla KD: fixed reference value and zero at equality") {
    SampleBatch b = make_batch({{1.0, 0.0, 0.0}}, {{0.0, 1.0, 0.0}}, {0}, 2);
    CHECK(vanilla_kd(b, Temperature{1.0}) ==
          doctest::Approx(0.36417532714874366479).epsilon(1e-14));

    SampleBatch same = make_batch({{0.4, -1.0, 2.0}}, {{0.4, -1.0, 2.0}}, {kBackground}, 2);
    CHECK(vanilla_kd(same, Temperature{5.0}) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("decompose: all terms match the high-precision reference") {
    const SampleBatch b = reference_batch();
    const LossDecomposition dec = decompose(b, Temperature{2.0});
    REQUIRE(dec.samples.size() == 2);

    const SampleTerms& fg = dec.samples[0];
    CHECK(fg.foreground);
    CHECK(fg.vanilla_kd == doctest::Approx(0.10635829456584320021).epsilon(1e-13));
    CHECK(fg.tdd == doctest::Approx(0.050861833340371178545).epsilon(1e-13));
    CHECK(fg.fbd_pos == doctest::Approx(0.068773599503421500248).epsilon(1e-13));
    CHECK(fg.fcd_pos == doctest::Approx(0.0070006528590549804931).epsilon(1e-13));
    CHECK(fg.p_not_target == doctest::Approx(0.74358241967986770921).epsilon(1e-13));
    CHECK(fg.p_not_bg_pos == doctest::Approx(0.83710872490750937655).epsilon(1e-13));

    const SampleTerms& bg = dec.samples[1];
    CHECK_FALSE(bg.foreground);
    CHECK(bg.vanilla_kd == doctest::Approx(0.19541706431266444902).epsilon(1e-13));
    CHECK(bg.fbd_neg == doctest::Approx(0.15829328222306916328).epsilon(1e-13));
    CHECK(bg.fcd_neg == doctest::Approx(0.069456387888095089876).epsilon(1e-13));
    CHECK(bg.p_not_bg_neg == doctest::Approx(0.53449053742050912994).epsilon(1e-13));

    DnRHyperparams h;
    h.alpha = 4.0;
    h.beta = 0.5;
    h.temperature = Temperature{2.0};
    CHECK(dnr_loss(dec, h) == doctest::Approx(0.32518340301314681148).epsilon(1e-13));

    DnRHyperparams unit;
    unit.temperature = Temperature{2.0};
    CHECK(dnr_with_tdd(dec, unit, true) ==
          doctest::Approx(0.30177535887850764923).epsilon(1e-13));
    CHECK(dnr_with_tdd(dec, unit, true) ==
          doctest::Approx(dec.batch.vanilla_fg + dec.batch.vanilla_bg).epsilon(1e-13));
}

TEST_CASE("decompose: identical teacher and student give all-zero terms") {
    SampleBatch b = make_batch({{1.0, -0.5, 0.2, 0.9}, {2.0, 0.0, 1.0, -1.0}},
                               {{1.0, -0.5, 0.2, 0.9}, {2.0, 0.0, 1.0, -1.0}},
                               {2, kBackground}, 3);
    const LossDecomposition dec = decompose(b, Temperature{5.0});
    for (const SampleTerms& s : dec.samples) {
        CHECK(s.vanilla_kd == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(s.tdd == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(s.fbd_pos == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(s.fcd_pos == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(s.fbd_neg == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(s.fcd_neg == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("decompose: per-sample recombination matches vanilla KD on random batches") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        RandomBatchSpec spec;
        Rng batch_rng = rng.split(trial);
        const SampleBatch b = random_batch(batch_rng, spec);
        const double temps[3] = {1.0, 5.0, 10.0};
        const LossDecomposition dec = decompose(b, Temperature{temps[trial % 3]});
        for (const SampleTerms& s : dec.samples) {
            CHECK(std::abs(s.vanilla_kd - recombined(s)) < 1e-9);
        }
    }
}

TEST_CASE("decompose: smallest class counts collapse to exact zeros") {
    // Two classes: one foreground, one background. For a foreground row the
    // target-excluded distribution has a single class, so both restricted
    // terms vanish; for a background row the foreground-only distribution has
    // a single class, so its restricted term vanishes.
    SampleBatch b = make_batch({{1.0, -2.0}, {0.3, 0.4}}, {{-1.0, 0.5}, {2.0, 0.1}},
                               {0, kBackground}, 1);
    const LossDecomposition dec = decompose(b, Temperature{1.0});
    const SampleTerms& fg = dec.samples[0];
    CHECK(fg.fbd_pos == 0.0);
    CHECK(fg.fcd_pos == 0.0);
    CHECK(fg.tdd == doctest::Approx(fg.vanilla_kd).epsilon(1e-12));  // identity survives
    const SampleTerms& bg = dec.samples[1];
    CHECK(bg.fcd_neg == 0.0);
    CHECK(bg.fbd_neg == doctest::Approx(bg.vanilla_kd).epsilon(1e-12));
}

TEST_CASE("aggregates: separate group means and empty-group zeros") {
    const SampleBatch fg_only =
        make_batch({{1.0, 0.0, -1.0}, {0.5, 1.5, 0.0}}, {{0.0, 1.0, 0.5}, {1.0, 0.0, 0.5}},
                   {0, 1}, 2);
    const LossDecomposition dec = decompose(fg_only, Temperature{1.0});
    CHECK(dec.batch.n_fg == 2);
    CHECK(dec.batch.n_bg == 0);
    CHECK(dec.batch.fbd_neg == 0.0);
    CHECK(dec.batch.fcd_neg_weighted == 0.0);
    CHECK(dec.batch.vanilla_bg == 0.0);
    const double expected_tdd = 0.5 * (dec.samples[0].tdd + dec.samples[1].tdd);
    CHECK(dec.batch.tdd == doctest::Approx(expected_tdd).epsilon(1e-14));

    DnRHyperparams h;  // alpha = beta = 1, T = 1
    const double loss = dnr_loss(dec, h);
    const double expected = dec.batch.fbd_pos_weighted + dec.batch.fcd_pos_weighted;
    CHECK(loss == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("term_loss: flag selections are consistent with each other") {
    Rng rng(202);
    for (int trial = 0; trial < 50; ++trial) {
        Rng batch_rng = rng.split(trial);
        RandomBatchSpec spec;
        const SampleBatch b = random_batch(batch_rng, spec);
        DnRHyperparams h;
        h.temperature = Temperature{5.0};

        // The four decomposed terms with unit weights reproduce the
        // per-group-averaged full KL selection exactly.
        TermFlags all_terms{.tdd = true, .fbd_pos = true, .fbd_neg = true, .fcd = true};
        const double sum_terms = term_loss(b, h, all_terms);
        const double vanilla_grouped = term_loss(b, h, TermFlags::vanilla());
        CHECK(sum_terms == doctest::Approx(vanilla_grouped).epsilon(1e-11));

        // The default selection is dnr_loss of the decomposition.
        const double remerged = term_loss(b, h, TermFlags::dnr());
        CHECK(remerged ==
              doctest::Approx(dnr_loss(decompose(b, h.temperature), h)).epsilon(1e-12));

        // Single flags add up to any union of flags.
        const double tdd_only = term_loss(b, h, TermFlags{.tdd = true});
        const double fbd_pos_only = term_loss(b, h, TermFlags{.fbd_pos = true});
        const double fbd_neg_only = term_loss(b, h, TermFlags{.fbd_neg = true});
        const double fcd_only = term_loss(b, h, TermFlags{.fcd = true});
        CHECK(tdd_only + fbd_pos_only + fbd_neg_only + fcd_only ==
              doctest::Approx(sum_terms).epsilon(1e-11));
    }
}

TEST_CASE("term_loss: alpha and beta scale exactly their own terms") {
    const SampleBatch b = reference_batch();
    DnRHyperparams h;
    h.temperature = Temperature{2.0};
    const double fbd_pos_unit = term_loss(b, h, TermFlags{.fbd_pos = true});
    const double fbd_neg_unit = term_loss(b, h, TermFlags{.fbd_neg = true});
    h.alpha = 4.0;
    h.beta = 0.5;
    CHECK(term_loss(b, h, TermFlags{.fbd_pos = true}) ==
          doctest::Approx(4.0 * fbd_pos_unit).epsilon(1e-13));
    CHECK(term_loss(b, h, TermFlags{.fbd_neg = true}) ==
          doctest::Approx(0.5 * fbd_neg_unit).epsilon(1e-13));
}

TEST_CASE("vanilla bridge: unit weights plus the target term equal vanilla KD per sample") {
    Rng rng(303);
    for (int trial = 0; trial < 300; ++trial) {
        Rng batch_rng = rng.split(trial);
        RandomBatchSpec spec;
        spec.max_rows = 1;  // single-sample batches make the bridge per-sample
        const SampleBatch b = random_batch(batch_rng, spec);
        DnRHyperparams h;
        h.temperature = Temperature{trial % 2 == 0 ? 5.0 : 1.0};
        const TermFlags bridge{.tdd = true, .fbd_pos = true, .fbd_neg = true, .fcd = true};
        CHECK(std::abs(term_loss(b, h, bridge) - vanilla_kd(b, h.temperature)) < 1e-9);
    }
}

TEST_CASE("random_batch respects its envelope") {
    Rng rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        RandomBatchSpec spec;
        const SampleBatch b = random_batch(rng, spec);
        CHECK(b.size() >= 1);
        CHECK(b.size() <= spec.max_rows);
        CHECK(b.num_classes() >= spec.min_classes);
        CHECK(b.num_classes() <= spec.max_classes);
        CHECK(b.background_index == b.num_classes() - 1);
        CHECK_NOTHROW(b.validate());
    }
}
