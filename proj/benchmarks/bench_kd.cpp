// Microbenchmarks for the loss decomposition and its analytic gradient on
// random batches of a few representative shapes.

#include <benchmark/benchmark.h>

#include "dnr/kd.hpp"
#include "dnr/rng.hpp"

namespace {

dnr::kd::SampleBatch make_batch(std::size_t rows, std::size_t classes) {
    dnr::Rng rng(42);
    dnr::kd::SampleBatch batch;
    batch.teacher_logits = dnr::Matrix(rows, classes, 0.0);
    batch.student_logits = dnr::Matrix(rows, classes, 0.0);
    for (double& v : batch.teacher_logits.data) v = rng.normal(0.0, 2.0);
    for (double& v : batch.student_logits.data) v = rng.normal(0.0, 2.0);
    batch.background_index = classes - 1;
    batch.labels.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        batch.labels[i] = i % 2 == 0 ? static_cast<int>(i % (classes - 1))
                                     : dnr::kd::kBackground;
    }
    batch.validate();
    return batch;
}

void BM_decompose(benchmark::State& state) {
    const auto batch = make_batch(static_cast<std::size_t>(state.range(0)),
                                  static_cast<std::size_t>(state.range(1)));
    const dnr::Temperature t{5.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(dnr::kd::decompose(batch, t));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_decompose)->Args({8, 10})->Args({32, 21})->Args({128, 81});

void BM_term_gradient(benchmark::State& state) {
    const auto batch = make_batch(static_cast<std::size_t>(state.range(0)),
                                  static_cast<std::size_t>(state.range(1)));
    const dnr::kd::DnRHyperparams h = dnr::kd::DnRHyperparams::coco();
    const dnr::kd::TermFlags flags = dnr::kd::TermFlags::dnr();
    for (auto _ : state) {
        benchmark::DoNotOptimize(dnr::kd::term_gradient(batch, h, flags));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_term_gradient)->Args({8, 10})->Args({32, 21})->Args({128, 81});

void BM_vanilla_kd(benchmark::State& state) {
    const auto batch = make_batch(static_cast<std::size_t>(state.range(0)),
                                  static_cast<std::size_t>(state.range(1)));
    const dnr::Temperature t{5.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(dnr::kd::vanilla_kd(batch, t));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_vanilla_kd)->Args({32, 21});

}  // namespace

BENCHMARK_MAIN();
