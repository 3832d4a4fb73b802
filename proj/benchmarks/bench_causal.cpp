// Microbenchmarks for path enumeration, d-separation, and exact inference on
// the example graphs and on randomly parameterized binary models.

#include <benchmark/benchmark.h>

#include <string>

#include "dnr/causal.hpp"
#include "dnr/fixtures.hpp"
#include "dnr/scm.hpp"

namespace {

dnr::causal::CausalDag chain_dag(int n) {
    dnr::causal::CausalDag dag;
    for (int i = 0; i < n; ++i) dag.add_node("N" + std::to_string(i));
    for (int i = 0; i + 1 < n; ++i) dag.add_edge(i, i + 1);
    return dag;
}

void BM_enumerate_paths(benchmark::State& state) {
    const dnr::causal::CausalDag dag = dnr::causal::example_graph("fig2");
    const int x = dag.node("X"), y = dag.node("Y");
    for (auto _ : state) {
        benchmark::DoNotOptimize(dnr::causal::enumerate_paths(dag, x, y));
    }
}
BENCHMARK(BM_enumerate_paths);

void BM_d_separation(benchmark::State& state) {
    const dnr::causal::CausalDag dag = dnr::causal::example_graph("fig2");
    const int x = dag.node("X"), p = dag.node("P");
    const dnr::causal::NodeSet z = {dag.node("K")};
    for (auto _ : state) {
        benchmark::DoNotOptimize(dnr::causal::is_d_separated(dag, x, p, z));
    }
}
BENCHMARK(BM_d_separation);

void BM_joint_distribution(benchmark::State& state) {
    const dnr::causal::DiscreteScm scm =
        dnr::causal::random_binary_scm(chain_dag(static_cast<int>(state.range(0))), 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dnr::causal::joint_distribution(scm));
    }
}
BENCHMARK(BM_joint_distribution)->Arg(8)->Arg(12)->Arg(16);

void BM_backdoor_adjust(benchmark::State& state) {
    const dnr::causal::CausalDag dag = dnr::causal::example_graph("fig2");
    const dnr::causal::DiscreteScm scm = dnr::causal::random_binary_scm(dag, 13);
    const int x = dag.node("X"), y = dag.node("Y");
    const std::vector<int> z = {dag.node("F")};
    const dnr::causal::Assignment w = {{dag.node("K"), 1}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(dnr::causal::backdoor_adjust(scm, x, 1, y, z, w));
    }
}
BENCHMARK(BM_backdoor_adjust);

}  // namespace
