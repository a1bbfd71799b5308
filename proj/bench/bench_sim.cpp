// OpenMP replication loop vs the serial reference.
#include "fringe/model.hpp"
#include "fringe/verify.hpp"

#include <benchmark/benchmark.h>

using namespace fringe;

namespace {

void args(benchmark::internal::Benchmark* b) {
    for (long n : {1000L, 10000L, 100000L}) b->Args({n, 16});
    b->Unit(benchmark::kMillisecond)->UseRealTime();
}

void BM_serial(benchmark::State& st, const char* model) {
    auto spec = parse_model(model);
    for (auto _ : st) {
        auto r = simulate_reps_serial(spec, st.range(0), int(st.range(1)), 7, false, false);
        benchmark::DoNotOptimize(r.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(1));
}

void BM_parallel(benchmark::State& st, const char* model) {
    auto spec = parse_model(model);
    for (auto _ : st) {
        auto r = simulate_reps(spec, st.range(0), int(st.range(1)), 7, false, false);
        benchmark::DoNotOptimize(r.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(1));
}

}  // namespace

BENCHMARK_CAPTURE(BM_serial, bst, "bst")->Apply(args);
BENCHMARK_CAPTURE(BM_parallel, bst, "bst")->Apply(args);
BENCHMARK_CAPTURE(BM_serial, rrt, "rrt")->Apply(args);
BENCHMARK_CAPTURE(BM_parallel, rrt, "rrt")->Apply(args);
BENCHMARK_CAPTURE(BM_serial, mst3, "mst:3")->Apply(args);
BENCHMARK_CAPTURE(BM_parallel, mst3, "mst:3")->Apply(args);

BENCHMARK_MAIN();
