#include <benchmark/benchmark.h>

#include <vector>

#include "ibcsim/alignment.hpp"
#include "ibcsim/channel.hpp"
#include "ibcsim/numerics.hpp"
#include "ibcsim/rng.hpp"
#include "ibcsim/selection.hpp"

namespace {

using namespace ibcsim;

RngStream bench_stream(std::uint64_t point) {
  return RngStream(42, make_stream_id(StreamPurpose::generic, point, 0));
}

void BM_philox_block(benchmark::State& state) {
  RngStream rng = bench_stream(1);
  for (auto _ : state) benchmark::DoNotOptimize(rng.next_u64());
}
BENCHMARK(BM_philox_block);

void BM_complex_gaussian(benchmark::State& state) {
  RngStream rng = bench_stream(2);
  for (auto _ : state) benchmark::DoNotOptimize(rng.complex_gaussian());
}
BENCHMARK(BM_complex_gaussian);

void BM_hermitian_eig(benchmark::State& state) {
  RngStream rng = bench_stream(3);
  HermitianMat m(3);
  for (int k = 0; k < 4; ++k) m.add_scaled_outer(sample_channel_vector(3, rng), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(hermitian_eig(m));
}
BENCHMARK(BM_hermitian_eig);

/// Full alignment-measure solve; the argument is the interferer count.
void BM_iam(benchmark::State& state) {
  RngStream rng = bench_stream(4);
  std::vector<std::vector<CVec>> instances;
  for (int i = 0; i < 64; ++i) {
    std::vector<CVec> dirs;
    for (std::int64_t k = 0; k < state.range(0); ++k)
      dirs.push_back(normalized(sample_channel_vector(3, rng)));
    instances.push_back(std::move(dirs));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iam(instances[i]));
    i = (i + 1) % instances.size();
  }
}
BENCHMARK(BM_iam)->Arg(3)->Arg(4)->Arg(5);

/// One scheme decision over a sampled group; the argument is the group size.
void BM_select_max_sinr(benchmark::State& state) {
  RngStream rng = bench_stream(5);
  const std::vector<UserChannelSet> group =
      sample_user_group(std::size_t(state.range(0)), 4, 3, 100.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(select(SchemeId::max_sinr(), group, rng));
}
BENCHMARK(BM_select_max_sinr)->Arg(16)->Arg(256);

/// Pruned minimum-alignment scan, the inner loop of the scaling experiments.
void BM_min_iam_scan(benchmark::State& state) {
  RngStream rng = bench_stream(6);
  const std::vector<UserChannelSet> group =
      sample_user_group(std::size_t(state.range(0)), 4, 3, 100.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(min_iam_scan(group));
}
BENCHMARK(BM_min_iam_scan)->Arg(16)->Arg(64);

void BM_sample_user_group(benchmark::State& state) {
  RngStream rng = bench_stream(7);
  for (auto _ : state) benchmark::DoNotOptimize(sample_user_group(64, 4, 3, 100.0, rng));
}
BENCHMARK(BM_sample_user_group);

}  // namespace

BENCHMARK_MAIN();
