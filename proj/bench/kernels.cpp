// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to the
// thread count of interest; the serial variants ignore it.

#include <benchmark/benchmark.h>

#include <random>

#include "medeeg/csp.hpp"
#include "medeeg/dsp.hpp"
#include "medeeg/svdnn.hpp"

using namespace medeeg;

namespace {

Matrix noise(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

EpochSet epochs(int count, bool both_classes = true) {
  EpochSet set(24, 256);
  for (int i = 0; i < count; ++i) {
    const auto c = both_classes && i % 2 ? Condition::Meditation : Condition::Rest;
    set.push_back(make_epoch(noise(24, 256, i), c, "B", i, make_uid(0, c, i)));
  }
  return set;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_filtfilt_rows(benchmark::State& state) {
  const auto band = band_def(Band::Beta);
  const auto filter = dsp::design({dsp::FilterKind::BandPass, band.lo_hz, band.hi_hz}, 256.0);
  const Matrix data = noise(24, 256 * 60, 1);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::filtfilt_rows(filter, data, exec_of(state)));
}

void BM_class_covariance(benchmark::State& state) {
  const auto set = epochs(static_cast<int>(state.range(1)), false);
  for (auto _ : state) benchmark::DoNotOptimize(csp::class_covariance(set.epochs(), exec_of(state)));
}

void BM_log_variance_features(benchmark::State& state) {
  const auto set = epochs(static_cast<int>(state.range(1)), false);
  const auto bank = csp::fit_csp(csp::class_covariance(set.epochs()), {Matrix::Identity(24, 24) / 24.0, 1}, 0.0, 10);
  for (auto _ : state) benchmark::DoNotOptimize(csp::log_variance_features(set.epochs(), bank, exec_of(state)));
}

void BM_all_epoch_features(benchmark::State& state) {
  const auto dm = svdnn::build_design_matrix(epochs(static_cast<int>(state.range(1))));
  const auto basis = svdnn::fit_basis(dm, 32);
  for (auto _ : state) benchmark::DoNotOptimize(svdnn::all_epoch_features(dm, basis, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_filtfilt_rows)->ArgNames({"parallel"})->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_class_covariance)->ArgNames({"parallel", "epochs"})->ArgsProduct({{0, 1}, {256, 2048}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_log_variance_features)->ArgNames({"parallel", "epochs"})->ArgsProduct({{0, 1}, {256, 2048}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_all_epoch_features)->ArgNames({"parallel", "epochs"})->ArgsProduct({{0, 1}, {256, 1024}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
