// Serial reference kernels versus the tiled OpenMP kernels, plus whole-batch
// ratio scoring versus one forward pass per sample.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "cdrs/cdre/ratio_model.hpp"
#include "cdrs/nn/kernels.hpp"

namespace {

using cdrs::Matrix;
using cdrs::Vector;
namespace kernels = cdrs::nn::kernels;

constexpr Eigen::Index kWidth = 256;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::srand(seed);
  return Matrix::Random(rows, cols);
}

void BM_AffineSerial(benchmark::State& state) {
  const Matrix w = random_matrix(kWidth, kWidth, 1);
  const Vector b = Vector::Random(kWidth);
  const Matrix x = random_matrix(kWidth, state.range(0), 2);
  Matrix y;
  for (auto _ : state) {
    kernels::affine_serial(w, b, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_AffineParallel(benchmark::State& state) {
  const Matrix w = random_matrix(kWidth, kWidth, 1);
  const Vector b = Vector::Random(kWidth);
  const Matrix x = random_matrix(kWidth, state.range(0), 2);
  Matrix y;
  for (auto _ : state) {
    kernels::affine_parallel(w, b, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ParamGradSerial(benchmark::State& state) {
  const Matrix dz = random_matrix(kWidth, state.range(0), 3);
  const Matrix x = random_matrix(kWidth, state.range(0), 4);
  Matrix dw;
  Vector db;
  for (auto _ : state) {
    kernels::affine_param_grad_serial(dz, x, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ParamGradParallel(benchmark::State& state) {
  const Matrix dz = random_matrix(kWidth, state.range(0), 3);
  const Matrix x = random_matrix(kWidth, state.range(0), 4);
  Matrix dw;
  Vector db;
  for (auto _ : state) {
    kernels::affine_param_grad_parallel(dz, x, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GroupNormSerial(benchmark::State& state) {
  const Matrix z = random_matrix(kWidth, state.range(0), 5);
  Matrix out;
  Matrix inv_std;
  for (auto _ : state) {
    kernels::group_norm_serial(z, 8, 1e-5, out, inv_std);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GroupNormParallel(benchmark::State& state) {
  const Matrix z = random_matrix(kWidth, state.range(0), 5);
  Matrix out;
  Matrix inv_std;
  for (auto _ : state) {
    kernels::group_norm_parallel(z, 8, 1e-5, out, inv_std);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

cdrs::cdre::RatioModel bench_model() {
  cdrs::Rng rng(7);
  cdrs::cdre::RatioModelSpec spec;
  spec.feature_dim = 2;
  spec.embedding = cdrs::cdre::ConditionEmbedding::one_hot(10);
  spec.hidden = {64, 64, 32, 32};
  return cdrs::cdre::RatioModel::create(spec, rng);
}

void BM_ScoreEach(benchmark::State& state) {
  const auto model = bench_model();
  const Matrix h = random_matrix(2, state.range(0), 6);
  const std::vector<double> labels(static_cast<std::size_t>(state.range(0)), 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(model.score_each(h, labels));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreBatch(benchmark::State& state) {
  const auto model = bench_model();
  const Matrix h = random_matrix(2, state.range(0), 6);
  const std::vector<double> labels(static_cast<std::size_t>(state.range(0)), 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(model.score_batch(h, labels));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_AffineSerial)->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(BM_AffineParallel)->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(BM_ParamGradSerial)->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(BM_ParamGradParallel)->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(BM_GroupNormSerial)->Arg(512)->Arg(4096);
BENCHMARK(BM_GroupNormParallel)->Arg(512)->Arg(4096);
BENCHMARK(BM_ScoreEach)->Arg(512);
BENCHMARK(BM_ScoreBatch)->Arg(512);

BENCHMARK_MAIN();
