// Serial reference vs OpenMP kernels on calibration- and routing-sized inputs.
#include "latroute/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace latroute;

struct IrtFixture {
  Mat scores;
  kernels::Mask present;
  kernels::IrtParams params;
};

IrtFixture make_irt(int models, int items, int dim) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  IrtFixture f;
  f.scores.resize(models, items);
  f.present.resize(models, items);
  for (int m = 0; m < models; ++m)
    for (int i = 0; i < items; ++i) {
      f.scores(m, i) = unit(rng);
      f.present(m, i) = unit(rng) < 0.9;
    }
  auto fill = [&](Mat& x, int r) {
    x.resize(r, dim);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  };
  fill(f.params.theta, models);
  fill(f.params.raw_alpha, items);
  fill(f.params.b, items);
  return f;
}

template <bool Parallel>
void BM_IrtLossGrad(benchmark::State& state) {
  const auto f = make_irt(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 20);
  kernels::IrtGradient g;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::irt_loss_grad(f.scores, f.present, f.params, g);
    else
      kernels::serial::irt_loss_grad(f.scores, f.present, f.params, g);
    benchmark::DoNotOptimize(g.data_loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

template <bool Parallel>
void BM_LogDetGains(benchmark::State& state) {
  const int dim = 20;
  const auto n = state.range(0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  Mat alphas(n, dim);
  for (int i = 0; i < alphas.size(); ++i) alphas.data()[i] = std::abs(normal(rng));
  Mat a = Mat::Random(dim, dim);
  const Mat inverse = (a * a.transpose() + Mat::Identity(dim, dim)).inverse();
  std::vector<char> skip(static_cast<std::size_t>(n), 0);
  std::vector<double> gains(static_cast<std::size_t>(n));
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::log_det_gains(inverse, alphas, skip, gains);
    else
      kernels::serial::log_det_gains(inverse, alphas, skip, gains);
    benchmark::DoNotOptimize(gains.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <bool Parallel>
void BM_ProbMatrix(benchmark::State& state) {
  const int dim = 20;
  const auto q = state.range(0), m = state.range(1);
  Mat alphas = Mat::Random(q, dim).cwiseAbs(), bs = Mat::Random(q, dim), thetas = Mat::Random(m, dim);
  Mat out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::prob_matrix(alphas, bs, thetas, out);
    else
      kernels::serial::prob_matrix(alphas, bs, thetas, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * q * m);
}

}  // namespace

BENCHMARK(BM_IrtLossGrad<false>)->Args({50, 500})->Args({200, 5000})->Name("irt_loss_grad/serial");
BENCHMARK(BM_IrtLossGrad<true>)->Args({50, 500})->Args({200, 5000})->Name("irt_loss_grad/omp");
BENCHMARK(BM_LogDetGains<false>)->Arg(1000)->Arg(20000)->Name("log_det_gains/serial");
BENCHMARK(BM_LogDetGains<true>)->Arg(1000)->Arg(20000)->Name("log_det_gains/omp");
BENCHMARK(BM_ProbMatrix<false>)->Args({256, 8})->Args({4096, 64})->Name("prob_matrix/serial");
BENCHMARK(BM_ProbMatrix<true>)->Args({256, 8})->Args({4096, 64})->Name("prob_matrix/omp");

BENCHMARK_MAIN();
