#include <benchmark/benchmark.h>

#include <vector>

#include "stbp/forward.hpp"
#include "stbp/infer.hpp"
#include "stbp/prior.hpp"
#include "stbp/radon.hpp"

using namespace stbp;

namespace {

Eigen::VectorXd uniform_time_grid(int J) {
  Eigen::VectorXd t(J);
  for (int j = 0; j < J; ++j) t[j] = (j + 1) / static_cast<double>(J);
  return t;
}

PriorSpec bench_spec(double q, int nx, int J, int L) {
  SpatialGrid grid = build_grid(nx, nx, {-1.0, 1.0, -1.0, 1.0});
  BasisMatrix basis = eval_basis(grid, L, BasisKind::fourier_cosine);
  TemporalKernel k;
  k.rho = 0.3;
  k.t_grid = uniform_time_grid(J);
  return make_prior_spec(q, 1.0, 1.0, grid, k.t_grid, basis, matern_cov(k));
}

void bm_radon_project(benchmark::State& state) {
  const int nx = static_cast<int>(state.range(0));
  SpatialGrid grid = build_grid(nx, nx, {-1.0, 1.0, -1.0, 1.0});
  RadonGeometry geom =
      make_radon_geometry(grid, Eigen::VectorXd::LinSpaced(11, 0.0, 2.856), 95);
  Rng rng = make_rng(1);
  Eigen::VectorXd field = standard_normal(rng, grid.size());
  for (auto _ : state) benchmark::DoNotOptimize(radon_project(geom, field));
}

void bm_radon_backproject(benchmark::State& state) {
  const int nx = static_cast<int>(state.range(0));
  SpatialGrid grid = build_grid(nx, nx, {-1.0, 1.0, -1.0, 1.0});
  RadonGeometry geom =
      make_radon_geometry(grid, Eigen::VectorXd::LinSpaced(11, 0.0, 2.856), 95);
  Rng rng = make_rng(2);
  Eigen::MatrixXd sino = standard_normal(rng, 95, 11);
  for (auto _ : state) benchmark::DoNotOptimize(radon_backproject(geom, sino));
}

void bm_transport(benchmark::State& state) {
  PriorSpec spec = bench_spec(1.0, 64, 10, static_cast<int>(state.range(0)));
  Rng rng = make_rng(3);
  WhitenedMatrix z{standard_normal(rng, spec.J(), spec.L())};
  for (auto _ : state) benchmark::DoNotOptimize(transform_T(z, spec));
}

void bm_whiten_columns(benchmark::State& state) {
  PriorSpec spec = bench_spec(1.0, 64, 10, static_cast<int>(state.range(0)));
  Rng rng = make_rng(4);
  WhitenedMatrix z{standard_normal(rng, spec.J(), spec.L())};
  for (auto _ : state) benchmark::DoNotOptimize(whiten_columns(z, spec));
}

void bm_objective_gradient(benchmark::State& state) {
  PriorSpec spec = bench_spec(1.0, 16, 5, 50);
  SpatialGrid grid = spec.grid;
  ForwardOp op = ForwardOp::radon(
      grid, std::vector<Eigen::VectorXd>(5, Eigen::VectorXd::LinSpaced(11, 0.0, 2.856)), 23);
  NoiseModel noise = NoiseModel::scalar(0.01);
  Rng rng = make_rng(5);
  auto [coeffs, truth] = prior_sample(rng, spec);
  Observations obs = observe(rng, op, noise, truth);
  WhitenedMatrix z{standard_normal(rng, 5, 50)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(neg_log_post(z, obs, op, noise, spec, true));
    benchmark::DoNotOptimize(grad_neg_log_post(z, obs, op, noise, spec, true));
  }
}

void bm_matern_factorization(benchmark::State& state) {
  TemporalKernel k;
  k.rho = 0.3;
  k.t_grid = uniform_time_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(matern_cov(k));
}

void bm_prior_sample(benchmark::State& state) {
  PriorSpec spec = bench_spec(1.0, 64, 10, 512);
  Rng rng = make_rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(prior_sample(rng, spec));
}

}  // namespace

BENCHMARK(bm_radon_project)->Arg(64)->Arg(128);
BENCHMARK(bm_radon_backproject)->Arg(64)->Arg(128);
BENCHMARK(bm_transport)->Arg(128)->Arg(512);
BENCHMARK(bm_whiten_columns)->Arg(128)->Arg(512);
BENCHMARK(bm_objective_gradient);
BENCHMARK(bm_matern_factorization)->Arg(50)->Arg(200);
BENCHMARK(bm_prior_sample);

BENCHMARK_MAIN();
