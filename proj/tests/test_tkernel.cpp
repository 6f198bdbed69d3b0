#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stbp/errors.hpp"
#include "stbp/tkernel.hpp"

using namespace stbp;

namespace {

Eigen::VectorXd uniform_grid(int J, double t_max = 1.0) {
  Eigen::VectorXd t(J);
  for (int j = 0; j < J; ++j) t[j] = (j + 1) * t_max / J;
  return t;
}

TemporalKernel exp_kernel(int J, double kappa = 1.0, double rho = 0.1) {
  TemporalKernel k;
  k.kappa = kappa;
  k.rho = rho;
  k.nu = 0.5;
  k.s_exp = 1.0;
  k.t_grid = uniform_grid(J);
  return k;
}

}  // namespace

TEST_SUITE("tkernel") {

TEST_CASE("exponential closed form at nu = 1/2") {
  TemporalKernel k = exp_kernel(10);
  CHECK(matern_value(k, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  // w = sqrt(2 nu) (dt/rho)^s = 1 at dt = rho, so the entry is e^{-1}.
  CHECK(matern_value(k, 0.1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(matern_value(k, 0.25) == doctest::Approx(std::exp(-2.5)).epsilon(1e-12));

  k.kappa = 3.5;
  CHECK(matern_value(k, 0.1) == doctest::Approx(3.5 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("half-integer smoothness closed forms") {
  TemporalKernel k = exp_kernel(4, 1.0, 1.0);
  k.nu = 1.5;
  double w = std::sqrt(3.0);
  CHECK(matern_value(k, 1.0) == doctest::Approx((1.0 + w) * std::exp(-w)).epsilon(1e-10));
  k.nu = 2.5;
  w = std::sqrt(5.0);
  CHECK(matern_value(k, 1.0) ==
        doctest::Approx((1.0 + w + w * w / 3.0) * std::exp(-w)).epsilon(1e-10));
}

TEST_CASE("general smoothness agrees with the nu = 1/2 closed form") {
  TemporalKernel k = exp_kernel(4);
  k.nu = 0.5 + 1e-9;  // forces the Bessel branch
  CHECK(matern_value(k, 0.1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
}

TEST_CASE("covariance is symmetric SPD with kappa diagonal") {
  TemporalKernel k = exp_kernel(20, 2.0);
  KernelFactor f = matern_cov(k);
  CHECK(f.dim() == 20);
  for (int i = 0; i < 20; ++i) {
    CHECK(f.cov(i, i) == doctest::Approx(2.0).epsilon(1e-9));
    for (int j = 0; j < i; ++j) CHECK(f.cov(i, j) == f.cov(j, i));
  }
  Eigen::MatrixXd resid =
      f.chol * f.chol.transpose() - f.cov;
  CHECK(resid.cwiseAbs().maxCoeff() < 1e-10 * f.cov.cwiseAbs().maxCoeff());
  const double want_logdet = 2.0 * f.chol.diagonal().array().log().sum();
  CHECK(f.logdet == doctest::Approx(want_logdet).epsilon(1e-12));
}

TEST_CASE("uniform grids give Toeplitz covariance") {
  TemporalKernel k = exp_kernel(15);
  KernelFactor f = matern_cov(k);
  for (int i = 1; i < 15; ++i)
    for (int j = 1; j < 15; ++j)
      CHECK(std::abs(f.cov(i, j) - f.cov(i - 1, j - 1)) < 1e-12);
}

TEST_CASE("large grid factorizes with finite log determinant") {
  TemporalKernel k = exp_kernel(100);
  KernelFactor f = matern_cov(k);
  CHECK(std::isfinite(f.logdet));
  CHECK(f.chol.diagonal().minCoeff() > 0.0);
}

TEST_CASE("solve inverts the covariance") {
  TemporalKernel k = exp_kernel(12);
  KernelFactor f = matern_cov(k);

  Eigen::MatrixXd eye = factor_solve(f, f.cov);
  CHECK((eye - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-8);

  TemporalKernel one = exp_kernel(1, 2.5);
  KernelFactor f1 = matern_cov(one);
  Eigen::MatrixXd b(1, 1);
  b << 5.0;
  CHECK(factor_solve(f1, b)(0, 0) == doctest::Approx(5.0 / f1.cov(0, 0)).epsilon(1e-12));
}

TEST_CASE("solve matches a dense inverse oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd f(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) f(i, j) = nd(rng);
  Eigen::MatrixXd spd = f * f.transpose() + 5.0 * Eigen::MatrixXd::Identity(5, 5);

  TemporalKernel k = exp_kernel(5);
  KernelFactor factor = matern_cov(k);
  factor.cov = spd;
  factor.chol = Eigen::LLT<Eigen::MatrixXd>(spd).matrixL();

  Eigen::MatrixXd b(5, 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) b(i, j) = nd(rng);
  Eigen::MatrixXd want = oracle::gj_inverse(spd) * b;
  CHECK((factor_solve(factor, b) - want).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("identity kernel is kappa times the identity") {
  TemporalKernel k = exp_kernel(8, 0.7);
  k.identity = true;
  KernelFactor f = matern_cov(k);
  CHECK((f.cov - 0.7 * Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rescaling the factor tracks a rebuilt kernel") {
  TemporalKernel k = exp_kernel(9, 1.3);
  KernelFactor f = matern_cov(k);
  KernelFactor scaled = f.rescaled(2.0);
  CHECK((scaled.cov - 2.0 * f.cov).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((scaled.chol - std::sqrt(2.0) * f.chol).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(scaled.logdet == doctest::Approx(f.logdet + 9 * std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(f.rescaled(-1.0), std::invalid_argument);
}

TEST_CASE("eigenvalues are ascending and positive") {
  TemporalKernel k = exp_kernel(10);
  KernelFactor f = matern_cov(k);
  Eigen::VectorXd ev = kernel_eigenvalues(f);
  CHECK(ev.minCoeff() > 0.0);
  for (int i = 1; i < ev.size(); ++i) CHECK(ev[i] >= ev[i - 1]);
  CHECK(ev.array().log().sum() == doctest::Approx(f.logdet).epsilon(1e-8));
}

TEST_CASE("parameter validation") {
  TemporalKernel k = exp_kernel(5);
  k.kappa = -1.0;
  CHECK_THROWS_AS(matern_cov(k), std::invalid_argument);

  TemporalKernel bad = exp_kernel(5);
  bad.t_grid[3] = bad.t_grid[2];
  CHECK_THROWS_AS(matern_cov(bad), std::invalid_argument);

  TemporalKernel empty = exp_kernel(5);
  empty.t_grid.resize(0);
  CHECK_THROWS_AS(matern_cov(empty), std::invalid_argument);
}

}  // TEST_SUITE
