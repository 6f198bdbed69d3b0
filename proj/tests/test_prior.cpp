#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "stbp/errors.hpp"
#include "stbp/prior.hpp"

using namespace stbp;

namespace {

Eigen::VectorXd uniform_grid(int J) {
  Eigen::VectorXd t(J);
  for (int j = 0; j < J; ++j) t[j] = (j + 1) / static_cast<double>(J);
  return t;
}

PriorSpec small_spec(double q, int J, int L, bool identity_kernel = false, double s = 1.0,
                     double kappa = 1.0) {
  int nx = 4;
  while (nx * nx < L) ++nx;
  SpatialGrid grid = build_grid(nx, nx, {-1.0, 1.0, -1.0, 1.0});
  BasisMatrix basis = eval_basis(grid, L, BasisKind::fourier_cosine);
  TemporalKernel k;
  k.kappa = kappa;
  k.rho = 0.3;
  k.nu = 0.5;
  k.s_exp = 1.0;
  k.t_grid = uniform_grid(J);
  k.identity = identity_kernel;
  return make_prior_spec(q, s, kappa, grid, k.t_grid, basis, matern_cov(k));
}

}  // namespace

TEST_SUITE("prior") {

TEST_CASE("series weights") {
  Eigen::VectorXd flat = gamma_weights(1.0, 1.0, 2, 6);
  for (int l = 0; l < 6; ++l) CHECK(flat[l] == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::VectorXd half = gamma_weights(2.0, 1.0, 2, 6);
  CHECK(half[3] == doctest::Approx(0.5).epsilon(1e-14));  // gamma_4 = 4^{-1/2}

  // s = 3, d = 2, q = 2 gives weights l^{-3/2}, so the squared sum tends to
  // zeta(3); the tail beyond L = 2000 is below 1/(2 L^2).
  Eigen::VectorXd steep = gamma_weights(2.0, 3.0, 2, 2000);
  const double zeta3 = 1.2020569031595943;
  const double partial = steep.array().square().sum();
  CHECK(partial < zeta3);
  CHECK(zeta3 - partial < 1.3e-7);
}

TEST_CASE("weight prefix property") {
  Eigen::VectorXd a = gamma_weights(1.5, 2.0, 2, 30);
  Eigen::VectorXd b = gamma_weights(1.5, 2.0, 2, 45);
  CHECK((b.head(30) - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("prior draw matches the analytic pixel variance") {
  PriorSpec spec = small_spec(2.0, 3, 16, /*identity_kernel=*/true);
  Rng rng = make_rng(21);
  const int n = 100000;
  const int px = 5, tj = 1;
  std::vector<double> samples(n);
  for (int i = 0; i < n; ++i) {
    auto [coeffs, field] = prior_sample(rng, spec);
    samples[i] = field.values(px, tj);
  }
  double want = 0.0;
  for (int l = 0; l < 16; ++l)
    want += spec.gamma[l] * spec.gamma[l] * spec.basis.phi(px, l) * spec.basis.phi(px, l);
  CHECK(std::abs(oracle::variance_of(samples) - want) < 0.03 * want);
  CHECK(std::abs(oracle::mean_of(samples)) < 4.0 * std::sqrt(want / n));
}

TEST_CASE("gaussian specialization has normal higher moments") {
  PriorSpec spec = small_spec(2.0, 3, 8);
  Rng rng = make_rng(22);
  const int n = 100000;
  std::vector<double> samples(n);
  for (int i = 0; i < n; ++i) {
    auto [coeffs, field] = prior_sample(rng, spec);
    samples[i] = field.values(3, 0);
  }
  CHECK(std::abs(oracle::skewness_of(samples)) < 0.05);
  CHECK(std::abs(oracle::excess_kurtosis_of(samples)) < 0.1);
}

TEST_CASE("coefficient columns carry the temporal covariance") {
  PriorSpec spec = small_spec(2.0, 5, 4);
  Rng rng = make_rng(23);
  const int n = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < n; ++i) {
    auto [coeffs, field] = prior_sample(rng, spec);
    acc += coeffs.xi.col(0) * coeffs.xi.col(0).transpose();
  }
  acc /= n;
  CHECK(((acc - spec.kernel.cov).cwiseAbs().maxCoeff() /
         spec.kernel.cov.cwiseAbs().maxCoeff()) < 0.03);
}

TEST_CASE("separable covariance in space and time") {
  PriorSpec spec = small_spec(2.0, 4, 8);
  Rng rng = make_rng(24);
  const int n = 200000;
  const int px = 6;
  double s00 = 0.0, s01 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto [coeffs, field] = prior_sample(rng, spec);
    const double a = field.values(px, 0);
    const double b = field.values(px, 2);
    s00 += a * a;
    s01 += a * b;
  }
  const double got_ratio = s01 / s00;
  const double want_ratio = spec.kernel.cov(0, 2) / spec.kernel.cov(0, 0);
  CHECK(std::abs(got_ratio - want_ratio) < 0.05 * std::abs(want_ratio) + 0.01);
}

TEST_CASE("negative log prior reduces to a quadratic for q=2, identity kernel") {
  PriorSpec spec = small_spec(2.0, 4, 6, /*identity_kernel=*/true);
  Rng rng = make_rng(25);
  CoefficientMatrix a{standard_normal(rng, 4, 6)};
  CoefficientMatrix b{standard_normal(rng, 4, 6)};
  const double got = prior_neg_log(a, spec) - prior_neg_log(b, spec);
  const double want = 0.5 * (a.xi.squaredNorm() - b.xi.squaredNorm());
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("negative log prior by hand at J=L=1") {
  SpatialGrid grid = build_grid(1, 1, {-1.0, 1.0, -1.0, 1.0});
  BasisMatrix basis = eval_basis(grid, 1, BasisKind::fourier_cosine);
  TemporalKernel k;
  k.kappa = 1.0;
  k.t_grid = Eigen::VectorXd::Ones(1);
  k.identity = true;
  PriorSpec spec = make_prior_spec(1.0, 1.0, 1.0, grid, k.t_grid, basis, matern_cov(k));
  CoefficientMatrix xi{Eigen::MatrixXd::Constant(1, 1, 4.0)};
  // r = 16: value = r^(1/2)/2 + (1/4) log r = 2 + log 2.
  CHECK(prior_neg_log(xi, spec) == doctest::Approx(2.6931471805599454).epsilon(1e-10));
}

TEST_CASE("negative log prior is the column density sum plus a constant") {
  for (double q : {1.0, 1.5, 2.0}) {
    PriorSpec spec = small_spec(q, 4, 5);
    QedParams col = spec.column_params();
    Rng rng = make_rng(26);
    double first = 0.0;
    for (int c = 0; c < 100; ++c) {
      CoefficientMatrix xi{standard_normal(rng, 4, 5)};
      double dens = 0.0;
      for (int l = 0; l < 5; ++l) dens -= qed_log_density(xi.xi.col(l), col);
      const double diff = prior_neg_log(xi, spec) - dens;
      if (c == 0)
        first = diff;
      else
        CHECK(std::abs(diff - first) < 1e-8);
    }
  }
}

TEST_CASE("degenerate coefficient column is rejected for q<2") {
  PriorSpec spec = small_spec(1.0, 3, 4);
  Rng rng = make_rng(27);
  CoefficientMatrix xi{standard_normal(rng, 3, 4)};
  xi.xi.col(2).setZero();
  CHECK_THROWS_AS(prior_neg_log(xi, spec), degenerate_point_error);
}

TEST_CASE("transport at zero and bijectivity") {
  PriorSpec gspec = small_spec(2.0, 4, 6);
  SpaceTimeField zero = transform_T(WhitenedMatrix{Eigen::MatrixXd::Zero(4, 6)}, gspec);
  CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);

  for (double q : {1.0, 1.5, 2.0}) {
    PriorSpec spec = small_spec(q, 4, 6);
    Rng rng = make_rng(28);
    CoefficientMatrix xi{standard_normal(rng, 4, 6)};
    SpaceTimeField direct = field_from_coefficients(xi, spec);
    SpaceTimeField via = transform_T(unwhiten_columns(xi, spec), spec);
    CHECK((direct.values - via.values).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("rescaling a whitened column rescales its coefficients by c^(2/q)") {
  for (double q : {1.0, 1.4, 2.0}) {
    PriorSpec spec = small_spec(q, 4, 3);
    Rng rng = make_rng(29);
    WhitenedMatrix z{standard_normal(rng, 4, 3)};
    WhitenedMatrix scaled{z.zeta};
    const double c = 1.7;
    scaled.zeta.col(1) *= c;
    CoefficientMatrix xi = whiten_columns(z, spec);
    CoefficientMatrix xi_scaled = whiten_columns(scaled, spec);
    const double factor = std::pow(c, 2.0 / q);
    CHECK((xi_scaled.xi.col(1) - factor * xi.xi.col(1)).cwiseAbs().maxCoeff() <
          1e-12 * factor * xi.xi.col(1).cwiseAbs().maxCoeff());
    CHECK((xi_scaled.xi.col(0) - xi.xi.col(0)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("pushforward of white noise matches prior draws in law") {
  const double q = 1.5;
  PriorSpec spec = small_spec(q, 4, 8);
  Rng rng = make_rng(30);
  const int n = 4000;
  const int pixels[5] = {0, 3, 6, 9, 14};
  std::vector<std::vector<double>> via_t(5), via_sample(5);
  for (int i = 0; i < n; ++i) {
    SpaceTimeField f = transform_T(WhitenedMatrix{standard_normal(rng, 4, 8)}, spec);
    auto [coeffs, g] = prior_sample(rng, spec);
    for (int p = 0; p < 5; ++p) {
      via_t[p].push_back(f.values(pixels[p], 2));
      via_sample[p].push_back(g.values(pixels[p], 2));
    }
  }
  for (int p = 0; p < 5; ++p) CHECK(oracle::ks2_p_value(via_t[p], via_sample[p]) > 0.01);
}

TEST_CASE("whitened log jacobian sums the column values") {
  PriorSpec spec = small_spec(1.3, 4, 5);
  Rng rng = make_rng(31);
  WhitenedMatrix z{standard_normal(rng, 4, 5)};
  QedParams col = spec.column_params();
  double want = 0.0;
  for (int l = 0; l < 5; ++l) want += whiten_logdet_jacobian(z.zeta.col(l), col);
  CHECK(whiten_logdet_sum(z, spec) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("magnitude update is conjugate") {
  PriorSpec spec = small_spec(1.5, 10, 20);
  Rng rng = make_rng(32);

  SUBCASE("posterior shape counts the coefficients") {
    CoefficientMatrix xi{standard_normal(rng, 10, 20)};
    KappaUpdate up = kappa_gibbs_update(rng, xi, 1.0, 1.0, spec, true);
    CHECK(up.alpha_post == doctest::Approx(101.0).epsilon(1e-14));
  }

  SUBCASE("zero coefficients leave the scale untouched") {
    CoefficientMatrix xi{Eigen::MatrixXd::Zero(10, 20)};
    KappaUpdate up = kappa_gibbs_update(rng, xi, 2.0, 1.5, spec, true);
    CHECK(up.beta_post == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(up.kappa > 0.0);
  }

  SUBCASE("modal update follows the closed form") {
    CoefficientMatrix xi{standard_normal(rng, 10, 20)};
    KappaUpdate up = kappa_gibbs_update(rng, xi, 1.0, 1e-6, spec, false);
    const double want = std::pow(up.beta_post / (up.alpha_post + 1.0), 2.0 / spec.q);
    CHECK(up.kappa == doctest::Approx(want).epsilon(1e-12));
  }

  SUBCASE("draws follow the inverse gamma quantiles") {
    CoefficientMatrix xi{standard_normal(rng, 10, 20)};
    const int n = 4000;
    std::vector<double> draws(n);
    double alpha_post = 0.0, beta_post = 0.0;
    for (int i = 0; i < n; ++i) {
      KappaUpdate up = kappa_gibbs_update(rng, xi, 1.0, 1.0, spec, true);
      draws[i] = std::pow(up.kappa, 0.5 * spec.q);
      alpha_post = up.alpha_post;
      beta_post = up.beta_post;
    }
    std::sort(draws.begin(), draws.end());
    std::vector<double> quantiles(n);
    for (int i = 0; i < n; ++i)
      quantiles[i] = oracle::inv_gamma_quantile((i + 0.5) / n, alpha_post, beta_post);
    CHECK(oracle::pearson_correlation(draws, quantiles) > 0.999);
  }
}

TEST_CASE("with_kappa rescales the transport exactly") {
  PriorSpec spec = small_spec(1.5, 4, 5);
  PriorSpec big = spec.with_kappa(4.0 * spec.kappa);
  Rng rng = make_rng(33);
  WhitenedMatrix z{standard_normal(rng, 4, 5)};
  SpaceTimeField a = transform_T(z, spec);
  SpaceTimeField b = transform_T(z, big);
  CHECK((b.values - 2.0 * a.values).cwiseAbs().maxCoeff() <
        1e-12 * a.values.cwiseAbs().maxCoeff());
}

}  // TEST_SUITE
