#include "stbp/prior.hpp"

#include <cmath>
#include <stdexcept>

#include "stbp/errors.hpp"

namespace stbp {

namespace {

void check_spec(const PriorSpec& spec) {
  if (!(spec.q > 0.0) || !(spec.s > 0.0) || spec.d < 1 || !(spec.kappa > 0.0))
    throw std::invalid_argument("prior: q, s, kappa must be positive, d >= 1");
  if (spec.basis.size() != spec.grid.size())
    throw std::invalid_argument("prior: basis/grid size mismatch");
  if (spec.kernel.dim() != spec.t_grid.size())
    throw std::invalid_argument("prior: kernel/time-grid size mismatch");
  if (spec.gamma.size() != spec.basis.truncation())
    throw std::invalid_argument("prior: gamma/basis truncation mismatch");
}

void check_coeffs(const Eigen::MatrixXd& m, const PriorSpec& spec, const char* who) {
  if (m.rows() != spec.J() || m.cols() != spec.L())
    throw std::invalid_argument(std::string(who) + ": expected a J x L matrix");
}

}  // namespace

QedParams PriorSpec::column_params() const {
  return make_qed_params_from_chol(q, Eigen::VectorXd::Zero(J()), kernel.chol);
}

PriorSpec PriorSpec::with_kappa(double kappa_new) const {
  if (!(kappa_new > 0.0)) throw std::invalid_argument("with_kappa: kappa must be positive");
  PriorSpec out = *this;
  out.kernel = kernel.rescaled(kappa_new / kappa);
  out.kappa = kappa_new;
  return out;
}

Eigen::VectorXd gamma_weights(double q, double s, int d, int L) {
  if (!(q > 0.0) || !(s > 0.0) || d < 1 || L < 1)
    throw std::invalid_argument("gamma_weights: need q, s > 0, d >= 1, L >= 1");
  const double tau = s / d + 0.5 - 1.0 / q;
  Eigen::VectorXd gamma(L);
  for (int l = 0; l < L; ++l) gamma[l] = std::pow(static_cast<double>(l + 1), -tau);
  return gamma;
}

PriorSpec make_prior_spec(double q, double s, double kappa, SpatialGrid grid,
                          Eigen::VectorXd t_grid, BasisMatrix basis, KernelFactor kernel) {
  PriorSpec spec;
  spec.q = q;
  spec.s = s;
  spec.kappa = kappa;
  spec.grid = grid;
  spec.t_grid = std::move(t_grid);
  spec.basis = std::move(basis);
  spec.kernel = std::move(kernel);
  spec.gamma = gamma_weights(q, s, spec.d, static_cast<int>(spec.basis.truncation()));
  check_spec(spec);
  return spec;
}

std::pair<CoefficientMatrix, SpaceTimeField> prior_sample(Rng& rng, const PriorSpec& spec) {
  check_spec(spec);
  const QedParams params = spec.column_params();
  CoefficientMatrix coeffs;
  coeffs.xi.resize(spec.J(), spec.L());
  for (Eigen::Index l = 0; l < spec.L(); ++l) coeffs.xi.col(l) = qed_sample(rng, params);
  return {coeffs, field_from_coefficients(coeffs, spec)};
}

double prior_neg_log(const CoefficientMatrix& coeffs, const PriorSpec& spec) {
  check_spec(spec);
  check_coeffs(coeffs.xi, spec, "prior_neg_log");
  const double J = static_cast<double>(spec.J());
  const double half_q = 0.5 * spec.q;
  // r_l = xi_l^T C^{-1} xi_l through the Cholesky factor, all columns at once.
  const Eigen::MatrixXd w = spec.kernel.chol.triangularView<Eigen::Lower>().solve(coeffs.xi);
  const Eigen::ArrayXd r = w.colwise().squaredNorm().transpose();
  double value = 0.5 * spec.L() * spec.kernel.logdet + 0.5 * r.pow(half_q).sum();
  if (half_q != 1.0) {
    if ((r <= 0.0).any())
      throw degenerate_point_error("prior_neg_log: zero-radius column with q < 2");
    value -= (J / 2.0) * (half_q - 1.0) * r.log().sum();
  }
  return value;
}

CoefficientMatrix whiten_columns(const WhitenedMatrix& z, const PriorSpec& spec) {
  check_spec(spec);
  check_coeffs(z.zeta, spec, "whiten_columns");
  const QedParams params = spec.column_params();
  CoefficientMatrix coeffs;
  coeffs.xi.resize(spec.J(), spec.L());
  for (Eigen::Index l = 0; l < spec.L(); ++l)
    coeffs.xi.col(l) = whiten_forward(z.zeta.col(l), params);
  return coeffs;
}

WhitenedMatrix unwhiten_columns(const CoefficientMatrix& coeffs, const PriorSpec& spec) {
  check_spec(spec);
  check_coeffs(coeffs.xi, spec, "unwhiten_columns");
  const QedParams params = spec.column_params();
  WhitenedMatrix z;
  z.zeta.resize(spec.J(), spec.L());
  for (Eigen::Index l = 0; l < spec.L(); ++l)
    z.zeta.col(l) = whiten_inverse(coeffs.xi.col(l), params);
  return z;
}

double whiten_logdet_sum(const WhitenedMatrix& z, const PriorSpec& spec) {
  check_spec(spec);
  check_coeffs(z.zeta, spec, "whiten_logdet_sum");
  const QedParams params = spec.column_params();
  double sum = 0.0;
  for (Eigen::Index l = 0; l < spec.L(); ++l)
    sum += whiten_logdet_jacobian(z.zeta.col(l), params);
  return sum;
}

SpaceTimeField field_from_coefficients(const CoefficientMatrix& coeffs, const PriorSpec& spec) {
  check_spec(spec);
  check_coeffs(coeffs.xi, spec, "field_from_coefficients");
  SpaceTimeField field;
  field.grid = spec.grid;
  field.t_grid = spec.t_grid;
  field.values = spec.basis.phi * (spec.gamma.asDiagonal() * coeffs.xi.transpose());
  return field;
}

SpaceTimeField transform_T(const WhitenedMatrix& z, const PriorSpec& spec) {
  return field_from_coefficients(whiten_columns(z, spec), spec);
}

KappaUpdate kappa_gibbs_update(Rng& rng, const CoefficientMatrix& coeffs, double alpha,
                               double beta, const PriorSpec& spec, bool sample) {
  check_spec(spec);
  check_coeffs(coeffs.xi, spec, "kappa_gibbs_update");
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("kappa_gibbs_update: alpha, beta must be positive");
  const double half_q = 0.5 * spec.q;
  // Radii against the unit-magnitude kernel C0 = C / kappa.
  const Eigen::MatrixXd w = spec.kernel.chol.triangularView<Eigen::Lower>().solve(coeffs.xi);
  const Eigen::ArrayXd r0 = spec.kappa * w.colwise().squaredNorm().transpose().array();

  KappaUpdate update;
  update.alpha_post = alpha + 0.5 * static_cast<double>(spec.J() * spec.L());
  update.beta_post = beta + 0.5 * r0.pow(half_q).sum();
  double magnitude;  // kappa^(q/2)
  if (sample) {
    std::gamma_distribution<double> dist(update.alpha_post, 1.0);
    magnitude = update.beta_post / dist(rng);
  } else {
    magnitude = update.beta_post / (update.alpha_post + 1.0);  // inverse-gamma mode
  }
  update.kappa = std::pow(magnitude, 1.0 / half_q);
  return update;
}

}  // namespace stbp
