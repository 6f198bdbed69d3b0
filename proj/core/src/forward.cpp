#include "stbp/forward.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stbp/errors.hpp"

namespace stbp {

ForwardOp ForwardOp::selection(Eigen::Index input_dim, int frames, std::vector<int> indices) {
  if (input_dim < 1 || frames < 1) throw std::invalid_argument("ForwardOp: empty operator");
  for (int i : indices)
    if (i < 0 || i >= input_dim) throw std::invalid_argument("ForwardOp: selection index out of range");
  ForwardOp op;
  op.kind_ = Kind::selection;
  op.input_dim_ = input_dim;
  op.frames_ = frames;
  op.indices_ = std::move(indices);
  return op;
}

ForwardOp ForwardOp::radon(const SpatialGrid& grid, std::vector<Eigen::VectorXd> frame_angles,
                           int n_det) {
  if (frame_angles.empty()) throw std::invalid_argument("ForwardOp: no frames");
  ForwardOp op;
  op.kind_ = Kind::radon;
  op.input_dim_ = grid.size();
  op.frames_ = static_cast<int>(frame_angles.size());
  op.n_det_ = n_det;
  op.mats_.reserve(frame_angles.size());
  for (const auto& angles : frame_angles)
    op.mats_.push_back(radon_matrix(make_radon_geometry(grid, angles, n_det)));
  op.frame_angles_ = std::move(frame_angles);
  return op;
}

Eigen::Index ForwardOp::output_dim(int j) const {
  if (j < 0 || j >= frames_) throw std::invalid_argument("ForwardOp: frame out of range");
  if (kind_ == Kind::selection)
    return indices_.empty() ? input_dim_ : static_cast<Eigen::Index>(indices_.size());
  return mats_[j].rows();
}

Eigen::VectorXd ForwardOp::apply(int j, const Eigen::VectorXd& u) const {
  if (u.size() != input_dim_) throw std::invalid_argument("ForwardOp::apply: size mismatch");
  if (kind_ == Kind::selection) {
    if (indices_.empty()) return u;
    Eigen::VectorXd out(indices_.size());
    for (std::size_t i = 0; i < indices_.size(); ++i) out[i] = u[indices_[i]];
    return out;
  }
  return mats_[j] * u;
}

Eigen::VectorXd ForwardOp::apply_adjoint(int j, const Eigen::VectorXd& w) const {
  if (w.size() != output_dim(j)) throw std::invalid_argument("ForwardOp::apply_adjoint: size mismatch");
  if (kind_ == Kind::selection) {
    if (indices_.empty()) return w;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(input_dim_);
    for (std::size_t i = 0; i < indices_.size(); ++i) out[indices_[i]] += w[i];
    return out;
  }
  return mats_[j].transpose() * w;
}

NoiseModel NoiseModel::scalar(double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("NoiseModel: sigma2 must be positive");
  NoiseModel n;
  n.kind_ = Kind::scalar;
  n.sigma2_ = sigma2;
  return n;
}

NoiseModel NoiseModel::per_frame(Eigen::VectorXd sigma2) {
  if (sigma2.size() == 0 || (sigma2.array() <= 0.0).any())
    throw std::invalid_argument("NoiseModel: per-frame variances must be positive");
  NoiseModel n;
  n.kind_ = Kind::per_frame;
  n.frame_sigma2_ = std::move(sigma2);
  return n;
}

NoiseModel NoiseModel::full(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw numerical_rank_error("NoiseModel: covariance is not numerically SPD");
  NoiseModel n;
  n.kind_ = Kind::full;
  n.cov_ = cov;
  n.chol_ = llt.matrixL();
  n.cov_logdet_ = 2.0 * n.chol_.diagonal().array().log().sum();
  return n;
}

double NoiseModel::quad(int j, const Eigen::VectorXd& r) const {
  switch (kind_) {
    case Kind::scalar: return r.squaredNorm() / sigma2_;
    case Kind::per_frame:
      if (j < 0 || j >= frame_sigma2_.size())
        throw std::invalid_argument("NoiseModel::quad: frame out of range");
      return r.squaredNorm() / frame_sigma2_[j];
    case Kind::full: {
      if (r.size() != cov_.rows()) throw std::invalid_argument("NoiseModel::quad: size mismatch");
      return chol_.triangularView<Eigen::Lower>().solve(r).squaredNorm();
    }
  }
  return 0.0;
}

Eigen::VectorXd NoiseModel::solve(int j, const Eigen::VectorXd& r) const {
  switch (kind_) {
    case Kind::scalar: return r / sigma2_;
    case Kind::per_frame:
      if (j < 0 || j >= frame_sigma2_.size())
        throw std::invalid_argument("NoiseModel::solve: frame out of range");
      return r / frame_sigma2_[j];
    case Kind::full: {
      if (r.size() != cov_.rows()) throw std::invalid_argument("NoiseModel::solve: size mismatch");
      Eigen::VectorXd y = chol_.triangularView<Eigen::Lower>().solve(r);
      return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
    }
  }
  return r;
}

double NoiseModel::logdet(int j, Eigen::Index m) const {
  switch (kind_) {
    case Kind::scalar: return m * std::log(sigma2_);
    case Kind::per_frame:
      if (j < 0 || j >= frame_sigma2_.size())
        throw std::invalid_argument("NoiseModel::logdet: frame out of range");
      return m * std::log(frame_sigma2_[j]);
    case Kind::full:
      if (m != cov_.rows()) throw std::invalid_argument("NoiseModel::logdet: size mismatch");
      return cov_logdet_;
  }
  return 0.0;
}

Eigen::VectorXd NoiseModel::draw(int j, Eigen::Index m, Rng& rng) const {
  Eigen::VectorXd z = standard_normal(rng, m);
  switch (kind_) {
    case Kind::scalar: return std::sqrt(sigma2_) * z;
    case Kind::per_frame:
      if (j < 0 || j >= frame_sigma2_.size())
        throw std::invalid_argument("NoiseModel::draw: frame out of range");
      return std::sqrt(frame_sigma2_[j]) * z;
    case Kind::full:
      if (m != cov_.rows()) throw std::invalid_argument("NoiseModel::draw: size mismatch");
      return chol_.triangularView<Eigen::Lower>() * z;
  }
  return z;
}

Observations observe(Rng& rng, const ForwardOp& op, const NoiseModel& noise,
                     const SpaceTimeField& truth) {
  if (truth.values.cols() != op.frames())
    throw std::invalid_argument("observe: field/operator frame mismatch");
  Observations obs;
  obs.y.reserve(op.frames());
  for (int j = 0; j < op.frames(); ++j) {
    Eigen::VectorXd mean = op.apply(j, truth.values.col(j));
    obs.y.push_back(mean + noise.draw(j, mean.size(), rng));
  }
  return obs;
}

namespace {

void check_model_args(const Eigen::MatrixXd& state, const ForwardOp& op, const PriorSpec& prior) {
  if (op.frames() != prior.J())
    throw std::invalid_argument("posterior: frame count mismatch");
  if (op.input_dim() != prior.I())
    throw std::invalid_argument("posterior: operator/basis size mismatch");
  if (state.rows() != prior.J() || state.cols() != prior.L())
    throw std::invalid_argument("posterior: state must be J x L");
}

void check_posterior_args(const Eigen::MatrixXd& state, const Observations& obs,
                          const ForwardOp& op, const PriorSpec& prior) {
  check_model_args(state, op, prior);
  if (obs.frames() != op.frames())
    throw std::invalid_argument("posterior: observation frame count mismatch");
}

double misfit_half_quad(const SpaceTimeField& field, const Observations& obs,
                        const ForwardOp& op, const NoiseModel& noise) {
  double acc = 0.0;
  for (int j = 0; j < op.frames(); ++j) {
    const Eigen::VectorXd r = op.apply(j, field.values.col(j)) - obs.y[j];
    acc += noise.quad(j, r);
  }
  return 0.5 * acc;
}

double noise_logdet_half(const ForwardOp& op, const NoiseModel& noise) {
  double acc = 0.0;
  for (int j = 0; j < op.frames(); ++j) acc += noise.logdet(j, op.output_dim(j));
  return 0.5 * acc;
}

// Pull a per-frame sensitivity W (I x J) back to coefficient space:
// (W^T Phi) diag(gamma), the adjoint of Xi -> Phi diag(gamma) Xi^T.
Eigen::MatrixXd pullback_to_coeffs(const Eigen::MatrixXd& W, const PriorSpec& prior) {
  Eigen::MatrixXd G = W.transpose() * prior.basis.phi;  // J x L
  G *= prior.gamma.asDiagonal();
  return G;
}

}  // namespace

PosteriorParts neg_log_post_parts(const WhitenedMatrix& z, const Observations& obs,
                                  const ForwardOp& op, const NoiseModel& noise,
                                  const PriorSpec& prior, bool include_jacobian) {
  check_posterior_args(z.zeta, obs, op, prior);
  const CoefficientMatrix coeffs = whiten_columns(z, prior);
  const SpaceTimeField field = field_from_coefficients(coeffs, prior);
  PosteriorParts parts;
  parts.misfit = misfit_half_quad(field, obs, op, noise);
  parts.noise_logdet = noise_logdet_half(op, noise);
  parts.prior = prior_neg_log(coeffs, prior);
  if (include_jacobian) parts.jacobian = -whiten_logdet_sum(z, prior);
  return parts;
}

double neg_log_post(const WhitenedMatrix& z, const Observations& obs, const ForwardOp& op,
                    const NoiseModel& noise, const PriorSpec& prior, bool include_jacobian) {
  return neg_log_post_parts(z, obs, op, noise, prior, include_jacobian).total(include_jacobian);
}

Eigen::MatrixXd grad_neg_log_post(const WhitenedMatrix& z, const Observations& obs,
                                  const ForwardOp& op, const NoiseModel& noise,
                                  const PriorSpec& prior, bool include_jacobian) {
  check_posterior_args(z.zeta, obs, op, prior);
  const CoefficientMatrix coeffs = whiten_columns(z, prior);
  const SpaceTimeField field = field_from_coefficients(coeffs, prior);

  // Misfit part in coefficient space.
  Eigen::MatrixXd W(prior.I(), prior.J());
  for (int j = 0; j < op.frames(); ++j) {
    const Eigen::VectorXd r = op.apply(j, field.values.col(j)) - obs.y[j];
    W.col(j) = op.apply_adjoint(j, noise.solve(j, r));
  }
  Eigen::MatrixXd grad_xi = pullback_to_coeffs(W, prior);

  // Prior part: d/dxi_l = [q/2 r^(q/2-1) - J (q/2-1)/r] C^{-1} xi_l.
  const double J = static_cast<double>(prior.J());
  const double half_q = 0.5 * prior.q;
  const Eigen::MatrixXd V = prior.kernel.solve(coeffs.xi);
  for (Eigen::Index l = 0; l < prior.L(); ++l) {
    const double r = coeffs.xi.col(l).dot(V.col(l));
    if (r <= 0.0 && half_q != 1.0)
      throw degenerate_point_error("grad_neg_log_post: zero-radius column with q < 2");
    double c = half_q * std::pow(r, half_q - 1.0);
    if (half_q != 1.0) c -= J * (half_q - 1.0) / r;
    grad_xi.col(l) += c * V.col(l);
  }

  // Chain through the transport, plus the Jacobian term's own gradient.
  const QedParams params = prior.column_params();
  const double a = 2.0 / prior.q - 1.0;
  Eigen::MatrixXd grad(prior.J(), prior.L());
  for (Eigen::Index l = 0; l < prior.L(); ++l) {
    grad.col(l) = whiten_jacobian_apply(z.zeta.col(l), grad_xi.col(l), params, true);
    if (include_jacobian && a != 0.0)
      grad.col(l) -= (J * a / z.zeta.col(l).squaredNorm()) * z.zeta.col(l);
  }
  return grad;
}

double neg_log_post_coeffs(const CoefficientMatrix& coeffs, const Observations& obs,
                           const ForwardOp& op, const NoiseModel& noise, const PriorSpec& prior) {
  check_posterior_args(coeffs.xi, obs, op, prior);
  const SpaceTimeField field = field_from_coefficients(coeffs, prior);
  return misfit_half_quad(field, obs, op, noise) + noise_logdet_half(op, noise) +
         prior_neg_log(coeffs, prior);
}

double log_likelihood(const SpaceTimeField& field, const Observations& obs, const ForwardOp& op,
                      const NoiseModel& noise) {
  if (obs.frames() != op.frames()) throw std::invalid_argument("log_likelihood: frame mismatch");
  double m_total = 0.0;
  for (int j = 0; j < op.frames(); ++j) m_total += static_cast<double>(op.output_dim(j));
  return -misfit_half_quad(field, obs, op, noise) - noise_logdet_half(op, noise) -
         0.5 * m_total * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd gauss_newton_product(const WhitenedMatrix& z, const Eigen::MatrixXd& v,
                                     const ForwardOp& op, const NoiseModel& noise,
                                     const PriorSpec& prior) {
  check_model_args(z.zeta, op, prior);
  if (v.rows() != prior.J() || v.cols() != prior.L())
    throw std::invalid_argument("gauss_newton_product: v must be J x L");
  const QedParams params = prior.column_params();

  Eigen::MatrixXd dxi(prior.J(), prior.L());
  for (Eigen::Index l = 0; l < prior.L(); ++l)
    dxi.col(l) = whiten_jacobian_apply(z.zeta.col(l), v.col(l), params, false);

  const Eigen::MatrixXd dU = prior.basis.phi * (prior.gamma.asDiagonal() * dxi.transpose());
  Eigen::MatrixXd W(prior.I(), prior.J());
  for (int j = 0; j < op.frames(); ++j)
    W.col(j) = op.apply_adjoint(j, noise.solve(j, op.apply(j, dU.col(j))));

  Eigen::MatrixXd back = pullback_to_coeffs(W, prior);
  Eigen::MatrixXd out(prior.J(), prior.L());
  for (Eigen::Index l = 0; l < prior.L(); ++l)
    out.col(l) = whiten_jacobian_apply(z.zeta.col(l), back.col(l), params, true);
  return out;
}

}  // namespace stbp
