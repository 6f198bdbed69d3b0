#include "stbp/qed.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stbp/errors.hpp"

namespace stbp {

namespace {

constexpr double kZeroFloor = 1e-300;  // norms below this count as the origin

void check_params(const QedParams& p) {
  if (!(p.q > 0.0)) throw std::invalid_argument("qed: q must be positive");
  if (p.cov_chol.rows() != p.cov_chol.cols() || p.cov_chol.rows() == 0)
    throw std::invalid_argument("qed: covariance factor must be square and nonempty");
  if (p.mean.size() != p.cov_chol.rows())
    throw std::invalid_argument("qed: mean/covariance dimension mismatch");
  if ((p.cov_chol.diagonal().array() <= 0.0).any())
    throw std::invalid_argument("qed: covariance factor needs a positive diagonal");
}

}  // namespace

QedParams make_qed_params(double q, Eigen::VectorXd mean, const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw numerical_rank_error("qed: covariance is not numerically SPD");
  QedParams p{q, std::move(mean), llt.matrixL()};
  check_params(p);
  return p;
}

QedParams make_qed_params_from_chol(double q, Eigen::VectorXd mean, Eigen::MatrixXd cov_chol) {
  QedParams p{q, std::move(mean), std::move(cov_chol)};
  check_params(p);
  return p;
}

double qed_radius(const Eigen::VectorXd& xi, const QedParams& p) {
  check_params(p);
  if (xi.size() != p.dim()) throw std::invalid_argument("qed_radius: dimension mismatch");
  const Eigen::VectorXd w =
      p.cov_chol.triangularView<Eigen::Lower>().solve(xi - p.mean);
  return w.squaredNorm();
}

double qed_log_density(const Eigen::VectorXd& xi, const QedParams& p) {
  const double r = qed_radius(xi, p);
  const double J = static_cast<double>(p.dim());
  const double half_q = 0.5 * p.q;
  double log_r_term = 0.0;
  if (half_q != 1.0) {
    if (r <= 0.0)
      throw degenerate_point_error("qed_log_density: radial density undefined at the mean for q < 2");
    log_r_term = (half_q - 1.0) * (J / 2.0) * std::log(r);
  }
  return std::log(half_q) - (J / 2.0) * std::log(2.0 * std::numbers::pi) -
         0.5 * p.logdet_cov() + log_r_term - 0.5 * std::pow(r, half_q);
}

Eigen::VectorXd qed_sample(Rng& rng, const QedParams& p) {
  check_params(p);
  Eigen::VectorXd dir;
  double norm = 0.0;
  do {
    dir = standard_normal(rng, p.dim());
    norm = dir.norm();
  } while (norm < kZeroFloor);
  const double radius = std::pow(chi_squared(rng, static_cast<double>(p.dim())), 1.0 / p.q);
  const Eigen::VectorXd ld = p.cov_chol.triangularView<Eigen::Lower>() * dir;
  return p.mean + radius / norm * ld;
}

Eigen::VectorXd whiten_forward(const Eigen::VectorXd& zeta, const QedParams& p) {
  check_params(p);
  if (zeta.size() != p.dim()) throw std::invalid_argument("whiten_forward: dimension mismatch");
  const double norm = zeta.norm();
  if (norm < kZeroFloor) return p.mean;  // Lambda(0) = 0 by continuity
  const double scale = std::pow(norm, 2.0 / p.q - 1.0);
  const Eigen::VectorXd lz = p.cov_chol.triangularView<Eigen::Lower>() * zeta;
  return p.mean + scale * lz;
}

Eigen::VectorXd whiten_inverse(const Eigen::VectorXd& xi, const QedParams& p) {
  check_params(p);
  if (xi.size() != p.dim()) throw std::invalid_argument("whiten_inverse: dimension mismatch");
  const Eigen::VectorXd w =
      p.cov_chol.triangularView<Eigen::Lower>().solve(xi - p.mean);
  const double norm = w.norm();
  if (norm < kZeroFloor) return Eigen::VectorXd::Zero(p.dim());
  return std::pow(norm, 0.5 * p.q - 1.0) * w;
}

double whiten_logdet_jacobian(const Eigen::VectorXd& zeta, const QedParams& p) {
  check_params(p);
  if (zeta.size() != p.dim()) throw std::invalid_argument("whiten_logdet_jacobian: dimension mismatch");
  const double a = 2.0 / p.q - 1.0;
  const double logdet_l = p.cov_chol.diagonal().array().log().sum();
  const double norm = zeta.norm();
  if (norm < kZeroFloor) {
    if (a == 0.0) return logdet_l;  // q = 2: the map is linear, dLambda = L everywhere
    throw singular_point_error("whiten_logdet_jacobian: singular at the origin for q != 2");
  }
  return std::log(2.0 / p.q) + a * static_cast<double>(p.dim()) * std::log(norm) + logdet_l;
}

Eigen::VectorXd whiten_jacobian_apply(const Eigen::VectorXd& zeta, const Eigen::VectorXd& v,
                                      const QedParams& p, bool transpose) {
  check_params(p);
  if (zeta.size() != p.dim() || v.size() != p.dim())
    throw std::invalid_argument("whiten_jacobian_apply: dimension mismatch");
  const double a = 2.0 / p.q - 1.0;
  const double norm = zeta.norm();
  if (norm < kZeroFloor) {
    if (a == 0.0)
      return transpose ? Eigen::VectorXd(p.cov_chol.transpose().triangularView<Eigen::Upper>() * v)
                       : Eigen::VectorXd(p.cov_chol.triangularView<Eigen::Lower>() * v);
    throw singular_point_error("whiten_jacobian_apply: singular at the origin for q != 2");
  }
  const double scale = std::pow(norm, a);
  // dLambda = ||z||^a L (I + a z z^T / ||z||^2)
  if (!transpose) {
    const Eigen::VectorXd w = v + (a * zeta.dot(v) / (norm * norm)) * zeta;
    const Eigen::VectorXd lw = p.cov_chol.triangularView<Eigen::Lower>() * w;
    return scale * lw;
  }
  const Eigen::VectorXd w = p.cov_chol.transpose().triangularView<Eigen::Upper>() * v;
  return scale * (w + (a * zeta.dot(w) / (norm * norm)) * zeta);
}

}  // namespace stbp
