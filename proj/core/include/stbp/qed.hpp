#pragma once

#include <Eigen/Dense>

#include "stbp/rng.hpp"

namespace stbp {

// q-exponential family on R^J.  The covariance enters through its lower
// Cholesky factor; q = 2 is the multivariate normal, q < 2 puts more mass
// near the mean and in the tails of each radial shell.
struct QedParams {
  double q = 1.0;
  Eigen::VectorXd mean;       // J
  Eigen::MatrixXd cov_chol;   // J x J lower triangular, positive diagonal

  Eigen::Index dim() const { return cov_chol.rows(); }
  double logdet_cov() const { return 2.0 * cov_chol.diagonal().array().log().sum(); }
};

// Validates and factorizes a full covariance; throws numerical_rank_error if
// the matrix is not numerically SPD.
QedParams make_qed_params(double q, Eigen::VectorXd mean, const Eigen::MatrixXd& cov);
QedParams make_qed_params_from_chol(double q, Eigen::VectorXd mean, Eigen::MatrixXd cov_chol);

// Squared Mahalanobis radius r(xi) = (xi - mu)^T C^{-1} (xi - mu).
double qed_radius(const Eigen::VectorXd& xi, const QedParams& p);

double qed_log_density(const Eigen::VectorXd& xi, const QedParams& p);

// Draw via the radial-spherical representation xi = mu + R L S with
// R^q ~ chi^2(J) and S uniform on the unit sphere.
Eigen::VectorXd qed_sample(Rng& rng, const QedParams& p);

// White-noise transport: zeta ~ N(0, I_J) maps to a centered q-exponential
// draw mu + Lambda(zeta), Lambda(zeta) = L zeta ||zeta||^(2/q - 1).
Eigen::VectorXd whiten_forward(const Eigen::VectorXd& zeta, const QedParams& p);
Eigen::VectorXd whiten_inverse(const Eigen::VectorXd& xi, const QedParams& p);

// log |det dLambda(zeta)|; singular at zeta = 0 unless q = 2 (linear map).
double whiten_logdet_jacobian(const Eigen::VectorXd& zeta, const QedParams& p);

// dLambda(zeta) v, or dLambda(zeta)^T v when transpose is set.
Eigen::VectorXd whiten_jacobian_apply(const Eigen::VectorXd& zeta, const Eigen::VectorXd& v,
                                      const QedParams& p, bool transpose = false);

}  // namespace stbp
