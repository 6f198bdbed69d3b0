#pragma once

#include <Eigen/Dense>

namespace stbp {

// Matern covariance in time, C(t,t') = kappa * (2^(1-nu)/Gamma(nu)) w^nu K_nu(w)
// with w = sqrt(2 nu) (|t - t'| / rho)^s_exp.  The magnitude kappa multiplies
// the kernel itself, so series weights stay kappa-free.  With identity set the
// kernel degenerates to kappa * Id (time-uncorrelated baseline).
struct TemporalKernel {
  double kappa = 1.0;
  double rho = 0.1;
  double nu = 0.5;
  double s_exp = 1.0;
  Eigen::VectorXd t_grid;
  bool identity = false;
};

struct KernelFactor {
  Eigen::MatrixXd cov;    // J x J, nugget included
  Eigen::MatrixXd chol;   // lower triangular
  double logdet = 0.0;

  Eigen::Index dim() const { return cov.rows(); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;  // C^{-1} B
  // Same kernel scaled to a new magnitude, without refactorizing.
  KernelFactor rescaled(double factor) const;
};

double matern_value(const TemporalKernel& kernel, double dt);
KernelFactor matern_cov(const TemporalKernel& kernel);
Eigen::MatrixXd factor_solve(const KernelFactor& factor, const Eigen::MatrixXd& B);

// Diagnostic spectrum of the factored covariance (ascending).
Eigen::VectorXd kernel_eigenvalues(const KernelFactor& factor);

}  // namespace stbp
