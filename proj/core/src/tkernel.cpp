#include "stbp/tkernel.hpp"

#include <cmath>
#include <stdexcept>

#include "stbp/errors.hpp"

namespace stbp {

namespace {

void check_kernel(const TemporalKernel& k) {
  if (!(k.kappa > 0.0) || !(k.rho > 0.0) || !(k.nu > 0.0) || !(k.s_exp > 0.0))
    throw std::invalid_argument("tkernel: kappa, rho, nu, s_exp must be positive");
  if (k.t_grid.size() == 0) throw std::invalid_argument("tkernel: empty time grid");
  for (Eigen::Index j = 1; j < k.t_grid.size(); ++j)
    if (!(k.t_grid[j] > k.t_grid[j - 1]))
      throw std::invalid_argument("tkernel: time grid must be strictly increasing");
}

}  // namespace

double matern_value(const TemporalKernel& kernel, double dt) {
  const double w = std::sqrt(2.0 * kernel.nu) * std::pow(std::abs(dt) / kernel.rho, kernel.s_exp);
  if (w == 0.0) return kernel.kappa;
  if (kernel.nu == 0.5) return kernel.kappa * std::exp(-w);
  if (kernel.nu == 1.5) return kernel.kappa * (1.0 + w) * std::exp(-w);
  if (kernel.nu == 2.5) return kernel.kappa * (1.0 + w + w * w / 3.0) * std::exp(-w);
  return kernel.kappa * std::pow(2.0, 1.0 - kernel.nu) / std::tgamma(kernel.nu) *
         std::pow(w, kernel.nu) * std::cyl_bessel_k(kernel.nu, w);
}

KernelFactor matern_cov(const TemporalKernel& kernel) {
  check_kernel(kernel);
  const Eigen::Index J = kernel.t_grid.size();
  KernelFactor factor;

  if (kernel.identity) {
    factor.cov = kernel.kappa * Eigen::MatrixXd::Identity(J, J);
    factor.chol = std::sqrt(kernel.kappa) * Eigen::MatrixXd::Identity(J, J);
    factor.logdet = J * std::log(kernel.kappa);
    return factor;
  }

  Eigen::MatrixXd C(J, J);
  for (Eigen::Index i = 0; i < J; ++i) {
    C(i, i) = kernel.kappa;
    for (Eigen::Index j = 0; j < i; ++j)
      C(i, j) = C(j, i) = matern_value(kernel, kernel.t_grid[i] - kernel.t_grid[j]);
  }

  // Small jitter keeps dense grids factorizable; escalate once before giving up.
  for (double nugget : {1e-10, 1e-6}) {
    factor.cov = C + nugget * kernel.kappa * Eigen::MatrixXd::Identity(J, J);
    Eigen::LLT<Eigen::MatrixXd> llt(factor.cov);
    if (llt.info() == Eigen::Success) {
      factor.chol = llt.matrixL();
      factor.logdet = 2.0 * factor.chol.diagonal().array().log().sum();
      return factor;
    }
  }
  throw numerical_rank_error("matern_cov: covariance not SPD even with 1e-6 nugget");
}

Eigen::MatrixXd KernelFactor::solve(const Eigen::MatrixXd& B) const {
  if (B.rows() != dim()) throw std::invalid_argument("KernelFactor::solve: row mismatch");
  Eigen::MatrixXd y = chol.triangularView<Eigen::Lower>().solve(B);
  return chol.transpose().triangularView<Eigen::Upper>().solve(y);
}

KernelFactor KernelFactor::rescaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("KernelFactor::rescaled: factor must be positive");
  KernelFactor out;
  out.cov = factor * cov;
  out.chol = std::sqrt(factor) * chol;
  out.logdet = logdet + dim() * std::log(factor);
  return out;
}

Eigen::MatrixXd factor_solve(const KernelFactor& factor, const Eigen::MatrixXd& B) {
  return factor.solve(B);
}

Eigen::VectorXd kernel_eigenvalues(const KernelFactor& factor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(factor.cov, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace stbp
