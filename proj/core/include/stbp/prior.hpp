#pragma once

#include <Eigen/Dense>
#include <utility>

#include "stbp/basis.hpp"
#include "stbp/grid.hpp"
#include "stbp/qed.hpp"
#include "stbp/rng.hpp"
#include "stbp/tkernel.hpp"

namespace stbp {

// Temporal coefficient paths, one column per spatial basis function (J x L).
struct CoefficientMatrix {
  Eigen::MatrixXd xi;
};

// White-noise coordinates of the coefficients (J x L).
struct WhitenedMatrix {
  Eigen::MatrixXd zeta;
};

// Discretized field, pixels by time steps (I x J).
struct SpaceTimeField {
  Eigen::MatrixXd values;
  SpatialGrid grid;
  Eigen::VectorXd t_grid;
};

// Series prior u(x,t) = sum_l gamma_l xi_l(t) phi_l(x) with xi_l iid
// q-exponential over the time grid.  kappa lives inside the kernel factor;
// gamma_l = l^-(s/d + 1/2 - 1/q).
struct PriorSpec {
  double q = 1.0;
  double s = 1.0;
  int d = 2;
  double kappa = 1.0;
  SpatialGrid grid;
  Eigen::VectorXd t_grid;
  BasisMatrix basis;
  KernelFactor kernel;
  Eigen::VectorXd gamma;

  Eigen::Index I() const { return basis.size(); }
  Eigen::Index J() const { return kernel.dim(); }
  Eigen::Index L() const { return basis.truncation(); }
  QedParams column_params() const;
  // Same prior at a different magnitude (kernel rescaled, no refactorization).
  PriorSpec with_kappa(double kappa_new) const;
};

Eigen::VectorXd gamma_weights(double q, double s, int d, int L);

PriorSpec make_prior_spec(double q, double s, double kappa, SpatialGrid grid,
                          Eigen::VectorXd t_grid, BasisMatrix basis, KernelFactor kernel);

// Draw coefficients and the induced field.
std::pair<CoefficientMatrix, SpaceTimeField> prior_sample(Rng& rng, const PriorSpec& spec);

// Negative log prior density of the coefficients, dropping the L * (log(q/2)
// - (J/2) log 2pi) constant shared by all states.
double prior_neg_log(const CoefficientMatrix& coeffs, const PriorSpec& spec);

CoefficientMatrix whiten_columns(const WhitenedMatrix& z, const PriorSpec& spec);
WhitenedMatrix unwhiten_columns(const CoefficientMatrix& coeffs, const PriorSpec& spec);

// Sum of log |det dLambda| over columns.
double whiten_logdet_sum(const WhitenedMatrix& z, const PriorSpec& spec);

SpaceTimeField field_from_coefficients(const CoefficientMatrix& coeffs, const PriorSpec& spec);

// Full transport: white noise -> coefficients -> field.
SpaceTimeField transform_T(const WhitenedMatrix& z, const PriorSpec& spec);

// Conjugate magnitude update: with kappa^(q/2) ~ InvGamma(alpha, beta) a
// priori, the conditional given the coefficients is InvGamma(alpha_post,
// beta_post).  Returns the drawn (or modal) kappa alongside the posterior
// shape/scale.
struct KappaUpdate {
  double alpha_post = 0.0;
  double beta_post = 0.0;
  double kappa = 0.0;
};
KappaUpdate kappa_gibbs_update(Rng& rng, const CoefficientMatrix& coeffs, double alpha,
                               double beta, const PriorSpec& spec, bool sample = true);

}  // namespace stbp
