#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "stbp/prior.hpp"
#include "stbp/radon.hpp"
#include "stbp/rng.hpp"

namespace stbp {

// Per-time-step observation operator: either a pixel selection (empty index
// list = observe everything) or a parallel-beam projector whose angles may
// differ per frame.
class ForwardOp {
 public:
  enum class Kind { selection, radon };

  static ForwardOp selection(Eigen::Index input_dim, int frames, std::vector<int> indices = {});
  static ForwardOp radon(const SpatialGrid& grid, std::vector<Eigen::VectorXd> frame_angles,
                         int n_det);

  Kind kind() const { return kind_; }
  int frames() const { return frames_; }
  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim(int j) const;

  Eigen::VectorXd apply(int j, const Eigen::VectorXd& u) const;
  Eigen::VectorXd apply_adjoint(int j, const Eigen::VectorXd& w) const;

  const std::vector<Eigen::VectorXd>& frame_angles() const { return frame_angles_; }
  int n_det() const { return n_det_; }

 private:
  Kind kind_ = Kind::selection;
  int frames_ = 0;
  Eigen::Index input_dim_ = 0;
  std::vector<int> indices_;                       // selection
  std::vector<Eigen::SparseMatrix<double>> mats_;  // radon, one per frame
  std::vector<Eigen::VectorXd> frame_angles_;
  int n_det_ = 0;
};

// Observation noise: one scalar variance, a per-frame scalar variance, or a
// shared full covariance.
class NoiseModel {
 public:
  static NoiseModel scalar(double sigma2);
  static NoiseModel per_frame(Eigen::VectorXd sigma2);
  static NoiseModel full(const Eigen::MatrixXd& cov);

  double quad(int j, const Eigen::VectorXd& r) const;          // r^T Gamma_j^{-1} r
  Eigen::VectorXd solve(int j, const Eigen::VectorXd& r) const;  // Gamma_j^{-1} r
  double logdet(int j, Eigen::Index m) const;                  // log |Gamma_j|
  Eigen::VectorXd draw(int j, Eigen::Index m, Rng& rng) const;

 private:
  enum class Kind { scalar, per_frame, full } kind_ = Kind::scalar;
  double sigma2_ = 1.0;
  Eigen::VectorXd frame_sigma2_;
  Eigen::MatrixXd cov_, chol_;
  double cov_logdet_ = 0.0;
};

struct Observations {
  std::vector<Eigen::VectorXd> y;
  int frames() const { return static_cast<int>(y.size()); }
};

Observations observe(Rng& rng, const ForwardOp& op, const NoiseModel& noise,
                     const SpaceTimeField& truth);

// Negative log posterior of the whitened coefficients, split into parts.
// jacobian carries -sum_l log|det dLambda(zeta_l)|; adding it turns the value
// into the full Lebesgue potential targeted by the samplers, while the plain
// sum misfit + noise_logdet + prior is the whitened objective minimized for
// point estimates.
struct PosteriorParts {
  double misfit = 0.0;        // (1/2) sum_j ||y_j - G_j(u_j)||^2_Gamma
  double noise_logdet = 0.0;  // (1/2) sum_j log |Gamma_j|
  double prior = 0.0;
  double jacobian = 0.0;
  double total(bool include_jacobian) const {
    return misfit + noise_logdet + prior + (include_jacobian ? jacobian : 0.0);
  }
};

PosteriorParts neg_log_post_parts(const WhitenedMatrix& z, const Observations& obs,
                                  const ForwardOp& op, const NoiseModel& noise,
                                  const PriorSpec& prior, bool include_jacobian = false);
double neg_log_post(const WhitenedMatrix& z, const Observations& obs, const ForwardOp& op,
                    const NoiseModel& noise, const PriorSpec& prior,
                    bool include_jacobian = false);
Eigen::MatrixXd grad_neg_log_post(const WhitenedMatrix& z, const Observations& obs,
                                  const ForwardOp& op, const NoiseModel& noise,
                                  const PriorSpec& prior, bool include_jacobian = false);

// Same posterior in coefficient form (no transport, no Jacobian term).
double neg_log_post_coeffs(const CoefficientMatrix& coeffs, const Observations& obs,
                           const ForwardOp& op, const NoiseModel& noise, const PriorSpec& prior);

// Exact Gaussian log likelihood of the data given a field, constants included.
double log_likelihood(const SpaceTimeField& field, const Observations& obs, const ForwardOp& op,
                      const NoiseModel& noise);

// Gauss-Newton product of the misfit Hessian through the transport, evaluated
// at linearization point z: v -> dT^* G^* Gamma^{-1} G dT v.
Eigen::MatrixXd gauss_newton_product(const WhitenedMatrix& z, const Eigen::MatrixXd& v,
                                     const ForwardOp& op, const NoiseModel& noise,
                                     const PriorSpec& prior);

}  // namespace stbp
