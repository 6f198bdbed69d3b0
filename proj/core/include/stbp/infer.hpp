#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "stbp/forward.hpp"
#include "stbp/rng.hpp"

namespace stbp {

// Objective handle: returns the value and fills the gradient (same shape as x).
using ObjGrad = std::function<double(const Eigen::MatrixXd& x, Eigen::MatrixXd& grad)>;

enum class MapStatus { grad_tol, step_tol, max_iter, line_search_failed, error_threshold };

struct MapOptions {
  int max_iter = 1000;
  int memory = 10;             // limited-memory pairs
  double grad_tol = 1e-5;      // on the Frobenius norm of the gradient
  double step_tol = 1e-12;     // relative objective decrease
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  std::optional<double> error_threshold;  // early stop when error_fn drops below
  std::ostream* progress = nullptr;
  int progress_every = 10;
};

struct MapResult {
  Eigen::MatrixXd x;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  MapStatus status = MapStatus::max_iter;
  std::vector<double> objective_trace;  // one entry per accepted iterate
  std::vector<double> error_trace;      // filled when error_fn is given
};

// Limited-memory quasi-Newton descent with Armijo backtracking; accepted
// iterates decrease the objective monotonically.
MapResult map_optimize(const ObjGrad& f, const Eigen::MatrixXd& init, const MapOptions& opts,
                       const std::function<double(const Eigen::MatrixXd&)>* error_fn = nullptr);

// One rotation-kick integrator step: half kick with g, exact rotation of the
// Gaussian reference flow by eps, half kick.
void leapfrog_step(Eigen::MatrixXd& zeta, Eigen::MatrixXd& eta,
                   const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& g, double eps);

enum class McmcVariant { hmc, mmala };

struct McmcOptions {
  double step_size = 0.1;
  int leapfrog_steps = 5;   // forced to 1 by the mmala variant
  double beta = 0.0;        // forced to 0 by the hmc variant
  int n_samples = 1000;
  int n_burnin = 100;
  int thin = 1;
  McmcVariant variant = McmcVariant::hmc;
  std::optional<double> target_accept;  // dual-averaging step-size adaptation in burn-in
  int gn_rank = 30;                     // low-rank size of the frozen metric, beta > 0
  int gn_oversample = 10;
  std::ostream* progress = nullptr;
  int progress_every = 500;
};

// Potential handles for the sampler.  value/gradient describe the full
// negative log Lebesgue density of the target in whitened coordinates (the
// posterior with the transport Jacobian term included); the sampler splits
// off the exact Gaussian reference internally, so its invariant density is
// proportional to exp(-value(zeta)).  gauss_newton is only consulted when
// beta > 0.
struct WhitenedPosterior {
  std::function<double(const Eigen::MatrixXd&)> value;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, const Eigen::MatrixXd&)> gauss_newton;
};

WhitenedPosterior make_whitened_posterior(const Observations& obs, const ForwardOp& op,
                                          const NoiseModel& noise, const PriorSpec& prior);

struct Chain {
  std::vector<Eigen::MatrixXd> samples;  // post burn-in, thinned
  std::vector<double> potential;         // target potential at kept samples
  std::vector<std::uint8_t> accepted;    // per post-burn-in iteration
  long long n_proposed = 0;              // post burn-in
  long long n_accepted = 0;
  double step_size_final = 0.0;

  double acceptance_rate() const {
    return n_proposed > 0 ? static_cast<double>(n_accepted) / n_proposed : 0.0;
  }
  Eigen::MatrixXd mean() const;
  Eigen::MatrixXd variance() const;  // elementwise
};

Chain wn_mcmc_run(const WhitenedPosterior& target, const Eigen::MatrixXd& init,
                  const McmcOptions& opts, Rng& rng);

}  // namespace stbp
