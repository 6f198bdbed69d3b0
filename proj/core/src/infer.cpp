#include "stbp/infer.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>

namespace stbp {

namespace {

double dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.cwiseProduct(b).sum();
}

}  // namespace

MapResult map_optimize(const ObjGrad& f, const Eigen::MatrixXd& init, const MapOptions& opts,
                       const std::function<double(const Eigen::MatrixXd&)>* error_fn) {
  if (!f) throw std::invalid_argument("map_optimize: empty objective");
  if (opts.max_iter < 1 || opts.memory < 1 || !(opts.backtrack > 0.0 && opts.backtrack < 1.0))
    throw std::invalid_argument("map_optimize: bad options");

  MapResult res;
  res.x = init;
  Eigen::MatrixXd grad(init.rows(), init.cols());
  double fx = f(res.x, grad);
  if (!std::isfinite(fx))
    throw std::invalid_argument("map_optimize: objective not finite at the initial point");

  res.objective_trace.push_back(fx);
  if (error_fn) res.error_trace.push_back((*error_fn)(res.x));

  struct Pair { Eigen::MatrixXd s, y; double rho; };
  std::deque<Pair> mem;
  std::vector<double> alpha;
  res.status = MapStatus::max_iter;

  for (int it = 1; it <= opts.max_iter; ++it) {
    res.grad_norm = grad.norm();
    if (res.grad_norm <= opts.grad_tol) { res.status = MapStatus::grad_tol; break; }
    if (opts.error_threshold && error_fn && !res.error_trace.empty() &&
        res.error_trace.back() <= *opts.error_threshold) {
      res.status = MapStatus::error_threshold;
      break;
    }

    // Two-loop recursion for the quasi-Newton direction.
    Eigen::MatrixXd d = grad;
    alpha.assign(mem.size(), 0.0);
    for (std::size_t i = mem.size(); i-- > 0;) {
      alpha[i] = mem[i].rho * dot(mem[i].s, d);
      d -= alpha[i] * mem[i].y;
    }
    if (!mem.empty()) {
      const Pair& last = mem.back();
      d *= dot(last.s, last.y) / dot(last.y, last.y);
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const double beta = mem[i].rho * dot(mem[i].y, d);
      d += (alpha[i] - beta) * mem[i].s;
    }
    d = -d;
    double dg = dot(d, grad);
    if (!(dg < 0.0)) { d = -grad; dg = -grad.squaredNorm(); }  // fall back to steepest descent

    // Armijo backtracking; the first iteration starts conservatively.
    double step = mem.empty() ? std::min(1.0, 1.0 / std::max(1.0, res.grad_norm)) : 1.0;
    Eigen::MatrixXd x_new, grad_new(init.rows(), init.cols());
    double fx_new = fx;
    bool ok = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      x_new = res.x + step * d;
      fx_new = f(x_new, grad_new);
      if (std::isfinite(fx_new) && fx_new <= fx + opts.armijo_c * step * dg) { ok = true; break; }
      step *= opts.backtrack;
    }
    if (!ok) { res.status = MapStatus::line_search_failed; break; }

    Eigen::MatrixXd s = x_new - res.x;
    Eigen::MatrixXd y = grad_new - grad;
    const double sy = dot(s, y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      mem.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }

    const double decrease = (fx - fx_new) / std::max(1.0, std::abs(fx));
    res.x = std::move(x_new);
    fx = fx_new;
    grad = std::move(grad_new);
    res.iterations = it;
    res.objective_trace.push_back(fx);
    if (error_fn) res.error_trace.push_back((*error_fn)(res.x));

    if (opts.progress && it % opts.progress_every == 0) {
      char line[160];
      std::snprintf(line, sizeof line, "map iter=%d obj=%.10g grad=%.3e\n", it, fx, grad.norm());
      *opts.progress << line << std::flush;
    }
    if (decrease < opts.step_tol) { res.status = MapStatus::step_tol; break; }
  }

  res.objective = fx;
  res.grad_norm = grad.norm();
  return res;
}

void leapfrog_step(Eigen::MatrixXd& zeta, Eigen::MatrixXd& eta,
                   const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& g, double eps) {
  eta += 0.5 * eps * g(zeta);
  const double c = std::cos(eps), s = std::sin(eps);
  const Eigen::MatrixXd z_rot = c * zeta + s * eta;
  eta = -s * zeta + c * eta;
  zeta = z_rot;
  eta += 0.5 * eps * g(zeta);
}

WhitenedPosterior make_whitened_posterior(const Observations& obs, const ForwardOp& op,
                                          const NoiseModel& noise, const PriorSpec& prior) {
  // The captured references must outlive the returned handles.
  WhitenedPosterior post;
  post.value = [&obs, &op, &noise, &prior](const Eigen::MatrixXd& z) {
    return neg_log_post(WhitenedMatrix{z}, obs, op, noise, prior, true);
  };
  post.gradient = [&obs, &op, &noise, &prior](const Eigen::MatrixXd& z) {
    return grad_neg_log_post(WhitenedMatrix{z}, obs, op, noise, prior, true);
  };
  post.gauss_newton = [&op, &noise, &prior](const Eigen::MatrixXd& z, const Eigen::MatrixXd& v) {
    return gauss_newton_product(WhitenedMatrix{z}, v, op, noise, prior);
  };
  return post;
}

namespace {

// Rank-limited symmetric factorization of the Gauss-Newton operator at a
// fixed point, used as the frozen metric of one proposal.
struct LowRankMetric {
  Eigen::MatrixXd basis;   // n x r, orthonormal columns (vectorized states)
  Eigen::VectorXd eigs;    // r, nonnegative
  double beta = 0.0;

  Eigen::VectorXd coeffs(const Eigen::MatrixXd& m) const {
    return basis.transpose() * Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  }
  Eigen::MatrixXd lift(const Eigen::VectorXd& c, Eigen::Index rows, Eigen::Index cols) const {
    Eigen::VectorXd v = basis * c;
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
  }
  Eigen::MatrixXd apply_h(const Eigen::MatrixXd& m) const {
    return lift(eigs.asDiagonal() * coeffs(m), m.rows(), m.cols());
  }
  Eigen::MatrixXd apply_k(const Eigen::MatrixXd& m) const {
    const Eigen::VectorXd c = coeffs(m);
    const Eigen::VectorXd shrink =
        (beta * eigs.array() / (1.0 + beta * eigs.array())).matrix().asDiagonal() * c;
    return m - lift(shrink, m.rows(), m.cols());
  }
  Eigen::MatrixXd apply_k_sqrt(const Eigen::MatrixXd& m) const {
    const Eigen::VectorXd c = coeffs(m);
    const Eigen::VectorXd shrink =
        ((1.0 - (1.0 / (1.0 + beta * eigs.array()).sqrt())).matrix()).asDiagonal() * c;
    return m - lift(shrink, m.rows(), m.cols());
  }
  double quad_h(const Eigen::MatrixXd& m) const {
    const Eigen::VectorXd c = coeffs(m);
    return (eigs.array() * c.array().square()).sum();
  }
};

LowRankMetric build_metric(const WhitenedPosterior& target, const Eigen::MatrixXd& zeta,
                           double beta, int rank, int oversample, Rng& rng) {
  const Eigen::Index n = zeta.size();
  const int r = std::min<Eigen::Index>(rank + oversample, n);
  Eigen::MatrixXd probes_out(n, r);
  for (int i = 0; i < r; ++i) {
    const Eigen::MatrixXd omega = standard_normal(rng, zeta.rows(), zeta.cols());
    const Eigen::MatrixXd ho = target.gauss_newton(zeta, omega);
    probes_out.col(i) = Eigen::Map<const Eigen::VectorXd>(ho.data(), n);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(probes_out);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);

  Eigen::MatrixXd HQ(n, r);
  for (int i = 0; i < r; ++i) {
    const Eigen::MatrixXd qi = Eigen::Map<const Eigen::MatrixXd>(Q.col(i).data(), zeta.rows(), zeta.cols());
    const Eigen::MatrixXd hq = target.gauss_newton(zeta, qi);
    HQ.col(i) = Eigen::Map<const Eigen::VectorXd>(hq.data(), n);
  }
  Eigen::MatrixXd B = Q.transpose() * HQ;
  B = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);

  const int keep = std::min(rank, r);
  LowRankMetric metric;
  metric.beta = beta;
  metric.basis.resize(n, keep);
  metric.eigs.resize(keep);
  for (int i = 0; i < keep; ++i) {  // largest first, clamp tiny negatives from roundoff
    metric.basis.col(i) = Q * es.eigenvectors().col(r - 1 - i);
    metric.eigs[i] = std::max(0.0, es.eigenvalues()[r - 1 - i]);
  }
  return metric;
}

}  // namespace

Eigen::MatrixXd Chain::mean() const {
  if (samples.empty()) throw std::invalid_argument("Chain::mean: no samples");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(samples[0].rows(), samples[0].cols());
  for (const auto& s : samples) m += s;
  return m / static_cast<double>(samples.size());
}

Eigen::MatrixXd Chain::variance() const {
  if (samples.size() < 2) throw std::invalid_argument("Chain::variance: need two samples");
  const Eigen::MatrixXd m = mean();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (const auto& s : samples) v += (s - m).cwiseAbs2();
  return v / static_cast<double>(samples.size() - 1);
}

Chain wn_mcmc_run(const WhitenedPosterior& target, const Eigen::MatrixXd& init,
                  const McmcOptions& opts, Rng& rng) {
  if (!target.value || !target.gradient)
    throw std::invalid_argument("wn_mcmc_run: missing potential handles");
  if (!(opts.step_size > 0.0) || opts.leapfrog_steps < 1 || opts.n_samples < 1 ||
      opts.n_burnin < 0 || opts.thin < 1 || opts.beta < 0.0)
    throw std::invalid_argument("wn_mcmc_run: bad options");

  const double beta = (opts.variant == McmcVariant::hmc) ? 0.0 : opts.beta;
  const int n_leap = (opts.variant == McmcVariant::mmala) ? 1 : opts.leapfrog_steps;
  if (beta > 0.0 && !target.gauss_newton)
    throw std::invalid_argument("wn_mcmc_run: beta > 0 needs a Gauss-Newton handle");

  Eigen::MatrixXd zeta = init;
  double phi_full = target.value(zeta);
  if (!std::isfinite(phi_full))
    throw std::invalid_argument("wn_mcmc_run: potential not finite at the initial state");

  // Potential relative to the Gaussian reference; its gradient drives the kicks.
  auto phi_ref = [&](const Eigen::MatrixXd& z, double full) { return full - 0.5 * z.squaredNorm(); };

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double eps = opts.step_size;

  // Dual-averaging state (used only when adaptation is requested).
  const double adapt_mu = std::log(10.0 * opts.step_size);
  double adapt_h = 0.0, log_eps_bar = std::log(opts.step_size);
  const double adapt_gamma = 0.05, adapt_t0 = 10.0, adapt_kappa = 0.75;

  Chain chain;
  const int total = opts.n_burnin + opts.n_samples;
  chain.samples.reserve(opts.n_samples / opts.thin + 1);

  for (int it = 0; it < total; ++it) {
    LowRankMetric metric;
    const bool manifold = beta > 0.0;
    if (manifold)
      metric = build_metric(target, zeta, beta, opts.gn_rank, opts.gn_oversample, rng);

    auto g = [&](const Eigen::MatrixXd& z) -> Eigen::MatrixXd {
      Eigen::MatrixXd force = target.gradient(z) - z;  // grad of the reference-relative part
      if (!manifold) return -force;
      force -= beta * metric.apply_h(z);
      return -metric.apply_k(force);
    };

    Eigen::MatrixXd eta = standard_normal(rng, zeta.rows(), zeta.cols());
    if (manifold) eta = metric.apply_k_sqrt(eta);

    Eigen::MatrixXd z = zeta, e = eta, gz = g(zeta);
    const double e0 = phi_ref(zeta, phi_full) - (eps * eps / 8.0) * gz.squaredNorm() +
                      (manifold ? 0.5 * beta * metric.quad_h(eta) : 0.0);
    double e_run = 0.0;
    for (int i = 0; i < n_leap; ++i) {
      const double term_start = dot(gz, e);
      e += 0.5 * eps * gz;
      const double c = std::cos(eps), s = std::sin(eps);
      const Eigen::MatrixXd z_rot = c * z + s * e;
      e = -s * z + c * e;
      z = z_rot;
      gz = g(z);
      e += 0.5 * eps * gz;
      e_run += 0.5 * eps * (term_start + dot(gz, e));
    }
    const double phi_full_prop = target.value(z);
    const double e1 = phi_ref(z, phi_full_prop) - (eps * eps / 8.0) * gz.squaredNorm() +
                      (manifold ? 0.5 * beta * metric.quad_h(e) : 0.0);
    const double delta_e = e1 - e0 + e_run;

    const bool finite = std::isfinite(delta_e) && std::isfinite(phi_full_prop);
    const double accept_prob = finite ? std::min(1.0, std::exp(-delta_e)) : 0.0;
    const bool accept = finite && (delta_e <= 0.0 || unif(rng) < accept_prob);
    if (accept) {
      zeta = std::move(z);
      phi_full = phi_full_prop;
    }

    if (it < opts.n_burnin) {
      if (opts.target_accept) {
        const double m = it + 1.0;
        adapt_h = (1.0 - 1.0 / (m + adapt_t0)) * adapt_h +
                  (*opts.target_accept - accept_prob) / (m + adapt_t0);
        const double log_eps = adapt_mu - std::sqrt(m) / adapt_gamma * adapt_h;
        const double w = std::pow(m, -adapt_kappa);
        log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
        eps = std::exp(log_eps);
        if (it == opts.n_burnin - 1) eps = std::exp(log_eps_bar);
      }
    } else {
      ++chain.n_proposed;
      if (accept) ++chain.n_accepted;
      chain.accepted.push_back(accept ? 1 : 0);
      const int k = it - opts.n_burnin;
      if (k % opts.thin == 0) {
        chain.samples.push_back(zeta);
        chain.potential.push_back(phi_full);
      }
    }

    if (opts.progress && (it + 1) % opts.progress_every == 0) {
      char line[160];
      std::snprintf(line, sizeof line, "mcmc iter=%d potential=%.10g accept=%.3f eps=%.3e\n",
                    it + 1, phi_full,
                    chain.n_proposed > 0 ? chain.acceptance_rate() : accept_prob, eps);
      *opts.progress << line << std::flush;
    }
  }

  chain.step_size_final = eps;
  return chain;
}

}  // namespace stbp
