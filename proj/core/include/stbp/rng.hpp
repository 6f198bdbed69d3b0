#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace stbp {

// All stochastic code draws from one engine type so that a fixed seed fixes
// every downstream stream.  Sub-streams are derived with derive_rng so runs
// stay reproducible when components consume different amounts of randomness.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

// Independent child stream: hash-mix the parent seed with a stream tag.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
  x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27; x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return Rng{x};
}

inline Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Eigen::MatrixXd standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

// chi^2(k) draw via Gamma(k/2, 2).
inline double chi_squared(Rng& rng, double k) {
  std::gamma_distribution<double> dist(0.5 * k, 2.0);
  return dist(rng);
}

}  // namespace stbp
