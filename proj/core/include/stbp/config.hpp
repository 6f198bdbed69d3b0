#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stbp/grid.hpp"
#include "stbp/phantom.hpp"

namespace stbp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat view of a sectioned key = value file: "[a.b]\nkey = v" parses to
// "a.b.key".  Typed getters mark keys consumed so leftovers can be rejected.
class ConfigMap {
 public:
  static ConfigMap parse_file(const std::filesystem::path& path);
  static ConfigMap parse_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  // Throws ConfigError naming every key no getter has touched.
  void require_all_consumed() const;

 private:
  static ConfigMap parse_stream(std::istream& in);

  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> consumed_;
};

struct ExperimentConfig {
  std::string experiment = "annulus-regression";  // annulus-regression | dynamic-ct
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::string model = "stbp";  // stbp | stgp | iid-time

  int nx = 16, ny = 16;
  Rect domain;

  int time_steps = 10;
  double t_max = 1.0;

  double q = 1.0, s = 1.0, kappa = 1.0;
  // prior.kappa = auto: alternate point estimation with conjugate magnitude
  // mode updates instead of fixing kappa.
  bool kappa_auto = false;
  int truncation = 0;  // 0 resolves to min(2000, nx*ny)
  std::string basis = "fourier-cosine";

  double nu = 0.5, rho = 0.1, s_exp = 1.0;
  bool kernel_identity = false;

  std::string op;               // empty resolves by experiment
  double noise_sigma = 0.1;     // absolute noise std
  double noise_relative = 0.0;  // per-frame relative level when > 0
  int n_angles = 11, n_det = 95;
  double angle_span_deg = 180.0;
  bool interleave = true;  // shift angle sets across frames

  std::vector<MovingShape> shapes;  // dynamic-ct scene; empty = default

  int map_max_iter = 1000;
  double map_grad_tol = 1e-5;
  int map_memory = 10;
  double init_scale = 0.1;
  // Optimize the exact whitened (Lebesgue) density, misfit + ||Z||_F^2/2.
  // With this off the objective keeps the transport-free density form, whose
  // log r term is unbounded below at zero coefficient columns for q < 2.
  bool map_jacobian = true;

  int mcmc_samples = 0;  // 0 skips the sampling stage
  int mcmc_burnin = 1000;
  double mcmc_step = 0.1;
  int mcmc_leapfrog = 5;
  double mcmc_beta = 0.0;
  std::string mcmc_variant = "hmc";
  double mcmc_target_accept = 0.0;  // 0 = fixed step size
  int mcmc_thin = 1;
  std::string mcmc_init = "map";  // map | zero

  std::string rle_norm = "frobenius";  // frobenius | infty-1
  std::vector<int> snapshot_frames;

  bool quiet = false;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig load_experiment_config_string(const std::string& text);

// --model override: stgp pins q = 2, iid-time pins the identity kernel.
void apply_model(ExperimentConfig& config, const std::string& model);

}  // namespace stbp
