#include "stbp/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace stbp {
namespace {

std::string trim(const std::string& s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto b = std::find_if_not(s.begin(), s.end(), is_space);
  auto e = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
  return b < e ? std::string(b, e) : std::string();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

}  // namespace

ConfigMap ConfigMap::parse_stream(std::istream& in) {
  ConfigMap out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail("config line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        fail("config line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      fail("config line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (!out.kv_.emplace(key, value).second)
      fail("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return out;
}

ConfigMap ConfigMap::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path.string());
  return parse_stream(in);
}

ConfigMap ConfigMap::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse_stream(in);
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  consumed_.insert(key);
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  consumed_.insert(key);
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const char* cstr = it->second.c_str();
  char* end = nullptr;
  double v = std::strtod(cstr, &end);
  if (end == cstr || *end != '\0')
    fail("config key '" + key + "': expected a number, got '" + it->second + "'");
  return v;
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
  consumed_.insert(key);
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const char* cstr = it->second.c_str();
  char* end = nullptr;
  long v = std::strtol(cstr, &end, 10);
  if (end == cstr || *end != '\0')
    fail("config key '" + key + "': expected an integer, got '" + it->second + "'");
  return static_cast<int>(v);
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const {
  consumed_.insert(key);
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const char* cstr = it->second.c_str();
  char* end = nullptr;
  unsigned long long v = std::strtoull(cstr, &end, 10);
  if (end == cstr || *end != '\0')
    fail("config key '" + key + "': expected an unsigned integer, got '" + it->second + "'");
  return static_cast<std::uint64_t>(v);
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  consumed_.insert(key);
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::string v = lower(trim(it->second));
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail("config key '" + key + "': expected a boolean, got '" + it->second + "'");
}

std::vector<std::string> ConfigMap::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto& [k, v] : kv_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

void ConfigMap::require_all_consumed() const {
  std::vector<std::string> unknown;
  for (auto& [k, v] : kv_)
    if (!consumed_.count(k)) unknown.push_back(k);
  if (unknown.empty()) return;
  std::string msg = "unknown config key(s):";
  for (auto& k : unknown) msg += " '" + k + "'";
  fail(msg);
}

namespace {

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    const char* cstr = tok.c_str();
    char* end = nullptr;
    long v = std::strtol(cstr, &end, 10);
    if (end == cstr || *end != '\0')
      fail("config key '" + key + "': bad list entry '" + tok + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void expect_choice(const std::string& key, const std::string& value,
                   std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string msg = "config key '" + key + "': '" + value + "' is not one of {";
  bool first = true;
  for (const char* a : allowed) {
    if (!first) msg += ", ";
    msg += a;
    first = false;
  }
  fail(msg + "}");
}

std::vector<MovingShape> parse_shapes(const ConfigMap& map) {
  std::set<std::string> sections;
  for (auto& key : map.keys_with_prefix("phantom.")) {
    auto rest = key.substr(8);  // past "phantom."
    auto dot = rest.find('.');
    if (dot == std::string::npos)
      fail("config key '" + key + "': phantom entries live in [phantom.shapeN] sections");
    sections.insert(rest.substr(0, dot));
  }
  std::vector<MovingShape> shapes;
  for (auto& sec : sections) {
    if (sec.rfind("shape", 0) != 0)
      fail("config section 'phantom." + sec + "': expected phantom.shapeN");
    std::string p = "phantom." + sec + ".";
    MovingShape s;
    std::string kind = lower(map.get_string(p + "kind", "disk"));
    expect_choice(p + "kind", kind, {"disk", "rect"});
    s.kind = kind == "disk" ? MovingShape::Kind::disk : MovingShape::Kind::rect;
    s.cx = map.get_double(p + "cx", 0.0);
    s.cy = map.get_double(p + "cy", 0.0);
    s.vx = map.get_double(p + "vx", 0.0);
    s.vy = map.get_double(p + "vy", 0.0);
    s.radius = map.get_double(p + "radius", 0.2);
    s.hx = map.get_double(p + "hx", 0.2);
    s.hy = map.get_double(p + "hy", 0.2);
    s.value = map.get_double(p + "value", 1.0);
    shapes.push_back(s);
  }
  return shapes;
}

ExperimentConfig from_map(const ConfigMap& map) {
  ExperimentConfig c;
  c.experiment = lower(map.get_string("experiment", c.experiment));
  if (c.experiment == "annulus") c.experiment = "annulus-regression";
  expect_choice("experiment", c.experiment, {"annulus-regression", "dynamic-ct"});
  c.seed = map.get_u64("seed", c.seed);
  c.output_dir = map.get_string("output", c.output_dir.string());
  c.model = lower(map.get_string("model", c.model));
  expect_choice("model", c.model, {"stbp", "stgp", "iid-time"});

  c.nx = map.get_int("grid.nx", c.nx);
  c.ny = map.get_int("grid.ny", c.ny);
  c.domain.x0 = map.get_double("grid.x0", c.domain.x0);
  c.domain.x1 = map.get_double("grid.x1", c.domain.x1);
  c.domain.y0 = map.get_double("grid.y0", c.domain.y0);
  c.domain.y1 = map.get_double("grid.y1", c.domain.y1);
  if (c.nx < 1 || c.ny < 1) fail("grid.nx and grid.ny must be positive");

  c.time_steps = map.get_int("time.steps", c.time_steps);
  c.t_max = map.get_double("time.t_max", c.t_max);
  if (c.time_steps < 1) fail("time.steps must be positive");
  if (!(c.t_max > 0)) fail("time.t_max must be positive");

  c.q = map.get_double("prior.q", c.q);
  c.s = map.get_double("prior.s", c.s);
  if (lower(map.get_string("prior.kappa", "")) == "auto")
    c.kappa_auto = true;
  else
    c.kappa = map.get_double("prior.kappa", c.kappa);
  c.truncation = map.get_int("prior.truncation", c.truncation);
  c.basis = lower(map.get_string("prior.basis", c.basis));
  expect_choice("prior.basis", c.basis, {"fourier-cosine", "haar-wavelet"});
  if (!(c.q > 0 && c.q <= 2)) fail("prior.q must lie in (0, 2]");
  if (!(c.kappa > 0)) fail("prior.kappa must be positive");
  if (c.truncation < 0) fail("prior.truncation must be nonnegative");

  c.nu = map.get_double("kernel.nu", c.nu);
  c.rho = map.get_double("kernel.rho", c.rho);
  c.s_exp = map.get_double("kernel.s_exp", c.s_exp);
  c.kernel_identity = map.get_bool("kernel.identity", c.kernel_identity);
  if (!(c.nu > 0) || !(c.rho > 0) || !(c.s_exp > 0))
    fail("kernel.nu, kernel.rho, kernel.s_exp must be positive");

  c.op = lower(map.get_string("forward.op", c.op));
  if (!c.op.empty()) expect_choice("forward.op", c.op, {"selection", "radon"});
  c.noise_sigma = map.get_double("forward.noise_sigma", c.noise_sigma);
  c.noise_relative = map.get_double("forward.noise_relative", c.noise_relative);
  c.n_angles = map.get_int("forward.angles", c.n_angles);
  c.n_det = map.get_int("forward.detectors", c.n_det);
  c.angle_span_deg = map.get_double("forward.angle_span_deg", c.angle_span_deg);
  c.interleave = map.get_bool("forward.interleave", c.interleave);
  if (c.noise_relative < 0) fail("forward.noise_relative must be nonnegative");
  if (c.noise_relative == 0 && !(c.noise_sigma > 0))
    fail("forward.noise_sigma must be positive");
  if (c.n_angles < 1 || c.n_det < 2)
    fail("forward.angles must be >= 1 and forward.detectors >= 2");

  c.shapes = parse_shapes(map);

  c.map_max_iter = map.get_int("map.max_iter", c.map_max_iter);
  c.map_grad_tol = map.get_double("map.grad_tol", c.map_grad_tol);
  c.map_memory = map.get_int("map.memory", c.map_memory);
  c.init_scale = map.get_double("map.init_scale", c.init_scale);
  c.map_jacobian = map.get_bool("map.jacobian", c.map_jacobian);
  if (c.map_max_iter < 0 || c.map_memory < 1)
    fail("map.max_iter must be >= 0 and map.memory >= 1");

  c.mcmc_samples = map.get_int("mcmc.samples", c.mcmc_samples);
  c.mcmc_burnin = map.get_int("mcmc.burnin", c.mcmc_burnin);
  c.mcmc_step = map.get_double("mcmc.step_size", c.mcmc_step);
  c.mcmc_leapfrog = map.get_int("mcmc.leapfrog_steps", c.mcmc_leapfrog);
  c.mcmc_beta = map.get_double("mcmc.beta", c.mcmc_beta);
  c.mcmc_variant = lower(map.get_string("mcmc.variant", c.mcmc_variant));
  expect_choice("mcmc.variant", c.mcmc_variant, {"hmc", "mmala"});
  c.mcmc_target_accept = map.get_double("mcmc.target_accept", c.mcmc_target_accept);
  c.mcmc_thin = map.get_int("mcmc.thin", c.mcmc_thin);
  c.mcmc_init = lower(map.get_string("mcmc.init", c.mcmc_init));
  expect_choice("mcmc.init", c.mcmc_init, {"map", "zero"});
  if (c.mcmc_samples < 0 || c.mcmc_burnin < 0 || c.mcmc_thin < 1)
    fail("mcmc.samples/burnin must be >= 0 and mcmc.thin >= 1");
  if (!(c.mcmc_step > 0) || c.mcmc_leapfrog < 1)
    fail("mcmc.step_size must be positive and mcmc.leapfrog_steps >= 1");
  if (c.mcmc_beta < 0) fail("mcmc.beta must be nonnegative");
  if (c.mcmc_target_accept < 0 || c.mcmc_target_accept >= 1)
    fail("mcmc.target_accept must lie in [0, 1)");

  c.rle_norm = lower(map.get_string("metrics.rle_norm", c.rle_norm));
  expect_choice("metrics.rle_norm", c.rle_norm, {"frobenius", "infty-1"});
  c.snapshot_frames = parse_int_list(map.get_string("metrics.frames", ""), "metrics.frames");
  for (int f : c.snapshot_frames)
    if (f < 0 || f >= c.time_steps) fail("metrics.frames entry out of range");

  map.require_all_consumed();
  apply_model(c, c.model);
  return c;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return from_map(ConfigMap::parse_file(path));
}

ExperimentConfig load_experiment_config_string(const std::string& text) {
  return from_map(ConfigMap::parse_string(text));
}

void apply_model(ExperimentConfig& config, const std::string& model) {
  expect_choice("model", model, {"stbp", "stgp", "iid-time"});
  config.model = model;
  if (model == "stgp") config.q = 2.0;
  if (model == "iid-time") config.kernel_identity = true;
}

}  // namespace stbp
