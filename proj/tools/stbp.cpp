#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "stbp/config.hpp"
#include "stbp/errors.hpp"
#include "stbp/io.hpp"
#include "stbp/metrics.hpp"
#include "stbp/phantom.hpp"
#include "stbp/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> model;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--out", args.out, "override the output directory");
  cmd->add_option("--model", args.model, "stbp | stgp | iid-time")
      ->check(CLI::IsMember({"stbp", "stgp", "iid-time"}));
  cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

stbp::ExperimentConfig load(const CommonArgs& args) {
  auto config = stbp::load_experiment_config(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (args.out) config.output_dir = *args.out;
  if (args.model) stbp::apply_model(config, *args.model);
  if (args.quiet) config.quiet = true;
  return config;
}

int cmd_phantom(const CommonArgs& args) {
  auto config = load(args);
  auto grid = stbp::build_grid(config.nx, config.ny, config.domain);
  Eigen::VectorXd t(config.time_steps);
  for (int j = 0; j < config.time_steps; ++j)
    t[j] = (j + 1) * config.t_max / config.time_steps;
  auto truth = config.experiment == "dynamic-ct"
                   ? stbp::phantom_dynamic_ct(
                         grid, t, config.shapes.empty() ? stbp::default_ct_shapes() : config.shapes)
                   : stbp::phantom_annulus(grid, t);
  std::filesystem::create_directories(config.output_dir);
  stbp::write_stba(config.output_dir / "truth.stba", truth.values);
  std::vector<int> frames = config.snapshot_frames;
  if (frames.empty())
    for (int j = 0; j < config.time_steps; ++j) frames.push_back(j);
  char name[64];
  for (int j : frames) {
    std::snprintf(name, sizeof(name), "truth_frame%03d.pgm", j);
    stbp::write_pgm(config.output_dir / name, stbp::to_image(grid, truth.values.col(j)));
  }
  if (!config.quiet)
    std::cerr << "phantom: wrote " << config.time_steps << " frames to "
              << config.output_dir.string() << "\n";
  return 0;
}

int cmd_run(const CommonArgs& args, bool force_map_only, bool force_sampling) {
  auto config = load(args);
  if (force_map_only) config.mcmc_samples = 0;
  if (force_sampling && config.mcmc_samples <= 0) config.mcmc_samples = 1000;
  auto result = stbp::run_experiment(config);
  std::cout << result.metrics_csv;
  return 0;
}

int cmd_metrics(const CommonArgs& args, const std::string& estimate_path) {
  auto config = load(args);
  auto problem = stbp::build_problem(config);
  std::filesystem::path path =
      estimate_path.empty() ? config.output_dir / "map.stba" : std::filesystem::path(estimate_path);
  Eigen::MatrixXd est = stbp::read_stba_matrix(path);
  if (est.rows() != problem.truth.values.rows() || est.cols() != problem.truth.values.cols())
    throw stbp::ConfigError("estimate shape does not match the configured experiment");
  stbp::SpaceTimeField field = problem.truth;
  field.values = est;
  const double loglik = stbp::log_likelihood(field, problem.obs, problem.op, problem.noise);
  auto norm = config.rle_norm == "infty-1" ? stbp::RleNorm::infty_1 : stbp::RleNorm::frobenius;
  auto report = stbp::evaluate_metrics(est, problem.truth.values, loglik, norm);
  std::cout << stbp::metrics_csv_header() << "\n"
            << stbp::metrics_csv_row(config.model, problem.prior.I(), problem.prior.J(), report,
                                     config.seed)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatiotemporal Besov inversion toolkit"};
  app.require_subcommand(1);

  CommonArgs phantom_args, map_args, mcmc_args, metrics_args, run_args;
  std::string estimate_path;

  auto* phantom = app.add_subcommand("phantom", "generate the synthetic truth");
  add_common(phantom, phantom_args);
  auto* map = app.add_subcommand("map", "MAP estimate only");
  add_common(map, map_args);
  auto* mcmc = app.add_subcommand("mcmc", "full pipeline with posterior sampling");
  add_common(mcmc, mcmc_args);
  auto* metrics = app.add_subcommand("metrics", "score a stored estimate against the truth");
  add_common(metrics, metrics_args);
  metrics->add_option("--estimate", estimate_path, "estimate .stba (default <out>/map.stba)");
  auto* run = app.add_subcommand("run", "full pipeline as configured");
  add_common(run, run_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (phantom->parsed()) return cmd_phantom(phantom_args);
    if (map->parsed()) return cmd_run(map_args, true, false);
    if (mcmc->parsed()) return cmd_run(mcmc_args, false, true);
    if (metrics->parsed()) return cmd_metrics(metrics_args, estimate_path);
    if (run->parsed()) return cmd_run(run_args, false, false);
  } catch (const stbp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const stbp::numerical_rank_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
