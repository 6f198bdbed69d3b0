#pragma once

#include <optional>
#include <string>

#include "stbp/config.hpp"
#include "stbp/forward.hpp"
#include "stbp/infer.hpp"
#include "stbp/metrics.hpp"
#include "stbp/prior.hpp"

namespace stbp {

// Everything a subcommand needs: prior, synthetic truth, operator, data.
// Observation noise is drawn from a stream derived from config.seed, so the
// same config and seed always produce the same problem instance.
struct Problem {
  ExperimentConfig config;
  PriorSpec prior;
  SpaceTimeField truth;
  ForwardOp op;
  NoiseModel noise;
  Observations obs;
};

Problem build_problem(const ExperimentConfig& config);

struct ExperimentResult {
  MapResult map;             // whitened-space optimizer output (final solve)
  SpaceTimeField estimate;   // MAP mapped to the field
  double kappa_used = 0.0;   // final magnitude (differs from config under auto)
  std::optional<Chain> chain;
  std::optional<SpaceTimeField> posterior_mean;
  MetricReport metrics;      // of the MAP estimate
  std::string metrics_csv;   // exact text written to metrics.csv
};

// Full pipeline: phantom, data, MAP, optional sampling, metrics.  With
// write_artifacts set, drops .stba arrays, PGM snapshots, the optimizer trace
// and metrics.csv into config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_artifacts = true);

ExperimentResult run_experiment_on(const Problem& problem, bool write_artifacts = true);

}  // namespace stbp
