#pragma once

#include <string>
#include <vector>

#include "hmctools/config.hpp"

namespace hmc::tools {

struct CellResult {
  double proportion = 0.0;
  LossVariant variant = LossVariant::kCombinatorial;
  int replicate = 0;
  std::vector<double> test_oa;  // per level
  double test_au_prc = 0.0;
};

struct ExperimentResult {
  int levels = 0;
  std::vector<CellResult> cells;  // replicate-major, then proportion, variant

  /// Median over replicates of per-level accuracy at (proportion, variant);
  /// index l is level l.
  std::vector<double> median_oa(double proportion, LossVariant variant) const;
  double median_au_prc(double proportion, LossVariant variant) const;
};

double median(std::vector<double> values);

/// Runs the full sweep. With a non-empty out_dir, each cell's training log
/// and checkpoint land in an isolated subdirectory under it.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir = "");

/// grid.csv (medians, one column per proportion) and long.csv (one row per
/// cell and metric) plus the manifest.
void write_experiment_outputs(const ExperimentConfig& cfg,
                              const ExperimentResult& result,
                              const std::string& out_dir,
                              const std::string& config_path);

}  // namespace hmc::tools
