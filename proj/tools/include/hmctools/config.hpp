#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hmc/datagen.hpp"
#include "hmc/hrnet.hpp"
#include "hmc/loss.hpp"
#include "hmc/train.hpp"

namespace hmc::tools {

/// Plain key-value config text: one `key = value` per line, `#` comments,
/// lists comma-separated. Unknown keys are rejected so typos fail loudly.
struct KvConfig {
  std::map<std::string, std::string> values;
  std::string path;

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // throws if missing
  std::string get_or(const std::string& key, const std::string& fallback) const;
};

KvConfig parse_kv_file(const std::string& path);

std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
bool parse_bool(const std::string& text);

/// One sweep: proportions x variants (x replicates), sharing relabeled data
/// and initial weights within each (replicate, proportion) so variants
/// differ only in the loss they train with.
struct ExperimentConfig {
  // Data either comes from a generator spec or from files on disk.
  std::optional<SyntheticSpec> synthetic;
  std::string taxonomy_path;
  std::string train_path;
  std::string test_path;

  std::vector<double> proportions;
  std::vector<LossVariant> variants;
  bool degrade = false;
  int degrade_factor = 4;
  DegradeMode degrade_mode = DegradeMode::kBlockAverage;

  std::vector<int> trunk_dims{32};
  int block_dim = 32;
  TrainConfig train;

  int replicates = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
};

ExperimentConfig parse_experiment_config(const std::string& path);

}  // namespace hmc::tools
