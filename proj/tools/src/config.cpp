#include "hmctools/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>

#include "hmc/errors.hpp"

namespace hmc::tools {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& text, const std::string& what) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw ConfigError("bad " + what + " value '" + text + "'");
  return v;
}

long parse_long(const std::string& text, const std::string& what) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw ConfigError("bad " + what + " value '" + text + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find(',', start);
    const std::string piece =
        trim(pos == std::string::npos ? text.substr(start)
                                      : text.substr(start, pos - start));
    if (!piece.empty()) parts.push_back(piece);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

bool KvConfig::has(const std::string& key) const {
  return values.find(key) != values.end();
}

std::string KvConfig::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end())
    throw ConfigError(path + ": missing required key '" + key + "'");
  return it->second;
}

std::string KvConfig::get_or(const std::string& key,
                             const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

KvConfig parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  KvConfig cfg;
  cfg.path = path;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    if (!cfg.values.emplace(key, value).second)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
  }
  return cfg;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& piece : split_list(text))
    out.push_back(parse_double(piece, "list entry"));
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const std::string& piece : split_list(text))
    out.push_back(static_cast<int>(parse_long(piece, "list entry")));
  return out;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError("bad boolean value '" + text + "'");
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  const KvConfig kv = parse_kv_file(path);

  static const std::set<std::string> known{
      "taxonomy",      "train",        "test",
      "branching",     "input_dim",    "separations",
      "samples_per_leaf", "sigma",     "test_fraction",
      "proportions",   "variants",     "degrade",
      "degrade_factor", "degrade_mode",
      "trunk_dims",    "block_dim",
      "epochs",        "batch_size",   "base_lr",
      "trunk_lr_ratio", "momentum",    "weight_decay",
      "decoupled_weight_decay",        "reduction",
      "ce_weight",     "replicates",   "seed",
      "out_dir"};
  for (const auto& [key, value] : kv.values)
    if (known.find(key) == known.end())
      throw ConfigError(path + ": unknown key '" + key + "'");

  ExperimentConfig cfg;
  const bool file_mode = kv.has("taxonomy");
  if (file_mode) {
    cfg.taxonomy_path = kv.get("taxonomy");
    cfg.train_path = kv.get("train");
    cfg.test_path = kv.get("test");
    for (const char* key : {"branching", "separations", "samples_per_leaf"})
      if (kv.has(key))
        throw ConfigError(path + ": '" + key +
                          "' conflicts with file-backed data");
  } else {
    SyntheticSpec spec;
    spec.branching = parse_int_list(kv.get("branching"));
    spec.input_dim = static_cast<int>(parse_long(kv.get("input_dim"), "input_dim"));
    spec.separations = parse_double_list(kv.get("separations"));
    spec.samples_per_leaf = static_cast<int>(
        parse_long(kv.get("samples_per_leaf"), "samples_per_leaf"));
    spec.sigma = parse_double(kv.get_or("sigma", "1.0"), "sigma");
    spec.test_fraction =
        parse_double(kv.get_or("test_fraction", "0.2"), "test_fraction");
    cfg.synthetic = std::move(spec);
  }

  cfg.proportions = parse_double_list(kv.get("proportions"));
  if (cfg.proportions.empty())
    throw ConfigError(path + ": proportions list is empty");
  for (double p : cfg.proportions)
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError(path + ": proportion out of [0, 1]");

  for (const std::string& name : split_list(kv.get("variants")))
    cfg.variants.push_back(loss_variant_from_string(name));
  if (cfg.variants.empty())
    throw ConfigError(path + ": variants list is empty");

  cfg.degrade = parse_bool(kv.get_or("degrade", "false"));
  cfg.degrade_factor = static_cast<int>(
      parse_long(kv.get_or("degrade_factor", "4"), "degrade_factor"));
  const std::string mode = kv.get_or("degrade_mode", "block");
  if (mode == "block") cfg.degrade_mode = DegradeMode::kBlockAverage;
  else if (mode == "noise") cfg.degrade_mode = DegradeMode::kAdditiveNoise;
  else throw ConfigError(path + ": degrade_mode must be block or noise");

  if (kv.has("trunk_dims")) cfg.trunk_dims = parse_int_list(kv.get("trunk_dims"));
  cfg.block_dim =
      static_cast<int>(parse_long(kv.get_or("block_dim", "32"), "block_dim"));

  cfg.train.epochs = static_cast<int>(parse_long(kv.get("epochs"), "epochs"));
  cfg.train.batch_size = static_cast<int>(
      parse_long(kv.get_or("batch_size", "8"), "batch_size"));
  cfg.train.base_lr = parse_double(kv.get_or("base_lr", "0.05"), "base_lr");
  cfg.train.trunk_lr_ratio =
      parse_double(kv.get_or("trunk_lr_ratio", "0.1"), "trunk_lr_ratio");
  cfg.train.momentum = parse_double(kv.get_or("momentum", "0.9"), "momentum");
  cfg.train.weight_decay =
      parse_double(kv.get_or("weight_decay", "0.0005"), "weight_decay");
  cfg.train.decoupled_weight_decay =
      parse_bool(kv.get_or("decoupled_weight_decay", "false"));
  const std::string reduction = kv.get_or("reduction", "mean");
  if (reduction == "mean") cfg.train.reduction = Reduction::kMean;
  else if (reduction == "sum") cfg.train.reduction = Reduction::kSum;
  else throw ConfigError(path + ": reduction must be mean or sum");
  cfg.train.ce_weight = parse_double(kv.get_or("ce_weight", "1.0"), "ce_weight");

  cfg.replicates = static_cast<int>(
      parse_long(kv.get_or("replicates", "1"), "replicates"));
  if (cfg.replicates < 1)
    throw ConfigError(path + ": replicates must be at least 1");
  cfg.seed = static_cast<std::uint64_t>(parse_long(kv.get_or("seed", "0"), "seed"));
  if (cfg.synthetic) cfg.synthetic->seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.out_dir = kv.get_or("out_dir", "");
  return cfg;
}

}  // namespace hmc::tools
