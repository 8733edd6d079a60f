#include "hmctools/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hmc/errors.hpp"
#include "hmc/rng.hpp"
#include "hmc/state_space.hpp"
#include "hmctools/manifest.hpp"

namespace hmc::tools {

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct PreparedData {
  Taxonomy taxonomy;
  Dataset train;
  Dataset test;
};

PreparedData prepare_data(const ExperimentConfig& cfg) {
  if (cfg.synthetic) {
    auto [t, train, test] = generate(*cfg.synthetic);
    return {std::move(t), std::move(train), std::move(test)};
  }
  Taxonomy t = parse_taxonomy(read_text_file(cfg.taxonomy_path));
  Dataset train = read_dataset(cfg.train_path, t);
  Dataset test = read_dataset(cfg.test_path, t);
  return {std::move(t), std::move(train), std::move(test)};
}

// Seed substream tags; arbitrary distinct constants.
constexpr std::uint64_t kFitStream = 1000;
constexpr std::uint64_t kRelabelStream = 2000;
constexpr std::uint64_t kDegradeStream = 3000;

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid]
                                : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<double> ExperimentResult::median_oa(double proportion,
                                                LossVariant variant) const {
  std::vector<double> out;
  for (int l = 0; l < levels; ++l) {
    std::vector<double> vals;
    for (const CellResult& c : cells)
      if (c.proportion == proportion && c.variant == variant)
        vals.push_back(c.test_oa[static_cast<std::size_t>(l)]);
    out.push_back(median(std::move(vals)));
  }
  return out;
}

double ExperimentResult::median_au_prc(double proportion,
                                       LossVariant variant) const {
  std::vector<double> vals;
  for (const CellResult& c : cells)
    if (c.proportion == proportion && c.variant == variant)
      vals.push_back(c.test_au_prc);
  return median(std::move(vals));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir) {
  PreparedData data = prepare_data(cfg);
  const Taxonomy& t = data.taxonomy;
  const StateSpace ss(t);

  ExperimentResult result;
  result.levels = t.levels();
  for (int r = 0; r < cfg.replicates; ++r) {
    // One init/shuffle seed per replicate: within a replicate every cell
    // starts from the same weights, so cells differ only by their data
    // perturbation and loss.
    const std::uint64_t fit_seed =
        Rng::substream(cfg.seed, kFitStream + static_cast<std::uint64_t>(r));
    for (std::size_t pi = 0; pi < cfg.proportions.size(); ++pi) {
      const double p = cfg.proportions[pi];
      RelabelResult rl = relabel(
          t, data.train, p,
          Rng::substream(cfg.seed, kRelabelStream +
                                       static_cast<std::uint64_t>(r) * 100 + pi));
      Dataset cell_data =
          cfg.degrade
              ? degrade(rl.dataset, rl.selected, cfg.degrade_factor,
                        cfg.degrade_mode,
                        Rng::substream(cfg.seed,
                                       kDegradeStream +
                                           static_cast<std::uint64_t>(r) * 100 + pi))
              : std::move(rl.dataset);

      for (LossVariant variant : cfg.variants) {
        HrnConfig mc;
        mc.input_dim = data.train.input_dim;
        mc.trunk_dims = cfg.trunk_dims;
        mc.block_dim = cfg.block_dim;
        mc.levels = t.levels();
        mc.seed = fit_seed;
        TrainConfig tc = cfg.train;
        tc.seed = fit_seed;

        HrnModel m = init_model(mc, t);
        const std::vector<EpochLog> log = fit(m, t, ss, cell_data, tc, variant);
        const std::vector<PredictionRecord> records =
            evaluate_dataset(m, t, ss, data.test, variant);

        CellResult cell;
        cell.proportion = p;
        cell.variant = variant;
        cell.replicate = r;
        cell.test_oa = per_level_oa(t, records);
        cell.test_au_prc = average_prc(t, records).area;
        result.cells.push_back(std::move(cell));

        if (!out_dir.empty()) {
          const std::string cell_dir = out_dir + "/cells/r" +
                                       std::to_string(r) + "_p" +
                                       format_number(p) + "_" +
                                       to_string(variant);
          std::filesystem::create_directories(cell_dir);
          write_training_log_csv(cell_dir + "/train_log.csv", log, t.levels());
          save_checkpoint(cell_dir + "/checkpoint.bin", m, t.content_hash(),
                          variant);
        }
      }
    }
  }
  return result;
}

void write_experiment_outputs(const ExperimentConfig& cfg,
                              const ExperimentResult& result,
                              const std::string& out_dir,
                              const std::string& config_path) {
  std::filesystem::create_directories(out_dir);
  char buf[32];
  auto put = [&](std::ofstream& out, double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out << buf;
  };

  const std::string grid_path = out_dir + "/grid.csv";
  {
    std::ofstream out(grid_path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + grid_path + " for writing");
    out << "variant,metric";
    for (double p : cfg.proportions) out << ",p=" << format_number(p);
    out << '\n';
    for (LossVariant v : cfg.variants) {
      for (int l = 0; l < result.levels; ++l) {
        out << to_string(v) << ",oa_l" << l;
        for (double p : cfg.proportions) {
          out << ',';
          put(out, result.median_oa(p, v)[static_cast<std::size_t>(l)]);
        }
        out << '\n';
      }
      out << to_string(v) << ",au_prc";
      for (double p : cfg.proportions) {
        out << ',';
        put(out, result.median_au_prc(p, v));
      }
      out << '\n';
    }
    if (!out) throw IoError("write to " + grid_path + " failed");
  }

  const std::string long_path = out_dir + "/long.csv";
  {
    std::ofstream out(long_path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + long_path + " for writing");
    out << "proportion,variant,replicate,metric,value\n";
    for (const CellResult& c : result.cells) {
      for (int l = 0; l < result.levels; ++l) {
        out << format_number(c.proportion) << ',' << to_string(c.variant) << ','
            << c.replicate << ",oa_l" << l << ',';
        put(out, c.test_oa[static_cast<std::size_t>(l)]);
        out << '\n';
      }
      out << format_number(c.proportion) << ',' << to_string(c.variant) << ','
          << c.replicate << ",au_prc,";
      put(out, c.test_au_prc);
      out << '\n';
    }
    if (!out) throw IoError("write to " + long_path + " failed");
  }

  Json config_echo;
  if (cfg.synthetic) {
    const SyntheticSpec& s = *cfg.synthetic;
    config_echo["synthetic"] = {
        {"branching", s.branching},       {"input_dim", s.input_dim},
        {"separations", s.separations},   {"samples_per_leaf", s.samples_per_leaf},
        {"sigma", s.sigma},               {"test_fraction", s.test_fraction},
        {"seed", s.seed}};
  } else {
    config_echo["taxonomy"] = cfg.taxonomy_path;
    config_echo["train"] = cfg.train_path;
    config_echo["test"] = cfg.test_path;
  }
  config_echo["proportions"] = cfg.proportions;
  std::vector<std::string> variant_names;
  for (LossVariant v : cfg.variants) variant_names.emplace_back(to_string(v));
  config_echo["variants"] = variant_names;
  config_echo["degrade"] = cfg.degrade;
  config_echo["degrade_factor"] = cfg.degrade_factor;
  config_echo["degrade_mode"] =
      cfg.degrade_mode == DegradeMode::kBlockAverage ? "block" : "noise";
  config_echo["trunk_dims"] = cfg.trunk_dims;
  config_echo["block_dim"] = cfg.block_dim;
  config_echo["epochs"] = cfg.train.epochs;
  config_echo["batch_size"] = cfg.train.batch_size;
  config_echo["base_lr"] = cfg.train.base_lr;
  config_echo["trunk_lr_ratio"] = cfg.train.trunk_lr_ratio;
  config_echo["momentum"] = cfg.train.momentum;
  config_echo["weight_decay"] = cfg.train.weight_decay;
  config_echo["decoupled_weight_decay"] = cfg.train.decoupled_weight_decay;
  config_echo["reduction"] =
      cfg.train.reduction == Reduction::kMean ? "mean" : "sum";
  config_echo["ce_weight"] = cfg.train.ce_weight;
  config_echo["replicates"] = cfg.replicates;
  config_echo["seed"] = cfg.seed;

  Json inputs;
  inputs["config"] = input_entry(config_path);
  if (!cfg.synthetic) {
    inputs["taxonomy"] = input_entry(cfg.taxonomy_path);
    inputs["train"] = input_entry(cfg.train_path);
    inputs["test"] = input_entry(cfg.test_path);
  }

  Json manifest{{"command", "experiment"},
                {"config", config_echo},
                {"inputs", inputs},
                {"outputs", Json{{"grid", grid_path}, {"long", long_path}}}};
  write_manifest(out_dir + "/manifest.json", manifest);
}

}  // namespace hmc::tools
