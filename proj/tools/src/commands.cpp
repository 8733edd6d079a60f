#include "hmctools/commands.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hmc/datagen.hpp"
#include "hmc/errors.hpp"
#include "hmc/hashing.hpp"
#include "hmc/hrnet.hpp"
#include "hmc/rng.hpp"
#include "hmc/state_space.hpp"
#include "hmc/train.hpp"
#include "hmctools/config.hpp"
#include "hmctools/experiment.hpp"
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

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write to " + path + " failed");
}

std::string format4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

struct ValidateArgs {
  std::string taxonomy;
  std::string out_dir;
  std::uint64_t seed = 0;
};

void cmd_validate(const ValidateArgs& a) {
  const Taxonomy t = parse_taxonomy(read_text_file(a.taxonomy));
  std::string counts;
  for (int l = 0; l < t.levels(); ++l) {
    if (l > 0) counts += '/';
    counts += std::to_string(t.nodes_at_level(l).size());
  }
  std::cout << "n=" << t.n() << ", rows=" << t.n() + 1 << ", levels="
            << t.levels() << " (" << counts << ")\n";
  if (!a.out_dir.empty()) {
    std::filesystem::create_directories(a.out_dir);
    Json report{{"n", t.n()},
                {"rows", t.n() + 1},
                {"levels", t.levels()},
                {"content_hash", hash_hex(t.content_hash())}};
    std::vector<std::size_t> level_counts;
    for (int l = 0; l < t.levels(); ++l)
      level_counts.push_back(t.nodes_at_level(l).size());
    report["level_counts"] = level_counts;
    write_manifest(a.out_dir + "/manifest.json",
                   Json{{"command", "validate"},
                        {"config", Json{{"seed", a.seed}}},
                        {"inputs", Json{{"taxonomy", input_entry(a.taxonomy)}}},
                        {"report", report}});
  }
}

struct GenArgs {
  std::string branching;
  int input_dim = 0;
  std::string separations;
  int samples_per_leaf = 0;
  double sigma = 1.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::string out_dir;
};

void cmd_gen(const GenArgs& a) {
  SyntheticSpec spec;
  spec.branching = parse_int_list(a.branching);
  spec.input_dim = a.input_dim;
  spec.separations = parse_double_list(a.separations);
  spec.samples_per_leaf = a.samples_per_leaf;
  spec.sigma = a.sigma;
  spec.test_fraction = a.test_fraction;
  spec.seed = a.seed;

  const auto [t, train, test] = generate(spec);
  std::filesystem::create_directories(a.out_dir);
  const std::string taxonomy_path = a.out_dir + "/taxonomy.tsv";
  const std::string train_path = a.out_dir + "/train.tsv";
  const std::string test_path = a.out_dir + "/test.tsv";
  write_text_file(taxonomy_path, t.serialize());
  write_dataset(train_path, train);
  write_dataset(test_path, test);

  write_manifest(
      a.out_dir + "/manifest.json",
      Json{{"command", "gen"},
           {"config", Json{{"branching", spec.branching},
                           {"input_dim", spec.input_dim},
                           {"separations", spec.separations},
                           {"samples_per_leaf", spec.samples_per_leaf},
                           {"sigma", spec.sigma},
                           {"test_fraction", spec.test_fraction},
                           {"seed", spec.seed}}},
           {"inputs", Json::object()},
           {"outputs", Json{{"taxonomy", input_entry(taxonomy_path)},
                            {"train", input_entry(train_path)},
                            {"test", input_entry(test_path)}}}});
  std::cout << "taxonomy n=" << t.n() << " levels=" << t.levels() << "; train "
            << train.samples.size() << " samples; test " << test.samples.size()
            << " samples\n";
}

struct RelabelArgs {
  std::string taxonomy;
  std::string input;
  double proportion = 0.0;
  int degrade_factor = 0;  // 0 = no degradation
  std::string degrade_mode = "block";
  std::uint64_t seed = 0;
  std::string out_dir;
};

void cmd_relabel(const RelabelArgs& a) {
  const Taxonomy t = parse_taxonomy(read_text_file(a.taxonomy));
  const Dataset input = read_dataset(a.input, t);
  RelabelResult rl = relabel(t, input, a.proportion, a.seed);
  Dataset output = std::move(rl.dataset);
  if (a.degrade_factor > 0) {
    DegradeMode mode;
    if (a.degrade_mode == "block") mode = DegradeMode::kBlockAverage;
    else if (a.degrade_mode == "noise") mode = DegradeMode::kAdditiveNoise;
    else throw ConfigError("degrade mode must be block or noise");
    output = degrade(output, rl.selected, a.degrade_factor, mode,
                     Rng::substream(a.seed, 1));
  }
  std::filesystem::create_directories(a.out_dir);
  const std::string out_path = a.out_dir + "/relabeled.tsv";
  write_dataset(out_path, output);
  write_manifest(
      a.out_dir + "/manifest.json",
      Json{{"command", "relabel"},
           {"config", Json{{"proportion", a.proportion},
                           {"degrade_factor", a.degrade_factor},
                           {"degrade_mode", a.degrade_mode},
                           {"seed", a.seed}}},
           {"inputs", Json{{"taxonomy", input_entry(a.taxonomy)},
                           {"dataset", input_entry(a.input)}}},
           {"outputs", Json{{"dataset", input_entry(out_path)}}},
           {"selected_count", rl.selected.size()}});
  std::cout << "relabeled " << rl.selected.size() << " of "
            << input.samples.size() << " samples\n";
}

struct TrainArgs {
  std::string taxonomy;
  std::string data;
  std::string trunk_dims = "32";
  int block_dim = 32;
  std::string variant = "combinatorial";
  TrainConfig train;
  std::string out_dir;
};

void cmd_train(const TrainArgs& a) {
  const Taxonomy t = parse_taxonomy(read_text_file(a.taxonomy));
  const Dataset data = read_dataset(a.data, t);
  const StateSpace ss(t);
  const LossVariant variant = loss_variant_from_string(a.variant);

  HrnConfig mc;
  mc.input_dim = data.input_dim;
  mc.trunk_dims = parse_int_list(a.trunk_dims);
  mc.block_dim = a.block_dim;
  mc.levels = t.levels();
  mc.seed = a.train.seed;
  HrnModel m = init_model(mc, t);

  const std::vector<EpochLog> log =
      fit(m, t, ss, data, a.train, variant, [&](const EpochLog& e) {
        std::cout << "epoch " << e.epoch << " lr=" << format4(e.lr)
                  << " loss=" << format4(e.train_loss) << " val_oa_leaf="
                  << format4(e.val_oa.back()) << " val_au_prc="
                  << format4(e.val_au_prc) << '\n';
      });

  std::filesystem::create_directories(a.out_dir);
  const std::string ckpt_path = a.out_dir + "/checkpoint.bin";
  const std::string log_path = a.out_dir + "/train_log.csv";
  save_checkpoint(ckpt_path, m, t.content_hash(), variant);
  write_training_log_csv(log_path, log, t.levels());

  const EpochLog& last = log.back();
  write_manifest(
      a.out_dir + "/manifest.json",
      Json{{"command", "train"},
           {"config", Json{{"trunk_dims", mc.trunk_dims},
                           {"block_dim", mc.block_dim},
                           {"variant", a.variant},
                           {"epochs", a.train.epochs},
                           {"batch_size", a.train.batch_size},
                           {"base_lr", a.train.base_lr},
                           {"trunk_lr_ratio", a.train.trunk_lr_ratio},
                           {"momentum", a.train.momentum},
                           {"weight_decay", a.train.weight_decay},
                           {"decoupled_weight_decay",
                            a.train.decoupled_weight_decay},
                           {"reduction", a.train.reduction == Reduction::kMean
                                             ? "mean"
                                             : "sum"},
                           {"ce_weight", a.train.ce_weight},
                           {"seed", a.train.seed}}},
           {"inputs", Json{{"taxonomy", input_entry(a.taxonomy)},
                           {"dataset", input_entry(a.data)}}},
           {"outputs", Json{{"checkpoint", input_entry(ckpt_path)},
                            {"log", input_entry(log_path)}}},
           {"final", Json{{"loss", last.train_loss},
                          {"loss_hier", last.train_hier},
                          {"loss_ce", last.train_ce},
                          {"val_oa", last.val_oa},
                          {"val_au_prc", last.val_au_prc}}}});
}

struct EvalArgs {
  std::string taxonomy;
  std::string checkpoint;
  std::string data;
  std::uint64_t seed = 0;
  std::string out_dir;
};

void cmd_eval(const EvalArgs& a) {
  const Taxonomy t = parse_taxonomy(read_text_file(a.taxonomy));
  const Dataset data = read_dataset(a.data, t);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const HrnModel m = model_from_checkpoint(ckpt, t);
  const StateSpace ss(t);

  const std::vector<PredictionRecord> records =
      evaluate_dataset(m, t, ss, data, ckpt.variant);
  const std::vector<double> oa = per_level_oa(t, records);
  const double area = average_prc(t, records).area;

  std::filesystem::create_directories(a.out_dir);
  const std::string metrics_path = a.out_dir + "/metrics.csv";
  {
    std::ofstream out(metrics_path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + metrics_path + " for writing");
    for (int l = 0; l < t.levels(); ++l) out << "oa_l" << l << ',';
    out << "au_prc\n";
    char buf[32];
    for (double v : oa) {
      std::snprintf(buf, sizeof buf, "%.10g", v);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.10g", area);
    out << buf << '\n';
    if (!out) throw IoError("write to " + metrics_path + " failed");
  }

  write_manifest(a.out_dir + "/manifest.json",
                 Json{{"command", "eval"},
                      {"config", Json{{"variant", to_string(ckpt.variant)},
                                      {"seed", a.seed}}},
                      {"inputs", Json{{"taxonomy", input_entry(a.taxonomy)},
                                      {"checkpoint", input_entry(a.checkpoint)},
                                      {"dataset", input_entry(a.data)}}},
                      {"outputs", Json{{"metrics", input_entry(metrics_path)}}},
                      {"metrics", Json{{"oa", oa}, {"au_prc", area}}}});

  for (int l = 0; l < t.levels(); ++l)
    std::cout << "oa_l" << l << "=" << format4(oa[static_cast<std::size_t>(l)])
              << ' ';
  std::cout << "au_prc=" << format4(area) << '\n';
}

struct ExperimentArgs {
  std::string config;
  std::string out_dir;
  std::int64_t seed = -1;  // <0 = keep the config's seed
};

void cmd_experiment(const ExperimentArgs& a) {
  ExperimentConfig cfg = parse_experiment_config(a.config);
  if (a.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(a.seed);
    cfg.train.seed = cfg.seed;
    if (cfg.synthetic) cfg.synthetic->seed = cfg.seed;
  }
  const std::string out_dir = a.out_dir.empty() ? cfg.out_dir : a.out_dir;
  if (out_dir.empty())
    throw ConfigError("no output directory: set out_dir or pass --out-dir");
  std::filesystem::create_directories(out_dir);

  const ExperimentResult result = run_experiment(cfg, out_dir);
  write_experiment_outputs(cfg, result, out_dir, a.config);

  std::cout << "cells: " << result.cells.size() << " (proportions="
            << cfg.proportions.size() << " x variants=" << cfg.variants.size()
            << " x replicates=" << cfg.replicates << ")\n";
  for (LossVariant v : cfg.variants) {
    std::cout << to_string(v) << " leaf OA:";
    for (double p : cfg.proportions)
      std::cout << " p=" << p << ":"
                << format4(result.median_oa(p, v).back());
    std::cout << '\n';
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"hierarchical multi-granularity classification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  ValidateArgs va;
  CLI::App* validate = app.add_subcommand(
      "validate", "check a taxonomy file and report its shape");
  validate->add_option("--taxonomy", va.taxonomy, "taxonomy file")->required();
  validate->add_option("--out-dir", va.out_dir, "directory for manifest.json");
  validate->add_option("--seed", va.seed, "unused; accepted for uniformity");

  GenArgs ga;
  CLI::App* gen = app.add_subcommand(
      "gen", "generate a synthetic hierarchical dataset");
  gen->add_option("--branching", ga.branching, "children per level, e.g. 4,4,4")
      ->required();
  gen->add_option("--input-dim", ga.input_dim, "feature width")->required();
  gen->add_option("--separations", ga.separations,
                  "per-level center offsets, e.g. 12,5,1.8")
      ->required();
  gen->add_option("--samples-per-leaf", ga.samples_per_leaf,
                  "samples per leaf before the split")
      ->required();
  gen->add_option("--sigma", ga.sigma, "noise scale (default 1.0)");
  gen->add_option("--test-fraction", ga.test_fraction,
                  "held-out share per leaf (default 0.2)");
  gen->add_option("--seed", ga.seed, "generator seed");
  gen->add_option("--out-dir", ga.out_dir, "output directory")->required();

  RelabelArgs ra;
  CLI::App* relabel_cmd = app.add_subcommand(
      "relabel", "coarsen a share of each leaf class to its parent");
  relabel_cmd->add_option("--taxonomy", ra.taxonomy, "taxonomy file")->required();
  relabel_cmd->add_option("--input", ra.input, "dataset file")->required();
  relabel_cmd->add_option("--proportion", ra.proportion, "share in [0,1]")
      ->required();
  relabel_cmd->add_option("--degrade-factor", ra.degrade_factor,
                          "also degrade selected samples (0 = off)");
  relabel_cmd->add_option("--degrade-mode", ra.degrade_mode, "block | noise");
  relabel_cmd->add_option("--seed", ra.seed, "selection seed");
  relabel_cmd->add_option("--out-dir", ra.out_dir, "output directory")
      ->required();

  TrainArgs ta;
  CLI::App* train_cmd =
      app.add_subcommand("train", "fit a model and write a checkpoint");
  train_cmd->add_option("--taxonomy", ta.taxonomy, "taxonomy file")->required();
  train_cmd->add_option("--data", ta.data, "training dataset")->required();
  train_cmd->add_option("--trunk-dims", ta.trunk_dims,
                        "trunk widths, e.g. 64,32 (default 32)");
  train_cmd->add_option("--block-dim", ta.block_dim,
                        "granularity block width (default 32)");
  train_cmd->add_option("--variant", ta.variant,
                        "combinatorial | hier_only | leaf_ce_only | "
                        "per_node_binary_ce");
  train_cmd->add_option("--epochs", ta.train.epochs, "epochs (default 1)");
  train_cmd->add_option("--batch-size", ta.train.batch_size,
                        "mini-batch size (default 8)");
  train_cmd->add_option("--lr", ta.train.base_lr, "base learning rate");
  train_cmd->add_option("--trunk-lr-ratio", ta.train.trunk_lr_ratio,
                        "trunk lr multiplier (default 0.1)");
  train_cmd->add_option("--momentum", ta.train.momentum, "default 0.9");
  train_cmd->add_option("--weight-decay", ta.train.weight_decay,
                        "default 0.0005");
  train_cmd->add_flag("--decoupled-wd", ta.train.decoupled_weight_decay,
                      "decouple weight decay from the velocity");
  std::string reduction = "mean";
  train_cmd->add_option("--reduction", reduction, "mean | sum");
  train_cmd->add_option("--ce-weight", ta.train.ce_weight,
                        "leaf cross-entropy weight (default 1.0)");
  train_cmd->add_option("--seed", ta.train.seed, "init + shuffle seed");
  train_cmd->add_option("--out-dir", ta.out_dir, "output directory")->required();

  EvalArgs ea;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a checkpoint on a dataset");
  eval_cmd->add_option("--taxonomy", ea.taxonomy, "taxonomy file")->required();
  eval_cmd->add_option("--checkpoint", ea.checkpoint, "model checkpoint")
      ->required();
  eval_cmd->add_option("--data", ea.data, "evaluation dataset")->required();
  eval_cmd->add_option("--seed", ea.seed, "unused; accepted for uniformity");
  eval_cmd->add_option("--out-dir", ea.out_dir, "output directory")->required();

  ExperimentArgs xa;
  CLI::App* exp_cmd = app.add_subcommand(
      "experiment", "run a proportions x variants sweep from a config file");
  exp_cmd->add_option("--config", xa.config, "key-value config file")
      ->required();
  exp_cmd->add_option("--out-dir", xa.out_dir,
                      "output directory (overrides out_dir in the config)");
  exp_cmd->add_option("--seed", xa.seed, "seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    if (*validate) cmd_validate(va);
    else if (*gen) cmd_gen(ga);
    else if (*relabel_cmd) cmd_relabel(ra);
    else if (*train_cmd) {
      if (reduction == "mean") ta.train.reduction = Reduction::kMean;
      else if (reduction == "sum") ta.train.reduction = Reduction::kSum;
      else throw ConfigError("reduction must be mean or sum");
      cmd_train(ta);
    } else if (*eval_cmd) cmd_eval(ea);
    else if (*exp_cmd) cmd_experiment(xa);
    return kOk;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParseExit;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomainExit;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomainExit;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoExit;
  } catch (const CompatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCompatExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace hmc::tools
