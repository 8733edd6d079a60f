#include "hmc/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>

#include "hmc/errors.hpp"
#include "hmc/inference.hpp"
#include "hmc/rng.hpp"

namespace hmc {

namespace {

void check_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(cfg.base_lr > 0.0)) throw ConfigError("base_lr must be positive");
  if (!(cfg.trunk_lr_ratio > 0.0))
    throw ConfigError("trunk_lr_ratio must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw ConfigError("momentum must lie in [0, 1)");
  if (!(cfg.weight_decay >= 0.0))
    throw ConfigError("weight_decay must be non-negative");
}

std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

}  // namespace

double cosine_lr(double base_lr, int epoch, int total_epochs) {
  if (total_epochs < 1) throw DomainError("total_epochs must be at least 1");
  if (epoch < 0 || epoch > total_epochs)
    throw DomainError("epoch " + std::to_string(epoch) + " outside [0, " +
                      std::to_string(total_epochs) + "]");
  const double phase = std::numbers::pi * static_cast<double>(epoch) /
                       static_cast<double>(total_epochs);
  return base_lr * (1.0 + std::cos(phase)) / 2.0;
}

void sgd_step(HrnModel& m, const Eigen::VectorXd& grads, OptimizerState& state,
              const TrainConfig& cfg) {
  Eigen::VectorXd& p = m.mutable_params();
  if (grads.size() != p.size())
    throw DimensionError("gradient has " + std::to_string(grads.size()) +
                         " entries for " + std::to_string(p.size()) +
                         " parameters");
  if (state.velocity.size() == 0)
    state.velocity = Eigen::VectorXd::Zero(p.size());
  if (state.velocity.size() != p.size())
    throw DimensionError("velocity does not mirror the parameters");

  if (cfg.decoupled_weight_decay)
    state.velocity = cfg.momentum * state.velocity + grads;
  else
    state.velocity = cfg.momentum * state.velocity + grads +
                     cfg.weight_decay * p;

  const Eigen::Index k = m.trunk_param_count();
  const Eigen::Index rest = p.size() - k;
  const double trunk_lr = state.current_lr * cfg.trunk_lr_ratio;
  p.head(k) -= trunk_lr * state.velocity.head(k);
  p.tail(rest) -= state.current_lr * state.velocity.tail(rest);
  if (cfg.decoupled_weight_decay) {
    p.head(k) *= 1.0 - trunk_lr * cfg.weight_decay;
    p.tail(rest) *= 1.0 - state.current_lr * cfg.weight_decay;
  }
  ++state.step;
}

Eigen::VectorXd prediction_scores(const Taxonomy& t, const StateSpace& ss,
                                  const ForwardResult& out,
                                  LossVariant variant) {
  switch (variant) {
    case LossVariant::kCombinatorial:
    case LossVariant::kHierOnly:
      return marginals(ss, out.sigmoid).values;
    case LossVariant::kLeafCeOnly: {
      // Leaf softmax, lifted to every label by summing over each node's
      // descendant leaves.
      const Eigen::VectorXd& z = out.leaf_logits;
      Eigen::VectorXd probs = (z.array() - z.maxCoeff()).exp();
      probs /= probs.sum();
      Eigen::VectorXd scores = Eigen::VectorXd::Zero(t.n());
      const std::vector<NodeId>& leaves = t.leaf_set();
      for (std::size_t i = 0; i < leaves.size(); ++i)
        scores[leaves[i]] = probs[static_cast<Eigen::Index>(i)];
      for (NodeId v : ss.bottom_up_order())
        for (NodeId c : t.children_of(v)) scores[v] += scores[c];
      return scores;
    }
    case LossVariant::kPerNodeBinaryCe:
      return out.sigmoid;
  }
  throw DomainError("unknown loss variant");
}

std::vector<PredictionRecord> evaluate_dataset(const HrnModel& m,
                                               const Taxonomy& t,
                                               const StateSpace& ss,
                                               const Dataset& d,
                                               LossVariant variant) {
  std::vector<PredictionRecord> records;
  records.reserve(d.samples.size());
  for (const Sample& s : d.samples) {
    const ForwardResult out = forward(m, s.features);
    records.push_back({prediction_scores(t, ss, out, variant), s.truth_path});
  }
  return records;
}

std::vector<EpochLog> fit(HrnModel& m, const Taxonomy& t, const StateSpace& ss,
                          const Dataset& train, const TrainConfig& cfg,
                          LossVariant variant, const EpochCallback& on_epoch) {
  check_config(cfg);
  if (train.samples.empty()) throw DomainError("training dataset is empty");
  validate_dataset(t, train);
  if (train.input_dim != m.config().input_dim)
    throw DimensionError("dataset feature width does not match the model");

  // 20% of each truth-leaf class goes to validation, leaving at least one
  // training sample per class.
  std::map<NodeId, std::vector<std::size_t>> by_leaf;
  for (std::size_t i = 0; i < train.samples.size(); ++i)
    by_leaf[train.samples[i].truth_path.back()].push_back(i);
  Rng split_rng(Rng::substream(cfg.seed, 0));
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& [leaf, members] : by_leaf) {
    split_rng.shuffle(members);
    std::size_t take = round_half_up(0.2 * static_cast<double>(members.size()));
    take = std::min(take, members.size() - 1);
    val_idx.insert(val_idx.end(), members.begin(),
                   members.begin() + static_cast<std::ptrdiff_t>(take));
    train_idx.insert(train_idx.end(),
                     members.begin() + static_cast<std::ptrdiff_t>(take),
                     members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  const std::vector<std::size_t>& metric_idx =
      val_idx.empty() ? train_idx : val_idx;

  Rng order_rng(Rng::substream(cfg.seed, 1));
  OptimizerState state;
  std::vector<EpochLog> logs;
  logs.reserve(static_cast<std::size_t>(cfg.epochs));

  std::vector<ForwardCache> caches(static_cast<std::size_t>(cfg.batch_size));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    state.current_lr = cosine_lr(cfg.base_lr, epoch, cfg.epochs);
    order_rng.shuffle(train_idx);

    double loss_sum = 0.0, hier_sum = 0.0, ce_sum = 0.0;
    for (std::size_t begin = 0; begin < train_idx.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          begin + static_cast<std::size_t>(cfg.batch_size), train_idx.size());
      const std::size_t count = end - begin;

      std::vector<SampleTerm> terms;
      terms.reserve(count);
      for (std::size_t k = 0; k < count; ++k) {
        const Sample& s = train.samples[train_idx[begin + k]];
        ForwardResult out = forward(m, s.features, &caches[k]);
        terms.push_back({std::move(out.sigmoid), std::move(out.leaf_logits),
                         s.observed});
      }
      const BatchLoss batch =
          total_loss(t, ss, terms, cfg.reduction, variant, cfg.ce_weight);

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.param_count());
      for (std::size_t k = 0; k < count; ++k) {
        const LossValue& lv = batch.per_sample[k];
        grad += backward(m, caches[k], lv.grad_hier, lv.grad_ce);
      }
      sgd_step(m, grad, state, cfg);

      const double scale = cfg.reduction == Reduction::kMean
                               ? static_cast<double>(count)
                               : 1.0;
      loss_sum += batch.total * scale;
      hier_sum += batch.hier_part * scale;
      ce_sum += batch.ce_part * scale;
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = state.current_lr;
    const auto inv_n = 1.0 / static_cast<double>(train_idx.size());
    log.train_loss = loss_sum * inv_n;
    log.train_hier = hier_sum * inv_n;
    log.train_ce = ce_sum * inv_n;
    std::vector<PredictionRecord> records;
    records.reserve(metric_idx.size());
    for (std::size_t i : metric_idx) {
      const Sample& s = train.samples[i];
      const ForwardResult out = forward(m, s.features);
      records.push_back({prediction_scores(t, ss, out, variant), s.truth_path});
    }
    log.val_oa = per_level_oa(t, records);
    log.val_au_prc = average_prc(t, records).area;
    logs.push_back(log);
    if (on_epoch) on_epoch(logs.back());
  }
  return logs;
}

void write_training_log_csv(const std::string& path,
                            const std::vector<EpochLog>& log, int levels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "epoch,lr,loss,loss_hier,loss_ce";
  for (int l = 0; l < levels; ++l) out << ",oa_l" << l;
  out << ",au_prc\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out << buf;
  };
  for (const EpochLog& row : log) {
    out << row.epoch << ',';
    put(row.lr);
    out << ',';
    put(row.train_loss);
    out << ',';
    put(row.train_hier);
    out << ',';
    put(row.train_ce);
    for (double oa : row.val_oa) {
      out << ',';
      put(oa);
    }
    out << ',';
    put(row.val_au_prc);
    out << '\n';
  }
  if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace hmc
