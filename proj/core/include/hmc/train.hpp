#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hmc/datagen.hpp"
#include "hmc/hrnet.hpp"
#include "hmc/loss.hpp"
#include "hmc/metrics.hpp"
#include "hmc/state_space.hpp"
#include "hmc/taxonomy.hpp"

namespace hmc {

struct TrainConfig {
  int epochs = 1;
  int batch_size = 8;
  double base_lr = 0.05;
  double trunk_lr_ratio = 0.1;  // multiplier on the trunk's learning rate
  double momentum = 0.9;
  double weight_decay = 5e-4;
  bool decoupled_weight_decay = false;  // default couples decay into velocity
  std::uint64_t seed = 0;
  Reduction reduction = Reduction::kMean;
  double ce_weight = 1.0;
};

struct OptimizerState {
  Eigen::VectorXd velocity;  // mirrors the model's flat parameters
  std::int64_t step = 0;
  double current_lr = 0.0;
};

/// Half-cosine decay from base_lr at epoch 0 to 0 at epoch == total.
double cosine_lr(double base_lr, int epoch, int total_epochs);

/// One momentum-SGD update: v <- momentum*v + grad (+ weight_decay*param
/// when coupled); param -= group_lr * v. Trunk parameters, the leading
/// slice of the flat vector, use current_lr * trunk_lr_ratio; everything
/// else uses current_lr. Decoupled mode shrinks parameters by
/// group_lr * weight_decay separately instead.
void sgd_step(HrnModel& m, const Eigen::VectorXd& grads, OptimizerState& state,
              const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;   // 0-based
  double lr = 0.0;
  double train_loss = 0.0;          // mean per-sample loss over the epoch
  double train_hier = 0.0;          // path-likelihood share of train_loss
  double train_ce = 0.0;            // leaf cross-entropy share
  std::vector<double> val_oa;       // per level
  double val_au_prc = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Scores every label for one forward pass, on whatever scale the variant
/// treats as its prediction: exact marginals for the path-coupled losses,
/// subtree-summed leaf softmax for the leaf-only baseline, raw per-node
/// sigmoids for the binary baseline.
Eigen::VectorXd prediction_scores(const Taxonomy& t, const StateSpace& ss,
                                  const ForwardResult& out, LossVariant variant);

/// Runs the model over a dataset and pairs scores with truth paths.
std::vector<PredictionRecord> evaluate_dataset(const HrnModel& m,
                                               const Taxonomy& t,
                                               const StateSpace& ss,
                                               const Dataset& d,
                                               LossVariant variant);

/// Mini-batch training. Splits off a 20% validation set stratified by
/// truth leaf (seeded; at least one training sample stays per class),
/// shuffles each epoch, steps the optimizer per batch, and logs loss, lr,
/// per-level accuracy, and PR area on the validation split after every
/// epoch. If the dataset is too small to spare a validation sample, the
/// metrics are computed on the training data instead. Deterministic in
/// cfg.seed.
std::vector<EpochLog> fit(HrnModel& m, const Taxonomy& t, const StateSpace& ss,
                          const Dataset& train, const TrainConfig& cfg,
                          LossVariant variant = LossVariant::kCombinatorial,
                          const EpochCallback& on_epoch = {});

/// One CSV row per epoch: epoch, lr, loss and its two parts, one accuracy
/// column per level, then the PR area.
void write_training_log_csv(const std::string& path,
                            const std::vector<EpochLog>& log, int levels);

}  // namespace hmc
