#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "hmc/inference.hpp"
#include "hmc/state_space.hpp"
#include "hmc/taxonomy.hpp"

namespace hmc {

/// Which training objective drives a run. The first two are the method
/// under study and its ablation; the last two are baseline-only objectives
/// for the experiment harness.
enum class LossVariant {
  kCombinatorial,    // marginal-likelihood loss + leaf CE when leaf-labeled
  kHierOnly,         // marginal-likelihood loss alone
  kLeafCeOnly,       // leaf CE alone; internal-labeled samples contribute 0
  kPerNodeBinaryCe,  // independent binary CE per sigmoid node
};

enum class Reduction { kMean, kSum };

const char* to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& s);

/// A scalar loss with its gradient w.r.t. the inputs it was taken over.
struct ValueGrad {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// One sample's full loss decomposition. Gradients are taken w.r.t. the
/// network outputs: grad_hier w.r.t. the sigmoid outputs (length n),
/// grad_ce w.r.t. the leaf logits (length |leaves|). The chain through the
/// sigmoid itself belongs to the network's backward pass.
struct LossValue {
  double total = 0.0;
  double hier_part = 0.0;
  double ce_part = 0.0;
  Eigen::VectorXd grad_hier;
  Eigen::VectorXd grad_ce;
};

/// Negative log marginal probability of the observed label g:
/// -ln Pr(y_g = 1 | x). The gradient w.r.t. each sigmoid output is the
/// expectation difference marginal_i - E[S[.,i] | rows containing g].
ValueGrad hier_loss(const StateSpace& ss, const Eigen::VectorXd& x, NodeId g);

/// Multi-class cross-entropy over leaf logits: -ln softmax(logits)[target].
/// grad = softmax(logits) - onehot(target).
ValueGrad ce_loss(const Eigen::VectorXd& leaf_logits, int target_leaf);

/// The combined per-sample objective: hier_loss always, plus ce_weight *
/// ce_loss when the observed label is a leaf. Internal-labeled samples get
/// an identically-zero grad_ce.
LossValue combinatorial_loss(const Taxonomy& t, const StateSpace& ss,
                             const Eigen::VectorXd& x,
                             const Eigen::VectorXd& leaf_logits, NodeId g,
                             double ce_weight = 1.0);

/// Baseline objective: leaf CE for leaf-labeled samples, zero otherwise.
LossValue leaf_ce_only_loss(const Taxonomy& t,
                            const Eigen::VectorXd& leaf_logits, NodeId g);

/// Baseline objective: sum over nodes of binary cross-entropy between each
/// sigmoid output and the observed path indicator (g and its ancestors 1,
/// everything else 0). Gradients land in grad_hier.
LossValue per_node_binary_ce_loss(const Taxonomy& t, const Eigen::VectorXd& x,
                                  NodeId g);

/// Dispatch on the configured variant.
LossValue sample_loss(LossVariant variant, const Taxonomy& t,
                      const StateSpace& ss, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& leaf_logits, NodeId g,
                      double ce_weight = 1.0);

/// One sample's network outputs paired with its observed label.
struct SampleTerm {
  Eigen::VectorXd sigmoid;      // x-bar, length n
  Eigen::VectorXd leaf_logits;  // length |leaves|
  NodeId observed = 0;
};

/// Batch objective with per-sample gradients. Under kMean both the value
/// and every gradient carry the 1/batch factor; under kSum they are plain
/// sums. Per-sample terms are evaluated in input order so results are
/// bit-reproducible.
struct BatchLoss {
  double total = 0.0;
  double hier_part = 0.0;
  double ce_part = 0.0;
  std::vector<LossValue> per_sample;
};

BatchLoss total_loss(const Taxonomy& t, const StateSpace& ss,
                     std::span<const SampleTerm> batch,
                     Reduction reduction = Reduction::kMean,
                     LossVariant variant = LossVariant::kCombinatorial,
                     double ce_weight = 1.0);

}  // namespace hmc
