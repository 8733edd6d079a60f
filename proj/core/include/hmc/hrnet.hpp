#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "hmc/loss.hpp"
#include "hmc/taxonomy.hpp"

namespace hmc {

/// Architecture hyperparameters. The taxonomy supplies the output widths;
/// everything else is free.
struct HrnConfig {
  int input_dim = 0;
  std::vector<int> trunk_dims;  // hidden widths of the shared trunk; empty
                                // means the trunk passes features through
  int block_dim = 0;            // feature width of each granularity block
  int levels = 0;               // must equal the taxonomy's level count
  std::uint64_t seed = 0;
};

/// Intermediate activations of one forward pass, kept for backward.
struct ForwardCache {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> trunk_pre;   // per trunk layer, pre-ReLU
  std::vector<Eigen::VectorXd> trunk_act;   // per trunk layer, post-ReLU
  std::vector<Eigen::VectorXd> block_pre1;  // per level, first affine out
  std::vector<Eigen::VectorXd> block_act1;  // per level, after ReLU
  std::vector<Eigen::VectorXd> block_out;   // per level, f_l
  std::vector<Eigen::VectorXd> comb_pre;    // per level (l>=1), f_l + R_l h_{l-1}
  std::vector<Eigen::VectorXd> combined;    // per level, h_l
  std::vector<Eigen::VectorXd> head_pre;    // per level, pre-sigmoid z_l
  Eigen::VectorXd sigmoid;                  // length n, levels interleaved
  Eigen::VectorXd leaf_logits;
};

struct ForwardResult {
  Eigen::VectorXd sigmoid;      // strictly inside (0,1), length n
  Eigen::VectorXd leaf_logits;  // length |leaves|
};

/// The network: shared trunk, one granularity-specific block per level,
/// parent-to-child residual feature combination, and the two output heads
/// (level-grouped sigmoid nodes over all labels; softmax logits over
/// leaves). Parameters live in one flat vector in a fixed declared order —
/// trunk affines, block affines per level, residual maps, level heads, leaf
/// head — which also fixes the checkpoint layout. Reads may be shared
/// across threads; training mutates parameters single-writer.
class HrnModel {
public:
  HrnModel(const HrnConfig& cfg, const Taxonomy& t);

  const HrnConfig& config() const noexcept { return cfg_; }
  int n_labels() const noexcept { return n_; }
  int leaf_count() const noexcept { return leaf_count_; }
  int trunk_output_dim() const noexcept { return trunk_out_dim_; }
  const std::vector<std::vector<NodeId>>& level_nodes() const noexcept {
    return level_nodes_;
  }

  Eigen::Index param_count() const noexcept { return params_.size(); }
  /// Trunk parameters occupy the leading slice [0, trunk_param_count()):
  /// the boundary for per-group learning rates.
  Eigen::Index trunk_param_count() const noexcept { return trunk_params_; }
  const Eigen::VectorXd& params() const noexcept { return params_; }
  Eigen::VectorXd& mutable_params() noexcept { return params_; }

  // Structured views over the flat storage (valid while the model lives).
  Eigen::Map<const Eigen::MatrixXd> trunk_w(int j) const;
  Eigen::Map<const Eigen::VectorXd> trunk_b(int j) const;
  Eigen::Map<const Eigen::MatrixXd> block_w1(int l) const;
  Eigen::Map<const Eigen::VectorXd> block_b1(int l) const;
  Eigen::Map<const Eigen::MatrixXd> block_w2(int l) const;
  Eigen::Map<const Eigen::VectorXd> block_b2(int l) const;
  Eigen::Map<const Eigen::MatrixXd> residual_w(int l) const;  // l in [1, levels)
  Eigen::Map<const Eigen::MatrixXd> head_w(int l) const;
  Eigen::Map<const Eigen::VectorXd> head_b(int l) const;
  Eigen::Map<const Eigen::MatrixXd> ce_w() const;
  Eigen::Map<const Eigen::VectorXd> ce_b() const;

  /// Tensor boundaries in the flat layout, for gradient views.
  struct TensorRef {
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;  // 1 for bias vectors
  };
  const std::vector<TensorRef>& layout() const noexcept { return layout_; }

private:
  friend ForwardResult forward(const HrnModel&, const Eigen::VectorXd&,
                               ForwardCache*);
  friend Eigen::VectorXd backward(const HrnModel&, const ForwardCache&,
                                  const Eigen::VectorXd&,
                                  const Eigen::VectorXd&);

  Eigen::Map<const Eigen::MatrixXd> view(int tensor_index) const;

  HrnConfig cfg_;
  int n_ = 0;
  int leaf_count_ = 0;
  int trunk_out_dim_ = 0;
  Eigen::Index trunk_params_ = 0;
  std::vector<std::vector<NodeId>> level_nodes_;
  std::vector<TensorRef> layout_;
  // Tensor indices into layout_: trunk pairs, then per-level block tensors,
  // residual maps, head pairs, ce pair.
  int idx_blocks_ = 0, idx_residual_ = 0, idx_heads_ = 0, idx_ce_ = 0;
  Eigen::VectorXd params_;
};

/// Deterministic fan-in-scaled uniform initialization; biases start at 0.
HrnModel init_model(const HrnConfig& cfg, const Taxonomy& t);

/// Runs the network on one feature vector. Level-l sigmoid outputs depend
/// on blocks 0..l only; the leaf logits read the deepest combined feature.
/// Pre-sigmoid values are clamped to +-30 so outputs stay strictly inside
/// (0,1) in double precision.
ForwardResult forward(const HrnModel& m, const Eigen::VectorXd& features,
                      ForwardCache* cache = nullptr);

/// Backpropagates output gradients (w.r.t. the sigmoid outputs and the leaf
/// logits) to a flat parameter gradient matching the model's layout.
Eigen::VectorXd backward(const HrnModel& m, const ForwardCache& cache,
                         const Eigen::VectorXd& grad_sigmoid,
                         const Eigen::VectorXd& grad_leaf_logits);

/// A checkpoint on disk: format version, config echo, training variant,
/// taxonomy hash, flat parameters. Byte layout documented in
/// docs/formats.md; load(save(m)) restores m bit-exactly.
struct Checkpoint {
  HrnConfig config;
  LossVariant variant = LossVariant::kCombinatorial;
  std::uint64_t taxonomy_hash = 0;
  Eigen::VectorXd params;
};

void save_checkpoint(const std::string& path, const HrnModel& m,
                     std::uint64_t taxonomy_hash, LossVariant variant);
Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds a model from a checkpoint, verifying the taxonomy hash and the
/// parameter count against the given taxonomy.
HrnModel model_from_checkpoint(const Checkpoint& ckpt, const Taxonomy& t);

}  // namespace hmc
