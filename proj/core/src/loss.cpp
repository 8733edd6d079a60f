#include "hmc/loss.hpp"

#include <cmath>

#include "hmc/errors.hpp"

namespace hmc {

const char* to_string(LossVariant v) {
  switch (v) {
    case LossVariant::kCombinatorial: return "combinatorial";
    case LossVariant::kHierOnly: return "hier_only";
    case LossVariant::kLeafCeOnly: return "leaf_ce_only";
    case LossVariant::kPerNodeBinaryCe: return "per_node_binary_ce";
  }
  return "?";
}

LossVariant loss_variant_from_string(const std::string& s) {
  if (s == "combinatorial") return LossVariant::kCombinatorial;
  if (s == "hier_only") return LossVariant::kHierOnly;
  if (s == "leaf_ce_only") return LossVariant::kLeafCeOnly;
  if (s == "per_node_binary_ce") return LossVariant::kPerNodeBinaryCe;
  throw DomainError("unknown loss variant '" + s + "'");
}

ValueGrad hier_loss(const StateSpace& ss, const Eigen::VectorXd& x,
                    NodeId g) {
  const auto& rows_g = ss.rows_with_label(g);  // validates g
  const Eigen::VectorXd p = row_probabilities(ss, x);
  const Eigen::VectorXd marg = sum_rows_per_label(ss, p);
  const double m_g = marg[g];

  // Conditional row distribution given label g, spread back over labels.
  Eigen::VectorXd u = Eigen::VectorXd::Zero(ss.rows());
  for (int r : rows_g) u[r] = p[r] / m_g;
  const Eigen::VectorXd cond = sum_rows_per_label(ss, u);

  ValueGrad out;
  out.value = -std::log(m_g);
  out.grad = marg - cond;
  return out;
}

ValueGrad ce_loss(const Eigen::VectorXd& leaf_logits, int target_leaf) {
  if (leaf_logits.size() == 0) {
    throw DimensionError("ce_loss over an empty logit vector");
  }
  if (target_leaf < 0 || target_leaf >= leaf_logits.size()) {
    throw DomainError("target leaf index " + std::to_string(target_leaf) +
                      " out of range");
  }
  const double m = leaf_logits.maxCoeff();
  const Eigen::ArrayXd shifted = (leaf_logits.array() - m).exp();
  const double denom = shifted.sum();

  ValueGrad out;
  out.value = -(leaf_logits[target_leaf] - m - std::log(denom));
  out.grad = (shifted / denom).matrix();
  out.grad[target_leaf] -= 1.0;
  return out;
}

LossValue combinatorial_loss(const Taxonomy& t, const StateSpace& ss,
                             const Eigen::VectorXd& x,
                             const Eigen::VectorXd& leaf_logits, NodeId g,
                             double ce_weight) {
  LossValue out;
  ValueGrad hier = hier_loss(ss, x, g);
  out.hier_part = hier.value;
  out.grad_hier = std::move(hier.grad);
  out.grad_ce = Eigen::VectorXd::Zero(leaf_logits.size());
  if (t.is_leaf(g)) {
    ValueGrad ce = ce_loss(leaf_logits, t.leaf_index_of(g));
    out.ce_part = ce_weight * ce.value;
    out.grad_ce = ce_weight * ce.grad;
  }
  out.total = out.hier_part + out.ce_part;
  return out;
}

LossValue leaf_ce_only_loss(const Taxonomy& t,
                            const Eigen::VectorXd& leaf_logits, NodeId g) {
  LossValue out;
  out.grad_hier = Eigen::VectorXd::Zero(t.n());
  out.grad_ce = Eigen::VectorXd::Zero(leaf_logits.size());
  if (t.is_leaf(g)) {
    ValueGrad ce = ce_loss(leaf_logits, t.leaf_index_of(g));
    out.ce_part = ce.value;
    out.grad_ce = std::move(ce.grad);
  }
  out.total = out.hier_part + out.ce_part;
  return out;
}

LossValue per_node_binary_ce_loss(const Taxonomy& t, const Eigen::VectorXd& x,
                                  NodeId g) {
  if (x.size() != t.n()) {
    throw DimensionError("sigmoid vector length " + std::to_string(x.size()) +
                         " != n = " + std::to_string(t.n()));
  }
  std::vector<std::uint8_t> target(t.n(), 0);
  for (NodeId a : t.ancestors_of(g)) target[a] = 1;  // validates g
  target[g] = 1;

  LossValue out;
  out.grad_hier = Eigen::VectorXd::Zero(t.n());
  out.grad_ce = Eigen::VectorXd::Zero(t.leaf_set().size());
  double acc = 0.0;
  for (NodeId i = 0; i < t.n(); ++i) {
    const double xi = x[i];
    if (target[i]) {
      acc -= std::log(xi);
      out.grad_hier[i] = -1.0 / xi;
    } else {
      acc -= std::log1p(-xi);
      out.grad_hier[i] = 1.0 / (1.0 - xi);
    }
  }
  out.hier_part = acc;
  out.total = acc;
  return out;
}

LossValue sample_loss(LossVariant variant, const Taxonomy& t,
                      const StateSpace& ss, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& leaf_logits, NodeId g,
                      double ce_weight) {
  switch (variant) {
    case LossVariant::kCombinatorial:
      return combinatorial_loss(t, ss, x, leaf_logits, g, ce_weight);
    case LossVariant::kHierOnly: {
      LossValue out;
      ValueGrad hier = hier_loss(ss, x, g);
      out.hier_part = hier.value;
      out.total = hier.value;
      out.grad_hier = std::move(hier.grad);
      out.grad_ce = Eigen::VectorXd::Zero(leaf_logits.size());
      return out;
    }
    case LossVariant::kLeafCeOnly:
      return leaf_ce_only_loss(t, leaf_logits, g);
    case LossVariant::kPerNodeBinaryCe: {
      LossValue out = per_node_binary_ce_loss(t, x, g);
      out.grad_ce = Eigen::VectorXd::Zero(leaf_logits.size());
      return out;
    }
  }
  throw DomainError("unreachable loss variant");
}

BatchLoss total_loss(const Taxonomy& t, const StateSpace& ss,
                     std::span<const SampleTerm> batch, Reduction reduction,
                     LossVariant variant, double ce_weight) {
  if (batch.empty()) {
    throw DomainError("total_loss over an empty batch");
  }
  BatchLoss out;
  out.per_sample.reserve(batch.size());
  for (const SampleTerm& s : batch) {
    LossValue lv = sample_loss(variant, t, ss, s.sigmoid, s.leaf_logits,
                               s.observed, ce_weight);
    out.total += lv.total;
    out.hier_part += lv.hier_part;
    out.ce_part += lv.ce_part;
    out.per_sample.push_back(std::move(lv));
  }
  if (reduction == Reduction::kMean) {
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.total *= inv;
    out.hier_part *= inv;
    out.ce_part *= inv;
    for (LossValue& lv : out.per_sample) {
      lv.total *= inv;
      lv.hier_part *= inv;
      lv.ce_part *= inv;
      lv.grad_hier *= inv;
      lv.grad_ce *= inv;
    }
  }
  return out;
}

}  // namespace hmc
