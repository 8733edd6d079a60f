#pragma once

#include <Eigen/Core>
#include <vector>

#include "hmc/state_space.hpp"

namespace hmc {

/// Per-label marginal probabilities under the tree-constrained joint,
/// plus the log partition function of the same input.
struct MarginalVector {
  Eigen::VectorXd values;     // Pr(y_i = 1 | x), length n
  double log_partition = 0.0;
};

/// Exponent of each row's unnormalized joint score: entry r is
/// sum_i S[r][i] * x[i]. The zero row always scores 0. All inference ops
/// are pure functions of immutable inputs; data-parallel use is safe.
Eigen::VectorXd row_log_scores(const StateSpace& ss, const Eigen::VectorXd& x);

/// log sum_r exp(scores[r]), max-shifted. Sigmoid inputs keep row scores in
/// [0, depth] so overflow cannot happen there, but raw scores may be fed in
/// for stress tests and the shift keeps those finite too.
double log_partition(const Eigen::VectorXd& scores);

/// Normalized row probabilities exp(scores[r] - logZ); sums to 1.
/// Writes logZ through `log_partition_out` when non-null.
Eigen::VectorXd row_probabilities(const StateSpace& ss,
                                  const Eigen::VectorXd& x,
                                  double* log_partition_out = nullptr);

/// Per-label sums of a per-row quantity: out[i] = sum over rows r with
/// S[r][i] = 1 of u[r]. Computed bottom-up over the tree (a label's sum is
/// its own stop-row term plus its children's sums), which for nonnegative u
/// makes out[child] <= out[parent] hold exactly, not just to rounding.
Eigen::VectorXd sum_rows_per_label(const StateSpace& ss,
                                   const Eigen::VectorXd& u);

/// Pr(y_i = 1 | x) for every label i: the probability mass of all legal
/// assignments that set label i.
MarginalVector marginals(const StateSpace& ss, const Eigen::VectorXd& x);

/// Marginals for a batch laid out as columns of xs (n x k): one S * X score
/// product, then per-column stabilized normalization. Column j equals
/// marginals(ss, xs.col(j)).
std::vector<MarginalVector> batch_marginals(const StateSpace& ss,
                                            const Eigen::MatrixXd& xs);

}  // namespace hmc
