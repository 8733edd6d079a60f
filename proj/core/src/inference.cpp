#include "hmc/inference.hpp"

#include <cmath>

#include "hmc/errors.hpp"

namespace hmc {

Eigen::VectorXd row_log_scores(const StateSpace& ss,
                               const Eigen::VectorXd& x) {
  if (x.size() != ss.n()) {
    throw DimensionError("score vector length " + std::to_string(x.size()) +
                         " != n = " + std::to_string(ss.n()));
  }
  return ss.dense() * x;
}

double log_partition(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) {
    throw DimensionError("log_partition of an empty score vector");
  }
  const double m = scores.maxCoeff();
  return m + std::log((scores.array() - m).exp().sum());
}

Eigen::VectorXd row_probabilities(const StateSpace& ss,
                                  const Eigen::VectorXd& x,
                                  double* log_partition_out) {
  const Eigen::VectorXd scores = row_log_scores(ss, x);
  const double log_z = log_partition(scores);
  if (log_partition_out) *log_partition_out = log_z;
  return (scores.array() - log_z).exp();
}

Eigen::VectorXd sum_rows_per_label(const StateSpace& ss,
                                   const Eigen::VectorXd& u) {
  if (u.size() != ss.rows()) {
    throw DimensionError("per-row vector length " + std::to_string(u.size()) +
                         " != rows = " + std::to_string(ss.rows()));
  }
  Eigen::VectorXd out(ss.n());
  const auto& children = ss.children_table();
  for (NodeId v : ss.bottom_up_order()) {
    double acc = u[ss.row_of(v)];
    for (NodeId c : children[v]) acc += out[c];
    out[v] = acc;
  }
  return out;
}

MarginalVector marginals(const StateSpace& ss, const Eigen::VectorXd& x) {
  MarginalVector mv;
  Eigen::VectorXd p = row_probabilities(ss, x, &mv.log_partition);
  mv.values = sum_rows_per_label(ss, p);
  return mv;
}

std::vector<MarginalVector> batch_marginals(const StateSpace& ss,
                                            const Eigen::MatrixXd& xs) {
  if (xs.rows() != ss.n()) {
    throw DimensionError("batch row count " + std::to_string(xs.rows()) +
                         " != n = " + std::to_string(ss.n()));
  }
  if (xs.cols() < 1) {
    throw DimensionError("batch must contain at least one column");
  }
  const Eigen::MatrixXd scores = ss.dense() * xs;  // (n+1) x k
  std::vector<MarginalVector> out;
  out.reserve(xs.cols());
  const auto& children = ss.children_table();
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    MarginalVector mv;
    const double m = scores.col(j).maxCoeff();
    const Eigen::ArrayXd shifted = (scores.col(j).array() - m).exp();
    mv.log_partition = m + std::log(shifted.sum());
    const Eigen::VectorXd p =
        (scores.col(j).array() - mv.log_partition).exp();
    mv.values.resize(ss.n());
    for (NodeId v : ss.bottom_up_order()) {
      double acc = p[ss.row_of(v)];
      for (NodeId c : children[v]) acc += mv.values[c];
      mv.values[v] = acc;
    }
    out.push_back(std::move(mv));
  }
  return out;
}

}  // namespace hmc
