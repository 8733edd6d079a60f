#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hmc/taxonomy.hpp"

namespace hmc {

/// All legal global label assignments of a taxonomy, arranged as the
/// (n+1) x n binary matrix S: one all-zeros row plus one row per node
/// setting that node and its ancestors. Row order is fixed (zero row
/// first, then node order) so downstream artifacts are byte-stable.
/// Immutable after construction; concurrent reads are safe.
class StateSpace {
public:
  explicit StateSpace(const Taxonomy& t);

  int n() const noexcept { return static_cast<int>(cells_.cols()); }
  int rows() const noexcept { return static_cast<int>(cells_.rows()); }
  int zero_row() const noexcept { return 0; }
  /// Row index of the assignment that stops exactly at node v.
  int row_of(NodeId v) const { return 1 + v; }

  /// The binary assignment matrix, one byte per cell.
  const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& cells()
      const noexcept {
    return cells_;
  }
  /// Double-precision mirror of cells(); the operand of the S*X score
  /// product in the inference module.
  const Eigen::MatrixXd& dense() const noexcept { return dense_; }

  /// Ascending row indices r with S[r][i] = 1: the assignments that stop at
  /// label i or at any of its descendants.
  const std::vector<int>& rows_with_label(NodeId i) const;

  /// Children lists echoed from the source taxonomy, in the shape the
  /// inference recursions need.
  const std::vector<std::vector<NodeId>>& children_table() const noexcept {
    return children_;
  }
  /// Node ids ordered deepest level first; a reverse topological order for
  /// subtree accumulations.
  const std::vector<NodeId>& bottom_up_order() const noexcept {
    return bottom_up_;
  }

  /// Debug dump: CSV of S with a header row of node names.
  std::string to_csv(const Taxonomy& t) const;

private:
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> cells_;
  Eigen::MatrixXd dense_;
  std::vector<std::vector<int>> rows_with_label_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> bottom_up_;
};

/// Builds the state space of a valid taxonomy.
StateSpace build_state_space(const Taxonomy& t);

/// Legality check of one assignment directly against the edge constraints:
/// no subsumption edge with (parent, child) = (0, 1) and no exclusive pair
/// both set. Throws DimensionError if |y| != n.
bool satisfies_constraints(const Taxonomy& t,
                           const std::vector<std::uint8_t>& y);

/// Exhaustive enumeration of every y in {0,1}^n passing
/// satisfies_constraints. The independent oracle for build_state_space;
/// requires n <= 20.
std::set<std::vector<std::uint8_t>> brute_force_state_space(const Taxonomy& t);

}  // namespace hmc
