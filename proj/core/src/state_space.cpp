#include "hmc/state_space.hpp"

#include <algorithm>
#include <sstream>

namespace hmc {

StateSpace::StateSpace(const Taxonomy& t) {
  const int n = t.n();
  cells_.setZero(n + 1, n);
  rows_with_label_.resize(n);
  children_.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    cells_(row_of(v), v) = 1;
    rows_with_label_[v].push_back(row_of(v));
    for (NodeId a : t.ancestors_of(v)) {
      cells_(row_of(v), a) = 1;
      rows_with_label_[a].push_back(row_of(v));
    }
    children_[v] = t.children_of(v);
  }
  for (auto& rows : rows_with_label_) {
    std::sort(rows.begin(), rows.end());
  }
  dense_ = cells_.cast<double>();

  bottom_up_.resize(n);
  for (NodeId v = 0; v < n; ++v) bottom_up_[v] = v;
  std::stable_sort(bottom_up_.begin(), bottom_up_.end(),
                   [&](NodeId a, NodeId b) {
                     return t.level_of(a) > t.level_of(b);
                   });
}

const std::vector<int>& StateSpace::rows_with_label(NodeId i) const {
  if (i < 0 || i >= n()) {
    throw DomainError("invalid node id " + std::to_string(i));
  }
  return rows_with_label_[i];
}

std::string StateSpace::to_csv(const Taxonomy& t) const {
  std::ostringstream out;
  for (NodeId v = 0; v < n(); ++v) {
    if (v) out << ',';
    out << t.node(v).name;
  }
  out << '\n';
  for (int r = 0; r < rows(); ++r) {
    for (int c = 0; c < n(); ++c) {
      if (c) out << ',';
      out << int(cells_(r, c));
    }
    out << '\n';
  }
  return out.str();
}

StateSpace build_state_space(const Taxonomy& t) { return StateSpace(t); }

bool satisfies_constraints(const Taxonomy& t,
                           const std::vector<std::uint8_t>& y) {
  if (static_cast<int>(y.size()) != t.n()) {
    throw DimensionError("assignment length " + std::to_string(y.size()) +
                         " != n = " + std::to_string(t.n()));
  }
  std::vector<NodeId> set_nodes;
  for (NodeId v = 0; v < t.n(); ++v) {
    if (!y[v]) continue;
    const NodeId p = t.node(v).parent;
    if (p != kNoParent && !y[p]) return false;  // (0,1) on a subsumption edge
    set_nodes.push_back(v);
  }
  for (size_t a = 0; a < set_nodes.size(); ++a) {
    for (size_t b = a + 1; b < set_nodes.size(); ++b) {
      if (t.are_exclusive(set_nodes[a], set_nodes[b])) {
        return false;  // (1,1) on an exclusion edge
      }
    }
  }
  return true;
}

std::set<std::vector<std::uint8_t>> brute_force_state_space(
    const Taxonomy& t) {
  const int n = t.n();
  if (n > 20) {
    throw DomainError("brute-force enumeration capped at n <= 20, got n = " +
                      std::to_string(n));
  }
  std::set<std::vector<std::uint8_t>> legal;
  std::vector<std::uint8_t> y(n, 0);
  const std::uint64_t count = 1ull << n;
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    for (int i = 0; i < n; ++i) y[i] = (bits >> i) & 1u;
    if (satisfies_constraints(t, y)) legal.insert(y);
  }
  return legal;
}

}  // namespace hmc
