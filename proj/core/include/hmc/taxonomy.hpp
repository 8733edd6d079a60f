#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hmc/errors.hpp"

namespace hmc {

using NodeId = std::int32_t;
inline constexpr NodeId kNoParent = -1;

/// One node of the label hierarchy.
struct Node {
  std::string name;
  NodeId parent = kNoParent;  // kNoParent marks a root
  int level = 0;              // depth from the roots; roots sit at level 0
};

/// The label hierarchy: a forest of class labels with parent-child
/// (subsumption) edges. Any two labels that do not lie on a common
/// root-to-node path are mutually exclusive. Immutable after construction;
/// concurrent reads are safe.
class Taxonomy {
public:
  /// Builds and validates a taxonomy from (name, parent) pairs; node ids are
  /// the positions in `nodes`. Throws ParseError on structural defects
  /// (unknown parent, cycle, duplicate name within a level, empty input).
  explicit Taxonomy(std::vector<std::pair<std::string, NodeId>> nodes);

  /// Number of labels in the hierarchy (the state-space column count).
  int n() const noexcept { return static_cast<int>(nodes_.size()); }
  /// Number of levels; level 0 is the coarsest.
  int levels() const noexcept { return levels_; }

  const Node& node(NodeId v) const;
  bool is_root(NodeId v) const { return node(v).parent == kNoParent; }
  bool is_leaf(NodeId v) const { return children_[check(v)].empty(); }
  int level_of(NodeId v) const { return node(v).level; }
  const std::vector<NodeId>& children_of(NodeId v) const {
    return children_[check(v)];
  }

  /// Leaves in ascending NodeId order. Fixes the O_CE logit ordering.
  const std::vector<NodeId>& leaf_set() const noexcept { return leaves_; }
  /// Position of `v` in leaf_set(); throws DomainError if `v` is not a leaf.
  int leaf_index_of(NodeId v) const;

  /// Root-to-parent ancestor path of `v`, excluding `v` itself.
  /// Empty for roots.
  std::vector<NodeId> ancestors_of(NodeId v) const;

  /// All nodes at level `l` in ascending NodeId order.
  std::vector<NodeId> nodes_at_level(int l) const;

  /// True iff `a` is a proper ancestor of `b`.
  bool is_ancestor(NodeId a, NodeId b) const;

  /// True iff neither label subsumes the other, i.e. the two classes can
  /// never both be 1 in a legal assignment. Requires a != b.
  bool are_exclusive(NodeId a, NodeId b) const;

  /// True iff every leaf sits at the deepest level. The network architecture
  /// requires this; the taxonomy itself does not.
  bool uniform_leaf_depth() const noexcept { return uniform_depth_; }

  /// Canonical file form: one `id<TAB>parent-or-dash<TAB>name` line per node.
  /// parse_taxonomy(serialize()) reproduces this taxonomy exactly.
  std::string serialize() const;

  /// FNV-1a 64 hash of serialize(); embedded in dataset and checkpoint
  /// headers to tie files to the taxonomy they were produced from.
  std::uint64_t content_hash() const;

  bool operator==(const Taxonomy& other) const {
    return nodes_same(other);
  }

private:
  NodeId check(NodeId v) const;
  bool nodes_same(const Taxonomy& other) const;

  std::vector<Node> nodes_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> leaves_;
  int levels_ = 0;
  bool uniform_depth_ = true;
};

/// Parses the taxonomy file format: UTF-8 text, one node per line,
/// `<id>\t<parent-id-or-dash>\t<name>`, ids consecutive from 0 in file
/// order, `-` marks a root, `#` starts a comment line. Throws ParseError
/// with a line number on malformed input.
Taxonomy parse_taxonomy(const std::string& text);

// Free-function forms of the taxonomy queries.
std::vector<NodeId> ancestors_of(const Taxonomy& t, NodeId v);
std::vector<NodeId> nodes_at_level(const Taxonomy& t, int l);
bool are_exclusive(const Taxonomy& t, NodeId a, NodeId b);

}  // namespace hmc
