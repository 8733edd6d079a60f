#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hmc/taxonomy.hpp"

namespace hmc::test {

/// One root A with children B and C: the smallest two-level hierarchy.
/// Ids: A=0, B=1, C=2.
inline Taxonomy abc_tree() {
  std::vector<std::pair<std::string, NodeId>> nodes;
  nodes.emplace_back("A", kNoParent);
  nodes.emplace_back("B", 0);
  nodes.emplace_back("C", 0);
  return Taxonomy(std::move(nodes));
}

/// Two roots, two children each: 2 levels, 6 nodes, leaves 2..5.
inline Taxonomy two_root_tree() {
  std::vector<std::pair<std::string, NodeId>> nodes;
  nodes.emplace_back("r0", kNoParent);
  nodes.emplace_back("r1", kNoParent);
  nodes.emplace_back("r0a", 0);
  nodes.emplace_back("r0b", 0);
  nodes.emplace_back("r1a", 1);
  nodes.emplace_back("r1b", 1);
  return Taxonomy(std::move(nodes));
}

/// Three levels, uniform leaf depth: 2 roots x 2 x 2 = 14 nodes.
inline Taxonomy three_level_tree() {
  std::vector<std::pair<std::string, NodeId>> nodes;
  nodes.emplace_back("a", kNoParent);   // 0
  nodes.emplace_back("b", kNoParent);   // 1
  nodes.emplace_back("a0", 0);          // 2
  nodes.emplace_back("a1", 0);          // 3
  nodes.emplace_back("b0", 1);          // 4
  nodes.emplace_back("b1", 1);          // 5
  nodes.emplace_back("a00", 2);         // 6
  nodes.emplace_back("a01", 2);         // 7
  nodes.emplace_back("a10", 3);         // 8
  nodes.emplace_back("a11", 3);         // 9
  nodes.emplace_back("b00", 4);         // 10
  nodes.emplace_back("b01", 4);         // 11
  nodes.emplace_back("b10", 5);         // 12
  nodes.emplace_back("b11", 5);         // 13
  return Taxonomy(std::move(nodes));
}

}  // namespace hmc::test
