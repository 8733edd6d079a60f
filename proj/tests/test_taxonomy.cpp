#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "hmc/rng.hpp"
#include "hmc/taxonomy.hpp"
#include "support/fixtures.hpp"
#include "support/random_trees.hpp"

using namespace hmc;

TEST_CASE("parse: three-line wren file") {
  const std::string text =
      "0\t-\tWren\n"
      "1\t0\tHouseWren\n"
      "2\t0\tMarshWren\n";
  Taxonomy t = parse_taxonomy(text);
  CHECK(t.n() == 3);
  CHECK(t.levels() == 2);
  CHECK(t.leaf_set() == std::vector<NodeId>{1, 2});
  CHECK(t.node(0).name == "Wren");
  CHECK(t.node(1).name == "HouseWren");
  CHECK(t.is_root(0));
  CHECK_FALSE(t.is_root(1));
  CHECK(t.level_of(0) == 0);
  CHECK(t.level_of(2) == 1);
}

TEST_CASE("parse: comments, blank lines, CRLF") {
  const std::string text =
      "# header comment\n"
      "0\t-\ta\r\n"
      "\n"
      "1\t0\tb\n"
      "# trailing comment\n";
  Taxonomy t = parse_taxonomy(text);
  CHECK(t.n() == 2);
  CHECK(t.node(0).name == "a");
  CHECK(t.node(1).parent == 0);
}

TEST_CASE("parse: names may contain spaces") {
  Taxonomy t = parse_taxonomy("0\t-\tGreat Grey Owl\n");
  CHECK(t.node(0).name == "Great Grey Owl");
}

TEST_CASE("parse errors carry kind and line number") {
  SUBCASE("empty file") {
    CHECK_THROWS_AS(parse_taxonomy(""), ParseError);
    CHECK_THROWS_AS(parse_taxonomy("# only comments\n"), ParseError);
    try {
      parse_taxonomy("");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::EmptyFile);
    }
  }
  SUBCASE("bad field count") {
    try {
      parse_taxonomy("0\t-\ta\n1\t0\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::BadLine);
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("duplicate id") {
    try {
      parse_taxonomy("0\t-\ta\n0\t-\tb\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::DuplicateId);
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("non-consecutive id") {
    try {
      parse_taxonomy("0\t-\ta\n2\t0\tb\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::NonConsecutiveId);
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unknown parent") {
    try {
      parse_taxonomy("0\t-\ta\n1\t7\tb\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::UnknownParent);
    }
  }
  SUBCASE("self-parent is a cycle") {
    // Node 5 naming itself as parent: the smallest possible cycle.
    std::string text;
    for (int i = 0; i < 5; ++i)
      text += std::to_string(i) + "\t-\tn" + std::to_string(i) + "\n";
    text += "5\t5\tloop\n";
    try {
      parse_taxonomy(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::CycleDetected);
    }
  }
  SUBCASE("two-node cycle") {
    try {
      parse_taxonomy("0\t1\ta\n1\t0\tb\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::CycleDetected);
    }
  }
  SUBCASE("duplicate name within a level") {
    try {
      parse_taxonomy("0\t-\ta\n1\t-\ta\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::DuplicateName);
    }
  }
  SUBCASE("same name on different levels is fine") {
    CHECK_NOTHROW(parse_taxonomy("0\t-\ta\n1\t0\ta\n"));
  }
  SUBCASE("empty name") {
    try {
      parse_taxonomy("0\t-\t\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::BadLine);
      CHECK(e.line() == 1);
    }
  }
}

TEST_CASE("ancestors: root empty, depth-2 leaf is [root, middle]") {
  Taxonomy t = test::three_level_tree();
  CHECK(ancestors_of(t, 0).empty());
  CHECK(ancestors_of(t, 6) == std::vector<NodeId>{0, 2});
  CHECK(ancestors_of(t, 13) == std::vector<NodeId>{1, 5});
  CHECK_THROWS_AS(ancestors_of(t, 99), DomainError);
  CHECK_THROWS_AS(ancestors_of(t, -1), DomainError);
}

TEST_CASE("nodes_at_level on the toy tree") {
  Taxonomy t = test::abc_tree();
  CHECK(nodes_at_level(t, 0) == std::vector<NodeId>{0});
  CHECK(nodes_at_level(t, 1) == std::vector<NodeId>{1, 2});
  CHECK_THROWS_AS(nodes_at_level(t, 2), DomainError);
  CHECK_THROWS_AS(nodes_at_level(t, -1), DomainError);
}

TEST_CASE("are_exclusive: siblings yes, edge no, two roots yes") {
  Taxonomy wrens = parse_taxonomy(
      "0\t-\tWren\n1\t0\tHouseWren\n2\t0\tMarshWren\n");
  CHECK(are_exclusive(wrens, 1, 2));
  CHECK_FALSE(are_exclusive(wrens, 0, 1));
  CHECK_FALSE(are_exclusive(wrens, 1, 0));

  Taxonomy two = test::two_root_tree();
  CHECK(are_exclusive(two, 0, 1));
  // Cousins across roots are exclusive as well.
  CHECK(are_exclusive(two, 2, 4));
  CHECK_THROWS_AS(are_exclusive(two, 3, 3), DomainError);
}

TEST_CASE("taxonomy sized like a 13/38/200 hierarchy") {
  std::vector<std::pair<std::string, NodeId>> nodes;
  for (int i = 0; i < 13; ++i)
    nodes.emplace_back("order" + std::to_string(i), kNoParent);
  for (int i = 0; i < 38; ++i)
    nodes.emplace_back("family" + std::to_string(i),
                       static_cast<NodeId>(i % 13));
  for (int i = 0; i < 200; ++i)
    nodes.emplace_back("species" + std::to_string(i),
                       static_cast<NodeId>(13 + i % 38));
  Taxonomy t(std::move(nodes));
  CHECK(t.n() == 251);
  CHECK(t.levels() == 3);
  CHECK(nodes_at_level(t, 0).size() == 13);
  CHECK(nodes_at_level(t, 1).size() == 38);
  CHECK(nodes_at_level(t, 2).size() == 200);
  CHECK(t.leaf_set().size() == 200);
  CHECK(t.uniform_leaf_depth());
  // A species' ancestor list is its family then order... in root-first
  // order: [order, family], length 2.
  CHECK(ancestors_of(t, 100).size() == 2);
}

TEST_CASE("property: level equals ancestor count") {
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(18));
    Taxonomy t = test::random_tree(rng, n);
    for (NodeId v = 0; v < t.n(); ++v) {
      CHECK(t.level_of(v) ==
            static_cast<int>(ancestors_of(t, v).size()));
    }
  }
}

TEST_CASE("property: ancestor/descendant/exclusive trichotomy") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(14));
    Taxonomy t = test::random_tree(rng, n);
    for (NodeId a = 0; a < t.n(); ++a) {
      for (NodeId b = 0; b < t.n(); ++b) {
        if (a == b) continue;
        const int holds = (t.is_ancestor(a, b) ? 1 : 0) +
                          (t.is_ancestor(b, a) ? 1 : 0) +
                          (t.are_exclusive(a, b) ? 1 : 0);
        REQUIRE(holds == 1);
      }
    }
  }
}

TEST_CASE("serialize round-trips through parse") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(20));
    Taxonomy t = test::random_tree(rng, n);
    Taxonomy back = parse_taxonomy(t.serialize());
    CHECK(back == t);
    CHECK(back.serialize() == t.serialize());
    CHECK(back.content_hash() == t.content_hash());
  }
}

TEST_CASE("leaf_index_of matches leaf_set order") {
  Taxonomy t = test::three_level_tree();
  const std::vector<NodeId>& leaves = t.leaf_set();
  for (size_t i = 0; i < leaves.size(); ++i) {
    CHECK(t.leaf_index_of(leaves[i]) == static_cast<int>(i));
  }
  CHECK_THROWS_AS(t.leaf_index_of(0), DomainError);
}

TEST_CASE("uniform_leaf_depth flags ragged trees") {
  CHECK(test::three_level_tree().uniform_leaf_depth());
  // b is a childless root while a has children: ragged.
  Taxonomy ragged = parse_taxonomy("0\t-\ta\n1\t-\tb\n2\t0\ta0\n");
  CHECK_FALSE(ragged.uniform_leaf_depth());
}
