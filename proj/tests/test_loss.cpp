#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hmc/loss.hpp"
#include "hmc/rng.hpp"
#include "support/finite_diff.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/random_trees.hpp"

using namespace hmc;

TEST_CASE("hier loss hand values on the toy tree") {
  StateSpace ss = build_state_space(test::abc_tree());
  Eigen::VectorXd x(3);
  x << 0.5, 0.5, 0.5;
  CHECK(hier_loss(ss, x, 1).value == doctest::Approx(1.0901).epsilon(1e-4));
  CHECK(hier_loss(ss, x, 0).value == doctest::Approx(0.1320).epsilon(1e-3));
  CHECK_THROWS_AS(hier_loss(ss, x, 7), DomainError);
  CHECK_THROWS_AS(hier_loss(ss, x, -1), DomainError);
}

TEST_CASE("hier loss equals the enumeration oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(14));
    Taxonomy t = test::random_tree(rng, n);
    StateSpace ss = build_state_space(t);
    Eigen::VectorXd x = test::random_unit_interval(rng, n);
    const NodeId g = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
    const double expect =
        test::brute_force_hier_loss(brute_force_state_space(t), x, g);
    CHECK(hier_loss(ss, x, g).value == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("hier loss gradient matches finite differences") {
  Rng rng(7);
  int instances = 0;
  while (instances < 50) {
    const int n = 1 + static_cast<int>(rng.below(12));
    Taxonomy t = test::random_tree(rng, n);
    StateSpace ss = build_state_space(t);
    Eigen::VectorXd x = test::random_unit_interval(rng, n);
    const NodeId g = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
    ValueGrad vg = hier_loss(ss, x, g);
    const double worst = test::max_grad_rel_err(
        [&](const Eigen::VectorXd& p) { return hier_loss(ss, p, g).value; },
        x, vg.grad);
    CHECK(worst < test::kFdTolerance);
    ++instances;
  }
}

TEST_CASE("hier loss is nonnegative and monotone in the observed score") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    Taxonomy t = test::random_tree(rng, n);
    StateSpace ss = build_state_space(t);
    Eigen::VectorXd x = test::random_unit_interval(rng, n);
    const NodeId g = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
    const double base = hier_loss(ss, x, g).value;
    CHECK(base >= 0.0);
    // Lowering the observed label's own score can only hurt.
    Eigen::VectorXd lower = x;
    lower[g] -= 0.5 * rng.unit() * x[g];
    CHECK(hier_loss(ss, lower, g).value >= base - 1e-12);
    Eigen::VectorXd higher = x;
    higher[g] += 0.5;
    CHECK(hier_loss(ss, higher, g).value <= base + 1e-12);
  }
}

TEST_CASE("ce loss hand values") {
  Eigen::VectorXd uniform = Eigen::VectorXd::Zero(2);
  ValueGrad vg = ce_loss(uniform, 0);
  CHECK(vg.value == doctest::Approx(std::log(2.0)));
  CHECK(vg.grad[0] == doctest::Approx(-0.5));
  CHECK(vg.grad[1] == doctest::Approx(0.5));

  Eigen::VectorXd confident(2);
  confident << 10.0, 0.0;
  CHECK(ce_loss(confident, 0).value == doctest::Approx(4.54e-5).epsilon(1e-2));

  CHECK_THROWS_AS(ce_loss(uniform, 2), DomainError);
  CHECK_THROWS_AS(ce_loss(uniform, -1), DomainError);
  CHECK_THROWS_AS(ce_loss(Eigen::VectorXd(), 0), DimensionError);
}

TEST_CASE("ce gradient sums to zero and matches finite differences") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(9));
    Eigen::VectorXd logits(k);
    for (int i = 0; i < k; ++i) logits[i] = 6.0 * rng.unit() - 3.0;
    const int target = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    ValueGrad vg = ce_loss(logits, target);
    CHECK(std::abs(vg.grad.sum()) < 1e-12);
    const double worst = test::max_grad_rel_err(
        [&](const Eigen::VectorXd& p) { return ce_loss(p, target).value; },
        logits, vg.grad);
    CHECK(worst < test::kFdTolerance);
  }
}

TEST_CASE("combinatorial loss composes its parts") {
  Taxonomy t = test::abc_tree();
  StateSpace ss = build_state_space(t);
  Eigen::VectorXd x(3);
  x << 0.5, 0.5, 0.5;
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(2);

  SUBCASE("leaf-labeled: hier + ce") {
    LossValue lv = combinatorial_loss(t, ss, x, logits, 1);
    CHECK(lv.total == doctest::Approx(1.7832).epsilon(1e-4));
    CHECK(lv.hier_part == doctest::Approx(1.0901).epsilon(1e-4));
    CHECK(lv.ce_part == doctest::Approx(std::log(2.0)));
    CHECK(lv.total == doctest::Approx(lv.hier_part + lv.ce_part));
  }
  SUBCASE("internal-labeled: hier only, zero ce gradient") {
    LossValue lv = combinatorial_loss(t, ss, x, logits, 0);
    CHECK(lv.ce_part == 0.0);
    CHECK(lv.total == lv.hier_part);
    REQUIRE(lv.grad_ce.size() == 2);
    CHECK(lv.grad_ce.isZero(0.0));
  }
  SUBCASE("confident correct logits push ce toward zero") {
    Eigen::VectorXd strong(2);
    strong << 30.0, -30.0;
    LossValue lv = combinatorial_loss(t, ss, x, strong, 1);
    CHECK(lv.ce_part < 1e-12);
    CHECK(lv.total == doctest::Approx(lv.hier_part).epsilon(1e-10));
  }
  SUBCASE("ce weight scales only the ce part") {
    LossValue lv = combinatorial_loss(t, ss, x, logits, 1, 0.25);
    CHECK(lv.ce_part == doctest::Approx(0.25 * std::log(2.0)));
    CHECK(lv.hier_part == doctest::Approx(1.0901).epsilon(1e-4));
  }
}

TEST_CASE("loss variants: names round-trip, baselines behave") {
  for (LossVariant v :
       {LossVariant::kCombinatorial, LossVariant::kHierOnly,
        LossVariant::kLeafCeOnly, LossVariant::kPerNodeBinaryCe}) {
    CHECK(loss_variant_from_string(to_string(v)) == v);
  }
  CHECK_THROWS_AS(loss_variant_from_string("nope"), DomainError);

  Taxonomy t = test::abc_tree();
  StateSpace ss = build_state_space(t);
  Eigen::VectorXd x(3);
  x << 0.5, 0.5, 0.5;
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(2);

  SUBCASE("hier_only ignores the ce head") {
    LossValue lv = sample_loss(LossVariant::kHierOnly, t, ss, x, logits, 1);
    CHECK(lv.total == doctest::Approx(1.0901).epsilon(1e-4));
    CHECK(lv.ce_part == 0.0);
    CHECK(lv.grad_ce.isZero(0.0));
  }
  SUBCASE("leaf_ce_only: internal label contributes nothing") {
    LossValue leaf = sample_loss(LossVariant::kLeafCeOnly, t, ss, x, logits, 1);
    CHECK(leaf.total == doctest::Approx(std::log(2.0)));
    CHECK(leaf.grad_hier.isZero(0.0));
    LossValue internal =
        sample_loss(LossVariant::kLeafCeOnly, t, ss, x, logits, 0);
    CHECK(internal.total == 0.0);
    CHECK(internal.grad_ce.isZero(0.0));
  }
  SUBCASE("per-node binary ce sums node terms") {
    LossValue lv = sample_loss(LossVariant::kPerNodeBinaryCe, t, ss, x,
                               logits, 1);
    // Path {A, B} on, C off, all scores 0.5: 3 * ln 2.
    CHECK(lv.total == doctest::Approx(3.0 * std::log(2.0)));
    CHECK(lv.grad_ce.isZero(0.0));
  }
  SUBCASE("per-node binary ce gradient matches finite differences") {
    Rng rng(91);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(10));
      Taxonomy rt = test::random_tree(rng, n);
      Eigen::VectorXd p = test::random_unit_interval(rng, n);
      const NodeId g =
          static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
      LossValue lv = per_node_binary_ce_loss(rt, p, g);
      const double worst = test::max_grad_rel_err(
          [&](const Eigen::VectorXd& q) {
            return per_node_binary_ce_loss(rt, q, g).total;
          },
          p, lv.grad_hier);
      CHECK(worst < test::kFdTolerance);
    }
  }
}

TEST_CASE("total loss over batches") {
  Taxonomy t = test::abc_tree();
  StateSpace ss = build_state_space(t);
  Eigen::VectorXd x(3);
  x << 0.5, 0.5, 0.5;
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(2);
  SampleTerm leaf{x, logits, 1};
  SampleTerm internal{x, logits, 0};

  SUBCASE("batch of one equals the single-sample loss") {
    std::vector<SampleTerm> batch{leaf};
    BatchLoss bl = total_loss(t, ss, batch);
    LossValue single = combinatorial_loss(t, ss, x, logits, 1);
    CHECK(bl.total == doctest::Approx(single.total));
    CHECK(bl.hier_part == doctest::Approx(single.hier_part));
    CHECK(bl.ce_part == doctest::Approx(single.ce_part));
    REQUIRE(bl.per_sample.size() == 1);
    CHECK((bl.per_sample[0].grad_hier - single.grad_hier)
              .cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("two identical samples under sum reduction double the loss") {
    std::vector<SampleTerm> batch{leaf, leaf};
    BatchLoss bl = total_loss(t, ss, batch, Reduction::kSum);
    LossValue single = combinatorial_loss(t, ss, x, logits, 1);
    CHECK(bl.total == doctest::Approx(2.0 * single.total));
  }
  SUBCASE("mean reduction scales values and gradients by 1/batch") {
    std::vector<SampleTerm> batch{leaf, leaf};
    BatchLoss bl = total_loss(t, ss, batch, Reduction::kMean);
    LossValue single = combinatorial_loss(t, ss, x, logits, 1);
    CHECK(bl.total == doctest::Approx(single.total));
    CHECK((bl.per_sample[0].grad_hier - 0.5 * single.grad_hier)
              .cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("mixed batch composes leaf and internal terms") {
    std::vector<SampleTerm> batch{leaf, internal};
    BatchLoss bl = total_loss(t, ss, batch, Reduction::kSum);
    const double expect = combinatorial_loss(t, ss, x, logits, 1).total +
                          hier_loss(ss, x, 0).value;
    CHECK(bl.total == doctest::Approx(expect));
  }
  SUBCASE("empty batch is rejected") {
    std::vector<SampleTerm> batch;
    CHECK_THROWS_AS(total_loss(t, ss, batch), DomainError);
  }
}

TEST_CASE("combinatorial gradient matches finite differences end to end") {
  // Joint check over sigmoid scores and leaf logits; at least 50 instances
  // across the two loops above plus this one.
  Rng rng(123);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(10));
    Taxonomy t = test::random_tree(rng, n);
    StateSpace ss = build_state_space(t);
    const int leaves = static_cast<int>(t.leaf_set().size());
    Eigen::VectorXd x = test::random_unit_interval(rng, n);
    Eigen::VectorXd logits(leaves);
    for (int i = 0; i < leaves; ++i) logits[i] = 4.0 * rng.unit() - 2.0;
    const NodeId g = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
    LossValue lv = combinatorial_loss(t, ss, x, logits, g);

    const double worst_x = test::max_grad_rel_err(
        [&](const Eigen::VectorXd& p) {
          return combinatorial_loss(t, ss, p, logits, g).total;
        },
        x, lv.grad_hier);
    CHECK(worst_x < test::kFdTolerance);

    const double worst_l = test::max_grad_rel_err(
        [&](const Eigen::VectorXd& p) {
          return combinatorial_loss(t, ss, x, p, g).total;
        },
        logits, lv.grad_ce);
    CHECK(worst_l < test::kFdTolerance);
  }
}
