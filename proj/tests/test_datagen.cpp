#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hmc/datagen.hpp"
#include "hmc/rng.hpp"

using namespace hmc;

namespace {

SyntheticSpec easy_spec() {
  SyntheticSpec spec;
  spec.branching = {3, 3};
  spec.input_dim = 6;
  spec.separations = {20.0, 8.0};
  spec.samples_per_leaf = 20;
  spec.sigma = 1.0;
  spec.seed = 1;
  return spec;
}

bool same_features(const Dataset& a, const Dataset& b) {
  if (a.samples.size() != b.samples.size()) return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    if (a.samples[i].features != b.samples[i].features) return false;
  return true;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("generate: shape arithmetic for branching [3,3]") {
  auto [t, train, test] = generate(easy_spec());
  CHECK(t.n() == 12);
  CHECK(t.levels() == 2);
  CHECK(t.leaf_set().size() == 9);
  CHECK(train.samples.size() + test.samples.size() == 180);
  // 20% of each 20-sample class is held out.
  CHECK(test.samples.size() == 36);
  CHECK(train.samples.size() == 144);
  CHECK(train.input_dim == 6);
  CHECK(train.taxonomy_hash == t.content_hash());
  validate_dataset(t, train);
  validate_dataset(t, test);

  // Fresh data is leaf-labeled throughout.
  for (const Sample& s : train.samples) CHECK(t.is_leaf(s.observed));

  // Stratified split: every leaf appears in both halves.
  std::set<NodeId> train_leaves, test_leaves;
  for (const Sample& s : train.samples) train_leaves.insert(s.truth_path.back());
  for (const Sample& s : test.samples) test_leaves.insert(s.truth_path.back());
  CHECK(train_leaves.size() == 9);
  CHECK(test_leaves.size() == 9);
}

TEST_CASE("generate: deterministic in the seed") {
  auto [t1, train1, test1] = generate(easy_spec());
  auto [t2, train2, test2] = generate(easy_spec());
  CHECK(t1 == t2);
  CHECK(same_features(train1, train2));
  CHECK(same_features(test1, test2));

  SyntheticSpec other = easy_spec();
  other.seed = 2;
  auto [t3, train3, test3] = generate(other);
  CHECK_FALSE(same_features(train1, train3));
}

TEST_CASE("generate: wide separations produce a separable mixture") {
  auto [t, train, test] = generate(easy_spec());
  CHECK(centroid_leaf_accuracy(t, train, test) > 0.99);
}

TEST_CASE("generate: spec validation") {
  SyntheticSpec spec = easy_spec();
  spec.branching.clear();
  CHECK_THROWS_AS(generate(spec), DomainError);
  spec = easy_spec();
  spec.branching = {3, 0};
  CHECK_THROWS_AS(generate(spec), DomainError);
  spec = easy_spec();
  spec.separations = {20.0};
  CHECK_THROWS_AS(generate(spec), DomainError);
  spec = easy_spec();
  spec.samples_per_leaf = 0;
  CHECK_THROWS_AS(generate(spec), DomainError);
  spec = easy_spec();
  spec.test_fraction = 1.0;
  CHECK_THROWS_AS(generate(spec), DomainError);
}

TEST_CASE("relabel: exact counts and untouched remainder") {
  auto [t, train, test] = generate(easy_spec());

  SUBCASE("proportion 0 changes nothing") {
    RelabelResult r = relabel(t, train, 0.0, 5);
    CHECK(r.selected.empty());
    for (std::size_t i = 0; i < train.samples.size(); ++i)
      CHECK(r.dataset.samples[i].observed == train.samples[i].observed);
  }
  SUBCASE("proportion 1 coarsens every label") {
    RelabelResult r = relabel(t, train, 1.0, 5);
    CHECK(r.selected.size() == train.samples.size());
    for (const Sample& s : r.dataset.samples) {
      CHECK_FALSE(t.is_leaf(s.observed));
      CHECK(s.observed == t.node(s.truth_path.back()).parent);
    }
  }
  SUBCASE("proportion 0.5 on 16-sample classes takes exactly 8 per class") {
    RelabelResult r = relabel(t, train, 0.5, 5);
    std::map<NodeId, int> coarse_per_class;
    for (const Sample& s : r.dataset.samples)
      if (!t.is_leaf(s.observed)) ++coarse_per_class[s.truth_path.back()];
    CHECK(coarse_per_class.size() == 9);
    for (const auto& [leaf, count] : coarse_per_class) CHECK(count == 8);
    CHECK(r.selected.size() == 72);
  }
  SUBCASE("round half up on odd class sizes") {
    SyntheticSpec odd = easy_spec();
    odd.samples_per_leaf = 5;
    odd.test_fraction = 0.0;
    auto [t2, train2, test2] = generate(odd);
    REQUIRE(train2.samples.size() == 45);
    // 0.3 * 5 = 1.5 rounds up to 2 per class.
    RelabelResult r = relabel(t2, train2, 0.3, 5);
    CHECK(r.selected.size() == 18);
  }
  SUBCASE("truth paths and features never change") {
    RelabelResult r = relabel(t, train, 0.7, 5);
    for (std::size_t i = 0; i < train.samples.size(); ++i) {
      CHECK(r.dataset.samples[i].truth_path == train.samples[i].truth_path);
      CHECK(r.dataset.samples[i].features == train.samples[i].features);
    }
    // Unselected samples keep their leaf label.
    std::set<std::size_t> chosen(r.selected.begin(), r.selected.end());
    for (std::size_t i = 0; i < train.samples.size(); ++i)
      if (!chosen.count(i))
        CHECK(r.dataset.samples[i].observed == train.samples[i].observed);
    validate_dataset(t, r.dataset);
  }
  SUBCASE("bad proportions are rejected") {
    CHECK_THROWS_AS(relabel(t, train, -0.1, 5), DomainError);
    CHECK_THROWS_AS(relabel(t, train, 1.1, 5), DomainError);
  }
  SUBCASE("already-coarse data is rejected") {
    RelabelResult r = relabel(t, train, 1.0, 5);
    CHECK_THROWS_AS(relabel(t, r.dataset, 0.5, 5), DomainError);
  }
}

TEST_CASE("relabel: same seed picks the same samples, and the draw commutes with shuffling") {
  auto [t, train, test] = generate(easy_spec());
  RelabelResult first = relabel(t, train, 0.4, 9);
  RelabelResult again = relabel(t, train, 0.4, 9);
  CHECK(first.selected == again.selected);

  RelabelResult other_seed = relabel(t, train, 0.4, 10);
  CHECK(first.selected != other_seed.selected);

  // Shuffle the dataset, relabel with the same seed, and compare the chosen
  // samples by content: the same underlying samples must be selected.
  Dataset shuffled = train;
  Rng rng(123);
  rng.shuffle(shuffled.samples);
  RelabelResult shuffled_pick = relabel(t, shuffled, 0.4, 9);

  auto key = [](const Sample& s) {
    return std::vector<double>(s.features.data(),
                               s.features.data() + s.features.size());
  };
  std::set<std::vector<double>> original_keys, shuffled_keys;
  for (std::size_t i : first.selected)
    original_keys.insert(key(train.samples[i]));
  for (std::size_t i : shuffled_pick.selected)
    shuffled_keys.insert(key(shuffled.samples[i]));
  CHECK(original_keys == shuffled_keys);
}

TEST_CASE("degrade: block averaging") {
  auto [t, train, test] = generate(easy_spec());
  std::vector<std::size_t> all(train.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  SUBCASE("factor 1 is the identity") {
    Dataset out = degrade(train, all, 1);
    CHECK(same_features(out, train));
  }
  SUBCASE("factor = input_dim collapses features to a constant") {
    Dataset out = degrade(train, all, 6);
    for (const Sample& s : out.samples) {
      for (int i = 1; i < 6; ++i)
        CHECK(s.features[i] == doctest::Approx(s.features[0]).epsilon(1e-15));
    }
  }
  SUBCASE("only selected samples change") {
    std::vector<std::size_t> some{0, 2, 4};
    Dataset out = degrade(train, some, 3);
    CHECK(out.samples[0].features != train.samples[0].features);
    CHECK(out.samples[1].features == train.samples[1].features);
    CHECK(out.samples[3].features == train.samples[3].features);
  }
  SUBCASE("degrading hurts the centroid oracle") {
    const double before = centroid_leaf_accuracy(t, train, test);
    std::vector<std::size_t> all_test(test.samples.size());
    for (std::size_t i = 0; i < all_test.size(); ++i) all_test[i] = i;
    Dataset rough = degrade(test, all_test, 6);
    CHECK(centroid_leaf_accuracy(t, train, rough) < before);
  }
  SUBCASE("factor must divide the width") {
    CHECK_THROWS_AS(degrade(train, all, 4), DomainError);
    CHECK_THROWS_AS(degrade(train, all, 0), DomainError);
  }
  SUBCASE("out-of-range selection is rejected") {
    std::vector<std::size_t> bad{train.samples.size()};
    CHECK_THROWS_AS(degrade(train, bad, 2), DomainError);
  }
}

TEST_CASE("degrade: additive noise mode") {
  auto [t, train, test] = generate(easy_spec());
  std::vector<std::size_t> some{1, 3};
  Dataset a = degrade(train, some, 4, DegradeMode::kAdditiveNoise, 7);
  Dataset b = degrade(train, some, 4, DegradeMode::kAdditiveNoise, 7);
  CHECK(same_features(a, b));
  CHECK(a.samples[1].features != train.samples[1].features);
  CHECK(a.samples[0].features == train.samples[0].features);
  // Noise mode has no divisibility requirement.
  CHECK_NOTHROW(degrade(train, some, 5, DegradeMode::kAdditiveNoise, 7));
}

TEST_CASE("dataset file round-trips exactly") {
  auto [t, train, test] = generate(easy_spec());
  RelabelResult r = relabel(t, train, 0.5, 3);  // mix of leaf and internal labels
  TempFile file("hmc_test_data.tsv");
  write_dataset(file.path, r.dataset);
  Dataset back = read_dataset(file.path, t);
  CHECK(back.input_dim == r.dataset.input_dim);
  CHECK(back.taxonomy_hash == r.dataset.taxonomy_hash);
  REQUIRE(back.samples.size() == r.dataset.samples.size());
  for (std::size_t i = 0; i < back.samples.size(); ++i) {
    CHECK(back.samples[i].features == r.dataset.samples[i].features);
    CHECK(back.samples[i].observed == r.dataset.samples[i].observed);
    CHECK(back.samples[i].truth_path == r.dataset.samples[i].truth_path);
  }
}

TEST_CASE("dataset file errors") {
  auto [t, train, test] = generate(easy_spec());
  TempFile file("hmc_test_data_err.tsv");
  write_dataset(file.path, train);

  SUBCASE("wrong taxonomy") {
    Taxonomy other = parse_taxonomy("0\t-\tz\n1\t0\tz0\n2\t0\tz1\n");
    CHECK_THROWS_AS(read_dataset(file.path, other), CompatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_dataset("/nonexistent/nope.tsv", t), IoError);
  }
  SUBCASE("garbage header") {
    std::ofstream out(file.path, std::ios::trunc);
    out << "not a dataset\n";
    out.close();
    CHECK_THROWS_AS(read_dataset(file.path, t), ParseError);
  }
  SUBCASE("bad record") {
    // Valid header and first record, then a junk line.
    Dataset tiny{{train.samples[0]}, t.content_hash(), 6};
    write_dataset(file.path, tiny);
    std::ofstream app(file.path, std::ios::app);
    app << "9\tnot-an-id\t1,2,3,4,5,6\n";
    app.close();
    try {
      read_dataset(file.path, t);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::BadRecord);
      CHECK(e.line() == 3);
    }
  }
}

TEST_CASE("validate_dataset catches inconsistencies") {
  auto [t, train, test] = generate(easy_spec());
  SUBCASE("hash mismatch") {
    Dataset bad = train;
    bad.taxonomy_hash ^= 1;
    CHECK_THROWS_AS(validate_dataset(t, bad), CompatError);
  }
  SUBCASE("feature width") {
    Dataset bad = train;
    bad.samples[0].features.resize(3);
    CHECK_THROWS_AS(validate_dataset(t, bad), DimensionError);
  }
  SUBCASE("non-finite feature") {
    Dataset bad = train;
    bad.samples[0].features[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(validate_dataset(t, bad), DomainError);
  }
  SUBCASE("observed off the truth path") {
    Dataset bad = train;
    const NodeId leaf = bad.samples[0].truth_path.back();
    // Any other leaf is off this sample's path.
    for (NodeId cand : t.leaf_set()) {
      if (cand != leaf) {
        bad.samples[0].observed = cand;
        break;
      }
    }
    CHECK_THROWS_AS(validate_dataset(t, bad), DomainError);
  }
  SUBCASE("broken parent link in the path") {
    Dataset bad = train;
    REQUIRE(bad.samples[0].truth_path.size() == 2);
    // Swap in a level-0 node that is not the leaf's parent.
    const NodeId root = bad.samples[0].truth_path[0];
    bad.samples[0].truth_path[0] = root == 0 ? 1 : 0;
    CHECK_THROWS_AS(validate_dataset(t, bad), DomainError);
  }
}
