#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hmc/taxonomy.hpp"

namespace hmc {

/// Shape and difficulty of a synthetic hierarchical Gaussian mixture.
/// branching[0] is the number of roots; branching[l] is the children per
/// level-(l-1) node. separations[l] is the exact length of the center
/// offset added at level l, so separation/sigma ratios control how well a
/// nearest-centroid rule can tell classes apart at each granularity.
struct SyntheticSpec {
  std::vector<int> branching;
  int input_dim = 0;
  std::vector<double> separations;  // one per level
  int samples_per_leaf = 0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;  // per-leaf share split off as held-out data
};

struct Sample {
  Eigen::VectorXd features;
  NodeId observed = kNoParent;       // training label; may be internal
  std::vector<NodeId> truth_path;    // root..leaf ground truth
};

struct Dataset {
  std::vector<Sample> samples;
  std::uint64_t taxonomy_hash = 0;
  int input_dim = 0;
};

/// Checks every sample against the taxonomy: feature width, finite values,
/// a valid root-to-leaf truth path, and an observed label on that path.
void validate_dataset(const Taxonomy& t, const Dataset& d);

/// Builds the level-major taxonomy for spec.branching plus disjoint,
/// per-leaf stratified train/test splits of a hierarchical Gaussian
/// mixture. Each node's center is its parent's center plus a uniformly
/// oriented offset of exactly separations[level]; samples add
/// sigma-scaled isotropic noise around their leaf's center. Deterministic
/// in spec.seed.
std::tuple<Taxonomy, Dataset, Dataset> generate(const SyntheticSpec& spec);

struct RelabelResult {
  Dataset dataset;
  std::vector<std::size_t> selected;  // indices into dataset.samples, ascending
};

/// Coarsens observed labels: per leaf class, exactly
/// round-half-up(proportion * class size) samples, drawn uniformly without
/// replacement, get their observed label moved to the leaf's parent. Truth
/// paths never change. Selection is keyed on (seed, class id) over a
/// content-ordered view of the class, so it commutes with shuffling the
/// dataset.
RelabelResult relabel(const Taxonomy& t, const Dataset& d, double proportion,
                      std::uint64_t seed);

enum class DegradeMode {
  kBlockAverage,   // mean over groups of `factor` consecutive dims, re-expanded
  kAdditiveNoise,  // seeded unit-normal noise scaled by `factor`
};

/// Destroys feature detail on the selected samples only. Block averaging
/// is the default: it deterministically removes within-block variation,
/// the feature-vector counterpart of cutting resolution. `factor` must
/// divide input_dim in that mode.
Dataset degrade(const Dataset& d, std::span<const std::size_t> selected,
                int factor, DegradeMode mode = DegradeMode::kBlockAverage,
                std::uint64_t seed = 0);

/// Predicts each sample's leaf by nearest class centroid (centroids from
/// `reference`, distances on `queries`); returns leaf accuracy. Used as an
/// independent check that generated data is separable.
double centroid_leaf_accuracy(const Taxonomy& t, const Dataset& reference,
                              const Dataset& queries);

/// Text format: a header carrying format version, feature width, and the
/// taxonomy hash, then one sample per line (observed id, truth leaf id,
/// comma-separated features). Floats use 17 significant digits, so
/// read(write(d)) reproduces d exactly. Reading needs the taxonomy to
/// expand truth leaves back into paths; the stored hash must match it.
void write_dataset(const std::string& path, const Dataset& d);
Dataset read_dataset(const std::string& path, const Taxonomy& t);

}  // namespace hmc
