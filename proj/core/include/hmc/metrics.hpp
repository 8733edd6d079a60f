#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "hmc/taxonomy.hpp"

namespace hmc {

/// One evaluated sample: a score per label and the ground-truth path,
/// one node per level from the root down.
struct PredictionRecord {
  Eigen::VectorXd scores;
  std::vector<NodeId> truth_path;
};

/// Root-to-node path (ancestors then the node itself).
std::vector<NodeId> full_path(const Taxonomy& t, NodeId v);

/// Per-level accuracy of the within-level argmax against the truth path.
/// Ties resolve to the lowest node id. Index l of the result is level l.
std::vector<double> per_level_oa(const Taxonomy& t,
                                 std::span<const PredictionRecord> records);

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // recall ascending
  double area = 0.0;
};

/// Micro-averaged precision/recall swept over every distinct score plus the
/// endpoints 0 and 1; a label is predicted when its score reaches the
/// threshold. Thresholds that predict nothing are dropped, consecutive
/// duplicate points are merged.
PrCurve average_prc(const Taxonomy& t,
                    std::span<const PredictionRecord> records);

/// Area under a precision/recall curve by trapezoid over recall, anchored
/// at recall 0 with the first point's precision. A single point (p, r)
/// therefore scores p*r.
double au_prc(std::span<const PrPoint> points);

}  // namespace hmc
