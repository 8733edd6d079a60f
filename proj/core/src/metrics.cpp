#include "hmc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "hmc/errors.hpp"

namespace hmc {

std::vector<NodeId> full_path(const Taxonomy& t, NodeId v) {
  std::vector<NodeId> path = t.ancestors_of(v);
  path.push_back(v);
  return path;
}

namespace {

void check_records(const Taxonomy& t,
                   std::span<const PredictionRecord> records) {
  if (records.empty()) throw DomainError("no records to score");
  for (const PredictionRecord& rec : records) {
    if (rec.scores.size() != t.n())
      throw DimensionError("record carries " + std::to_string(rec.scores.size()) +
                           " scores for " + std::to_string(t.n()) + " labels");
    if (static_cast<int>(rec.truth_path.size()) != t.levels())
      throw DimensionError("truth path does not span every level");
  }
}

}  // namespace

std::vector<double> per_level_oa(const Taxonomy& t,
                                 std::span<const PredictionRecord> records) {
  check_records(t, records);
  std::vector<std::int64_t> correct(static_cast<std::size_t>(t.levels()), 0);
  for (const PredictionRecord& rec : records) {
    for (int l = 0; l < t.levels(); ++l) {
      const std::vector<NodeId>& nodes = t.nodes_at_level(l);
      NodeId best = nodes.front();
      for (NodeId v : nodes)
        if (rec.scores[v] > rec.scores[best]) best = v;  // ties keep lowest id
      if (best == rec.truth_path[static_cast<std::size_t>(l)])
        ++correct[static_cast<std::size_t>(l)];
    }
  }
  std::vector<double> oa(static_cast<std::size_t>(t.levels()));
  for (int l = 0; l < t.levels(); ++l)
    oa[static_cast<std::size_t>(l)] =
        static_cast<double>(correct[static_cast<std::size_t>(l)]) /
        static_cast<double>(records.size());
  return oa;
}

PrCurve average_prc(const Taxonomy& t,
                    std::span<const PredictionRecord> records) {
  check_records(t, records);

  // Flatten to (score, is-a-truth-label) pairs; one sorted sweep then
  // yields the cumulative TP/FP at every threshold.
  std::vector<std::pair<double, bool>> items;
  items.reserve(records.size() * static_cast<std::size_t>(t.n()));
  std::vector<double> thresholds;
  thresholds.reserve(items.capacity() + 2);
  std::vector<char> truth_mask(static_cast<std::size_t>(t.n()));
  for (const PredictionRecord& rec : records) {
    std::fill(truth_mask.begin(), truth_mask.end(), 0);
    for (NodeId v : rec.truth_path) truth_mask[static_cast<std::size_t>(v)] = 1;
    for (NodeId v = 0; v < t.n(); ++v) {
      items.emplace_back(rec.scores[v], truth_mask[static_cast<std::size_t>(v)] != 0);
      thresholds.push_back(rec.scores[v]);
    }
  }
  thresholds.push_back(0.0);
  thresholds.push_back(1.0);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  const auto total_truth =
      static_cast<double>(records.size() * static_cast<std::size_t>(t.levels()));
  PrCurve curve;
  std::size_t idx = 0;
  std::int64_t tp = 0, fp = 0;
  for (double cut : thresholds) {
    while (idx < items.size() && items[idx].first >= cut) {
      if (items[idx].second) ++tp; else ++fp;
      ++idx;
    }
    if (tp + fp == 0) continue;  // threshold predicts nothing
    PrPoint pt{static_cast<double>(tp) / static_cast<double>(tp + fp),
               static_cast<double>(tp) / total_truth};
    if (!curve.points.empty() &&
        curve.points.back().precision == pt.precision &&
        curve.points.back().recall == pt.recall)
      continue;
    curve.points.push_back(pt);
  }
  // Descending thresholds emit recall in ascending order already.
  curve.area = au_prc(curve.points);
  return curve;
}

double au_prc(std::span<const PrPoint> points) {
  if (points.empty()) throw DomainError("area of an empty curve");
  std::vector<PrPoint> pts(points.begin(), points.end());
  std::stable_sort(pts.begin(), pts.end(), [](const PrPoint& a, const PrPoint& b) {
    return a.recall < b.recall;
  });
  double area = 0.0;
  PrPoint prev{pts.front().precision, 0.0};
  for (const PrPoint& pt : pts) {
    area += (pt.recall - prev.recall) * 0.5 * (pt.precision + prev.precision);
    prev = pt;
  }
  return std::clamp(area, 0.0, 1.0);
}

}  // namespace hmc
