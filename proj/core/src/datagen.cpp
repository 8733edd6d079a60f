#include "hmc/datagen.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "hmc/errors.hpp"
#include "hmc/hashing.hpp"
#include "hmc/metrics.hpp"
#include "hmc/rng.hpp"

namespace hmc {

namespace {

// floor(x + 0.5): 0.5 rounds away from zero for the nonnegative inputs here.
std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

Eigen::VectorXd random_direction(Rng& rng, int dim, double length) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  const double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v * length;
  }
  return v * (length / norm);
}

void check_spec(const SyntheticSpec& spec) {
  if (spec.branching.empty()) throw DomainError("branching must be non-empty");
  for (int b : spec.branching)
    if (b < 1) throw DomainError("branching factors must be at least 1");
  if (spec.input_dim < 1) throw DomainError("input_dim must be at least 1");
  if (spec.separations.size() != spec.branching.size())
    throw DomainError("need one separation per level");
  for (double s : spec.separations)
    if (!(s > 0.0)) throw DomainError("separations must be positive");
  if (spec.samples_per_leaf < 1)
    throw DomainError("samples_per_leaf must be at least 1");
  if (!(spec.sigma >= 0.0)) throw DomainError("sigma must be non-negative");
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0))
    throw DomainError("test_fraction must lie in [0, 1)");
}

}  // namespace

void validate_dataset(const Taxonomy& t, const Dataset& d) {
  if (d.taxonomy_hash != t.content_hash())
    throw CompatError("dataset was built against taxonomy " +
                      hash_hex(d.taxonomy_hash) + " but got " +
                      hash_hex(t.content_hash()));
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const Sample& s = d.samples[i];
    const std::string where = "sample " + std::to_string(i);
    if (s.features.size() != d.input_dim)
      throw DimensionError(where + " has " + std::to_string(s.features.size()) +
                           " features, expected " + std::to_string(d.input_dim));
    if (!s.features.allFinite())
      throw DomainError(where + " has non-finite features");
    if (static_cast<int>(s.truth_path.size()) != t.levels())
      throw DomainError(where + " truth path does not span every level");
    for (std::size_t l = 0; l < s.truth_path.size(); ++l) {
      const NodeId v = s.truth_path[l];
      if (v < 0 || v >= t.n()) throw DomainError(where + " names unknown node");
      if (t.level_of(v) != static_cast<int>(l))
        throw DomainError(where + " truth path is out of level order");
      if (l == 0 ? !t.is_root(v) : t.node(v).parent != s.truth_path[l - 1])
        throw DomainError(where + " truth path breaks parent links");
    }
    if (!t.is_leaf(s.truth_path.back()))
      throw DomainError(where + " truth path does not end at a leaf");
    if (std::find(s.truth_path.begin(), s.truth_path.end(), s.observed) ==
        s.truth_path.end())
      throw DomainError(where + " observed label is off the truth path");
  }
}

std::tuple<Taxonomy, Dataset, Dataset> generate(const SyntheticSpec& spec) {
  check_spec(spec);
  const int levels = static_cast<int>(spec.branching.size());

  // Level-major ids: all of level l before any of level l+1.
  std::vector<std::pair<std::string, NodeId>> nodes;
  std::vector<NodeId> prev_level;
  NodeId next_id = 0;
  for (int l = 0; l < levels; ++l) {
    std::vector<NodeId> cur;
    const int fanout = spec.branching[static_cast<std::size_t>(l)];
    const std::size_t parents = l == 0 ? 1 : prev_level.size();
    int within = 0;
    for (std::size_t p = 0; p < parents; ++p) {
      const NodeId parent = l == 0 ? kNoParent : prev_level[p];
      for (int c = 0; c < fanout; ++c) {
        nodes.emplace_back("l" + std::to_string(l) + "n" + std::to_string(within),
                           parent);
        cur.push_back(next_id++);
        ++within;
      }
    }
    prev_level = std::move(cur);
  }
  Taxonomy t(std::move(nodes));

  Rng rng(spec.seed);
  std::vector<Eigen::VectorXd> centers(static_cast<std::size_t>(t.n()));
  for (NodeId v = 0; v < t.n(); ++v) {
    const double sep = spec.separations[static_cast<std::size_t>(t.level_of(v))];
    Eigen::VectorXd offset = random_direction(rng, spec.input_dim, sep);
    centers[static_cast<std::size_t>(v)] =
        t.is_root(v) ? offset
                     : centers[static_cast<std::size_t>(t.node(v).parent)] + offset;
  }

  const std::size_t per_leaf = static_cast<std::size_t>(spec.samples_per_leaf);
  const std::size_t test_count =
      std::min(per_leaf, round_half_up(spec.test_fraction * static_cast<double>(per_leaf)));
  Dataset train{{}, t.content_hash(), spec.input_dim};
  Dataset test{{}, t.content_hash(), spec.input_dim};
  for (NodeId leaf : t.leaf_set()) {
    const std::vector<NodeId> path = full_path(t, leaf);
    for (std::size_t k = 0; k < per_leaf; ++k) {
      Sample s;
      s.features = centers[static_cast<std::size_t>(leaf)];
      for (int i = 0; i < spec.input_dim; ++i)
        s.features[i] += spec.sigma * rng.normal();
      s.observed = leaf;
      s.truth_path = path;
      (k < per_leaf - test_count ? train : test).samples.push_back(std::move(s));
    }
  }
  return {std::move(t), std::move(train), std::move(test)};
}

RelabelResult relabel(const Taxonomy& t, const Dataset& d, double proportion,
                      std::uint64_t seed) {
  if (!(proportion >= 0.0 && proportion <= 1.0))
    throw DomainError("relabel proportion must lie in [0, 1]");
  if (d.taxonomy_hash != t.content_hash())
    throw CompatError("dataset does not match the taxonomy");

  std::map<NodeId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const NodeId obs = d.samples[i].observed;
    if (obs < 0 || obs >= t.n() || !t.is_leaf(obs))
      throw DomainError("sample " + std::to_string(i) +
                        " is not leaf-labeled; relabel expects fresh data");
    by_class[obs].push_back(i);
  }

  RelabelResult out{d, {}};
  for (auto& [leaf, members] : by_class) {
    // Content order makes the draw independent of sample positions, so
    // relabeling commutes with shuffling the dataset.
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      const Eigen::VectorXd& fa = d.samples[a].features;
      const Eigen::VectorXd& fb = d.samples[b].features;
      return std::lexicographical_compare(fa.data(), fa.data() + fa.size(),
                                          fb.data(), fb.data() + fb.size());
    });
    const std::size_t take =
        round_half_up(proportion * static_cast<double>(members.size()));
    Rng rng(Rng::substream(seed, static_cast<std::uint64_t>(leaf)));
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.below(members.size() - i));
      std::swap(members[i], members[j]);
      out.dataset.samples[members[i]].observed = t.node(leaf).parent;
      out.selected.push_back(members[i]);
    }
  }
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

Dataset degrade(const Dataset& d, std::span<const std::size_t> selected,
                int factor, DegradeMode mode, std::uint64_t seed) {
  if (factor < 1) throw DomainError("degrade factor must be at least 1");
  if (mode == DegradeMode::kBlockAverage && d.input_dim % factor != 0)
    throw DomainError("factor " + std::to_string(factor) +
                      " does not divide input_dim " + std::to_string(d.input_dim));
  Dataset out = d;
  Rng rng(seed);
  for (std::size_t idx : selected) {
    if (idx >= out.samples.size())
      throw DomainError("selected index " + std::to_string(idx) +
                        " is out of range");
    Eigen::VectorXd& f = out.samples[idx].features;
    if (mode == DegradeMode::kBlockAverage) {
      for (int b = 0; b < d.input_dim; b += factor) {
        const double mean = f.segment(b, factor).mean();
        f.segment(b, factor).setConstant(mean);
      }
    } else {
      for (int i = 0; i < d.input_dim; ++i)
        f[i] += static_cast<double>(factor) * rng.normal();
    }
  }
  return out;
}

double centroid_leaf_accuracy(const Taxonomy& t, const Dataset& reference,
                              const Dataset& queries) {
  if (reference.samples.empty() || queries.samples.empty())
    throw DomainError("centroid oracle needs non-empty datasets");
  std::map<NodeId, std::pair<Eigen::VectorXd, std::size_t>> sums;
  for (const Sample& s : reference.samples) {
    const NodeId leaf = s.truth_path.back();
    auto it = sums.find(leaf);
    if (it == sums.end())
      sums.emplace(leaf, std::make_pair(s.features, std::size_t{1}));
    else {
      it->second.first += s.features;
      ++it->second.second;
    }
  }
  std::vector<std::pair<NodeId, Eigen::VectorXd>> centroids;
  centroids.reserve(sums.size());
  for (const auto& [leaf, acc] : sums)
    centroids.emplace_back(leaf,
                           acc.first / static_cast<double>(acc.second));

  std::size_t correct = 0;
  for (const Sample& s : queries.samples) {
    NodeId best = centroids.front().first;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [leaf, c] : centroids) {
      const double dist = (s.features - c).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = leaf;
      }
    }
    if (best == s.truth_path.back()) ++correct;
  }
  return static_cast<double>(correct) /
         static_cast<double>(queries.samples.size());
}

namespace {

constexpr const char* kDatasetMagic = "hmc-dataset";
constexpr int kDatasetVersion = 1;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Whole-string integer; rejects the trailing junk std::stoi would swallow.
long parse_int(const std::string& text, ParseError::Kind kind,
               const std::string& what, int line_no) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw ParseError(kind, "bad " + what + " '" + text + "'", line_no);
  return v;
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << kDatasetMagic << '\t' << kDatasetVersion << '\t' << d.input_dim << '\t'
      << hash_hex(d.taxonomy_hash) << '\n';
  char buf[40];
  for (const Sample& s : d.samples) {
    out << s.observed << '\t' << s.truth_path.back() << '\t';
    for (Eigen::Index i = 0; i < s.features.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s.features[i]);
      if (i > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write to " + path + " failed");
}

Dataset read_dataset(const std::string& path, const Taxonomy& t) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(ParseError::Kind::BadHeader, "empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> head = split(line, '\t');
  if (head.size() != 4 || head[0] != kDatasetMagic)
    throw ParseError(ParseError::Kind::BadHeader, "not a dataset file", 1);
  if (head[1] != std::to_string(kDatasetVersion))
    throw ParseError(ParseError::Kind::BadHeader,
                     "unsupported dataset version " + head[1], 1);
  Dataset d;
  d.input_dim = static_cast<int>(
      parse_int(head[2], ParseError::Kind::BadHeader, "input_dim", 1));
  if (d.input_dim < 1)
    throw ParseError(ParseError::Kind::BadHeader, "bad input_dim field", 1);
  d.taxonomy_hash = parse_hash_hex(head[3]);
  if (d.taxonomy_hash != t.content_hash())
    throw CompatError("dataset was built against taxonomy " + head[3] +
                      " but got " + hash_hex(t.content_hash()));

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 3)
      throw ParseError(ParseError::Kind::BadRecord,
                       "expected observed, truth leaf, features", line_no);
    Sample s;
    s.observed = static_cast<NodeId>(
        parse_int(fields[0], ParseError::Kind::BadRecord, "observed id", line_no));
    const auto leaf = static_cast<NodeId>(
        parse_int(fields[1], ParseError::Kind::BadRecord, "truth id", line_no));
    if (leaf < 0 || leaf >= t.n() || !t.is_leaf(leaf))
      throw ParseError(ParseError::Kind::BadRecord, "truth id is not a leaf",
                       line_no);
    s.truth_path = full_path(t, leaf);
    const std::vector<std::string> feats = split(fields[2], ',');
    if (static_cast<int>(feats.size()) != d.input_dim)
      throw ParseError(ParseError::Kind::BadRecord,
                       "expected " + std::to_string(d.input_dim) + " features",
                       line_no);
    s.features.resize(d.input_dim);
    for (std::size_t i = 0; i < feats.size(); ++i) {
      const char* text = feats[i].c_str();
      char* end = nullptr;
      s.features[static_cast<Eigen::Index>(i)] = std::strtod(text, &end);
      if (end == text || *end != '\0')
        throw ParseError(ParseError::Kind::BadRecord,
                         "bad feature value '" + feats[i] + "'", line_no);
    }
    d.samples.push_back(std::move(s));
  }
  validate_dataset(t, d);
  return d;
}

}  // namespace hmc
