#include "hmc/taxonomy.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "hmc/hashing.hpp"

namespace hmc {

Taxonomy::Taxonomy(std::vector<std::pair<std::string, NodeId>> nodes) {
  if (nodes.empty()) {
    throw ParseError(ParseError::Kind::EmptyFile, "taxonomy has no nodes");
  }
  const int n = static_cast<int>(nodes.size());
  nodes_.resize(nodes.size());
  children_.resize(nodes.size());
  for (int v = 0; v < n; ++v) {
    const NodeId parent = nodes[v].second;
    if (parent != kNoParent && (parent < 0 || parent >= n)) {
      throw ParseError(ParseError::Kind::UnknownParent,
                       "node " + std::to_string(v) + " references parent " +
                           std::to_string(parent) + " which does not exist");
    }
    nodes_[v].name = std::move(nodes[v].first);
    nodes_[v].parent = parent;
  }

  // Levels by walking parent chains; a walk longer than n nodes is a cycle.
  std::vector<int> level(nodes_.size(), -1);
  for (int v = 0; v < n; ++v) {
    if (level[v] >= 0) continue;
    std::vector<NodeId> chain;
    NodeId cur = v;
    while (cur != kNoParent && level[cur] < 0) {
      chain.push_back(cur);
      cur = nodes_[cur].parent;
      if (static_cast<int>(chain.size()) > n) {
        throw ParseError(ParseError::Kind::CycleDetected,
                         "parent links form a cycle through node " +
                             std::to_string(v));
      }
      if (cur != kNoParent &&
          std::find(chain.begin(), chain.end(), cur) != chain.end()) {
        throw ParseError(ParseError::Kind::CycleDetected,
                         "parent links form a cycle through node " +
                             std::to_string(cur));
      }
    }
    int base = (cur == kNoParent) ? -1 : level[cur];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      level[*it] = ++base;
    }
  }
  for (int v = 0; v < n; ++v) {
    nodes_[v].level = level[v];
    levels_ = std::max(levels_, level[v] + 1);
    if (nodes_[v].parent != kNoParent) {
      children_[nodes_[v].parent].push_back(v);
    }
  }

  // Names must be unique within a level.
  std::unordered_set<std::string> seen;
  for (int v = 0; v < n; ++v) {
    std::string key = std::to_string(nodes_[v].level) + "\x1f" + nodes_[v].name;
    if (!seen.insert(std::move(key)).second) {
      throw ParseError(ParseError::Kind::DuplicateName,
                       "name '" + nodes_[v].name + "' repeats at level " +
                           std::to_string(nodes_[v].level));
    }
  }

  for (int v = 0; v < n; ++v) {
    if (children_[v].empty()) leaves_.push_back(v);
  }
  uniform_depth_ = std::all_of(leaves_.begin(), leaves_.end(), [&](NodeId v) {
    return nodes_[v].level == levels_ - 1;
  });
}

NodeId Taxonomy::check(NodeId v) const {
  if (v < 0 || v >= n()) {
    throw DomainError("invalid node id " + std::to_string(v));
  }
  return v;
}

const Node& Taxonomy::node(NodeId v) const { return nodes_[check(v)]; }

int Taxonomy::leaf_index_of(NodeId v) const {
  check(v);
  auto it = std::lower_bound(leaves_.begin(), leaves_.end(), v);
  if (it == leaves_.end() || *it != v) {
    throw DomainError("node " + std::to_string(v) + " is not a leaf");
  }
  return static_cast<int>(it - leaves_.begin());
}

std::vector<NodeId> Taxonomy::ancestors_of(NodeId v) const {
  check(v);
  std::vector<NodeId> path;
  for (NodeId cur = nodes_[v].parent; cur != kNoParent;
       cur = nodes_[cur].parent) {
    path.push_back(cur);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<NodeId> Taxonomy::nodes_at_level(int l) const {
  if (l < 0 || l >= levels_) {
    throw DomainError("level " + std::to_string(l) + " out of range [0, " +
                      std::to_string(levels_) + ")");
  }
  std::vector<NodeId> out;
  for (int v = 0; v < n(); ++v) {
    if (nodes_[v].level == l) out.push_back(v);
  }
  return out;
}

bool Taxonomy::is_ancestor(NodeId a, NodeId b) const {
  check(a);
  check(b);
  if (nodes_[a].level >= nodes_[b].level) return false;
  NodeId cur = b;
  for (int step = nodes_[b].level - nodes_[a].level; step > 0; --step) {
    cur = nodes_[cur].parent;
  }
  return cur == a;
}

bool Taxonomy::are_exclusive(NodeId a, NodeId b) const {
  check(a);
  check(b);
  if (a == b) {
    throw DomainError("are_exclusive requires two distinct nodes");
  }
  return !is_ancestor(a, b) && !is_ancestor(b, a);
}

std::string Taxonomy::serialize() const {
  std::ostringstream out;
  for (int v = 0; v < n(); ++v) {
    out << v << '\t';
    if (nodes_[v].parent == kNoParent) {
      out << '-';
    } else {
      out << nodes_[v].parent;
    }
    out << '\t' << nodes_[v].name << '\n';
  }
  return out.str();
}

std::uint64_t Taxonomy::content_hash() const { return fnv1a64(serialize()); }

bool Taxonomy::nodes_same(const Taxonomy& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (size_t v = 0; v < nodes_.size(); ++v) {
    if (nodes_[v].name != other.nodes_[v].name ||
        nodes_[v].parent != other.nodes_[v].parent) {
      return false;
    }
  }
  return true;
}

namespace {

// Splits on single tabs; the name field may itself contain spaces.
std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

bool parse_int(const std::string& s, long& out) {
  if (s.empty()) return false;
  size_t pos = 0;
  try {
    out = std::stol(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

}  // namespace

Taxonomy parse_taxonomy(const std::string& text) {
  std::vector<std::pair<std::string, NodeId>> nodes;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(ParseError::Kind::BadLine,
                       "expected <id>\\t<parent-or-dash>\\t<name>", line_no);
    }
    long id = 0;
    if (!parse_int(fields[0], id)) {
      throw ParseError(ParseError::Kind::BadLine, "unparseable id '" +
                       fields[0] + "'", line_no);
    }
    const long expected = static_cast<long>(nodes.size());
    if (id < expected) {
      throw ParseError(ParseError::Kind::DuplicateId,
                       "id " + std::to_string(id) + " already defined",
                       line_no);
    }
    if (id != expected) {
      throw ParseError(ParseError::Kind::NonConsecutiveId,
                       "expected id " + std::to_string(expected) + ", got " +
                           std::to_string(id), line_no);
    }
    NodeId parent = kNoParent;
    if (fields[1] != "-") {
      long p = 0;
      if (!parse_int(fields[1], p)) {
        throw ParseError(ParseError::Kind::BadLine, "unparseable parent '" +
                         fields[1] + "'", line_no);
      }
      parent = static_cast<NodeId>(p);
    }
    if (fields[2].empty()) {
      throw ParseError(ParseError::Kind::BadLine, "empty node name", line_no);
    }
    nodes.emplace_back(fields[2], parent);
  }
  if (nodes.empty()) {
    throw ParseError(ParseError::Kind::EmptyFile,
                     "taxonomy file contains no nodes");
  }
  return Taxonomy(std::move(nodes));
}

std::vector<NodeId> ancestors_of(const Taxonomy& t, NodeId v) {
  return t.ancestors_of(v);
}

std::vector<NodeId> nodes_at_level(const Taxonomy& t, int l) {
  return t.nodes_at_level(l);
}

bool are_exclusive(const Taxonomy& t, NodeId a, NodeId b) {
  return t.are_exclusive(a, b);
}

}  // namespace hmc
