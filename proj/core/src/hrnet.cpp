#include "hmc/hrnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hmc/errors.hpp"
#include "hmc/hashing.hpp"
#include "hmc/rng.hpp"

namespace hmc {

namespace {

void validate_config(const HrnConfig& cfg, const Taxonomy& t) {
  if (cfg.input_dim < 1) throw ConfigError("input_dim must be at least 1");
  if (cfg.block_dim < 1) throw ConfigError("block_dim must be at least 1");
  for (int d : cfg.trunk_dims)
    if (d < 1) throw ConfigError("trunk widths must be at least 1");
  if (cfg.levels != t.levels())
    throw ConfigError("config declares " + std::to_string(cfg.levels) +
                      " levels but the taxonomy has " +
                      std::to_string(t.levels()));
  if (!t.uniform_leaf_depth())
    throw ConfigError(
        "the network requires every leaf at the deepest level; "
        "the taxonomy is ragged");
}

}  // namespace

HrnModel::HrnModel(const HrnConfig& cfg, const Taxonomy& t) : cfg_(cfg) {
  validate_config(cfg, t);
  n_ = t.n();
  leaf_count_ = static_cast<int>(t.leaf_set().size());
  level_nodes_.reserve(static_cast<std::size_t>(cfg.levels));
  for (int l = 0; l < cfg.levels; ++l) level_nodes_.push_back(t.nodes_at_level(l));
  trunk_out_dim_ = cfg.trunk_dims.empty() ? cfg.input_dim : cfg.trunk_dims.back();

  Eigen::Index off = 0;
  auto add = [&](Eigen::Index rows, Eigen::Index cols) {
    layout_.push_back({off, rows, cols});
    off += rows * cols;
  };

  int prev = cfg.input_dim;
  for (int d : cfg.trunk_dims) {
    add(d, prev);  // weight
    add(d, 1);     // bias
    prev = d;
  }
  trunk_params_ = off;

  idx_blocks_ = static_cast<int>(layout_.size());
  for (int l = 0; l < cfg.levels; ++l) {
    add(cfg.block_dim, trunk_out_dim_);
    add(cfg.block_dim, 1);
    add(cfg.block_dim, cfg.block_dim);
    add(cfg.block_dim, 1);
  }
  idx_residual_ = static_cast<int>(layout_.size());
  for (int l = 1; l < cfg.levels; ++l) add(cfg.block_dim, cfg.block_dim);
  idx_heads_ = static_cast<int>(layout_.size());
  for (int l = 0; l < cfg.levels; ++l) {
    const auto width = static_cast<Eigen::Index>(level_nodes_[l].size());
    add(width, cfg.block_dim);
    add(width, 1);
  }
  idx_ce_ = static_cast<int>(layout_.size());
  add(leaf_count_, cfg.block_dim);
  add(leaf_count_, 1);

  params_ = Eigen::VectorXd::Zero(off);
}

Eigen::Map<const Eigen::MatrixXd> HrnModel::view(int tensor_index) const {
  const TensorRef& r = layout_[static_cast<std::size_t>(tensor_index)];
  return {params_.data() + r.offset, r.rows, r.cols};
}

Eigen::Map<const Eigen::MatrixXd> HrnModel::trunk_w(int j) const {
  return view(2 * j);
}
Eigen::Map<const Eigen::VectorXd> HrnModel::trunk_b(int j) const {
  const TensorRef& r = layout_[static_cast<std::size_t>(2 * j + 1)];
  return {params_.data() + r.offset, r.rows};
}
Eigen::Map<const Eigen::MatrixXd> HrnModel::block_w1(int l) const {
  return view(idx_blocks_ + 4 * l);
}
Eigen::Map<const Eigen::VectorXd> HrnModel::block_b1(int l) const {
  const TensorRef& r = layout_[static_cast<std::size_t>(idx_blocks_ + 4 * l + 1)];
  return {params_.data() + r.offset, r.rows};
}
Eigen::Map<const Eigen::MatrixXd> HrnModel::block_w2(int l) const {
  return view(idx_blocks_ + 4 * l + 2);
}
Eigen::Map<const Eigen::VectorXd> HrnModel::block_b2(int l) const {
  const TensorRef& r = layout_[static_cast<std::size_t>(idx_blocks_ + 4 * l + 3)];
  return {params_.data() + r.offset, r.rows};
}
Eigen::Map<const Eigen::MatrixXd> HrnModel::residual_w(int l) const {
  if (l < 1 || l >= cfg_.levels)
    throw DomainError("residual map index out of range");
  return view(idx_residual_ + (l - 1));
}
Eigen::Map<const Eigen::MatrixXd> HrnModel::head_w(int l) const {
  return view(idx_heads_ + 2 * l);
}
Eigen::Map<const Eigen::VectorXd> HrnModel::head_b(int l) const {
  const TensorRef& r = layout_[static_cast<std::size_t>(idx_heads_ + 2 * l + 1)];
  return {params_.data() + r.offset, r.rows};
}
Eigen::Map<const Eigen::MatrixXd> HrnModel::ce_w() const { return view(idx_ce_); }
Eigen::Map<const Eigen::VectorXd> HrnModel::ce_b() const {
  const TensorRef& r = layout_[static_cast<std::size_t>(idx_ce_ + 1)];
  return {params_.data() + r.offset, r.rows};
}

HrnModel init_model(const HrnConfig& cfg, const Taxonomy& t) {
  HrnModel m(cfg, t);
  Rng rng(cfg.seed);
  Eigen::VectorXd& p = m.mutable_params();
  // Weights are uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)); biases stay
  // zero. Tensors are filled in declared order, entries in storage order.
  for (const HrnModel::TensorRef& ref : m.layout()) {
    if (ref.cols == 1) continue;  // bias
    const double bound = 1.0 / std::sqrt(static_cast<double>(ref.cols));
    for (Eigen::Index i = 0; i < ref.rows * ref.cols; ++i)
      p[ref.offset + i] = (2.0 * rng.unit() - 1.0) * bound;
  }
  return m;
}

ForwardResult forward(const HrnModel& m, const Eigen::VectorXd& features,
                      ForwardCache* cache) {
  const HrnConfig& cfg = m.config();
  if (features.size() != cfg.input_dim)
    throw DimensionError("expected " + std::to_string(cfg.input_dim) +
                         " features, got " + std::to_string(features.size()));

  const int trunk_layers = static_cast<int>(cfg.trunk_dims.size());
  std::vector<Eigen::VectorXd> trunk_pre, trunk_act;
  trunk_pre.reserve(static_cast<std::size_t>(trunk_layers));
  trunk_act.reserve(static_cast<std::size_t>(trunk_layers));
  Eigen::VectorXd act = features;
  for (int j = 0; j < trunk_layers; ++j) {
    Eigen::VectorXd pre = m.trunk_w(j) * act + m.trunk_b(j);
    act = pre.cwiseMax(0.0);
    trunk_pre.push_back(std::move(pre));
    trunk_act.push_back(act);
  }
  const Eigen::VectorXd& trunk_out = trunk_layers > 0 ? trunk_act.back() : features;

  std::vector<Eigen::VectorXd> block_pre1, block_act1, block_out;
  block_pre1.reserve(static_cast<std::size_t>(cfg.levels));
  block_act1.reserve(static_cast<std::size_t>(cfg.levels));
  block_out.reserve(static_cast<std::size_t>(cfg.levels));
  for (int l = 0; l < cfg.levels; ++l) {
    Eigen::VectorXd pre1 = m.block_w1(l) * trunk_out + m.block_b1(l);
    Eigen::VectorXd act1 = pre1.cwiseMax(0.0);
    block_out.push_back(m.block_w2(l) * act1 + m.block_b2(l));
    block_pre1.push_back(std::move(pre1));
    block_act1.push_back(std::move(act1));
  }

  // h_0 = f_0; deeper levels fold the parent's combined feature back in.
  std::vector<Eigen::VectorXd> comb_pre, combined;
  comb_pre.reserve(static_cast<std::size_t>(cfg.levels > 0 ? cfg.levels - 1 : 0));
  combined.reserve(static_cast<std::size_t>(cfg.levels));
  combined.push_back(block_out[0]);
  for (int l = 1; l < cfg.levels; ++l) {
    Eigen::VectorXd pre = block_out[static_cast<std::size_t>(l)] +
                          m.residual_w(l) * combined.back();
    combined.push_back(pre.cwiseMax(0.0));
    comb_pre.push_back(std::move(pre));
  }

  Eigen::VectorXd sig(m.n_labels());
  std::vector<Eigen::VectorXd> head_pre;
  head_pre.reserve(static_cast<std::size_t>(cfg.levels));
  for (int l = 0; l < cfg.levels; ++l) {
    Eigen::VectorXd z = m.head_w(l) * combined[static_cast<std::size_t>(l)] +
                        m.head_b(l);
    const std::vector<NodeId>& nodes = m.level_nodes()[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      // Clamping keeps the reported probability strictly inside (0,1);
      // outside +-30 the exact sigmoid rounds to 0 or 1 in double.
      const double zc = std::clamp(z[static_cast<Eigen::Index>(i)], -30.0, 30.0);
      sig[nodes[i]] = 1.0 / (1.0 + std::exp(-zc));
    }
    head_pre.push_back(std::move(z));
  }
  Eigen::VectorXd leaf_logits =
      m.ce_w() * combined.back() + m.ce_b();

  if (cache != nullptr) {
    cache->input = features;
    cache->trunk_pre = std::move(trunk_pre);
    cache->trunk_act = std::move(trunk_act);
    cache->block_pre1 = std::move(block_pre1);
    cache->block_act1 = std::move(block_act1);
    cache->block_out = std::move(block_out);
    cache->comb_pre = std::move(comb_pre);
    cache->combined = std::move(combined);
    cache->head_pre = std::move(head_pre);
    cache->sigmoid = sig;
    cache->leaf_logits = leaf_logits;
  }
  return {std::move(sig), std::move(leaf_logits)};
}

Eigen::VectorXd backward(const HrnModel& m, const ForwardCache& cache,
                         const Eigen::VectorXd& grad_sigmoid,
                         const Eigen::VectorXd& grad_leaf_logits) {
  const HrnConfig& cfg = m.config();
  if (grad_sigmoid.size() != m.n_labels())
    throw DimensionError("sigmoid gradient has wrong length");
  if (grad_leaf_logits.size() != m.leaf_count())
    throw DimensionError("leaf logit gradient has wrong length");

  Eigen::VectorXd g = Eigen::VectorXd::Zero(m.param_count());
  auto gmat = [&](int ti) {
    const HrnModel::TensorRef& r = m.layout()[static_cast<std::size_t>(ti)];
    return Eigen::Map<Eigen::MatrixXd>(g.data() + r.offset, r.rows, r.cols);
  };
  auto gvec = [&](int ti) {
    const HrnModel::TensorRef& r = m.layout()[static_cast<std::size_t>(ti)];
    return Eigen::Map<Eigen::VectorXd>(g.data() + r.offset, r.rows);
  };

  std::vector<Eigen::VectorXd> gh(
      static_cast<std::size_t>(cfg.levels),
      Eigen::VectorXd::Zero(cfg.block_dim));

  // Output heads. The clamp zeroes the derivative outside +-30.
  for (int l = 0; l < cfg.levels; ++l) {
    const std::vector<NodeId>& nodes = m.level_nodes()[static_cast<std::size_t>(l)];
    const Eigen::VectorXd& z = cache.head_pre[static_cast<std::size_t>(l)];
    Eigen::VectorXd gz(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double s = cache.sigmoid[nodes[i]];
      const bool live = z[k] > -30.0 && z[k] < 30.0;
      gz[k] = live ? grad_sigmoid[nodes[i]] * s * (1.0 - s) : 0.0;
    }
    const Eigen::VectorXd& h = cache.combined[static_cast<std::size_t>(l)];
    gmat(m.idx_heads_ + 2 * l).noalias() += gz * h.transpose();
    gvec(m.idx_heads_ + 2 * l + 1) += gz;
    gh[static_cast<std::size_t>(l)].noalias() += m.head_w(l).transpose() * gz;
  }
  gmat(m.idx_ce_).noalias() += grad_leaf_logits * cache.combined.back().transpose();
  gvec(m.idx_ce_ + 1) += grad_leaf_logits;
  gh.back().noalias() += m.ce_w().transpose() * grad_leaf_logits;

  // Residual combination, deepest level first.
  std::vector<Eigen::VectorXd> gf(static_cast<std::size_t>(cfg.levels));
  for (int l = cfg.levels - 1; l >= 1; --l) {
    const Eigen::VectorXd& pre = cache.comb_pre[static_cast<std::size_t>(l - 1)];
    Eigen::VectorXd gcomb =
        (pre.array() > 0.0).select(gh[static_cast<std::size_t>(l)], 0.0);
    gmat(m.idx_residual_ + (l - 1)).noalias() +=
        gcomb * cache.combined[static_cast<std::size_t>(l - 1)].transpose();
    gh[static_cast<std::size_t>(l - 1)].noalias() +=
        m.residual_w(l).transpose() * gcomb;
    gf[static_cast<std::size_t>(l)] = std::move(gcomb);
  }
  gf[0] = gh[0];

  // Granularity blocks feed a shared gradient into the trunk output.
  const int trunk_layers = static_cast<int>(cfg.trunk_dims.size());
  const Eigen::VectorXd& trunk_out =
      trunk_layers > 0 ? cache.trunk_act.back() : cache.input;
  Eigen::VectorXd g_trunk_out = Eigen::VectorXd::Zero(m.trunk_output_dim());
  for (int l = 0; l < cfg.levels; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    gmat(m.idx_blocks_ + 4 * l + 2).noalias() +=
        gf[ul] * cache.block_act1[ul].transpose();
    gvec(m.idx_blocks_ + 4 * l + 3) += gf[ul];
    Eigen::VectorXd gact1 = m.block_w2(l).transpose() * gf[ul];
    Eigen::VectorXd gpre1 =
        (cache.block_pre1[ul].array() > 0.0).select(gact1, 0.0);
    gmat(m.idx_blocks_ + 4 * l).noalias() += gpre1 * trunk_out.transpose();
    gvec(m.idx_blocks_ + 4 * l + 1) += gpre1;
    g_trunk_out.noalias() += m.block_w1(l).transpose() * gpre1;
  }

  Eigen::VectorXd gact = std::move(g_trunk_out);
  for (int j = trunk_layers - 1; j >= 0; --j) {
    const auto uj = static_cast<std::size_t>(j);
    Eigen::VectorXd gpre =
        (cache.trunk_pre[uj].array() > 0.0).select(gact, 0.0);
    const Eigen::VectorXd& prev = j > 0 ? cache.trunk_act[uj - 1] : cache.input;
    gmat(2 * j).noalias() += gpre * prev.transpose();
    gvec(2 * j + 1) += gpre;
    gact = m.trunk_w(j).transpose() * gpre;
  }
  return g;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw IoError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw IoError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

constexpr char kMagic[8] = {'H', 'M', 'C', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const HrnModel& m,
                     std::uint64_t taxonomy_hash, LossVariant variant) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const HrnConfig& cfg = m.config();
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(cfg.input_dim));
  put_u32(out, static_cast<std::uint32_t>(cfg.block_dim));
  put_u32(out, static_cast<std::uint32_t>(cfg.levels));
  put_u32(out, static_cast<std::uint32_t>(cfg.trunk_dims.size()));
  for (int d : cfg.trunk_dims) put_u32(out, static_cast<std::uint32_t>(d));
  put_u64(out, cfg.seed);
  out.put(static_cast<char>(variant));
  put_u64(out, taxonomy_hash);
  put_u64(out, static_cast<std::uint64_t>(m.param_count()));
  for (Eigen::Index i = 0; i < m.param_count(); ++i)
    put_u64(out, std::bit_cast<std::uint64_t>(m.params()[i]));
  if (!out) throw IoError("write to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic)) throw IoError("checkpoint truncated");
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw CompatError(path + " is not a checkpoint file");
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion)
    throw CompatError("unsupported checkpoint version " +
                      std::to_string(version));
  Checkpoint ckpt;
  ckpt.config.input_dim = static_cast<int>(get_u32(in));
  ckpt.config.block_dim = static_cast<int>(get_u32(in));
  ckpt.config.levels = static_cast<int>(get_u32(in));
  const std::uint32_t trunk_count = get_u32(in);
  ckpt.config.trunk_dims.reserve(trunk_count);
  for (std::uint32_t j = 0; j < trunk_count; ++j)
    ckpt.config.trunk_dims.push_back(static_cast<int>(get_u32(in)));
  ckpt.config.seed = get_u64(in);
  const int variant_byte = in.get();
  if (variant_byte == std::char_traits<char>::eof())
    throw IoError("checkpoint truncated");
  if (variant_byte > static_cast<int>(LossVariant::kPerNodeBinaryCe))
    throw CompatError("unknown loss variant tag " +
                      std::to_string(variant_byte));
  ckpt.variant = static_cast<LossVariant>(variant_byte);
  ckpt.taxonomy_hash = get_u64(in);
  const std::uint64_t count = get_u64(in);
  ckpt.params.resize(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i)
    ckpt.params[static_cast<Eigen::Index>(i)] =
        std::bit_cast<double>(get_u64(in));
  return ckpt;
}

HrnModel model_from_checkpoint(const Checkpoint& ckpt, const Taxonomy& t) {
  if (ckpt.taxonomy_hash != t.content_hash())
    throw CompatError("checkpoint was trained against taxonomy " +
                      hash_hex(ckpt.taxonomy_hash) + " but got " +
                      hash_hex(t.content_hash()));
  HrnModel m(ckpt.config, t);
  if (m.param_count() != ckpt.params.size())
    throw CompatError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                      " parameters, model needs " +
                      std::to_string(m.param_count()));
  m.mutable_params() = ckpt.params;
  return m;
}

}  // namespace hmc
