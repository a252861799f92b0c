#include "stpl/world_model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace stpl::wm {

using ag::Tensor;
using ag::Var;

CosVariant parse_variant(const std::string& s) {
  if (s == "patch") return CosVariant::Patch;
  if (s == "mean") return CosVariant::Mean;
  if (s == "flatten") return CosVariant::Flatten;
  if (s == "agg") return CosVariant::Agg;
  throw std::invalid_argument("unknown cosine variant '" + s + "'");
}

std::string variant_name(CosVariant v) {
  switch (v) {
    case CosVariant::Patch: return "patch";
    case CosVariant::Mean: return "mean";
    case CosVariant::Flatten: return "flatten";
    case CosVariant::Agg: return "agg";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (image_side <= 0 || channels <= 0) throw std::invalid_argument("bad image config");
  const int p = effective_patch();
  if (p <= 0 || image_side % p != 0)
    throw std::invalid_argument("patch size must divide the image side");
  if (d_v < 1 || d_a < 1 || d_h < 1 || K < 1 || frameskip < 1)
    throw std::invalid_argument("model widths and history must be >= 1");
}

namespace {

Tensor init_weight(int in, int out, Rng& rng) {
  Tensor w({in, out});
  const double s = std::sqrt(2.0 / (in + out));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, s);
  return w;
}

void add_linear(std::map<std::string, Var>& params, const std::string& prefix, int in, int out,
                Rng& rng) {
  params[prefix + ".w"] = ag::leaf(init_weight(in, out, rng), prefix + ".w");
  params[prefix + ".b"] = ag::leaf(Tensor({out}), prefix + ".b");
}

// y = act(x W + b) on a [batch, in] matrix node.
Var linear(const std::map<std::string, Var>& params, const std::string& prefix, const Var& x) {
  return ag::add(ag::matmul(x, params.at(prefix + ".w")), params.at(prefix + ".b"));
}

}  // namespace

WorldModel WorldModel::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  WorldModel m;
  m.cfg_ = cfg;
  Rng rng(derive_seed(seed, 0x6d6f64656cULL));
  const int pd = cfg.patch_dim();
  const int ld = cfg.latent_dim();
  const int cd = cfg.action_chunk_dim();
  add_linear(m.params_, "enc.l1", pd, cfg.enc_hidden, rng);
  add_linear(m.params_, "enc.l2", cfg.enc_hidden, cfg.enc_hidden, rng);
  add_linear(m.params_, "enc.l3", cfg.enc_hidden, cfg.d_v, rng);
  add_linear(m.params_, "act.l1", cd, cfg.act_hidden, rng);
  add_linear(m.params_, "act.l2", cfg.act_hidden, cfg.d_a, rng);
  add_linear(m.params_, "pred.l1", cfg.K * (ld + cfg.d_a), cfg.pred_hidden, rng);
  add_linear(m.params_, "pred.l2", cfg.pred_hidden, ld, rng);
  add_linear(m.params_, "head.l1", ld, cfg.head_hidden, rng);
  add_linear(m.params_, "head.l2", cfg.head_hidden, cfg.d_h, rng);
  return m;
}

Var WorldModel::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("unknown parameter '" + name + "'");
  return it->second;
}

Tensor extract_patches(const Tensor& obs, const ModelConfig& cfg) {
  const int side = cfg.image_side, ch = cfg.channels, p = cfg.effective_patch();
  if (obs.shape() != std::vector<int>{ch, side, side})
    throw ag::DimensionError("observation shape mismatch: " + ag::shape_str(obs));
  const int g = side / p;
  Tensor x({g * g, cfg.patch_dim()});
  for (int pr = 0; pr < g; ++pr)
    for (int pc = 0; pc < g; ++pc) {
      double* row = x.data() + static_cast<std::size_t>(pr * g + pc) * cfg.patch_dim();
      int k = 0;
      for (int c = 0; c < ch; ++c)
        for (int i = 0; i < p; ++i)
          for (int j = 0; j < p; ++j)
            row[k++] = obs[(static_cast<std::size_t>(c) * side + pr * p + i) * side + pc * p + j];
    }
  return x;
}

Var WorldModel::encode(const Tensor& obs) const {
  const Var x = ag::constant(extract_patches(obs, cfg_));
  Var h = ag::tanh_(linear(params_, "enc.l1", x));
  h = ag::tanh_(linear(params_, "enc.l2", h));
  h = ag::tanh_(linear(params_, "enc.l3", h));  // [m_v, d_v]
  return ag::reshape(h, {cfg_.latent_dim()});
}

Var WorldModel::embed_action(const Var& chunk) const {
  if (chunk->value.shape() != std::vector<int>{cfg_.action_chunk_dim()})
    throw ag::DimensionError("action chunk shape mismatch: " + ag::shape_str(chunk->value));
  Var h = ag::reshape(chunk, {1, cfg_.action_chunk_dim()});
  h = ag::tanh_(linear(params_, "act.l1", h));
  h = linear(params_, "act.l2", h);
  return ag::reshape(h, {cfg_.d_a});
}

Var WorldModel::predict_next(const std::vector<Var>& latents,
                             const std::vector<Var>& chunks) const {
  if (static_cast<int>(latents.size()) != cfg_.K || static_cast<int>(chunks.size()) != cfg_.K)
    throw ag::ContractError("predict_next: expected exactly K latents and K action chunks");
  std::vector<Var> parts;
  parts.reserve(2 * cfg_.K);
  for (int i = 0; i < cfg_.K; ++i) {
    parts.push_back(latents[i]);
    parts.push_back(embed_action(chunks[i]));
  }
  Var h = ag::reshape(ag::concat(parts), {1, cfg_.K * (cfg_.latent_dim() + cfg_.d_a)});
  h = ag::tanh_(linear(params_, "pred.l1", h));
  h = linear(params_, "pred.l2", h);
  return ag::reshape(h, {cfg_.latent_dim()});
}

std::vector<Var> WorldModel::rollout(const std::vector<Var>& hist_latents,
                                     const std::vector<Var>& seed_chunks,
                                     const std::vector<Var>& future_chunks) const {
  if (static_cast<int>(hist_latents.size()) != cfg_.K ||
      static_cast<int>(seed_chunks.size()) != cfg_.K)
    throw ag::ContractError("rollout: history must hold exactly K latents and K chunks");
  if (future_chunks.empty()) throw ag::ContractError("rollout: horizon must be >= 1");
  std::vector<Var> lat = hist_latents;
  std::vector<Var> act = seed_chunks;
  std::vector<Var> out;
  out.reserve(future_chunks.size());
  for (const Var& chunk : future_chunks) {
    act.push_back(chunk);
    const std::vector<Var> lw(lat.end() - cfg_.K, lat.end());
    const std::vector<Var> aw(act.end() - cfg_.K, act.end());
    Var z = predict_next(lw, aw);
    lat.push_back(z);
    out.push_back(std::move(z));
  }
  return out;
}

Var WorldModel::pool(const Var& flat_tokens) const {
  Var h = ag::reshape(flat_tokens, {1, cfg_.latent_dim()});
  h = ag::tanh_(linear(params_, "head.l1", h));
  h = linear(params_, "head.l2", h);
  return ag::reshape(h, {cfg_.d_h});
}

Var straightening_cosine(const WorldModel& model, const Var& z0, const Var& z1, const Var& z2,
                         CosVariant variant) {
  const auto& cfg = model.config();
  const Var v1 = ag::sub(z1, z0);
  const Var v2 = ag::sub(z2, z1);
  switch (variant) {
    case CosVariant::Flatten:
      return ag::cosine(v1, v2);
    case CosVariant::Patch: {
      std::vector<Var> per_token;
      per_token.reserve(cfg.m_v());
      for (int i = 0; i < cfg.m_v(); ++i)
        per_token.push_back(ag::cosine(ag::slice(v1, i * cfg.d_v, cfg.d_v),
                                       ag::slice(v2, i * cfg.d_v, cfg.d_v)));
      return ag::mean(ag::concat(per_token));
    }
    case CosVariant::Mean: {
      Tensor ones({1, cfg.m_v()});
      for (std::size_t i = 0; i < ones.size(); ++i) ones[i] = 1.0 / cfg.m_v();
      const Var pool_row = ag::constant(std::move(ones));
      const Var m1 = ag::matmul(pool_row, ag::reshape(v1, {cfg.m_v(), cfg.d_v}));
      const Var m2 = ag::matmul(pool_row, ag::reshape(v2, {cfg.m_v(), cfg.d_v}));
      return ag::cosine(ag::reshape(m1, {cfg.d_v}), ag::reshape(m2, {cfg.d_v}));
    }
    case CosVariant::Agg:
      return ag::cosine(model.pool(v1), model.pool(v2));
  }
  throw ag::ContractError("unreachable cosine variant");
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  std::string s(read_u32(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

}  // namespace

void WorldModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write("STPC", 4);
  write_u32(out, 1);
  const std::uint32_t fields[] = {
      static_cast<std::uint32_t>(cfg_.image_side), static_cast<std::uint32_t>(cfg_.channels),
      static_cast<std::uint32_t>(cfg_.patch),      static_cast<std::uint32_t>(cfg_.d_v),
      static_cast<std::uint32_t>(cfg_.d_a),        static_cast<std::uint32_t>(cfg_.K),
      static_cast<std::uint32_t>(cfg_.frameskip),
      static_cast<std::uint32_t>(cfg_.mode == LatentMode::Global ? 1 : 0),
      static_cast<std::uint32_t>(cfg_.d_h),        static_cast<std::uint32_t>(cfg_.enc_hidden),
      static_cast<std::uint32_t>(cfg_.act_hidden), static_cast<std::uint32_t>(cfg_.pred_hidden),
      static_cast<std::uint32_t>(cfg_.head_hidden)};
  for (std::uint32_t f : fields) write_u32(out, f);
  write_u32(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& [name, var] : params_) {
    write_string(out, name);
    write_u32(out, static_cast<std::uint32_t>(var->value.shape().size()));
    for (int e : var->value.shape()) write_u32(out, static_cast<std::uint32_t>(e));
    out.write(reinterpret_cast<const char*>(var->value.data()),
              static_cast<std::streamsize>(var->value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed while writing checkpoint: " + path);
}

WorldModel WorldModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "STPC", 4) != 0)
    throw std::runtime_error("not a checkpoint file (bad magic): " + path);
  if (read_u32(in) != 1) throw std::runtime_error("unsupported checkpoint version");
  ModelConfig cfg;
  cfg.image_side = static_cast<int>(read_u32(in));
  cfg.channels = static_cast<int>(read_u32(in));
  cfg.patch = static_cast<int>(read_u32(in));
  cfg.d_v = static_cast<int>(read_u32(in));
  cfg.d_a = static_cast<int>(read_u32(in));
  cfg.K = static_cast<int>(read_u32(in));
  cfg.frameskip = static_cast<int>(read_u32(in));
  cfg.mode = read_u32(in) == 1 ? LatentMode::Global : LatentMode::Spatial;
  cfg.d_h = static_cast<int>(read_u32(in));
  cfg.enc_hidden = static_cast<int>(read_u32(in));
  cfg.act_hidden = static_cast<int>(read_u32(in));
  cfg.pred_hidden = static_cast<int>(read_u32(in));
  cfg.head_hidden = static_cast<int>(read_u32(in));
  WorldModel m;
  m.cfg_ = cfg;
  const std::uint32_t n_params = read_u32(in);
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = read_string(in);
    std::vector<int> shape(read_u32(in));
    for (int& e : shape) e = static_cast<int>(read_u32(in));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    m.params_[name] = ag::leaf(std::move(t), name);
  }
  if (!in) throw std::runtime_error("checkpoint file truncated: " + path);
  return m;
}

}  // namespace stpl::wm
