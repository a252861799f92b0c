#pragma once

#include <map>
#include <string>
#include <vector>

#include "stpl/autodiff.hpp"
#include "stpl/rng.hpp"

namespace stpl::wm {

enum class LatentMode { Spatial, Global };
enum class CosVariant { Patch, Mean, Flatten, Agg };

CosVariant parse_variant(const std::string& s);
std::string variant_name(CosVariant v);

struct ModelConfig {
  int image_side = 32;
  int channels = 2;
  int patch = 8;       // P; m_v = (image_side / P)^2 spatial tokens
  int d_v = 8;         // latent channels per token
  int d_a = 16;        // action embedding width
  int K = 3;           // history frames
  int frameskip = 5;
  LatentMode mode = LatentMode::Spatial;
  int d_h = 32;        // pooling head output width
  int enc_hidden = 64;
  int act_hidden = 32;
  int pred_hidden = 256;
  int head_hidden = 64;

  int effective_patch() const { return mode == LatentMode::Global ? image_side : patch; }
  int m_v() const {
    const int p = effective_patch();
    const int g = image_side / p;
    return g * g;
  }
  int patch_dim() const { return channels * effective_patch() * effective_patch(); }
  int latent_dim() const { return m_v() * d_v; }
  int action_chunk_dim() const { return 2 * frameskip; }

  void validate() const;
};

/// JEPA world model: patch-MLP sensory encoder, action-chunk encoder,
/// fixed-history MLP predictor, and the pooling head used by the agg
/// straightening variant. All parameters live on the tape as named leaves.
class WorldModel {
 public:
  static WorldModel init(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const std::map<std::string, ag::Var>& params() const { return params_; }
  ag::Var param(const std::string& name) const;

  /// obs {channels, side, side} -> latent vector node [m_v * d_v].
  ag::Var encode(const ag::Tensor& obs) const;

  /// chunk [2 * frameskip] -> action embedding [d_a].
  ag::Var embed_action(const ag::Var& chunk) const;

  /// Exactly K history latents and K action chunks -> next latent.
  ag::Var predict_next(const std::vector<ag::Var>& latents,
                       const std::vector<ag::Var>& chunks) const;

  /// Autoregressive rollout: the K-frame window slides over predictions.
  /// `seed_chunks` are the K action chunks aligned with the history latents
  /// (the oldest is dropped before the first prediction). Returns H latents.
  std::vector<ag::Var> rollout(const std::vector<ag::Var>& hist_latents,
                               const std::vector<ag::Var>& seed_chunks,
                               const std::vector<ag::Var>& future_chunks) const;

  /// Pooling head h applied to a flattened token matrix (velocities or latents).
  ag::Var pool(const ag::Var& flat_tokens) const;

  void save(const std::string& path) const;
  static WorldModel load(const std::string& path);

 private:
  ModelConfig cfg_;
  std::map<std::string, ag::Var> params_;
};

/// Cosine similarity of consecutive latent velocities from three consecutive
/// encoded latents, under the chosen spatial reduction.
ag::Var straightening_cosine(const WorldModel& model, const ag::Var& z0, const ag::Var& z1,
                             const ag::Var& z2, CosVariant variant);

/// Patch extraction used by the encoder; exposed for tests.
ag::Tensor extract_patches(const ag::Tensor& obs, const ModelConfig& cfg);

}  // namespace stpl::wm
