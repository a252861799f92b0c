#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <doctest.h>

#include "stpl/world_model.hpp"

using namespace stpl;
using namespace stpl::ag;
using namespace stpl::wm;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.image_side = 8;
  cfg.patch = 4;
  cfg.d_v = 3;
  cfg.d_a = 4;
  cfg.K = 2;
  cfg.frameskip = 2;
  cfg.d_h = 5;
  cfg.enc_hidden = 8;
  cfg.act_hidden = 6;
  cfg.pred_hidden = 16;
  cfg.head_hidden = 8;
  return cfg;
}

Tensor rand_obs(const ModelConfig& cfg, Rng& rng) {
  Tensor obs({cfg.channels, cfg.image_side, cfg.image_side});
  for (std::size_t i = 0; i < obs.size(); ++i) obs[i] = rng.uniform();
  return obs;
}

Var rand_chunk(const ModelConfig& cfg, Rng& rng, const std::string& name = "") {
  Tensor t({cfg.action_chunk_dim()});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return leaf(std::move(t), name);
}

// Central-difference check on a scalar loss w.r.t. a chosen leaf.
void check_fd(const Var& p, const std::function<Var()>& loss, double tol, int n_probe, Rng& rng) {
  backward(loss());
  const Tensor analytic = p->grad.empty() ? Tensor::zeros_like(p->value) : p->grad;
  const double eps = 1e-6;
  for (int k = 0; k < n_probe; ++k) {
    const std::size_t i = rng.below(p->value.size());
    const double keep = p->value[i];
    p->value[i] = keep + eps;
    const double fp = loss()->value.item();
    p->value[i] = keep - eps;
    const double fm = loss()->value.item();
    p->value[i] = keep;
    const double fd = (fp - fm) / (2.0 * eps);
    CHECK(std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd)) < tol);
  }
}

}  // namespace

TEST_CASE("default configuration produces the documented shapes") {
  ModelConfig cfg;  // 32x32, patch 8 -> 16 tokens x 8 channels
  CHECK(cfg.m_v() == 16);
  CHECK(cfg.latent_dim() == 128);
  CHECK(cfg.patch_dim() == 128);
  CHECK(cfg.action_chunk_dim() == 10);

  cfg.mode = LatentMode::Global;
  CHECK(cfg.m_v() == 1);
  CHECK(cfg.latent_dim() == 8);

  ModelConfig bad;
  bad.patch = 5;  // does not divide 32
  CHECK_THROWS(bad.validate());
}

TEST_CASE("patch extraction lays tokens out row-major with channels outermost") {
  ModelConfig cfg = small_config();  // 8x8, patch 4 -> 4 tokens of 2*16 values
  Tensor obs({2, 8, 8});
  for (std::size_t i = 0; i < obs.size(); ++i) obs[i] = static_cast<double>(i);
  const Tensor x = extract_patches(obs, cfg);
  REQUIRE(x.shape() == std::vector<int>{4, 32});
  // Token 0 = rows 0..3, cols 0..3 of each channel.
  CHECK(x.at(0, 0) == 0.0);    // ch 0, (0,0)
  CHECK(x.at(0, 1) == 1.0);    // ch 0, (0,1)
  CHECK(x.at(0, 4) == 8.0);    // ch 0, (1,0)
  CHECK(x.at(0, 16) == 64.0);  // ch 1, (0,0)
  // Token 1 = cols 4..7.
  CHECK(x.at(1, 0) == 4.0);
  // Token 2 = rows 4..7.
  CHECK(x.at(2, 0) == 32.0);
}

TEST_CASE("forward shapes and deterministic initialization") {
  const ModelConfig cfg = small_config();
  const WorldModel m1 = WorldModel::init(cfg, 17);
  const WorldModel m2 = WorldModel::init(cfg, 17);
  const WorldModel m3 = WorldModel::init(cfg, 18);
  bool all_equal = true, any_diff = false;
  for (const auto& [name, p] : m1.params()) {
    const auto& q = m2.params().at(name)->value;
    const auto& r = m3.params().at(name)->value;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      all_equal = all_equal && p->value[i] == q[i];
      any_diff = any_diff || p->value[i] != r[i];
    }
  }
  CHECK(all_equal);
  CHECK(any_diff);

  Rng rng(1);
  const Var z = m1.encode(rand_obs(cfg, rng));
  CHECK(z->value.shape() == std::vector<int>{cfg.latent_dim()});
  const Var e = m1.embed_action(rand_chunk(cfg, rng));
  CHECK(e->value.shape() == std::vector<int>{cfg.d_a});

  std::vector<Var> hist, seeds, future;
  for (int i = 0; i < cfg.K; ++i) {
    hist.push_back(m1.encode(rand_obs(cfg, rng)));
    seeds.push_back(rand_chunk(cfg, rng));
  }
  const Var zn = m1.predict_next(hist, seeds);
  CHECK(zn->value.shape() == std::vector<int>{cfg.latent_dim()});

  for (int h = 0; h < 4; ++h) future.push_back(rand_chunk(cfg, rng));
  const auto traj = m1.rollout(hist, seeds, future);
  REQUIRE(traj.size() == 4);
  // The first rollout step pairs (z0, seed1) and (z1, future0): the oldest
  // seed chunk falls out of the window, so it matches predict_next on the
  // shifted action list.
  const Var shifted = m1.predict_next(hist, {seeds[1], future[0]});
  for (std::size_t i = 0; i < shifted->value.size(); ++i)
    CHECK(traj[0]->value[i] == shifted->value[i]);
  CHECK(m1.pool(z)->value.shape() == std::vector<int>{cfg.d_h});
  CHECK_THROWS(m1.predict_next({hist[0]}, seeds));
}

TEST_CASE("encoder, predictor and rollout gradients match finite differences") {
  const ModelConfig cfg = small_config();
  const WorldModel m = WorldModel::init(cfg, 5);
  Rng rng(2);
  const Tensor obs0 = rand_obs(cfg, rng), obs1 = rand_obs(cfg, rng), obs2 = rand_obs(cfg, rng);
  std::vector<Var> chunks;
  for (int i = 0; i < 5; ++i) chunks.push_back(rand_chunk(cfg, rng, "a" + std::to_string(i)));

  // Freeze the regression target: a stop-gradient target that shares the
  // perturbed encoder weights would make finite differences disagree by design.
  const Tensor target = m.encode(obs2)->value;
  auto rollout_loss = [&]() {
    const std::vector<Var> hist = {m.encode(obs0), m.encode(obs1)};
    const std::vector<Var> seeds = {chunks[0], chunks[1]};
    const std::vector<Var> future = {chunks[2], chunks[3], chunks[4]};
    const auto traj = m.rollout(hist, seeds, future);
    return mse(traj.back(), constant(target));
  };

  Rng probe(3);
  for (const char* name : {"enc.l1.w", "enc.l3.b", "act.l1.w", "pred.l1.w", "pred.l2.b"})
    check_fd(m.param(name), rollout_loss, 1e-3, 6, probe);
  // Gradients through the planned action chunks, the planner's path.
  for (int i = 2; i < 5; ++i) check_fd(chunks[i], rollout_loss, 1e-3, 4, probe);
  // Seed chunk 0 is dropped before the first prediction: no gradient.
  backward(rollout_loss());
  CHECK(chunks[0]->grad.empty());
}

TEST_CASE("straightening cosine variants") {
  const ModelConfig cfg = small_config();
  const WorldModel m = WorldModel::init(cfg, 5);
  Rng rng(7);

  SUBCASE("all variants are exactly 1 on a collinear latent triple") {
    Tensor zt({cfg.latent_dim()}), ut({cfg.latent_dim()});
    for (int i = 0; i < cfg.latent_dim(); ++i) {
      zt[i] = rng.normal();
      ut[i] = rng.normal();
    }
    const Var z0 = leaf(zt);
    const Var u = leaf(ut);
    const Var z1 = add(z0, u);
    const Var z2 = add(z1, u);
    for (CosVariant v : {CosVariant::Patch, CosVariant::Mean, CosVariant::Flatten, CosVariant::Agg})
      CHECK(straightening_cosine(m, z0, z1, z2, v)->value.item() ==
            doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("flatten variant is invariant to velocity scale") {
    const Var z0 = leaf(Tensor({cfg.latent_dim()}));
    Tensor u1({cfg.latent_dim()}), u2({cfg.latent_dim()});
    for (int i = 0; i < cfg.latent_dim(); ++i) {
      u1[i] = rng.normal();
      u2[i] = rng.normal();
    }
    const Var z1 = add(z0, leaf(u1));
    const Var z2a = add(z1, leaf(u2));
    Tensor u2s = u2;
    for (std::size_t i = 0; i < u2s.size(); ++i) u2s[i] *= 7.5;
    const Var z2b = add(z1, leaf(u2s));
    const double ca = straightening_cosine(m, z0, z1, z2a, CosVariant::Flatten)->value.item();
    const double cb = straightening_cosine(m, z0, z1, z2b, CosVariant::Flatten)->value.item();
    CHECK(ca == doctest::Approx(cb).epsilon(1e-12));
  }

  SUBCASE("patch variant averages per-token cosines; mean pools tokens first") {
    // Hand-built latents: token cosines {1, 1, 0, 0} -> patch variant = 0.5.
    const int m_v = cfg.m_v(), d_v = cfg.d_v;
    REQUIRE(m_v == 4);
    REQUIRE(d_v == 3);
    Tensor v1t({m_v * d_v}), v2t({m_v * d_v});
    Rng r2(9);
    for (int i = 0; i < m_v * d_v; ++i) v1t[i] = r2.normal();
    // Tokens 0,1: v2 = v1 (cos 1). Tokens 2,3: v2 orthogonal-ish by swap trick.
    for (int tok = 0; tok < m_v; ++tok)
      for (int k = 0; k < d_v; ++k) {
        const int i = tok * d_v + k;
        v2t[i] = tok < 2 ? v1t[i] : 0.0;
      }
    // Make tokens 2,3 exactly orthogonal to v1 in their 3-d slots.
    for (int tok = 2; tok < 4; ++tok) {
      const int b = tok * d_v;
      v2t[b + 0] = -v1t[b + 1];
      v2t[b + 1] = v1t[b + 0];
      v2t[b + 2] = 0.0;
    }
    const Var z0 = leaf(Tensor({m_v * d_v}));
    const Var z1 = leaf(v1t);  // z1 - z0 = v1
    Tensor z2t({m_v * d_v});
    for (int i = 0; i < m_v * d_v; ++i) z2t[i] = v1t[i] + v2t[i];
    const Var z2 = leaf(z2t);

    double per_token = 0.0;
    for (int tok = 0; tok < m_v; ++tok) {
      double dot = 0.0, n1 = 0.0, n2 = 0.0;
      for (int k = 0; k < d_v; ++k) {
        dot += v1t[tok * d_v + k] * v2t[tok * d_v + k];
        n1 += v1t[tok * d_v + k] * v1t[tok * d_v + k];
        n2 += v2t[tok * d_v + k] * v2t[tok * d_v + k];
      }
      per_token += dot / std::sqrt(n1 * n2);
    }
    per_token /= m_v;
    CHECK(straightening_cosine(m, z0, z1, z2, CosVariant::Patch)->value.item() ==
          doctest::Approx(per_token).epsilon(1e-12));
    CHECK(per_token == doctest::Approx(0.5).epsilon(1e-12));

    // Mean variant: cosine between token-averaged velocities.
    std::vector<double> m1(d_v, 0.0), m2v(d_v, 0.0);
    for (int tok = 0; tok < m_v; ++tok)
      for (int k = 0; k < d_v; ++k) {
        m1[k] += v1t[tok * d_v + k] / m_v;
        m2v[k] += v2t[tok * d_v + k] / m_v;
      }
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (int k = 0; k < d_v; ++k) {
      dot += m1[k] * m2v[k];
      n1 += m1[k] * m1[k];
      n2 += m2v[k] * m2v[k];
    }
    CHECK(straightening_cosine(m, z0, z1, z2, CosVariant::Mean)->value.item() ==
          doctest::Approx(dot / std::sqrt(n1 * n2)).epsilon(1e-12));
  }

  SUBCASE("agg variant backpropagates into the pooling head") {
    Tensor zt({cfg.latent_dim()}), u1({cfg.latent_dim()}), u2({cfg.latent_dim()});
    for (int i = 0; i < cfg.latent_dim(); ++i) {
      zt[i] = rng.normal();
      u1[i] = rng.normal();
      u2[i] = rng.normal();
    }
    const Var z0 = leaf(zt);
    const Var z1 = add(z0, leaf(u1));
    const Var z2 = add(z1, leaf(u2));
    backward(straightening_cosine(m, z0, z1, z2, CosVariant::Agg));
    CHECK_FALSE(m.param("head.l1.w")->grad.empty());
    Rng probe(4);
    check_fd(m.param("head.l1.w"),
             [&]() { return straightening_cosine(m, z0, z1, z2, CosVariant::Agg); }, 1e-3, 6,
             probe);
  }
}

TEST_CASE("latent widths across the ablation range construct and run") {
  for (int d_v : {2, 8, 32, 128}) {
    ModelConfig cfg;
    cfg.d_v = d_v;
    const WorldModel m = WorldModel::init(cfg, 1);
    Rng rng(1);
    Tensor obs({2, 32, 32});
    for (std::size_t i = 0; i < obs.size(); ++i) obs[i] = rng.uniform();
    CHECK(m.encode(obs)->value.shape() == std::vector<int>{16 * d_v});
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const ModelConfig cfg = small_config();
  const WorldModel m = WorldModel::init(cfg, 23);
  const std::string path = "test_ckpt.bin";
  m.save(path);
  const WorldModel back = WorldModel::load(path);
  CHECK(back.config().d_v == cfg.d_v);
  CHECK(back.config().K == cfg.K);
  REQUIRE(back.params().size() == m.params().size());
  for (const auto& [name, p] : m.params()) {
    const auto& q = back.params().at(name)->value;
    REQUIRE(p->value.shape() == q.shape());
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(p->value[i] == q[i]);
  }
  Rng rng(6);
  const Tensor obs = rand_obs(cfg, rng);
  const Var za = m.encode(obs);
  const Var zb = back.encode(obs);
  for (std::size_t i = 0; i < za->value.size(); ++i) CHECK(za->value[i] == zb->value[i]);
  std::remove(path.c_str());
}
