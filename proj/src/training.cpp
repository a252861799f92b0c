#include "stpl/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stpl::train {

using ag::Tensor;
using ag::Var;

ag::Tensor action_chunk(const env::Trajectory& tr, int g, int frameskip) {
  Tensor chunk({2 * frameskip});
  for (int k = 0; k < frameskip; ++k) {
    const auto& a = tr.actions.at(static_cast<std::size_t>(g) * frameskip + k);
    chunk[2 * k] = a[0];
    chunk[2 * k + 1] = a[1];
  }
  return chunk;
}

namespace {

// Frameskipped frames available per trajectory (states at raw index g * f).
int frame_count(const env::Dataset& ds) {
  return ds.traj_len() / ds.frameskip + 1;
}

Var encode_frame(const wm::WorldModel& model, const env::Environment& e,
                 const env::Trajectory& tr, int g, int frameskip) {
  return model.encode(e.render(tr.states.at(static_cast<std::size_t>(g) * frameskip)).image);
}

Var sum_sq(const Var& d) { return ag::sum(ag::mul(d, d)); }

}  // namespace

double holdout_cosine(const wm::WorldModel& model, const env::Environment& e,
                      const env::Dataset& ds, int first, int last, wm::CosVariant variant,
                      int max_triples, int* n_used) {
  const int frames = frame_count(ds);
  double sum = 0.0;
  int used = 0;
  for (int i = first; i < last && used < max_triples; ++i) {
    const auto& tr = ds.trajectories.at(i);
    for (int g = 0; g + 2 < frames && used < max_triples; ++g) {
      const Var z0 = encode_frame(model, e, tr, g, ds.frameskip);
      const Var z1 = encode_frame(model, e, tr, g + 1, ds.frameskip);
      const Var z2 = encode_frame(model, e, tr, g + 2, ds.frameskip);
      try {
        sum += straightening_cosine(model, z0, z1, z2, variant)->value.item();
        ++used;
      } catch (const ag::DegenerateVelocity&) {
        // collapsed or stationary triple; reported via n_used, checked by
        // collapse_check
      }
    }
  }
  if (n_used) *n_used = used;
  return used > 0 ? sum / used : 0.0;
}

bool collapse_check(const wm::WorldModel& model, const env::Environment& e,
                    const env::Dataset& ds, int n_probes, std::uint64_t seed,
                    double* variance_out) {
  if (n_probes < 2) throw std::invalid_argument("collapse_check: need at least 2 probes");
  const int frames = frame_count(ds);
  const int d = model.config().latent_dim();
  std::vector<double> mean(d, 0.0), m2(d, 0.0);
  Rng rng(derive_seed(seed, 0xc0117a95eULL));
  for (int p = 0; p < n_probes; ++p) {
    const auto& tr = ds.trajectories[rng.below(ds.trajectories.size())];
    const Var z = encode_frame(model, e, tr, static_cast<int>(rng.below(frames)), ds.frameskip);
    for (int i = 0; i < d; ++i) {
      const double delta = z->value[i] - mean[i];
      mean[i] += delta / (p + 1);
      m2[i] += delta * (z->value[i] - mean[i]);
    }
  }
  double var = 0.0;
  for (int i = 0; i < d; ++i) var += m2[i] / (n_probes - 1);
  var /= d;
  if (variance_out) *variance_out = var;
  return var >= 1e-6;
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "epoch,pred_loss,curv_loss,total_loss,holdout_cosine,latent_variance\n";
  char buf[256];
  for (const auto& s : epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.epoch, s.pred_loss,
                  s.curv_loss, s.total_loss, s.holdout_cosine, s.latent_variance);
    out << buf;
  }
}

TrainReport train(wm::WorldModel& model, const env::Environment& e, const env::Dataset& ds,
                  const TrainConfig& cfg, std::ostream* log) {
  const int f = ds.frameskip;
  const int K = model.config().K;
  if (f != model.config().frameskip)
    throw std::invalid_argument("train: dataset frameskip does not match the model");
  if (ds.traj_len() % f != 0)
    throw std::invalid_argument("train: trajectory length must be a frameskip multiple");
  const int frames = frame_count(ds);
  if (frames < K + 1)
    throw std::invalid_argument("train: trajectories too short for the history window");
  const int n_traj = static_cast<int>(ds.trajectories.size());
  const int n_holdout = std::max(1, static_cast<int>(n_traj * cfg.holdout_frac));
  const int n_train = n_traj - n_holdout;
  if (n_train < 1) throw std::invalid_argument("train: no trajectories left after holdout");
  const int steps = cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch
                                            : std::max(1, n_train / cfg.batch);

  ag::Adam opt;
  for (const auto& [name, p] : model.params()) {
    double lr = cfg.other_lr;
    if (name.rfind("enc.", 0) == 0) lr = cfg.effective_enc_lr();
    if (name.rfind("head.", 0) == 0) lr = cfg.effective_head_lr();  // see TrainConfig
    opt.add(p, lr);
  }

  TrainReport report;
  const bool curvature_on = cfg.lambda > 0.0;
  const int curv_frames = frames - 2;  // start indices for latent triples

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, 0xe90c0 + static_cast<std::uint64_t>(epoch)));
    // Separate stream for the curvature triples: the straightening term must
    // not perturb prediction-batch sampling, so a λ>0 run and its λ=0 control
    // train the predictor on identical batch sequences.
    Rng curv_rng(derive_seed(cfg.seed, 0xc4f00 + static_cast<std::uint64_t>(epoch)));
    double pred_acc = 0.0, curv_acc = 0.0;
    for (int step = 0; step < steps; ++step) {
      std::vector<Var> pred_terms, curv_terms;
      pred_terms.reserve(cfg.batch);
      curv_terms.reserve(cfg.batch);
      for (int b = 0; b < cfg.batch; ++b) {
        const auto& tr = ds.trajectories[rng.below(n_train)];
        const int g0 = static_cast<int>(rng.below(frames - K));
        std::vector<Var> hist, chunks;
        for (int i = 0; i < K; ++i) {
          hist.push_back(encode_frame(model, e, tr, g0 + i, f));
          chunks.push_back(ag::constant(action_chunk(tr, g0 + i, f)));
        }
        const Var target = ag::stop_gradient(encode_frame(model, e, tr, g0 + K, f));
        pred_terms.push_back(sum_sq(ag::sub(model.predict_next(hist, chunks), target)));

        if (curvature_on) {
          const auto& tc = ds.trajectories[curv_rng.below(n_train)];
          const int g1 = static_cast<int>(curv_rng.below(curv_frames));
          const Var z0 = encode_frame(model, e, tc, g1, f);
          const Var z1 = encode_frame(model, e, tc, g1 + 1, f);
          const Var z2 = encode_frame(model, e, tc, g1 + 2, f);
          try {
            const Var c = straightening_cosine(model, z0, z1, z2, cfg.variant);
            curv_terms.push_back(ag::sub(ag::constant(Tensor::scalar(1.0)), c));
          } catch (const ag::DegenerateVelocity&) {
            // identical consecutive latents carry no direction signal; skip
          }
        }
      }
      Var loss = ag::mean(ag::concat(pred_terms));
      const double pred_val = loss->value.item();
      double curv_val = 0.0;
      if (!curv_terms.empty()) {
        const Var curv = ag::mean(ag::concat(curv_terms));
        curv_val = curv->value.item();
        loss = ag::add(loss, ag::scale(curv, cfg.lambda));
      }
      if (!std::isfinite(loss->value.item()))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 " step " + std::to_string(step));
      ag::backward(loss);
      opt.step();
      pred_acc += pred_val;
      curv_acc += curv_val;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.pred_loss = pred_acc / steps;
    stats.curv_loss = curv_acc / steps;
    stats.total_loss = stats.pred_loss + cfg.lambda * stats.curv_loss;
    stats.holdout_cosine = holdout_cosine(model, e, ds, n_train, n_traj, cfg.variant, 64,
                                          &report.holdout_triples);
    collapse_check(model, e, ds, 100, cfg.seed, &stats.latent_variance);
    report.epochs.push_back(stats);
    if (log) {
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "epoch %2d  pred %.6f  curv %.6f  holdout-cos %.4f  latent-var %.3g\n", epoch,
                    stats.pred_loss, stats.curv_loss, stats.holdout_cosine,
                    stats.latent_variance);
      *log << buf << std::flush;
    }
  }

  report.final_holdout_cosine = holdout_cosine(model, e, ds, n_train, n_traj, cfg.variant, 200,
                                               &report.holdout_triples);
  report.collapse_ok = collapse_check(model, e, ds, 100, cfg.seed + 1, nullptr);
  return report;
}

}  // namespace stpl::train
