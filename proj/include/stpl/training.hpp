#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "stpl/env.hpp"
#include "stpl/world_model.hpp"

namespace stpl::train {

struct TrainConfig {
  double lambda = 0.1;   // weight on the straightening term
  int batch = 32;
  int epochs = 20;
  double enc_lr = -1.0;  // auto: 1e-5 with straightening, 1e-6 without
  double other_lr = 5e-4;
  wm::CosVariant variant = wm::CosVariant::Agg;
  double holdout_frac = 0.05;  // trailing trajectories held out
  int steps_per_epoch = -1;    // auto: n_train / batch
  std::uint64_t seed = 0;

  double effective_enc_lr() const {
    if (enc_lr > 0.0) return enc_lr;
    return lambda > 0.0 ? 1e-5 : 1e-6;
  }

  // The pooling head parameterizes the straightening term itself: at the
  // predictor rate (5e-4) it satisfies the cosine alone by collapsing to a
  // near-constant output direction, while at the encoder rate (1e-5) it is
  // too slow to express straightening within the training budget. The default
  // sits in between; auto (-1) selects it.
  double head_lr = -1.0;
  double effective_head_lr() const { return head_lr > 0.0 ? head_lr : 3e-5; }
};

struct EpochStats {
  int epoch = 0;
  double pred_loss = 0.0;       // mean squared prediction error per step
  double curv_loss = 0.0;       // mean 1 - C (0 when lambda == 0)
  double total_loss = 0.0;
  double holdout_cosine = 0.0;  // mean straightening cosine on held-out triples
  double latent_variance = 0.0; // mean per-dimension latent variance
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double final_holdout_cosine = 0.0;
  bool collapse_ok = false;
  int holdout_triples = 0;

  void write_csv(std::ostream& out) const;
};

/// Action chunk [2 * frameskip] for frameskipped step g of a trajectory.
ag::Tensor action_chunk(const env::Trajectory& tr, int g, int frameskip);

/// Mean straightening cosine over consecutive encoded latent triples from the
/// trajectories in [first, last). Degenerate (near-zero velocity) triples are
/// skipped; n_used reports how many contributed.
double holdout_cosine(const wm::WorldModel& model, const env::Environment& e,
                      const env::Dataset& ds, int first, int last, wm::CosVariant variant,
                      int max_triples, int* n_used = nullptr);

/// Mean per-dimension variance of encoded latents over >= n_probes random
/// frames; passes when it stays above 1e-6 (latents did not collapse).
bool collapse_check(const wm::WorldModel& model, const env::Environment& e,
                    const env::Dataset& ds, int n_probes, std::uint64_t seed,
                    double* variance_out = nullptr);

/// Joint training of encoder/action-encoder/predictor (and pooling head when
/// the straightening term is active): L = ||z_hat - sg(z)||^2 + lambda (1 - C).
TrainReport train(wm::WorldModel& model, const env::Environment& e, const env::Dataset& ds,
                  const TrainConfig& cfg, std::ostream* log = nullptr);

}  // namespace stpl::train
