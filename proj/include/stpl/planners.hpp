#pragma once

#include <cstdint>
#include <vector>

#include "stpl/env.hpp"
#include "stpl/linalg.hpp"
#include "stpl/world_model.hpp"

namespace stpl::plan {

/// Graph-building latent dynamics: the same planners drive the learned world
/// model and exactly-solvable linear systems.
class Dynamics {
 public:
  virtual ~Dynamics() = default;
  virtual int action_dim() const = 0;       // flattened action vector per model step
  virtual double action_limit() const = 0;  // per-component clip bound
  /// One latent per model step, differentiable w.r.t. the action leaves.
  virtual std::vector<ag::Var> rollout(const std::vector<ag::Var>& actions) const = 0;
};

/// Learned model rollout from a fixed history window (latents and the action
/// chunks aligned with them enter the graph as constants).
class WorldModelDyn : public Dynamics {
 public:
  WorldModelDyn(const wm::WorldModel& model, std::vector<ag::Tensor> hist_latents,
                std::vector<ag::Tensor> seed_chunks, double action_limit);

  int action_dim() const override { return model_.config().action_chunk_dim(); }
  double action_limit() const override { return a_max_; }
  std::vector<ag::Var> rollout(const std::vector<ag::Var>& actions) const override;

 private:
  const wm::WorldModel& model_;
  std::vector<ag::Var> hist_, seeds_;
  double a_max_;
};

/// z_{t+1} = A z_t + B a_t; the closed-form oracle for planner tests.
class LinearDyn : public Dynamics {
 public:
  LinearDyn(const lin::Matrix& a, const lin::Matrix& b, std::vector<double> z0,
            double action_limit = 1e9);

  int action_dim() const override { return da_; }
  double action_limit() const override { return a_max_; }
  std::vector<ag::Var> rollout(const std::vector<ag::Var>& actions) const override;

 private:
  ag::Var a_, b_, z0_;
  int da_;
  double a_max_;
};

/// ||z_H - z_g||^2 on the rollout's terminal latent.
ag::Var terminal_cost(const std::vector<ag::Var>& traj, const ag::Var& goal);

/// sum_t gamma^{H-t} ||z_t - z_g||^2 / sum_t gamma^{H-t}, t = 1..H.
ag::Var weighted_cost(const std::vector<ag::Var>& traj, const ag::Var& goal, double gamma);

struct GdConfig {
  int steps = 100;
  double lr = 0.01;
  bool gaussian_init = false;  // default: zero-initialized actions
  double init_std = 0.5;
  std::uint64_t seed = 0;
  bool weighted = false;  // terminal cost unless set
  double gamma = 0.9;
  // Decision variables per chunk = action_dim / repeat, tiled `repeat` times.
  // World-model planning sets repeat = frameskip: training data holds each
  // action across the chunk, so free per-raw-step components would steer the
  // optimizer into chunks the model has never seen and learned nothing about.
  int repeat = 1;
};

struct CemConfig {
  int samples = 200;
  int iters = 10;
  double elite_frac = 0.1;
  double init_std = 0.5;
  std::uint64_t seed = 0;
  bool weighted = false;
  double gamma = 0.9;
  int repeat = 1;  // see GdConfig::repeat
};

struct PlanResult {
  std::vector<ag::Tensor> actions;  // horizon x [action_dim], best iterate
  double cost = 0.0;
  std::vector<double> trace;  // best-so-far cost per iteration
};

/// Adam on the action sequence; actions are clipped to the bound after every
/// step and the best-cost iterate is returned.
PlanResult plan_gd(const Dynamics& dyn, const ag::Tensor& goal, int horizon,
                   const GdConfig& cfg);

/// Cross-entropy method with a diagonal Gaussian sampling distribution;
/// returns the final elite mean.
PlanResult plan_cem(const Dynamics& dyn, const ag::Tensor& goal, int horizon,
                    const CemConfig& cfg);

struct EpisodeResult {
  bool success = false;
  int raw_steps = 0;            // raw env steps executed
  int steps_to_success = -1;    // raw step index when the radius was first hit
  double final_dist = 0.0;      // at episode end (or at success for MPC)
  double min_dist = 0.0;
  double plan_cost = 0.0;       // latent cost of the (first) plan
  std::vector<double> dist_trace;  // distance to goal after each raw step
};

/// Plan once from the start observation and execute the whole action sequence.
EpisodeResult run_open_loop(const env::Environment& e, const wm::WorldModel& model,
                            const env::PlanTask& task, const GdConfig& cfg);

struct MpcConfig {
  GdConfig gd;
  int horizon = 5;          // model steps per replan
  int max_model_steps = 10; // replan budget
};

/// Replan every model step from the re-encoded observation, execute the first
/// chunk, stop at success or after max_model_steps replans.
EpisodeResult run_mpc(const env::Environment& e, const wm::WorldModel& model,
                      const env::PlanTask& task, const MpcConfig& cfg);

}  // namespace stpl::plan
