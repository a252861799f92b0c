#include "stpl/planners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stpl::plan {

using ag::Tensor;
using ag::Var;

namespace {

Tensor matrix_tensor(const lin::Matrix& m) {
  return Tensor({m.rows(), m.cols()}, m.data());
}

Var sum_sq(const Var& d) { return ag::sum(ag::mul(d, d)); }

void clip_inplace(Tensor& t, double bound) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], -bound, bound);
}

}  // namespace

WorldModelDyn::WorldModelDyn(const wm::WorldModel& model, std::vector<ag::Tensor> hist_latents,
                             std::vector<ag::Tensor> seed_chunks, double action_limit)
    : model_(model), a_max_(action_limit) {
  const int K = model.config().K;
  if (static_cast<int>(hist_latents.size()) != K || static_cast<int>(seed_chunks.size()) != K)
    throw ag::ContractError("WorldModelDyn: history must hold exactly K latents and K chunks");
  for (auto& z : hist_latents) hist_.push_back(ag::constant(std::move(z)));
  for (auto& c : seed_chunks) seeds_.push_back(ag::constant(std::move(c)));
}

std::vector<Var> WorldModelDyn::rollout(const std::vector<Var>& actions) const {
  return model_.rollout(hist_, seeds_, actions);
}

LinearDyn::LinearDyn(const lin::Matrix& a, const lin::Matrix& b, std::vector<double> z0,
                     double action_limit)
    : da_(b.cols()), a_max_(action_limit) {
  if (a.rows() != a.cols() || b.rows() != a.rows() || static_cast<int>(z0.size()) != a.rows())
    throw ag::DimensionError("LinearDyn: inconsistent system dimensions");
  a_ = ag::constant(matrix_tensor(a));
  b_ = ag::constant(matrix_tensor(b));
  z0_ = ag::constant(Tensor::vector(std::move(z0)));
}

std::vector<Var> LinearDyn::rollout(const std::vector<Var>& actions) const {
  std::vector<Var> traj;
  traj.reserve(actions.size());
  Var z = z0_;
  for (const Var& a : actions) {
    z = ag::add(ag::matmul(a_, z), ag::matmul(b_, a));
    traj.push_back(z);
  }
  return traj;
}

Var terminal_cost(const std::vector<Var>& traj, const Var& goal) {
  if (traj.empty()) throw ag::ContractError("terminal_cost: empty trajectory");
  return sum_sq(ag::sub(traj.back(), goal));
}

Var weighted_cost(const std::vector<Var>& traj, const Var& goal, double gamma) {
  if (traj.empty()) throw ag::ContractError("weighted_cost: empty trajectory");
  const int h = static_cast<int>(traj.size());
  double norm = 0.0;
  std::vector<Var> terms;
  terms.reserve(h);
  for (int t = 1; t <= h; ++t) {
    const double w = std::pow(gamma, h - t);
    norm += w;
    terms.push_back(ag::scale(sum_sq(ag::sub(traj[t - 1], goal)), w));
  }
  Var total = terms[0];
  for (int t = 1; t < h; ++t) total = ag::add(total, terms[t]);
  return ag::scale(total, 1.0 / norm);
}

namespace {

Var make_cost(const Dynamics& dyn, const std::vector<Var>& actions, const Var& goal,
              bool weighted, double gamma) {
  const auto traj = dyn.rollout(actions);
  return weighted ? weighted_cost(traj, goal, gamma) : terminal_cost(traj, goal);
}

}  // namespace

namespace {

int decision_dim(int da, int repeat, const char* who) {
  if (repeat < 1 || da % repeat != 0)
    throw std::invalid_argument(std::string(who) + ": repeat must divide the action dimension");
  return da / repeat;
}

// Tile the per-chunk decision variables into the full chunk the dynamics
// expect; gradients accumulate back onto the shared leaf.
Var tile_chunk(const Var& leaf, int repeat) {
  if (repeat == 1) return leaf;
  return ag::concat(std::vector<Var>(static_cast<std::size_t>(repeat), leaf));
}

}  // namespace

PlanResult plan_gd(const Dynamics& dyn, const Tensor& goal, int horizon, const GdConfig& cfg) {
  if (horizon < 1) throw std::invalid_argument("plan_gd: horizon must be >= 1");
  const int dd = decision_dim(dyn.action_dim(), cfg.repeat, "plan_gd");
  const double bound = dyn.action_limit();
  const Var goal_v = ag::constant(goal);

  Rng rng(derive_seed(cfg.seed, 0x60d));
  std::vector<Var> leaves, actions;
  for (int t = 0; t < horizon; ++t) {
    Tensor a({dd});
    if (cfg.gaussian_init)
      for (int i = 0; i < dd; ++i) a[i] = std::clamp(rng.normal(0.0, cfg.init_std), -bound, bound);
    leaves.push_back(ag::leaf(std::move(a), "plan_a" + std::to_string(t)));
    actions.push_back(tile_chunk(leaves.back(), cfg.repeat));
  }

  ag::Adam opt;
  for (const auto& a : leaves) opt.add(a, cfg.lr);

  auto snapshot = [&](PlanResult& r) {
    r.actions.clear();
    for (int t = 0; t < horizon; ++t) r.actions.push_back(tile_chunk(leaves[t], cfg.repeat)->value);
  };

  PlanResult best;
  best.cost = make_cost(dyn, actions, goal_v, cfg.weighted, cfg.gamma)->value.item();
  snapshot(best);
  best.trace.push_back(best.cost);

  for (int it = 0; it < cfg.steps; ++it) {
    const Var cost = make_cost(dyn, actions, goal_v, cfg.weighted, cfg.gamma);
    ag::backward(cost);
    opt.step();
    for (const auto& a : leaves) clip_inplace(a->value, bound);
    // Rebuild the tiled views so they reflect the updated leaves.
    for (int t = 0; t < horizon; ++t) actions[t] = tile_chunk(leaves[t], cfg.repeat);
    const double c = make_cost(dyn, actions, goal_v, cfg.weighted, cfg.gamma)->value.item();
    if (c < best.cost) {
      best.cost = c;
      snapshot(best);
    }
    best.trace.push_back(best.cost);
  }
  return best;
}

PlanResult plan_cem(const Dynamics& dyn, const Tensor& goal, int horizon, const CemConfig& cfg) {
  if (horizon < 1) throw std::invalid_argument("plan_cem: horizon must be >= 1");
  const int da = dyn.action_dim();
  const int dd = decision_dim(da, cfg.repeat, "plan_cem");
  const int dim = horizon * dd;
  const double bound = dyn.action_limit();
  const int n_elite = std::max(1, static_cast<int>(cfg.samples * cfg.elite_frac));
  const Var goal_v = ag::constant(goal);
  Rng rng(derive_seed(cfg.seed, 0xce3));

  std::vector<double> mu(dim, 0.0), sigma(dim, cfg.init_std);
  auto evaluate = [&](const std::vector<double>& flat) {
    std::vector<Var> actions;
    actions.reserve(horizon);
    for (int t = 0; t < horizon; ++t) {
      Tensor a({da});
      for (int i = 0; i < da; ++i) a[i] = flat[t * dd + i % dd];
      actions.push_back(ag::constant(std::move(a)));
    }
    return make_cost(dyn, actions, goal_v, cfg.weighted, cfg.gamma)->value.item();
  };

  std::vector<std::vector<double>> pop(cfg.samples, std::vector<double>(dim));
  std::vector<std::pair<double, int>> scored(cfg.samples);
  PlanResult out;
  for (int iter = 0; iter < cfg.iters; ++iter) {
    for (int s = 0; s < cfg.samples; ++s) {
      for (int i = 0; i < dim; ++i)
        pop[s][i] = std::clamp(mu[i] + sigma[i] * rng.normal(), -bound, bound);
      scored[s] = {evaluate(pop[s]), s};
    }
    std::sort(scored.begin(), scored.end());
    for (int i = 0; i < dim; ++i) {
      double m = 0.0;
      for (int e = 0; e < n_elite; ++e) m += pop[scored[e].second][i];
      m /= n_elite;
      double v = 0.0;
      for (int e = 0; e < n_elite; ++e) {
        const double d = pop[scored[e].second][i] - m;
        v += d * d;
      }
      mu[i] = m;
      sigma[i] = std::sqrt(v / n_elite) + 1e-9;  // floor keeps sampling well defined
    }
    out.trace.push_back(scored[0].first);
  }

  for (int t = 0; t < horizon; ++t) {
    Tensor a({da});
    for (int i = 0; i < da; ++i) a[i] = std::clamp(mu[t * dd + i % dd], -bound, bound);
    out.actions.push_back(std::move(a));
  }
  std::vector<double> flat(dim);
  for (int t = 0; t < horizon; ++t)
    for (int i = 0; i < dd; ++i) flat[t * dd + i] = out.actions[t][i];
  out.cost = evaluate(flat);
  return out;
}

namespace {

double goal_dist(const env::EnvState& s, const env::PlanTask& task) {
  return std::hypot(s.px - task.goal.px, s.py - task.goal.py);
}

// Execute one action chunk (frameskip raw steps), extending the distance
// trace; returns the raw step index of first success, or -1.
int execute_chunk(const env::Environment& e, const Tensor& chunk, int frameskip,
                  env::EnvState& s, const env::PlanTask& task, EpisodeResult& ep) {
  int hit = -1;
  for (int k = 0; k < frameskip; ++k) {
    s = e.step(s, chunk[2 * k], chunk[2 * k + 1]);
    ++ep.raw_steps;
    const double d = goal_dist(s, task);
    ep.dist_trace.push_back(d);
    ep.min_dist = std::min(ep.min_dist, d);
    if (hit < 0 && d <= e.success_radius()) hit = ep.raw_steps - 1;
  }
  return hit;
}

}  // namespace

EpisodeResult run_open_loop(const env::Environment& e, const wm::WorldModel& model,
                            const env::PlanTask& task, const GdConfig& cfg) {
  const auto& mc = model.config();
  const int f = mc.frameskip;
  if (task.budget_steps % f != 0)
    throw std::invalid_argument("run_open_loop: budget must be a frameskip multiple");
  const int horizon = task.budget_steps / f;

  const Tensor z0 = model.encode(task.start_obs.image)->value;
  const Tensor zg = model.encode(task.goal_obs.image)->value;
  const std::vector<Tensor> hist(mc.K, z0);
  const std::vector<Tensor> seeds(mc.K, Tensor({mc.action_chunk_dim()}));
  const WorldModelDyn dyn(model, hist, seeds, e.action_limit());

  GdConfig gd = cfg;
  gd.repeat = f;  // plan within the held-action chunk family the model saw
  const PlanResult plan = plan_gd(dyn, zg, horizon, gd);

  EpisodeResult ep;
  ep.plan_cost = plan.cost;
  ep.min_dist = goal_dist(task.start, task);
  env::EnvState s = task.start;
  for (const Tensor& chunk : plan.actions) {
    const int hit = execute_chunk(e, chunk, f, s, task, ep);
    if (hit >= 0 && ep.steps_to_success < 0) ep.steps_to_success = hit;
  }
  ep.final_dist = goal_dist(s, task);
  // Open-loop success is judged where the executed plan ends; passing through
  // the goal region en route only shows up in steps_to_success.
  ep.success = ep.final_dist <= e.success_radius();
  return ep;
}

EpisodeResult run_mpc(const env::Environment& e, const wm::WorldModel& model,
                      const env::PlanTask& task, const MpcConfig& cfg) {
  const auto& mc = model.config();
  const int f = mc.frameskip;
  const Tensor zg = model.encode(task.goal_obs.image)->value;

  // History starts as K copies of the start latent with zero action chunks.
  std::vector<Tensor> hist(mc.K, model.encode(task.start_obs.image)->value);
  std::vector<Tensor> seeds(mc.K, Tensor({mc.action_chunk_dim()}));

  GdConfig gd = cfg.gd;
  gd.weighted = true;  // dense weighting stabilizes the receding horizon
  gd.repeat = f;       // plan within the held-action chunk family the model saw

  EpisodeResult ep;
  ep.min_dist = goal_dist(task.start, task);
  env::EnvState s = task.start;
  for (int step = 0; step < cfg.max_model_steps; ++step) {
    gd.seed = derive_seed(cfg.gd.seed, static_cast<std::uint64_t>(step));
    const WorldModelDyn dyn(model, hist, seeds, e.action_limit());
    const PlanResult plan = plan_gd(dyn, zg, cfg.horizon, gd);
    if (step == 0) ep.plan_cost = plan.cost;

    const int hit = execute_chunk(e, plan.actions[0], f, s, task, ep);
    if (hit >= 0) {
      ep.steps_to_success = hit;
      break;
    }
    hist.erase(hist.begin());
    hist.push_back(model.encode(e.render(s).image)->value);
    seeds.erase(seeds.begin());
    seeds.push_back(plan.actions[0]);
  }
  ep.final_dist = goal_dist(s, task);
  ep.success = ep.steps_to_success >= 0;
  return ep;
}

}  // namespace stpl::plan
