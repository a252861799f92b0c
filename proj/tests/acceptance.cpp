// End-to-end acceptance checks. Each numbered criterion prints exactly one
// PASS/FAIL line; the binary exits nonzero if any criterion fails. Tolerances
// are pinned as constants next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stpl/diagnostics.hpp"
#include "stpl/env.hpp"
#include "stpl/linear_analysis.hpp"
#include "stpl/planners.hpp"
#include "stpl/rng.hpp"
#include "stpl/runio.hpp"
#include "stpl/training.hpp"
#include "stpl/world_model.hpp"

namespace {

using namespace stpl;
using Clock = std::chrono::steady_clock;

int g_failures = 0;

void report(int id, const std::string& label, bool ok, const std::string& detail) {
  std::printf("criterion %2d [%s] %s — %s\n", id, ok ? "PASS" : "FAIL", label.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
  return buf;
}

double elapsed(const Clock::time_point& t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct MeanStd {
  double mean = 0.0, sd = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double v = 0.0;
    for (double x : xs) v += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(v / static_cast<double>(xs.size() - 1));
  }
  return out;
}

// --------------------------------------------------------------------------
// Criteria 1 + 2: randomized conditioning sweep and the Gramian/Hessian
// equivalence on the same draws.

std::vector<lin::SweepRow> criterion_1(double* seconds_out) {
  const auto t0 = Clock::now();
  const auto rows = lin::theorem_sweep(1000, 4, {0.1, 0.25, 0.4}, {2, 5, 10}, 0.1, 1);
  *seconds_out = elapsed(t0);

  int eps_ok = 0, exp_ok = 0, gram_ok = 0;
  for (const auto& r : rows) {
    eps_ok += r.eps_holds;
    exp_ok += r.exp_holds;  // every eps here is <= 0.5
    gram_ok += r.gram_jac_err < 1e-10;
  }
  const bool ok = eps_ok == 1000 && exp_ok == 1000 && gram_ok == 1000 && *seconds_out < 30.0;
  report(1, "conditioning bounds on 1000 random near-identity systems", ok,
         "eps-bound " + std::to_string(eps_ok) + "/1000, exp-bound " + std::to_string(exp_ok) +
             "/1000, gramian-jacobian<1e-10 " + std::to_string(gram_ok) + "/1000, " +
             fmt(*seconds_out, 3) + "s (<30s)");
  return rows;
}

void criterion_2(const std::vector<lin::SweepRow>& rows) {
  int ok_rows = 0;
  for (const auto& r : rows) ok_rows += r.lemma_ok;
  report(2, "Hessian and Gramian share the effective condition number (1e-8 rel)",
         ok_rows == static_cast<int>(rows.size()),
         std::to_string(ok_rows) + "/" + std::to_string(rows.size()) + " draws");
}

// --------------------------------------------------------------------------
// Criterion 3: pure rotations make the velocity-cosine proxy exact.

void criterion_3() {
  constexpr double kGap = 1e-9;
  bool ok = true;
  std::ostringstream detail;
  for (const double theta : {0.05, 0.1, 0.2}) {
    lin::LinearSystem sys;
    sys.A = lin::Matrix::rotation2(theta);
    sys.B = lin::Matrix::identity(2);
    sys.K = 30;
    sys.z0 = {1.0, 0.0};
    const std::vector<std::vector<double>> actions(30, std::vector<double>(2, 0.0));
    const auto states = lin::simulate(sys, actions);
    const lin::ProxyReport rep = lin::cosine_proxy_check(sys, states, actions);
    const double lhs_expect = 2.0 * std::sin(0.5 * theta);
    double max_gap = 0.0, max_lhs_err = 0.0, max_cos_err = 0.0;
    for (const auto& s : rep.steps) {
      max_gap = std::max(max_gap, std::abs(s.rhs - s.lhs));
      max_lhs_err = std::max(max_lhs_err, std::abs(s.lhs - lhs_expect));
      max_cos_err = std::max(max_cos_err, std::abs(s.cosine - std::cos(theta)));
      ok = ok && s.holds;
    }
    ok = ok && rep.constant_speed && max_gap < kGap && max_lhs_err < kGap && max_cos_err < kGap;
    detail << "theta=" << theta << " gap=" << fmt(max_gap, 2) << " ";
  }
  report(3, "rotation-family velocity proxy is tight to 1e-9", ok, detail.str());
}

// --------------------------------------------------------------------------
// Criterion 4: finite-difference validation of the gradient engine.

ag::Tensor rand_tensor(std::vector<int> shape, Rng& rng, double s = 1.0) {
  ag::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, s);
  return t;
}

wm::ModelConfig tiny_model_config() {
  wm::ModelConfig cfg;
  cfg.d_v = 2;
  cfg.enc_hidden = 8;
  cfg.act_hidden = 4;
  cfg.pred_hidden = 16;
  cfg.head_hidden = 8;
  cfg.d_h = 4;
  return cfg;
}

void criterion_4() {
  constexpr double kGraphTol = 1e-4;
  constexpr double kPlanTol = 1e-3;
  constexpr double kFdEps = 1e-6;

  // Part A: 100 random composite graphs.
  int graph_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(42, static_cast<std::uint64_t>(trial)));
    auto u = ag::leaf(rand_tensor({6}, rng), "u");
    auto v = ag::leaf(rand_tensor({6}, rng), "v");
    auto w1 = ag::leaf(rand_tensor({6, 4}, rng, 0.5), "w1");
    auto b1 = ag::leaf(rand_tensor({4}, rng, 0.1), "b1");
    auto w2 = ag::leaf(rand_tensor({4, 4}, rng, 0.5), "w2");
    auto tgt = ag::leaf(rand_tensor({6}, rng), "tgt");  // sg target: never perturbed
    const std::vector<ag::Var> leaves = {u, v, w1, b1, w2};
    auto f = [&]() {
      auto h = ag::tanh_(ag::add(ag::matmul(ag::reshape(u, {1, 6}), w1), b1));
      auto g = ag::relu(ag::matmul(h, w2));
      auto gv = ag::reshape(g, {4});
      auto c = ag::cosine(ag::slice(u, 0, 3), ag::slice(v, 3, 3));
      auto joined = ag::concat({gv, ag::slice(v, 0, 2)});
      auto loss = ag::add(ag::add(ag::mse(joined, ag::stop_gradient(tgt)), ag::mul(c, c)),
                          ag::scale(ag::l2norm(ag::sub(u, v)), 0.5));
      return ag::add(loss, ag::mean(gv));
    };
    ag::backward(f());
    for (const auto& p : leaves) {
      const ag::Tensor analytic =
          p->grad.empty() ? ag::Tensor::zeros_like(p->value) : p->grad;
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double keep = p->value[i];
        p->value[i] = keep + kFdEps;
        const double fp = f()->value.item();
        p->value[i] = keep - kFdEps;
        const double fm = f()->value.item();
        p->value[i] = keep;
        const double fd = (fp - fm) / (2.0 * kFdEps);
        if (std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd)) >= kGraphTol) ++graph_fail;
      }
      p->grad = analytic;
    }
  }

  // Part B: planning-cost gradients through 5 unrolled model steps.
  int plan_fail = 0;
  const env::Environment e = env::Environment::make("umaze");
  const wm::WorldModel model = wm::WorldModel::init(tiny_model_config(), 3);
  const auto& mc = model.config();
  for (int trial = 0; trial < 3; ++trial) {
    Rng rng(derive_seed(99, static_cast<std::uint64_t>(trial)));
    const ag::Tensor z0 = model.encode(e.render(e.random_free_state(rng)).image)->value;
    const ag::Tensor goal = model.encode(e.render(e.random_free_state(rng)).image)->value;
    const plan::WorldModelDyn dyn(model, std::vector<ag::Tensor>(mc.K, z0),
                                  std::vector<ag::Tensor>(mc.K, ag::Tensor({mc.action_chunk_dim()})),
                                  1.0);
    std::vector<ag::Var> actions;
    for (int t = 0; t < 5; ++t)
      actions.push_back(ag::leaf(rand_tensor({mc.action_chunk_dim()}, rng, 0.3)));
    auto cost = [&]() {
      return plan::terminal_cost(dyn.rollout(actions), ag::constant(goal));
    };
    ag::backward(cost());
    for (const auto& a : actions) {
      const ag::Tensor analytic = a->grad;
      for (std::size_t i = 0; i < a->value.size(); ++i) {
        const double keep = a->value[i];
        a->value[i] = keep + kFdEps;
        const double fp = cost()->value.item();
        a->value[i] = keep - kFdEps;
        const double fm = cost()->value.item();
        a->value[i] = keep;
        const double fd = (fp - fm) / (2.0 * kFdEps);
        if (std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd)) >= kPlanTol) ++plan_fail;
      }
      a->grad = analytic;
    }
  }
  report(4, "finite differences validate graph and planning gradients",
         graph_fail == 0 && plan_fail == 0,
         "graph mismatches " + std::to_string(graph_fail) + " (tol 1e-4), planning mismatches " +
             std::to_string(plan_fail) + " (tol 1e-3)");
}

// --------------------------------------------------------------------------
// Criterion 5: exactly solvable linear planning oracle.

void criterion_5() {
  constexpr double kGdCost = 1e-4;
  constexpr double kCemCost = 1e-2;
  const int n_tasks = 50, h = 5, d = 4;
  int gd_ok = 0, cem_ok = 0;
  for (int t = 0; t < n_tasks; ++t) {
    Rng rng(derive_seed(55, static_cast<std::uint64_t>(t)));
    lin::LinearSystem sys;
    sys.A = lin::random_eps_straight(d, 0.2, rng);
    sys.B = lin::Matrix::identity(d) + lin::random_gaussian(d, d, rng, 0.1);
    sys.K = h;
    sys.z0.resize(d);
    for (double& x : sys.z0) x = rng.normal(0.0, 0.3);
    std::vector<std::vector<double>> acts(h, std::vector<double>(d));
    for (auto& a : acts)
      for (double& x : a) x = rng.uniform(-0.5, 0.5);
    const auto goal = lin::simulate(sys, acts).back();

    const plan::LinearDyn dyn(sys.A, sys.B, sys.z0);
    // The badly conditioned draws need a bigger optimizer budget than the
    // world-model planner defaults; the cost thresholds stay as pinned.
    plan::GdConfig gd;
    gd.steps = 500;
    gd.seed = derive_seed(56, static_cast<std::uint64_t>(t));
    const plan::PlanResult rg = plan::plan_gd(dyn, ag::Tensor::vector(goal), h, gd);
    gd_ok += rg.cost < kGdCost;

    plan::CemConfig cem;
    cem.iters = 25;
    cem.seed = derive_seed(57, static_cast<std::uint64_t>(t));
    const plan::PlanResult rc = plan::plan_cem(dyn, ag::Tensor::vector(goal), h, cem);
    cem_ok += rc.cost < kCemCost;
  }
  report(5, "linear-oracle planning reaches its goals", gd_ok == n_tasks && cem_ok >= 48,
         "gradient planner cost<1e-4 in " + std::to_string(gd_ok) + "/50 (need 50), "
             "cross-entropy cost<1e-2 in " + std::to_string(cem_ok) + "/50 (need >=48)");
}

// --------------------------------------------------------------------------
// Criteria 6-8 share one set of trained models:
// {wall, umaze} x {straightened, plain} x seeds {0,1,2}.

struct EnvRuns {
  std::string env_name;
  std::vector<wm::WorldModel> straight, plain;  // one per seed
  std::vector<train::TrainReport> straight_rep, plain_rep;
  double max_train_seconds = 0.0;
};

EnvRuns train_env_models(const std::string& env_name, int n_traj, int traj_len) {
  EnvRuns runs;
  runs.env_name = env_name;
  const env::Environment e = env::Environment::make(env_name);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const env::Dataset ds = env::generate_dataset(e, n_traj, traj_len, 5, seed);
    for (const double lambda : {0.1, 0.0}) {
      train::TrainConfig tc;  // defaults: 20 epochs, auto steps per epoch
      tc.lambda = lambda;
      tc.seed = seed;
      wm::ModelConfig mc;  // full-size defaults
      wm::WorldModel model = wm::WorldModel::init(mc, seed);
      const auto t0 = Clock::now();
      train::TrainReport rep = train::train(model, e, ds, tc);
      runs.max_train_seconds = std::max(runs.max_train_seconds, elapsed(t0));
      if (lambda > 0.0) {
        runs.straight.push_back(std::move(model));
        runs.straight_rep.push_back(std::move(rep));
      } else {
        runs.plain.push_back(std::move(model));
        runs.plain_rep.push_back(std::move(rep));
      }
    }
  }
  return runs;
}

void criterion_6(const std::vector<EnvRuns>& all_runs) {
  constexpr double kMargin = 0.05;
  constexpr double kMaxRunSeconds = 600.0;
  bool ok = true;
  std::ostringstream detail;
  for (const auto& runs : all_runs) {
    for (int s = 0; s < 3; ++s) {
      const double cs = runs.straight_rep[s].final_holdout_cosine;
      const double cp = runs.plain_rep[s].final_holdout_cosine;
      ok = ok && (cs - cp >= kMargin) && runs.straight_rep[s].collapse_ok &&
           runs.plain_rep[s].collapse_ok;
      if (s == 0) detail << runs.env_name << " margins ";
      detail << fmt(cs - cp, 3) << (s == 2 ? "; " : ",");
    }
    ok = ok && runs.max_train_seconds < kMaxRunSeconds;
    detail << "max-train " << fmt(runs.max_train_seconds, 3) << "s; ";
  }
  report(6, "straightening lifts held-out cosine by >=0.05 without collapse", ok, detail.str());
}

void criterion_7(const std::vector<EnvRuns>& all_runs) {
  bool ok = true;
  std::ostringstream detail;
  std::printf("    success rate, mean±std over 3 seeds (50 tasks each, budget 25):\n");
  for (std::size_t ei = 0; ei < all_runs.size(); ++ei) {
    const auto& runs = all_runs[ei];
    const env::Environment e = env::Environment::make(runs.env_name);
    std::vector<double> open_s, open_p, mpc_s;
    // Compare integer success counts over all 150 episodes: summing 0.02
    // multiples in floating point can order two genuinely tied rates.
    int tot_s = 0, tot_p = 0, tot_m = 0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      int so = 0, po = 0, sm = 0;
      for (int t = 0; t < 50; ++t) {
        const auto task =
            env::sample_goal_task(e, derive_seed(1000 * ei + s, static_cast<std::uint64_t>(t)), 25);
        plan::GdConfig gd;
        gd.seed = derive_seed(2000 * ei + s, static_cast<std::uint64_t>(t));
        so += plan::run_open_loop(e, runs.straight[s], task, gd).success ? 1 : 0;
        po += plan::run_open_loop(e, runs.plain[s], task, gd).success ? 1 : 0;
        plan::MpcConfig mpc;
        mpc.gd = gd;
        mpc.max_model_steps = 5;
        sm += plan::run_mpc(e, runs.straight[s], task, mpc).success ? 1 : 0;
      }
      open_s.push_back(so / 50.0);
      open_p.push_back(po / 50.0);
      mpc_s.push_back(sm / 50.0);
      tot_s += so;
      tot_p += po;
      tot_m += sm;
    }
    const MeanStd ms = mean_std(open_s), mp = mean_std(open_p), mm = mean_std(mpc_s);
    std::printf("    %-6s  open-loop plain %.3f±%.3f  open-loop straightened %.3f±%.3f  "
                "mpc straightened %.3f±%.3f\n",
                runs.env_name.c_str(), mp.mean, mp.sd, ms.mean, ms.sd, mm.mean, mm.sd);
    ok = ok && tot_s >= tot_p && tot_m >= tot_s;
    detail << runs.env_name << " open " << tot_s << "/150>=" << tot_p << "/150, mpc " << tot_m
           << "/150>=" << tot_s << "/150; ";
  }
  report(7, "straightening and replanning never hurt success", ok, detail.str());
}

// Spearman agreement between pooled latent distances and 4-neighbor geodesics,
// averaged over every free goal cell: UMaze has only seven free cells, so a
// single goal yields too few rank pairs to separate the models.
double mean_pooled_spearman(const wm::WorldModel& model, const env::Environment& e) {
  double sum = 0.0;
  int n = 0;
  for (int r = 0; r < e.layout().rows; ++r)
    for (int c = 0; c < e.layout().cols; ++c) {
      if (e.layout().is_wall(r, c)) continue;
      const diag::Grid geo = diag::geodesic_map(e.layout(), r, c, /*diag8=*/false);
      const diag::Grid h = diag::latent_heatmap(model, e, r, c, /*pooled=*/true);
      sum += diag::heatmap_agreement(h, geo).spearman;
      ++n;
    }
  return sum / n;
}

void criterion_8(const EnvRuns& umaze_runs) {
  bool ok = true;
  std::ostringstream detail;
  const env::Environment e = env::Environment::make("umaze");
  for (int s = 0; s < 3; ++s) {
    const double rs = mean_pooled_spearman(umaze_runs.straight[s], e);
    const double rp = mean_pooled_spearman(umaze_runs.plain[s], e);
    ok = ok && rs > rp;
    detail << "seed" << s << " " << fmt(rs, 3) << ">" << fmt(rp, 3) << "; ";
  }
  const env::MazeLayout tl = env::MazeLayout::named("teleport");
  const diag::Grid tele = diag::geodesic_map(tl, 1, 1, true, /*use_teleport=*/true);
  const diag::Grid noop = diag::geodesic_map(tl, 1, 1, true, /*use_teleport=*/false);
  bool cellwise = true;
  for (std::size_t i = 0; i < tele.v.size(); ++i)
    if (std::isfinite(noop.v[i]) && tele.v[i] > noop.v[i] + 1e-12) cellwise = false;
  ok = ok && cellwise;
  detail << "teleport cell-wise<=plain " << (cellwise ? "yes" : "NO");
  report(8, "straightened latents track maze geodesics", ok, detail.str());
}

// --------------------------------------------------------------------------
// Criterion 9: exact hand enumeration and the teleport transition rules.

void criterion_9() {
  bool ok = true;
  std::ostringstream detail;

  // Open 3x3 room, 4-neighbor distances from the corner (1,1).
  const env::MazeLayout room = env::MazeLayout::parse("#####\n#...#\n#...#\n#...#\n#####\n", 1.0);
  const diag::Grid g4 = diag::geodesic_map(room, 1, 1, /*diag8=*/false);
  ok = ok && g4.at(1, 1) == 0.0 && g4.at(1, 2) == 1.0 && g4.at(2, 2) == 2.0 &&
       g4.at(3, 3) == 4.0 && g4.at(3, 1) == 2.0 && std::isinf(g4.at(0, 0));

  // UMaze from (1,1): the inner wall forces the long way around.
  const diag::Grid gu = diag::geodesic_map(env::MazeLayout::named("umaze"), 1, 1, false);
  ok = ok && gu.at(1, 2) == 1.0 && gu.at(1, 3) == 2.0 && gu.at(2, 3) == 3.0 &&
       gu.at(3, 3) == 4.0 && gu.at(3, 2) == 5.0 && gu.at(3, 1) == 6.0;
  detail << "room+umaze exact " << (ok ? "yes" : "NO") << "; ";

  // Teleport rules, one directed transition each.
  const env::Environment te = env::Environment::make("teleport");
  const double trig = te.layout().teleport_trigger_x();
  const double exit_x = te.layout().teleport_exit_x();
  env::EnvState s;
  s.px = trig - 0.05;
  s.py = 2.5;
  s.vx = 0.9;
  s.vy = 0.0;
  const env::EnvState after = te.step(s, 1.0, 0.0);
  const bool rule1 = after.px == exit_x;           // x reset to the left side
  const bool rule2 = after.py == s.py;             // y preserved exactly
  const bool rule3 = after.vx == std::abs(after.vx) && after.vx > 0.0;  // vx -> |vx|
  env::EnvState l = s;
  l.vx = -0.9;
  const env::EnvState stay = te.step(l, -1.0, 0.0);  // moving left: no trigger
  const bool rule_no = stay.px < trig && stay.px != exit_x;
  ok = ok && rule1 && rule2 && rule3 && rule_no;
  detail << "teleport rules x-reset=" << rule1 << " y-kept=" << rule2 << " vx-abs=" << rule3
         << " no-trigger=" << rule_no;
  report(9, "hand-enumerated geodesics and teleport transition rules", ok, detail.str());
}

// --------------------------------------------------------------------------
// Criterion 10: rerunning any command with the same config and seed must
// reproduce every artifact byte for byte (timings.csv is excluded by design).

bool run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str()) == 0;
}

void criterion_10(const std::string& argv0) {
  namespace fs = std::filesystem;
  const fs::path cli = fs::path(argv0).parent_path() / ".." / "tools" / "stpl-cli";
  if (!fs::exists(cli)) {
    report(10, "reruns reproduce artifacts byte for byte", false,
           "command-line binary not found at " + cli.string());
    return;
  }
  const fs::path root = fs::path("acceptance_rerun");
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string a = (root / "a").string(), b = (root / "b").string();

  bool ran = true;
  for (const std::string out : {a, b}) {
    ran = ran && run_cli(cli.string(), "gen-data env=umaze n_traj=20 traj_len=20 seed=3 out_root=" + out);
    ran = ran && run_cli(cli.string(), "train data=" + a +
                                           "/gen-data/3/data.bin d_v=2 epochs=1 "
                                           "steps_per_epoch=3 seed=3 out_root=" + out);
    ran = ran && run_cli(cli.string(), "eval-plan model=" + a +
                                           "/train/3/model.ckpt env=umaze tasks=2 gd_steps=10 "
                                           "budget=25 seed=3 out_root=" + out);
    ran = ran && run_cli(cli.string(), "analyze-linear seed=5 out_root=" + out);
    ran = ran && run_cli(cli.string(), "sweep-theorem draws=20 seed=5 out_root=" + out);
  }

  int compared = 0, mismatched = 0, missing = 0;
  if (ran) {
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file()) continue;
      if (entry.path().filename() == "timings.csv") continue;
      const fs::path rel = fs::relative(entry.path(), a);
      const fs::path other = b / rel;
      if (!fs::exists(other)) {
        ++missing;
        continue;
      }
      ++compared;
      if (runio::fnv1a64_file(entry.path().string()) != runio::fnv1a64_file(other.string()))
        ++mismatched;
    }
  }
  const bool ok = ran && compared > 0 && mismatched == 0 && missing == 0;
  report(10, "reruns reproduce artifacts byte for byte", ok,
         ran ? std::to_string(compared) + " files compared, " + std::to_string(mismatched) +
                   " mismatched, " + std::to_string(missing) + " missing"
             : "a command exited nonzero");
  fs::remove_all(root);
}

}  // namespace

int main(int, char** argv) {
  const auto t0 = Clock::now();
  double sweep_seconds = 0.0;

  const auto rows = criterion_1(&sweep_seconds);
  criterion_2(rows);
  criterion_3();
  criterion_4();
  criterion_5();

  std::vector<EnvRuns> all_runs;
  all_runs.push_back(train_env_models("wall", 1920, 50));
  all_runs.push_back(train_env_models("umaze", 2000, 100));
  criterion_6(all_runs);
  criterion_7(all_runs);
  criterion_8(all_runs[1]);
  criterion_9();
  criterion_10(argv[0]);

  std::printf("%s: %d/10 criteria passed in %.1fs\n", g_failures == 0 ? "SUCCESS" : "FAILURE",
              10 - g_failures, elapsed(t0));
  return g_failures == 0 ? 0 : 1;
}
