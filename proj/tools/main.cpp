// Command-line front end: dataset generation, world-model training, latent
// planning evaluation, and the linear conditioning analyses. Every subcommand
// takes key=value options with a closed key set, writes its artifacts into
// runs/<name>/<seed>/, and records a manifest with per-file checksums so
// reruns can be compared byte for byte. Wall-clock timings go to a separate
// timings.csv that is excluded from the manifest.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stpl/diagnostics.hpp"
#include "stpl/env.hpp"
#include "stpl/linear_analysis.hpp"
#include "stpl/planners.hpp"
#include "stpl/rng.hpp"
#include "stpl/runio.hpp"
#include "stpl/training.hpp"
#include "stpl/world_model.hpp"

namespace {

using stpl::Rng;
using stpl::derive_seed;
using stpl::runio::RunConfig;

using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Parses kv against `defaults`; on any error prints all of them and throws.
RunConfig parse_or_fail(const std::vector<std::string>& kv,
                        const std::map<std::string, std::string>& defaults) {
  std::vector<std::string> errors;
  RunConfig cfg = RunConfig::parse(kv, defaults, errors);
  if (!errors.empty()) {
    for (const std::string& e : errors) std::cerr << "config error: " << e << "\n";
    throw std::invalid_argument("invalid configuration (" + std::to_string(errors.size()) +
                                " error(s))");
  }
  return cfg;
}

std::string require_path(const RunConfig& cfg, const std::string& key) {
  const std::string& p = cfg.raw(key);
  if (p.empty()) throw std::invalid_argument("config key '" + key + "' is required");
  return p;
}

void write_timing(const std::string& dir, const std::vector<std::pair<std::string, double>>& rows) {
  std::ofstream out(std::filesystem::path(dir) / "timings.csv");
  out << "phase,seconds\n";
  for (const auto& [phase, sec] : rows) out << phase << "," << fmt(sec) << "\n";
}

void write_episodes_csv(const std::string& path,
                        const std::vector<stpl::plan::EpisodeResult>& eps) {
  std::ofstream out(path);
  out << "task,success,raw_steps,steps_to_success,final_dist,min_dist,plan_cost\n";
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const auto& e = eps[i];
    out << i << "," << (e.success ? 1 : 0) << "," << e.raw_steps << "," << e.steps_to_success
        << "," << fmt(e.final_dist) << "," << fmt(e.min_dist) << "," << fmt(e.plan_cost) << "\n";
  }
}

void print_episode_summary(const std::vector<stpl::plan::EpisodeResult>& eps) {
  double succ = 0.0, final_d = 0.0, min_d = 0.0;
  for (const auto& e : eps) {
    succ += e.success ? 1.0 : 0.0;
    final_d += e.final_dist;
    min_d += e.min_dist;
  }
  const double n = static_cast<double>(eps.size());
  std::cout << "tasks=" << eps.size() << " success_rate=" << fmt(succ / n)
            << " mean_final_dist=" << fmt(final_d / n) << " mean_min_dist=" << fmt(min_d / n)
            << "\n";
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const std::vector<std::string>& kv) {
  const RunConfig cfg = parse_or_fail(kv, {{"env", "umaze"},
                                           {"n_traj", "100"},
                                           {"traj_len", "100"},
                                           {"frameskip", "5"},
                                           {"seed", "0"},
                                           {"name", "gen-data"},
                                           {"out_root", "runs"}});
  const std::uint64_t seed = cfg.get_u64("seed");
  const auto env = stpl::env::Environment::make(cfg.raw("env"));
  const std::string dir = stpl::runio::make_run_dir(cfg.raw("out_root"), cfg.raw("name"), seed);

  const auto t0 = Clock::now();
  const stpl::env::Dataset ds = stpl::env::generate_dataset(
      env, cfg.get_int("n_traj"), cfg.get_int("traj_len"), cfg.get_int("frameskip"), seed);
  stpl::env::save_dataset((std::filesystem::path(dir) / "data.bin").string(), ds);
  const double sec = std::chrono::duration<double>(Clock::now() - t0).count();

  stpl::runio::write_manifest(dir, cfg, seed, {"data.bin"});
  write_timing(dir, {{"gen-data", sec}});
  std::cout << "wrote " << dir << "/data.bin (" << ds.trajectories.size() << " trajectories x "
            << ds.traj_len() << " steps)\n";
  return 0;
}

int cmd_train(const std::vector<std::string>& kv) {
  const RunConfig cfg = parse_or_fail(kv, {{"data", ""},
                                           {"lambda", "0.1"},
                                           {"variant", "agg"},
                                           {"epochs", "20"},
                                           {"batch", "32"},
                                           {"enc_lr", "-1"},
                                           {"head_lr", "-1"},
                                           {"other_lr", "5e-4"},
                                           {"steps_per_epoch", "-1"},
                                           {"holdout_frac", "0.05"},
                                           {"d_v", "8"},
                                           {"d_h", "32"},
                                           {"mode", "spatial"},
                                           {"seed", "0"},
                                           {"name", "train"},
                                           {"out_root", "runs"}});
  const std::uint64_t seed = cfg.get_u64("seed");
  const stpl::env::Dataset ds = stpl::env::load_dataset(require_path(cfg, "data"));
  const auto env = stpl::env::Environment::make(ds.env_name);

  stpl::wm::ModelConfig mc;
  mc.d_v = cfg.get_int("d_v");
  mc.d_h = cfg.get_int("d_h");
  mc.frameskip = ds.frameskip;
  if (cfg.raw("mode") == "global")
    mc.mode = stpl::wm::LatentMode::Global;
  else if (cfg.raw("mode") != "spatial")
    throw std::invalid_argument("config key 'mode': expected spatial|global");

  stpl::train::TrainConfig tc;
  tc.lambda = cfg.get_double("lambda");
  tc.variant = stpl::wm::parse_variant(cfg.raw("variant"));
  tc.epochs = cfg.get_int("epochs");
  tc.batch = cfg.get_int("batch");
  tc.enc_lr = cfg.get_double("enc_lr");
  tc.head_lr = cfg.get_double("head_lr");
  tc.other_lr = cfg.get_double("other_lr");
  tc.steps_per_epoch = cfg.get_int("steps_per_epoch");
  tc.holdout_frac = cfg.get_double("holdout_frac");
  tc.seed = seed;

  const std::string dir = stpl::runio::make_run_dir(cfg.raw("out_root"), cfg.raw("name"), seed);
  stpl::wm::WorldModel model = stpl::wm::WorldModel::init(mc, seed);

  const auto t0 = Clock::now();
  const stpl::train::TrainReport rep = stpl::train::train(model, env, ds, tc, &std::cout);
  const double sec = std::chrono::duration<double>(Clock::now() - t0).count();

  model.save((std::filesystem::path(dir) / "model.ckpt").string());
  {
    std::ofstream log(std::filesystem::path(dir) / "train_log.csv");
    rep.write_csv(log);
  }
  stpl::runio::write_manifest(dir, cfg, seed, {"model.ckpt", "train_log.csv"});
  write_timing(dir, {{"train", sec}});
  std::cout << "final_holdout_cosine=" << fmt(rep.final_holdout_cosine)
            << " collapse_ok=" << (rep.collapse_ok ? 1 : 0) << "\n";
  return 0;
}

int cmd_eval_plan(const std::vector<std::string>& kv) {
  const RunConfig cfg = parse_or_fail(kv, {{"model", ""},
                                           {"env", "umaze"},
                                           {"tasks", "50"},
                                           {"budget", "25"},
                                           {"gd_steps", "100"},
                                           {"gd_lr", "0.01"},
                                           {"seed", "0"},
                                           {"name", "eval-plan"},
                                           {"out_root", "runs"}});
  const std::uint64_t seed = cfg.get_u64("seed");
  const stpl::wm::WorldModel model = stpl::wm::WorldModel::load(require_path(cfg, "model"));
  const auto env = stpl::env::Environment::make(cfg.raw("env"));
  const int n_tasks = cfg.get_int("tasks");
  const int budget = cfg.get_int("budget");

  stpl::plan::GdConfig gd;
  gd.steps = cfg.get_int("gd_steps");
  gd.lr = cfg.get_double("gd_lr");

  const auto t0 = Clock::now();
  std::vector<stpl::plan::EpisodeResult> eps;
  eps.reserve(n_tasks);
  for (int t = 0; t < n_tasks; ++t) {
    const auto task = stpl::env::sample_goal_task(env, derive_seed(seed, t), budget);
    gd.seed = derive_seed(seed, 100000 + t);
    eps.push_back(stpl::plan::run_open_loop(env, model, task, gd));
  }
  const double sec = std::chrono::duration<double>(Clock::now() - t0).count();

  const std::string dir = stpl::runio::make_run_dir(cfg.raw("out_root"), cfg.raw("name"), seed);
  write_episodes_csv((std::filesystem::path(dir) / "episodes.csv").string(), eps);
  stpl::runio::write_manifest(dir, cfg, seed, {"episodes.csv"});
  write_timing(dir, {{"eval-plan", sec}});
  print_episode_summary(eps);
  return 0;
}

int cmd_mpc(const std::vector<std::string>& kv) {
  const RunConfig cfg = parse_or_fail(kv, {{"model", ""},
                                           {"env", "umaze"},
                                           {"tasks", "50"},
                                           {"budget", "25"},
                                           {"horizon", "5"},
                                           {"max_model_steps", "-1"},
                                           {"gd_steps", "100"},
                                           {"gd_lr", "0.01"},
                                           {"gamma", "0.9"},
                                           {"seed", "0"},
                                           {"name", "mpc"},
                                           {"out_root", "runs"}});
  const std::uint64_t seed = cfg.get_u64("seed");
  const stpl::wm::WorldModel model = stpl::wm::WorldModel::load(require_path(cfg, "model"));
  const auto env = stpl::env::Environment::make(cfg.raw("env"));
  const int n_tasks = cfg.get_int("tasks");
  const int budget = cfg.get_int("budget");

  stpl::plan::MpcConfig mpc;
  mpc.gd.steps = cfg.get_int("gd_steps");
  mpc.gd.lr = cfg.get_double("gd_lr");
  mpc.gd.gamma = cfg.get_double("gamma");
  mpc.horizon = cfg.get_int("horizon");
  mpc.max_model_steps = cfg.get_int("max_model_steps");
  if (mpc.max_model_steps < 0) mpc.max_model_steps = budget / model.config().frameskip;

  const auto t0 = Clock::now();
  std::vector<stpl::plan::EpisodeResult> eps;
  eps.reserve(n_tasks);
  for (int t = 0; t < n_tasks; ++t) {
    const auto task = stpl::env::sample_goal_task(env, derive_seed(seed, t), budget);
    mpc.gd.seed = derive_seed(seed, 100000 + t);
    eps.push_back(stpl::plan::run_mpc(env, model, task, mpc));
  }
  const double sec = std::chrono::duration<double>(Clock::now() - t0).count();

  const std::string dir = stpl::runio::make_run_dir(cfg.raw("out_root"), cfg.raw("name"), seed);
  write_episodes_csv((std::filesystem::path(dir) / "episodes.csv").string(), eps);
  stpl::runio::write_manifest(dir, cfg, seed, {"episodes.csv"});
  write_timing(dir, {{"mpc", sec}});
  print_episode_summary(eps);
  return 0;
}

int cmd_analyze_linear(const std::vector<std::string>& kv) {
  const RunConfig cfg = parse_or_fail(kv, {{"d", "4"},
                                           {"eps", "0.25"},
                                           {"horizon", "5"},
                                           {"b_noise", "0.1"},
                                           {"seed", "0"},
                                           {"name", "analyze-linear"},
                                           {"out_root", "runs"}});
  const std::uint64_t seed = cfg.get_u64("seed");
  const int d = cfg.get_int("d");

  Rng rng(seed);
  stpl::lin::LinearSystem sys;
  sys.A = stpl::lin::random_eps_straight(d, cfg.get_double("eps"), rng);
  sys.B = stpl::lin::Matrix::identity(d) +
          stpl::lin::random_gaussian(d, d, rng, cfg.get_double("b_noise"));
  sys.K = cfg.get_int("horizon");
  sys.z0.assign(d, 0.0);
  const stpl::lin::ConditioningReport rep = stpl::lin::analyze(sys);

  const std::string dir = stpl::runio::make_run_dir(cfg.raw("out_root"), cfg.raw("name"), seed);
  {
    std::ofstream out(std::filesystem::path(dir) / "report.csv");
    out << "eps,kappa_a,kappa_b,keff,hessian_keff,lemma_ok,gram_jac_err,"
           "bound_ratio,bound_power,bound_eps,bound_exp,weyl_ok,rank_wk\n";
    auto opt = [&](const std::optional<double>& v) { return v ? fmt(*v) : std::string("nan"); };
    out << fmt(rep.eps) << "," << fmt(rep.kappa_a) << "," << fmt(rep.kappa_b) << ","
        << fmt(rep.keff) << "," << fmt(rep.hessian_keff) << "," << rep.lemma_ok << ","
        << fmt(rep.gram_jac_err) << "," << opt(rep.bound_ratio) << "," << opt(rep.bound_power)
        << "," << opt(rep.bound_eps) << "," << opt(rep.bound_exp) << "," << rep.weyl_ok << ","
        << rep.rank_wk << "\n";
  }
  stpl::runio::write_manifest(dir, cfg, seed, {"report.csv"});
  std::cout << "eps=" << fmt(rep.eps) << " keff=" << fmt(rep.keff)
            << " bound_eps=" << (rep.bound_eps ? fmt(*rep.bound_eps) : "nan")
            << " bound_exp=" << (rep.bound_exp ? fmt(*rep.bound_exp) : "nan")
            << " lemma_ok=" << rep.lemma_ok << " weyl_ok=" << rep.weyl_ok << "\n";
  return 0;
}

int cmd_sweep_theorem(const std::vector<std::string>& kv) {
  const RunConfig cfg = parse_or_fail(kv, {{"draws", "1000"},
                                           {"d", "4"},
                                           {"eps", "0.1,0.25,0.4"},
                                           {"horizons", "2,5,10"},
                                           {"b_noise", "0.1"},
                                           {"seed", "0"},
                                           {"name", "sweep-theorem"},
                                           {"out_root", "runs"}});
  const std::uint64_t seed = cfg.get_u64("seed");

  const auto t0 = Clock::now();
  const auto rows = stpl::lin::theorem_sweep(cfg.get_int("draws"), cfg.get_int("d"),
                                             cfg.get_doubles("eps"), cfg.get_ints("horizons"),
                                             cfg.get_double("b_noise"), seed);
  const double sec = std::chrono::duration<double>(Clock::now() - t0).count();

  const std::string dir = stpl::runio::make_run_dir(cfg.raw("out_root"), cfg.raw("name"), seed);
  int ok = 0;
  {
    std::ofstream out(std::filesystem::path(dir) / "sweep.csv");
    out << "draw,eps,horizon,keff,bound_eps,bound_exp,eps_holds,exp_holds,"
           "gram_jac_err,lemma_ok,weyl_ok\n";
    for (const auto& r : rows) {
      out << r.draw << "," << fmt(r.eps) << "," << r.horizon << "," << fmt(r.keff) << ","
          << fmt(r.bound_eps) << "," << fmt(r.bound_exp) << "," << r.eps_holds << ","
          << r.exp_holds << "," << fmt(r.gram_jac_err) << "," << r.lemma_ok << "," << r.weyl_ok
          << "\n";
      if (r.eps_holds && r.exp_holds && r.lemma_ok && r.weyl_ok) ++ok;
    }
  }
  stpl::runio::write_manifest(dir, cfg, seed, {"sweep.csv"});
  write_timing(dir, {{"sweep-theorem", sec}});
  std::cout << "draws=" << rows.size() << " all_bounds_hold="
            << fmt(static_cast<double>(ok) / static_cast<double>(rows.size())) << "\n";
  return 0;
}

int cmd_heatmap(const std::vector<std::string>& kv) {
  const RunConfig cfg = parse_or_fail(kv, {{"model", ""},
                                           {"env", "umaze"},
                                           {"goal_r", "1"},
                                           {"goal_c", "1"},
                                           {"pooled", "1"},
                                           {"seed", "0"},
                                           {"name", "heatmap"},
                                           {"out_root", "runs"}});
  const std::uint64_t seed = cfg.get_u64("seed");
  const stpl::wm::WorldModel model = stpl::wm::WorldModel::load(require_path(cfg, "model"));
  const auto env = stpl::env::Environment::make(cfg.raw("env"));
  const int gr = cfg.get_int("goal_r"), gc = cfg.get_int("goal_c");

  const stpl::diag::Grid latent =
      stpl::diag::latent_heatmap(model, env, gr, gc, cfg.get_bool("pooled"));
  const stpl::diag::Grid geo = stpl::diag::geodesic_map(env.layout(), gr, gc);
  const stpl::diag::Agreement agr = stpl::diag::heatmap_agreement(latent, geo);

  const std::string dir = stpl::runio::make_run_dir(cfg.raw("out_root"), cfg.raw("name"), seed);
  const std::filesystem::path p(dir);
  stpl::diag::write_grid_csv(latent, (p / "latent.csv").string());
  stpl::diag::write_pgm(latent, (p / "latent.pgm").string());
  stpl::diag::write_grid_csv(geo, (p / "geodesic.csv").string());
  stpl::diag::write_pgm(geo, (p / "geodesic.pgm").string());
  {
    std::ofstream out(p / "agreement.csv");
    out << "spearman,pearson,n\n"
        << fmt(agr.spearman) << "," << fmt(agr.pearson) << "," << agr.n << "\n";
  }
  stpl::runio::write_manifest(
      dir, cfg, seed, {"latent.csv", "latent.pgm", "geodesic.csv", "geodesic.pgm", "agreement.csv"});
  std::cout << "spearman=" << fmt(agr.spearman) << " pearson=" << fmt(agr.pearson)
            << " cells=" << agr.n << "\n";
  return 0;
}

int cmd_pca(const std::vector<std::string>& kv) {
  const RunConfig cfg = parse_or_fail(kv, {{"model", ""},
                                           {"data", ""},
                                           {"max_traj", "10"},
                                           {"seed", "0"},
                                           {"name", "pca"},
                                           {"out_root", "runs"}});
  const std::uint64_t seed = cfg.get_u64("seed");
  const stpl::wm::WorldModel model = stpl::wm::WorldModel::load(require_path(cfg, "model"));
  const stpl::env::Dataset ds = stpl::env::load_dataset(require_path(cfg, "data"));
  const auto env = stpl::env::Environment::make(ds.env_name);
  const int f = model.config().frameskip;
  if (ds.frameskip != f)
    throw std::invalid_argument("dataset frameskip does not match the model");

  const int n_traj = std::min<int>(cfg.get_int("max_traj"),
                                   static_cast<int>(ds.trajectories.size()));
  std::vector<std::vector<double>> pts;
  std::vector<std::pair<int, int>> origin;  // (traj, frameskipped step)
  for (int tr = 0; tr < n_traj; ++tr) {
    const auto& traj = ds.trajectories[tr];
    const int frames = static_cast<int>(traj.states.size() - 1) / f + 1;
    for (int g = 0; g < frames; ++g) {
      pts.push_back(
          model.encode(env.render(traj.states[static_cast<std::size_t>(g) * f]).image)
              ->value.vec());
      origin.emplace_back(tr, g);
    }
  }
  const stpl::diag::PcaResult res = stpl::diag::pca_project(pts);

  const std::string dir = stpl::runio::make_run_dir(cfg.raw("out_root"), cfg.raw("name"), seed);
  {
    std::ofstream out(std::filesystem::path(dir) / "pca.csv");
    out << "traj,step,p1,p2\n";
    for (std::size_t i = 0; i < res.projected.size(); ++i)
      out << origin[i].first << "," << origin[i].second << "," << fmt(res.projected[i][0]) << ","
          << fmt(res.projected[i][1]) << "\n";
  }
  {
    std::ofstream out(std::filesystem::path(dir) / "explained.csv");
    out << "axis,fraction\n0," << fmt(res.explained[0]) << "\n1," << fmt(res.explained[1]) << "\n";
  }
  stpl::runio::write_manifest(dir, cfg, seed, {"pca.csv", "explained.csv"});
  std::cout << "points=" << res.projected.size() << " explained_1=" << fmt(res.explained[0])
            << " explained_2=" << fmt(res.explained[1]) << "\n";
  return 0;
}

int cmd_curvature(const std::vector<std::string>& kv) {
  const RunConfig cfg = parse_or_fail(kv, {{"model", ""},
                                           {"data", ""},
                                           {"variant", "agg"},
                                           {"max_traj", "10"},
                                           {"seed", "0"},
                                           {"name", "curvature"},
                                           {"out_root", "runs"}});
  const std::uint64_t seed = cfg.get_u64("seed");
  const stpl::wm::WorldModel model = stpl::wm::WorldModel::load(require_path(cfg, "model"));
  const stpl::env::Dataset ds = stpl::env::load_dataset(require_path(cfg, "data"));
  const auto env = stpl::env::Environment::make(ds.env_name);
  if (ds.frameskip != model.config().frameskip)
    throw std::invalid_argument("dataset frameskip does not match the model");
  const stpl::wm::CosVariant variant = stpl::wm::parse_variant(cfg.raw("variant"));

  const int n_traj = std::min<int>(cfg.get_int("max_traj"),
                                   static_cast<int>(ds.trajectories.size()));
  const std::string dir = stpl::runio::make_run_dir(cfg.raw("out_root"), cfg.raw("name"), seed);
  double sum = 0.0;
  int n = 0;
  {
    std::ofstream out(std::filesystem::path(dir) / "curvature.csv");
    out << "traj,step,cosine\n";
    for (int tr = 0; tr < n_traj; ++tr) {
      const auto prof = stpl::diag::curvature_profile(model, env, ds.trajectories[tr],
                                                      ds.frameskip, variant);
      for (std::size_t g = 0; g < prof.size(); ++g) {
        out << tr << "," << g << "," << (std::isnan(prof[g]) ? "nan" : fmt(prof[g])) << "\n";
        if (!std::isnan(prof[g])) {
          sum += prof[g];
          ++n;
        }
      }
    }
  }
  stpl::runio::write_manifest(dir, cfg, seed, {"curvature.csv"});
  std::cout << "triples=" << n << " mean_cosine=" << fmt(n > 0 ? sum / n : 0.0) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporally straightened latent planning toolkit"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* desc;
    int (*run)(const std::vector<std::string>&);
    std::vector<std::string> kv;
    CLI::App* sc = nullptr;
  };
  std::vector<Sub> subs = {
      {"gen-data", "generate a random-rollout dataset", cmd_gen_data, {}},
      {"train", "train the world model on a dataset", cmd_train, {}},
      {"eval-plan", "open-loop gradient planning over sampled tasks", cmd_eval_plan, {}},
      {"mpc", "closed-loop replanning over sampled tasks", cmd_mpc, {}},
      {"analyze-linear", "conditioning report for one random linear system", cmd_analyze_linear, {}},
      {"sweep-theorem", "randomized conditioning-bound sweep", cmd_sweep_theorem, {}},
      {"heatmap", "latent-distance heatmap vs maze geodesics", cmd_heatmap, {}},
      {"pca", "2-d projection of encoded trajectories", cmd_pca, {}},
      {"curvature", "latent curvature profiles along trajectories", cmd_curvature, {}},
  };
  for (auto& s : subs) {
    s.sc = app.add_subcommand(s.name, s.desc);
    s.sc->add_option("options", s.kv, "key=value options");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& s : subs)
      if (s.sc->parsed()) return s.run(s.kv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
