#include "stpl/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stpl::env {

namespace {

constexpr double kTwoPi = 6.283185307179586;

std::string build_wall_ascii() {
  // Unit-square arena on a 25x25 grid (cell 0.04): vertical wall at x = 0.5,
  // one cell (0.04) wide, door at y in [0.4, 0.6].
  const int n = 25, wall_col = 12;
  std::string s;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const bool border = r == 0 || c == 0 || r == n - 1 || c == n - 1;
      const bool door = r >= 10 && r <= 14;
      s += (border || (c == wall_col && !door)) ? '#' : '.';
    }
    s += '\n';
  }
  return s;
}

const char* kUmazeAscii =
    "#####\n"
    "#...#\n"
    "###.#\n"
    "#...#\n"
    "#####\n";

const char* kMediumAscii =
    "########\n"
    "#..##..#\n"
    "#..#...#\n"
    "##...###\n"
    "#..#...#\n"
    "#.#..#.#\n"
    "#...#..#\n"
    "########\n";

const char* kTeleportAscii =
    "#######\n"
    "#.....T\n"
    "#.....T\n"
    "#.....T\n"
    "#.....T\n"
    "#.....T\n"
    "#######\n";

}  // namespace

MazeLayout MazeLayout::parse(const std::string& ascii, double cell_size, std::string name) {
  MazeLayout l;
  l.cell_size = cell_size;
  l.name = std::move(name);
  std::istringstream in(ascii);
  std::string line;
  std::vector<std::string> grid;
  while (std::getline(in, line)) {
    if (!line.empty()) grid.push_back(line);
  }
  if (grid.empty()) throw std::invalid_argument("layout map is empty");
  l.rows = static_cast<int>(grid.size());
  l.cols = static_cast<int>(grid[0].size());
  l.cell.resize(static_cast<std::size_t>(l.rows) * l.cols);
  bool any_free = false;
  for (int r = 0; r < l.rows; ++r) {
    if (static_cast<int>(grid[r].size()) != l.cols)
      throw std::invalid_argument("layout map rows have unequal length");
    for (int c = 0; c < l.cols; ++c) {
      const char ch = grid[r][c];
      std::uint8_t v;
      if (ch == '#') v = 1;
      else if (ch == '.') v = 0;
      else if (ch == 'T') v = 2;
      else throw std::invalid_argument(std::string("layout map: unknown character '") + ch + "'");
      const bool border = r == 0 || c == 0 || r == l.rows - 1 || c == l.cols - 1;
      if (border && v == 0)
        throw std::invalid_argument("layout map: border cells must be walls or teleport");
      if (v == 0) any_free = true;
      l.cell[static_cast<std::size_t>(r) * l.cols + c] = v;
    }
  }
  if (!any_free) throw std::invalid_argument("layout map has no free cell");
  return l;
}

MazeLayout MazeLayout::named(const std::string& name) {
  if (name == "wall") return parse(build_wall_ascii(), 0.04, "wall");
  if (name == "umaze") return parse(kUmazeAscii, 1.0, "umaze");
  if (name == "medium") return parse(kMediumAscii, 1.0, "medium");
  if (name == "teleport") return parse(kTeleportAscii, 1.0, "teleport");
  throw std::invalid_argument("unknown layout '" + name + "'");
}

bool MazeLayout::blocked_point(double x, double y) const {
  if (x < 0.0 || y < 0.0 || x >= width() || y >= height()) return true;
  const int c = static_cast<int>(x / cell_size);
  const int r = static_cast<int>(y / cell_size);
  return is_wall(r, c);
}

bool MazeLayout::has_teleport() const {
  return std::find(cell.begin(), cell.end(), std::uint8_t{2}) != cell.end();
}

double MazeLayout::teleport_trigger_x() const {
  int min_col = cols;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (at(r, c) == 2) min_col = std::min(min_col, c);
  return min_col * cell_size;
}

double MazeLayout::teleport_exit_x() const {
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r)
      if (is_free(r, c)) return c * cell_size;
  return 0.0;
}

Environment Environment::make(const std::string& name) {
  Environment e;
  e.name_ = name;
  if (name == "wall") {
    e.kind_ = EnvKind::Wall;
    e.layout_ = MazeLayout::named("wall");
    e.a_max_ = 0.05;  // arena units per step
    // Wall's navigation scale is a fifth of the unit arena; the 0.04 layout
    // grid exists only to represent the thin wall. Success radius and blob
    // size follow the navigation scale, as in the mazes.
    e.success_radius_ = 0.1;
    e.blob_sigma_ = 0.2;
  } else if (name == "umaze" || name == "medium") {
    e.kind_ = EnvKind::PointMaze;
    e.layout_ = MazeLayout::named(name);
    e.a_max_ = 1.0;
    e.success_radius_ = 0.5 * e.layout_.cell_size;
    e.blob_sigma_ = e.layout_.cell_size;
  } else if (name == "teleport") {
    e.kind_ = EnvKind::Teleport;
    e.layout_ = MazeLayout::named("teleport");
    e.a_max_ = 1.0;
    e.success_radius_ = 0.5 * e.layout_.cell_size;
    e.blob_sigma_ = e.layout_.cell_size;
  } else {
    throw std::invalid_argument("unknown environment '" + name + "'");
  }
  return e;
}

namespace {

// Sub-sampled segment test: true if any point on (from -> to] is blocked.
bool segment_blocked(const MazeLayout& l, double x0, double y0, double x1, double y1) {
  const double dist = std::hypot(x1 - x0, y1 - y0);
  const int n = std::max(1, static_cast<int>(std::ceil(dist / (0.25 * l.cell_size))));
  for (int k = 1; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    if (l.blocked_point(x0 + t * (x1 - x0), y0 + t * (y1 - y0))) return true;
  }
  return false;
}

}  // namespace

EnvState Environment::step_wall(const EnvState& s, double ax, double ay) const {
  const double dx = std::clamp(ax, -a_max_, a_max_);
  const double dy = std::clamp(ay, -a_max_, a_max_);
  EnvState out = s;
  if (!segment_blocked(layout_, out.px, out.py, out.px + dx, out.py)) out.px += dx;
  if (!segment_blocked(layout_, out.px, out.py, out.px, out.py + dy)) out.py += dy;
  return out;
}

EnvState Environment::step_pointmaze(const EnvState& s, double ax, double ay) const {
  const double fx = std::clamp(ax, -a_max_, a_max_);
  const double fy = std::clamp(ay, -a_max_, a_max_);
  EnvState out = s;
  out.vx = (out.vx + fx * dt_) * (1.0 - mu_);
  out.vy = (out.vy + fy * dt_) * (1.0 - mu_);
  const double vmax = v_max_ * layout_.cell_size;
  const double speed = std::hypot(out.vx, out.vy);
  if (speed > vmax) {
    out.vx *= vmax / speed;
    out.vy *= vmax / speed;
  }
  if (segment_blocked(layout_, out.px, out.py, out.px + out.vx * dt_, out.py)) {
    out.vx = 0.0;
  } else {
    out.px += out.vx * dt_;
  }
  if (segment_blocked(layout_, out.px, out.py, out.px, out.py + out.vy * dt_)) {
    out.vy = 0.0;
  } else {
    out.py += out.vy * dt_;
  }
  return out;
}

EnvState Environment::step(const EnvState& s, double ax, double ay) const {
  if (kind_ == EnvKind::Wall) return step_wall(s, ax, ay);
  EnvState out = step_pointmaze(s, ax, ay);
  if (kind_ == EnvKind::Teleport && out.px > layout_.teleport_trigger_x()) {
    out.px = layout_.teleport_exit_x();
    out.vx = std::abs(out.vx);
  }
  return out;
}

Observation Environment::render(const EnvState& s) const {
  Observation obs;
  obs.image = ag::Tensor({2, kImageSide, kImageSide});
  const double w = layout_.width(), h = layout_.height();
  const double sx = w / kImageSide, sy = h / kImageSide;
  const double sigma = blob_sigma_;
  double* wall = obs.image.data();
  double* blob = obs.image.data() + kImageSide * kImageSide;

  double blob_sum = 0.0;
  for (int i = 0; i < kImageSide; ++i) {
    const double cy = (i + 0.5) * sy;
    for (int j = 0; j < kImageSide; ++j) {
      const double cx = (j + 0.5) * sx;
      const int c = static_cast<int>(cx / layout_.cell_size);
      const int r = static_cast<int>(cy / layout_.cell_size);
      wall[i * kImageSide + j] = layout_.at(r, c) != 0 ? 1.0 : 0.0;
      const double dx = cx - s.px, dy = cy - s.py;
      const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      blob[i * kImageSide + j] = g;
      blob_sum += g;
    }
  }
  // Fixed total blob mass; 0.7 of the open-space nominal keeps the peak below 1
  // even when the blob is truncated at the arena border.
  const double nominal = 0.7 * kTwoPi * sigma * sigma / (sx * sy);
  const double scale = nominal / blob_sum;
  for (int k = 0; k < kImageSide * kImageSide; ++k) blob[k] *= scale;
  return obs;
}

EnvState Environment::random_free_state(Rng& rng) const {
  for (int tries = 0; tries < 100000; ++tries) {
    EnvState s;
    s.px = snap_f32(rng.uniform(0.0, layout_.width()));
    s.py = snap_f32(rng.uniform(0.0, layout_.height()));
    if (!layout_.blocked_point(s.px, s.py) &&
        (!layout_.has_teleport() || s.px <= layout_.teleport_trigger_x()))
      return s;
  }
  throw std::runtime_error("random_free_state: no free cell found");
}

namespace {

EnvState snap_state(const EnvState& s) {
  return {snap_f32(s.px), snap_f32(s.py), snap_f32(s.vx), snap_f32(s.vy)};
}

}  // namespace

Dataset generate_dataset(const Environment& env, int n_traj, int traj_len, int frameskip,
                         std::uint64_t seed) {
  if (n_traj <= 0 || traj_len <= 0 || frameskip <= 0)
    throw std::invalid_argument("generate_dataset: counts must be positive");
  Dataset ds;
  ds.env_name = env.name();
  ds.frameskip = frameskip;
  ds.trajectories.resize(n_traj);
  const double a = env.action_limit();
  for (int i = 0; i < n_traj; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    Trajectory& tr = ds.trajectories[i];
    tr.states.reserve(traj_len + 1);
    tr.actions.reserve(traj_len);
    tr.states.push_back(env.random_free_state(rng));
    std::array<double, 2> act{0.0, 0.0};
    for (int t = 0; t < traj_len; ++t) {
      if (t % frameskip == 0) {
        act[0] = snap_f32(rng.uniform(-a, a));
        act[1] = snap_f32(rng.uniform(-a, a));
      }
      tr.actions.push_back(act);
      tr.states.push_back(snap_state(env.step(tr.states.back(), act[0], act[1])));
    }
  }
  return ds;
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

void write_f32(std::ostream& out, double v) {
  const float f = snap_f32(v);
  out.write(reinterpret_cast<const char*>(&f), 4);
}

double read_f32(std::istream& in) {
  float f = 0.0f;
  in.read(reinterpret_cast<char*>(&f), 4);
  return static_cast<double>(f);
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open dataset file for writing: " + path);
  out.write("STPL", 4);
  write_u32(out, 1);  // version
  write_u32(out, static_cast<std::uint32_t>(ds.trajectories.size()));
  write_u32(out, static_cast<std::uint32_t>(ds.traj_len()));
  write_u32(out, 2);
  write_u32(out, kImageSide);
  write_u32(out, kImageSide);
  write_u32(out, 2);  // action dim
  write_u32(out, static_cast<std::uint32_t>(ds.frameskip));
  write_u32(out, static_cast<std::uint32_t>(ds.env_name.size()));
  out.write(ds.env_name.data(), static_cast<std::streamsize>(ds.env_name.size()));
  for (const auto& tr : ds.trajectories) {
    for (const auto& s : tr.states) {
      write_f32(out, s.px);
      write_f32(out, s.py);
      write_f32(out, s.vx);
      write_f32(out, s.vy);
    }
    for (const auto& a : tr.actions) {
      write_f32(out, a[0]);
      write_f32(out, a[1]);
    }
  }
  if (!out) throw std::runtime_error("failed while writing dataset: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "STPL", 4) != 0)
    throw std::runtime_error("not a dataset file (bad magic): " + path);
  const std::uint32_t version = read_u32(in);
  if (version != 1) throw std::runtime_error("unsupported dataset version");
  const std::uint32_t n_traj = read_u32(in);
  const std::uint32_t traj_len = read_u32(in);
  for (int k = 0; k < 3; ++k) read_u32(in);  // obs shape, fixed at 2x32x32
  read_u32(in);                              // action dim
  Dataset ds;
  ds.frameskip = static_cast<int>(read_u32(in));
  const std::uint32_t name_len = read_u32(in);
  ds.env_name.resize(name_len);
  in.read(ds.env_name.data(), name_len);
  ds.trajectories.resize(n_traj);
  for (auto& tr : ds.trajectories) {
    tr.states.resize(traj_len + 1);
    tr.actions.resize(traj_len);
    for (auto& s : tr.states) {
      s.px = read_f32(in);
      s.py = read_f32(in);
      s.vx = read_f32(in);
      s.vy = read_f32(in);
    }
    for (auto& a : tr.actions) {
      a[0] = read_f32(in);
      a[1] = read_f32(in);
    }
  }
  if (!in) throw std::runtime_error("dataset file truncated: " + path);
  return ds;
}

PlanTask sample_goal_task(const Environment& env, std::uint64_t seed, int budget_steps) {
  if (budget_steps != 25 && budget_steps != 50)
    throw std::invalid_argument("sample_goal_task: budget must be 25 or 50 raw steps");
  Rng rng(seed);
  PlanTask task;
  task.budget_steps = budget_steps;
  task.start = env.random_free_state(rng);
  const double a = env.action_limit();
  EnvState s = task.start;
  std::array<double, 2> act{0.0, 0.0};
  constexpr int kFrameskip = 5;
  for (int t = 0; t < budget_steps; ++t) {
    if (t % kFrameskip == 0) {
      act[0] = snap_f32(rng.uniform(-a, a));
      act[1] = snap_f32(rng.uniform(-a, a));
    }
    task.goal_actions.push_back(act);
    s = snap_state(env.step(s, act[0], act[1]));
  }
  task.goal = s;
  task.start_obs = env.render(task.start);
  task.goal_obs = env.render(task.goal);
  return task;
}

}  // namespace stpl::env
