#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stpl/rng.hpp"
#include "stpl/tensor.hpp"

namespace stpl::env {

constexpr int kImageSide = 32;

/// Grid world parsed from an ASCII map: '#' wall, '.' free, 'T' teleport
/// trigger column. Positions are continuous, in arena units
/// (cell index * cell_size).
struct MazeLayout {
  int rows = 0, cols = 0;
  double cell_size = 1.0;
  std::vector<std::uint8_t> cell;  // 0 free, 1 wall, 2 teleport trigger
  std::string name;

  static MazeLayout parse(const std::string& ascii, double cell_size, std::string name = "");
  /// Built-in layouts: "wall", "umaze", "medium", "teleport".
  static MazeLayout named(const std::string& name);

  std::uint8_t at(int r, int c) const { return cell[static_cast<std::size_t>(r) * cols + c]; }
  bool is_wall(int r, int c) const { return at(r, c) == 1; }
  bool is_free(int r, int c) const { return at(r, c) == 0; }
  double width() const { return cols * cell_size; }
  double height() const { return rows * cell_size; }

  /// Walls block; teleport cells and free cells do not. Out-of-bounds blocks.
  bool blocked_point(double x, double y) const;
  bool has_teleport() const;
  /// x at which a transition triggers the teleport (left edge of the trigger column).
  double teleport_trigger_x() const;
  /// x the agent is reset to (left edge of the leftmost free column).
  double teleport_exit_x() const;
};

struct EnvState {
  double px = 0.0, py = 0.0;  // arena units
  double vx = 0.0, vy = 0.0;  // arena units per step; zero and unused for Wall
};

struct Observation {
  ag::Tensor image;  // {2, 32, 32}: wall occupancy, agent blob
};

struct Trajectory {
  std::vector<EnvState> states;                 // length T+1
  std::vector<std::array<double, 2>> actions;   // length T
};

enum class EnvKind { Wall, PointMaze, Teleport };

class Environment {
 public:
  static Environment make(const std::string& name);  // wall | umaze | medium | teleport

  const MazeLayout& layout() const { return layout_; }
  EnvKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double action_limit() const { return a_max_; }  // per-component bound (inf-norm)
  /// Success radius for goal-reaching: half a maze cell. Wall's rendering
  /// grid is much finer than its navigation scale (the thin wall forces
  /// 0.04 cells), so it uses half of a fifth of the arena instead — the same
  /// fraction of the arena the maze half-cell works out to.
  double success_radius() const { return success_radius_; }

  EnvState step(const EnvState& s, double ax, double ay) const;
  Observation render(const EnvState& s) const;
  EnvState random_free_state(Rng& rng) const;

 private:
  EnvState step_wall(const EnvState& s, double ax, double ay) const;
  EnvState step_pointmaze(const EnvState& s, double ax, double ay) const;

  EnvKind kind_ = EnvKind::Wall;
  MazeLayout layout_;
  std::string name_;
  double a_max_ = 1.0;
  double success_radius_ = 0.5;
  double blob_sigma_ = 1.0;  // agent-blob scale in arena units
  double dt_ = 0.1, mu_ = 0.05, v_max_ = 1.0;  // PointMaze physics (v_max in cells/step)
};

struct Dataset {
  std::string env_name;
  int frameskip = 5;
  std::vector<Trajectory> trajectories;

  int traj_len() const {
    return trajectories.empty() ? 0 : static_cast<int>(trajectories[0].actions.size());
  }
};

/// Random rollouts with i.i.d. uniform actions held for `frameskip` raw steps.
/// States are snapped to f32 after every step so the stored file replays
/// bit-exactly under the stepper.
Dataset generate_dataset(const Environment& env, int n_traj, int traj_len, int frameskip,
                         std::uint64_t seed);

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

struct PlanTask {
  EnvState start;
  EnvState goal;
  Observation start_obs;
  Observation goal_obs;
  int budget_steps = 25;                        // raw environment steps
  std::vector<std::array<double, 2>> goal_actions;  // the recorded rollout reaching the goal
};

/// Goal produced by a recorded random rollout of exactly budget_steps raw steps.
PlanTask sample_goal_task(const Environment& env, std::uint64_t seed, int budget_steps);

/// Round to f32 precision. The volatile store keeps the optimizer from
/// folding the narrowing conversion away when the result feeds a double.
inline float snap_f32(double v) {
  volatile float f = static_cast<float>(v);
  return f;
}

}  // namespace stpl::env
