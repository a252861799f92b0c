#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "stpl/env.hpp"
#include "stpl/world_model.hpp"

namespace stpl::diag {

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Per-cell scalar field over a maze grid; walls and unreachable cells carry
/// +infinity.
struct Grid {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Grid() = default;
  Grid(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, kUnreachable) {}
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

/// Shortest-path distance from every free cell to the goal cell, in cell
/// units. 8-connected with sqrt(2) diagonals (no corner cutting) by default.
/// Teleport layouts add the one-way wrap edge, so the straight-line heuristic
/// is inadmissible; distances come from a zero-heuristic (Dijkstra) search on
/// the reversed move graph. `use_teleport` off treats trigger cells as walls.
Grid geodesic_map(const env::MazeLayout& l, int goal_r, int goal_c, bool diag8 = true,
                  bool use_teleport = true);

/// ||latent(cell) - latent(goal cell)|| for every free cell, probing the
/// encoder at cell centers with zero velocity. `pooled` routes flattened
/// latents through the aggregation head first.
Grid latent_heatmap(const wm::WorldModel& model, const env::Environment& e, int goal_r,
                    int goal_c, bool pooled);

struct Agreement {
  double spearman = 0.0;
  double pearson = 0.0;
  int n = 0;  // cells finite in both grids
};

/// Rank and linear correlation over cells finite in both grids (ties get
/// average ranks).
Agreement heatmap_agreement(const Grid& a, const Grid& b);

/// Consecutive-velocity cosines along an encoded trajectory (frameskipped
/// frames), one value per interior frame.
std::vector<double> curvature_profile(const wm::WorldModel& model, const env::Environment& e,
                                      const env::Trajectory& tr, int frameskip,
                                      wm::CosVariant variant);

/// Same profile on a raw latent sequence (identity-encoder tests).
std::vector<double> curvature_profile(const std::vector<std::vector<double>>& latents);

struct PcaResult {
  std::vector<std::array<double, 2>> projected;
  double explained[2] = {0.0, 0.0};  // variance fractions of the two axes
};

/// Top-2 principal components of mean-centered points. Sign convention: the
/// largest-magnitude loading of each axis is positive.
PcaResult pca_project(const std::vector<std::vector<double>>& points);

/// Fraction of consecutive steps in which the trace does not increase.
double monotone_fraction(const std::vector<double>& trace);

/// 8-bit PGM of a grid; finite values are min-max normalized, +inf maps to 0.
void write_pgm(const Grid& g, const std::string& path);

void write_grid_csv(const Grid& g, const std::string& path);

}  // namespace stpl::diag
