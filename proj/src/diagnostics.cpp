#include "stpl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>

#include "stpl/linalg.hpp"

namespace stpl::diag {

namespace {

struct Edge {
  int to;
  double w;
};

constexpr double kSqrt2 = 1.4142135623730951;

}  // namespace

Grid geodesic_map(const env::MazeLayout& l, int goal_r, int goal_c, bool diag8,
                  bool use_teleport) {
  if (goal_r < 0 || goal_r >= l.rows || goal_c < 0 || goal_c >= l.cols || !l.is_free(goal_r, goal_c))
    throw std::invalid_argument("geodesic_map: goal must be a free cell");
  const int n = l.rows * l.cols;
  auto id = [&](int r, int c) { return r * l.cols + c; };
  auto free_cell = [&](int r, int c) {
    return r >= 0 && r < l.rows && c >= 0 && c < l.cols && l.is_free(r, c);
  };

  // Reversed move graph: rev[v] holds (u, w) for every forward move u -> v.
  std::vector<std::vector<Edge>> rev(n);
  for (int r = 0; r < l.rows; ++r)
    for (int c = 0; c < l.cols; ++c) {
      if (!l.is_free(r, c)) continue;
      const int dr4[] = {-1, 1, 0, 0}, dc4[] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k)
        if (free_cell(r + dr4[k], c + dc4[k]))
          rev[id(r + dr4[k], c + dc4[k])].push_back({id(r, c), 1.0});
      if (diag8) {
        const int drd[] = {-1, -1, 1, 1}, dcd[] = {-1, 1, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int rr = r + drd[k], cc = c + dcd[k];
          // no corner cutting: both orthogonal neighbors must be free
          if (free_cell(rr, cc) && free_cell(r, cc) && free_cell(rr, c))
            rev[id(rr, cc)].push_back({id(r, c), kSqrt2});
        }
      }
    }
  if (use_teleport && l.has_teleport()) {
    const int trig_c = static_cast<int>(l.teleport_trigger_x() / l.cell_size);
    const int exit_c = static_cast<int>(l.teleport_exit_x() / l.cell_size);
    for (int r = 0; r < l.rows; ++r)
      if (l.at(r, trig_c) == 2 && free_cell(r, trig_c - 1) && free_cell(r, exit_c))
        rev[id(r, exit_c)].push_back({id(r, trig_c - 1), 1.0});  // one-way wrap
  }

  Grid g(l.rows, l.cols);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  g.v[id(goal_r, goal_c)] = 0.0;
  pq.push({0.0, id(goal_r, goal_c)});
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > g.v[u]) continue;
    for (const Edge& e : rev[u])
      if (d + e.w < g.v[e.to]) {
        g.v[e.to] = d + e.w;
        pq.push({g.v[e.to], e.to});
      }
  }
  return g;
}

namespace {

std::vector<double> probe_latent(const wm::WorldModel& model, const env::Environment& e, int r,
                                 int c, bool pooled) {
  env::EnvState s;
  s.px = (c + 0.5) * e.layout().cell_size;
  s.py = (r + 0.5) * e.layout().cell_size;
  const ag::Var z = model.encode(e.render(s).image);
  // copy: the pooled node is a temporary that dies with this expression
  const ag::Tensor out = pooled ? model.pool(z)->value : z->value;
  return out.vec();
}

}  // namespace

Grid latent_heatmap(const wm::WorldModel& model, const env::Environment& e, int goal_r,
                    int goal_c, bool pooled) {
  const auto& l = e.layout();
  if (!l.is_free(goal_r, goal_c))
    throw std::invalid_argument("latent_heatmap: goal must be a free cell");
  const std::vector<double> zg = probe_latent(model, e, goal_r, goal_c, pooled);
  Grid g(l.rows, l.cols);
  for (int r = 0; r < l.rows; ++r)
    for (int c = 0; c < l.cols; ++c) {
      if (!l.is_free(r, c)) continue;
      const std::vector<double> z = probe_latent(model, e, r, c, pooled);
      double d2 = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) d2 += (z[i] - zg[i]) * (z[i] - zg[i]);
      g.at(r, c) = std::sqrt(d2);
    }
  return g;
}

namespace {

std::vector<double> ranks_with_ties(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return x[a] < x[b]; });
  std::vector<double> rank(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  return rank;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (int i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

Agreement heatmap_agreement(const Grid& a, const Grid& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("heatmap_agreement: grid shapes differ");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < a.v.size(); ++i)
    if (std::isfinite(a.v[i]) && std::isfinite(b.v[i])) {
      xs.push_back(a.v[i]);
      ys.push_back(b.v[i]);
    }
  Agreement out;
  out.n = static_cast<int>(xs.size());
  if (out.n < 2) return out;
  out.pearson = pearson(xs, ys);
  out.spearman = pearson(ranks_with_ties(xs), ranks_with_ties(ys));
  return out;
}

std::vector<double> curvature_profile(const wm::WorldModel& model, const env::Environment& e,
                                      const env::Trajectory& tr, int frameskip,
                                      wm::CosVariant variant) {
  const int frames = static_cast<int>(tr.states.size() - 1) / frameskip + 1;
  std::vector<ag::Var> z;
  z.reserve(frames);
  for (int g = 0; g < frames; ++g)
    z.push_back(model.encode(e.render(tr.states[static_cast<std::size_t>(g) * frameskip]).image));
  std::vector<double> out;
  for (int g = 0; g + 2 < frames; ++g) {
    try {
      out.push_back(straightening_cosine(model, z[g], z[g + 1], z[g + 2], variant)->value.item());
    } catch (const ag::DegenerateVelocity&) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

std::vector<double> curvature_profile(const std::vector<std::vector<double>>& latents) {
  std::vector<double> out;
  for (std::size_t t = 0; t + 2 < latents.size(); ++t) {
    const std::size_t d = latents[t].size();
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double v1 = latents[t + 1][i] - latents[t][i];
      const double v2 = latents[t + 2][i] - latents[t + 1][i];
      dot += v1 * v2;
      n1 += v1 * v1;
      n2 += v2 * v2;
    }
    out.push_back(n1 < 1e-24 || n2 < 1e-24 ? std::numeric_limits<double>::quiet_NaN()
                                           : dot / std::sqrt(n1 * n2));
  }
  return out;
}

PcaResult pca_project(const std::vector<std::vector<double>>& points) {
  if (points.size() < 2) throw std::invalid_argument("pca_project: need at least 2 points");
  const int n = static_cast<int>(points.size());
  const int d = static_cast<int>(points[0].size());
  if (d < 2) throw std::invalid_argument("pca_project: need dimension >= 2");
  std::vector<double> mean(d, 0.0);
  for (const auto& p : points)
    for (int i = 0; i < d; ++i) mean[i] += p[i] / n;
  lin::Matrix cov(d, d);
  for (const auto& p : points)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) cov(i, j) += (p[i] - mean[i]) * (p[j] - mean[j]) / (n - 1);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) cov(i, j) = cov(j, i);

  const auto eig = lin::sym_eig(cov);
  double total = 0.0;
  for (double l : eig.values) total += std::max(l, 0.0);

  PcaResult out;
  std::vector<std::vector<double>> axes(2, std::vector<double>(d));
  for (int k = 0; k < 2; ++k) {
    int arg = 0;
    for (int i = 0; i < d; ++i)
      if (std::abs(eig.vectors(i, k)) > std::abs(eig.vectors(arg, k))) arg = i;
    const double sign = eig.vectors(arg, k) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < d; ++i) axes[k][i] = sign * eig.vectors(i, k);
    out.explained[k] = total > 0.0 ? std::max(eig.values[k], 0.0) / total : 0.0;
  }
  out.projected.reserve(points.size());
  for (const auto& p : points) {
    std::array<double, 2> q{0.0, 0.0};
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < d; ++i) q[k] += (p[i] - mean[i]) * axes[k][i];
    out.projected.push_back(q);
  }
  return out;
}

double monotone_fraction(const std::vector<double>& trace) {
  if (trace.size() < 2) return 1.0;
  int ok = 0;
  for (std::size_t i = 0; i + 1 < trace.size(); ++i)
    if (trace[i + 1] <= trace[i] + 1e-12) ++ok;
  return static_cast<double>(ok) / static_cast<double>(trace.size() - 1);
}

void write_pgm(const Grid& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open PGM for writing: " + path);
  double lo = kUnreachable, hi = -kUnreachable;
  for (double v : g.v)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double span = hi > lo ? hi - lo : 1.0;
  out << "P5\n" << g.cols << " " << g.rows << "\n255\n";
  for (double v : g.v) {
    const unsigned char px =
        std::isfinite(v) ? static_cast<unsigned char>(55 + 200.0 * (1.0 - (v - lo) / span)) : 0;
    out.put(static_cast<char>(px));
  }
}

void write_grid_csv(const Grid& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open CSV for writing: " + path);
  char buf[64];
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (std::isfinite(g.at(r, c))) {
        std::snprintf(buf, sizeof(buf), "%.17g", g.at(r, c));
        out << buf;
      } else {
        out << "inf";
      }
      out << (c + 1 < g.cols ? ',' : '\n');
    }
  }
}

}  // namespace stpl::diag
