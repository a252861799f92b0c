#include "stpl/linear_analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace stpl::lin {

Matrix rollout_jacobian(const LinearSystem& sys) {
  if (sys.K < 1) throw std::invalid_argument("rollout_jacobian: K must be >= 1");
  const int d = sys.A.rows();
  const int da = sys.B.cols();
  Matrix j(d, sys.K * da);
  Matrix block = sys.B;  // A^{K-1-t} B, filled right to left
  for (int t = sys.K - 1; t >= 0; --t) {
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < da; ++c) j(r, t * da + c) = block(r, c);
    if (t > 0) block = sys.A * block;
  }
  return j;
}

Matrix gramian(const LinearSystem& sys) {
  if (sys.K < 1) throw std::invalid_argument("gramian: K must be >= 1");
  const int d = sys.A.rows();
  Matrix w(d, d);
  Matrix akb = sys.B;  // A^k B
  for (int k = 0; k < sys.K; ++k) {
    const Matrix term = akb * akb.transpose();
    w = w + term;
    if (k + 1 < sys.K) akb = sys.A * akb;
  }
  // symmetrize rounding noise
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double m = 0.5 * (w(i, j) + w(j, i));
      w(i, j) = m;
      w(j, i) = m;
    }
  return w;
}

double effective_condition(const Matrix& psd, double rank_tol_factor) {
  const auto eig = sym_eig(psd);
  const double lmax = eig.values.front();
  if (lmax <= 0.0) throw std::invalid_argument("effective_condition: matrix is zero or indefinite");
  const double cutoff = rank_tol_factor * lmax;
  double lmin_pos = lmax;
  for (double l : eig.values)
    if (l > cutoff) lmin_pos = l;
  return lmax / lmin_pos;
}

int numeric_rank(const Matrix& psd, double rank_tol_factor) {
  const auto eig = sym_eig(psd);
  const double cutoff = rank_tol_factor * std::max(eig.values.front(), 0.0);
  int r = 0;
  for (double l : eig.values)
    if (l > cutoff && cutoff > 0.0) ++r;
  return r;
}

ConditioningReport analyze(const LinearSystem& sys) {
  const int d = sys.A.rows();
  const int da = sys.B.cols();
  ConditioningReport rep;

  rep.eps = spectral_norm(sys.A - Matrix::identity(d));
  rep.kappa_a = condition_number(sys.A);
  rep.kappa_b = condition_number(sys.B);

  const Matrix j = rollout_jacobian(sys);
  const Matrix w = gramian(sys);
  const Matrix jjt = j * j.transpose();
  rep.gram_jac_err = (w - jjt).max_abs_offdiag();
  for (int i = 0; i < d; ++i)
    rep.gram_jac_err = std::max(rep.gram_jac_err, std::abs(w(i, i) - jjt(i, i)));

  rep.keff = effective_condition(w);
  const Matrix h = (j.transpose() * j).scaled(2.0);
  rep.hessian_keff = effective_condition(h);
  rep.lemma_ok = std::abs(rep.hessian_keff - rep.keff) <= 1e-8 * rep.keff;

  rep.rank_wk = numeric_rank(w);
  rep.controllable_dim = rep.rank_wk;

  const double smax_a = spectral_norm(sys.A);
  const double smin_a = smallest_singular_value(sys.A);
  rep.weyl_ok = smax_a <= 1.0 + rep.eps + 1e-12 && smin_a >= 1.0 - rep.eps - 1e-12;

  const bool b_invertible = da == d && std::isfinite(rep.kappa_b);
  const double kb2 = rep.kappa_b * rep.kappa_b;
  if (b_invertible) {
    double num = 0.0, den = 0.0, pmax = 1.0, pmin = 1.0;
    for (int k = 0; k < sys.K; ++k) {
      num += pmax;
      den += pmin;
      pmax *= smax_a * smax_a;
      pmin *= smin_a * smin_a;
    }
    rep.bound_ratio = kb2 * num / den;
    rep.bound_power = kb2 * std::pow(rep.kappa_a, 2.0 * (sys.K - 1));
    rep.ratio_holds = rep.keff <= *rep.bound_ratio * (1.0 + 1e-10);
    rep.power_holds = rep.keff <= *rep.bound_power * (1.0 + 1e-10);
    if (rep.eps < 1.0) {
      rep.bound_eps = kb2 * std::pow((1.0 + rep.eps) / (1.0 - rep.eps), 2.0 * (sys.K - 1));
      rep.eps_holds = rep.keff <= *rep.bound_eps * (1.0 + 1e-10);
    }
    if (rep.eps <= 0.5) {
      rep.bound_exp = kb2 * std::exp(6.0 * rep.eps * sys.K);
      rep.exp_holds = rep.keff <= *rep.bound_exp * (1.0 + 1e-10);
    }
  }
  return rep;
}

std::vector<std::vector<double>> simulate(const LinearSystem& sys,
                                          const std::vector<std::vector<double>>& actions) {
  std::vector<std::vector<double>> states;
  states.push_back(sys.z0);
  for (const auto& a : actions) {
    std::vector<double> z = sys.A.apply(states.back());
    const std::vector<double> ba = sys.B.apply(a);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += ba[i];
    states.push_back(std::move(z));
  }
  return states;
}

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

ProxyReport cosine_proxy_check(const LinearSystem& sys,
                               const std::vector<std::vector<double>>& states,
                               const std::vector<std::vector<double>>& actions) {
  if (states.size() < 3) throw std::invalid_argument("cosine_proxy_check: need >= 3 states");
  const int d = sys.A.rows();
  const std::size_t n_vel = states.size() - 1;

  std::vector<std::vector<double>> vel(n_vel, std::vector<double>(d));
  std::vector<double> speed(n_vel);
  for (std::size_t t = 0; t < n_vel; ++t) {
    for (int i = 0; i < d; ++i) vel[t][i] = states[t + 1][i] - states[t][i];
    speed[t] = norm2(vel[t]);
    if (speed[t] < 1e-12)
      throw std::invalid_argument("cosine_proxy_check: zero latent velocity at step " +
                                  std::to_string(t));
  }

  ProxyReport rep;
  double smin = speed[0], smax = speed[0];
  for (double s : speed) {
    smin = std::min(smin, s);
    smax = std::max(smax, s);
  }
  rep.constant_speed = (smax - smin) <= 1e-9 * smax;
  rep.speed_c = rep.constant_speed ? speed[0] : smin;
  if (!rep.constant_speed)
    rep.note = "constant-speed assumption relaxed; using c = min_t ||v_t||";

  rep.delta_a = 0.0;
  for (std::size_t t = 0; t + 1 < actions.size(); ++t) {
    std::vector<double> da(actions[t].size());
    for (std::size_t i = 0; i < da.size(); ++i) da[i] = actions[t + 1][i] - actions[t][i];
    rep.delta_a = std::max(rep.delta_a, norm2(da));
  }
  const double smax_b = spectral_norm(sys.B);
  const Matrix a_minus_i = sys.A - Matrix::identity(d);

  double sum_cos = 0.0, sum_lhs = 0.0;
  for (std::size_t t = 0; t + 1 < n_vel; ++t) {
    double dot = 0.0;
    for (int i = 0; i < d; ++i) dot += vel[t][i] * vel[t + 1][i];
    ProxyStep step;
    step.cosine = dot / (speed[t] * speed[t + 1]);
    step.lhs = norm2(a_minus_i.apply(vel[t])) / speed[t];
    step.rhs = std::sqrt(std::max(2.0 * (1.0 - step.cosine), 0.0)) +
               smax_b * rep.delta_a / rep.speed_c;
    step.holds = step.lhs <= step.rhs + 1e-9;
    sum_cos += step.cosine;
    sum_lhs += step.lhs;
    rep.steps.push_back(step);
  }
  const double m = static_cast<double>(rep.steps.size());
  rep.mean_cosine = sum_cos / m;
  rep.mean_lhs = sum_lhs / m;
  const double eta = std::max(1.0 - rep.mean_cosine, 0.0);
  rep.mean_rhs = std::sqrt(2.0 * eta) + smax_b * rep.delta_a / rep.speed_c;
  rep.mean_holds = rep.mean_lhs <= rep.mean_rhs + 1e-9;
  return rep;
}

std::vector<SweepRow> theorem_sweep(int n_draws, int d, const std::vector<double>& eps_values,
                                    const std::vector<int>& horizons, double b_noise,
                                    std::uint64_t seed) {
  std::vector<SweepRow> rows;
  rows.reserve(n_draws);
  for (int i = 0; i < n_draws; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    LinearSystem sys;
    const double eps = eps_values[i % eps_values.size()];
    sys.K = horizons[(i / eps_values.size()) % horizons.size()];
    sys.A = random_eps_straight(d, eps, rng);
    sys.B = Matrix::identity(d) + random_gaussian(d, d, rng, b_noise);
    sys.z0.assign(d, 0.0);
    const ConditioningReport rep = analyze(sys);
    rows.push_back({i, eps, sys.K, rep.keff, rep.bound_eps.value_or(-1.0),
                    rep.bound_exp.value_or(-1.0), rep.eps_holds,
                    eps > 0.5 ? true : rep.exp_holds, rep.gram_jac_err, rep.lemma_ok,
                    rep.weyl_ok});
  }
  return rows;
}

}  // namespace stpl::lin
