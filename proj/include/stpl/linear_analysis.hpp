#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stpl/linalg.hpp"

namespace stpl::lin {

/// Linear latent dynamics z_{t+1} = A z_t + B a_t over a finite horizon.
struct LinearSystem {
  Matrix A;
  Matrix B;
  int K = 1;
  std::vector<double> z0;
};

/// [A^{K-1}B  A^{K-2}B ... B], the Jacobian of the unrolled terminal state
/// w.r.t. the stacked action sequence.
Matrix rollout_jacobian(const LinearSystem& sys);

/// Finite-horizon controllability Gramian, sum_k A^k B B^T (A^T)^k.
Matrix gramian(const LinearSystem& sys);

/// lambda_max / lambda_min^+ of a PSD matrix; eigenvalues below
/// rank_tol_factor * lambda_max count as zero.
double effective_condition(const Matrix& psd, double rank_tol_factor = 1e-10);

int numeric_rank(const Matrix& psd, double rank_tol_factor = 1e-10);

struct ConditioningReport {
  double eps = 0.0;      // ||A - I||_2
  double kappa_a = 0.0;  // sigma_max(A)/sigma_min(A)
  double kappa_b = 0.0;
  double keff = 0.0;  // effective condition number of the Gramian (== of the Hessian)
  double hessian_keff = 0.0;
  bool lemma_ok = false;  // keff(2 J^T J) == keff(W_K) to 1e-8 relative
  double gram_jac_err = 0.0;  // max |W_K - J J^T|

  // Bounds evaluated only when their preconditions hold.
  std::optional<double> bound_ratio;  // kappa(B)^2 * sum sigma_max^2k / sum sigma_min^2k
  std::optional<double> bound_power;  // kappa(B)^2 * kappa(A)^{2(K-1)}
  std::optional<double> bound_eps;    // kappa(B)^2 * ((1+eps)/(1-eps))^{2(K-1)}
  std::optional<double> bound_exp;    // kappa(B)^2 * exp(6 eps K)
  bool ratio_holds = false, power_holds = false, eps_holds = false, exp_holds = false;

  // Weyl consequence checked per system.
  bool weyl_ok = false;

  int rank_wk = 0;
  int controllable_dim = 0;
};

ConditioningReport analyze(const LinearSystem& sys);

/// Rollout of the linear dynamics from sys.z0 under the given actions.
std::vector<std::vector<double>> simulate(const LinearSystem& sys,
                                          const std::vector<std::vector<double>>& actions);

struct ProxyStep {
  double cosine;  // C_t between consecutive velocities
  double lhs;     // ||(A - I) v_hat_t||
  double rhs;     // sqrt(2(1 - C_t)) + sigma_max(B) * delta_a / c
  bool holds;
};

struct ProxyReport {
  std::vector<ProxyStep> steps;
  double speed_c = 0.0;        // exact constant speed, or min_t ||v_t|| when relaxed
  bool constant_speed = false;
  std::string note;            // set when the constant-speed assumption was relaxed
  double delta_a = 0.0;        // max_t ||a_{t+1} - a_t||
  double mean_cosine = 0.0;
  double mean_lhs = 0.0;
  double mean_rhs = 0.0;  // sqrt(2 eta) + sigma_max(B) delta_a / c with eta = 1 - mean cosine
  bool mean_holds = false;
};

ProxyReport cosine_proxy_check(const LinearSystem& sys,
                               const std::vector<std::vector<double>>& states,
                               const std::vector<std::vector<double>>& actions);

struct SweepRow {
  int draw;
  double eps;
  int horizon;
  double keff;
  double bound_eps;
  double bound_exp;
  bool eps_holds;
  bool exp_holds;
  double gram_jac_err;
  bool lemma_ok;
  bool weyl_ok;
};

/// Randomized Theorem-1 sweep: A = I + eps * G/||G||, B = I + b_noise * N.
std::vector<SweepRow> theorem_sweep(int n_draws, int d, const std::vector<double>& eps_values,
                                    const std::vector<int>& horizons, double b_noise,
                                    std::uint64_t seed);

}  // namespace stpl::lin
