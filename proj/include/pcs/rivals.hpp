#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/group_data.hpp"
#include "pcs/optimize.hpp"
#include "pcs/partitions.hpp"
#include "pcs/pcs.hpp"
#include "pcs/risk.hpp"
#include "pcs/rng.hpp"

namespace pcs {

enum class RivalMethod { ols, rr, grr, kernel, mallows_cp };

inline const char* rival_method_name(RivalMethod m) {
  switch (m) {
    case RivalMethod::ols: return "ols";
    case RivalMethod::rr: return "rr";
    case RivalMethod::grr: return "grr";
    case RivalMethod::kernel: return "kernel";
    case RivalMethod::mallows_cp: return "cp";
  }
  return "?";
}

/// A comparison-estimator fit with its method-specific smoothing parameters.
struct RivalEstimate {
  RivalMethod method = RivalMethod::ols;
  VectorXd mu;
  double rr_lambda = std::numeric_limits<double>::quiet_NaN();
  VectorXd grr_omega;          // per-reference shrinkage weights
  VectorXd grr_lambda;         // equivalent per-reference penalties
  VectorXd kernel_lambda;      // per-target penalties
  std::vector<int> partition;  // block id per group (Mallows Cp)
  double criterion = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

/// DGP-style view of a summary, for the smoothing-parameter objectives.
inline RiskInputs inputs_from_summary(const GroupSummary& summary) {
  summary.require_positive_variances();
  RiskInputs in;
  in.mu = summary.means;
  in.sigma2 = summary.variances;
  in.p = summary.probabilities;
  in.n = static_cast<double>(summary.total_count);
  in.validate();
  return in;
}

// ---------------------------------------------------------------------------
// Fixed-smoothing appliers (shared by plug-in fits and oracle simulations)
// ---------------------------------------------------------------------------

/// Ridge: mu_k = (n_k ybar_k + lambda sum_{j != k} muhat_j) / (n_k + (J-1) lambda).
inline VectorXd apply_rr(const GroupSummary& summary, double lambda) {
  const int J = summary.group_count;
  VectorXd out(J);
  const double total = summary.means.sum();
  for (int k = 0; k < J; ++k) {
    const double nk = static_cast<double>(summary.counts[k]);
    const double denom = nk + (J - 1) * lambda;
    if (!(denom > 0.0))
      throw ExistenceError("rr: n_k + (J-1) lambda must be positive for every group");
    out[k] = (nk * summary.means[k] + lambda * (total - summary.means[k])) / denom;
  }
  return out;
}

/// Generalized ridge in weight form: mu_k = (1 - w_k) muhat_k + w_k * leave-k-out average.
inline VectorXd apply_grr_omega(const GroupSummary& summary, const VectorXd& omega) {
  const int J = summary.group_count;
  if (omega.size() != J) throw InvalidInputError("grr: omega must have length J");
  VectorXd out(J);
  const double total = summary.means.sum();
  for (int k = 0; k < J; ++k) {
    const double target = (total - summary.means[k]) / static_cast<double>(J - 1);
    out[k] = (1.0 - omega[k]) * summary.means[k] + omega[k] * target;
  }
  return out;
}

/// Kernel: mu_k = (n_k muhat_k + sum_{j != k} lambda_j muhat_j) / (n_k + sum_{l != k} lambda_l).
inline VectorXd apply_kernel(const GroupSummary& summary, const VectorXd& lambda) {
  const int J = summary.group_count;
  if (lambda.size() != J) throw InvalidInputError("kernel: lambda must have length J");
  VectorXd out(J);
  const double lambda_total = lambda.sum();
  double weighted_total = 0.0;
  for (int j = 0; j < J; ++j) weighted_total += lambda[j] * summary.means[j];
  for (int k = 0; k < J; ++k) {
    const double nk = static_cast<double>(summary.counts[k]);
    const double denom = nk + lambda_total - lambda[k];
    if (!(denom > 0.0))
      throw ExistenceError("kernel: n_k + sum_{l != k} lambda_l must be positive");
    out[k] = (nk * summary.means[k] + weighted_total - lambda[k] * summary.means[k]) / denom;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weighted-MSE objectives and their minimizers
// ---------------------------------------------------------------------------

/// Ridge weighted MSE as a function of the common penalty lambda.
inline double rr_weighted_mse(const RiskInputs& in, double lambda) {
  const int J = in.group_count();
  const VectorXd gamma = in.gamma();
  double total = 0.0;
  for (int k = 0; k < J; ++k) {
    const double npk = in.n * in.p[k];
    const double denom = npk + (J - 1) * lambda;
    double target = 0.0, target_var = 0.0;
    for (int j = 0; j < J; ++j) {
      if (j == k) continue;
      target += in.mu[j] / static_cast<double>(J - 1);
      target_var += in.sigma2[j] / (static_cast<double>(J - 1) * (J - 1) * in.n * in.p[j]);
    }
    const double bias = target - in.mu[k];
    const double shrink = (J - 1) * lambda / denom;
    const double keep = npk / denom;
    total += gamma[k] *
             (shrink * shrink * (bias * bias + target_var) + keep * keep * in.sigma2[k] / npk);
  }
  return total;
}

/// Kernel weighted MSE as a function of the per-target penalty vector.
inline double kernel_weighted_mse(const RiskInputs& in, const VectorXd& lambda) {
  const int J = in.group_count();
  if (lambda.size() != J) throw InvalidInputError("kernel_weighted_mse: lambda length mismatch");
  const VectorXd gamma = in.gamma();
  double total = 0.0;
  for (int k = 0; k < J; ++k) {
    const double npk = in.n * in.p[k];
    double denom = npk, quad = 0.0, bias = 0.0;
    for (int j = 0; j < J; ++j) {
      if (j == k) continue;
      denom += lambda[j];
      quad += lambda[j] * lambda[j] / gamma[j];
      bias += lambda[j] * (in.mu[j] - in.mu[k]);
    }
    total += (npk * npk / in.n + gamma[k] * quad / in.n + gamma[k] * bias * bias) / (denom * denom);
  }
  return total;
}

/// Closed-form MSE-optimal generalized-ridge weights (one per reference group).
inline VectorXd oracle_grr_omega(const RiskInputs& in) {
  in.validate();
  const int J = in.group_count();
  VectorXd omega(J);
  for (int k = 0; k < J; ++k) {
    const double own_var = in.sigma2[k] / (in.n * in.p[k]);
    double target = 0.0, target_var = 0.0;
    for (int j = 0; j < J; ++j) {
      if (j == k) continue;
      target += in.mu[j] / static_cast<double>(J - 1);
      target_var += in.sigma2[j] / (static_cast<double>(J - 1) * (J - 1) * in.n * in.p[j]);
    }
    const double bias = target - in.mu[k];
    omega[k] = own_var / (own_var + target_var + bias * bias);
  }
  return omega;
}

/// Weighted-MSE-optimal common ridge penalty, found by a 512-point grid scan
/// (log-spaced positive side plus a margin of admissible negative values)
/// followed by golden-section refinement.
inline double oracle_rr_lambda(const RiskInputs& in) {
  in.validate();
  const int J = in.group_count();
  const double eps = 1e-6 * in.n;
  const double lambda_lo = -(in.n * in.p.minCoeff()) / static_cast<double>(J - 1) + eps;
  const double lambda_hi = 1e6 * in.n;

  std::vector<double> grid;
  grid.reserve(512);
  for (int i = 0; i < 64; ++i)
    grid.push_back(lambda_lo * (1.0 - static_cast<double>(i) / 64.0));  // lambda_lo -> near 0
  grid.push_back(0.0);
  for (double g : log_spaced(eps, lambda_hi, 447)) grid.push_back(g);

  auto objective = [&](double lambda) { return rr_weighted_mse(in, lambda); };
  const double lambda_star = grid_then_golden_min(objective, grid);
  const double value = objective(lambda_star);
  if (!std::isfinite(value))
    throw OptimizerError("rr: no finite minimum found on (" + std::to_string(lambda_lo) + ", " +
                         std::to_string(lambda_hi) + "]");
  return lambda_star;
}

namespace detail {

/// One coordinate-descent pass over the kernel objective; returns the new value.
inline double kernel_cd_sweep(const RiskInputs& in, const VectorXd& gamma, VectorXd& lambda,
                              double lambda_max) {
  const int J = in.group_count();
  for (int c = 0; c < J; ++c) {
    // 1-D slice in t = lambda_c: F(t) = const + sum_{k != c} quadratic_k(t) / (d_k + t)^2
    std::vector<double> n0, n1, n2, d0;
    n0.reserve(J - 1);
    double const_term = 0.0;
    for (int k = 0; k < J; ++k) {
      const double npk = in.n * in.p[k];
      if (k == c) {
        double denom = npk, quad = 0.0, bias = 0.0;
        for (int j = 0; j < J; ++j) {
          if (j == k) continue;
          denom += lambda[j];
          quad += lambda[j] * lambda[j] / gamma[j];
          bias += lambda[j] * (in.mu[j] - in.mu[k]);
        }
        const_term = (npk * npk / in.n + gamma[k] * quad / in.n + gamma[k] * bias * bias) /
                     (denom * denom);
        continue;
      }
      double denom = npk, quad = 0.0, bias = 0.0;
      for (int j = 0; j < J; ++j) {
        if (j == k || j == c) continue;
        denom += lambda[j];
        quad += lambda[j] * lambda[j] / gamma[j];
        bias += lambda[j] * (in.mu[j] - in.mu[k]);
      }
      const double dc = in.mu[c] - in.mu[k];
      n0.push_back(npk * npk / in.n + gamma[k] * quad / in.n + gamma[k] * bias * bias);
      n1.push_back(2.0 * gamma[k] * bias * dc);
      n2.push_back(gamma[k] / gamma[c] / in.n + gamma[k] * dc * dc);
      d0.push_back(denom);
    }
    auto slice = [&](double t) {
      double f = const_term;
      for (std::size_t k = 0; k < n0.size(); ++k) {
        const double den = d0[k] + t;
        f += (n0[k] + t * (n1[k] + t * n2[k])) / (den * den);
      }
      return f;
    };
    std::vector<double> grid{0.0, lambda[c]};
    for (double g : log_spaced(1e-9 * in.n, lambda_max, 25)) grid.push_back(g);
    std::sort(grid.begin(), grid.end());
    lambda[c] = grid_then_golden_min(slice, grid);
  }
  return kernel_weighted_mse(in, lambda);
}

inline VectorXd kernel_pcs_implied_start(const RiskInputs& in) {
  const int J = in.group_count();
  const MatrixXd omega = detail::optimal_weight_matrix(in.mu, in.gamma(), in.n);
  VectorXd lambda = VectorXd::Zero(J);
  for (int j = 0; j < J; ++j) {
    double acc = 0.0;
    int used = 0;
    for (int k = 0; k < J; ++k) {
      if (k == j || std::abs(omega(k, k)) < 1e-12) continue;
      acc += in.n * in.p[k] * omega(k, j) / omega(k, k);
      ++used;
    }
    if (used > 0) lambda[j] = std::max(0.0, acc / used);
  }
  return lambda;
}

}  // namespace detail

/// Weighted-MSE-optimal kernel penalties (lambda_j >= 0), by multistart
/// coordinate descent: starts at zero, at the PCS-implied penalties clipped to
/// the nonnegative orthant, and at six seeded random points.
inline VectorXd oracle_kernel_lambda(const RiskInputs& in, double* criterion_out = nullptr) {
  in.validate();
  const int J = in.group_count();
  const VectorXd gamma = in.gamma();
  const double lambda_max = 1e6 * in.n;
  constexpr int max_sweeps = 200;
  constexpr double tol = 1e-9;

  std::vector<VectorXd> starts;
  starts.push_back(VectorXd::Zero(J));
  starts.push_back(detail::kernel_pcs_implied_start(in));
  for (int s = 0; s < 6; ++s) {
    RandomStream rng(0x6b65726eULL, static_cast<std::uint64_t>(s));
    VectorXd lam(J);
    for (int j = 0; j < J; ++j) {
      // log-uniform over [1e-3 n, 10 n]
      lam[j] = 1e-3 * in.n * std::pow(1e4, rng.next_uniform());
    }
    starts.push_back(lam);
  }

  VectorXd best;
  double best_value = std::numeric_limits<double>::infinity();
  int converged_starts = 0;
  for (const VectorXd& start : starts) {
    VectorXd lambda = start;
    double value = kernel_weighted_mse(in, lambda);
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      const double next = detail::kernel_cd_sweep(in, gamma, lambda, lambda_max);
      if (std::abs(value - next) <= tol * (1.0 + std::abs(next))) {
        value = next;
        converged = true;
        break;
      }
      value = next;
    }
    if (!converged) continue;
    ++converged_starts;
    if (value < best_value) {
      best_value = value;
      best = lambda;
    }
  }
  if (converged_starts == 0)
    throw OptimizerError("kernel: coordinate descent failed to converge from every start");
  if (criterion_out) *criterion_out = best_value;
  return best;
}

// ---------------------------------------------------------------------------
// Plug-in estimators
// ---------------------------------------------------------------------------

/// Ordinary least squares / frequency estimator: the first-stage means.
inline RivalEstimate ols(const GroupSummary& summary) {
  RivalEstimate e;
  e.method = RivalMethod::ols;
  e.mu = summary.means;
  if (summary.has_empty_groups())
    e.warnings.push_back("sample contains empty groups; their cell means are 0");
  return e;
}

inline RivalEstimate rr_plugin(const GroupSummary& summary) {
  const RiskInputs in = inputs_from_summary(summary);
  RivalEstimate e;
  e.method = RivalMethod::rr;
  e.rr_lambda = oracle_rr_lambda(in);
  e.criterion = rr_weighted_mse(in, e.rr_lambda);
  e.mu = apply_rr(summary, e.rr_lambda);
  return e;
}

inline RivalEstimate grr_plugin(const GroupSummary& summary) {
  const RiskInputs in = inputs_from_summary(summary);
  const int J = summary.group_count;
  RivalEstimate e;
  e.method = RivalMethod::grr;
  e.grr_omega = oracle_grr_omega(in);
  e.grr_lambda = VectorXd(J);
  for (int k = 0; k < J; ++k) {
    const double w = e.grr_omega[k];
    e.grr_lambda[k] =
        static_cast<double>(summary.counts[k]) * w / (static_cast<double>(J - 1) * (1.0 - w));
  }
  e.mu = apply_grr_omega(summary, e.grr_omega);
  return e;
}

inline RivalEstimate kernel_plugin(const GroupSummary& summary) {
  const RiskInputs in = inputs_from_summary(summary);
  RivalEstimate e;
  e.method = RivalMethod::kernel;
  e.kernel_lambda = oracle_kernel_lambda(in, &e.criterion);
  e.mu = apply_kernel(summary, e.kernel_lambda);
  return e;
}

namespace detail {

/// Per-group sufficient statistics for partition scoring.
struct CpContext {
  int group_count = 0;
  long n = 0;
  std::vector<double> sums;
  std::vector<long> counts;
  double sse_full = 0.0;
  double group_ss = 0.0;  // sum_j n_j mean_j^2
  double sigma2_full = 0.0;
};

inline CpContext make_cp_context(const GroupedSample& sample) {
  sample.validate();
  CpContext ctx;
  const int J = sample.group_count;
  ctx.group_count = J;
  ctx.n = static_cast<long>(sample.size());
  if (ctx.n <= J) throw InsufficientDataError("mallows_cp: needs n > J");
  ctx.sums.assign(J, 0.0);
  ctx.counts.assign(J, 0);
  std::vector<double> means(J, 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    ctx.sums[sample.groups[i]] += sample.outcomes[i];
    ++ctx.counts[sample.groups[i]];
  }
  for (int j = 0; j < J; ++j)
    means[j] = ctx.counts[j] > 0 ? ctx.sums[j] / static_cast<double>(ctx.counts[j]) : 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double d = sample.outcomes[i] - means[sample.groups[i]];
    ctx.sse_full += d * d;
  }
  for (int j = 0; j < J; ++j)
    ctx.group_ss += static_cast<double>(ctx.counts[j]) * means[j] * means[j];
  ctx.sigma2_full = ctx.sse_full / static_cast<double>(ctx.n - J);
  if (!(ctx.sigma2_full > 0.0))
    throw DegenerateVarianceError("mallows_cp: full-model residual variance is zero");
  return ctx;
}

inline double cp_of_partition(const CpContext& ctx, const std::vector<int>& code,
                              std::vector<double>& block_sum, std::vector<long>& block_count,
                              int* blocks_out = nullptr) {
  const int J = ctx.group_count;
  int blocks = 0;
  for (int j = 0; j < J; ++j) blocks = std::max(blocks, code[j] + 1);
  std::fill(block_sum.begin(), block_sum.begin() + blocks, 0.0);
  std::fill(block_count.begin(), block_count.begin() + blocks, 0L);
  for (int j = 0; j < J; ++j) {
    block_sum[code[j]] += ctx.sums[j];
    block_count[code[j]] += ctx.counts[j];
  }
  // pooled SSE = SSE_full + sum_j n_j mean_j^2 - sum_b sum_b^2 / count_b
  double pooled_ss = 0.0;
  for (int b = 0; b < blocks; ++b)
    if (block_count[b] > 0)
      pooled_ss += block_sum[b] * block_sum[b] / static_cast<double>(block_count[b]);
  const double sse_sub = ctx.sse_full + ctx.group_ss - pooled_ss;
  if (blocks_out) *blocks_out = blocks;
  return sse_sub / ctx.sigma2_full - static_cast<double>(ctx.n) + 2.0 * blocks;
}

}  // namespace detail

/// Mallows C_p of one candidate partition, code[j] = block id of group j:
/// C_p = SSE_sub / sigma2_full - n + 2 * blocks with sigma2_full = SSE_full / (n - J).
inline double mallows_cp_criterion(const GroupedSample& sample, const std::vector<int>& code) {
  const detail::CpContext ctx = detail::make_cp_context(sample);
  if (static_cast<int>(code.size()) != ctx.group_count)
    throw InvalidInputError("mallows_cp_criterion: partition code must have length J");
  std::vector<double> block_sum(ctx.group_count);
  std::vector<long> block_count(ctx.group_count);
  return detail::cp_of_partition(ctx, code, block_sum, block_count);
}

/// Pretest estimator: enumerate every set partition of the groups, pool means
/// within blocks, and keep the partition minimizing Mallows C_p =
/// SSE_sub / sigma2_full - n + 2 * blocks. Ties break toward fewer blocks,
/// then the lexicographically smallest partition encoding.
inline RivalEstimate mallows_cp(const GroupedSample& sample) {
  const int J = sample.group_count;
  if (J > 12)
    throw InvalidInputError(
        "mallows_cp: refusing to enumerate Bell(" + std::to_string(J) +
        ") submodels; restrict the groups or supply explicit candidate partitions");
  const detail::CpContext ctx = detail::make_cp_context(sample);

  std::vector<int> best_code;
  double best_cp = std::numeric_limits<double>::infinity();
  int best_blocks = J + 1;
  std::vector<double> block_sum(J);
  std::vector<long> block_count(J);
  for_each_set_partition(J, [&](const std::vector<int>& code) {
    int blocks = 0;
    const double cp = detail::cp_of_partition(ctx, code, block_sum, block_count, &blocks);
    if (cp < best_cp || (cp == best_cp && blocks < best_blocks)) {
      best_cp = cp;
      best_blocks = blocks;
      best_code = code;
    }
  });

  RivalEstimate e;
  e.method = RivalMethod::mallows_cp;
  e.partition = best_code;
  e.criterion = best_cp;
  e.mu = VectorXd(J);
  std::fill(block_sum.begin(), block_sum.end(), 0.0);
  std::fill(block_count.begin(), block_count.end(), 0L);
  for (int j = 0; j < J; ++j) {
    block_sum[best_code[j]] += ctx.sums[j];
    block_count[best_code[j]] += ctx.counts[j];
  }
  for (int j = 0; j < J; ++j) {
    const long c = block_count[best_code[j]];
    e.mu[j] = c > 0 ? block_sum[best_code[j]] / static_cast<double>(c) : 0.0;
  }
  return e;
}

}  // namespace pcs
