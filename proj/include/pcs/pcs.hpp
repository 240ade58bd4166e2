#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/group_data.hpp"

namespace pcs {

/// J x J smoothing penalties lambda_kj with zero diagonal. Row k holds the
/// penalties pulling group k's estimate toward the other first-stage means.
/// Entries may be negative as long as n_k + sum_{l != k} lambda_kl > 0.
struct PenaltyMatrix {
  MatrixXd lambda;

  [[nodiscard]] int group_count() const { return static_cast<int>(lambda.rows()); }

  void validate_shape() const {
    if (lambda.rows() < 2 || lambda.rows() != lambda.cols())
      throw InvalidInputError("PenaltyMatrix: need a square J x J matrix with J >= 2");
    for (int k = 0; k < lambda.rows(); ++k)
      if (lambda(k, k) != 0.0)
        throw InvalidInputError("PenaltyMatrix: diagonal entry lambda_" + std::to_string(k) +
                                std::to_string(k) + " must be zero");
  }

  /// Existence / uniqueness of the penalized minimizer: sum_{l != k} lambda_kl > -n_k.
  void validate_existence(const GroupSummary& summary) const {
    validate_shape();
    if (summary.group_count != group_count())
      throw InvalidInputError("PenaltyMatrix: group count mismatch with summary");
    for (int k = 0; k < group_count(); ++k) {
      const double row_sum = lambda.row(k).sum();
      if (!(row_sum > -static_cast<double>(summary.counts[k])))
        throw ExistenceError("penalized problem has no unique minimizer: row " +
                             std::to_string(k) + " has sum(lambda) = " + std::to_string(row_sum) +
                             " <= -n_k = " + std::to_string(-summary.counts[k]));
    }
  }
};

/// J x J smoothing weights omega_kj; row k gives the linear combination of the
/// first-stage means that forms group k's estimate. Rows sum to one; entries
/// may be negative.
struct WeightMatrix {
  MatrixXd omega;

  [[nodiscard]] int group_count() const { return static_cast<int>(omega.rows()); }

  void validate(double tol = 1e-10) const {
    if (omega.rows() < 2 || omega.rows() != omega.cols())
      throw InvalidInputError("WeightMatrix: need a square J x J matrix with J >= 2");
    for (int k = 0; k < omega.rows(); ++k)
      if (std::abs(omega.row(k).sum() - 1.0) > tol)
        throw InvalidInputError("WeightMatrix: row " + std::to_string(k) +
                                " sums to " + std::to_string(omega.row(k).sum()) + ", not 1");
  }
};

namespace detail {

/// Rescale rows to sum exactly to one. Drift below 1e-8 is floating noise and
/// is repaired; anything larger indicates a bug upstream and is an error.
inline void finalize_weight_rows(MatrixXd& omega) {
  for (int k = 0; k < omega.rows(); ++k) {
    const double s = omega.row(k).sum();
    if (std::abs(s - 1.0) >= 1e-8)
      throw Error("internal: weight row " + std::to_string(k) + " sums to " + std::to_string(s));
    omega.row(k) /= s;
  }
}

}  // namespace detail

enum class WeightProvenance { fixed_lambda, oracle, plug_in };

/// A pairwise cross-smoothing fit: smoothed means, the weights that produced
/// them, and the first-stage means they combine.
struct PcsEstimate {
  VectorXd mu;
  WeightMatrix weights;
  VectorXd first_stage;
  WeightProvenance provenance = WeightProvenance::fixed_lambda;
  std::vector<std::string> warnings;
};

/// Apply a weight matrix to the first-stage means of a summary.
inline PcsEstimate pcs_estimate(const GroupSummary& summary, const WeightMatrix& weights,
                                WeightProvenance provenance = WeightProvenance::fixed_lambda) {
  if (weights.group_count() != summary.group_count)
    throw InvalidInputError("pcs_estimate: weight matrix is " +
                            std::to_string(weights.group_count()) + "x" +
                            std::to_string(weights.group_count()) + " but summary has " +
                            std::to_string(summary.group_count) + " groups");
  weights.validate();
  PcsEstimate e;
  e.weights = weights;
  e.first_stage = summary.means;
  e.mu = weights.omega * summary.means;
  e.provenance = provenance;
  return e;
}

/// Solve the penalized least-squares problem for given penalties:
///   mu_k = (n_k * Ybar_k + sum_{j != k} lambda_kj * muhat_j) / (n_k + sum_{l != k} lambda_kl)
/// with the modified cell averages muhat as first stage. Equivalently returns
/// the weight representation omega_kj = lambda_kj / (n_k + sum lambda_kl),
/// omega_kk = n_k / (n_k + sum lambda_kl).
inline PcsEstimate pcs_from_penalties(const GroupSummary& summary,
                                      const PenaltyMatrix& penalties) {
  penalties.validate_existence(summary);
  const int J = summary.group_count;
  MatrixXd omega(J, J);
  for (int k = 0; k < J; ++k) {
    const double denom = static_cast<double>(summary.counts[k]) + penalties.lambda.row(k).sum();
    for (int j = 0; j < J; ++j)
      omega(k, j) = (j == k) ? static_cast<double>(summary.counts[k]) / denom
                             : penalties.lambda(k, j) / denom;
  }
  detail::finalize_weight_rows(omega);
  PcsEstimate e = pcs_estimate(summary, WeightMatrix{std::move(omega)});
  if (summary.has_empty_groups())
    e.warnings.push_back("sample contains empty groups; their first-stage means are 0");
  return e;
}

/// Invert the weight representation back to penalties: lambda_kj = n_k * omega_kj / omega_kk.
/// Requires omega_kk != 0 (a zero own-weight has no finite penalty representation).
inline PenaltyMatrix penalties_from_weights(const WeightMatrix& weights,
                                            const GroupSummary& summary) {
  weights.validate();
  if (weights.group_count() != summary.group_count)
    throw InvalidInputError("penalties_from_weights: group count mismatch");
  const int J = summary.group_count;
  MatrixXd lambda = MatrixXd::Zero(J, J);
  for (int k = 0; k < J; ++k) {
    const double own = weights.omega(k, k);
    if (own == 0.0)
      throw InvalidInputError("row " + std::to_string(k) +
                              " has own-weight 0: no finite penalty representation exists");
    for (int j = 0; j < J; ++j)
      if (j != k) lambda(k, j) = static_cast<double>(summary.counts[k]) * weights.omega(k, j) / own;
  }
  return PenaltyMatrix{std::move(lambda)};
}

namespace detail {

/// Shared evaluator for the MSE-optimal weight formula, explicit double-sum form:
///   omega_kj = [g_j + n * sum_{m != k} (mu_k - mu_m)(mu_j - mu_m) g_m g_j] / D_k
///   D_k     = sum_l g_l + n * sum_l sum_{m != k} (mu_k - mu_m)(mu_l - mu_m) g_l g_m
/// D_k is in fact the same for every k (the k-dependence cancels), so rows sum
/// to one by construction.
inline MatrixXd optimal_weight_matrix(const VectorXd& mu, const VectorXd& gamma, double n) {
  const int J = static_cast<int>(mu.size());
  MatrixXd omega(J, J);
  for (int k = 0; k < J; ++k) {
    double denom = 0.0;
    for (int l = 0; l < J; ++l) {
      double cross = 0.0;
      for (int m = 0; m < J; ++m) {
        if (m == k) continue;
        cross += (mu[k] - mu[m]) * (mu[l] - mu[m]) * gamma[m];
      }
      denom += gamma[l] * (1.0 + n * cross);
    }
    for (int j = 0; j < J; ++j) {
      double cross = 0.0;
      for (int m = 0; m < J; ++m) {
        if (m == k) continue;
        cross += (mu[k] - mu[m]) * (mu[j] - mu[m]) * gamma[m];
      }
      omega(k, j) = gamma[j] * (1.0 + n * cross) / denom;
    }
  }
  finalize_weight_rows(omega);
  return omega;
}

}  // namespace detail

/// MSE-optimal smoothing weights for known means and precisions gamma_j = p_j / sigma2_j.
inline WeightMatrix oracle_weights(const VectorXd& mu, const VectorXd& gamma, double n) {
  const int J = static_cast<int>(mu.size());
  if (J < 2 || gamma.size() != J)
    throw InvalidInputError("oracle_weights: mu and gamma must both have length J >= 2");
  if (!(n >= 1.0)) throw InvalidInputError("oracle_weights: n must be >= 1");
  for (int j = 0; j < J; ++j)
    if (!(gamma[j] > 0.0) || !std::isfinite(gamma[j]))
      throw InvalidInputError("oracle_weights: precision gamma_" + std::to_string(j) +
                              " must be positive and finite");
  return WeightMatrix{detail::optimal_weight_matrix(mu, gamma, n)};
}

/// Feasible counterpart of the oracle weights: the same formula evaluated at
/// the sample means, probabilities and variances of a summary. Per-group mode
/// needs n_k >= 2 everywhere; pooled mode needs all groups non-empty.
inline WeightMatrix plugin_weights(const GroupSummary& summary) {
  if (summary.has_empty_groups())
    throw InsufficientDataError("plugin weights require every group to be non-empty");
  summary.require_positive_variances();
  return WeightMatrix{detail::optimal_weight_matrix(summary.means, summary.precisions,
                                                    static_cast<double>(summary.total_count))};
}

/// Plug-in PCS fit of a summary: plugin weights applied to the first-stage means.
inline PcsEstimate pcs_plugin(const GroupSummary& summary) {
  return pcs_estimate(summary, plugin_weights(summary), WeightProvenance::plug_in);
}

}  // namespace pcs
