#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/group_data.hpp"
#include "pcs/parallel.hpp"
#include "pcs/pcs.hpp"
#include "pcs/rng.hpp"

namespace pcs {

/// True data-generating quantities for risk evaluation. The canonical loss
/// weighting is W = diag(gamma) with gamma_j = p_j / sigma2_j, and the OLS
/// limit has variance V_0 = diag(1/gamma).
struct RiskInputs {
  VectorXd mu;
  VectorXd sigma2;
  VectorXd p;
  double n = 0;

  [[nodiscard]] int group_count() const { return static_cast<int>(mu.size()); }
  [[nodiscard]] VectorXd gamma() const { return p.array() / sigma2.array(); }

  void validate() const {
    const int J = group_count();
    if (J < 2 || sigma2.size() != J || p.size() != J)
      throw InvalidInputError("RiskInputs: mu, sigma2, p must share a length J >= 2");
    if (!(n >= 1.0)) throw InvalidInputError("RiskInputs: n must be >= 1");
    double psum = 0.0;
    for (int j = 0; j < J; ++j) {
      if (!(p[j] > 0.0)) throw InvalidInputError("RiskInputs: probabilities must be positive");
      if (!(sigma2[j] > 0.0)) throw InvalidInputError("RiskInputs: variances must be positive");
      psum += p[j];
    }
    if (std::abs(psum - 1.0) > 1e-8)
      throw InvalidInputError("RiskInputs: probabilities sum to " + std::to_string(psum));
  }
};

/// Weighted squared-error loss (estimate - truth)' diag(w) (estimate - truth).
inline double weighted_loss(const VectorXd& estimate, const VectorXd& truth, const VectorXd& w) {
  if (estimate.size() != truth.size() || estimate.size() != w.size())
    throw InvalidInputError("weighted_loss: dimension mismatch");
  double loss = 0.0;
  for (int k = 0; k < estimate.size(); ++k) {
    const double d = estimate[k] - truth[k];
    loss += w[k] * d * d;
  }
  return loss;
}

/// Approximate MSE of one smoothed group mean, explicit sum form:
///   (sum_{j != k} w_j (mu_k - mu_j))^2
///   + (1 - sum_{j != k} w_j)^2 sigma2_k / (n p_k)
///   + sum_{j != k} w_j^2 sigma2_j / (n p_j)
inline double pcs_group_mse(const VectorXd& weights_row, const RiskInputs& inputs, int k) {
  inputs.validate();
  const int J = inputs.group_count();
  if (weights_row.size() != J || k < 0 || k >= J)
    throw InvalidInputError("pcs_group_mse: bad row length or group index");
  double bias = 0.0, cross_weight = 0.0, var = 0.0;
  for (int j = 0; j < J; ++j) {
    if (j == k) continue;
    bias += weights_row[j] * (inputs.mu[k] - inputs.mu[j]);
    cross_weight += weights_row[j];
    var += weights_row[j] * weights_row[j] * inputs.sigma2[j] / (inputs.n * inputs.p[j]);
  }
  const double own = 1.0 - cross_weight;
  return bias * bias + own * own * inputs.sigma2[k] / (inputs.n * inputs.p[k]) + var;
}

/// The same MSE as a quadratic form, w' Delta_k mu mu' Delta_k' w + w' diag(gamma)^-1 w / n.
/// Agrees with pcs_group_mse to floating precision; kept as a cross-check route.
inline double pcs_group_mse_quadratic(const VectorXd& weights_row, const RiskInputs& inputs,
                                      int k) {
  inputs.validate();
  const int J = inputs.group_count();
  if (weights_row.size() != J || k < 0 || k >= J)
    throw InvalidInputError("pcs_group_mse_quadratic: bad row length or group index");
  const DeltaOperator delta = delta_operator(J);
  const VectorXd diffs = delta.partition(k) * inputs.mu;
  const double bias = weights_row.dot(diffs);
  const VectorXd gamma = inputs.gamma();
  double var = 0.0;
  for (int j = 0; j < J; ++j) var += weights_row[j] * weights_row[j] / gamma[j];
  return bias * bias + var / inputs.n;
}

/// Sum of per-group MSEs weighted by gamma: the weighted parameter-vector MSE
/// of a full weight matrix under the RiskInputs DGP.
inline double pcs_weighted_mse(const WeightMatrix& weights, const RiskInputs& inputs) {
  const VectorXd gamma = inputs.gamma();
  double total = 0.0;
  for (int k = 0; k < inputs.group_count(); ++k)
    total += gamma[k] * pcs_group_mse(weights.omega.row(k), inputs, k);
  return total;
}

namespace detail {

inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace detail

struct RiskEstimate {
  double value = 0.0;      // Monte Carlo estimate of the asymptotic risk
  double std_error = 0.0;  // Monte Carlo standard error
  double ols_risk = 0.0;   // tr(W V_0)
  long draws = 0;
};

/// Asymptotic risk of the plug-in PCS under a close system with local
/// parameter delta, by Monte Carlo integration over Z ~ N(0, V_0):
///
///   rho = tr(W V_0) + E[ (Z+d)' Delta' C Delta (Z+d) / d_0^2 ]
///         - 2 tr(V_0^-1) tr(Delta' M_3 V_0) E[ 1 / d_0^2 ]
///
/// with d_0 = tr(V_0^-1) + (Z+d)' Delta' M_1 Delta (Z+d) / 2 and
/// C = M_2 - tr(Delta' M_3 V_0) M_1 + 2 M_3 V_0 Delta' M_1, where
/// M_1 = diag(g) (x) diag(g), M_2 = diag(g) (x) g g', M_3 = diag(g) (x) g.
///
/// Uses antithetic pairs (Z, -Z); bitwise-reproducible for a fixed
/// (seed, draws) pair regardless of the thread count.
inline RiskEstimate asymptotic_risk_pcs(const RiskInputs& inputs, const VectorXd& delta,
                                        long draws, std::uint64_t seed, int threads = 1) {
  inputs.validate();
  const int J = inputs.group_count();
  if (J > 16)
    throw InvalidInputError("asymptotic_risk_pcs: J <= 16 enforced (J^2 x J^2 matrices)");
  if (delta.size() != J) throw InvalidInputError("asymptotic_risk_pcs: delta must have length J");
  if (draws < 1000) throw InvalidInputError("asymptotic_risk_pcs: need draws >= 1000");

  const VectorXd gamma = inputs.gamma();
  const MatrixXd dg = gamma.asDiagonal();
  const MatrixXd v0 = gamma.cwiseInverse().asDiagonal();
  const DeltaOperator delta_op = delta_operator(J);
  const MatrixXd& D = delta_op.full;

  // J^2 x J^2 (and J^2 x J) pieces, materialized once per call
  const MatrixXd m1 = detail::kron(dg, dg);
  const MatrixXd m2 = detail::kron(dg, MatrixXd(gamma * gamma.transpose()));
  const MatrixXd m3 = detail::kron(dg, MatrixXd(gamma));
  const double tr_v0inv = gamma.sum();
  const double tr_dm3v0 = (D.transpose() * m3 * v0).trace();
  const MatrixXd c_full = m2 - tr_dm3v0 * m1 + 2.0 * m3 * v0 * D.transpose() * m1;

  // reduce the integrand to J x J quadratic forms
  const MatrixXd g_mat = D.transpose() * c_full * D;
  const MatrixXd k_mat = 0.5 * (D.transpose() * m1 * D);
  const double ols_risk = (gamma.array() * v0.diagonal().array()).sum();
  const double neg_const = 2.0 * tr_v0inv * tr_dm3v0;
  const VectorXd z_scale = gamma.cwiseSqrt().cwiseInverse();  // sd of Z_j

  const long pairs = (draws + 1) / 2;
  const std::size_t chunk = 4096;
  const std::size_t n_chunks = (static_cast<std::size_t>(pairs) + chunk - 1) / chunk;
  std::vector<double> sum_slot(n_chunks, 0.0), sumsq_slot(n_chunks, 0.0);

  parallel_chunks(static_cast<std::size_t>(pairs), chunk, threads,
                  [&](std::size_t c, std::size_t begin, std::size_t end) {
                    VectorXd z(J), x(J);
                    double local_sum = 0.0, local_sumsq = 0.0;
                    for (std::size_t i = begin; i < end; ++i) {
                      RandomStream rng(seed, 0xA5, i);
                      for (int j = 0; j < J; ++j) z[j] = z_scale[j] * rng.next_normal();
                      double pair_value = 0.0;
                      for (int sign = 0; sign < 2; ++sign) {
                        x = (sign == 0) ? (z + delta).eval() : (delta - z).eval();
                        const double d0 = tr_v0inv + x.dot(k_mat * x);
                        pair_value += (x.dot(g_mat * x) - neg_const) / (d0 * d0);
                      }
                      pair_value *= 0.5;
                      local_sum += pair_value;
                      local_sumsq += pair_value * pair_value;
                    }
                    sum_slot[c] = local_sum;
                    sumsq_slot[c] = local_sumsq;
                  });

  double total = 0.0, total_sq = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    total += sum_slot[c];
    total_sq += sumsq_slot[c];
  }
  const double mean = total / static_cast<double>(pairs);
  const double var = (total_sq / static_cast<double>(pairs) - mean * mean) /
                     std::max<double>(1.0, static_cast<double>(pairs - 1)) *
                     static_cast<double>(pairs);
  RiskEstimate r;
  r.value = ols_risk + mean;
  r.std_error = std::sqrt(std::max(0.0, var / static_cast<double>(pairs)));
  r.ols_risk = ols_risk;
  r.draws = 2 * pairs;
  return r;
}

/// Result of the definiteness check behind the J >= 4 dominance condition.
struct DominanceReport {
  MatrixXd neg_c;                    // closed-form -Delta' C Delta, J x J
  double min_eigenvalue = 0.0;
  bool diagonally_dominant = false;  // absolute diagonal dominance with nonnegative diagonal
  double kron_agreement_error = 0.0; // max abs deviation from the Kronecker-built matrix
};

/// Build -Delta' C Delta from its closed form,
///   (-C)_ii = g_i (2J-7) (sum_{l != i} g_l) (sum_m g_m),
///   (-C)_ij = -g_i g_j (2J-7) sum_l g_l,
/// verify it against the matrix assembled from the Kronecker pieces, and
/// report the smallest eigenvalue and the diagonal-dominance flag.
inline DominanceReport dominance_matrix_check(const VectorXd& gamma) {
  const int J = static_cast<int>(gamma.size());
  if (J < 2) throw InvalidInputError("dominance_matrix_check: need J >= 2");
  for (int j = 0; j < J; ++j)
    if (!(gamma[j] > 0.0)) throw InvalidInputError("dominance_matrix_check: gamma must be positive");

  const double s = gamma.sum();
  const double f = 2.0 * J - 7.0;
  DominanceReport rep;
  rep.neg_c = MatrixXd(J, J);
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < J; ++j)
      rep.neg_c(i, j) = (i == j) ? gamma[i] * f * (s - gamma[i]) * s : -gamma[i] * gamma[j] * f * s;

  // cross-check against the definition of C
  const MatrixXd dg = gamma.asDiagonal();
  const MatrixXd v0 = gamma.cwiseInverse().asDiagonal();
  const MatrixXd& D = delta_operator(J).full;
  const MatrixXd m1 = detail::kron(dg, dg);
  const MatrixXd m2 = detail::kron(dg, MatrixXd(gamma * gamma.transpose()));
  const MatrixXd m3 = detail::kron(dg, MatrixXd(gamma));
  const double tr_dm3v0 = (D.transpose() * m3 * v0).trace();
  const MatrixXd c_full = m2 - tr_dm3v0 * m1 + 2.0 * m3 * v0 * D.transpose() * m1;
  const MatrixXd neg_c_kron = -(D.transpose() * c_full * D);
  rep.kron_agreement_error = (rep.neg_c - neg_c_kron).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, rep.neg_c.cwiseAbs().maxCoeff());
  if (rep.kron_agreement_error > 1e-8 * scale)
    throw Error("internal: closed-form -C disagrees with Kronecker construction by " +
                std::to_string(rep.kron_agreement_error));

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (rep.neg_c + rep.neg_c.transpose()));
  rep.min_eigenvalue = eig.eigenvalues().minCoeff();

  rep.diagonally_dominant = true;
  for (int i = 0; i < J; ++i) {
    const double off = rep.neg_c.row(i).cwiseAbs().sum() - std::abs(rep.neg_c(i, i));
    if (rep.neg_c(i, i) < 0.0 || off > rep.neg_c(i, i) + 1e-9 * scale)
      rep.diagonally_dominant = false;
  }
  return rep;
}

/// Limiting plug-in/oracle weights under a close system with local parameter
/// delta: the oracle-weight formula with n set to 1 and mu set to delta.
inline WeightMatrix close_limit_weights(const VectorXd& delta, const VectorXd& gamma) {
  return oracle_weights(delta, gamma, 1.0);
}

/// Limiting weights under a distant system:
///   w_kj = 2 g_j sum_m g_m (mu_k - mu_m)(mu_j - mu_m) / sum_l sum_m g_l g_m (mu_l - mu_m)^2.
/// Undefined (division by zero) when all means coincide.
inline WeightMatrix distant_limit_weights(const VectorXd& mu, const VectorXd& gamma) {
  const int J = static_cast<int>(mu.size());
  if (J < 2 || gamma.size() != J)
    throw InvalidInputError("distant_limit_weights: mu and gamma must share length J >= 2");
  double denom = 0.0;
  for (int l = 0; l < J; ++l)
    for (int m = 0; m < J; ++m) {
      const double d = mu[l] - mu[m];
      denom += gamma[l] * gamma[m] * d * d;
    }
  if (!(denom > 0.0))
    throw InvalidInputError("distant_limit_weights: all means equal, the limit is undefined");
  MatrixXd omega(J, J);
  for (int k = 0; k < J; ++k)
    for (int j = 0; j < J; ++j) {
      double cross = 0.0;
      for (int m = 0; m < J; ++m) cross += gamma[m] * (mu[k] - mu[m]) * (mu[j] - mu[m]);
      omega(k, j) = 2.0 * gamma[j] * cross / denom;
    }
  detail::finalize_weight_rows(omega);
  return WeightMatrix{std::move(omega)};
}

/// Two-sample statistic for equality of the means of groups k and j,
///   T = sqrt(n) (mu_k - mu_j) / sqrt(sigma2_k / p_k + sigma2_j / p_j).
inline double local_t_statistic(const GroupSummary& summary, int k, int j) {
  if (k < 0 || j < 0 || k >= summary.group_count || j >= summary.group_count || k == j)
    throw InvalidInputError("local_t_statistic: bad group pair");
  summary.require_positive_variances();
  const double scale2 = summary.variances[k] / summary.probabilities[k] +
                        summary.variances[j] / summary.probabilities[j];
  if (!(scale2 > 0.0)) throw DegenerateVarianceError("local_t_statistic: zero pooled scale");
  return std::sqrt(static_cast<double>(summary.total_count)) *
         (summary.means[k] - summary.means[j]) / std::sqrt(scale2);
}

}  // namespace pcs
