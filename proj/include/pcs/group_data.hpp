#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pcs/error.hpp"

namespace pcs {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Raw grouped observations: outcomes y_i with group indices in {0, ..., group_count-1}.
struct GroupedSample {
  std::vector<double> outcomes;
  std::vector<int> groups;
  int group_count = 0;

  [[nodiscard]] std::size_t size() const { return outcomes.size(); }

  void validate() const {
    if (group_count < 2)
      throw InvalidInputError("GroupedSample: need at least 2 groups, got " +
                              std::to_string(group_count));
    if (outcomes.empty() || outcomes.size() != groups.size())
      throw InvalidInputError("GroupedSample: outcomes and groups must have equal, nonzero length");
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i] < 0 || groups[i] >= group_count)
        throw InvalidInputError("GroupedSample: group index " + std::to_string(groups[i]) +
                                " at row " + std::to_string(i) + " outside [0, " +
                                std::to_string(group_count) + ")");
      if (!std::isfinite(outcomes[i]))
        throw InvalidInputError("GroupedSample: non-finite outcome at row " + std::to_string(i));
    }
  }
};

/// How group variances are estimated in a summary.
///   means_only: no variance estimates (counts, means, probabilities only)
///   per_group:  one sample variance per group, divisor n_j - 1
///   pooled:     a single residual variance shared by all groups, divisor n - J
enum class VarianceMode { means_only, per_group, pooled };

/// Per-group sufficient statistics consumed by every estimator.
///
/// Means use the modified denominator n_j + 1{n_j = 0}, so an empty group has
/// mean 0 and is flagged in `empty`. Precisions are gamma_j = p_j / sigma2_j.
struct GroupSummary {
  int group_count = 0;
  long total_count = 0;
  VarianceMode variance_mode = VarianceMode::means_only;
  std::vector<long> counts;
  VectorXd means;
  VectorXd variances;      // NaN in means_only mode
  VectorXd probabilities;  // n_j / n
  VectorXd precisions;     // p_j / sigma2_j; NaN in means_only mode
  std::vector<bool> empty;

  [[nodiscard]] bool has_variances() const { return variance_mode != VarianceMode::means_only; }
  [[nodiscard]] bool has_empty_groups() const {
    for (bool e : empty)
      if (e) return true;
    return false;
  }

  /// Throws unless every group has a strictly positive variance estimate.
  void require_positive_variances() const {
    if (!has_variances())
      throw InsufficientDataError("GroupSummary: no variance estimates were computed");
    for (int j = 0; j < group_count; ++j)
      if (!(variances[j] > 0.0))
        throw DegenerateVarianceError("group " + std::to_string(j) +
                                      " has zero (or missing) sample variance");
  }
};

/// Summarize a grouped sample.
///
/// With per_group variances every group needs n_j >= 2; with pooled variances
/// the residual variance uses divisor n - J and needs n > J. Use means_only to
/// summarize samples with empty or singleton cells.
inline GroupSummary summarize(const GroupedSample& sample,
                              VarianceMode mode = VarianceMode::per_group) {
  sample.validate();
  const int J = sample.group_count;
  const long n = static_cast<long>(sample.size());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  GroupSummary s;
  s.group_count = J;
  s.total_count = n;
  s.variance_mode = mode;
  s.counts.assign(J, 0);
  s.means = VectorXd::Zero(J);
  s.variances = VectorXd::Constant(J, nan);
  s.probabilities = VectorXd::Zero(J);
  s.precisions = VectorXd::Constant(J, nan);
  s.empty.assign(J, false);

  VectorXd sums = VectorXd::Zero(J);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    sums[sample.groups[i]] += sample.outcomes[i];
    ++s.counts[sample.groups[i]];
  }
  for (int j = 0; j < J; ++j) {
    s.empty[j] = (s.counts[j] == 0);
    // modified cell average: denominator n_j + 1{n_j = 0}
    s.means[j] = sums[j] / static_cast<double>(s.counts[j] + (s.counts[j] == 0 ? 1 : 0));
    s.probabilities[j] = static_cast<double>(s.counts[j]) / static_cast<double>(n);
  }

  if (mode == VarianceMode::means_only) return s;

  VectorXd ss = VectorXd::Zero(J);  // within-group sums of squared deviations
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double d = sample.outcomes[i] - s.means[sample.groups[i]];
    ss[sample.groups[i]] += d * d;
  }

  if (mode == VarianceMode::per_group) {
    for (int j = 0; j < J; ++j) {
      if (s.counts[j] < 2)
        throw InsufficientDataError("per-group variance requires n_j >= 2, but group " +
                                    std::to_string(j) + " has " + std::to_string(s.counts[j]) +
                                    " observation(s)");
      s.variances[j] = ss[j] / static_cast<double>(s.counts[j] - 1);
    }
  } else {  // pooled
    if (n <= J)
      throw InsufficientDataError("pooled variance requires n > J, got n = " + std::to_string(n) +
                                  ", J = " + std::to_string(J));
    const double pooled = ss.sum() / static_cast<double>(n - J);
    s.variances.setConstant(pooled);
  }
  for (int j = 0; j < J; ++j)
    s.precisions[j] = s.variances[j] > 0.0 ? s.probabilities[j] / s.variances[j]
                                           : std::numeric_limits<double>::infinity();
  return s;
}

/// Build a summary directly from published per-cell statistics (mean, variance, count).
inline GroupSummary summary_from_moments(const VectorXd& means, const VectorXd& variances,
                                         const std::vector<long>& counts) {
  const int J = static_cast<int>(means.size());
  if (J < 2 || variances.size() != J || static_cast<int>(counts.size()) != J)
    throw InvalidInputError("summary_from_moments: need J >= 2 cells with matching lengths");
  GroupSummary s;
  s.group_count = J;
  s.variance_mode = VarianceMode::per_group;
  s.counts = counts;
  s.means = means;
  s.variances = variances;
  s.total_count = 0;
  for (int j = 0; j < J; ++j) {
    if (counts[j] < 2)
      throw InsufficientDataError("summary_from_moments: cell " + std::to_string(j) +
                                  " has count < 2");
    if (!(variances[j] > 0.0))
      throw DegenerateVarianceError("summary_from_moments: cell " + std::to_string(j) +
                                    " has nonpositive variance");
    s.total_count += counts[j];
  }
  s.probabilities = VectorXd(J);
  s.precisions = VectorXd(J);
  s.empty.assign(J, false);
  for (int j = 0; j < J; ++j) {
    s.probabilities[j] = static_cast<double>(counts[j]) / static_cast<double>(s.total_count);
    s.precisions[j] = s.probabilities[j] / variances[j];
  }
  return s;
}

/// Replace each variance by max(variance, floor) and refresh the precisions.
inline GroupSummary apply_variance_floor(GroupSummary s, double floor) {
  if (!(floor > 0.0)) throw InvalidInputError("variance floor must be positive");
  if (!s.has_variances())
    throw InvalidInputError("variance floor needs a summary with variance estimates");
  for (int j = 0; j < s.group_count; ++j) {
    s.variances[j] = std::max(s.variances[j], floor);
    s.precisions[j] = s.probabilities[j] / s.variances[j];
  }
  return s;
}

/// The pairwise difference operator: a J^2 x J matrix with
/// Delta = (I_J (x) ones_J) - (ones_J (x) I_J), so (Delta mu) stacks mu_k - mu_j
/// in row-major (k, j) order and Delta * ones = 0.
struct DeltaOperator {
  int group_count = 0;
  MatrixXd full;  // J^2 x J

  /// The k-th J x J partition; (partition(k) * mu)_j = mu_k - mu_j.
  [[nodiscard]] Eigen::Block<const MatrixXd> partition(int k) const {
    return full.block(k * group_count, 0, group_count, group_count);
  }
};

inline DeltaOperator delta_operator(int group_count) {
  if (group_count < 2) throw InvalidInputError("delta_operator: need J >= 2");
  const int J = group_count;
  DeltaOperator d;
  d.group_count = J;
  d.full = MatrixXd::Zero(J * J, J);
  for (int k = 0; k < J; ++k)
    for (int j = 0; j < J; ++j) {
      d.full(k * J + j, k) += 1.0;
      d.full(k * J + j, j) -= 1.0;
    }
  return d;
}

}  // namespace pcs
