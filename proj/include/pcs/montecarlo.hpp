#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/group_data.hpp"
#include "pcs/parallel.hpp"
#include "pcs/pcs.hpp"
#include "pcs/risk.hpp"
#include "pcs/rivals.hpp"
#include "pcs/rng.hpp"

namespace pcs {

enum class Method { ols, pcs, rr, grr, kernel, cp };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::ols: return "ols";
    case Method::pcs: return "pcs";
    case Method::rr: return "rr";
    case Method::grr: return "grr";
    case Method::kernel: return "kernel";
    case Method::cp: return "cp";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& name) {
  if (name == "ols") return Method::ols;
  if (name == "pcs") return Method::pcs;
  if (name == "rr") return Method::rr;
  if (name == "grr") return Method::grr;
  if (name == "kernel") return Method::kernel;
  if (name == "cp") return Method::cp;
  return std::nullopt;
}

enum class ErrorFamily { gaussian, standardized_lognormal };

inline const char* error_family_name(ErrorFamily f) {
  return f == ErrorFamily::gaussian ? "gaussian" : "lognormal";
}

enum class DesignTag { A, B, C, custom };

/// A Monte Carlo data-generating design: group means mu(delta, n), variances,
/// selection probabilities, error family, sample size and replication plan.
struct DesignSpec {
  std::string label = "custom";
  DesignTag tag = DesignTag::custom;
  int group_count = 4;
  bool sqrt_n_scaling = true;      // true: sqrt(n) mu = rule(delta); false: mu = rule(delta)
  VectorXd custom_mu_direction;    // used when tag == custom: rule(delta) = delta * direction
  VectorXd sigma2;
  VectorXd probabilities;
  ErrorFamily error_family = ErrorFamily::standardized_lognormal;
  long n = 400;
  std::vector<double> delta_grid;
  long replications = 5000;
  std::uint64_t seed = 0;
  VarianceMode variance_mode = VarianceMode::per_group;

  void validate() const {
    const int J = group_count;
    if (J < 2) throw InvalidInputError("DesignSpec: need J >= 2");
    if (tag != DesignTag::custom && J != 4)
      throw InvalidInputError("DesignSpec: designs A/B/C are four-group designs");
    if (tag == DesignTag::custom && custom_mu_direction.size() != J)
      throw InvalidInputError("DesignSpec: custom design needs a mean direction of length J");
    if (sigma2.size() != J || probabilities.size() != J)
      throw InvalidInputError("DesignSpec: sigma2 and probabilities must have length J");
    double psum = 0.0;
    for (int j = 0; j < J; ++j) {
      if (!(probabilities[j] > 0.0))
        throw InvalidInputError("DesignSpec: selection probabilities must be positive");
      if (!(sigma2[j] > 0.0)) throw InvalidInputError("DesignSpec: variances must be positive");
      psum += probabilities[j];
    }
    if (std::abs(psum - 1.0) > 1e-8)
      throw InvalidInputError("DesignSpec: probabilities sum to " + std::to_string(psum));
    if (n < 2) throw InvalidInputError("DesignSpec: n too small");
    if (replications < 1) throw InvalidInputError("DesignSpec: need R >= 1");
    if (delta_grid.empty()) throw InvalidInputError("DesignSpec: empty delta grid");
    for (double d : delta_grid)
      if (d < 0.0) throw InvalidInputError("DesignSpec: delta grid must be nonnegative");
  }

  /// The true mean vector at a grid value delta.
  [[nodiscard]] VectorXd mu_at(double delta) const {
    VectorXd rule(group_count);
    switch (tag) {
      case DesignTag::A: rule << 0, 0, 0, delta; break;
      case DesignTag::B:
        if (sqrt_n_scaling)
          rule << 0, 0, -3 * delta, delta;
        else
          rule << 0, 0, 0, delta;
        break;
      case DesignTag::C:
        if (sqrt_n_scaling)
          rule << 0, 2 * delta, -3 * delta, delta;
        else
          rule << 0, 3 * delta, -2 * delta, delta;
        break;
      case DesignTag::custom: rule = delta * custom_mu_direction; break;
    }
    return sqrt_n_scaling ? VectorXd(rule / std::sqrt(static_cast<double>(n))) : rule;
  }

  [[nodiscard]] VectorXd gamma() const {
    return probabilities.array() / sigma2.array();
  }
};

/// Local-parameter design: sqrt(n)-scaled means, log-normal errors, pooled
/// variance estimation when homoskedastic and per-group when heteroskedastic.
inline DesignSpec design_local(DesignTag tag, bool heteroskedastic, long n = 400,
                              long replications = 5000, std::uint64_t seed = 1) {
  DesignSpec s;
  s.tag = tag;
  s.label = std::string(tag == DesignTag::A ? "A" : tag == DesignTag::B ? "B" : "C") +
            (heteroskedastic ? "-het" : "-hom");
  s.group_count = 4;
  s.sqrt_n_scaling = true;
  s.sigma2 = heteroskedastic ? VectorXd{{1.0, 1.0, 1.0, 10.0}} : VectorXd{{1.0, 1.0, 1.0, 1.0}};
  s.probabilities = VectorXd::Constant(4, 0.25);
  s.error_family = ErrorFamily::standardized_lognormal;
  s.n = n;
  s.replications = replications;
  s.seed = seed;
  s.variance_mode = heteroskedastic ? VarianceMode::per_group : VarianceMode::pooled;
  for (int i = 0; i <= 40; ++i) s.delta_grid.push_back(0.5 * i);  // [0, 20]
  return s;
}

/// Unscaled variant for oracle-smoothing runs: fixed means, Gaussian errors;
/// design A is homoskedastic, designs B and C heteroskedastic.
inline DesignSpec design_unscaled(DesignTag tag, long n = 400, long replications = 5000,
                               std::uint64_t seed = 1) {
  DesignSpec s;
  s.tag = tag;
  s.label = std::string("unscaled-") +
            (tag == DesignTag::A ? "A" : tag == DesignTag::B ? "B" : "C");
  s.group_count = 4;
  s.sqrt_n_scaling = false;
  s.sigma2 = (tag == DesignTag::A) ? VectorXd{{1.0, 1.0, 1.0, 1.0}}
                                   : VectorXd{{1.0, 1.0, 1.0, 10.0}};
  s.probabilities = VectorXd::Constant(4, 0.25);
  s.error_family = ErrorFamily::gaussian;
  s.n = n;
  s.replications = replications;
  s.seed = seed;
  s.variance_mode = (tag == DesignTag::A) ? VarianceMode::pooled : VarianceMode::per_group;
  for (int i = 0; i <= 40; ++i) s.delta_grid.push_back(0.05 * i);  // [0, 2] in mean units
  return s;
}

/// Draw one replication: n iid observations, group j with probability p_j and
/// outcome mu_j + sigma_j * eps with eps mean-zero unit-variance from the
/// design's error family. Streams are keyed by (seed, delta index, replication
/// index), so any subset can be regenerated independently.
inline GroupedSample generate_sample(const DesignSpec& spec, std::size_t delta_index,
                                     long replication_index) {
  const VectorXd mu = spec.mu_at(spec.delta_grid.at(delta_index));
  RandomStream rng(spec.seed, static_cast<std::uint64_t>(delta_index),
                   static_cast<std::uint64_t>(replication_index));
  GroupedSample sample;
  sample.group_count = spec.group_count;
  sample.outcomes.resize(spec.n);
  sample.groups.resize(spec.n);
  // standardization constants of exp(W), W ~ N(0,1): mean e^{1/2}, variance e^2 - e
  const double ln_mean = std::exp(0.5);
  const double ln_sd = std::sqrt(std::exp(2.0) - std::exp(1.0));
  for (long i = 0; i < spec.n; ++i) {
    const double u = rng.next_uniform();
    int g = 0;
    double acc = spec.probabilities[0];
    while (g + 1 < spec.group_count && u > acc) acc += spec.probabilities[++g];
    double eps;
    if (spec.error_family == ErrorFamily::gaussian) {
      eps = rng.next_normal();
    } else {
      eps = (std::exp(rng.next_normal()) - ln_mean) / ln_sd;
    }
    sample.groups[i] = g;
    sample.outcomes[i] = mu[g] + std::sqrt(spec.sigma2[g]) * eps;
  }
  return sample;
}

/// Accumulated losses for one delta grid point.
struct DeltaResult {
  double delta = 0.0;
  long used_replications = 0;
  long dropped = 0;
  VectorXd mean_loss;          // per estimator
  MatrixXd loss_cross_moment;  // E[L_a L_b], per estimator pair
};

struct SimulationResult {
  std::string design_label;
  ErrorFamily error_family = ErrorFamily::gaussian;
  VarianceMode variance_mode = VarianceMode::per_group;
  long n = 0;
  long replications = 0;
  std::uint64_t seed = 0;
  bool oracle_smoothing = false;
  std::vector<Method> estimators;  // always includes ols
  std::vector<DeltaResult> by_delta;

  [[nodiscard]] int estimator_index(Method m) const {
    for (std::size_t i = 0; i < estimators.size(); ++i)
      if (estimators[i] == m) return static_cast<int>(i);
    throw InvalidInputError(std::string("estimator ") + method_name(m) + " not in result");
  }

  /// Weighted MSE relative to OLS at grid point d.
  [[nodiscard]] double rel_wmse(std::size_t d, Method m) const {
    const DeltaResult& r = by_delta.at(d);
    return r.mean_loss[estimator_index(m)] / r.mean_loss[estimator_index(Method::ols)];
  }

  /// Delta-method standard error of rel_wmse(d, m) using the paired losses.
  [[nodiscard]] double rel_wmse_se(std::size_t d, Method m) const {
    const DeltaResult& r = by_delta.at(d);
    const int a = estimator_index(m), o = estimator_index(Method::ols);
    const double R = static_cast<double>(r.used_replications);
    const double ma = r.mean_loss[a], mo = r.mean_loss[o];
    const double ratio = ma / mo;
    const double vaa = r.loss_cross_moment(a, a) - ma * ma;
    const double vao = r.loss_cross_moment(a, o) - ma * mo;
    const double voo = r.loss_cross_moment(o, o) - mo * mo;
    const double v = (vaa - 2.0 * ratio * vao + ratio * ratio * voo) * R / std::max(1.0, R - 1.0);
    return std::sqrt(std::max(0.0, v / R)) / mo;
  }

  /// Standard error of rel_wmse(d, a) - rel_wmse(d, b) under common random numbers.
  [[nodiscard]] double rel_diff_se(std::size_t d, Method ma, Method mb) const {
    const DeltaResult& r = by_delta.at(d);
    const int a = estimator_index(ma), b = estimator_index(mb), o = estimator_index(Method::ols);
    const double R = static_cast<double>(r.used_replications);
    const double mean_a = r.mean_loss[a], mean_b = r.mean_loss[b], mo = r.mean_loss[o];
    const double vaa = r.loss_cross_moment(a, a) - mean_a * mean_a;
    const double vbb = r.loss_cross_moment(b, b) - mean_b * mean_b;
    const double vab = r.loss_cross_moment(a, b) - mean_a * mean_b;
    const double v = (vaa + vbb - 2.0 * vab) * R / std::max(1.0, R - 1.0);
    return std::sqrt(std::max(0.0, v / R)) / mo;
  }
};

namespace detail {

struct ChunkAccumulator {
  VectorXd loss_sum;
  MatrixXd cross_sum;
  long used = 0;
  long dropped = 0;
};

template <typename FitFn>
SimulationResult run_simulation_loop(const DesignSpec& spec, std::vector<Method> estimators,
                                     bool oracle_mode, FitFn&& fit_all, int threads) {
  spec.validate();
  // OLS is the baseline of every relative result; put it first if absent.
  bool has_ols = false;
  for (Method m : estimators) has_ols |= (m == Method::ols);
  if (!has_ols) estimators.insert(estimators.begin(), Method::ols);

  SimulationResult result;
  result.design_label = spec.label;
  result.error_family = spec.error_family;
  result.variance_mode = spec.variance_mode;
  result.n = spec.n;
  result.replications = spec.replications;
  result.seed = spec.seed;
  result.oracle_smoothing = oracle_mode;
  result.estimators = estimators;

  const int M = static_cast<int>(estimators.size());
  const VectorXd gamma = spec.gamma();
  const std::size_t chunk_size = 32;
  const std::size_t reps = static_cast<std::size_t>(spec.replications);
  const std::size_t n_chunks = (reps + chunk_size - 1) / chunk_size;

  for (std::size_t d = 0; d < spec.delta_grid.size(); ++d) {
    const VectorXd mu_true = spec.mu_at(spec.delta_grid[d]);
    std::vector<ChunkAccumulator> slots(n_chunks);

    parallel_chunks(reps, chunk_size, threads, [&](std::size_t c, std::size_t begin,
                                                   std::size_t end) {
      ChunkAccumulator acc;
      acc.loss_sum = VectorXd::Zero(M);
      acc.cross_sum = MatrixXd::Zero(M, M);
      VectorXd losses(M);
      for (std::size_t r = begin; r < end; ++r) {
        const GroupedSample sample = generate_sample(spec, d, static_cast<long>(r));
        bool ok = true;
        try {
          fit_all(d, sample, estimators, losses, mu_true, gamma);
        } catch (const Error&) {
          ok = false;
        }
        if (!ok) {
          ++acc.dropped;
          continue;
        }
        ++acc.used;
        acc.loss_sum += losses;
        acc.cross_sum += losses * losses.transpose();
      }
      slots[c] = std::move(acc);
    });

    DeltaResult dr;
    dr.delta = spec.delta_grid[d];
    dr.mean_loss = VectorXd::Zero(M);
    dr.loss_cross_moment = MatrixXd::Zero(M, M);
    for (const ChunkAccumulator& acc : slots) {
      dr.used_replications += acc.used;
      dr.dropped += acc.dropped;
      dr.mean_loss += acc.loss_sum;
      dr.loss_cross_moment += acc.cross_sum;
    }
    if (dr.dropped * 100 >= spec.replications)
      throw Error("simulation aborted: " + std::to_string(dr.dropped) + " of " +
                  std::to_string(spec.replications) + " replications failed at delta = " +
                  std::to_string(dr.delta) + " (>= 1%)");
    dr.mean_loss /= static_cast<double>(dr.used_replications);
    dr.loss_cross_moment /= static_cast<double>(dr.used_replications);
    result.by_delta.push_back(std::move(dr));
  }
  return result;
}

}  // namespace detail

/// Plug-in simulation: every estimator re-fits its smoothing on each
/// replication's sample, all estimators see the same sample, and losses are
/// weighted by the true gamma. Reproducible bitwise for fixed (spec, seed)
/// regardless of the thread count.
inline SimulationResult run_design(const DesignSpec& spec, const std::vector<Method>& estimators,
                                   int threads = 1) {
  auto fit_all = [&spec](std::size_t /*delta_index*/, const GroupedSample& sample,
                         const std::vector<Method>& methods, VectorXd& losses,
                         const VectorXd& mu_true, const VectorXd& gamma) {
    const GroupSummary means = summarize(sample, VarianceMode::means_only);
    GroupSummary with_var;
    bool need_var = false;
    for (Method m : methods)
      need_var |= (m == Method::pcs || m == Method::rr || m == Method::grr || m == Method::kernel);
    if (need_var) with_var = summarize(sample, spec.variance_mode);
    for (std::size_t i = 0; i < methods.size(); ++i) {
      VectorXd mu;
      switch (methods[i]) {
        case Method::ols: mu = means.means; break;
        case Method::pcs: mu = pcs_plugin(with_var).mu; break;
        case Method::rr: mu = rr_plugin(with_var).mu; break;
        case Method::grr: mu = grr_plugin(with_var).mu; break;
        case Method::kernel: mu = kernel_plugin(with_var).mu; break;
        case Method::cp: mu = mallows_cp(sample).mu; break;
      }
      losses[i] = weighted_loss(mu, mu_true, gamma);
    }
  };
  return detail::run_simulation_loop(spec, estimators, false, fit_all, threads);
}

/// Oracle simulation: smoothing parameters are computed once per grid point
/// from the true (mu, sigma2, p, n) and held fixed across replications.
inline SimulationResult run_oracle_design(const DesignSpec& spec,
                                          const std::vector<Method>& estimators,
                                          int threads = 1) {
  spec.validate();
  for (Method m : estimators)
    if (m == Method::cp)
      throw InvalidInputError("run_oracle_design: Mallows Cp has no oracle smoothing variant");

  // oracle smoothing per delta; the optimal weights are mapped to their
  // penalty representation at population counts (lambda_kj = n p_k w_kj / w_kk)
  // so that every estimator is applied in its penalized form with the
  // replication's realized cell counts
  std::vector<PenaltyMatrix> pcs_penalties;
  std::vector<double> rr_lambdas;
  std::vector<VectorXd> grr_omegas, kernel_lambdas;
  for (std::size_t d = 0; d < spec.delta_grid.size(); ++d) {
    RiskInputs in;
    in.mu = spec.mu_at(spec.delta_grid[d]);
    in.sigma2 = spec.sigma2;
    in.p = spec.probabilities;
    in.n = static_cast<double>(spec.n);
    const WeightMatrix w = oracle_weights(in.mu, in.gamma(), in.n);
    const int J = spec.group_count;
    MatrixXd lam = MatrixXd::Zero(J, J);
    for (int k = 0; k < J; ++k)
      for (int j = 0; j < J; ++j)
        if (j != k) lam(k, j) = in.n * in.p[k] * w.omega(k, j) / w.omega(k, k);
    pcs_penalties.push_back(PenaltyMatrix{std::move(lam)});
    rr_lambdas.push_back(oracle_rr_lambda(in));
    grr_omegas.push_back(oracle_grr_omega(in));
    kernel_lambdas.push_back(oracle_kernel_lambda(in));
  }

  auto fit_all = [&](std::size_t d, const GroupedSample& sample,
                     const std::vector<Method>& methods, VectorXd& losses,
                     const VectorXd& mu_true, const VectorXd& gamma) {
    const GroupSummary means = summarize(sample, VarianceMode::means_only);
    for (std::size_t i = 0; i < methods.size(); ++i) {
      VectorXd mu;
      switch (methods[i]) {
        case Method::ols: mu = means.means; break;
        case Method::pcs: mu = pcs_from_penalties(means, pcs_penalties[d]).mu; break;
        case Method::rr: mu = apply_rr(means, rr_lambdas[d]); break;
        case Method::grr: mu = apply_grr_omega(means, grr_omegas[d]); break;
        case Method::kernel: mu = apply_kernel(means, kernel_lambdas[d]); break;
        case Method::cp: break;  // rejected above
      }
      losses[i] = weighted_loss(mu, mu_true, gamma);
    }
  };
  return detail::run_simulation_loop(spec, estimators, true, fit_all, threads);
}

}  // namespace pcs
