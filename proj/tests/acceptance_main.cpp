// Acceptance suite: one pass/fail line per criterion, every tolerance pinned.
// --scale ci   : CI-sized simulation runs (criterion 5 thresholds relaxed 0.05)
// --scale full : the full-scale runs (R = 5000 everywhere)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pcs/pcs_all.hpp"
#include "support/test_oracles.hpp"

using namespace pcs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int g_threads = default_thread_count();

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
  }
  void note(const std::string& what) { notes.push_back("       " + what); }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Minimum-wage table reproduction
// ---------------------------------------------------------------------------

Criterion criterion_table71() {
  Criterion c{1, "minimum-wage study reproduction (OLS exact, PCS within 0.05/0.1)"};
  struct Panel {
    const char* name;
    double ols_means[4];  // NJ_before, NJ_after, PEN_before, PEN_after
    double ols_did;
    double ols_did_tol;
    double pcs_means[4];
    double pcs_did;
    double tol;
  };
  // Wendys OLS DiD: exact arithmetic on the published 2-decimal cell means
  // gives 3.34; the study's unrounded data give 3.35. The rounding bound on a
  // four-term difference of 2-decimal inputs is 0.02.
  const std::vector<Panel> panels{
      {"all_chains", {20.44, 21.03, 23.33, 21.17}, 2.75, 0.005,
       {20.53, 21.01, 22.87, 21.12}, 2.22, 0.05},
      {"burger_king", {22.16, 23.63, 29.42, 26.22}, 4.67, 0.005,
       {22.25, 23.63, 29.06, 26.06}, 4.38, 0.05},
      {"kfc", {12.79, 13.73, 10.71, 13.00}, -1.35, 0.005,
       {12.76, 13.60, 10.92, 12.96}, -1.20, 0.05},
      {"roys", {23.14, 21.73, 19.74, 15.81}, 2.52, 0.005,
       {22.99, 21.68, 19.80, 16.12}, 2.37, 0.05},
      {"wendys", {22.08, 23.40, 24.12, 22.10}, 3.35, 0.015,
       {22.43, 23.10, 23.46, 22.44}, 1.69, 0.10},
  };
  for (const Panel& p : panels) {
    std::ifstream in(std::string(PCS_DATA_DIR) + "/card_krueger_table_a1.csv");
    const std::vector<SummaryCell> cells = read_summary_cells(in, p.name);
    const DiDReport ols_fit = did_from_summary(cells, DidMethod::ols);
    const DiDReport pcs_fit = did_from_summary(cells, DidMethod::pcs);
    const double ols_got[4] = {ols_fit.nj_before, ols_fit.nj_after, ols_fit.pen_before,
                               ols_fit.pen_after};
    const double pcs_got[4] = {pcs_fit.nj_before, pcs_fit.nj_after, pcs_fit.pen_before,
                               pcs_fit.pen_after};
    bool means_ok = true, pcs_ok = true;
    for (int i = 0; i < 4; ++i) {
      means_ok = means_ok && std::abs(ols_got[i] - p.ols_means[i]) < 0.005;
      pcs_ok = pcs_ok && std::abs(pcs_got[i] - p.pcs_means[i]) < p.tol;
    }
    c.check(means_ok, std::string(p.name) + ": OLS means exact at 2 decimals");
    c.check(std::abs(ols_fit.did - p.ols_did) < p.ols_did_tol,
            std::string(p.name) + ": OLS DiD " + fmt(ols_fit.did) + " vs " + fmt(p.ols_did));
    c.check(pcs_ok, std::string(p.name) + ": PCS means within " + fmt(p.tol));
    c.check(std::abs(pcs_fit.did - p.pcs_did) < p.tol,
            std::string(p.name) + ": PCS DiD " + fmt(pcs_fit.did) + " vs " + fmt(p.pcs_did));
  }
  return c;
}

// ---------------------------------------------------------------------------
// 2. Closed forms vs brute force
// ---------------------------------------------------------------------------

Criterion criterion_closed_forms() {
  Criterion c{2, "closed-form weights vs independent quadratic minimizers (200 instances)"};
  std::mt19937 gen(20240517);
  std::uniform_real_distribution<double> mu_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> var_dist(0.3, 4.0);
  std::uniform_int_distribution<int> j_dist(2, 5);
  double worst_rel = 0.0, worst_fit = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int J = j_dist(gen);
    VectorXd mu(J), sigma2(J), p(J);
    for (int j = 0; j < J; ++j) {
      mu[j] = mu_dist(gen);
      sigma2[j] = var_dist(gen);
      p[j] = 0.5 + std::generate_canonical<double, 53>(gen);
    }
    p /= p.sum();
    const double n = 50.0 + 400.0 * std::generate_canonical<double, 53>(gen);
    const VectorXd gamma = p.array() / sigma2.array();

    // oracle weights: objective vs the KKT solve of the constrained program
    const WeightMatrix w = oracle_weights(mu, gamma, n);
    for (int k = 0; k < J; ++k) {
      const MatrixXd h = pcs::testing::group_mse_matrix(mu, gamma, n, k);
      const VectorXd direct = pcs::testing::constrained_quadratic_min(h);
      const double closed_val = w.omega.row(k) * h * w.omega.row(k).transpose();
      const double direct_val = direct.transpose() * h * direct;
      worst_rel = std::max(worst_rel, (closed_val - direct_val) / std::max(direct_val, 1e-300));
    }

    // penalized fit: closed form vs direct minimization of the raw objective
    GroupedSample sample;
    sample.group_count = J;
    std::uniform_int_distribution<int> size_dist(3, 12);
    for (int j = 0; j < J; ++j) {
      const int nj = size_dist(gen);
      for (int i = 0; i < nj; ++i) {
        sample.outcomes.push_back(mu[j] + mu_dist(gen));
        sample.groups.push_back(j);
      }
    }
    const GroupSummary sum = summarize(sample, VarianceMode::means_only);
    MatrixXd lam(J, J);
    for (int k = 0; k < J; ++k) {
      for (int j = 0; j < J; ++j)
        lam(k, j) = (j == k) ? 0.0 : -0.3 + 3.3 * std::generate_canonical<double, 53>(gen);
      const double row = lam.row(k).sum();
      if (row <= -static_cast<double>(sum.counts[k]) + 0.5) lam.row(k).setZero();
    }
    const PcsEstimate fit = pcs_from_penalties(sum, PenaltyMatrix{lam});
    auto objective = [&](const VectorXd& m) {
      return pcs::testing::raw_penalized_objective(sample, lam, sum.means, m);
    };
    const VectorXd direct = pcs::testing::coordinate_parabola_min(objective, sum.means);
    worst_fit = std::max(worst_fit, (direct - fit.mu).cwiseAbs().maxCoeff());
  }
  c.check(worst_rel <= 1e-9,
          "oracle-weight objective within 1e-9 relative of the KKT solve (worst " +
              fmt(worst_rel) + ")");
  c.check(worst_fit <= 1e-8,
          "penalized fit matches the raw-objective minimizer to 1e-8 (worst " + fmt(worst_fit) +
              ")");
  return c;
}

// ---------------------------------------------------------------------------
// 3. lambda <-> omega round trip
// ---------------------------------------------------------------------------

Criterion criterion_round_trip() {
  Criterion c{3, "weights -> penalties -> weights round trip (1000 matrices, 1e-10)"};
  std::mt19937 gen(99991);
  std::uniform_real_distribution<double> off(-0.4, 0.7);
  std::uniform_int_distribution<int> j_dist(2, 6);
  std::uniform_int_distribution<int> size_dist(2, 40);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int J = j_dist(gen);
    GroupedSample sample;
    sample.group_count = J;
    for (int j = 0; j < J; ++j) {
      const int nj = size_dist(gen);
      for (int i = 0; i < nj; ++i) {
        sample.outcomes.push_back(j + 0.25 * i);
        sample.groups.push_back(j);
      }
    }
    const GroupSummary sum = summarize(sample, VarianceMode::means_only);
    MatrixXd w(J, J);
    for (int k = 0; k < J; ++k) {
      double row = 0.0;
      for (int j = 0; j < J; ++j)
        if (j != k) {
          w(k, j) = off(gen);
          row += w(k, j);
        }
      w(k, k) = 1.0 - row;
      if (std::abs(w(k, k)) < 0.05 || w(k, k) < 0.0) {
        w.row(k).setZero();
        w(k, k) = 1.0;
      }
    }
    const PenaltyMatrix lam = penalties_from_weights(WeightMatrix{w}, sum);
    const PcsEstimate back = pcs_from_penalties(sum, lam);
    worst = std::max(worst, (back.weights.omega - w).cwiseAbs().maxCoeff());
  }
  c.check(worst <= 1e-10, "worst round-trip deviation " + fmt(worst));
  return c;
}

// ---------------------------------------------------------------------------
// 4. Dominance matrix definiteness
// ---------------------------------------------------------------------------

Criterion criterion_dominance_matrix() {
  Criterion c{4, "closed-form -C is PSD for J in 4..10 and not PSD at J = 3"};
  std::mt19937 gen(321);
  std::uniform_real_distribution<double> g(0.05, 8.0);
  for (int J = 4; J <= 10; ++J) {
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      VectorXd gamma = VectorXd::NullaryExpr(J, [&](int) { return g(gen); });
      worst = std::min(worst, dominance_matrix_check(gamma).min_eigenvalue);
    }
    c.check(worst >= -1e-8, "J = " + std::to_string(J) + ": min eigenvalue over 100 draws " +
                                fmt(worst));
  }
  double best3 = -1e300;
  for (int rep = 0; rep < 100; ++rep) {
    VectorXd gamma = VectorXd::NullaryExpr(3, [&](int) { return g(gen); });
    best3 = std::max(best3, dominance_matrix_check(gamma).min_eigenvalue);
  }
  c.check(best3 < -1e-8, "J = 3: min eigenvalue stays negative (max over draws " + fmt(best3) +
                             ")");
  return c;
}

// ---------------------------------------------------------------------------
// 5. Uniform dominance at desk scale
// ---------------------------------------------------------------------------

Criterion criterion_dominance_simulation(bool full) {
  const long R = full ? 5000 : 500;
  const double relax = full ? 0.0 : 0.05;
  Criterion c{5, std::string("plug-in dominance over the design grid (R = ") +
                     std::to_string(R) + ")"};
  const std::vector<Method> methods{Method::ols, Method::pcs, Method::rr,
                                    Method::grr, Method::kernel, Method::cp};
  double min_pcs = 1e300, max_pcs = -1e300, rr_at_zero_a_hom = 1e300, max_cp_bc = -1e300;
  for (DesignTag tag : {DesignTag::A, DesignTag::B, DesignTag::C}) {
    for (bool het : {false, true}) {
      const DesignSpec spec = design_local(tag, het, 400, R, 20240601);
      const auto t0 = std::chrono::steady_clock::now();
      const SimulationResult result = run_design(spec, methods, g_threads);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      double design_max_pcs = -1e300;
      for (std::size_t d = 0; d < result.by_delta.size(); ++d) {
        const double pcs_rel = result.rel_wmse(d, Method::pcs);
        min_pcs = std::min(min_pcs, pcs_rel);
        max_pcs = std::max(max_pcs, pcs_rel);
        design_max_pcs = std::max(design_max_pcs, pcs_rel);
        if (tag != DesignTag::A)
          max_cp_bc = std::max(max_cp_bc, result.rel_wmse(d, Method::cp));
      }
      if (tag == DesignTag::A && !het)
        rr_at_zero_a_hom = result.rel_wmse(0, Method::rr);
      c.note(spec.label + ": max PCS rel WMSE " + fmt(design_max_pcs) + "  (" + fmt(secs) +
             " s)");
    }
  }
  c.check(max_pcs <= 1.02 + relax,
          "PCS relative WMSE <= " + fmt(1.02 + relax) + " at every grid point (max " +
              fmt(max_pcs) + ")");
  c.check(min_pcs <= 0.80 + relax,
          "min PCS relative WMSE <= " + fmt(0.80 + relax) + " in some design (min " +
              fmt(min_pcs) + ")");
  c.check(rr_at_zero_a_hom <= 0.60 + relax,
          "RR at delta = 0, design A <= " + fmt(0.60 + relax) + " (got " +
              fmt(rr_at_zero_a_hom) + ")");
  c.check(max_cp_bc > 1.2 - relax,
          "Cp exceeds " + fmt(1.2 - relax) + " somewhere in design B or C (max " +
              fmt(max_cp_bc) + ")");
  return c;
}

// ---------------------------------------------------------------------------
// 6. Oracle ordering
// ---------------------------------------------------------------------------

Criterion criterion_oracle_ordering() {
  Criterion c{6, "oracle PCS lies weakly below oracle Kernel/GRR/RR (R = 5000)"};
  const std::vector<Method> methods{Method::ols, Method::pcs, Method::rr, Method::grr,
                                    Method::kernel};
  for (DesignTag tag : {DesignTag::A, DesignTag::B, DesignTag::C}) {
    const DesignSpec spec = design_unscaled(tag, 400, 5000, 20240602);
    const SimulationResult result = run_oracle_design(spec, methods, g_threads);
    double worst_violation = -1e300;
    std::string worst_where;
    for (std::size_t d = 0; d < result.by_delta.size(); ++d) {
      for (Method m : {Method::rr, Method::grr, Method::kernel}) {
        const double gap = result.rel_wmse(d, Method::pcs) - result.rel_wmse(d, m);
        const double slack = 2.0 * result.rel_diff_se(d, Method::pcs, m);
        if (gap - slack > worst_violation) {
          worst_violation = gap - slack;
          worst_where = std::string(method_name(m)) + " at delta " +
                        fmt(result.by_delta[d].delta);
        }
      }
    }
    c.check(worst_violation <= 0.0, spec.label + ": worst excess over 2 MC s.e. " +
                                        fmt(worst_violation) + " (" + worst_where + ")");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 7. Asymptotic-risk consistency
// ---------------------------------------------------------------------------

Criterion criterion_asymptotic_risk(bool full) {
  Criterion c{7, "asymptotic risk: distant limit, origin dominance, empirical match"};
  RiskInputs in;
  in.mu = VectorXd::Zero(4);
  in.sigma2 = VectorXd::Constant(4, 1.0);
  in.p = VectorXd::Constant(4, 0.25);
  in.n = 4000.0;

  VectorXd far = VectorXd::Zero(4);
  far[3] = 1e6;
  const RiskEstimate distant = asymptotic_risk_pcs(in, far, 400000, 71, g_threads);
  c.check(std::abs(distant.value - distant.ols_risk) <= 3.0 * distant.std_error + 1e-9,
          "|risk - tr(WV0)| at ||delta|| = 1e6: " + fmt(std::abs(distant.value - 4.0)) +
              " <= 3 se = " + fmt(3.0 * distant.std_error));

  const RiskEstimate origin = asymptotic_risk_pcs(in, VectorXd::Zero(4), 400000, 72, g_threads);
  c.check(origin.value + 3.0 * origin.std_error < 4.0,
          "risk at the origin " + fmt(origin.value) + " + 3 se < 4");

  // empirical trimmed scaled loss of the plug-in PCS, Gaussian errors;
  // the default trimming constant is 1e4, with sensitivity reported at
  // 1e3 and 1e5 alongside
  const long R = full ? 4000 : 1500;
  const double zeta = 1e4;
  const double zeta_lo = 1e3, zeta_hi = 1e5;
  for (double shift : {0.0, 2.0, 5.0}) {
    VectorXd delta = VectorXd::Zero(4);
    delta[3] = shift;
    const RiskEstimate theory = asymptotic_risk_pcs(in, delta, 2000000, 73, g_threads);

    DesignSpec spec;
    spec.tag = DesignTag::custom;
    spec.label = "risk-check";
    spec.group_count = 4;
    spec.sqrt_n_scaling = true;
    spec.custom_mu_direction = VectorXd{{0, 0, 0, 1}};
    spec.sigma2 = in.sigma2;
    spec.probabilities = in.p;
    spec.error_family = ErrorFamily::gaussian;
    spec.n = 4000;
    spec.replications = R;
    spec.seed = 74;
    spec.variance_mode = VarianceMode::per_group;
    spec.delta_grid = {shift};
    const VectorXd mu_true = spec.mu_at(shift);
    const VectorXd gamma = spec.gamma();

    const std::size_t chunk = 16;
    const std::size_t n_chunks = (static_cast<std::size_t>(R) + chunk - 1) / chunk;
    std::vector<double> sums(n_chunks, 0.0), sq(n_chunks, 0.0);
    std::vector<double> sums_lo(n_chunks, 0.0), sums_hi(n_chunks, 0.0);
    parallel_chunks(static_cast<std::size_t>(R), chunk, g_threads,
                    [&](std::size_t ci, std::size_t begin, std::size_t end) {
                      double s = 0.0, s2 = 0.0, lo = 0.0, hi = 0.0;
                      for (std::size_t r = begin; r < end; ++r) {
                        const GroupSummary sum = summarize(
                            generate_sample(spec, 0, static_cast<long>(r)),
                            VarianceMode::per_group);
                        const PcsEstimate fit = pcs_plugin(sum);
                        const double scaled = static_cast<double>(spec.n) *
                                              weighted_loss(fit.mu, mu_true, gamma);
                        const double loss = std::min(scaled, zeta);
                        s += loss;
                        s2 += loss * loss;
                        lo += std::min(scaled, zeta_lo);
                        hi += std::min(scaled, zeta_hi);
                      }
                      sums[ci] = s;
                      sq[ci] = s2;
                      sums_lo[ci] = lo;
                      sums_hi[ci] = hi;
                    });
    double total = 0.0, total_sq = 0.0, total_lo = 0.0, total_hi = 0.0;
    for (std::size_t i = 0; i < n_chunks; ++i) {
      total += sums[i];
      total_sq += sq[i];
      total_lo += sums_lo[i];
      total_hi += sums_hi[i];
    }
    const double mean = total / R;
    const double sd = std::sqrt(std::max(0.0, total_sq / R - mean * mean));
    const double se = sd / std::sqrt(static_cast<double>(R));
    const double combined = std::sqrt(se * se + theory.std_error * theory.std_error);
    c.check(std::abs(mean - theory.value) <= 3.0 * combined,
            "delta = " + fmt(shift) + " e4: empirical " + fmt(mean) + " vs theory " +
                fmt(theory.value) + " (3 combined se = " + fmt(3.0 * combined) + ")");
    c.note("  trimming sensitivity at delta = " + fmt(shift) + " e4: zeta 1e3 -> " +
           fmt(total_lo / R) + ", 1e4 -> " + fmt(mean) + ", 1e5 -> " + fmt(total_hi / R));
  }
  return c;
}

// ---------------------------------------------------------------------------
// 8. Distributional checks
// ---------------------------------------------------------------------------

struct AdFixture {
  DesignSpec spec;
  VectorXd mu;
  int k = 3;
};

AdFixture close_fixture(long n, long reps) {
  AdFixture f;
  f.spec.tag = DesignTag::custom;
  f.spec.label = "close";
  f.spec.group_count = 4;
  f.spec.sqrt_n_scaling = true;
  f.spec.custom_mu_direction = VectorXd{{0, 0, 0, 1}};
  f.spec.sigma2 = VectorXd::Constant(4, 1.0);
  f.spec.probabilities = VectorXd::Constant(4, 0.25);
  f.spec.error_family = ErrorFamily::gaussian;
  f.spec.n = n;
  f.spec.replications = reps;
  f.spec.seed = 808;
  f.spec.variance_mode = VarianceMode::per_group;
  f.spec.delta_grid = {5.0};
  f.mu = f.spec.mu_at(5.0);
  return f;
}

AdFixture distant_fixture(long n, long reps) {
  AdFixture f;
  f.spec.tag = DesignTag::custom;
  f.spec.label = "distant";
  f.spec.group_count = 4;
  f.spec.sqrt_n_scaling = false;
  f.spec.custom_mu_direction = VectorXd{{0, 1, 2, 3}};
  f.spec.sigma2 = VectorXd::Constant(4, 1.0);
  f.spec.probabilities = VectorXd::Constant(4, 0.25);
  f.spec.error_family = ErrorFamily::gaussian;
  f.spec.n = n;
  f.spec.replications = reps;
  f.spec.seed = 909;
  f.spec.variance_mode = VarianceMode::per_group;
  f.spec.delta_grid = {1.0};
  f.mu = f.spec.mu_at(1.0);
  return f;
}

Criterion criterion_distributional() {
  Criterion c{8, "limit distributions: fixed-lambda normal everywhere, plug-in only distant"};
  const long reps = 5000;
  MatrixXd lam = MatrixXd::Constant(4, 4, 2.0);
  lam.diagonal().setZero();

  auto fixed_scores = [&](const AdFixture& f) {
    const int k = f.k;
    const double npk = static_cast<double>(f.spec.n) * f.spec.probabilities[k];
    const double denom = npk + lam.row(k).sum();
    VectorXd wf(4);
    for (int j = 0; j < 4; ++j) wf[j] = (j == k) ? npk / denom : lam(k, j) / denom;
    double bias = 0.0, var_exact = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j != k) bias += wf[j] * (f.mu[j] - f.mu[k]);
      var_exact += wf[j] * wf[j] * f.spec.sigma2[j] / f.spec.probabilities[j];
    }
    std::vector<double> z(reps);
    const double root_n = std::sqrt(static_cast<double>(f.spec.n));
    parallel_chunks(reps, 64, g_threads, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        const GroupSummary sum = summarize(generate_sample(f.spec, 0, static_cast<long>(r)),
                                           VarianceMode::per_group);
        const PcsEstimate fit = pcs_from_penalties(sum, PenaltyMatrix{lam});
        z[r] = root_n * (fit.mu[k] - f.mu[k] - bias) / std::sqrt(var_exact);
      }
    });
    return z;
  };

  auto plugin_scores = [&](const AdFixture& f, bool center_at_limit) {
    const int k = f.k;
    double bias = 0.0;
    if (center_at_limit) {
      const WeightMatrix limit = distant_limit_weights(f.mu, f.spec.gamma());
      for (int j = 0; j < 4; ++j) bias += limit.omega(k, j) * (f.mu[j] - f.mu[k]);
    }
    std::vector<double> z(reps);
    const double root_n = std::sqrt(static_cast<double>(f.spec.n));
    const double scale = std::sqrt(f.spec.sigma2[k] / f.spec.probabilities[k]);
    parallel_chunks(reps, 64, g_threads, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        const GroupSummary sum = summarize(generate_sample(f.spec, 0, static_cast<long>(r)),
                                           VarianceMode::per_group);
        const PcsEstimate fit = pcs_plugin(sum);
        z[r] = root_n * (fit.mu[k] - f.mu[k] - bias) / scale;
      }
    });
    return z;
  };

  const AdFixture close_f = close_fixture(400, reps);
  const AdFixture distant_f = distant_fixture(10000, reps);
  const double crit = pcs::testing::ad_critical_1pct;

  const double ad_fixed_close = pcs::testing::anderson_darling_normal(fixed_scores(close_f));
  c.check(ad_fixed_close < crit, "fixed-lambda, close fixture: A2 = " + fmt(ad_fixed_close) +
                                     " < " + fmt(crit));
  const double ad_fixed_distant =
      pcs::testing::anderson_darling_normal(fixed_scores(distant_f));
  c.check(ad_fixed_distant < crit, "fixed-lambda, distant fixture: A2 = " +
                                       fmt(ad_fixed_distant) + " < " + fmt(crit));
  const double ad_plug_distant =
      pcs::testing::anderson_darling_normal(plugin_scores(distant_f, true));
  c.check(ad_plug_distant < crit,
          "plug-in, distant fixture: A2 = " + fmt(ad_plug_distant) + " < " + fmt(crit));
  const double ad_plug_close =
      pcs::testing::anderson_darling_normal(plugin_scores(close_f, false));
  c.check(ad_plug_close > crit, "plug-in, close fixture (delta != 0): A2 = " +
                                    fmt(ad_plug_close) + " > " + fmt(crit));
  return c;
}

// ---------------------------------------------------------------------------
// 9. Determinism
// ---------------------------------------------------------------------------

Criterion criterion_determinism() {
  Criterion c{9, "simulate and risk outputs byte-identical across runs and thread counts"};
  DesignSpec spec = design_local(DesignTag::A, true, 400, 200, 4242);
  spec.delta_grid = {0.0, 2.0, 8.0};
  const std::vector<Method> methods{Method::ols, Method::pcs, Method::kernel, Method::cp};
  std::string first;
  bool sim_ok = true;
  for (int threads : {1, 2, g_threads}) {
    for (int run = 0; run < 2; ++run) {
      std::ostringstream out;
      write_simulation_csv(run_design(spec, methods, threads), out,
                           {"seed: 4242", "threads-invariant"});
      if (first.empty()) first = out.str();
      sim_ok = sim_ok && (out.str() == first);
    }
  }
  c.check(sim_ok, "simulation CSV identical over 2 runs x {1, 2, " +
                      std::to_string(g_threads) + "} threads");

  RiskInputs in;
  in.mu = VectorXd::Zero(4);
  in.sigma2 = VectorXd::Constant(4, 1.0);
  in.p = VectorXd::Constant(4, 0.25);
  in.n = 400.0;
  VectorXd delta(4);
  delta << 0, 1, 2, 3;
  const RiskEstimate a = asymptotic_risk_pcs(in, delta, 100000, 5150, 1);
  bool risk_ok = true;
  for (int threads : {1, 2, g_threads}) {
    const RiskEstimate b = asymptotic_risk_pcs(in, delta, 100000, 5150, threads);
    risk_ok = risk_ok && b.value == a.value && b.std_error == a.std_error;
  }
  c.check(risk_ok, "risk estimate bitwise identical across thread counts");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--scale") == 0 && i + 1 < argc) {
      full = std::strcmp(argv[i + 1], "full") == 0;
      ++i;
    } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
      g_threads = std::atoi(argv[i + 1]);
      ++i;
    } else {
      std::fprintf(stderr, "usage: pcs_acceptance [--scale ci|full] [--threads N]\n");
      return 2;
    }
  }
  std::printf("acceptance scale: %s, threads: %d\n", full ? "full" : "ci", g_threads);

  std::vector<Criterion> results;
  const auto t0 = std::chrono::steady_clock::now();
  results.push_back(criterion_table71());
  results.push_back(criterion_closed_forms());
  results.push_back(criterion_round_trip());
  results.push_back(criterion_dominance_matrix());
  results.push_back(criterion_dominance_simulation(full));
  results.push_back(criterion_oracle_ordering());
  results.push_back(criterion_asymptotic_risk(full));
  results.push_back(criterion_distributional());
  results.push_back(criterion_determinism());
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  int failures = 0;
  for (const Criterion& c : results) {
    std::printf("[%s] criterion %d: %s\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str());
    for (const std::string& note : c.notes) std::printf("%s\n", note.c_str());
    if (!c.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(results.size()) - failures,
              results.size(), total);
  return failures == 0 ? 0 : 1;
}
