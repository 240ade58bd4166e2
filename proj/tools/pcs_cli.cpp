// Command-line front end: fit / weights / simulate / risk.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pcs/pcs_all.hpp"

using json = nlohmann::json;
using namespace pcs;

namespace {

// exit codes: 0 ok, 2 usage/config, 3 input data, 4 estimation, 5 i/o
constexpr int exit_usage = 2;
constexpr int exit_data = 3;
constexpr int exit_estimation = 4;
constexpr int exit_io = 5;

struct CliError : std::runtime_error {
  int code;
  CliError(int code_, std::string msg) : std::runtime_error(std::move(msg)), code(code_) {}
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Canonical digest of the effective invocation, embedded in every artifact.
std::string config_digest(const std::vector<std::string>& parts) {
  std::string canon;
  for (const std::string& p : parts) {
    canon += p;
    canon.push_back('\n');
  }
  return hex64(fnv1a(canon));
}

json metadata_block(const std::string& digest, std::optional<std::uint64_t> seed) {
  json m{{"tool", "pcs"}, {"version", pcs::version}, {"config_digest", digest}};
  if (seed) m["seed"] = *seed;
  return m;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw CliError(exit_io, "cannot open input file: " + path);
  return in;
}

void write_artifact(const std::string& output_path, const std::string& text) {
  if (output_path.empty() || output_path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(output_path);
  if (!out.good()) throw CliError(exit_io, "cannot open output file: " + output_path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VectorXd json_to_vector(const json& arr, const std::string& what) {
  if (!arr.is_array() || arr.empty())
    throw CliError(exit_data, what + " must be a nonempty array");
  VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw CliError(exit_data, what + " must contain numbers");
    v[static_cast<int>(i)] = arr[i].get<double>();
  }
  return v;
}

std::optional<std::uint64_t> seed_from_env() {
  const char* env = std::getenv("PCS_SEED");
  if (!env) return std::nullopt;
  try {
    return std::stoull(env);
  } catch (...) {
    throw CliError(exit_usage, "PCS_SEED is not a valid unsigned integer");
  }
}

VarianceMode parse_variance_mode(const std::string& name) {
  if (name == "per_group") return VarianceMode::per_group;
  if (name == "pooled") return VarianceMode::pooled;
  throw CliError(exit_usage, "unknown variance mode: " + name);
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOptions {
  std::string input;
  std::string output;
  std::string method = "ols";
  std::string variance_mode = "per_group";
  double variance_floor = 0.0;
  bool did = false;
  std::string panel;
  std::string blocks_path;
};

GroupSummary summarize_for_method(const LabeledSample& ls, Method method,
                                  const FitOptions& opt) {
  const bool needs_variance = method == Method::pcs || method == Method::rr ||
                              method == Method::grr || method == Method::kernel;
  GroupSummary sum = summarize(ls.sample, needs_variance
                                              ? parse_variance_mode(opt.variance_mode)
                                              : VarianceMode::means_only);
  if (needs_variance && opt.variance_floor > 0.0)
    sum = apply_variance_floor(sum, opt.variance_floor);
  return sum;
}

int run_fit(const FitOptions& opt) {
  const std::string digest = config_digest({"fit", opt.input, opt.method, opt.variance_mode,
                                            std::to_string(opt.variance_floor),
                                            opt.did ? "did" : "", opt.panel, opt.blocks_path});
  json out;
  out["metadata"] = metadata_block(digest, std::nullopt);

  if (opt.did) {
    if (opt.method != "ols" && opt.method != "pcs")
      throw CliError(exit_usage, "--did supports only --method ols or pcs");
    auto in = open_input(opt.input);
    const std::vector<SummaryCell> cells = read_summary_cells(in, opt.panel);
    const DiDReport report = did_from_summary(
        cells, opt.method == "pcs" ? DidMethod::pcs : DidMethod::ols);
    out["method"] = opt.method;
    out["cells"] = {"NJ_before", "NJ_after", "PEN_before", "PEN_after"};
    out["estimates"] = {report.nj_before, report.nj_after, report.pen_before, report.pen_after};
    out["did"] = report.did;
    write_artifact(opt.output, out.dump(2));
    return 0;
  }

  auto in = open_input(opt.input);
  const LabeledSample ls = read_grouped_csv(in);
  out["group_labels"] = ls.group_labels;
  out["metadata"]["group_order"] = "lexicographic by category tuple";

  if (!opt.blocks_path.empty()) {
    auto bin = open_input(opt.blocks_path);
    json decl = json::parse(bin, nullptr, false);
    if (decl.is_discarded() || !decl.is_object())
      throw CliError(exit_data, "block declaration must be a JSON object of label lists");
    std::vector<std::string> block_names;
    std::vector<std::vector<int>> blocks;
    for (const auto& [name, labels] : decl.items()) {
      std::vector<int> block;
      for (const auto& label : labels) {
        const auto it = std::find(ls.group_labels.begin(), ls.group_labels.end(),
                                  label.get<std::string>());
        if (it == ls.group_labels.end())
          throw CliError(exit_data, "block '" + name + "' names unknown cell '" +
                                        label.get<std::string>() + "'");
        block.push_back(static_cast<int>(it - ls.group_labels.begin()));
      }
      block_names.push_back(name);
      blocks.push_back(std::move(block));
    }
    const BlockSmoothing smoothed = blockwise_panel_smooth(ls.sample, blocks);
    out["method"] = "pcs-blockwise";
    out["estimates"] = vector_to_json(smoothed.smoothed);
    json blocks_json = json::object();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      json cells = json::array();
      for (int c : blocks[b]) cells.push_back(ls.group_labels[c]);
      blocks_json[block_names[b]] = cells;
    }
    out["blocks"] = blocks_json;
    out["warnings"] = smoothed.warnings;
    write_artifact(opt.output, out.dump(2));
    return 0;
  }

  const auto method = parse_method(opt.method);
  if (!method) throw CliError(exit_usage, "unknown method: " + opt.method);
  const GroupSummary sum = summarize_for_method(ls, *method, opt);
  out["method"] = opt.method;
  json smoothing;
  std::vector<std::string> warnings;
  VectorXd estimates;
  switch (*method) {
    case Method::ols: {
      const RivalEstimate e = ols(sum);
      estimates = e.mu;
      warnings = e.warnings;
      break;
    }
    case Method::pcs: {
      const PcsEstimate e = pcs_plugin(sum);
      estimates = e.mu;
      warnings = e.warnings;
      smoothing["omega"] = matrix_to_json(e.weights.omega);
      smoothing["lambda"] = matrix_to_json(penalties_from_weights(e.weights, sum).lambda);
      break;
    }
    case Method::rr: {
      const RivalEstimate e = rr_plugin(sum);
      estimates = e.mu;
      warnings = e.warnings;
      smoothing["lambda"] = e.rr_lambda;
      break;
    }
    case Method::grr: {
      const RivalEstimate e = grr_plugin(sum);
      estimates = e.mu;
      warnings = e.warnings;
      smoothing["omega"] = vector_to_json(e.grr_omega);
      smoothing["lambda"] = vector_to_json(e.grr_lambda);
      break;
    }
    case Method::kernel: {
      const RivalEstimate e = kernel_plugin(sum);
      estimates = e.mu;
      warnings = e.warnings;
      smoothing["lambda"] = vector_to_json(e.kernel_lambda);
      break;
    }
    case Method::cp: {
      const RivalEstimate e = mallows_cp(ls.sample);
      estimates = e.mu;
      warnings = e.warnings;
      smoothing["partition"] = e.partition;
      smoothing["criterion"] = e.criterion;
      break;
    }
  }
  out["estimates"] = vector_to_json(estimates);
  out["smoothing"] = smoothing.is_null() ? json(nullptr) : smoothing;
  out["warnings"] = warnings;
  write_artifact(opt.output, out.dump(2));
  return 0;
}

// ---------------------------------------------------------------------------
// weights
// ---------------------------------------------------------------------------

struct WeightsOptions {
  std::string input;
  std::string output;
  std::string method = "pcs";
  std::string lambda_path;  // user-supplied penalties; plug-in weights otherwise
  std::string variance_mode = "per_group";
  double variance_floor = 0.0;
};

int run_weights(const WeightsOptions& opt) {
  if (opt.method != "pcs")
    throw CliError(exit_usage, "weights supports only --method pcs (plug-in or --lambda)");
  const std::string digest = config_digest(
      {"weights", opt.input, opt.lambda_path, opt.variance_mode,
       std::to_string(opt.variance_floor)});
  auto in = open_input(opt.input);
  const LabeledSample ls = read_grouped_csv(in);
  const int J = ls.sample.group_count;

  json out;
  out["metadata"] = metadata_block(digest, std::nullopt);
  out["metadata"]["group_order"] = "lexicographic by category tuple";
  out["group_labels"] = ls.group_labels;

  WeightMatrix omega;
  PenaltyMatrix lambda;
  if (opt.lambda_path.empty()) {
    GroupSummary sum = summarize(ls.sample, parse_variance_mode(opt.variance_mode));
    if (opt.variance_floor > 0.0) sum = apply_variance_floor(sum, opt.variance_floor);
    omega = plugin_weights(sum);
    lambda = penalties_from_weights(omega, sum);
    out["mode"] = "plug-in";
  } else {
    auto lin = open_input(opt.lambda_path);
    json decl = json::parse(lin, nullptr, false);
    if (decl.is_discarded() || !decl.is_array())
      throw CliError(exit_data, "penalty file must be a JSON array of J rows of J numbers");
    MatrixXd lam(J, J);
    if (static_cast<int>(decl.size()) != J)
      throw CliError(exit_data, "penalty matrix must have one row per cell (" +
                                    std::to_string(J) + ")");
    for (int k = 0; k < J; ++k)
      lam.row(k) = json_to_vector(decl[k], "penalty row").transpose();
    const GroupSummary sum = summarize(ls.sample, VarianceMode::means_only);
    const PcsEstimate fit = pcs_from_penalties(sum, PenaltyMatrix{lam});
    omega = fit.weights;
    lambda = PenaltyMatrix{lam};
    out["mode"] = "fixed-lambda";
  }
  out["omega"] = matrix_to_json(omega.omega);
  out["lambda"] = matrix_to_json(lambda.lambda);
  write_artifact(opt.output, out.dump(2));
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string config_path;
  std::string output;
  int threads = 0;
  std::optional<std::uint64_t> seed_override;
};

DesignSpec design_from_config(const json& cfg) {
  const std::string design = cfg.value("design", "custom");
  const bool heteroskedastic = cfg.value("heteroskedastic", false);
  DesignSpec spec;
  if (design == "A" || design == "B" || design == "C") {
    const DesignTag tag = design == "A" ? DesignTag::A : design == "B" ? DesignTag::B
                                                                       : DesignTag::C;
    spec = design_local(tag, heteroskedastic);
  } else if (design == "unscaled-A" || design == "unscaled-B" || design == "unscaled-C") {
    const DesignTag tag = design == "unscaled-A" ? DesignTag::A
                          : design == "unscaled-B" ? DesignTag::B : DesignTag::C;
    spec = design_unscaled(tag);
  } else if (design == "custom") {
    spec.tag = DesignTag::custom;
    spec.label = cfg.value("label", "custom");
    if (!cfg.contains("mu_direction"))
      throw CliError(exit_data, "custom design needs mu_direction");
    spec.custom_mu_direction = json_to_vector(cfg.at("mu_direction"), "mu_direction");
    spec.group_count = static_cast<int>(spec.custom_mu_direction.size());
    spec.sqrt_n_scaling = cfg.value("sqrt_n_scaling", true);
    if (cfg.contains("sigma2")) spec.sigma2 = json_to_vector(cfg.at("sigma2"), "sigma2");
    else spec.sigma2 = VectorXd::Constant(spec.group_count, 1.0);
    if (cfg.contains("probabilities"))
      spec.probabilities = json_to_vector(cfg.at("probabilities"), "probabilities");
    else
      spec.probabilities = VectorXd::Constant(spec.group_count, 1.0 / spec.group_count);
  } else {
    throw CliError(exit_data, "unknown design: " + design);
  }

  if (cfg.contains("sigma2") && design != "custom")
    spec.sigma2 = json_to_vector(cfg.at("sigma2"), "sigma2");
  if (cfg.contains("error_family")) {
    const std::string fam = cfg.at("error_family").get<std::string>();
    if (fam == "gaussian") spec.error_family = ErrorFamily::gaussian;
    else if (fam == "lognormal") spec.error_family = ErrorFamily::standardized_lognormal;
    else throw CliError(exit_data, "unknown error_family: " + fam);
  }
  if (cfg.contains("variance_mode"))
    spec.variance_mode = parse_variance_mode(cfg.at("variance_mode").get<std::string>());
  spec.n = cfg.value("n", spec.n);
  spec.replications = cfg.value("replications", spec.replications);
  if (cfg.contains("delta_grid")) {
    spec.delta_grid.clear();
    const json& grid = cfg.at("delta_grid");
    if (grid.is_array()) {
      for (const auto& v : grid) spec.delta_grid.push_back(v.get<double>());
    } else if (grid.is_object()) {
      const double start = grid.at("start").get<double>();
      const double stop = grid.at("stop").get<double>();
      const int points = grid.at("points").get<int>();
      if (points < 1) throw CliError(exit_data, "delta_grid.points must be >= 1");
      for (int i = 0; i < points; ++i)
        spec.delta_grid.push_back(points == 1 ? start
                                              : start + (stop - start) * i / (points - 1.0));
    } else {
      throw CliError(exit_data, "delta_grid must be an array or {start, stop, points}");
    }
  }
  return spec;
}

int run_simulate(const SimulateOptions& opt) {
  auto in = open_input(opt.config_path);
  json cfg = json::parse(in, nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object())
    throw CliError(exit_data, "simulate config must be a JSON object");

  DesignSpec spec = design_from_config(cfg);
  if (opt.seed_override) spec.seed = *opt.seed_override;
  else if (cfg.contains("seed")) spec.seed = cfg.at("seed").get<std::uint64_t>();
  else if (auto env = seed_from_env()) spec.seed = *env;
  else throw CliError(exit_usage, "simulate needs a seed (config, --seed, or PCS_SEED)");

  std::vector<Method> methods;
  if (cfg.contains("estimators")) {
    for (const auto& name : cfg.at("estimators")) {
      const auto m = parse_method(name.get<std::string>());
      if (!m) throw CliError(exit_data, "unknown estimator: " + name.get<std::string>());
      methods.push_back(*m);
    }
  } else {
    methods = {Method::ols, Method::pcs, Method::rr, Method::grr, Method::kernel, Method::cp};
  }
  const bool oracle = cfg.value("oracle", false);
  const int threads = opt.threads > 0 ? opt.threads : default_thread_count();

  const std::string digest =
      config_digest({"simulate", cfg.dump(), std::to_string(spec.seed)});
  const SimulationResult result = oracle ? run_oracle_design(spec, methods, threads)
                                         : run_design(spec, methods, threads);
  std::ostringstream csv_text;
  write_simulation_csv(result, csv_text,
                       {"tool: pcs " + std::string(pcs::version), "config_digest: " + digest,
                        "seed: " + std::to_string(spec.seed)});
  write_artifact(opt.output, csv_text.str());
  return 0;
}

// ---------------------------------------------------------------------------
// risk
// ---------------------------------------------------------------------------

struct RiskOptions {
  std::string input;
  std::string output;
  int threads = 0;
  std::optional<std::uint64_t> seed_override;
};

int run_risk(const RiskOptions& opt) {
  auto in = open_input(opt.input);
  json cfg = json::parse(in, nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object())
    throw CliError(exit_data, "risk input must be a JSON object");

  RiskInputs inputs;
  inputs.sigma2 = json_to_vector(cfg.at("sigma2"), "sigma2");
  inputs.p = json_to_vector(cfg.at("p"), "p");
  inputs.n = cfg.value("n", 400.0);
  VectorXd delta;
  if (cfg.contains("delta")) {
    delta = json_to_vector(cfg.at("delta"), "delta");
    inputs.mu = delta / std::sqrt(inputs.n);
  } else if (cfg.contains("mu")) {
    inputs.mu = json_to_vector(cfg.at("mu"), "mu");
    delta = inputs.mu * std::sqrt(inputs.n);
  } else {
    throw CliError(exit_data, "risk input needs either mu or delta");
  }
  const long draws = cfg.value("draws", 100000L);
  std::uint64_t seed;
  if (opt.seed_override) seed = *opt.seed_override;
  else if (cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
  else if (auto env = seed_from_env()) seed = *env;
  else throw CliError(exit_usage, "risk needs a seed (config, --seed, or PCS_SEED)");

  const int threads = opt.threads > 0 ? opt.threads : default_thread_count();
  const std::string digest = config_digest({"risk", cfg.dump(), std::to_string(seed)});

  const RiskEstimate estimate = asymptotic_risk_pcs(inputs, delta, draws, seed, threads);
  const DominanceReport dom = dominance_matrix_check(inputs.gamma());

  json out;
  out["metadata"] = metadata_block(digest, seed);
  out["risk"] = estimate.value;
  out["mc_std_error"] = estimate.std_error;
  out["ols_risk"] = estimate.ols_risk;
  out["draws"] = estimate.draws;
  out["dominance"] = {{"min_eigenvalue", dom.min_eigenvalue},
                      {"diagonally_dominant", dom.diagonally_dominant},
                      {"positive_semidefinite", dom.min_eigenvalue >= -1e-8},
                      {"kron_agreement_error", dom.kron_agreement_error}};
  write_artifact(opt.output, out.dump(2));
  return 0;
}

json error_record(int code, const std::string& kind, const std::string& message) {
  return json{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise cross-smoothing estimators for categorical group means"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  CLI::App* fit = app.add_subcommand("fit", "Fit one estimator to grouped CSV data");
  fit->add_option("--input,-i", fit_opt.input, "input CSV file")->required();
  fit->add_option("--output,-o", fit_opt.output, "output JSON path (default stdout)");
  fit->add_option("--method,-m", fit_opt.method,
                  "estimator: ols | pcs | rr | grr | kernel | cp");
  fit->add_option("--variance-mode", fit_opt.variance_mode, "per_group | pooled");
  fit->add_option("--variance-floor", fit_opt.variance_floor,
                  "replace cell variances below this floor");
  fit->add_flag("--did", fit_opt.did,
                "input is a 4-row summary CSV (label,mean,variance,n); report a"
                " difference-in-differences fit");
  fit->add_option("--panel", fit_opt.panel, "panel to select when the CSV has a panel column");
  fit->add_option("--blocks", fit_opt.blocks_path,
                  "JSON block declaration (name -> list of cell labels); smooths each"
                  " block separately with plug-in weights");

  WeightsOptions w_opt;
  CLI::App* weights = app.add_subcommand("weights", "Print smoothing weights and penalties");
  weights->add_option("--input,-i", w_opt.input, "input CSV file")->required();
  weights->add_option("--output,-o", w_opt.output, "output JSON path (default stdout)");
  weights->add_option("--method,-m", w_opt.method, "weight family (pcs)");
  weights->add_option("--lambda", w_opt.lambda_path,
                      "JSON penalty matrix; plug-in weights when omitted");
  weights->add_option("--variance-mode", w_opt.variance_mode, "per_group | pooled");
  weights->add_option("--variance-floor", w_opt.variance_floor,
                      "replace cell variances below this floor");

  SimulateOptions s_opt;
  std::uint64_t s_seed = 0;
  bool s_seed_set = false;
  CLI::App* simulate = app.add_subcommand("simulate", "Run a Monte Carlo design, CSV out");
  simulate->add_option("--config,-c", s_opt.config_path, "design config JSON")->required();
  simulate->add_option("--output,-o", s_opt.output, "output CSV path (default stdout)");
  simulate->add_option("--threads", s_opt.threads, "worker threads (default: hardware)");
  simulate->add_option("--seed", s_seed, "override the config seed")
      ->each([&](const std::string&) { s_seed_set = true; });

  RiskOptions r_opt;
  std::uint64_t r_seed = 0;
  bool r_seed_set = false;
  CLI::App* risk = app.add_subcommand("risk", "Asymptotic-risk evaluation, JSON in/out");
  risk->add_option("--input,-i", r_opt.input, "risk input JSON")->required();
  risk->add_option("--output,-o", r_opt.output, "output JSON path (default stdout)");
  risk->add_option("--threads", r_opt.threads, "worker threads (default: hardware)");
  risk->add_option("--seed", r_seed, "override the config seed")
      ->each([&](const std::string&) { r_seed_set = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << error_record(exit_usage, "usage", e.what()).dump() << '\n';
    return exit_usage;
  }

  try {
    if (*fit) return run_fit(fit_opt);
    if (*weights) return run_weights(w_opt);
    if (*simulate) {
      if (s_seed_set) s_opt.seed_override = s_seed;
      return run_simulate(s_opt);
    }
    if (*risk) {
      if (r_seed_set) r_opt.seed_override = r_seed;
      return run_risk(r_opt);
    }
  } catch (const CliError& e) {
    const char* kind = e.code == exit_usage ? "usage"
                       : e.code == exit_data ? "input"
                       : e.code == exit_io ? "io" : "estimation";
    std::cerr << error_record(e.code, kind, e.what()).dump() << '\n';
    return e.code;
  } catch (const InvalidInputError& e) {
    std::cerr << error_record(exit_data, "input", e.what()).dump() << '\n';
    return exit_data;
  } catch (const InsufficientDataError& e) {
    std::cerr << error_record(exit_data, "input", e.what()).dump() << '\n';
    return exit_data;
  } catch (const Error& e) {
    std::cerr << error_record(exit_estimation, "estimation", e.what()).dump() << '\n';
    return exit_estimation;
  } catch (const json::exception& e) {
    std::cerr << error_record(exit_data, "input", e.what()).dump() << '\n';
    return exit_data;
  } catch (const std::exception& e) {
    std::cerr << error_record(1, "internal", e.what()).dump() << '\n';
    return 1;
  }
  return exit_usage;
}
