#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/group_data.hpp"
#include "pcs/pcs.hpp"

namespace pcs {

/// One cell of a published summary table: label, mean, variance, count.
struct SummaryCell {
  std::string label;
  double mean = 0.0;
  double variance = 0.0;
  long count = 0;
};

enum class DidMethod { ols, pcs };

/// A 2x2 difference-in-differences fit on state x time cell means.
struct DiDReport {
  DidMethod method = DidMethod::ols;
  double nj_before = 0.0;
  double nj_after = 0.0;
  double pen_before = 0.0;
  double pen_after = 0.0;
  double did = 0.0;  // (nj_after - nj_before) - (pen_after - pen_before)
};

namespace detail {

inline int did_cell_role(const std::string& label) {
  std::string s;
  for (char c : label) s.push_back(c == '-' || c == ' ' ? '_' : static_cast<char>(std::tolower(c)));
  if (s == "nj_before") return 0;
  if (s == "nj_after") return 1;
  if (s == "pen_before") return 2;
  if (s == "pen_after") return 3;
  return -1;
}

}  // namespace detail

/// Difference-in-differences from published cell summaries. The four cells
/// must be labeled NJ_before, NJ_after, PEN_before, PEN_after (in any order).
/// OLS reports the raw cell means; PCS smooths all four cells jointly with
/// plug-in weights before differencing.
inline DiDReport did_from_summary(const std::vector<SummaryCell>& cells, DidMethod method) {
  if (cells.size() != 4)
    throw InvalidInputError("did_from_summary: need exactly 4 cells, got " +
                            std::to_string(cells.size()));
  VectorXd means(4), variances(4);
  std::vector<long> counts(4);
  std::vector<bool> seen(4, false);
  for (const SummaryCell& cell : cells) {
    const int role = detail::did_cell_role(cell.label);
    if (role < 0)
      throw InvalidInputError("did_from_summary: unknown cell label '" + cell.label +
                              "' (expected NJ_before, NJ_after, PEN_before, PEN_after)");
    if (seen[role]) throw InvalidInputError("did_from_summary: duplicate cell '" + cell.label + "'");
    seen[role] = true;
    means[role] = cell.mean;
    variances[role] = cell.variance;
    counts[role] = cell.count;
  }

  DiDReport report;
  report.method = method;
  VectorXd mu = means;
  if (method == DidMethod::pcs) {
    const GroupSummary summary = summary_from_moments(means, variances, counts);
    mu = pcs_plugin(summary).mu;
  }
  report.nj_before = mu[0];
  report.nj_after = mu[1];
  report.pen_before = mu[2];
  report.pen_after = mu[3];
  report.did = (report.nj_after - report.nj_before) - (report.pen_after - report.pen_before);
  return report;
}

/// Block-wise panel smoothing: plug-in PCS applied separately within each
/// declared block of cells; cells outside every block keep their cell means.
struct BlockSmoothing {
  VectorXd smoothed;
  std::vector<std::vector<int>> blocks;
  std::vector<WeightMatrix> block_weights;  // aligned with blocks; empty for passed-through blocks
  std::vector<std::string> warnings;
};

inline BlockSmoothing blockwise_panel_smooth(const GroupedSample& sample,
                                             const std::vector<std::vector<int>>& blocks,
                                             bool skip_degenerate = false) {
  sample.validate();
  const int J = sample.group_count;
  std::vector<int> membership(J, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int g : blocks[b]) {
      if (g < 0 || g >= J)
        throw InvalidInputError("blockwise_panel_smooth: cell index " + std::to_string(g) +
                                " out of range in block " + std::to_string(b));
      if (membership[g] != -1)
        throw InvalidInputError("blockwise_panel_smooth: cell " + std::to_string(g) +
                                " appears in more than one block");
      membership[g] = static_cast<int>(b);
    }
  }

  const GroupSummary full = summarize(sample, VarianceMode::means_only);
  BlockSmoothing out;
  out.smoothed = full.means;
  out.blocks = blocks;
  out.block_weights.resize(blocks.size());

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::vector<int>& cells = blocks[b];
    if (cells.empty()) continue;
    if (cells.size() == 1) {
      out.warnings.push_back("block " + std::to_string(b) +
                             " has a single cell; nothing to smooth");
      continue;
    }
    // a self-contained subsample: block cells relabeled 0..B-1, probabilities
    // renormalized within the block by construction
    GroupedSample sub;
    sub.group_count = static_cast<int>(cells.size());
    std::vector<int> local(J, -1);
    for (std::size_t i = 0; i < cells.size(); ++i) local[cells[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const int g = sample.groups[i];
      if (local[g] < 0) continue;
      sub.outcomes.push_back(sample.outcomes[i]);
      sub.groups.push_back(local[g]);
    }
    try {
      const GroupSummary block_summary = summarize(sub, VarianceMode::per_group);
      const PcsEstimate fit = pcs_plugin(block_summary);
      for (std::size_t i = 0; i < cells.size(); ++i) out.smoothed[cells[i]] = fit.mu[i];
      out.block_weights[b] = fit.weights;
    } catch (const Error& e) {
      if (!skip_degenerate)
        throw InvalidInputError("block " + std::to_string(b) + " cannot be smoothed: " + e.what());
      out.warnings.push_back("block " + std::to_string(b) +
                             " passed through unsmoothed: " + e.what());
    }
  }
  return out;
}

}  // namespace pcs
