#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pcs/applications.hpp"
#include "pcs/error.hpp"
#include "pcs/group_data.hpp"
#include "pcs/montecarlo.hpp"

namespace pcs {

namespace csv {

/// Split one CSV line; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

inline std::vector<std::vector<std::string>> read_table(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(split_line(line));
  }
  return rows;
}

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::optional<double> parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

/// Shortest decimal form that round-trips a double (stable across runs).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace csv

/// A grouped sample together with its cell labels and factor columns.
struct LabeledSample {
  GroupedSample sample;
  std::vector<std::string> group_labels;    // one per cell, "/"-joined category tuple
  std::vector<std::string> factor_columns;  // names of the categorical columns
};

/// Read grouped observations from CSV: a header row with exactly one column
/// named `y` (the outcome) and one or more categorical columns. Cells are the
/// cartesian product of the observed category values, numbered in
/// lexicographic order of the category tuple. Rows with missing or
/// non-numeric `y` are rejected.
inline LabeledSample read_grouped_csv(std::istream& in) {
  const auto rows = csv::read_table(in);
  if (rows.size() < 2) throw InvalidInputError("CSV: need a header row and at least one data row");

  const std::vector<std::string>& header = rows[0];
  int y_col = -1;
  std::vector<int> factor_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (csv::trim(header[c]) == "y") {
      if (y_col >= 0) throw InvalidInputError("CSV: more than one column named 'y'");
      y_col = static_cast<int>(c);
    } else {
      factor_cols.push_back(static_cast<int>(c));
    }
  }
  if (y_col < 0) throw InvalidInputError("CSV: no column named 'y'");
  if (factor_cols.empty()) throw InvalidInputError("CSV: need at least one categorical column");

  // observed category values per factor, sorted
  std::vector<std::vector<std::string>> levels(factor_cols.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw InvalidInputError("CSV row " + std::to_string(r + 1) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(rows[r].size()));
    for (std::size_t f = 0; f < factor_cols.size(); ++f) {
      const std::string v = csv::trim(rows[r][factor_cols[f]]);
      if (v.empty())
        throw InvalidInputError("CSV row " + std::to_string(r + 1) + ": empty category value");
      auto& ls = levels[f];
      if (std::find(ls.begin(), ls.end(), v) == ls.end()) ls.push_back(v);
    }
  }
  long cell_count = 1;
  for (auto& ls : levels) {
    std::sort(ls.begin(), ls.end());
    cell_count *= static_cast<long>(ls.size());
  }
  if (cell_count < 2) throw InvalidInputError("CSV: the categorical columns define a single cell");
  if (cell_count > 4096)
    throw InvalidInputError("CSV: the categorical columns define " + std::to_string(cell_count) +
                            " cells; that is beyond what this estimator is meant for");

  LabeledSample out;
  out.sample.group_count = static_cast<int>(cell_count);
  for (int f : factor_cols) out.factor_columns.push_back(csv::trim(header[f]));

  // cell index = lexicographic rank of the category tuple, first factor major
  std::vector<long> stride(levels.size(), 1);
  for (int f = static_cast<int>(levels.size()) - 2; f >= 0; --f)
    stride[f] = stride[f + 1] * static_cast<long>(levels[f + 1].size());

  out.group_labels.resize(cell_count);
  for (long cell = 0; cell < cell_count; ++cell) {
    std::string label;
    long rest = cell;
    for (std::size_t f = 0; f < levels.size(); ++f) {
      const long k = rest / stride[f];
      rest %= stride[f];
      if (!label.empty()) label.push_back('/');
      label += levels[f][static_cast<std::size_t>(k)];
    }
    out.group_labels[cell] = label;
  }

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto y = csv::parse_double(rows[r][y_col]);
    if (!y)
      throw InvalidInputError("CSV row " + std::to_string(r + 1) +
                              ": missing or non-numeric value in column 'y'");
    long cell = 0;
    for (std::size_t f = 0; f < factor_cols.size(); ++f) {
      const std::string v = csv::trim(rows[r][factor_cols[f]]);
      const auto& ls = levels[f];
      const auto it = std::lower_bound(ls.begin(), ls.end(), v);
      cell += stride[f] * static_cast<long>(it - ls.begin());
    }
    out.sample.outcomes.push_back(*y);
    out.sample.groups.push_back(static_cast<int>(cell));
  }
  out.sample.validate();
  return out;
}

/// Read summary cells (label, mean, variance, n) from CSV. When the file has
/// a `panel` column, `panel_filter` selects which panel's rows to keep.
inline std::vector<SummaryCell> read_summary_cells(std::istream& in,
                                                   const std::string& panel_filter = "") {
  const auto rows = csv::read_table(in);
  if (rows.size() < 2) throw InvalidInputError("summary CSV: need a header and data rows");
  const std::vector<std::string>& header = rows[0];
  int label_col = -1, mean_col = -1, var_col = -1, n_col = -1, panel_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string h = csv::trim(header[c]);
    if (h == "label") label_col = static_cast<int>(c);
    else if (h == "mean") mean_col = static_cast<int>(c);
    else if (h == "variance") var_col = static_cast<int>(c);
    else if (h == "n") n_col = static_cast<int>(c);
    else if (h == "panel") panel_col = static_cast<int>(c);
  }
  if (label_col < 0 || mean_col < 0 || var_col < 0 || n_col < 0)
    throw InvalidInputError("summary CSV: need columns label, mean, variance, n");
  if (panel_col >= 0 && panel_filter.empty())
    throw InvalidInputError("summary CSV has a 'panel' column; select one with --panel");

  std::vector<SummaryCell> cells;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw InvalidInputError("summary CSV row " + std::to_string(r + 1) + ": wrong field count");
    if (panel_col >= 0 && csv::trim(rows[r][panel_col]) != panel_filter) continue;
    SummaryCell cell;
    cell.label = csv::trim(rows[r][label_col]);
    const auto mean = csv::parse_double(rows[r][mean_col]);
    const auto var = csv::parse_double(rows[r][var_col]);
    const auto n = csv::parse_double(rows[r][n_col]);
    if (!mean || !var || !n)
      throw InvalidInputError("summary CSV row " + std::to_string(r + 1) + ": non-numeric field");
    cell.mean = *mean;
    cell.variance = *var;
    cell.count = static_cast<long>(*n);
    cells.push_back(cell);
  }
  if (cells.empty())
    throw InvalidInputError(panel_filter.empty()
                                ? std::string("summary CSV: no data rows")
                                : "summary CSV: no rows for panel '" + panel_filter + "'");
  return cells;
}

/// Long-format simulation CSV: one row per (delta, estimator), with `#`
/// metadata comment lines first. Output is byte-stable for a fixed result.
inline void write_simulation_csv(const SimulationResult& result, std::ostream& out,
                                 const std::vector<std::string>& metadata = {}) {
  for (const std::string& line : metadata) out << "# " << line << "\n";
  out << "design,error_family,variance_mode,estimator,delta,rel_wmse,mc_se,R,seed\n";
  const char* vmode = result.variance_mode == VarianceMode::pooled ? "pooled" : "per_group";
  for (std::size_t d = 0; d < result.by_delta.size(); ++d) {
    for (Method m : result.estimators) {
      out << result.design_label << ',' << error_family_name(result.error_family) << ',' << vmode
          << ',' << method_name(m) << ',' << csv::format_double(result.by_delta[d].delta) << ','
          << csv::format_double(result.rel_wmse(d, m)) << ','
          << csv::format_double(result.rel_wmse_se(d, m)) << ','
          << result.by_delta[d].used_replications << ',' << result.seed << "\n";
    }
  }
}

}  // namespace pcs
