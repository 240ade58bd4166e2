#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace pcs {

/// Golden-section search for a minimum of f on [lo, hi]. Assumes f is
/// unimodal on the bracket; callers narrow the bracket with a grid scan first.
template <typename F>
double golden_section_min(F&& f, double lo, double hi, int max_iters = 200,
                          double rel_tol = 1e-12) {
  constexpr double inv_phi = 0.6180339887498948482;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iters; ++it) {
    if (b - a <= rel_tol * (1.0 + std::abs(a) + std::abs(b))) break;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Scan f over the given grid points, then refine around the best point with
/// golden-section search between its neighbors. Returns the refined argmin.
template <typename F>
double grid_then_golden_min(F&& f, const std::vector<double>& grid) {
  std::size_t best = 0;
  double best_val = f(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = f(grid[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double lo = grid[best > 0 ? best - 1 : 0];
  const double hi = grid[best + 1 < grid.size() ? best + 1 : grid.size() - 1];
  if (!(hi > lo)) return grid[best];
  const double refined = golden_section_min(f, lo, hi);
  return f(refined) <= best_val ? refined : grid[best];
}

/// count points log-spaced on [lo, hi], lo > 0.
inline std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  out.reserve(count);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(std::exp(llo + t * (lhi - llo)));
  }
  return out;
}

}  // namespace pcs
