#pragma once

#include <cstdint>
#include <vector>

namespace pcs {

/// Bell number B(n): the number of set partitions of n items.
inline std::uint64_t bell_number(int n) {
  std::vector<std::uint64_t> row{1};
  for (int i = 1; i <= n; ++i) {
    std::vector<std::uint64_t> next(row.size() + 1);
    next[0] = row.back();
    for (std::size_t j = 0; j < row.size(); ++j) next[j + 1] = next[j] + row[j];
    row = std::move(next);
  }
  return row[0];
}

namespace detail {

template <typename Visit>
void enumerate_rgs(int idx, int max_used, std::vector<int>& code, Visit& visit) {
  const int n = static_cast<int>(code.size());
  if (idx == n) {
    visit(code);
    return;
  }
  for (int b = 0; b <= max_used + 1; ++b) {
    code[idx] = b;
    enumerate_rgs(idx + 1, b > max_used ? b : max_used, code, visit);
  }
}

}  // namespace detail

/// Visit every set partition of {0, ..., n-1} in lexicographic order of its
/// restricted-growth-string encoding (code[i] = block id of item i, blocks
/// numbered by first appearance). visit(code) must not retain the reference.
template <typename Visit>
void for_each_set_partition(int n, Visit visit) {
  if (n <= 0) return;
  std::vector<int> code(n, 0);
  detail::enumerate_rgs(1, 0, code, visit);
}

}  // namespace pcs
