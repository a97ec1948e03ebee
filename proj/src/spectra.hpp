#pragma once

// Exhaustive DDT / Walsh / branch computations shared by the 4- and 8-bit
// profilers. Tables are given as spans of size 2^n.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <vector>

#include "sramsuc/sbox4.hpp"

namespace sramsuc::detail {

inline bool is_bijective(std::span<const std::uint8_t> table) {
  std::vector<bool> seen(table.size(), false);
  for (std::uint8_t v : table) {
    if (v >= table.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

inline int max_ddt(std::span<const std::uint8_t> table) {
  const std::size_t n = table.size();
  std::vector<int> row(n);
  int best = 0;
  for (std::size_t a = 1; a < n; ++a) {
    std::fill(row.begin(), row.end(), 0);
    for (std::size_t x = 0; x < n; ++x) {
      ++row[table[x] ^ table[x ^ a]];
    }
    best = std::max(best, *std::max_element(row.begin(), row.end()));
  }
  return best;
}

// max over a and b != 0 of |sum_x (-1)^(b.S(x) xor a.x)|, one fast
// Walsh-Hadamard transform per output mask.
inline int max_walsh(std::span<const std::uint8_t> table) {
  const std::size_t n = table.size();
  std::vector<int> f(n);
  int best = 0;
  for (std::size_t b = 1; b < n; ++b) {
    for (std::size_t x = 0; x < n; ++x) {
      f[x] = (std::popcount(static_cast<unsigned>(b & table[x])) & 1) ? -1 : 1;
    }
    for (std::size_t h = 1; h < n; h <<= 1) {
      for (std::size_t i = 0; i < n; i += h << 1) {
        for (std::size_t j = i; j < i + h; ++j) {
          const int u = f[j];
          const int v = f[j + h];
          f[j] = u + v;
          f[j + h] = u - v;
        }
      }
    }
    for (int w : f) best = std::max(best, std::abs(w));
  }
  return best;
}

inline int branch_min(std::span<const std::uint8_t> table) {
  const std::size_t n = table.size();
  int best = 64;
  for (std::size_t a = 1; a < n; a <<= 1) {
    for (std::size_t x = 0; x < n; ++x) {
      best = std::min(
          best, std::popcount(static_cast<unsigned>(table[x] ^ table[x ^ a])));
    }
  }
  return best;
}

inline SBoxProfile profile(std::span<const std::uint8_t> table) {
  SBoxProfile p;
  p.bijective = is_bijective(table);
  p.lin = max_walsh(table);
  p.diff = max_ddt(table);
  p.branch_min = branch_min(table);
  return p;
}

}  // namespace sramsuc::detail
