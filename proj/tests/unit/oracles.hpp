#pragma once

// Deliberately slow reference implementations. They share no code with the
// library and are used to check it.

#include <algorithm>
#include <array>
#include <bitset>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sramsuc/sbox4.hpp"
#include "sramsuc/sbox8.hpp"
#include "sramsuc/suc.hpp"

namespace oracle {

inline int parity(unsigned v) { return std::bitset<32>(v).count() & 1; }

struct Profile {
  bool bijective;
  int lin;
  int diff;
  int branch_min;
};

// Counts from the definitions: DDT[a][b] = #{x : S(x) ^ S(x ^ a) = b},
// W(a, b) = sum_x (-1)^(a.x ^ b.S(x)).
inline Profile profile(const std::vector<int>& s) {
  const int n = static_cast<int>(s.size());
  Profile p{};
  std::vector<int> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  p.bijective = true;
  for (int i = 0; i < n; ++i) p.bijective = p.bijective && sorted[i] == i;

  for (int a = 1; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      int count = 0;
      for (int x = 0; x < n; ++x) count += (s[x] ^ s[x ^ a]) == b;
      p.diff = std::max(p.diff, count);
    }
  }
  for (int a = 0; a < n; ++a) {
    for (int b = 1; b < n; ++b) {
      int sum = 0;
      for (int x = 0; x < n; ++x) sum += parity((a & x) ^ (b & s[x])) ? -1 : 1;
      p.lin = std::max(p.lin, std::abs(sum));
    }
  }
  p.branch_min = 64;
  for (int bit = 1; bit < n; bit <<= 1) {
    for (int x = 0; x < n; ++x) {
      p.branch_min = std::min<int>(p.branch_min, std::bitset<8>(s[x] ^ s[x ^ bit]).count());
    }
  }
  return p;
}

inline std::vector<int> as_vector(const sramsuc::SBox4& s) {
  return {s.table().begin(), s.table().end()};
}
inline std::vector<int> as_vector(const sramsuc::SBox8& s) {
  return {s.table().begin(), s.table().end()};
}

// Feistel over explicit halves: the round list is written out in full.
inline std::array<int, 256> feistel(int rounds, const std::vector<sramsuc::SBox4>& free) {
  std::vector<const sramsuc::SBox4*> sequence;
  for (int k = 0; k < rounds; ++k) sequence.push_back(&free[std::min(k, rounds - 1 - k)]);
  std::array<int, 256> out{};
  for (int x = 0; x < 256; ++x) {
    int left = x / 16;
    int right = x % 16;
    for (int k = 0; k < rounds; ++k) {
      const auto& f = *sequence[k];
      if (k % 2 == 0) {
        left ^= f.table()[right];
      } else {
        right ^= f.table()[left];
      }
    }
    out[x] = left * 16 + right;
  }
  return out;
}

using Bits = std::array<int, 64>;

inline Bits to_bits(const std::array<std::uint8_t, 8>& bytes) {
  Bits b{};
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) b[8 * i + j] = (bytes[i] >> j) & 1;
  }
  return b;
}

inline std::array<std::uint8_t, 8> from_bits(const Bits& b) {
  std::array<std::uint8_t, 8> bytes{};
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) bytes[i] |= static_cast<std::uint8_t>(b[8 * i + j] << j);
  }
  return bytes;
}

inline Bits permute(const Bits& in) {
  Bits out{};
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) out[8 * j + i] = in[8 * i + j];
  }
  return out;
}

// Table-walk interpreter: substitute every byte, then permute bits, R times,
// skipping the permutation after the last round.
inline std::array<std::uint8_t, 8> suc(const std::array<std::array<int, 256>, 8>& tables, int rounds,
                                       std::array<std::uint8_t, 8> block) {
  for (int round = 0; round < rounds; ++round) {
    for (int i = 0; i < 8; ++i) block[i] = static_cast<std::uint8_t>(tables[i][block[i]]);
    if (round + 1 < rounds) block = from_bits(permute(to_bits(block)));
  }
  return block;
}

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

}  // namespace oracle

// Scratch directory removed at scope exit.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("sramsuc-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};
