#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sramsuc/sbox4.hpp"

namespace sramsuc {

// Round count plus the freely chosen half of a palindromic round-function
// sequence. With r rounds the full sequence is
//   free[0], free[1], ..., free[(r-1)/2], ..., free[1], free[0].
struct FeistelSpec {
  int rounds = 3;
  std::vector<SBox4> free;

  // Throws Error(kInvalidArgument) unless rounds is odd and positive and
  // free.size() == (rounds + 1) / 2.
  void validate() const;

  // Round function used in round k of the full sequence.
  const SBox4& round_function(int k) const;

  bool operator==(const FeistelSpec&) const = default;
};

class SBox8 {
 public:
  using Table = std::array<std::uint8_t, 256>;

  SBox8();  // identity
  explicit SBox8(const Table& table, std::optional<FeistelSpec> provenance = std::nullopt);

  static SBox8 identity() { return SBox8(); }
  // High nibble <-> low nibble.
  static SBox8 nibble_swap();

  // 512 hex characters, table[0] first.
  static SBox8 from_hex(std::string_view hex);
  std::string to_hex() const;

  std::uint8_t operator()(std::uint8_t x) const { return table_[x]; }
  std::uint8_t operator[](std::size_t x) const { return table_[x]; }
  const Table& table() const noexcept { return table_; }
  const std::optional<FeistelSpec>& provenance() const noexcept { return provenance_; }

  bool is_permutation() const;
  bool is_involution() const;

  // Compares tables only.
  bool operator==(const SBox8& other) const { return table_ == other.table_; }

 private:
  Table table_;
  std::optional<FeistelSpec> provenance_;
};

// Swapless alternating-half Feistel network. x = (L << 4) | R; even rounds
// update L ^= F_k(R), odd rounds update R ^= F_k(L). Every round is
// self-inverse and the round sequence is a palindrome, so the result is an
// involution.
SBox8 feistel8(const FeistelSpec& spec);

struct SBox8Profile {
  SBoxProfile base;
  double max_differential_probability = 0.0;  // diff / 256
  double max_linear_probability = 0.0;        // (lin / 256)^2
  bool exceeds_p_squared = false;             // either exceeds 2^-4
};

SBox8Profile profile8(const SBox8& s);

// log2 of the number of distinct free lists, ((r+1)/2) * log2(set_size).
double class_log2_cardinality(int rounds, std::uint64_t set_size);

}  // namespace sramsuc
