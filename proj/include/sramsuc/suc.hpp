#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "sramsuc/bytes.hpp"
#include "sramsuc/sbox8.hpp"

namespace sramsuc {

// 64-bit block. Byte B_i feeds S-box i; global bit position p = 8*i + j
// with j = 0 the least significant bit of B_i. B_0 is printed first in hex.
class Block64 {
 public:
  constexpr Block64() = default;

  // word bits 8i..8i+7 hold B_i.
  static constexpr Block64 from_word(std::uint64_t word) {
    Block64 b;
    b.word_ = word;
    return b;
  }
  static Block64 from_bytes(std::span<const std::uint8_t, 8> bytes);
  static Block64 from_hex(std::string_view hex);  // exactly 16 hex chars

  constexpr std::uint64_t word() const noexcept { return word_; }
  constexpr std::uint8_t byte(int i) const noexcept {
    return static_cast<std::uint8_t>(word_ >> (8 * i));
  }
  constexpr bool bit(int p) const noexcept { return (word_ >> p) & 1u; }

  std::array<std::uint8_t, 8> bytes() const;
  std::string to_hex() const;

  constexpr bool operator==(const Block64&) const = default;
  constexpr auto operator<=>(const Block64&) const = default;

 private:
  std::uint64_t word_ = 0;
};

using SBoxLayer = std::array<SBox8, 8>;

struct SucParams {
  int rounds = 15;     // SPN rounds R
  int feistel_r = 3;   // Feistel rounds per 8-bit S-box
  std::optional<Digest> pool_digest;

  // Throws Error(kInvalidArgument) on rounds < 1 or even/non-positive feistel_r.
  void validate() const;

  bool operator==(const SucParams&) const = default;
};

// Bit 8i+j moves to 8j+i (8x8 bit-matrix transpose); self-inverse.
Block64 p_layer(Block64 b);

Block64 s_layer(Block64 b, const SBoxLayer& sboxes);

// A runnable SRAM-SUC: R substitution layers with a bit permutation between
// consecutive ones and none after the last. Every table is an involution, so
// the whole cipher is its own inverse.
class SucInstance {
 public:
  // Throws Error(kTableValidation) if any table is not an involution.
  SucInstance(SBoxLayer sboxes, SucParams params);

  Block64 apply(Block64 x) const;

  const SBoxLayer& sboxes() const noexcept { return sboxes_; }
  const SucParams& params() const noexcept { return params_; }

  // The 2048-byte concatenation of the eight tables, S-box 0 first.
  Bytes table_bytes() const;
  Digest table_digest() const;

 private:
  SBoxLayer sboxes_;
  SucParams params_;
};

inline Block64 apply(const SucInstance& suc, Block64 x) { return suc.apply(x); }

// log2 |SRAM-SUC| = 8 * ((r+1)/2) * log2(set_size).
double suc_log2_cardinality(int feistel_r, std::uint64_t set_size);

}  // namespace sramsuc
