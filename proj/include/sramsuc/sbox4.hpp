#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sramsuc/bytes.hpp"
#include "sramsuc/entropy.hpp"

namespace sramsuc {

// A 4-bit substitution table, S(x) = table[x].
class SBox4 {
 public:
  using Table = std::array<std::uint8_t, 16>;

  SBox4();  // identity
  // Throws Error(kInvalidArgument) if any value exceeds 15.
  explicit SBox4(const Table& table);

  static SBox4 identity() { return SBox4(); }

  // 16 hex digits, one per output value: "38f1a65bed42709c".
  static SBox4 from_hex(std::string_view hex);
  std::string to_hex() const;

  std::uint8_t operator()(std::uint8_t x) const { return table_[x & 0x0F]; }
  std::uint8_t operator[](std::size_t x) const { return table_[x]; }
  const Table& table() const noexcept { return table_; }

  bool operator==(const SBox4&) const = default;
  auto operator<=>(const SBox4&) const = default;

 private:
  Table table_;
};

// Cryptographic profile of an n-bit table (n = 4 or 8).
struct SBoxProfile {
  bool bijective = false;
  int lin = 0;         // max |Walsh coefficient| over all a and b != 0
  int diff = 0;        // max DDT entry over input differences a != 0
  int branch_min = 0;  // min output weight over one-bit input differences
};

SBoxProfile profile4(const SBox4& s);

// Bijective, Lin = 8, Diff = 4, and every one-bit input difference flips at
// least two output bits.
bool is_serpent_type(const SBox4& s);

struct SearchOptions {
  std::size_t node_budget = 200000;  // DFS nodes per attempt
  std::size_t max_restarts = 64;
};

// Randomized depth-first construction with incremental DDT/branch pruning;
// the complete candidate is accepted only if is_serpent_type holds.
SBox4 sample_serpent_type(EntropySource& entropy,
                          const SearchOptions& options = {});

// An ordered set of distinct Serpent-type S-boxes.
class SBoxPool {
 public:
  // Validates every entry (Serpent-type, pairwise distinct); throws
  // Error(kFormat) otherwise.
  explicit SBoxPool(std::vector<SBox4> entries, std::string origin = {});

  const std::vector<SBox4>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const SBox4& operator[](std::size_t i) const { return entries_.at(i); }
  const Digest& digest() const noexcept { return digest_; }
  // Free-form description of how the pool was produced; not persisted.
  const std::string& origin() const noexcept { return origin_; }

  // Binary pool file: 16-byte header ("SUCPOOL\0", u32 version, u32 zero),
  // u32 count, count x 16 bytes (one output value per byte), then the
  // 32-byte SHA-256 of count || records. Integers are little-endian.
  Bytes serialize() const;
  static SBoxPool parse(ByteSpan data);

  void save(const std::filesystem::path& path) const;
  static SBoxPool load(const std::filesystem::path& path);

  bool operator==(const SBoxPool& other) const {
    return entries_ == other.entries_ && digest_ == other.digest_;
  }

 private:
  std::vector<SBox4> entries_;
  Digest digest_{};
  std::string origin_;
};

Digest pool_digest(const std::vector<SBox4>& entries);

SBoxPool build_pool(std::size_t count, EntropySource& entropy,
                    const SearchOptions& options = {});

}  // namespace sramsuc
