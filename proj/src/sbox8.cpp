#include "sramsuc/sbox8.hpp"

#include <cmath>

#include "spectra.hpp"
#include "sramsuc/error.hpp"

namespace sramsuc {

namespace {

void check_rounds(int rounds) {
  if (rounds < 1 || rounds % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "Feistel round count must be odd and positive, got " + std::to_string(rounds));
  }
}

}  // namespace

void FeistelSpec::validate() const {
  check_rounds(rounds);
  const auto want = static_cast<std::size_t>((rounds + 1) / 2);
  if (free.size() != want) {
    throw Error(ErrorCode::kInvalidArgument,
                "Feistel spec with r=" + std::to_string(rounds) + " needs " +
                    std::to_string(want) + " free S-boxes, got " + std::to_string(free.size()));
  }
}

const SBox4& FeistelSpec::round_function(int k) const {
  const int mirrored = rounds - 1 - k;
  return free[static_cast<std::size_t>(k < mirrored ? k : mirrored)];
}

SBox8::SBox8() {
  for (int i = 0; i < 256; ++i) table_[i] = static_cast<std::uint8_t>(i);
}

SBox8::SBox8(const Table& table, std::optional<FeistelSpec> provenance)
    : table_(table), provenance_(std::move(provenance)) {}

SBox8 SBox8::nibble_swap() {
  Table t{};
  for (int x = 0; x < 256; ++x) t[x] = static_cast<std::uint8_t>(((x & 0x0F) << 4) | (x >> 4));
  return SBox8(t);
}

SBox8 SBox8::from_hex(std::string_view hex) {
  if (hex.size() != 512) {
    throw Error(ErrorCode::kFormat, "8-bit S-box needs exactly 512 hex characters");
  }
  const Bytes raw = sramsuc::from_hex(hex);
  Table t{};
  std::copy(raw.begin(), raw.end(), t.begin());
  return SBox8(t);
}

std::string SBox8::to_hex() const { return sramsuc::to_hex(table_); }

bool SBox8::is_permutation() const { return detail::is_bijective(table_); }

bool SBox8::is_involution() const {
  for (int x = 0; x < 256; ++x) {
    if (table_[table_[x]] != x) return false;
  }
  return true;
}

SBox8 feistel8(const FeistelSpec& spec) {
  spec.validate();
  SBox8::Table t{};
  for (int x = 0; x < 256; ++x) {
    std::uint8_t left = static_cast<std::uint8_t>(x >> 4);
    std::uint8_t right = static_cast<std::uint8_t>(x & 0x0F);
    for (int k = 0; k < spec.rounds; ++k) {
      const SBox4& f = spec.round_function(k);
      if (k % 2 == 0) {
        left ^= f(right);
      } else {
        right ^= f(left);
      }
    }
    t[x] = static_cast<std::uint8_t>((left << 4) | right);
  }
  return SBox8(t, spec);
}

SBox8Profile profile8(const SBox8& s) {
  SBox8Profile p;
  p.base = detail::profile(s.table());
  p.max_differential_probability = p.base.diff / 256.0;
  const double corr = p.base.lin / 256.0;
  p.max_linear_probability = corr * corr;
  constexpr double kPSquared = 1.0 / 16.0;
  p.exceeds_p_squared =
      p.max_differential_probability > kPSquared || p.max_linear_probability > kPSquared;
  return p;
}

double class_log2_cardinality(int rounds, std::uint64_t set_size) {
  check_rounds(rounds);
  if (set_size == 0) throw Error(ErrorCode::kInvalidArgument, "set size must be positive");
  return ((rounds + 1) / 2) * std::log2(static_cast<double>(set_size));
}

}  // namespace sramsuc
