#include "sramsuc/suc.hpp"

#include "sramsuc/error.hpp"

namespace sramsuc {

Block64 Block64::from_bytes(std::span<const std::uint8_t, 8> bytes) {
  std::uint64_t w = 0;
  for (int i = 0; i < 8; ++i) w |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return from_word(w);
}

Block64 Block64::from_hex(std::string_view hex) {
  if (hex.size() != 16) throw Error(ErrorCode::kFormat, "block needs exactly 16 hex characters");
  const Bytes raw = sramsuc::from_hex(hex);
  return from_bytes(std::span<const std::uint8_t, 8>(raw.data(), 8));
}

std::array<std::uint8_t, 8> Block64::bytes() const {
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = byte(i);
  return out;
}

std::string Block64::to_hex() const { return sramsuc::to_hex(bytes()); }

void SucParams::validate() const {
  if (rounds < 1) throw Error(ErrorCode::kInvalidArgument, "SUC rounds must be >= 1");
  if (feistel_r < 1 || feistel_r % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "Feistel round count must be odd and positive");
  }
}

Block64 p_layer(Block64 b) {
  std::uint64_t x = b.word();
  std::uint64_t t = (x ^ (x >> 7)) & 0x00AA00AA00AA00AAULL;
  x ^= t ^ (t << 7);
  t = (x ^ (x >> 14)) & 0x0000CCCC0000CCCCULL;
  x ^= t ^ (t << 14);
  t = (x ^ (x >> 28)) & 0x00000000F0F0F0F0ULL;
  x ^= t ^ (t << 28);
  return Block64::from_word(x);
}

Block64 s_layer(Block64 b, const SBoxLayer& sboxes) {
  std::uint64_t out = 0;
  const std::uint64_t in = b.word();
  for (int i = 0; i < 8; ++i) {
    const auto v = static_cast<std::uint8_t>(in >> (8 * i));
    out |= static_cast<std::uint64_t>(sboxes[i](v)) << (8 * i);
  }
  return Block64::from_word(out);
}

SucInstance::SucInstance(SBoxLayer sboxes, SucParams params)
    : sboxes_(std::move(sboxes)), params_(std::move(params)) {
  params_.validate();
  for (int i = 0; i < 8; ++i) {
    if (!sboxes_[i].is_involution()) {
      throw Error(ErrorCode::kTableValidation,
                  "S-box " + std::to_string(i) + " is not an involution");
    }
  }
}

Block64 SucInstance::apply(Block64 x) const {
  for (int round = 0; round < params_.rounds; ++round) {
    x = s_layer(x, sboxes_);
    if (round + 1 < params_.rounds) x = p_layer(x);
  }
  return x;
}

Bytes SucInstance::table_bytes() const {
  Bytes out;
  out.reserve(2048);
  for (const auto& s : sboxes_) out.insert(out.end(), s.table().begin(), s.table().end());
  return out;
}

Digest SucInstance::table_digest() const { return sha256(table_bytes()); }

double suc_log2_cardinality(int feistel_r, std::uint64_t set_size) {
  return 8.0 * class_log2_cardinality(feistel_r, set_size);
}

}  // namespace sramsuc
