#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sramsuc {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

// Lowercase hex, two characters per byte, in memory order.
std::string to_hex(ByteSpan data);

// Accepts upper or lower case; throws Error(kFormat) on odd length or
// non-hex characters.
Bytes from_hex(std::string_view hex);

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(ByteSpan data);

}  // namespace sramsuc
