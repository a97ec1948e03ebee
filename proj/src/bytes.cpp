#include "sramsuc/bytes.hpp"

#include <openssl/evp.h>

#include "sramsuc/error.hpp"

namespace sramsuc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kEntropyExhausted: return "entropy exhausted";
    case ErrorCode::kSearchBudgetExceeded: return "search budget exceeded";
    case ErrorCode::kIo: return "i/o failure";
    case ErrorCode::kFormat: return "malformed data";
    case ErrorCode::kFingerprintUnavailable: return "fingerprint unavailable";
    case ErrorCode::kIntegrity: return "integrity failure";
    case ErrorCode::kAlreadyPersonalized: return "device already personalized";
    case ErrorCode::kNotPersonalized: return "not personalized";
    case ErrorCode::kTableValidation: return "table validation failure";
    case ErrorCode::kParamsMismatch: return "pool/params mismatch";
    case ErrorCode::kDeviceUnreachable: return "device unreachable";
    case ErrorCode::kDeviceNotInitialized: return "device not initialized";
    case ErrorCode::kDuplicateEnrollment: return "duplicate enrollment";
    case ErrorCode::kUnknownDevice: return "unknown device";
    case ErrorCode::kProtocol: return "protocol error";
    case ErrorCode::kTimeout: return "timeout";
  }
  return "unknown error";
}

std::string to_hex(ByteSpan data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

namespace {

int nibble_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw Error(ErrorCode::kFormat, "hex string has odd length");
  }
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble_value(hex[2 * i]);
    int lo = nibble_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(ErrorCode::kFormat, "invalid hex character");
    }
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

Digest sha256(ByteSpan data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != out.size()) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  return out;
}

}  // namespace sramsuc
