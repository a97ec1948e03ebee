#include "sramsuc/entropy.hpp"

#include <openssl/rand.h>

#include <algorithm>
#include <bit>
#include <cstring>

#include "sramsuc/error.hpp"

namespace sramsuc {

void EntropySource::fill(std::span<std::uint8_t> out) {
  produce(out);
  consumed_ += out.size();
}

std::uint8_t EntropySource::next_byte() {
  std::uint8_t b = 0;
  fill({&b, 1});
  return b;
}

std::uint64_t EntropySource::next_u64() { return bits(64); }

std::uint64_t EntropySource::bits(unsigned nbits) {
  if (nbits > 64) {
    throw Error(ErrorCode::kInvalidArgument, "at most 64 bits per draw");
  }
  std::uint8_t buf[8] = {};
  const std::size_t nbytes = (nbits + 7) / 8;
  fill({buf, nbytes});
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < nbytes; ++i) {
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  }
  if (nbits < 64) v &= (std::uint64_t{1} << nbits) - 1;
  return v;
}

std::uint64_t EntropySource::uniform(std::uint64_t bound) {
  if (bound == 0) {
    throw Error(ErrorCode::kInvalidArgument, "uniform bound must be nonzero");
  }
  if (bound == 1) return 0;
  // Draw only as many bits as the bound needs, then reject.
  const unsigned k = ceil_log2(bound);
  for (;;) {
    std::uint64_t v = bits(k);
    if (v < bound) return v;
  }
}

DeterministicEntropy::DeterministicEntropy(std::uint64_t seed,
                                           std::uint64_t stream)
    : seed_(seed), stream_(stream) {}

void DeterministicEntropy::produce(std::span<std::uint8_t> out) {
  std::size_t pos = 0;
  while (pos < out.size()) {
    if (offset_ == block_.size()) {
      std::uint8_t input[24];
      for (int i = 0; i < 8; ++i) {
        input[i] = static_cast<std::uint8_t>(seed_ >> (8 * i));
        input[8 + i] = static_cast<std::uint8_t>(stream_ >> (8 * i));
        input[16 + i] = static_cast<std::uint8_t>(counter_ >> (8 * i));
      }
      block_ = sha256(input);
      ++counter_;
      offset_ = 0;
    }
    const std::size_t n =
        std::min(out.size() - pos, block_.size() - offset_);
    std::memcpy(out.data() + pos, block_.data() + offset_, n);
    pos += n;
    offset_ += n;
  }
}

void RecordedEntropy::produce(std::span<std::uint8_t> out) {
  if (out.size() > remaining()) {
    throw Error(ErrorCode::kEntropyExhausted, "entropy source exhausted");
  }
  std::memcpy(out.data(), data_.data() + pos_, out.size());
  pos_ += out.size();
}

void OsEntropy::produce(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw Error(ErrorCode::kEntropyExhausted, "OS random generator failed");
  }
}

unsigned ceil_log2(std::uint64_t n) {
  if (n <= 1) return 0;
  return static_cast<unsigned>(std::bit_width(n - 1));
}

IndexDraw draw_index(EntropySource& entropy, std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot draw from an empty set");
  }
  const unsigned k = ceil_log2(n);
  IndexDraw draw;
  if (k == 0) return draw;
  for (;;) {
    ++draw.attempts;
    std::uint64_t v = entropy.bits(k);
    if (v < n) {
      draw.index = static_cast<std::size_t>(v);
      return draw;
    }
  }
}

}  // namespace sramsuc
