#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "sramsuc/bytes.hpp"

namespace sramsuc {

// Byte stream feeding every randomized operation. Subclasses supply bytes;
// the base class counts them and derives integers portably (little-endian,
// rejection sampling) so results replay identically across platforms.
class EntropySource {
 public:
  virtual ~EntropySource() = default;

  void fill(std::span<std::uint8_t> out);
  std::uint8_t next_byte();
  std::uint64_t next_u64();

  // Uniform in [0, bound). bound must be nonzero.
  std::uint64_t uniform(std::uint64_t bound);

  // ceil(nbits / 8) bytes, masked to the low nbits (nbits <= 64).
  std::uint64_t bits(unsigned nbits);

  std::size_t consumed() const noexcept { return consumed_; }

 protected:
  virtual void produce(std::span<std::uint8_t> out) = 0;

 private:
  std::size_t consumed_ = 0;
};

// SHA-256 in counter mode over (seed, stream, block index). Separate stream
// ids give independent sequences for per-worker or per-instance use.
class DeterministicEntropy final : public EntropySource {
 public:
  explicit DeterministicEntropy(std::uint64_t seed, std::uint64_t stream = 0);

 protected:
  void produce(std::span<std::uint8_t> out) override;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Digest block_{};
  std::size_t offset_ = sizeof(Digest);
};

// Replays a fixed byte string; throws Error(kEntropyExhausted) past the end.
class RecordedEntropy final : public EntropySource {
 public:
  explicit RecordedEntropy(Bytes data) : data_(std::move(data)) {}

  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 protected:
  void produce(std::span<std::uint8_t> out) override;

 private:
  Bytes data_;
  std::size_t pos_ = 0;
};

// Operating-system CSPRNG.
class OsEntropy final : public EntropySource {
 protected:
  void produce(std::span<std::uint8_t> out) override;
};

// Smallest k with 2^k >= n; 0 for n <= 1.
unsigned ceil_log2(std::uint64_t n);

struct IndexDraw {
  std::size_t index = 0;
  std::size_t attempts = 0;  // number of ceil_log2(n)-bit draws consumed
};

// Rejection-samples an index in [0, n) from ceil_log2(n)-bit draws.
IndexDraw draw_index(EntropySource& entropy, std::size_t n);

}  // namespace sramsuc
