#include <gtest/gtest.h>

#include <set>

#include "sramsuc/bytes.hpp"
#include "sramsuc/entropy.hpp"
#include "sramsuc/error.hpp"

using namespace sramsuc;

TEST(Hex, RoundTrip) {
  const Bytes data = {0x00, 0x7f, 0x80, 0xff, 0x12};
  EXPECT_EQ(to_hex(data), "007f80ff12");
  EXPECT_EQ(from_hex("007F80ff12"), data);
}

TEST(Hex, RejectsMalformedInput) {
  EXPECT_THROW(from_hex("abc"), Error);
  EXPECT_THROW(from_hex("zz"), Error);
}

TEST(Sha256, KnownAnswer) {
  const std::string abc = "abc";
  const Bytes data(abc.begin(), abc.end());
  EXPECT_EQ(to_hex(sha256(data)), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Entropy, DeterministicStreamsReplay) {
  DeterministicEntropy a(7, 1);
  DeterministicEntropy b(7, 1);
  DeterministicEntropy c(7, 2);
  Bytes x(100), y(100), z(100);
  a.fill(x);
  b.fill(y);
  c.fill(z);
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
  EXPECT_EQ(a.consumed(), 100u);
}

TEST(Entropy, ChunkingDoesNotChangeTheStream) {
  DeterministicEntropy a(3);
  DeterministicEntropy b(3);
  Bytes whole(70);
  a.fill(whole);
  Bytes pieces;
  for (int i = 0; i < 70; ++i) pieces.push_back(b.next_byte());
  EXPECT_EQ(whole, pieces);
}

TEST(Entropy, RecordedSourceExhausts) {
  RecordedEntropy e(Bytes{1, 2});
  EXPECT_EQ(e.next_byte(), 1);
  EXPECT_EQ(e.remaining(), 1u);
  EXPECT_EQ(e.next_byte(), 2);
  try {
    e.next_byte();
    FAIL() << "expected exhaustion";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kEntropyExhausted);
  }
}

TEST(Entropy, CeilLog2) {
  EXPECT_EQ(ceil_log2(0), 0u);
  EXPECT_EQ(ceil_log2(1), 0u);
  EXPECT_EQ(ceil_log2(2), 1u);
  EXPECT_EQ(ceil_log2(3), 2u);
  EXPECT_EQ(ceil_log2(256), 8u);
  EXPECT_EQ(ceil_log2(257), 9u);
  EXPECT_EQ(ceil_log2(std::uint64_t{1} << 21), 21u);
}

TEST(Entropy, IndexDrawUsesOneByteFor256) {
  RecordedEntropy e(Bytes{0xab});
  const IndexDraw d = draw_index(e, 256);
  EXPECT_EQ(d.index, 0xabu);
  EXPECT_EQ(d.attempts, 1u);
  EXPECT_EQ(e.consumed(), 1u);
}

TEST(Entropy, IndexDrawRejectsOutOfRange) {
  // n = 200 needs 8 bits; 250 and 201 are rejected, 17 is accepted.
  RecordedEntropy e(Bytes{250, 201, 17});
  const IndexDraw d = draw_index(e, 200);
  EXPECT_EQ(d.index, 17u);
  EXPECT_EQ(d.attempts, 3u);
}

TEST(Entropy, IndexDrawMasksHighBits) {
  // n = 5 needs 3 bits: 0xf9 & 7 = 1.
  RecordedEntropy e(Bytes{0xf9});
  EXPECT_EQ(draw_index(e, 5).index, 1u);
}

TEST(Entropy, UniformCoversRange) {
  DeterministicEntropy e(11);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = e.uniform(10);
    ASSERT_LT(v, 10u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Entropy, OsSourceProducesBytes) {
  OsEntropy e;
  EXPECT_NE(e.next_u64(), e.next_u64());
  EXPECT_EQ(e.consumed(), 16u);
}
