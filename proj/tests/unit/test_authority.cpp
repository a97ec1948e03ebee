#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "sramsuc/authority.hpp"
#include "sramsuc/error.hpp"
#include "sramsuc/genie.hpp"

using namespace sramsuc;

namespace {

const SBoxPool& pool() {
  static const SBoxPool p = [] {
    DeterministicEntropy e(0);
    return build_pool(64, e);
  }();
  return p;
}

std::shared_ptr<const SucInstance> make_suc(std::uint64_t seed) {
  DeterministicEntropy e(seed, 77);
  return std::make_shared<const SucInstance>(generate_instance(pool(), SucParams{}, e));
}

// Fault-injected device: answers with a fixed permutation that is not an
// involution.
class ShiftingDevice final : public DeviceChannel {
 public:
  std::string serial() const override { return "faulty"; }
  Block64 query(Block64 x) override { return Block64::from_word(x.word() + 1); }
};

class FailingDevice final : public DeviceChannel {
 public:
  std::string serial() const override { return "down"; }
  Block64 query(Block64) override { throw Error(ErrorCode::kDeviceUnreachable, "gone"); }
};

}  // namespace

TEST(Enroll, PayloadAccounting) {
  LocalDeviceChannel dev("a", make_suc(1));
  DeterministicEntropy e(1);
  EnrollReport rep;
  const UirRecord uir = enroll(dev, 16, e, SucParams{}, &rep);
  EXPECT_EQ(uir.pairs.size(), 16u);
  EXPECT_EQ(rep.payload_bytes, 256u);
  enroll(dev, 2048, e, SucParams{}, &rep);
  EXPECT_EQ(rep.payload_bytes, 32768u);
}

TEST(Enroll, RecordsTheCipherOutput) {
  const auto suc = make_suc(2);
  LocalDeviceChannel dev("a", suc);
  DeterministicEntropy e(2);
  const UirRecord uir = enroll(dev, 1, e, SucParams{});
  ASSERT_EQ(uir.pairs.size(), 1u);
  EXPECT_EQ(uir.pairs[0].response, suc->apply(uir.pairs[0].challenge));
  EXPECT_FALSE(uir.pairs[0].used);
}

TEST(Enroll, ChallengesAreDistinct) {
  LocalDeviceChannel dev("a", make_suc(3));
  // Every challenge draw repeats once before a fresh value.
  Bytes stream;
  for (std::uint8_t i = 0; i < 10; ++i) {
    for (int rep = 0; rep < 2; ++rep) {
      for (int b = 0; b < 8; ++b) stream.push_back(i);
    }
  }
  RecordedEntropy e(stream);
  const UirRecord uir = enroll(dev, 10, e, SucParams{});
  std::set<Block64> seen;
  for (const auto& p : uir.pairs) seen.insert(p.challenge);
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Authenticate, GenuineDeviceConsumesPairsInOrder) {
  LocalDeviceChannel dev("a", make_suc(4));
  DeterministicEntropy e(4);
  UirRecord uir = enroll(dev, 4, e, SucParams{});
  for (std::size_t i = 0; i < 4; ++i) {
    const AuthOutcome o = authenticate(dev, uir);
    EXPECT_EQ(o.result, AuthResult::kAccepted);
    ASSERT_TRUE(o.pair_index);
    EXPECT_EQ(*o.pair_index, i);
    EXPECT_EQ(uir.unused_count(), 3 - i);
  }
  const AuthOutcome done = authenticate(dev, uir);
  EXPECT_EQ(done.result, AuthResult::kExhausted);
  EXPECT_FALSE(done.pair_index);
  EXPECT_EQ(uir.audit.size(), 4u);
}

TEST(Authenticate, RandomSelectionUsesEachPairOnce) {
  LocalDeviceChannel dev("a", make_suc(5));
  DeterministicEntropy e(5);
  UirRecord uir = enroll(dev, 50, e, SucParams{});
  std::set<std::size_t> used;
  for (int i = 0; i < 50; ++i) {
    const AuthOutcome o = authenticate(dev, uir, PairSelection::kRandom, &e);
    ASSERT_EQ(o.result, AuthResult::kAccepted);
    EXPECT_TRUE(used.insert(*o.pair_index).second);
  }
  EXPECT_EQ(authenticate(dev, uir, PairSelection::kRandom, &e).result, AuthResult::kExhausted);
  UirRecord fresh = enroll(dev, 1, e, SucParams{});
  EXPECT_THROW(authenticate(dev, fresh, PairSelection::kRandom, nullptr), Error);
}

TEST(Authenticate, ReplayedResponseIsRejected) {
  const auto suc = make_suc(6);
  LocalDeviceChannel dev("a", suc);
  DeterministicEntropy e(6);
  UirRecord uir = enroll(dev, 2, e, SucParams{});
  ASSERT_EQ(authenticate(dev, uir).result, AuthResult::kAccepted);
  // An attacker recorded (x0, y0) and now answers every challenge with y0.
  const Block64 recorded = uir.pairs[0].response;
  struct Replayer final : DeviceChannel {
    Block64 y;
    std::string serial() const override { return "a"; }
    Block64 query(Block64) override { return y; }
  } replayer;
  replayer.y = recorded;
  const AuthOutcome o = authenticate(replayer, uir);
  EXPECT_EQ(o.result, AuthResult::kRejected);
  EXPECT_EQ(*o.pair_index, 1u);
  EXPECT_TRUE(uir.pairs[1].used);
}

TEST(Authenticate, ImpostorAlwaysRejected) {
  LocalDeviceChannel genuine("a", make_suc(7));
  LocalDeviceChannel impostor("a", make_suc(8));
  DeterministicEntropy e(7);
  UirRecord uir = enroll(genuine, 1000, e, SucParams{});
  std::size_t rejected = 0;
  for (int i = 0; i < 1000; ++i) rejected += authenticate(impostor, uir).result == AuthResult::kRejected;
  EXPECT_EQ(rejected, 1000u);
  EXPECT_EQ(uir.unused_count(), 0u);
}

TEST(Authenticate, DeviceWithoutCipherIsRejected) {
  LocalDeviceChannel genuine("a", make_suc(9));
  LocalDeviceChannel broken("a", nullptr);
  DeterministicEntropy e(9);
  UirRecord uir = enroll(genuine, 2, e, SucParams{});
  const AuthOutcome o = authenticate(broken, uir);
  EXPECT_EQ(o.result, AuthResult::kRejected);
  EXPECT_FALSE(o.detail.empty());
  EXPECT_EQ(uir.unused_count(), 1u);
}

TEST(Authenticate, TransportFailurePropagatesButStillConsumes) {
  LocalDeviceChannel genuine("down", make_suc(10));
  DeterministicEntropy e(10);
  UirRecord uir = enroll(genuine, 2, e, SucParams{});
  FailingDevice dev;
  EXPECT_THROW(authenticate(dev, uir), Error);
  EXPECT_EQ(uir.unused_count(), 1u);
}

TEST(InverseAuthenticate, GenuineDevice) {
  LocalDeviceChannel dev("a", make_suc(11));
  DeterministicEntropy e(11);
  UirRecord uir = enroll(dev, 2, e, SucParams{});
  EXPECT_EQ(inverse_authenticate(dev, uir).result, AuthResult::kAccepted);
  EXPECT_EQ(authenticate(dev, uir).result, AuthResult::kAccepted);
  ASSERT_EQ(uir.audit.size(), 2u);
  EXPECT_EQ(uir.audit[0].direction, Direction::kInverse);
  EXPECT_EQ(uir.audit[1].direction, Direction::kForward);
  EXPECT_EQ(inverse_authenticate(dev, uir).result, AuthResult::kExhausted);
}

TEST(InverseAuthenticate, NonInvolutiveDeviceRejected) {
  ShiftingDevice dev;
  DeterministicEntropy e(12);
  UirRecord uir = enroll(dev, 2, e, SucParams{});
  EXPECT_EQ(authenticate(dev, uir).result, AuthResult::kAccepted);
  EXPECT_EQ(inverse_authenticate(dev, uir).result, AuthResult::kRejected);
}

TEST(UirStore, TextRoundTrip) {
  LocalDeviceChannel dev("a", make_suc(13));
  DeterministicEntropy e(13);
  UirRecord uir = enroll(dev, 5, e, SucParams{});
  authenticate(dev, uir);
  inverse_authenticate(dev, uir);
  EXPECT_EQ(UirStore::from_text(UirStore::to_text(uir)), uir);
}

TEST(UirStore, PersistsConsumption) {
  TempDir dir;
  LocalDeviceChannel dev("dev-a", make_suc(14));
  DeterministicEntropy e(14);
  {
    UirStore store(dir.path);
    TrustedAuthority ta(store);
    const EnrollReport rep = ta.enroll(dev, 3, e);
    EXPECT_EQ(rep.payload_bytes, 48u);
    EXPECT_EQ(ta.authenticate(dev).result, AuthResult::kAccepted);
  }
  UirStore reopened(dir.path);
  TrustedAuthority ta(reopened);
  ASSERT_TRUE(ta.is_enrolled("dev-a"));
  const auto rec = reopened.find("dev-a");
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->unused_count(), 2u);
  EXPECT_TRUE(rec->pairs[0].used);
  EXPECT_EQ(ta.authenticate(dev).pair_index, 1u);
  EXPECT_EQ(ta.authenticate(dev).pair_index, 2u);
  EXPECT_EQ(ta.authenticate(dev).result, AuthResult::kExhausted);
  const auto stats = ta.stats();
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].total, 3u);
  EXPECT_EQ(stats[0].unused, 0u);
}

TEST(UirStore, DuplicateEnrollmentAndUnknownDevice) {
  UirStore store;
  TrustedAuthority ta(store);
  LocalDeviceChannel dev("a", make_suc(15));
  DeterministicEntropy e(15);
  ta.enroll(dev, 1, e);
  try {
    ta.enroll(dev, 1, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kDuplicateEnrollment);
  }
  LocalDeviceChannel stranger("b", make_suc(16));
  try {
    ta.authenticate(stranger);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kUnknownDevice);
  }
}

TEST(UirStore, RejectsDoubleUseInFile) {
  LocalDeviceChannel dev("a", make_suc(17));
  DeterministicEntropy e(17);
  UirRecord uir = enroll(dev, 2, e, SucParams{});
  authenticate(dev, uir);
  std::string text = UirStore::to_text(uir);
  text += "used=0,fwd,1\n";
  EXPECT_THROW(UirStore::from_text(text), Error);
}
