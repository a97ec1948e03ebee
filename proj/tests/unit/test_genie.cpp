#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "sramsuc/error.hpp"
#include "sramsuc/genie.hpp"

using namespace sramsuc;

namespace {

const SBoxPool& pool256() {
  static const SBoxPool pool = [] {
    DeterministicEntropy e(0);
    return build_pool(256, e);
  }();
  return pool;
}

SucParams params(int feistel_r = 3) {
  SucParams p;
  p.feistel_r = feistel_r;
  return p;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Entropy that never triggers a rejection for |pool| = 256 and counts bytes.
struct Fixture {
  TempDir dir;
  DeviceFiles files = DeviceFiles::from_stem(dir / "dev-1");
  DeterministicEntropy entropy{42};
  DeviceState dev = DeviceState::manufacture(files, "dev-1", entropy);
};

}  // namespace

TEST(DeviceKey, Deterministic) {
  Fixture f;
  EXPECT_EQ(derive_device_key(f.dev), derive_device_key(DeviceState::load(f.files)));
}

TEST(DeviceKey, DistinctSeedsDistinctKeys) {
  DeterministicEntropy e(1);
  std::set<DeviceKey> keys;
  for (int i = 0; i < 1000; ++i) {
    SiliconSeed seed;
    e.fill(seed);
    keys.insert(derive_device_key(DeviceState("sn", seed)));
  }
  EXPECT_EQ(keys.size(), 1000u);
}

TEST(DeviceKey, SerialIsPartOfTheDerivation) {
  SiliconSeed seed{};
  EXPECT_NE(derive_device_key(DeviceState("a", seed)), derive_device_key(DeviceState("b", seed)));
}

TEST(DeviceKey, MissingSiliconFile) {
  Fixture f;
  std::filesystem::permissions(f.files.silicon, std::filesystem::perms::owner_write,
                               std::filesystem::perm_options::add);
  std::filesystem::remove(f.files.silicon);
  const DeviceState dev = DeviceState::load(f.files);
  try {
    derive_device_key(dev);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFingerprintUnavailable);
    EXPECT_NE(std::string(e.what()).find("fingerprint unavailable"), std::string::npos);
  }
}

TEST(Manufacture, WritesBothFilesAndRefusesOverwrite) {
  Fixture f;
  EXPECT_EQ(std::filesystem::file_size(f.files.silicon), 32u);
  EXPECT_TRUE(std::filesystem::exists(f.files.envm));
  EXPECT_EQ(f.dev.lifecycle(), Lifecycle::kBlank);
  EXPECT_THROW(DeviceState::manufacture(f.files, "dev-1", f.entropy), Error);
}

TEST(Manufacture, RejectsBadSerials) {
  TempDir dir;
  DeterministicEntropy e(1);
  EXPECT_THROW(DeviceState::manufacture(DeviceFiles::from_stem(dir / "x"), "../evil", e), Error);
  EXPECT_FALSE(is_valid_serial(""));
  EXPECT_FALSE(is_valid_serial(".hidden"));
  EXPECT_FALSE(is_valid_serial(std::string(65, 'a')));
  EXPECT_TRUE(is_valid_serial("SN-0001_a.b"));
}

TEST(Seal, RoundTrip) {
  DeterministicEntropy e(3);
  DeviceKey key{};
  e.fill(key);
  Bytes plain(2048);
  e.fill(plain);
  const Bytes aad = {1, 2, 3};
  const SealedBlob blob = seal(key, plain, e, aad);
  EXPECT_EQ(blob.nonce.size(), kSealNonceSize);
  EXPECT_EQ(blob.tag.size(), kSealTagSize);
  EXPECT_NE(blob.ciphertext, plain);
  EXPECT_EQ(unseal(key, blob, aad), plain);
}

TEST(Seal, AnySingleByteTamperIsDetected) {
  DeterministicEntropy e(4);
  DeviceKey key{};
  e.fill(key);
  Bytes plain(2048);
  e.fill(plain);
  const SealedBlob blob = seal(key, plain, e);
  const Bytes raw = blob.concat();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    Bytes bad = raw;
    const std::size_t pos = rng() % bad.size();
    bad[pos] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    const SealedBlob tampered = SealedBlob::split(bad, plain.size());
    ASSERT_EQ(code_of([&] { unseal(key, tampered); }), ErrorCode::kIntegrity) << "byte " << pos;
  }
}

TEST(Seal, WrongKeyOrContextFails) {
  DeterministicEntropy e(6);
  DeviceKey key{}, other{};
  e.fill(key);
  e.fill(other);
  const Bytes plain(64, 0xAA);
  const SealedBlob blob = seal(key, plain, e, Bytes{1});
  EXPECT_EQ(code_of([&] { unseal(other, blob, Bytes{1}); }), ErrorCode::kIntegrity);
  EXPECT_EQ(code_of([&] { unseal(key, blob, Bytes{2}); }), ErrorCode::kIntegrity);
}

TEST(Otpp, SixteenIndexDrawsAtR3) {
  Fixture f;
  // One byte per draw and no rejections for a 256-entry pool.
  const std::size_t before = f.entropy.consumed();
  const OtppReport rep = otpp(f.dev, pool256(), params(3), f.entropy);
  EXPECT_EQ(rep.index_draws, 16u);
  EXPECT_EQ(rep.index_attempts, 16u);
  EXPECT_EQ(rep.index_bytes, 16u);
  EXPECT_EQ(rep.total_bytes, 16u + kSealNonceSize);
  EXPECT_EQ(f.entropy.consumed() - before, rep.total_bytes);
  EXPECT_EQ(f.dev.lifecycle(), Lifecycle::kPersonalized);
  ASSERT_TRUE(f.dev.envm().blob);
  EXPECT_EQ(f.dev.envm().blob->ciphertext.size(), 2048u);
  EXPECT_FALSE(f.dev.loaded());
}

TEST(Otpp, FiftySixDrawsAtR13) {
  Fixture f;
  const OtppReport rep = otpp(f.dev, pool256(), params(13), f.entropy);
  EXPECT_EQ(rep.index_draws, 56u);
  EXPECT_GE(rep.index_attempts, 56u);
}

TEST(Otpp, RejectionsCostExtraDraws) {
  // |pool| = 200 -> 8-bit draws; values >= 200 are rejected.
  DeterministicEntropy pe(1);
  const SBoxPool pool = build_pool(200, pe);
  Bytes stream;
  for (int i = 0; i < 16; ++i) {
    stream.push_back(255);
    stream.push_back(static_cast<std::uint8_t>(i));
  }
  stream.resize(stream.size() + kSealNonceSize, 0);
  RecordedEntropy e(stream);
  Fixture f;
  const OtppReport rep = otpp(f.dev, pool, params(3), e);
  EXPECT_EQ(rep.index_draws, 16u);
  EXPECT_EQ(rep.index_attempts, 32u);
  EXPECT_EQ(e.remaining(), 0u);
}

TEST(Otpp, OnlyOnce) {
  Fixture f;
  otpp(f.dev, pool256(), params(), f.entropy);
  try {
    otpp(f.dev, pool256(), params(), f.entropy);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlreadyPersonalized);
    EXPECT_NE(std::string(e.what()).find("already personalized"), std::string::npos);
  }
}

TEST(Otpp, PoolDigestMismatch) {
  Fixture f;
  SucParams p = params();
  p.pool_digest = Digest{};
  EXPECT_EQ(code_of([&] { otpp(f.dev, pool256(), p, f.entropy); }), ErrorCode::kParamsMismatch);
  EXPECT_EQ(f.dev.lifecycle(), Lifecycle::kBlank);
}

TEST(Otpp, NoClearTablesInEnvm) {
  Fixture f;
  DeterministicEntropy replay = f.entropy;
  const OtppReport rep = otpp(f.dev, pool256(), params(), f.entropy);
  f.dev.save_envm(f.files.envm);
  const SucInstance clear = generate_instance(pool256(), params(), replay);
  ASSERT_EQ(clear.table_digest(), rep.table_digest);
  const std::string envm = slurp(f.files.envm);
  const Bytes tables = clear.table_bytes();
  for (int i = 0; i < 8; ++i) {
    const Bytes table(tables.begin() + 256 * i, tables.begin() + 256 * (i + 1));
    EXPECT_EQ(envm.find(to_hex(table).substr(0, 32)), std::string::npos);
  }
  const std::string raw(tables.begin(), tables.end());
  EXPECT_EQ(envm.find(raw.substr(0, 64)), std::string::npos);
}

TEST(Reinit, ReproducesTablesAfterPowerCycle) {
  Fixture f;
  const OtppReport rep = otpp(f.dev, pool256(), params(), f.entropy);
  f.dev.save_envm(f.files.envm);
  DeviceState booted = DeviceState::load(f.files);
  const auto suc = reinit(booted);
  ASSERT_TRUE(suc);
  EXPECT_EQ(suc->table_digest(), rep.table_digest);
  EXPECT_EQ(booted.loaded(), suc);
  booted.power_cycle();
  EXPECT_FALSE(booted.loaded());
  EXPECT_EQ(reinit(booted)->table_digest(), rep.table_digest);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Block64 x = Block64::from_word(rng());
    ASSERT_EQ(suc->apply(suc->apply(x)), x);
  }
}

TEST(Reinit, CorruptedEnvmLoadsNothing) {
  Fixture f;
  otpp(f.dev, pool256(), params(), f.entropy);
  Bytes raw = f.dev.envm().blob->concat();
  raw[100] ^= 0x40;
  f.dev.mutable_envm().blob = SealedBlob::split(raw, 2048);
  EXPECT_EQ(code_of([&] { reinit(f.dev); }), ErrorCode::kIntegrity);
  EXPECT_FALSE(f.dev.loaded());
}

TEST(Reinit, TamperedParamsBreakTheBinding) {
  Fixture f;
  otpp(f.dev, pool256(), params(), f.entropy);
  f.dev.mutable_envm().params->rounds = 14;
  EXPECT_EQ(code_of([&] { reinit(f.dev); }), ErrorCode::kIntegrity);
}

TEST(Reinit, BlankDevice) {
  Fixture f;
  try {
    reinit(f.dev);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPersonalized);
    EXPECT_NE(std::string(e.what()).find("not personalized"), std::string::npos);
  }
}

TEST(Reinit, WrongSiliconFails) {
  Fixture f;
  otpp(f.dev, pool256(), params(), f.entropy);
  DeviceState clone(f.dev.envm(), SiliconSeed{});
  EXPECT_EQ(code_of([&] { reinit(clone); }), ErrorCode::kIntegrity);
}

TEST(Envm, TextRoundTrip) {
  Fixture f;
  otpp(f.dev, pool256(), params(), f.entropy);
  const EnvmRecord back = EnvmRecord::from_text(f.dev.envm().to_text());
  EXPECT_EQ(back, f.dev.envm());
  EXPECT_THROW(EnvmRecord::from_text("garbage"), Error);
}
