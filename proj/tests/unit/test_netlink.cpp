#include <gtest/gtest.h>

#include <future>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "sramsuc/error.hpp"
#include "sramsuc/genie.hpp"
#include "sramsuc/netlink.hpp"

using namespace sramsuc;
using namespace sramsuc::net;
using namespace std::chrono_literals;

namespace {

const SBoxPool& pool() {
  static const SBoxPool p = [] {
    DeterministicEntropy e(0);
    return build_pool(64, e);
  }();
  return p;
}

std::shared_ptr<const SucInstance> make_suc(std::uint64_t seed) {
  DeterministicEntropy e(seed, 5);
  return std::make_shared<const SucInstance>(generate_instance(pool(), SucParams{}, e));
}

Frame random_frame(std::mt19937_64& rng) {
  switch (rng() % 8) {
    case 0: {
      std::string s(1 + rng() % 64, 'x');
      for (auto& c : s) c = static_cast<char>('a' + rng() % 26);
      return hello(s);
    }
    case 1: return hello_ack();
    case 2: return challenge(Block64::from_word(rng()));
    case 3: return response(Block64::from_word(rng()));
    case 4: return enroll_begin(static_cast<std::uint32_t>(rng()));
    case 5: return enroll_end(static_cast<std::uint32_t>(rng()));
    case 6: return auth_result(static_cast<AuthResult>(rng() % 3));
    default: {
      std::string s(rng() % 200, 'e');
      return error_frame(s);
    }
  }
}

ErrorCode decode_error(const Bytes& wire) {
  try {
    decode(wire);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Frame, ChallengeWireImage) {
  const Bytes wire = encode(challenge(Block64{}));
  EXPECT_EQ(wire.size(), 15u);
  EXPECT_EQ(to_hex(wire), "535543310300080000000000000000");
}

TEST(Frame, BlocksTravelB0First) {
  const Bytes wire = encode(response(Block64::from_hex("0123456789abcdef")));
  EXPECT_EQ(to_hex(wire), "535543310400080123456789abcdef");
}

TEST(Frame, RoundTrip) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const Frame f = random_frame(rng);
    ASSERT_EQ(decode(encode(f)), f);
  }
}

TEST(Frame, RejectsMalformedInput) {
  Bytes wire = encode(challenge(Block64{}));
  Bytes bad_magic = wire;
  bad_magic[0] = 'X';
  EXPECT_EQ(decode_error(bad_magic), ErrorCode::kProtocol);

  Bytes unknown = wire;
  unknown[4] = 99;
  EXPECT_EQ(decode_error(unknown), ErrorCode::kProtocol);

  EXPECT_EQ(decode_error(Bytes(wire.begin(), wire.end() - 1)), ErrorCode::kProtocol);
  Bytes trailing = wire;
  trailing.push_back(0);
  EXPECT_EQ(decode_error(trailing), ErrorCode::kProtocol);

  Bytes wrong_size = {'S', 'U', 'C', '1', 3, 0, 7, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(decode_error(wrong_size), ErrorCode::kProtocol);

  Bytes oversize = {'S', 'U', 'C', '1', 8, 0x04, 0x01};
  oversize.resize(oversize.size() + 1025, 'a');
  EXPECT_EQ(decode_error(oversize), ErrorCode::kProtocol);

  EXPECT_THROW(encode(Frame{FrameKind::kChallenge, Bytes(3)}), Error);
  EXPECT_THROW(encode(hello("")), Error);
}

TEST(Frame, PayloadAccessors) {
  EXPECT_EQ(count_of(enroll_begin(1024)), 1024u);
  EXPECT_EQ(auth_result_of(auth_result(AuthResult::kExhausted)), AuthResult::kExhausted);
  EXPECT_EQ(text_of(hello("dev")), "dev");
  EXPECT_EQ(encode(enroll_begin(0x01020304)).back(), 0x04);
}

TEST(Decoder, ResumesAcrossPartialReads) {
  std::mt19937_64 rng(2);
  std::vector<Frame> frames;
  Bytes stream;
  for (int i = 0; i < 500; ++i) {
    frames.push_back(random_frame(rng));
    const Bytes w = encode(frames.back());
    stream.insert(stream.end(), w.begin(), w.end());
  }
  FrameDecoder dec;
  std::vector<Frame> got;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    const std::size_t n = std::min<std::size_t>(1 + rng() % 20, stream.size() - pos);
    dec.feed(ByteSpan(stream.data() + pos, n));
    pos += n;
    while (auto f = dec.next()) got.push_back(*f);
  }
  EXPECT_EQ(got, frames);
  EXPECT_EQ(dec.buffered(), 0u);
}

TEST(Decoder, FuzzNeverCrashes) {
  std::mt19937_64 rng(3);
  std::size_t errors = 0;
  for (int i = 0; i < 100000; ++i) {
    Bytes junk(rng() % 40);
    for (auto& b : junk) b = static_cast<std::uint8_t>(rng());
    if (i % 2 == 0 && junk.size() >= 4) std::copy(kMagic, kMagic + 4, junk.begin());
    try {
      decode(junk);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kProtocol);
      ++errors;
    }
    FrameDecoder dec;
    dec.feed(junk);
    try {
      while (dec.next()) {
      }
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kProtocol);
    }
  }
  EXPECT_GT(errors, 99000u);
}

TEST(Decoder, StaysFailed) {
  FrameDecoder dec;
  dec.feed(Bytes{'X', 'U', 'C', '1', 1, 0, 0});
  EXPECT_THROW(dec.next(), Error);
  const Bytes good = encode(hello_ack());
  dec.feed(good);
  EXPECT_THROW(dec.next(), Error);
}

TEST(Endpoint, Parse) {
  const Endpoint ep = Endpoint::parse("127.0.0.1:7400");
  EXPECT_EQ(ep.host, "127.0.0.1");
  EXPECT_EQ(ep.port, 7400);
  EXPECT_THROW(Endpoint::parse("nohost"), Error);
  EXPECT_THROW(Endpoint::parse("h:99999"), Error);
}

TEST(Network, EnrollThenAuthenticateUntilExhausted) {
  UirStore store;
  TrustedAuthority ta(store);
  DeterministicEntropy e(1);
  TaServer server(Endpoint::parse("127.0.0.1:0"), ta, e);
  auto agent = std::async(std::launch::async, [&] {
    return run_agent("dev-1", make_suc(1), Endpoint{"127.0.0.1", server.port()}, 10s);
  });
  ASSERT_TRUE(server.wait_for("dev-1", 5s));
  const EnrollReport rep = server.enroll("dev-1", 16);
  EXPECT_EQ(rep.payload_bytes, 256u);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(server.authenticate("dev-1").result, AuthResult::kAccepted);
  EXPECT_EQ(server.authenticate("dev-1").result, AuthResult::kExhausted);
  EXPECT_EQ(server.stats().auth_latency.size(), 16u);
  server.stop();
  const AgentStats st = agent.get();
  EXPECT_EQ(st.challenges, 32u);
  EXPECT_EQ(st.accepted, 16u);
  EXPECT_EQ(st.exhausted, 1u);
}

TEST(Network, ConcurrentAgentsStayIsolated) {
  UirStore store;
  TrustedAuthority ta(store);
  DeterministicEntropy e(2);
  TaServer server(Endpoint::parse("127.0.0.1:0"), ta, e);
  const Endpoint ep{"127.0.0.1", server.port()};
  auto a = std::async(std::launch::async, [&] { return run_agent("dev-a", make_suc(2), ep, 10s); });
  auto b = std::async(std::launch::async, [&] { return run_agent("dev-b", make_suc(3), ep, 10s); });
  ASSERT_TRUE(server.wait_for("dev-a", 5s));
  ASSERT_TRUE(server.wait_for("dev-b", 5s));
  server.enroll("dev-a", 40);
  server.enroll("dev-b", 40);
  auto drive = [&](const std::string& sn) {
    std::size_t ok = 0;
    for (int i = 0; i < 20; ++i) {
      ok += server.authenticate(sn).result == AuthResult::kAccepted;
      ok += server.inverse_authenticate(sn).result == AuthResult::kAccepted;
    }
    return ok;
  };
  auto ra = std::async(std::launch::async, drive, "dev-a");
  auto rb = std::async(std::launch::async, drive, "dev-b");
  EXPECT_EQ(ra.get(), 40u);
  EXPECT_EQ(rb.get(), 40u);
  server.stop();
  EXPECT_EQ(a.get().rejected, 0u);
  EXPECT_EQ(b.get().rejected, 0u);
}

TEST(Network, DeviceWithoutCipherIsRejected) {
  UirStore store;
  TrustedAuthority ta(store);
  DeterministicEntropy e(3);
  LocalDeviceChannel genuine("dev-t", make_suc(4));
  ta.enroll(genuine, 4, e);
  TaServer server(Endpoint::parse("127.0.0.1:0"), ta, e);
  auto agent = std::async(std::launch::async, [&] {
    return run_agent("dev-t", nullptr, Endpoint{"127.0.0.1", server.port()}, 10s);
  });
  ASSERT_TRUE(server.wait_for("dev-t", 5s));
  const AuthOutcome o = server.authenticate("dev-t");
  EXPECT_EQ(o.result, AuthResult::kRejected);
  EXPECT_NE(o.detail.find("not initialized"), std::string::npos);
  server.stop();
  EXPECT_EQ(agent.get().rejected, 1u);
}

TEST(Network, PolicyModeEnrollsAndAuthenticates) {
  UirStore store;
  TrustedAuthority ta(store);
  DeterministicEntropy e(4);
  TaServer::Options opts;
  opts.policy = [](TaServer& server, Session& session) {
    if (!server.authority().is_enrolled(session.serial())) server.enroll(session, 3);
    for (int i = 0; i < 4; ++i) server.authenticate(session);
  };
  TaServer server(Endpoint::parse("127.0.0.1:0"), ta, e, opts);
  const AgentStats st = run_agent("dev-p", make_suc(5), Endpoint{"127.0.0.1", server.port()}, 10s);
  EXPECT_EQ(st.accepted, 3u);
  EXPECT_EQ(st.exhausted, 1u);
  server.stop();
}

TEST(Network, ImpostorClaimingASerialIsRejected) {
  UirStore store;
  TrustedAuthority ta(store);
  DeterministicEntropy e(5);
  LocalDeviceChannel genuine("dev-g", make_suc(6));
  ta.enroll(genuine, 50, e);
  TaServer server(Endpoint::parse("127.0.0.1:0"), ta, e);
  auto agent = std::async(std::launch::async, [&] {
    return run_agent("dev-g", make_suc(7), Endpoint{"127.0.0.1", server.port()}, 10s);
  });
  ASSERT_TRUE(server.wait_for("dev-g", 5s));
  for (int i = 0; i < 50; ++i) EXPECT_EQ(server.authenticate("dev-g").result, AuthResult::kRejected);
  server.stop();
  EXPECT_EQ(agent.get().rejected, 50u);
}

TEST(Network, UnreachableServer) {
  // Bind and close a listener to find a port nobody is listening on.
  UirStore store;
  TrustedAuthority ta(store);
  DeterministicEntropy e(6);
  std::uint16_t port = 0;
  {
    TaServer server(Endpoint::parse("127.0.0.1:0"), ta, e);
    port = server.port();
    server.stop();
  }
  try {
    run_agent("x", make_suc(1), Endpoint{"127.0.0.1", port}, 1s);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kDeviceUnreachable);
  }
}
