#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sramsuc/authority.hpp"
#include "sramsuc/bytes.hpp"
#include "sramsuc/suc.hpp"

namespace sramsuc::net {

// Wire image: "SUC1" | kind (1 byte) | payload length (2 bytes, big-endian)
// | payload. Blocks travel as their 8 raw bytes B_0..B_7.
enum class FrameKind : std::uint8_t {
  kHello = 1,        // serial, UTF-8, 1..64 bytes
  kHelloAck = 2,     // empty
  kChallenge = 3,    // block
  kResponse = 4,     // block
  kEnrollBegin = 5,  // u32 big-endian pair count
  kEnrollEnd = 6,    // u32 big-endian pair count
  kAuthResult = 7,   // 1 byte: 0 accepted, 1 rejected, 2 exhausted
  kError = 8,        // UTF-8 message
};

inline constexpr std::uint8_t kMagic[4] = {'S', 'U', 'C', '1'};
inline constexpr std::size_t kHeaderSize = 7;
inline constexpr std::size_t kMaxPayload = 1024;

const char* to_string(FrameKind kind);

struct Frame {
  FrameKind kind = FrameKind::kError;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

Frame hello(const std::string& serial);
Frame hello_ack();
Frame challenge(Block64 x);
Frame response(Block64 y);
Frame enroll_begin(std::uint32_t count);
Frame enroll_end(std::uint32_t count);
Frame auth_result(AuthResult r);
Frame error_frame(const std::string& message);

Block64 block_of(const Frame& f);
std::uint32_t count_of(const Frame& f);
AuthResult auth_result_of(const Frame& f);
std::string text_of(const Frame& f);

// Throws Error(kProtocol) for frames violating the per-kind payload rules.
Bytes encode(const Frame& frame);
// Exactly one complete frame. Throws Error(kProtocol) on bad magic, unknown
// kind, oversize or ill-sized payload, truncation, or trailing bytes.
Frame decode(ByteSpan wire);

// Incremental decoder for a byte stream. After any error it stays failed.
class FrameDecoder {
 public:
  void feed(ByteSpan data);
  // A frame if one is complete, nullopt if more bytes are needed.
  std::optional<Frame> next();
  std::size_t buffered() const noexcept { return buffer_.size() - pos_; }

 private:
  Bytes buffer_;
  std::size_t pos_ = 0;
  bool failed_ = false;
};

// Owned socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void shutdown() noexcept;

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  // "HOST:PORT"; throws Error(kInvalidArgument).
  static Endpoint parse(const std::string& text);
  std::string to_string() const;
};

// Framed connection with per-read timeouts.
class Connection {
 public:
  Connection(Socket sock, std::chrono::milliseconds timeout);

  static Connection connect(const Endpoint& ep, std::chrono::milliseconds timeout);

  void send(const Frame& frame);
  // Throws Error(kTimeout) or Error(kDeviceUnreachable) on EOF/reset.
  Frame receive();
  void close() noexcept { sock_.shutdown(); }

 private:
  Socket sock_;
  std::chrono::milliseconds timeout_;
  FrameDecoder decoder_;
};

class TaServer;

// One connected agent, seen by the TA as a DeviceChannel.
class Session final : public DeviceChannel {
 public:
  Session(Connection conn, std::string serial) : conn_(std::move(conn)), serial_(std::move(serial)) {}

  std::string serial() const override { return serial_; }
  Block64 query(Block64 x) override;

  void notify(const Frame& frame);
  void close() noexcept { conn_.close(); }
  std::mutex& mutex() noexcept { return mu_; }

 private:
  Connection conn_;
  std::string serial_;
  std::mutex mu_;
};

struct ServerStats {
  std::size_t sessions = 0;
  std::size_t authentications = 0;
  std::vector<std::chrono::microseconds> auth_latency;
};

// TA service. Agents connect and announce their serial; the TA then drives
// enrollment and authentication over the session. Either call enroll() /
// authenticate() from any thread, or install a per-session policy that runs
// on the session's own thread and closes the session afterwards.
class TaServer {
 public:
  using Policy = std::function<void(TaServer&, Session&)>;

  struct Options {
    std::chrono::milliseconds session_timeout{5000};
    Policy policy;  // optional
  };

  TaServer(const Endpoint& listen, TrustedAuthority& authority, EntropySource& entropy);
  TaServer(const Endpoint& listen, TrustedAuthority& authority, EntropySource& entropy,
           Options options);
  ~TaServer();
  TaServer(const TaServer&) = delete;
  TaServer& operator=(const TaServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }

  void stop();
  // Blocks until stop() is called or the accept loop fails.
  void wait();

  // Blocks until an agent with this serial is connected.
  bool wait_for(const std::string& serial, std::chrono::milliseconds timeout);
  std::vector<std::string> connected() const;

  EnrollReport enroll(const std::string& serial, std::size_t t);
  AuthOutcome authenticate(const std::string& serial);
  AuthOutcome inverse_authenticate(const std::string& serial);

  // Session-level versions used by policies; the caller holds no locks.
  EnrollReport enroll(Session& session, std::size_t t);
  AuthOutcome authenticate(Session& session, Direction dir = Direction::kForward);

  ServerStats stats() const;
  TrustedAuthority& authority() noexcept { return authority_; }

 private:
  void accept_loop();
  void run_session(Socket sock);
  std::shared_ptr<Session> session_for(const std::string& serial);

  TrustedAuthority& authority_;
  EntropySource& entropy_;
  std::mutex entropy_mu_;
  Options options_;
  Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::vector<std::thread> workers_;
  std::vector<int> open_fds_;
  ServerStats stats_;
};

struct AgentStats {
  std::size_t challenges = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t exhausted = 0;
  std::optional<std::string> error;  // ERROR frame text from the TA
};

// Device-side agent. Answers CHALLENGE frames with the loaded cipher; a null
// cipher (failed reinit) answers with ERROR frames. Returns when the TA
// closes the session.
AgentStats run_agent(const std::string& serial, std::shared_ptr<const SucInstance> suc,
                     const Endpoint& connect,
                     std::chrono::milliseconds idle_timeout = std::chrono::milliseconds(30000));

}  // namespace sramsuc::net
