#include "sramsuc/netlink.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <spdlog/spdlog.h>

#include "sramsuc/error.hpp"
#include "sramsuc/genie.hpp"

namespace sramsuc::net {

namespace {

std::size_t expected_payload(FrameKind kind, std::size_t actual) {
  switch (kind) {
    case FrameKind::kHelloAck: return 0;
    case FrameKind::kChallenge:
    case FrameKind::kResponse: return 8;
    case FrameKind::kEnrollBegin:
    case FrameKind::kEnrollEnd: return 4;
    case FrameKind::kAuthResult: return 1;
    case FrameKind::kHello: return (actual >= 1 && actual <= 64) ? actual : 1;
    case FrameKind::kError: return actual;
  }
  return actual;
}

bool known_kind(std::uint8_t k) { return k >= 1 && k <= 8; }

void check_payload(FrameKind kind, const Bytes& payload) {
  if (payload.size() > kMaxPayload) {
    throw Error(ErrorCode::kProtocol, "oversize payload");
  }
  if (payload.size() != expected_payload(kind, payload.size())) {
    throw Error(ErrorCode::kProtocol,
                std::string("bad payload size for ") + to_string(kind));
  }
  if (kind == FrameKind::kAuthResult && payload[0] > 2) {
    throw Error(ErrorCode::kProtocol, "unknown auth result code");
  }
}

// Returns nullopt if `data` does not yet hold a full frame; throws on
// malformed headers as soon as they are visible.
std::optional<std::pair<Frame, std::size_t>> try_decode(ByteSpan data) {
  const std::size_t magic_seen = std::min<std::size_t>(data.size(), 4);
  if (std::memcmp(data.data(), kMagic, magic_seen) != 0) {
    throw Error(ErrorCode::kProtocol, "bad magic");
  }
  if (data.size() >= 5 && !known_kind(data[4])) {
    throw Error(ErrorCode::kProtocol, "unknown frame kind " + std::to_string(data[4]));
  }
  if (data.size() < kHeaderSize) return std::nullopt;
  const std::size_t len = (static_cast<std::size_t>(data[5]) << 8) | data[6];
  if (len > kMaxPayload) throw Error(ErrorCode::kProtocol, "oversize payload");
  if (data.size() < kHeaderSize + len) return std::nullopt;
  Frame f;
  f.kind = static_cast<FrameKind>(data[4]);
  f.payload.assign(data.begin() + kHeaderSize, data.begin() + kHeaderSize + len);
  check_payload(f.kind, f.payload);
  return std::make_pair(std::move(f), kHeaderSize + len);
}

Frame u32_frame(FrameKind kind, std::uint32_t v) {
  return Frame{kind, Bytes{static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                           static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)}};
}

void expect_kind(const Frame& f, FrameKind kind) {
  if (f.kind != kind) {
    throw Error(ErrorCode::kProtocol, std::string("expected ") + to_string(kind) + ", got " +
                                          to_string(f.kind));
  }
}

std::string errno_text() { return std::strerror(errno); }

// Entropy shared by concurrent sessions.
class LockedEntropy final : public EntropySource {
 public:
  LockedEntropy(EntropySource& inner, std::mutex& mu) : inner_(inner), mu_(mu) {}

 protected:
  void produce(std::span<std::uint8_t> out) override {
    std::lock_guard lock(mu_);
    inner_.fill(out);
  }

 private:
  EntropySource& inner_;
  std::mutex& mu_;
};

}  // namespace

const char* to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::kHello: return "HELLO";
    case FrameKind::kHelloAck: return "HELLO_ACK";
    case FrameKind::kChallenge: return "CHALLENGE";
    case FrameKind::kResponse: return "RESPONSE";
    case FrameKind::kEnrollBegin: return "ENROLL_BEGIN";
    case FrameKind::kEnrollEnd: return "ENROLL_END";
    case FrameKind::kAuthResult: return "AUTH_RESULT";
    case FrameKind::kError: return "ERROR";
  }
  return "?";
}

Frame hello(const std::string& serial) { return Frame{FrameKind::kHello, Bytes(serial.begin(), serial.end())}; }
Frame hello_ack() { return Frame{FrameKind::kHelloAck, {}}; }
Frame challenge(Block64 x) {
  const auto b = x.bytes();
  return Frame{FrameKind::kChallenge, Bytes(b.begin(), b.end())};
}
Frame response(Block64 y) {
  const auto b = y.bytes();
  return Frame{FrameKind::kResponse, Bytes(b.begin(), b.end())};
}
Frame enroll_begin(std::uint32_t count) { return u32_frame(FrameKind::kEnrollBegin, count); }
Frame enroll_end(std::uint32_t count) { return u32_frame(FrameKind::kEnrollEnd, count); }
Frame auth_result(AuthResult r) {
  return Frame{FrameKind::kAuthResult, Bytes{static_cast<std::uint8_t>(r)}};
}
Frame error_frame(const std::string& message) {
  std::string m = message.substr(0, kMaxPayload);
  return Frame{FrameKind::kError, Bytes(m.begin(), m.end())};
}

Block64 block_of(const Frame& f) {
  if (f.payload.size() != 8) throw Error(ErrorCode::kProtocol, "frame does not carry a block");
  return Block64::from_bytes(std::span<const std::uint8_t, 8>(f.payload.data(), 8));
}

std::uint32_t count_of(const Frame& f) {
  if (f.payload.size() != 4) throw Error(ErrorCode::kProtocol, "frame does not carry a count");
  return (std::uint32_t{f.payload[0]} << 24) | (std::uint32_t{f.payload[1]} << 16) |
         (std::uint32_t{f.payload[2]} << 8) | f.payload[3];
}

AuthResult auth_result_of(const Frame& f) {
  if (f.payload.size() != 1 || f.payload[0] > 2) throw Error(ErrorCode::kProtocol, "bad auth result");
  return static_cast<AuthResult>(f.payload[0]);
}

std::string text_of(const Frame& f) { return std::string(f.payload.begin(), f.payload.end()); }

Bytes encode(const Frame& frame) {
  if (!known_kind(static_cast<std::uint8_t>(frame.kind))) {
    throw Error(ErrorCode::kProtocol, "unknown frame kind");
  }
  check_payload(frame.kind, frame.payload);
  Bytes out(std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(frame.kind));
  out.push_back(static_cast<std::uint8_t>(frame.payload.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(frame.payload.size()));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

Frame decode(ByteSpan wire) {
  if (wire.empty()) throw Error(ErrorCode::kProtocol, "truncated frame");
  auto got = try_decode(wire);
  if (!got) throw Error(ErrorCode::kProtocol, "truncated frame");
  if (got->second != wire.size()) throw Error(ErrorCode::kProtocol, "trailing bytes after frame");
  return std::move(got->first);
}

void FrameDecoder::feed(ByteSpan data) {
  if (pos_ > 0 && pos_ == buffer_.size()) {
    buffer_.clear();
    pos_ = 0;
  }
  buffer_.insert(buffer_.end(), data.begin(), data.end());
}

std::optional<Frame> FrameDecoder::next() {
  if (failed_) throw Error(ErrorCode::kProtocol, "decoder is in a failed state");
  if (buffered() == 0) return std::nullopt;
  try {
    auto got = try_decode(ByteSpan(buffer_).subspan(pos_));
    if (!got) return std::nullopt;
    pos_ += got->second;
    if (pos_ > 4096 && pos_ * 2 > buffer_.size()) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos_));
      pos_ = 0;
    }
    return std::move(got->first);
  } catch (...) {
    failed_ = true;
    throw;
  }
}

// ---------------------------------------------------------------------------

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() noexcept {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error(ErrorCode::kInvalidArgument, "expected HOST:PORT, got '" + text + "'");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  if (ep.host.size() > 2 && ep.host.front() == '[' && ep.host.back() == ']') {
    ep.host = ep.host.substr(1, ep.host.size() - 2);
  }
  try {
    std::size_t used = 0;
    const int port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kInvalidArgument, "bad port in '" + text + "'");
  }
  return ep;
}

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

Connection::Connection(Socket sock, std::chrono::milliseconds timeout)
    : sock_(std::move(sock)), timeout_(timeout) {
  int one = 1;
  ::setsockopt(sock_.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

Connection Connection::connect(const Endpoint& ep, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
    throw Error(ErrorCode::kDeviceUnreachable, "cannot resolve " + ep.to_string());
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      return Connection(std::move(s), timeout);
    }
    last_error = errno_text();
  }
  ::freeaddrinfo(res);
  throw Error(ErrorCode::kDeviceUnreachable, "connect to " + ep.to_string() + " failed: " + last_error);
}

void Connection::send(const Frame& frame) {
  const Bytes wire = encode(frame);
  std::size_t sent = 0;
  while (sent < wire.size()) {
    const ssize_t n = ::send(sock_.fd(), wire.data() + sent, wire.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kDeviceUnreachable, "send failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

Frame Connection::receive() {
  std::uint8_t buf[2048];
  for (;;) {
    if (auto f = decoder_.next()) return std::move(*f);
    pollfd p{sock_.fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout_.count()));
    if (rc == 0) throw Error(ErrorCode::kTimeout, "timed out waiting for peer");
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kDeviceUnreachable, "poll failed: " + errno_text());
    }
    const ssize_t n = ::recv(sock_.fd(), buf, sizeof(buf), 0);
    if (n == 0) throw Error(ErrorCode::kDeviceUnreachable, "connection closed by peer");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kDeviceUnreachable, "recv failed: " + errno_text());
    }
    decoder_.feed(ByteSpan(buf, static_cast<std::size_t>(n)));
  }
}

// ---------------------------------------------------------------------------

Block64 Session::query(Block64 x) {
  std::lock_guard lock(mu_);
  conn_.send(challenge(x));
  const Frame reply = conn_.receive();
  if (reply.kind == FrameKind::kError) {
    const std::string text = text_of(reply);
    if (text.find("not initialized") != std::string::npos) {
      throw Error(ErrorCode::kDeviceNotInitialized, "device reported: " + text);
    }
    throw Error(ErrorCode::kProtocol, "device reported: " + text);
  }
  expect_kind(reply, FrameKind::kResponse);
  return block_of(reply);
}

void Session::notify(const Frame& frame) {
  std::lock_guard lock(mu_);
  conn_.send(frame);
}

TaServer::TaServer(const Endpoint& listen, TrustedAuthority& authority, EntropySource& entropy)
    : TaServer(listen, authority, entropy, Options{}) {}

TaServer::TaServer(const Endpoint& listen, TrustedAuthority& authority, EntropySource& entropy,
                   Options options)
    : authority_(authority), entropy_(entropy), options_(std::move(options)) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(listen.port);
  if (::getaddrinfo(listen.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
    throw Error(ErrorCode::kInvalidArgument, "cannot resolve " + listen.to_string());
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai && !listener_.valid(); ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(s.fd(), 64) == 0) {
      listener_ = std::move(s);
    } else {
      last_error = errno_text();
    }
  }
  ::freeaddrinfo(res);
  if (!listener_.valid()) {
    throw Error(ErrorCode::kIo, "cannot listen on " + listen.to_string() + ": " + last_error);
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                     : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  spdlog::info("TA listening on {}:{}", listen.host, port_);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TaServer::~TaServer() { stop(); }

void TaServer::stop() {
  if (stopping_.exchange(true)) {
    if (acceptor_.joinable()) acceptor_.join();
    return;
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (auto& [serial, s] : sessions_) s->close();
    workers.swap(workers_);
  }
  cv_.notify_all();
  for (auto& w : workers) w.join();
  std::lock_guard lock(mu_);
  sessions_.clear();
}

void TaServer::wait() {
  while (!stopping_.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

void TaServer::accept_loop() {
  while (!stopping_.load()) {
    pollfd p{listener_.fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc <= 0) continue;
    Socket client(::accept(listener_.fd(), nullptr, nullptr));
    if (!client.valid()) continue;
    std::lock_guard lock(mu_);
    if (stopping_.load()) break;
    workers_.emplace_back([this, s = std::move(client)]() mutable { run_session(std::move(s)); });
  }
}

void TaServer::run_session(Socket sock) {
  std::shared_ptr<Session> session;
  try {
    Connection conn(std::move(sock), options_.session_timeout);
    const Frame first = conn.receive();
    if (first.kind != FrameKind::kHello) {
      conn.send(error_frame("expected HELLO"));
      return;
    }
    const std::string serial = text_of(first);
    if (!is_valid_serial(serial)) {
      conn.send(error_frame("invalid serial"));
      return;
    }
    {
      std::lock_guard lock(mu_);
      if (sessions_.count(serial)) {
        conn.send(error_frame("serial already connected"));
        return;
      }
      conn.send(hello_ack());
      session = std::make_shared<Session>(std::move(conn), serial);
      sessions_[serial] = session;
      ++stats_.sessions;
    }
    cv_.notify_all();
    spdlog::info("session opened for {}", serial);
  } catch (const std::exception& e) {
    spdlog::warn("handshake failed: {}", e.what());
    return;
  }

  if (!options_.policy) return;  // session stays registered for API use
  try {
    options_.policy(*this, *session);
  } catch (const std::exception& e) {
    spdlog::warn("session {} aborted: {}", session->serial(), e.what());
    try {
      session->notify(error_frame(e.what()));
    } catch (...) {
    }
  }
  session->close();
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session->serial());
  if (it != sessions_.end() && it->second == session) sessions_.erase(it);
}

bool TaServer::wait_for(const std::string& serial, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return sessions_.count(serial) != 0 || stopping_.load(); }) &&
         sessions_.count(serial) != 0;
}

std::vector<std::string> TaServer::connected() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [serial, s] : sessions_) out.push_back(serial);
  return out;
}

std::shared_ptr<Session> TaServer::session_for(const std::string& serial) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(serial);
  if (it == sessions_.end()) throw Error(ErrorCode::kDeviceUnreachable, "no session for " + serial);
  return it->second;
}

EnrollReport TaServer::enroll(const std::string& serial, std::size_t t) {
  auto s = session_for(serial);
  return enroll(*s, t);
}

AuthOutcome TaServer::authenticate(const std::string& serial) {
  auto s = session_for(serial);
  return authenticate(*s, Direction::kForward);
}

AuthOutcome TaServer::inverse_authenticate(const std::string& serial) {
  auto s = session_for(serial);
  return authenticate(*s, Direction::kInverse);
}

EnrollReport TaServer::enroll(Session& session, std::size_t t) {
  if (t == 0 || t > 0xFFFFFFFFu) throw Error(ErrorCode::kInvalidArgument, "pair count out of range");
  LockedEntropy entropy(entropy_, entropy_mu_);
  session.notify(enroll_begin(static_cast<std::uint32_t>(t)));
  EnrollReport report;
  try {
    report = authority_.enroll(session, t, entropy);
  } catch (const Error& e) {
    try {
      session.notify(error_frame(e.what()));
    } catch (...) {
    }
    throw;
  }
  session.notify(enroll_end(static_cast<std::uint32_t>(t)));
  spdlog::info("enrolled {} with {} pairs ({} bytes) in {} us", session.serial(), t,
               report.payload_bytes, report.elapsed.count());
  return report;
}

AuthOutcome TaServer::authenticate(Session& session, Direction dir) {
  AuthOutcome out = dir == Direction::kForward ? authority_.authenticate(session)
                                               : authority_.inverse_authenticate(session);
  {
    std::lock_guard lock(mu_);
    if (out.result != AuthResult::kExhausted) {
      ++stats_.authentications;
      stats_.auth_latency.push_back(out.elapsed);
    }
  }
  session.notify(auth_result(out.result));
  spdlog::debug("auth {} -> {} ({} us)", session.serial(), sramsuc::to_string(out.result),
                out.elapsed.count());
  return out;
}

ServerStats TaServer::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

AgentStats run_agent(const std::string& serial, std::shared_ptr<const SucInstance> suc,
                     const Endpoint& connect, std::chrono::milliseconds idle_timeout) {
  AgentStats stats;
  Connection conn = Connection::connect(connect, idle_timeout);
  conn.send(hello(serial));
  const Frame ack = conn.receive();
  if (ack.kind == FrameKind::kError) {
    stats.error = text_of(ack);
    return stats;
  }
  expect_kind(ack, FrameKind::kHelloAck);
  for (;;) {
    Frame f;
    try {
      f = conn.receive();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDeviceUnreachable) return stats;  // TA closed the session
      throw;
    }
    switch (f.kind) {
      case FrameKind::kChallenge:
        ++stats.challenges;
        if (suc) {
          conn.send(response(suc->apply(block_of(f))));
        } else {
          conn.send(error_frame("device not initialized"));
        }
        break;
      case FrameKind::kAuthResult:
        switch (auth_result_of(f)) {
          case AuthResult::kAccepted: ++stats.accepted; break;
          case AuthResult::kRejected: ++stats.rejected; break;
          case AuthResult::kExhausted: ++stats.exhausted; break;
        }
        break;
      case FrameKind::kEnrollBegin:
      case FrameKind::kEnrollEnd:
        spdlog::debug("{} {}", to_string(f.kind), count_of(f));
        break;
      case FrameKind::kError:
        stats.error = text_of(f);
        spdlog::warn("TA reported: {}", *stats.error);
        break;
      default:
        conn.send(error_frame(std::string("unexpected ") + to_string(f.kind)));
        throw Error(ErrorCode::kProtocol, std::string("unexpected ") + to_string(f.kind));
    }
  }
}

}  // namespace sramsuc::net
