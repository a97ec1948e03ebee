#include "sramsuc/authority.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sramsuc/error.hpp"
#include "sramsuc/genie.hpp"

namespace sramsuc {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Marks the chosen pair used and logs it; nullopt when exhausted.
std::optional<std::size_t> reserve_pair(UirRecord& uir, Direction dir, PairSelection selection,
                                        EntropySource* entropy) {
  std::vector<std::size_t> unused;
  for (std::size_t i = 0; i < uir.pairs.size(); ++i) {
    if (!uir.pairs[i].used) {
      if (selection == PairSelection::kSequential) {
        unused.push_back(i);
        break;
      }
      unused.push_back(i);
    }
  }
  if (unused.empty()) return std::nullopt;
  std::size_t idx = unused.front();
  if (selection == PairSelection::kRandom) {
    if (!entropy) throw Error(ErrorCode::kInvalidArgument, "random pair selection needs entropy");
    idx = unused[entropy->uniform(unused.size())];
  }
  uir.pairs[idx].used = true;
  uir.audit.push_back(AuditEntry{idx, dir, now_us()});
  return idx;
}

AuthOutcome exchange(DeviceChannel& device, const CrPair& pair, Direction dir, std::size_t idx,
                     Clock::time_point start) {
  AuthOutcome out;
  out.pair_index = idx;
  const Block64 sent = dir == Direction::kForward ? pair.challenge : pair.response;
  const Block64 expected = dir == Direction::kForward ? pair.response : pair.challenge;
  try {
    const Block64 got = device.query(sent);
    out.result = got == expected ? AuthResult::kAccepted : AuthResult::kRejected;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDeviceNotInitialized && e.code() != ErrorCode::kProtocol) throw;
    out.result = AuthResult::kRejected;
    out.detail = e.what();
  }
  out.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
  return out;
}

AuthOutcome run_free(DeviceChannel& device, UirRecord& uir, Direction dir,
                     PairSelection selection, EntropySource* entropy) {
  const auto start = Clock::now();
  const auto idx = reserve_pair(uir, dir, selection, entropy);
  if (!idx) {
    AuthOutcome out;
    out.result = AuthResult::kExhausted;
    return out;
  }
  return exchange(device, uir.pairs[*idx], dir, *idx, start);
}

const char* to_string(Direction d) { return d == Direction::kForward ? "fwd" : "inv"; }

}  // namespace

Block64 LocalDeviceChannel::query(Block64 x) {
  if (!suc_) throw Error(ErrorCode::kDeviceNotInitialized, "device not initialized");
  return suc_->apply(x);
}

std::size_t UirRecord::unused_count() const {
  std::size_t n = 0;
  for (const auto& p : pairs) n += p.used ? 0 : 1;
  return n;
}

const char* to_string(AuthResult r) {
  switch (r) {
    case AuthResult::kAccepted: return "accepted";
    case AuthResult::kRejected: return "rejected";
    case AuthResult::kExhausted: return "exhausted";
  }
  return "?";
}

UirRecord enroll(DeviceChannel& device, std::size_t t, EntropySource& entropy,
                 const SucParams& params, EnrollReport* report) {
  if (t == 0) throw Error(ErrorCode::kInvalidArgument, "enrollment needs at least one pair");
  const auto start = Clock::now();
  UirRecord uir;
  uir.serial = device.serial();
  uir.params = params;
  uir.created_at = now_us() / 1000000;
  uir.pairs.reserve(t);
  std::set<std::uint64_t> seen;
  while (uir.pairs.size() < t) {
    const Block64 x = Block64::from_word(entropy.next_u64());
    if (!seen.insert(x.word()).second) continue;  // regenerate on collision
    uir.pairs.push_back(CrPair{x, device.query(x), false});
  }
  if (report) {
    report->pairs = t;
    report->payload_bytes = 16 * t;
    report->elapsed = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
  }
  return uir;
}

AuthOutcome authenticate(DeviceChannel& device, UirRecord& uir, PairSelection selection,
                         EntropySource* entropy) {
  return run_free(device, uir, Direction::kForward, selection, entropy);
}

AuthOutcome inverse_authenticate(DeviceChannel& device, UirRecord& uir, PairSelection selection,
                                 EntropySource* entropy) {
  return run_free(device, uir, Direction::kInverse, selection, entropy);
}

// ---------------------------------------------------------------------------

UirStore::UirStore(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (!dir_) return;
  std::error_code ec;
  std::filesystem::create_directories(*dir_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create UIR directory: " + ec.message());
  for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
    if (entry.path().extension() != ".uir") continue;
    std::ifstream in(entry.path());
    std::stringstream buf;
    buf << in.rdbuf();
    UirRecord rec = from_text(buf.str());
    records_.emplace(rec.serial, std::move(rec));
  }
}

std::filesystem::path UirStore::path_for(const std::string& serial) const {
  return *dir_ / (serial + ".uir");
}

bool UirStore::contains(const std::string& serial) const {
  std::lock_guard lock(mu_);
  return records_.count(serial) != 0;
}

std::optional<UirRecord> UirStore::find(const std::string& serial) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(serial);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> UirStore::serials() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [serial, rec] : records_) out.push_back(serial);
  return out;
}

void UirStore::insert(const UirRecord& record) {
  if (!is_valid_serial(record.serial)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid serial '" + record.serial + "'");
  }
  std::lock_guard lock(mu_);
  if (records_.count(record.serial)) {
    throw Error(ErrorCode::kDuplicateEnrollment, "serial " + record.serial + " already enrolled");
  }
  if (dir_) {
    const auto path = path_for(record.serial);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << to_text(record);
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::kIo, "rename failed: " + ec.message());
  }
  records_.emplace(record.serial, record);
}

void UirStore::append_use(const std::string& serial, const AuditEntry& entry) {
  std::lock_guard lock(mu_);
  auto it = records_.find(serial);
  if (it == records_.end()) throw Error(ErrorCode::kUnknownDevice, "no UIR for " + serial);
  UirRecord& rec = it->second;
  if (entry.pair_index >= rec.pairs.size() || rec.pairs[entry.pair_index].used) {
    throw Error(ErrorCode::kInvalidArgument, "pair already used or out of range");
  }
  if (dir_) {
    std::ofstream out(path_for(serial), std::ios::app);
    out << "used=" << entry.pair_index << "," << to_string(entry.direction) << "," << entry.at_us
        << "\n";
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "cannot append to UIR of " + serial);
  }
  rec.pairs[entry.pair_index].used = true;
  rec.audit.push_back(entry);
}

std::string UirStore::to_text(const UirRecord& r) {
  std::ostringstream out;
  out << "# sram-suc uir v1\n";
  out << "serial=" << r.serial << "\n";
  out << "rounds=" << r.params.rounds << "\n";
  out << "feistel_r=" << r.params.feistel_r << "\n";
  if (r.params.pool_digest) out << "pool_digest=" << to_hex(*r.params.pool_digest) << "\n";
  out << "created_at=" << r.created_at << "\n";
  // Pairs are written unused; consumption lives in the used= lines.
  for (const auto& p : r.pairs) {
    out << "pair=" << p.challenge.to_hex() << "," << p.response.to_hex() << "\n";
  }
  for (const auto& a : r.audit) {
    out << "used=" << a.pair_index << "," << to_string(a.direction) << "," << a.at_us << "\n";
  }
  return out.str();
}

UirRecord UirStore::from_text(const std::string& text) {
  UirRecord r;
  std::istringstream in(text);
  std::string line;
  bool have_serial = false;
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kFormat, "UIR: " + why); };
  auto to_i64 = [&](const std::string& s) -> std::int64_t {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used != s.size()) fail("bad integer " + s);
      return v;
    } catch (const std::logic_error&) {
      fail("bad integer " + s);
    }
    return 0;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("line without '='");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "serial") {
      r.serial = value;
      have_serial = true;
    } else if (key == "rounds") {
      r.params.rounds = static_cast<int>(to_i64(value));
    } else if (key == "feistel_r") {
      r.params.feistel_r = static_cast<int>(to_i64(value));
    } else if (key == "pool_digest") {
      const Bytes raw = from_hex(value);
      if (raw.size() != 32) fail("pool digest must be 32 bytes");
      Digest d{};
      std::copy(raw.begin(), raw.end(), d.begin());
      r.params.pool_digest = d;
    } else if (key == "created_at") {
      r.created_at = to_i64(value);
    } else if (key == "pair") {
      const auto comma = value.find(',');
      if (comma == std::string::npos) fail("pair without ','");
      r.pairs.push_back(CrPair{Block64::from_hex(value.substr(0, comma)),
                               Block64::from_hex(value.substr(comma + 1)), false});
    } else if (key == "used") {
      std::vector<std::string> parts;
      std::stringstream ss(value);
      std::string part;
      while (std::getline(ss, part, ',')) parts.push_back(part);
      if (parts.size() != 3) fail("malformed used line");
      AuditEntry a;
      a.pair_index = static_cast<std::size_t>(to_i64(parts[0]));
      if (parts[1] == "fwd") a.direction = Direction::kForward;
      else if (parts[1] == "inv") a.direction = Direction::kInverse;
      else fail("unknown direction " + parts[1]);
      a.at_us = to_i64(parts[2]);
      if (a.pair_index >= r.pairs.size()) fail("used index out of range");
      if (r.pairs[a.pair_index].used) fail("pair " + parts[0] + " used twice");
      r.pairs[a.pair_index].used = true;
      r.audit.push_back(a);
    } else {
      fail("unknown field " + key);
    }
  }
  if (!have_serial) fail("missing serial");
  return r;
}

// ---------------------------------------------------------------------------

TrustedAuthority::TrustedAuthority(UirStore& store, SucParams default_params)
    : store_(store), default_params_(std::move(default_params)) {}

std::mutex& TrustedAuthority::lock_for(const std::string& serial) {
  std::lock_guard lock(locks_mu_);
  auto& slot = locks_[serial];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

EnrollReport TrustedAuthority::enroll(DeviceChannel& device, std::size_t t,
                                      EntropySource& entropy) {
  return enroll(device, t, entropy, default_params_);
}

EnrollReport TrustedAuthority::enroll(DeviceChannel& device, std::size_t t,
                                      EntropySource& entropy, const SucParams& params) {
  const std::string serial = device.serial();
  std::lock_guard lock(lock_for(serial));
  if (store_.contains(serial)) {
    throw Error(ErrorCode::kDuplicateEnrollment, "serial " + serial + " already enrolled");
  }
  EnrollReport report;
  UirRecord rec = sramsuc::enroll(device, t, entropy, params, &report);
  store_.insert(rec);
  return report;
}

AuthOutcome TrustedAuthority::run_auth(DeviceChannel& device, Direction dir,
                                       PairSelection selection, EntropySource* entropy) {
  const std::string serial = device.serial();
  std::lock_guard lock(lock_for(serial));
  auto rec = store_.find(serial);
  if (!rec) throw Error(ErrorCode::kUnknownDevice, "no UIR for " + serial);
  const auto start = Clock::now();
  const auto idx = reserve_pair(*rec, dir, selection, entropy);
  if (!idx) {
    AuthOutcome out;
    out.result = AuthResult::kExhausted;
    return out;
  }
  // Persist consumption before the challenge leaves the TA.
  store_.append_use(serial, rec->audit.back());
  return exchange(device, rec->pairs[*idx], dir, *idx, start);
}

AuthOutcome TrustedAuthority::authenticate(DeviceChannel& device, PairSelection selection,
                                           EntropySource* entropy) {
  return run_auth(device, Direction::kForward, selection, entropy);
}

AuthOutcome TrustedAuthority::inverse_authenticate(DeviceChannel& device,
                                                   PairSelection selection,
                                                   EntropySource* entropy) {
  return run_auth(device, Direction::kInverse, selection, entropy);
}

std::vector<UirStats> TrustedAuthority::stats() const {
  std::vector<UirStats> out;
  for (const auto& serial : store_.serials()) {
    if (auto rec = store_.find(serial)) {
      out.push_back(UirStats{serial, rec->pairs.size(), rec->unused_count()});
    }
  }
  return out;
}

}  // namespace sramsuc
