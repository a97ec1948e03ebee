#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sramsuc/entropy.hpp"
#include "sramsuc/suc.hpp"

namespace sramsuc {

// Anything that answers block queries on behalf of one device: an in-process
// cipher, a network session, or a test double.
class DeviceChannel {
 public:
  virtual ~DeviceChannel() = default;
  virtual std::string serial() const = 0;
  // Returns SUC_u(x). Throws Error on transport or device failure.
  virtual Block64 query(Block64 x) = 0;
};

class LocalDeviceChannel final : public DeviceChannel {
 public:
  // A null instance models a device whose reinitialization failed.
  LocalDeviceChannel(std::string serial, std::shared_ptr<const SucInstance> suc)
      : serial_(std::move(serial)), suc_(std::move(suc)) {}

  std::string serial() const override { return serial_; }
  Block64 query(Block64 x) override;

 private:
  std::string serial_;
  std::shared_ptr<const SucInstance> suc_;
};

struct CrPair {
  Block64 challenge;
  Block64 response;
  bool used = false;

  bool operator==(const CrPair&) const = default;
};

enum class Direction { kForward, kInverse };

struct AuditEntry {
  std::size_t pair_index = 0;
  Direction direction = Direction::kForward;
  std::int64_t at_us = 0;  // microseconds since the Unix epoch

  bool operator==(const AuditEntry&) const = default;
};

struct UirRecord {
  std::string serial;
  SucParams params;
  std::vector<CrPair> pairs;
  std::int64_t created_at = 0;  // seconds since the Unix epoch
  std::vector<AuditEntry> audit;  // every pair ever sent, in order

  std::size_t unused_count() const;

  bool operator==(const UirRecord&) const = default;
};

enum class AuthResult { kAccepted, kRejected, kExhausted };

const char* to_string(AuthResult r);

struct AuthOutcome {
  AuthResult result = AuthResult::kRejected;
  std::optional<std::size_t> pair_index;
  std::chrono::microseconds elapsed{0};
  std::string detail;  // device-side failure reason, if any
};

enum class PairSelection { kSequential, kRandom };

struct EnrollReport {
  std::size_t pairs = 0;
  std::size_t payload_bytes = 0;  // 8-byte challenge + 8-byte response per pair
  std::chrono::microseconds elapsed{0};
};

// Sends t distinct random challenges and records the responses.
UirRecord enroll(DeviceChannel& device, std::size_t t, EntropySource& entropy,
                 const SucParams& params, EnrollReport* report = nullptr);

// Consumes one unused pair (whether or not the device answers correctly).
// Returns kExhausted without contacting the device when none are left.
// `entropy` is required for PairSelection::kRandom.
AuthOutcome authenticate(DeviceChannel& device, UirRecord& uir,
                         PairSelection selection = PairSelection::kSequential,
                         EntropySource* entropy = nullptr);

// Sends the recorded response and expects the challenge back.
AuthOutcome inverse_authenticate(DeviceChannel& device, UirRecord& uir,
                                 PairSelection selection = PairSelection::kSequential,
                                 EntropySource* entropy = nullptr);

// Directory of <serial>.uir text files. The pair list is written once at
// enrollment; consumption is appended as "used=" lines, so the file doubles
// as the transmission audit log.
class UirStore {
 public:
  // Without a directory the store is memory-only.
  explicit UirStore(std::optional<std::filesystem::path> dir = std::nullopt);

  bool contains(const std::string& serial) const;
  std::optional<UirRecord> find(const std::string& serial) const;
  std::vector<std::string> serials() const;

  // Fails with kDuplicateEnrollment if the serial exists.
  void insert(const UirRecord& record);
  void append_use(const std::string& serial, const AuditEntry& entry);

  static std::string to_text(const UirRecord& record);
  static UirRecord from_text(const std::string& text);

 private:
  std::filesystem::path path_for(const std::string& serial) const;

  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  std::map<std::string, UirRecord> records_;
};

struct UirStats {
  std::string serial;
  std::size_t total = 0;
  std::size_t unused = 0;
};

// Serializes work per serial; different serials proceed concurrently.
class TrustedAuthority {
 public:
  explicit TrustedAuthority(UirStore& store, SucParams default_params = {});

  EnrollReport enroll(DeviceChannel& device, std::size_t t, EntropySource& entropy);
  EnrollReport enroll(DeviceChannel& device, std::size_t t, EntropySource& entropy,
                      const SucParams& params);
  // kUnknownDevice if the serial was never enrolled.
  AuthOutcome authenticate(DeviceChannel& device,
                           PairSelection selection = PairSelection::kSequential,
                           EntropySource* entropy = nullptr);
  AuthOutcome inverse_authenticate(DeviceChannel& device,
                                   PairSelection selection = PairSelection::kSequential,
                                   EntropySource* entropy = nullptr);

  bool is_enrolled(const std::string& serial) const { return store_.contains(serial); }
  std::vector<UirStats> stats() const;
  UirStore& store() noexcept { return store_; }

 private:
  std::mutex& lock_for(const std::string& serial);
  AuthOutcome run_auth(DeviceChannel& device, Direction dir, PairSelection selection,
                       EntropySource* entropy);

  UirStore& store_;
  SucParams default_params_;
  std::mutex locks_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace sramsuc
