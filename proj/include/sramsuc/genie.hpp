#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sramsuc/bytes.hpp"
#include "sramsuc/entropy.hpp"
#include "sramsuc/sbox4.hpp"
#include "sramsuc/suc.hpp"

namespace sramsuc {

using DeviceKey = std::array<std::uint8_t, 32>;
using SiliconSeed = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kSealNonceSize = 12;
inline constexpr std::size_t kSealTagSize = 16;
inline constexpr std::size_t kTableBlockSize = 8 * 256;

struct SealedBlob {
  Bytes nonce;
  Bytes ciphertext;
  Bytes tag;

  // nonce || ciphertext || tag
  Bytes concat() const;
  static SealedBlob split(ByteSpan data, std::size_t ciphertext_size);

  bool operator==(const SealedBlob&) const = default;
};

// AES-256-GCM. The nonce is drawn from `entropy`; `aad` is authenticated but
// not encrypted.
SealedBlob seal(const DeviceKey& key, ByteSpan plaintext, EntropySource& entropy,
                ByteSpan aad = {});
// Throws Error(kIntegrity) on a wrong key or any modification, Error(kFormat)
// on a structurally malformed blob.
Bytes unseal(const DeviceKey& key, const SealedBlob& blob, ByteSpan aad = {});

enum class Lifecycle { kBlank, kPersonalized };

const char* to_string(Lifecycle lc);

// Persistent device store. Clear tables never live here.
struct EnvmRecord {
  std::string serial;
  Lifecycle lifecycle = Lifecycle::kBlank;
  std::optional<SucParams> params;
  std::optional<SealedBlob> blob;

  // Line-oriented "key=value" text with hex-encoded binary fields.
  std::string to_text() const;
  static EnvmRecord from_text(const std::string& text);

  bool operator==(const EnvmRecord&) const = default;
};

// On-disk location of a device: <stem>.silicon and <stem>.envm.
struct DeviceFiles {
  std::filesystem::path silicon;
  std::filesystem::path envm;

  static DeviceFiles from_stem(const std::filesystem::path& stem);
};

// Serial numbers double as file names: 1-64 characters from [A-Za-z0-9_.-],
// not starting with '.'.
bool is_valid_serial(const std::string& serial);

class DeviceState;
std::shared_ptr<const SucInstance> reinit(DeviceState& dev);

class DeviceState {
 public:
  DeviceState(std::string serial, std::optional<SiliconSeed> silicon);
  DeviceState(EnvmRecord envm, std::optional<SiliconSeed> silicon);

  // Creates a blank device with a fresh silicon fingerprint and writes both
  // files. Refuses to overwrite an existing device.
  static DeviceState manufacture(const DeviceFiles& files, const std::string& serial,
                                 EntropySource& entropy);
  // Reads the envm record; a missing silicon file leaves the fingerprint
  // empty so key derivation fails later with kFingerprintUnavailable.
  static DeviceState load(const DeviceFiles& files);
  void save_envm(const std::filesystem::path& path) const;

  const std::string& serial() const noexcept { return envm_.serial; }
  Lifecycle lifecycle() const noexcept { return envm_.lifecycle; }
  const EnvmRecord& envm() const noexcept { return envm_; }
  EnvmRecord& mutable_envm() noexcept { return envm_; }
  const std::optional<SiliconSeed>& silicon() const noexcept { return silicon_; }

  // Volatile working copy of the cipher; empty after power-on until reinit.
  const std::shared_ptr<const SucInstance>& loaded() const noexcept { return loaded_; }
  void power_cycle() noexcept { loaded_.reset(); }

 private:
  friend std::shared_ptr<const SucInstance> reinit(DeviceState& dev);

  EnvmRecord envm_;
  std::optional<SiliconSeed> silicon_;
  std::shared_ptr<const SucInstance> loaded_;
};

// HKDF-SHA256 over the silicon fingerprint with the serial as context.
DeviceKey derive_device_key(const DeviceState& dev);

// Pool indices chosen for the eight S-boxes. specs[i].free is drawn in order
// i = 0..7, each free list front to back.
struct Selection {
  std::array<FeistelSpec, 8> specs;
  std::array<std::vector<std::size_t>, 8> indices;
  std::size_t draws = 0;          // accepted index draws, always 4(r+1)
  std::size_t attempts = 0;       // including rejected draws
};

Selection select_specs(const SBoxPool& pool, int feistel_r, EntropySource& entropy);

SucInstance build_instance(const Selection& selection, const SucParams& params);

// Selection plus construction in one step; used by experiments and tests.
SucInstance generate_instance(const SBoxPool& pool, const SucParams& params,
                              EntropySource& entropy);

struct OtppReport {
  std::size_t index_draws = 0;
  std::size_t index_attempts = 0;
  std::size_t index_bytes = 0;   // entropy consumed by index selection
  std::size_t total_bytes = 0;   // including the seal nonce
  Digest table_digest{};
};

// One-time personalization: draws 4(r+1) pool indices, builds eight
// involutive S-boxes, seals the 2048 table bytes under the device key and
// marks the device personalized. Does not load the cipher.
OtppReport otpp(DeviceState& dev, const SBoxPool& pool, SucParams params,
                EntropySource& entropy);

// Reinitialization after power-on: unseal, validate, load.
std::shared_ptr<const SucInstance> reinit(DeviceState& dev);

// Additional authenticated data binding the sealed tables to the serial and
// parameters.
Bytes seal_context(const std::string& serial, const SucParams& params);

}  // namespace sramsuc
