#include "sramsuc/genie.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>

#include <fstream>
#include <map>
#include <sstream>

#include "sramsuc/error.hpp"

namespace sramsuc {

namespace {

constexpr char kKdfSalt[] = "sram-suc pseudo-puf v1";

struct CipherCtx {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  ~CipherCtx() { EVP_CIPHER_CTX_free(ctx); }
  CipherCtx() = default;
  CipherCtx(const CipherCtx&) = delete;
  CipherCtx& operator=(const CipherCtx&) = delete;
};

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, ByteSpan data) {
  // Write-then-rename so a crash never leaves a half-written record.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "rename failed: " + ec.message());
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormat, "envm field " + key + " is not an integer");
  }
}

}  // namespace

Bytes SealedBlob::concat() const {
  Bytes out;
  out.reserve(nonce.size() + ciphertext.size() + tag.size());
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

SealedBlob SealedBlob::split(ByteSpan data, std::size_t ciphertext_size) {
  if (data.size() != kSealNonceSize + ciphertext_size + kSealTagSize) {
    throw Error(ErrorCode::kFormat, "sealed blob has the wrong size");
  }
  SealedBlob blob;
  blob.nonce.assign(data.begin(), data.begin() + kSealNonceSize);
  blob.ciphertext.assign(data.begin() + kSealNonceSize,
                         data.begin() + kSealNonceSize + ciphertext_size);
  blob.tag.assign(data.end() - kSealTagSize, data.end());
  return blob;
}

SealedBlob seal(const DeviceKey& key, ByteSpan plaintext, EntropySource& entropy, ByteSpan aad) {
  SealedBlob blob;
  blob.nonce.resize(kSealNonceSize);
  entropy.fill(blob.nonce);
  blob.ciphertext.resize(plaintext.size());
  blob.tag.resize(kSealTagSize);

  CipherCtx c;
  int len = 0;
  bool ok = c.ctx != nullptr &&
            EVP_EncryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, kSealNonceSize, nullptr) == 1 &&
            EVP_EncryptInit_ex(c.ctx, nullptr, nullptr, key.data(), blob.nonce.data()) == 1;
  if (ok && !aad.empty()) {
    ok = EVP_EncryptUpdate(c.ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1;
  }
  ok = ok &&
       EVP_EncryptUpdate(c.ctx, blob.ciphertext.data(), &len, plaintext.data(),
                         static_cast<int>(plaintext.size())) == 1 &&
       EVP_EncryptFinal_ex(c.ctx, blob.ciphertext.data() + len, &len) == 1 &&
       EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_GET_TAG, kSealTagSize, blob.tag.data()) == 1;
  if (!ok) throw Error(ErrorCode::kIo, "AES-256-GCM encryption failed");
  return blob;
}

Bytes unseal(const DeviceKey& key, const SealedBlob& blob, ByteSpan aad) {
  if (blob.nonce.size() != kSealNonceSize || blob.tag.size() != kSealTagSize) {
    throw Error(ErrorCode::kFormat, "sealed blob has malformed nonce or tag");
  }
  Bytes plain(blob.ciphertext.size());
  Bytes tag = blob.tag;
  CipherCtx c;
  int len = 0;
  bool ok = c.ctx != nullptr &&
            EVP_DecryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, kSealNonceSize, nullptr) == 1 &&
            EVP_DecryptInit_ex(c.ctx, nullptr, nullptr, key.data(), blob.nonce.data()) == 1;
  if (ok && !aad.empty()) {
    ok = EVP_DecryptUpdate(c.ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1;
  }
  ok = ok &&
       EVP_DecryptUpdate(c.ctx, plain.data(), &len, blob.ciphertext.data(),
                         static_cast<int>(blob.ciphertext.size())) == 1 &&
       EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_TAG, kSealTagSize, tag.data()) == 1;
  if (!ok) throw Error(ErrorCode::kIo, "AES-256-GCM setup failed");
  if (EVP_DecryptFinal_ex(c.ctx, plain.data() + len, &len) != 1) {
    throw Error(ErrorCode::kIntegrity, "integrity check failed: sealed blob did not authenticate");
  }
  return plain;
}

const char* to_string(Lifecycle lc) {
  return lc == Lifecycle::kBlank ? "blank" : "personalized";
}

std::string EnvmRecord::to_text() const {
  std::ostringstream out;
  out << "# sram-suc envm v1\n";
  out << "serial=" << serial << "\n";
  out << "lifecycle=" << to_string(lifecycle) << "\n";
  if (params) {
    out << "rounds=" << params->rounds << "\n";
    out << "feistel_r=" << params->feistel_r << "\n";
    if (params->pool_digest) out << "pool_digest=" << to_hex(*params->pool_digest) << "\n";
  }
  if (blob) {
    out << "nonce=" << to_hex(blob->nonce) << "\n";
    out << "ciphertext=" << to_hex(blob->ciphertext) << "\n";
    out << "tag=" << to_hex(blob->tag) << "\n";
  }
  return out.str();
}

EnvmRecord EnvmRecord::from_text(const std::string& text) {
  std::map<std::string, std::string> fields;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kFormat, "envm line without '='");
    if (!fields.emplace(line.substr(0, eq), line.substr(eq + 1)).second) {
      throw Error(ErrorCode::kFormat, "duplicate envm field " + line.substr(0, eq));
    }
  }
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    return it->second;
  };

  EnvmRecord rec;
  auto serial = take("serial");
  auto lifecycle = take("lifecycle");
  if (!serial || !lifecycle) throw Error(ErrorCode::kFormat, "envm record lacks serial or lifecycle");
  rec.serial = *serial;
  if (*lifecycle == "blank") {
    rec.lifecycle = Lifecycle::kBlank;
  } else if (*lifecycle == "personalized") {
    rec.lifecycle = Lifecycle::kPersonalized;
  } else {
    throw Error(ErrorCode::kFormat, "unknown lifecycle " + *lifecycle);
  }

  if (auto rounds = take("rounds")) {
    SucParams p;
    p.rounds = parse_int("rounds", *rounds);
    auto fr = take("feistel_r");
    if (!fr) throw Error(ErrorCode::kFormat, "envm record lacks feistel_r");
    p.feistel_r = parse_int("feistel_r", *fr);
    if (auto d = take("pool_digest")) {
      Bytes raw = from_hex(*d);
      if (raw.size() != 32) throw Error(ErrorCode::kFormat, "pool digest must be 32 bytes");
      Digest digest{};
      std::copy(raw.begin(), raw.end(), digest.begin());
      p.pool_digest = digest;
    }
    rec.params = p;
  }
  auto nonce = take("nonce");
  auto ct = take("ciphertext");
  auto tag = take("tag");
  if (nonce || ct || tag) {
    if (!(nonce && ct && tag)) throw Error(ErrorCode::kFormat, "incomplete sealed blob in envm");
    rec.blob = SealedBlob{from_hex(*nonce), from_hex(*ct), from_hex(*tag)};
  }
  if (rec.lifecycle == Lifecycle::kPersonalized && (!rec.params || !rec.blob)) {
    throw Error(ErrorCode::kFormat, "personalized envm record lacks params or blob");
  }
  return rec;
}

DeviceFiles DeviceFiles::from_stem(const std::filesystem::path& stem) {
  DeviceFiles f;
  f.silicon = stem;
  f.silicon += ".silicon";
  f.envm = stem;
  f.envm += ".envm";
  return f;
}

bool is_valid_serial(const std::string& serial) {
  if (serial.empty() || serial.size() > 64 || serial[0] == '.') return false;
  for (char c : serial) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
    if (!ok) return false;
  }
  return true;
}

DeviceState::DeviceState(std::string serial, std::optional<SiliconSeed> silicon)
    : silicon_(silicon) {
  if (!is_valid_serial(serial)) throw Error(ErrorCode::kInvalidArgument, "invalid serial '" + serial + "'");
  envm_.serial = std::move(serial);
}

DeviceState::DeviceState(EnvmRecord envm, std::optional<SiliconSeed> silicon)
    : envm_(std::move(envm)), silicon_(silicon) {
  if (!is_valid_serial(envm_.serial)) {
    throw Error(ErrorCode::kFormat, "invalid serial '" + envm_.serial + "'");
  }
}

DeviceState DeviceState::manufacture(const DeviceFiles& files, const std::string& serial,
                                     EntropySource& entropy) {
  if (std::filesystem::exists(files.silicon) || std::filesystem::exists(files.envm)) {
    throw Error(ErrorCode::kIo, "device files already exist for " + serial);
  }
  SiliconSeed seed{};
  entropy.fill(seed);
  DeviceState dev(serial, seed);
  write_file(files.silicon, seed);
  std::filesystem::permissions(files.silicon,
                               std::filesystem::perms::owner_read | std::filesystem::perms::group_read,
                               std::filesystem::perm_options::replace);
  dev.save_envm(files.envm);
  return dev;
}

DeviceState DeviceState::load(const DeviceFiles& files) {
  const Bytes text = read_file(files.envm);
  EnvmRecord rec = EnvmRecord::from_text(std::string(text.begin(), text.end()));
  std::optional<SiliconSeed> silicon;
  if (std::filesystem::exists(files.silicon)) {
    const Bytes raw = read_file(files.silicon);
    if (raw.size() != 32) throw Error(ErrorCode::kFormat, "silicon file must hold 32 bytes");
    SiliconSeed seed{};
    std::copy(raw.begin(), raw.end(), seed.begin());
    silicon = seed;
  }
  return DeviceState(std::move(rec), silicon);
}

void DeviceState::save_envm(const std::filesystem::path& path) const {
  const std::string text = envm_.to_text();
  write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DeviceKey derive_device_key(const DeviceState& dev) {
  if (!dev.silicon()) throw Error(ErrorCode::kFingerprintUnavailable, "fingerprint unavailable");
  DeviceKey key{};
  EVP_KDF* kdf = EVP_KDF_fetch(nullptr, "HKDF", nullptr);
  EVP_KDF_CTX* ctx = kdf ? EVP_KDF_CTX_new(kdf) : nullptr;
  EVP_KDF_free(kdf);
  if (!ctx) throw Error(ErrorCode::kIo, "HKDF unavailable");

  std::string serial = dev.serial();
  SiliconSeed seed = *dev.silicon();
  std::string salt = kKdfSalt;
  char digest_name[] = "SHA256";
  OSSL_PARAM params[] = {
      OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest_name, 0),
      OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_KEY, seed.data(), seed.size()),
      OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SALT, salt.data(), salt.size()),
      OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_INFO, serial.data(), serial.size()),
      OSSL_PARAM_construct_end(),
  };
  const int rc = EVP_KDF_derive(ctx, key.data(), key.size(), params);
  EVP_KDF_CTX_free(ctx);
  if (rc != 1) throw Error(ErrorCode::kIo, "HKDF derivation failed");
  return key;
}

Selection select_specs(const SBoxPool& pool, int feistel_r, EntropySource& entropy) {
  if (feistel_r < 1 || feistel_r % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "Feistel round count must be odd and positive");
  }
  const auto per_box = static_cast<std::size_t>((feistel_r + 1) / 2);
  Selection sel;
  for (int i = 0; i < 8; ++i) {
    sel.specs[i].rounds = feistel_r;
    for (std::size_t k = 0; k < per_box; ++k) {
      const IndexDraw d = draw_index(entropy, pool.size());
      sel.indices[i].push_back(d.index);
      sel.specs[i].free.push_back(pool[d.index]);
      ++sel.draws;
      sel.attempts += d.attempts;
    }
  }
  return sel;
}

SucInstance build_instance(const Selection& selection, const SucParams& params) {
  SBoxLayer layer;
  for (int i = 0; i < 8; ++i) layer[i] = feistel8(selection.specs[i]);
  return SucInstance(std::move(layer), params);
}

SucInstance generate_instance(const SBoxPool& pool, const SucParams& params,
                              EntropySource& entropy) {
  params.validate();
  return build_instance(select_specs(pool, params.feistel_r, entropy), params);
}

Bytes seal_context(const std::string& serial, const SucParams& params) {
  std::string ctx = "sram-suc tables v1|" + serial + "|" + std::to_string(params.rounds) + "|" +
                    std::to_string(params.feistel_r) + "|" +
                    (params.pool_digest ? to_hex(*params.pool_digest) : std::string());
  return Bytes(ctx.begin(), ctx.end());
}

OtppReport otpp(DeviceState& dev, const SBoxPool& pool, SucParams params,
                EntropySource& entropy) {
  if (dev.lifecycle() != Lifecycle::kBlank) {
    throw Error(ErrorCode::kAlreadyPersonalized, "device already personalized");
  }
  params.validate();
  if (params.pool_digest && *params.pool_digest != pool.digest()) {
    throw Error(ErrorCode::kParamsMismatch, "params name a different pool than the one supplied");
  }
  params.pool_digest = pool.digest();
  // Key first: a device without its fingerprint must not consume entropy.
  const DeviceKey key = derive_device_key(dev);

  OtppReport report;
  const std::size_t before = entropy.consumed();
  const Selection sel = select_specs(pool, params.feistel_r, entropy);
  report.index_draws = sel.draws;
  report.index_attempts = sel.attempts;
  report.index_bytes = entropy.consumed() - before;

  const SucInstance suc = build_instance(sel, params);
  const Bytes tables = suc.table_bytes();
  report.table_digest = sha256(tables);

  EnvmRecord& envm = dev.mutable_envm();
  envm.blob = seal(key, tables, entropy, seal_context(dev.serial(), params));
  envm.params = params;
  envm.lifecycle = Lifecycle::kPersonalized;
  report.total_bytes = entropy.consumed() - before;
  return report;
}

std::shared_ptr<const SucInstance> reinit(DeviceState& dev) {
  dev.loaded_.reset();
  const EnvmRecord& envm = dev.envm();
  if (envm.lifecycle != Lifecycle::kPersonalized || !envm.blob || !envm.params) {
    throw Error(ErrorCode::kNotPersonalized, "not personalized");
  }
  const DeviceKey key = derive_device_key(dev);
  if (envm.blob->ciphertext.size() != kTableBlockSize) {
    throw Error(ErrorCode::kFormat, "sealed table block has the wrong size");
  }
  const Bytes tables = unseal(key, *envm.blob, seal_context(dev.serial(), *envm.params));
  SBoxLayer layer;
  for (int i = 0; i < 8; ++i) {
    SBox8::Table t{};
    std::copy_n(tables.begin() + 256 * i, 256, t.begin());
    layer[i] = SBox8(t);
    if (!layer[i].is_permutation() || !layer[i].is_involution()) {
      throw Error(ErrorCode::kTableValidation,
                  "unsealed S-box " + std::to_string(i) + " is not an involutive permutation");
    }
  }
  dev.loaded_ = std::make_shared<const SucInstance>(std::move(layer), *envm.params);
  return dev.loaded_;
}

}  // namespace sramsuc
