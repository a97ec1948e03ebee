#include "sramsuc/sbox4.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "spectra.hpp"
#include "sramsuc/error.hpp"

namespace sramsuc {

namespace {

constexpr std::uint8_t kPoolMagic[8] = {'S', 'U', 'C', 'P', 'O', 'O', 'L', 0};
constexpr std::uint32_t kPoolVersion = 1;
constexpr std::size_t kHeaderSize = 16;

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(ByteSpan in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

Bytes records_with_count(const std::vector<SBox4>& entries) {
  Bytes out;
  out.reserve(4 + 16 * entries.size());
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& s : entries) {
    out.insert(out.end(), s.table().begin(), s.table().end());
  }
  return out;
}

// DFS state for one search attempt.
class SerpentSearch {
 public:
  SerpentSearch(EntropySource& entropy, std::size_t budget)
      : entropy_(entropy), budget_(budget) {}

  // True with table_ filled on success; false when the node budget ran out.
  bool run() { return place(0); }

  const SBox4::Table& table() const { return table_; }

 private:
  bool place(int x) {
    if (x == 16) return is_serpent_type(SBox4(table_));
    std::uint8_t candidates[16];
    int remaining = 0;
    for (int v = 0; v < 16; ++v) {
      if (!(used_ & (1u << v))) candidates[remaining++] = static_cast<std::uint8_t>(v);
    }
    while (remaining > 0) {
      if (nodes_++ >= budget_) {
        exhausted_ = true;
        return false;
      }
      // Draw without replacement among untried values.
      const auto pick = static_cast<int>(entropy_.uniform(remaining));
      const std::uint8_t v = candidates[pick];
      candidates[pick] = candidates[--remaining];
      if (!admissible(x, v)) continue;
      assign(x, v, +2);
      if (place(x + 1)) return true;
      assign(x, v, -2);
      if (exhausted_) return false;
    }
    return false;
  }

  bool admissible(int x, std::uint8_t v) const {
    for (int y = 0; y < x; ++y) {
      const int a = x ^ y;
      const int d = v ^ table_[y];
      if (std::popcount(static_cast<unsigned>(a)) == 1 &&
          std::popcount(static_cast<unsigned>(d)) < 2) {
        return false;
      }
      if (ddt_[a][d] + 2 > 4) return false;
    }
    return true;
  }

  // Each unordered pair {x, y} contributes two DDT entries at [x^y][S(x)^S(y)].
  void assign(int x, std::uint8_t v, int delta) {
    for (int y = 0; y < x; ++y) ddt_[x ^ y][v ^ table_[y]] += delta;
    if (delta > 0) {
      table_[x] = v;
      used_ |= 1u << v;
    } else {
      used_ &= ~(1u << v);
    }
  }

  EntropySource& entropy_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  bool exhausted_ = false;
  SBox4::Table table_{};
  unsigned used_ = 0;
  int ddt_[16][16] = {};
};

}  // namespace

SBox4::SBox4() {
  for (std::uint8_t i = 0; i < 16; ++i) table_[i] = i;
}

SBox4::SBox4(const Table& table) : table_(table) {
  for (std::uint8_t v : table_) {
    if (v > 15) throw Error(ErrorCode::kInvalidArgument, "4-bit S-box value out of range");
  }
}

SBox4 SBox4::from_hex(std::string_view hex) {
  if (hex.size() != 16) {
    throw Error(ErrorCode::kFormat, "4-bit S-box needs exactly 16 hex digits");
  }
  Table t{};
  for (std::size_t i = 0; i < 16; ++i) {
    const char c = hex[i];
    if (c >= '0' && c <= '9') t[i] = static_cast<std::uint8_t>(c - '0');
    else if (c >= 'a' && c <= 'f') t[i] = static_cast<std::uint8_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') t[i] = static_cast<std::uint8_t>(c - 'A' + 10);
    else throw Error(ErrorCode::kFormat, "invalid hex digit in S-box");
  }
  return SBox4(t);
}

std::string SBox4::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (std::size_t i = 0; i < 16; ++i) out[i] = kDigits[table_[i]];
  return out;
}

SBoxProfile profile4(const SBox4& s) { return detail::profile(s.table()); }

bool is_serpent_type(const SBox4& s) {
  const auto p = profile4(s);
  return p.bijective && p.lin == 8 && p.diff == 4 && p.branch_min >= 2;
}

SBox4 sample_serpent_type(EntropySource& entropy, const SearchOptions& options) {
  for (std::size_t attempt = 0; attempt <= options.max_restarts; ++attempt) {
    SerpentSearch search(entropy, options.node_budget);
    if (search.run()) return SBox4(search.table());
  }
  throw Error(ErrorCode::kSearchBudgetExceeded,
              "no Serpent-type S-box found within the search budget");
}

SBoxPool::SBoxPool(std::vector<SBox4> entries, std::string origin)
    : entries_(std::move(entries)), origin_(std::move(origin)) {
  if (entries_.empty()) throw Error(ErrorCode::kFormat, "pool is empty");
  std::set<SBox4> seen;
  for (const auto& s : entries_) {
    if (!is_serpent_type(s)) {
      throw Error(ErrorCode::kFormat, "pool entry " + s.to_hex() + " is not Serpent-type");
    }
    if (!seen.insert(s).second) {
      throw Error(ErrorCode::kFormat, "duplicate pool entry " + s.to_hex());
    }
  }
  digest_ = pool_digest(entries_);
}

Digest pool_digest(const std::vector<SBox4>& entries) {
  return sha256(records_with_count(entries));
}

Bytes SBoxPool::serialize() const {
  Bytes out(std::begin(kPoolMagic), std::end(kPoolMagic));
  put_u32(out, kPoolVersion);
  put_u32(out, 0);
  const Bytes body = records_with_count(entries_);
  out.insert(out.end(), body.begin(), body.end());
  out.insert(out.end(), digest_.begin(), digest_.end());
  return out;
}

SBoxPool SBoxPool::parse(ByteSpan data) {
  if (data.size() < kHeaderSize + 4 + 32) {
    throw Error(ErrorCode::kFormat, "pool file truncated");
  }
  if (std::memcmp(data.data(), kPoolMagic, sizeof(kPoolMagic)) != 0) {
    throw Error(ErrorCode::kFormat, "bad pool file magic");
  }
  if (get_u32(data, 8) != kPoolVersion) {
    throw Error(ErrorCode::kFormat, "unsupported pool file version");
  }
  const std::uint32_t count = get_u32(data, kHeaderSize);
  const std::size_t expected = kHeaderSize + 4 + std::size_t{16} * count + 32;
  if (data.size() != expected) {
    throw Error(ErrorCode::kFormat, "pool file size does not match count");
  }
  std::vector<SBox4> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    SBox4::Table t{};
    std::memcpy(t.data(), data.data() + kHeaderSize + 4 + 16 * i, 16);
    for (std::uint8_t v : t) {
      if (v > 15) throw Error(ErrorCode::kFormat, "pool record value out of range");
    }
    entries.emplace_back(t);
  }
  Digest stored{};
  std::memcpy(stored.data(), data.data() + expected - 32, 32);
  if (stored != pool_digest(entries)) {
    throw Error(ErrorCode::kFormat, "pool digest mismatch");
  }
  return SBoxPool(std::move(entries), "parsed");
}

void SBoxPool::save(const std::filesystem::path& path) const {
  const Bytes data = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

SBoxPool SBoxPool::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  SBoxPool pool = parse(data);
  pool.origin_ = path.string();
  return pool;
}

SBoxPool build_pool(std::size_t count, EntropySource& entropy,
                    const SearchOptions& options) {
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "pool count must be positive");
  std::vector<SBox4> entries;
  entries.reserve(count);
  std::set<SBox4> seen;
  // Duplicates are redrawn; give up after a generous number of them.
  std::size_t duplicates = 0;
  while (entries.size() < count) {
    SBox4 s = sample_serpent_type(entropy, options);
    if (seen.insert(s).second) {
      entries.push_back(s);
    } else if (++duplicates > 16 * count + 64) {
      throw Error(ErrorCode::kSearchBudgetExceeded, "too many duplicate S-boxes while building pool");
    }
  }
  return SBoxPool(std::move(entries), "sampled, " + std::to_string(count) + " entries");
}

}  // namespace sramsuc
