#include "sramsuc/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "sramsuc/error.hpp"
#include "sramsuc/genie.hpp"

namespace sramsuc::analysis {

namespace {

using Counts = std::array<std::uint64_t, 65>;

Counts instance_counts(const SucInstance& suc, std::size_t trials, EntropySource& entropy) {
  Counts c{};
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t x = entropy.next_u64();
    const std::uint64_t y = suc.apply(Block64::from_word(x)).word();
    for (int bit = 0; bit < 64; ++bit) {
      const std::uint64_t y2 = suc.apply(Block64::from_word(x ^ (std::uint64_t{1} << bit))).word();
      ++c[std::popcount(y ^ y2)];
    }
  }
  return c;
}

double counts_mean(const Counts& c) {
  std::uint64_t n = 0;
  double s = 0.0;
  for (int d = 0; d <= 64; ++d) {
    n += c[d];
    s += static_cast<double>(d) * static_cast<double>(c[d]);
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

// Runs fn(i) for i in [0, n) over `threads` workers, each writing slot i.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

AvalancheResult reduce(const std::vector<Counts>& per_instance) {
  AvalancheResult r;
  r.min_instance_mean = 64.0;
  r.max_instance_mean = 0.0;
  for (const auto& c : per_instance) {
    for (int d = 0; d <= 64; ++d) r.counts[d] += c[d];
    const double m = counts_mean(c);
    r.min_instance_mean = std::min(r.min_instance_mean, m);
    r.max_instance_mean = std::max(r.max_instance_mean, m);
  }
  if (per_instance.empty()) r.min_instance_mean = 0.0;
  finalize_statistics(r);
  return r;
}

double binomial64_pmf(int d) {
  // C(64, d) / 2^64 via lgamma.
  const double log_c = std::lgamma(65.0) - std::lgamma(d + 1.0) - std::lgamma(65.0 - d);
  return std::exp(log_c - 64.0 * std::log(2.0));
}

}  // namespace

void AvalancheConfig::validate() const {
  if (suc_count == 0 || trials_per_suc == 0 || pool_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "avalanche counts must be positive");
  }
  if (rounds < 1) throw Error(ErrorCode::kInvalidArgument, "rounds must be >= 1");
  if (feistel_r < 1 || feistel_r % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "Feistel round count must be odd and positive");
  }
}

void finalize_statistics(AvalancheResult& r) {
  r.total = 0;
  double sum = 0.0;
  for (int d = 0; d <= 64; ++d) {
    r.total += r.counts[d];
    sum += static_cast<double>(d) * static_cast<double>(r.counts[d]);
  }
  if (r.total == 0) return;
  const double n = static_cast<double>(r.total);
  r.mean = sum / n;
  double var = 0.0;
  for (int d = 0; d <= 64; ++d) {
    const double dev = d - r.mean;
    var += dev * dev * static_cast<double>(r.counts[d]);
  }
  r.stddev = std::sqrt(var / n);

  // Merge bins from each tail inward until the expected count reaches 5.
  std::vector<std::pair<double, double>> bins;  // (observed, expected)
  double obs = 0.0;
  double exp = 0.0;
  int d = 0;
  for (; d <= 64; ++d) {
    obs += static_cast<double>(r.counts[d]);
    exp += n * binomial64_pmf(d);
    if (exp >= 5.0) break;
  }
  int hi = 64;
  double obs_hi = 0.0;
  double exp_hi = 0.0;
  for (; hi > d; --hi) {
    obs_hi += static_cast<double>(r.counts[hi]);
    exp_hi += n * binomial64_pmf(hi);
    if (exp_hi >= 5.0) break;
  }
  bins.emplace_back(obs, exp);
  for (int k = d + 1; k < hi; ++k) bins.emplace_back(static_cast<double>(r.counts[k]), n * binomial64_pmf(k));
  if (hi > d) bins.emplace_back(obs_hi, exp_hi);
  r.chi_square = 0.0;
  for (const auto& [o, e] : bins) r.chi_square += (o - e) * (o - e) / e;
  r.degrees_of_freedom = static_cast<int>(bins.size()) - 1;
  r.p_value = r.degrees_of_freedom > 0
                  ? boost::math::gamma_q(r.degrees_of_freedom / 2.0, r.chi_square / 2.0)
                  : 1.0;
}

SucInstance avalanche_instance(const AvalancheConfig& cfg, const SBoxPool& pool,
                               std::size_t index) {
  DeterministicEntropy entropy(cfg.seed, index + 1);
  SucParams params;
  params.rounds = cfg.rounds;
  params.feistel_r = cfg.feistel_r;
  if (cfg.sbox_mode == SBoxMode::kEightDistinct) {
    return generate_instance(pool, params, entropy);
  }
  FeistelSpec spec;
  spec.rounds = cfg.feistel_r;
  for (int k = 0; k < (cfg.feistel_r + 1) / 2; ++k) {
    spec.free.push_back(pool[draw_index(entropy, pool.size()).index]);
  }
  const SBox8 box = feistel8(spec);
  SBoxLayer layer;
  layer.fill(box);
  return SucInstance(layer, params);
}

AvalancheResult avalanche_histogram(const AvalancheConfig& cfg, const SBoxPool& pool) {
  cfg.validate();
  std::vector<Counts> per(cfg.suc_count);
  parallel_for(cfg.suc_count, cfg.threads, [&](std::size_t i) {
    const SucInstance suc = avalanche_instance(cfg, pool, i);
    // Inputs come from a stream disjoint from the instance streams.
    DeterministicEntropy inputs(cfg.seed ^ 0x5A5A5A5A5A5A5A5AULL, i + 1);
    per[i] = instance_counts(suc, cfg.trials_per_suc, inputs);
  });
  return reduce(per);
}

AvalancheResult avalanche_histogram(const AvalancheConfig& cfg) {
  cfg.validate();
  DeterministicEntropy entropy(cfg.seed, 0);
  const SBoxPool pool = build_pool(cfg.pool_size, entropy);
  return avalanche_histogram(cfg, pool);
}

AvalancheResult avalanche_over(std::span<const SucInstance> instances, std::size_t trials,
                               std::uint64_t seed) {
  std::vector<Counts> per;
  per.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    DeterministicEntropy inputs(seed, i + 1);
    per.push_back(instance_counts(instances[i], trials, inputs));
  }
  return reduce(per);
}

std::vector<RoundRow> avalanche_vs_rounds(int from, int to, const AvalancheConfig& cfg,
                                          const SBoxPool& pool) {
  if (from < 1 || to < from) throw Error(ErrorCode::kInvalidArgument, "empty round range");
  std::vector<RoundRow> rows;
  for (int r = from; r <= to; ++r) {
    AvalancheConfig c = cfg;
    c.rounds = r;
    const AvalancheResult res = avalanche_histogram(c, pool);
    rows.push_back(RoundRow{r, res.min_instance_mean, res.mean, res.max_instance_mean, res.stddev});
  }
  return rows;
}

std::string histogram_csv(const AvalancheResult& r) {
  std::ostringstream out;
  out.precision(10);
  out << "hamming_distance,count,expected\n";
  for (int d = 0; d <= 64; ++d) {
    out << d << "," << r.counts[d] << "," << static_cast<double>(r.total) * binomial64_pmf(d) << "\n";
  }
  return out.str();
}

std::string histogram_json(const AvalancheResult& r, const AvalancheConfig& cfg) {
  nlohmann::ordered_json j;
  j["suc_count"] = cfg.suc_count;
  j["trials_per_suc"] = cfg.trials_per_suc;
  j["rounds"] = cfg.rounds;
  j["feistel_r"] = cfg.feistel_r;
  j["sbox_mode"] = cfg.sbox_mode == SBoxMode::kSingleReplicated ? "single-replicated" : "eight-distinct";
  j["seed"] = cfg.seed;
  j["pool_size"] = cfg.pool_size;
  j["total"] = r.total;
  j["mean"] = r.mean;
  j["stddev"] = r.stddev;
  j["chi_square"] = r.chi_square;
  j["degrees_of_freedom"] = r.degrees_of_freedom;
  j["p_value"] = r.p_value;
  j["min_instance_mean"] = r.min_instance_mean;
  j["max_instance_mean"] = r.max_instance_mean;
  return j.dump(2);
}

std::string rounds_csv(const std::vector<RoundRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "rounds,min,mean,max,stddev\n";
  for (const auto& row : rows) {
    out << row.rounds << "," << row.min << "," << row.mean << "," << row.max << "," << row.stddev << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------

double kappa_trng(int feistel_r, std::uint64_t set_size, KappaInterpretation interp) {
  if (feistel_r < 1 || feistel_r % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "Feistel round count must be odd and positive");
  }
  if (set_size == 0) throw Error(ErrorCode::kInvalidArgument, "set size must be positive");
  const double units = 4.0 * ceil_log2(set_size) * (feistel_r + 1);
  return interp == KappaInterpretation::kLiteral ? units : units / 8.0;
}

double tau_trng_us(double kappa, const CostConstants& c) { return c.tau1 * kappa + c.tau2; }

OtppTiming tau_otpp(int feistel_r, std::uint64_t set_size, const CostConstants& c) {
  const double kappa = kappa_trng(feistel_r, set_size, KappaInterpretation::kLiteral);
  OtppTiming t;
  t.trng_ms = tau_trng_us(kappa, c) / 1000.0;
  t.sbox_generation_ms = 8.0 * (c.tau3 * feistel_r + c.tau4) / 1000.0;
  t.puf_ms = c.tau_puf / 1000.0;
  t.encryption_ms = 8.0 * c.tau_e / 1000.0;
  t.envm_ms = c.tau_envm / 1000.0;
  t.total_ms = t.trng_ms + t.sbox_generation_ms + t.puf_ms + t.encryption_ms + t.envm_ms;
  return t;
}

ReinitTiming reinit_time(const CostConstants& c) {
  ReinitTiming t;
  t.read_envm_ms = c.read_envm / 1000.0;
  t.puf_ms = c.tau_puf / 1000.0;
  t.decrypt_ms = c.aes_decrypt / 1000.0;
  t.write_lsram_ms = c.write_lsram / 1000.0;
  t.total_ms = t.read_envm_ms + t.puf_ms + t.decrypt_ms + t.write_lsram_ms;
  return t;
}

double hardware_latency_anchor(double freq_mhz, const CostConstants& c) {
  if (!(freq_mhz > 0.0)) throw Error(ErrorCode::kInvalidArgument, "frequency must be positive");
  return c.cycles_per_block / freq_mhz;
}

std::vector<OtppGridRow> otpp_grid(const std::vector<int>& rounds,
                                   const std::vector<std::uint64_t>& set_sizes,
                                   const CostConstants& c) {
  std::vector<OtppGridRow> rows;
  for (int r : rounds) {
    for (std::uint64_t s : set_sizes) rows.push_back(OtppGridRow{r, s, tau_otpp(r, s, c).total_ms});
  }
  return rows;
}

std::string otpp_grid_csv(const std::vector<OtppGridRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "feistel_r,set_size,log2_set_size,tau_otpp_ms\n";
  for (const auto& row : rows) {
    out << row.feistel_r << "," << row.set_size << "," << ceil_log2(row.set_size) << ","
        << row.total_ms << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------

TheoremReport theorem_report(std::size_t count, int feistel_r, const SBoxPool& pool,
                             std::uint64_t seed) {
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "count must be positive");
  TheoremReport rep;
  rep.count = count;
  rep.feistel_r = feistel_r;
  DeterministicEntropy entropy(seed, 0);
  std::size_t dp_over = 0;
  std::size_t lp_over = 0;
  std::size_t any_over = 0;
  constexpr double kPSquared = 1.0 / 16.0;
  for (std::size_t i = 0; i < count; ++i) {
    FeistelSpec spec;
    spec.rounds = feistel_r;
    for (int k = 0; k < (feistel_r + 1) / 2; ++k) {
      spec.free.push_back(pool[draw_index(entropy, pool.size()).index]);
    }
    const SBox8 box = feistel8(spec);
    if (!box.is_involution()) ++rep.non_involutions;
    const SBox8Profile p = profile8(box);
    ++rep.diff_histogram[p.base.diff];
    ++rep.lin_histogram[p.base.lin];
    rep.mean_max_dp += p.max_differential_probability;
    rep.mean_max_lp += p.max_linear_probability;
    dp_over += p.max_differential_probability > kPSquared;
    lp_over += p.max_linear_probability > kPSquared;
    any_over += p.exceeds_p_squared;
  }
  const double n = static_cast<double>(count);
  rep.mean_max_dp /= n;
  rep.mean_max_lp /= n;
  rep.fraction_dp_exceeding = dp_over / n;
  rep.fraction_lp_exceeding = lp_over / n;
  rep.fraction_any_exceeding = any_over / n;
  return rep;
}

std::string theorem_json(const TheoremReport& r) {
  nlohmann::ordered_json j;
  j["count"] = r.count;
  j["feistel_r"] = r.feistel_r;
  j["p_squared"] = 1.0 / 16.0;
  nlohmann::ordered_json dh = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.diff_histogram) dh[std::to_string(k)] = v;
  nlohmann::ordered_json lh = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.lin_histogram) lh[std::to_string(k)] = v;
  j["max_ddt_histogram"] = dh;
  j["max_walsh_histogram"] = lh;
  j["mean_max_differential_probability"] = r.mean_max_dp;
  j["mean_max_linear_probability"] = r.mean_max_lp;
  j["fraction_dp_exceeding_p_squared"] = r.fraction_dp_exceeding;
  j["fraction_lp_exceeding_p_squared"] = r.fraction_lp_exceeding;
  j["fraction_any_exceeding_p_squared"] = r.fraction_any_exceeding;
  j["non_involutions"] = r.non_involutions;
  return j.dump(2);
}

}  // namespace sramsuc::analysis
