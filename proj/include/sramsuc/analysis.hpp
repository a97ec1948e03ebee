#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sramsuc/sbox4.hpp"
#include "sramsuc/suc.hpp"

namespace sramsuc::analysis {

enum class SBoxMode {
  kSingleReplicated,  // one Feistel-built S-box in all eight positions
  kEightDistinct,     // eight independently selected S-boxes, as deployed
};

struct AvalancheConfig {
  std::size_t suc_count = 1000;
  std::size_t trials_per_suc = 100;
  int rounds = 15;
  int feistel_r = 3;
  SBoxMode sbox_mode = SBoxMode::kSingleReplicated;
  std::uint64_t seed = 0;
  std::size_t pool_size = 1000;  // 4-bit S-boxes the instances draw from
  unsigned threads = 1;

  void validate() const;
};

struct AvalancheResult {
  std::array<std::uint64_t, 65> counts{};  // indexed by output Hamming distance
  std::uint64_t total = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  // Goodness of fit against Binomial(64, 1/2); tail bins are merged until
  // every expected count is at least 5.
  double chi_square = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  // Per-instance mean Hamming distance extremes.
  double min_instance_mean = 0.0;
  double max_instance_mean = 0.0;
};

// Instances are built from `pool` with one deterministic entropy stream per
// instance (stream k+1 of cfg.seed); results do not depend on cfg.threads.
AvalancheResult avalanche_histogram(const AvalancheConfig& cfg, const SBoxPool& pool);
// Builds the pool from cfg.seed (stream 0) first.
AvalancheResult avalanche_histogram(const AvalancheConfig& cfg);

// Flips each input bit of `trials` random inputs per instance.
AvalancheResult avalanche_over(std::span<const SucInstance> instances, std::size_t trials,
                               std::uint64_t seed);

SucInstance avalanche_instance(const AvalancheConfig& cfg, const SBoxPool& pool,
                               std::size_t index);

struct RoundRow {
  int rounds = 0;
  double min = 0.0;   // smallest per-instance mean
  double mean = 0.0;  // overall mean Hamming distance
  double max = 0.0;   // largest per-instance mean
  double stddev = 0.0;
};

std::vector<RoundRow> avalanche_vs_rounds(int from, int to, const AvalancheConfig& cfg,
                                          const SBoxPool& pool);

void finalize_statistics(AvalancheResult& result);

std::string histogram_csv(const AvalancheResult& r);
std::string histogram_json(const AvalancheResult& r, const AvalancheConfig& cfg);
std::string rounds_csv(const std::vector<RoundRow>& rows);

// ---------------------------------------------------------------------------
// Analytic timing model of the embedded personalization and reinitialization
// software. All constants in microseconds.

struct CostConstants {
  double tau1 = 4.78125;     // TRNG cost per unit of kappa
  double tau2 = 388.0;       // TRNG fixed cost
  double tau3 = 1.63;        // per Feistel round, per 8-bit S-box
  double tau4 = 0.07;        // per 8-bit S-box fixed cost
  double tau_puf = 30000.0;  // retrieve PUF key
  double tau_envm = 596000.0;  // write the sealed tables to eNVM
  // Per-S-box encryption share, chosen so k3 = 647 ms.
  double tau_e = (647000.0 - 388.0 - 30000.0 - 8 * 0.07 - 596000.0) / 8.0;

  // Hardware latency anchor: cycles for one 15-round block.
  double cycles_per_block = 144.0;

  // Reinitialization components (tau_puf is shared with personalization).
  double read_envm = 1330.0;
  double aes_decrypt = 18000.0;
  double write_lsram = 1770.0;

  double k1() const { return 4.0 * tau1; }
  double k2() const { return 8.0 * tau3; }
  double k3() const { return tau2 + tau_puf + 8.0 * (tau4 + tau_e) + tau_envm; }
};

enum class KappaInterpretation {
  kLiteral,          // 4 * ceil(log2 |S|) * (r + 1)
  kReconciledBytes,  // the same quantity read as bits, divided by 8
};

double kappa_trng(int feistel_r, std::uint64_t set_size, KappaInterpretation interp);

// tau1 * kappa + tau2, in microseconds.
double tau_trng_us(double kappa, const CostConstants& c = {});

struct OtppTiming {
  double trng_ms = 0.0;
  double sbox_generation_ms = 0.0;  // 8 * tau_r
  double puf_ms = 0.0;
  double encryption_ms = 0.0;       // 8 * tau_e
  double envm_ms = 0.0;
  double total_ms = 0.0;
};

OtppTiming tau_otpp(int feistel_r, std::uint64_t set_size, const CostConstants& c = {});

struct ReinitTiming {
  double read_envm_ms = 0.0;
  double puf_ms = 0.0;
  double decrypt_ms = 0.0;
  double write_lsram_ms = 0.0;
  double total_ms = 0.0;
};

ReinitTiming reinit_time(const CostConstants& c = {});

// cycles_per_block / freq, in microseconds.
double hardware_latency_anchor(double freq_mhz, const CostConstants& c = {});

struct OtppGridRow {
  int feistel_r = 0;
  std::uint64_t set_size = 0;
  double total_ms = 0.0;
};

std::vector<OtppGridRow> otpp_grid(const std::vector<int>& rounds,
                                   const std::vector<std::uint64_t>& set_sizes,
                                   const CostConstants& c = {});
std::string otpp_grid_csv(const std::vector<OtppGridRow>& rows);

// ---------------------------------------------------------------------------

struct TheoremReport {
  std::size_t count = 0;
  int feistel_r = 3;
  std::map<int, std::size_t> diff_histogram;  // max DDT entry -> count
  std::map<int, std::size_t> lin_histogram;   // max |Walsh| -> count
  double mean_max_dp = 0.0;
  double mean_max_lp = 0.0;
  double fraction_dp_exceeding = 0.0;  // max DP > 2^-4
  double fraction_lp_exceeding = 0.0;  // max LP > 2^-4
  double fraction_any_exceeding = 0.0;
  std::size_t non_involutions = 0;     // must stay 0
};

// Profiles `count` Feistel-built 8-bit S-boxes with free lists drawn from
// `pool`.
TheoremReport theorem_report(std::size_t count, int feistel_r, const SBoxPool& pool,
                             std::uint64_t seed);
std::string theorem_json(const TheoremReport& r);

}  // namespace sramsuc::analysis
