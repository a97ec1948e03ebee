#include "sramsuc/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sramsuc/analysis.hpp"
#include "sramsuc/authority.hpp"
#include "sramsuc/error.hpp"
#include "sramsuc/genie.hpp"
#include "sramsuc/netlink.hpp"
#include "sramsuc/sbox4.hpp"
#include "sramsuc/sbox8.hpp"

namespace sramsuc::cli {

namespace {

using json = nlohmann::ordered_json;

struct Globals {
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  std::string format = "json";
};

std::unique_ptr<EntropySource> make_entropy(const Globals& g, std::uint64_t stream = 0) {
  if (g.seed) return std::make_unique<DeterministicEntropy>(*g.seed, stream);
  return std::make_unique<OsEntropy>();
}

void setup_logging(bool verbose) {
  auto logger = spdlog::get("sramsuc");
  if (!logger) {
    logger = spdlog::stderr_color_mt("sramsuc");
    spdlog::set_default_logger(logger);
  }
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SRAMSUC_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(trim(part), &used);
      if (used != trim(part).size()) throw std::invalid_argument(part);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "bad index '" + part + "'");
    }
  }
  return out;
}

json profile_json(const SBoxProfile& p) {
  json j;
  j["bijective"] = p.bijective;
  j["lin"] = p.lin;
  j["diff"] = p.diff;
  j["branch_min"] = p.branch_min;
  return j;
}

void emit(std::ostream& out, const Globals& g, const json& j) {
  if (g.format == "json") {
    out << j.dump(2) << "\n";
    return;
  }
  // csv: one header row, one value row over the top-level scalars.
  std::string header;
  std::string values;
  for (const auto& [key, value] : j.items()) {
    if (value.is_structured()) continue;
    header += (header.empty() ? "" : ",") + key;
    values += (values.empty() ? "" : ",") + (value.is_string() ? value.get<std::string>() : value.dump());
  }
  out << header << "\n" << values << "\n";
}

std::string stem_serial(const std::string& stem) {
  return std::filesystem::path(stem).filename().string();
}

std::shared_ptr<const SucInstance> try_boot(DeviceState& dev) {
  try {
    return reinit(dev);
  } catch (const Error& e) {
    spdlog::warn("reinitialization failed: {}", e.what());
    return nullptr;
  }
}

struct OneShotTa {
  std::string serial;
  std::string listen = "127.0.0.1:7400";
  std::string uir_dir = "uir";
  int timeout_ms = 30000;
};

SucParams record_params(int rounds, int feistel_r) {
  SucParams p;
  p.rounds = rounds;
  p.feistel_r = feistel_r;
  return p;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SRAM-SUC emulator: S-box pools, device lifecycle, TA service, experiments"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Deterministic entropy seed");
  (void)seed_opt;
  app.add_flag("--verbose,-v", g.verbose, "Debug logging");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ;

  app.fallthrough();
  std::function<int()> action;

  // --- sbox-lab ------------------------------------------------------------
  std::size_t pool_count = 256;
  std::string pool_out;
  auto* gen_pool = app.add_subcommand("gen-pool", "Generate a pool of Serpent-type 4-bit S-boxes");
  gen_pool->add_option("--count", pool_count, "Number of S-boxes")->check(CLI::PositiveNumber);
  gen_pool->add_option("--out", pool_out, "Pool file")->required();
  gen_pool->callback([&] {
    action = [&] {
      auto entropy = make_entropy(g);
      const SBoxPool pool = build_pool(pool_count, *entropy);
      pool.save(pool_out);
      json j;
      j["count"] = pool.size();
      j["digest"] = to_hex(pool.digest());
      j["file"] = pool_out;
      emit(out, g, j);
      return kExitOk;
    };
  });

  std::string sbox_hex;
  auto* profile = app.add_subcommand("profile", "Profile a 4-bit S-box");
  profile->add_option("--sbox", sbox_hex, "16 hex digits, S(0) first")->required();
  profile->callback([&] {
    action = [&] {
      const SBox4 s = SBox4::from_hex(sbox_hex);
      json j = profile_json(profile4(s));
      j["serpent_type"] = is_serpent_type(s);
      emit(out, g, j);
      return kExitOk;
    };
  });

  // --- sbox8-feistel -------------------------------------------------------
  int feistel_r = 3;
  std::string free_list;
  std::string pool_file;
  std::string table_out;
  auto* build8 = app.add_subcommand("build-sbox8", "Build an involutive 8-bit S-box from pool entries");
  build8->add_option("--r", feistel_r, "Odd Feistel round count");
  build8->add_option("--free", free_list, "Comma-separated pool indices, (r+1)/2 of them")->required();
  build8->add_option("--pool", pool_file, "Pool file")->required();
  build8->add_option("--out", table_out, "Output file for the 512-hex-character table");
  build8->callback([&] {
    action = [&] {
      const SBoxPool pool = SBoxPool::load(pool_file);
      FeistelSpec spec;
      spec.rounds = feistel_r;
      for (std::size_t idx : parse_index_list(free_list)) {
        if (idx >= pool.size()) throw Error(ErrorCode::kInvalidArgument, "pool index out of range");
        spec.free.push_back(pool[idx]);
      }
      const SBox8 box = feistel8(spec);
      if (table_out.empty()) {
        out << box.to_hex() << "\n";
      } else {
        write_text(table_out, box.to_hex() + "\n");
        out << table_out << "\n";
      }
      return kExitOk;
    };
  });

  std::string table_file;
  auto* profile8_cmd = app.add_subcommand("profile8", "Profile an 8-bit S-box table file");
  profile8_cmd->add_option("--table", table_file, "File with 512 hex characters")->required();
  profile8_cmd->callback([&] {
    action = [&] {
      const SBox8 box = SBox8::from_hex(trim(read_text(table_file)));
      const SBox8Profile p = profile8(box);
      json j = profile_json(p.base);
      j["involution"] = box.is_involution();
      j["max_differential_probability"] = p.max_differential_probability;
      j["max_linear_probability"] = p.max_linear_probability;
      j["exceeds_p_squared"] = p.exceeds_p_squared;
      emit(out, g, j);
      return kExitOk;
    };
  });

  // --- genie ---------------------------------------------------------------
  std::string device_stem;
  std::string serial_override;
  auto* new_device = app.add_subcommand("new-device", "Manufacture a blank device (silicon + envm files)");
  new_device->add_option("--device", device_stem, "Path stem: STEM.silicon / STEM.envm")->required();
  new_device->add_option("--serial", serial_override, "Serial number (default: file name of the stem)");
  new_device->callback([&] {
    action = [&] {
      auto entropy = make_entropy(g, 1);
      const std::string serial = serial_override.empty() ? stem_serial(device_stem) : serial_override;
      DeviceState::manufacture(DeviceFiles::from_stem(device_stem), serial, *entropy);
      json j;
      j["serial"] = serial;
      j["lifecycle"] = "blank";
      emit(out, g, j);
      return kExitOk;
    };
  });

  int suc_rounds = 15;
  auto* personalize = app.add_subcommand("personalize", "One-time personalization of a blank device");
  personalize->add_option("--device", device_stem, "Device path stem")->required();
  personalize->add_option("--pool", pool_file, "Pool file")->required();
  personalize->add_option("--r", feistel_r, "Odd Feistel round count");
  personalize->add_option("--rounds", suc_rounds, "SPN rounds")->check(CLI::PositiveNumber);
  personalize->callback([&] {
    action = [&] {
      const DeviceFiles files = DeviceFiles::from_stem(device_stem);
      DeviceState dev = DeviceState::load(files);
      const SBoxPool pool = SBoxPool::load(pool_file);
      auto entropy = make_entropy(g, 2);
      const OtppReport rep = otpp(dev, pool, record_params(suc_rounds, feistel_r), *entropy);
      dev.save_envm(files.envm);
      json j;
      j["serial"] = dev.serial();
      j["lifecycle"] = to_string(dev.lifecycle());
      j["index_draws"] = rep.index_draws;
      j["index_bytes"] = rep.index_bytes;
      j["sealed_bytes"] = dev.envm().blob->ciphertext.size();
      emit(out, g, j);
      return kExitOk;
    };
  });

  auto* boot = app.add_subcommand("boot", "Reinitialize a personalized device");
  boot->add_option("--device", device_stem, "Device path stem")->required();
  boot->callback([&] {
    action = [&] {
      DeviceState dev = DeviceState::load(DeviceFiles::from_stem(device_stem));
      const auto suc = reinit(dev);
      json j;
      j["serial"] = dev.serial();
      j["loaded"] = true;
      j["rounds"] = suc->params().rounds;
      j["table_digest"] = to_hex(suc->table_digest());
      emit(out, g, j);
      return kExitOk;
    };
  });

  std::size_t tamper_byte = 0;
  auto* tamper = app.add_subcommand("tamper", "Flip one byte of the sealed blob (test helper)");
  tamper->add_option("--device", device_stem, "Device path stem")->required();
  tamper->add_option("--byte", tamper_byte, "Offset into nonce || ciphertext || tag")->required();
  tamper->callback([&] {
    action = [&] {
      const DeviceFiles files = DeviceFiles::from_stem(device_stem);
      DeviceState dev = DeviceState::load(files);
      if (!dev.envm().blob) throw Error(ErrorCode::kNotPersonalized, "not personalized");
      Bytes raw = dev.envm().blob->concat();
      if (tamper_byte >= raw.size()) throw Error(ErrorCode::kInvalidArgument, "byte offset out of range");
      raw[tamper_byte] ^= 0x01;
      dev.mutable_envm().blob = SealedBlob::split(raw, dev.envm().blob->ciphertext.size());
      dev.save_envm(files.envm);
      out << "flipped byte " << tamper_byte << "\n";
      return kExitOk;
    };
  });

  std::string challenge_hex;
  auto* respond = app.add_subcommand("respond", "Boot a device and answer one challenge");
  respond->add_option("--device", device_stem, "Device path stem")->required();
  respond->add_option("--challenge", challenge_hex, "16 hex characters, B0 first")->required();
  respond->callback([&] {
    action = [&] {
      DeviceState dev = DeviceState::load(DeviceFiles::from_stem(device_stem));
      const auto suc = reinit(dev);
      out << suc->apply(Block64::from_hex(challenge_hex)).to_hex() << "\n";
      return kExitOk;
    };
  });

  // --- netlink / authority -------------------------------------------------
  std::string listen_addr = "127.0.0.1:7400";
  std::string uir_dir = "uir";
  std::size_t enroll_pairs = 0;
  std::size_t auths_per_session = 1;
  std::size_t max_sessions = 0;
  bool inverse = false;
  int timeout_ms = 30000;
  auto* serve = app.add_subcommand("serve-ta", "Run the Trusted Authority service");
  serve->add_option("--listen", listen_addr, "HOST:PORT");
  serve->add_option("--uir", uir_dir, "UIR store directory");
  serve->add_option("--enroll-pairs", enroll_pairs, "Enroll unknown devices with N pairs (0: reject them)");
  serve->add_option("--auths", auths_per_session, "Authentications per session");
  serve->add_option("--sessions", max_sessions, "Exit after this many sessions (0: run forever)");
  serve->add_option("--rounds", suc_rounds, "SPN rounds recorded in new UIRs");
  serve->add_option("--r", feistel_r, "Feistel rounds recorded in new UIRs");
  serve->add_flag("--inverse", inverse, "Authenticate in the inverse direction");
  serve->add_option("--timeout-ms", timeout_ms, "Per-read session timeout");
  serve->callback([&] {
    action = [&] {
      UirStore store(std::filesystem::path{uir_dir});
      TrustedAuthority ta(store, record_params(suc_rounds, feistel_r));
      auto entropy = make_entropy(g, 3);
      std::atomic<std::size_t> finished{0};
      net::TaServer::Options opts;
      opts.session_timeout = std::chrono::milliseconds(timeout_ms);
      opts.policy = [&](net::TaServer& server, net::Session& session) {
        if (!server.authority().is_enrolled(session.serial())) {
          if (enroll_pairs == 0) {
            session.notify(net::error_frame("unknown device"));
          } else {
            server.enroll(session, enroll_pairs);
          }
        }
        if (server.authority().is_enrolled(session.serial())) {
          for (std::size_t i = 0; i < auths_per_session; ++i) {
            const AuthOutcome o = server.authenticate(session, inverse ? Direction::kInverse : Direction::kForward);
            spdlog::info("{}: {}", session.serial(), to_string(o.result));
            if (o.result == AuthResult::kExhausted) break;
          }
        }
        ++finished;
      };
      net::TaServer server(net::Endpoint::parse(listen_addr), ta, *entropy, opts);
      err << "listening " << server.port() << std::endl;
      while (max_sessions == 0 || finished.load() < max_sessions) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
      server.stop();
      return kExitOk;
    };
  });

  std::string connect_addr = "127.0.0.1:7400";
  int retry_ms = 5000;
  auto* agent = app.add_subcommand("agent", "Run the device agent against a TA");
  agent->add_option("--device", device_stem, "Device path stem")->required();
  agent->add_option("--connect", connect_addr, "HOST:PORT");
  agent->add_option("--as", serial_override, "Claim this serial instead of the device's own");
  agent->add_option("--retry-ms", retry_ms, "Keep retrying the connection for this long");
  agent->add_option("--timeout-ms", timeout_ms, "Idle timeout");
  agent->callback([&] {
    action = [&] {
      DeviceState dev = DeviceState::load(DeviceFiles::from_stem(device_stem));
      const auto suc = try_boot(dev);
      const std::string serial = serial_override.empty() ? dev.serial() : serial_override;
      const auto ep = net::Endpoint::parse(connect_addr);
      const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(retry_ms);
      net::AgentStats st;
      for (;;) {
        try {
          st = net::run_agent(serial, suc, ep, std::chrono::milliseconds(timeout_ms));
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDeviceUnreachable || std::chrono::steady_clock::now() > deadline) throw;
          std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
      }
      json j;
      j["serial"] = serial;
      j["challenges"] = st.challenges;
      j["accepted"] = st.accepted;
      j["rejected"] = st.rejected;
      j["exhausted"] = st.exhausted;
      if (st.error) j["error"] = *st.error;
      emit(out, g, j);
      return (st.rejected > 0 || st.exhausted > 0 || st.error) ? kExitFailure : kExitOk;
    };
  });

  // One-shot TA commands: listen, wait for the named agent, run, exit.
  std::string sn;
  std::size_t pairs = 16;
  std::size_t auth_count = 1;
  auto* enroll_cmd = app.add_subcommand("enroll", "Wait for one agent and enroll it");
  enroll_cmd->add_option("--sn", sn, "Serial to enroll")->required();
  enroll_cmd->add_option("--pairs", pairs, "Challenge-response pairs")->check(CLI::PositiveNumber);
  enroll_cmd->add_option("--listen", listen_addr, "HOST:PORT");
  enroll_cmd->add_option("--uir", uir_dir, "UIR store directory");
  enroll_cmd->add_option("--rounds", suc_rounds, "SPN rounds recorded in the UIR");
  enroll_cmd->add_option("--r", feistel_r, "Feistel rounds recorded in the UIR");
  enroll_cmd->add_option("--timeout-ms", timeout_ms, "How long to wait for the agent");

  auto* auth_cmd = app.add_subcommand("authenticate", "Wait for one agent and authenticate it");
  auth_cmd->add_option("--sn", sn, "Serial to authenticate")->required();
  auth_cmd->add_option("--count", auth_count, "Number of authentications")->check(CLI::PositiveNumber);
  auth_cmd->add_option("--listen", listen_addr, "HOST:PORT");
  auth_cmd->add_option("--uir", uir_dir, "UIR store directory");
  auth_cmd->add_flag("--inverse", inverse, "Send the response, expect the challenge");
  auth_cmd->add_option("--timeout-ms", timeout_ms, "How long to wait for the agent");

  auto run_one_shot = [&](bool enrolling) {
    UirStore store(std::filesystem::path{uir_dir});
    TrustedAuthority ta(store, record_params(suc_rounds, feistel_r));
    if (!enrolling && !ta.is_enrolled(sn)) throw Error(ErrorCode::kUnknownDevice, "no UIR for " + sn);
    if (enrolling && ta.is_enrolled(sn)) throw Error(ErrorCode::kDuplicateEnrollment, "serial " + sn + " already enrolled");
    auto entropy = make_entropy(g, 4);
    net::TaServer::Options opts;
    opts.session_timeout = std::chrono::milliseconds(timeout_ms);
    net::TaServer server(net::Endpoint::parse(listen_addr), ta, *entropy, opts);
    err << "listening " << server.port() << std::endl;
    if (!server.wait_for(sn, std::chrono::milliseconds(timeout_ms))) {
      throw Error(ErrorCode::kDeviceUnreachable, "agent " + sn + " did not connect");
    }
    json j;
    j["serial"] = sn;
    int rc = kExitOk;
    if (enrolling) {
      const EnrollReport rep = server.enroll(sn, pairs);
      j["pairs"] = rep.pairs;
      j["payload_bytes"] = rep.payload_bytes;
      j["elapsed_us"] = rep.elapsed.count();
    } else {
      json results = json::array();
      for (std::size_t i = 0; i < auth_count; ++i) {
        const AuthOutcome o = inverse ? server.inverse_authenticate(sn) : server.authenticate(sn);
        results.push_back(to_string(o.result));
        if (o.result != AuthResult::kAccepted) rc = kExitFailure;
        if (o.result == AuthResult::kExhausted) break;
      }
      j["results"] = results;
      j["result"] = rc == kExitOk ? "accepted" : results.back().get<std::string>();
    }
    server.stop();
    emit(out, g, j);
    return rc;
  };
  enroll_cmd->callback([&] { action = [&] { return run_one_shot(true); }; });
  auth_cmd->callback([&] { action = [&] { return run_one_shot(false); }; });

  auto* stats_cmd = app.add_subcommand("uir-stats", "Summarize the UIR store");
  stats_cmd->add_option("--uir", uir_dir, "UIR store directory");
  stats_cmd->callback([&] {
    action = [&] {
      UirStore store(std::filesystem::path{uir_dir});
      TrustedAuthority ta(store);
      if (g.format == "csv") {
        out << "serial,total,unused\n";
        for (const auto& s : ta.stats()) out << s.serial << "," << s.total << "," << s.unused << "\n";
      } else {
        json arr = json::array();
        for (const auto& s : ta.stats()) arr.push_back({{"serial", s.serial}, {"total", s.total}, {"unused", s.unused}});
        out << arr.dump(2) << "\n";
      }
      return kExitOk;
    };
  });

  // --- analysis ------------------------------------------------------------
  analysis::AvalancheConfig acfg;
  std::string mode = "single-replicated";
  std::string csv_out;
  auto add_avalanche_opts = [&](CLI::App* sub) {
    sub->add_option("--sucs", acfg.suc_count, "SUC instances")->check(CLI::PositiveNumber);
    sub->add_option("--trials", acfg.trials_per_suc, "Random inputs per SUC")->check(CLI::PositiveNumber);
    sub->add_option("--r", acfg.feistel_r, "Feistel rounds");
    sub->add_option("--mode", mode, "S-box mode")->check(CLI::IsMember({"single-replicated", "eight-distinct"}));
    sub->add_option("--pool-size", acfg.pool_size, "4-bit S-boxes to draw from")->check(CLI::PositiveNumber);
    sub->add_option("--threads", acfg.threads, "Worker threads");
    sub->add_option("--out", csv_out, "CSV output file (a .json summary is written alongside)");
  };
  auto* aval = app.add_subcommand("avalanche", "Output Hamming-distance histogram for one-bit input flips");
  add_avalanche_opts(aval);
  aval->add_option("--rounds", acfg.rounds, "SPN rounds")->check(CLI::PositiveNumber);
  aval->callback([&] {
    action = [&] {
      acfg.seed = g.seed.value_or(0);
      acfg.sbox_mode = mode == "eight-distinct" ? analysis::SBoxMode::kEightDistinct
                                                : analysis::SBoxMode::kSingleReplicated;
      const auto res = analysis::avalanche_histogram(acfg);
      const std::string summary = analysis::histogram_json(res, acfg);
      if (!csv_out.empty()) {
        write_text(csv_out, analysis::histogram_csv(res));
        write_text(std::filesystem::path(csv_out).replace_extension(".json").string(), summary + "\n");
      }
      if (g.format == "csv") {
        out << analysis::histogram_csv(res);
      } else {
        out << summary << "\n";
      }
      return kExitOk;
    };
  });

  int from_round = 1;
  int to_round = 32;
  auto* aval_rounds = app.add_subcommand("avalanche-rounds", "Mean avalanche per SPN round count");
  add_avalanche_opts(aval_rounds);
  aval_rounds->add_option("--from", from_round, "First round count")->check(CLI::PositiveNumber);
  aval_rounds->add_option("--to", to_round, "Last round count")->check(CLI::PositiveNumber);
  aval_rounds->callback([&] {
    action = [&] {
      acfg.seed = g.seed.value_or(0);
      acfg.sbox_mode = mode == "eight-distinct" ? analysis::SBoxMode::kEightDistinct
                                                : analysis::SBoxMode::kSingleReplicated;
      DeterministicEntropy entropy(acfg.seed, 0);
      const SBoxPool pool = build_pool(acfg.pool_size, entropy);
      const auto rows = analysis::avalanche_vs_rounds(from_round, to_round, acfg, pool);
      const std::string csv = analysis::rounds_csv(rows);
      if (!csv_out.empty()) write_text(csv_out, csv);
      if (g.format == "csv") {
        out << csv;
      } else {
        json arr = json::array();
        for (const auto& r : rows) {
          arr.push_back({{"rounds", r.rounds}, {"min", r.min}, {"mean", r.mean}, {"max", r.max}, {"stddev", r.stddev}});
        }
        out << arr.dump(2) << "\n";
      }
      return kExitOk;
    };
  });

  std::uint64_t set_size = 256;
  bool grid = false;
  std::string interpretation = "both";
  auto* cost = app.add_subcommand("cost-model", "Analytic personalization / reinitialization timing");
  cost->add_option("--r", feistel_r, "Feistel rounds");
  cost->add_option("--set-size", set_size, "4-bit S-box set cardinality")->check(CLI::PositiveNumber);
  cost->add_flag("--grid", grid, "Emit the r x set-size grid as CSV");
  cost->add_option("--interpretation", interpretation, "TRNG count reading")
      ->check(CLI::IsMember({"literal", "reconciled-bytes", "both"}));
  cost->callback([&] {
    action = [&] {
      if (grid) {
        std::vector<int> rs;
        for (int r = 3; r <= 15; r += 2) rs.push_back(r);
        std::vector<std::uint64_t> sizes;
        for (int b = 8; b <= 21; ++b) sizes.push_back(std::uint64_t{1} << b);
        out << analysis::otpp_grid_csv(analysis::otpp_grid(rs, sizes));
        return kExitOk;
      }
      const analysis::CostConstants c;
      const auto t = analysis::tau_otpp(feistel_r, set_size, c);
      const auto ri = analysis::reinit_time(c);
      json j;
      j["r"] = feistel_r;
      j["set_size"] = set_size;
      if (interpretation != "reconciled-bytes") {
        j["kappa_literal"] = analysis::kappa_trng(feistel_r, set_size, analysis::KappaInterpretation::kLiteral);
      }
      if (interpretation != "literal") {
        const double kb = analysis::kappa_trng(feistel_r, set_size, analysis::KappaInterpretation::kReconciledBytes);
        j["kappa_reconciled_bytes"] = kb;
        j["tau_trng_reconciled_ms"] = analysis::tau_trng_us(kb, c) / 1000.0;
      }
      j["tau_otpp_ms"] = t.total_ms;
      j["otpp_trng_ms"] = t.trng_ms;
      j["otpp_sbox_generation_ms"] = t.sbox_generation_ms;
      j["otpp_puf_ms"] = t.puf_ms;
      j["otpp_encryption_ms"] = t.encryption_ms;
      j["otpp_envm_ms"] = t.envm_ms;
      j["reinit_ms"] = ri.total_ms;
      j["latency_50mhz_us"] = analysis::hardware_latency_anchor(50.0, c);
      j["latency_200mhz_us"] = analysis::hardware_latency_anchor(200.0, c);
      emit(out, g, j);
      return kExitOk;
    };
  });

  auto* card = app.add_subcommand("cardinality", "log2 cardinalities of the S-box class and of SRAM-SUC");
  card->add_option("--r", feistel_r, "Feistel rounds");
  card->add_option("--set-size", set_size, "4-bit S-box set cardinality")->check(CLI::PositiveNumber);
  card->callback([&] {
    action = [&] {
      json j;
      j["r"] = feistel_r;
      j["set_size"] = set_size;
      j["log2_sbox8_class"] = class_log2_cardinality(feistel_r, set_size);
      j["log2_sram_suc"] = suc_log2_cardinality(feistel_r, set_size);
      emit(out, g, j);
      return kExitOk;
    };
  });

  std::size_t theorem_count = 1000;
  auto* theorem = app.add_subcommand("theorem-report", "Max DP/LP statistics of Feistel-built 8-bit S-boxes");
  theorem->add_option("--count", theorem_count, "Number of S-boxes")->check(CLI::PositiveNumber);
  theorem->add_option("--r", feistel_r, "Feistel rounds");
  theorem->add_option("--pool", pool_file, "Pool file (default: 256 entries from --seed)");
  theorem->callback([&] {
    action = [&] {
      const std::uint64_t seed = g.seed.value_or(0);
      std::optional<SBoxPool> pool;
      if (pool_file.empty()) {
        DeterministicEntropy entropy(seed, 0);
        pool = build_pool(256, entropy);
      } else {
        pool = SBoxPool::load(pool_file);
      }
      out << analysis::theorem_json(analysis::theorem_report(theorem_count, feistel_r, *pool, seed)) << "\n";
      return kExitOk;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help arrives here as CallForHelp from the subcommand.
    if (e.get_exit_code() == 0) {
      for (const auto* sub : app.get_subcommands()) out << sub->help();
      return kExitOk;
    }
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;
  setup_logging(g.verbose);

  try {
    return action ? action() : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace sramsuc::cli
