#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sramsuc/analysis.hpp"
#include "sramsuc/authority.hpp"
#include "sramsuc/error.hpp"
#include "sramsuc/genie.hpp"
#include "sramsuc/netlink.hpp"

namespace py = pybind11;
using namespace sramsuc;

namespace {

std::unique_ptr<EntropySource> entropy_for(std::optional<std::uint64_t> seed, std::uint64_t stream = 0) {
  if (seed) return std::make_unique<DeterministicEntropy>(*seed, stream);
  return std::make_unique<OsEntropy>();
}

SucParams make_params(int rounds, int feistel_r) {
  SucParams p;
  p.rounds = rounds;
  p.feistel_r = feistel_r;
  return p;
}

py::dict profile_dict(const SBoxProfile& p) {
  py::dict d;
  d["bijective"] = p.bijective;
  d["lin"] = p.lin;
  d["diff"] = p.diff;
  d["branch_min"] = p.branch_min;
  return d;
}

py::bytes as_bytes(const Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

Bytes from_py(const py::bytes& b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

}  // namespace

PYBIND11_MODULE(_sramsuc, m) {
  m.doc() = "SRAM-SUC emulator core";

  static py::exception<Error> error_type(m, "SramSucError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  // sbox-lab
  py::class_<SBox4>(m, "SBox4")
      .def(py::init([](std::vector<int> values) {
        if (values.size() != 16) throw Error(ErrorCode::kInvalidArgument, "need 16 values");
        SBox4::Table t{};
        for (std::size_t i = 0; i < 16; ++i) {
          if (values[i] < 0 || values[i] > 15) throw Error(ErrorCode::kInvalidArgument, "value out of range");
          t[i] = static_cast<std::uint8_t>(values[i]);
        }
        return SBox4(t);
      }))
      .def_static("from_hex", &SBox4::from_hex)
      .def("hex", &SBox4::to_hex)
      .def("table", [](const SBox4& s) { return std::vector<int>(s.table().begin(), s.table().end()); })
      .def("__call__", [](const SBox4& s, int x) { return s(static_cast<std::uint8_t>(x)); })
      .def("__eq__", [](const SBox4& a, const SBox4& b) { return a == b; })
      .def("__repr__", [](const SBox4& s) { return "SBox4('" + s.to_hex() + "')"; });

  m.def("profile4", [](const SBox4& s) { return profile_dict(profile4(s)); });
  m.def("is_serpent_type", &is_serpent_type);
  m.def(
      "sample_serpent_type",
      [](std::optional<std::uint64_t> seed) {
        auto e = entropy_for(seed);
        return sample_serpent_type(*e);
      },
      py::arg("seed") = py::none());

  py::class_<SBoxPool>(m, "SBoxPool")
      .def("__len__", &SBoxPool::size)
      .def("__getitem__", [](const SBoxPool& p, std::size_t i) { return p[i]; })
      .def("digest", [](const SBoxPool& p) { return to_hex(p.digest()); })
      .def("entries", &SBoxPool::entries)
      .def("save", &SBoxPool::save)
      .def_static("load", &SBoxPool::load)
      .def("serialize", [](const SBoxPool& p) { return as_bytes(p.serialize()); })
      .def_static("parse", [](const py::bytes& b) { return SBoxPool::parse(from_py(b)); });
  m.def(
      "build_pool",
      [](std::size_t count, std::optional<std::uint64_t> seed) {
        auto e = entropy_for(seed);
        return build_pool(count, *e);
      },
      py::arg("count"), py::arg("seed") = py::none());

  // sbox8-feistel
  py::class_<SBox8>(m, "SBox8")
      .def_static("identity", &SBox8::identity)
      .def_static("nibble_swap", &SBox8::nibble_swap)
      .def_static("from_hex", &SBox8::from_hex)
      .def("hex", &SBox8::to_hex)
      .def("table", [](const SBox8& s) { return std::vector<int>(s.table().begin(), s.table().end()); })
      .def("__call__", [](const SBox8& s, int x) { return s(static_cast<std::uint8_t>(x)); })
      .def("is_involution", &SBox8::is_involution)
      .def("__eq__", [](const SBox8& a, const SBox8& b) { return a == b; });
  m.def("feistel8", [](int rounds, std::vector<SBox4> free) { return feistel8({rounds, std::move(free)}); },
        py::arg("rounds"), py::arg("free"));
  m.def("profile8", [](const SBox8& s) {
    const auto p = profile8(s);
    py::dict d = profile_dict(p.base);
    d["max_differential_probability"] = p.max_differential_probability;
    d["max_linear_probability"] = p.max_linear_probability;
    d["exceeds_p_squared"] = p.exceeds_p_squared;
    return d;
  });
  m.def("class_log2_cardinality", &class_log2_cardinality, py::arg("r"), py::arg("set_size"));

  // suc-core; blocks are 16-character hex strings, B0 first.
  py::class_<SucInstance, std::shared_ptr<SucInstance>>(m, "SucInstance")
      .def("apply", [](const SucInstance& s, const std::string& hex) { return s.apply(Block64::from_hex(hex)).to_hex(); })
      .def("apply_word", [](const SucInstance& s, std::uint64_t w) { return s.apply(Block64::from_word(w)).word(); })
      .def("table_digest", [](const SucInstance& s) { return to_hex(s.table_digest()); })
      .def("table_bytes", [](const SucInstance& s) { return as_bytes(s.table_bytes()); })
      .def_property_readonly("rounds", [](const SucInstance& s) { return s.params().rounds; })
      .def("sboxes", [](const SucInstance& s) { return std::vector<SBox8>(s.sboxes().begin(), s.sboxes().end()); });
  m.def(
      "generate_instance",
      [](const SBoxPool& pool, int rounds, int feistel_r, std::optional<std::uint64_t> seed) {
        auto e = entropy_for(seed);
        return std::make_shared<SucInstance>(generate_instance(pool, make_params(rounds, feistel_r), *e));
      },
      py::arg("pool"), py::arg("rounds") = 15, py::arg("feistel_r") = 3, py::arg("seed") = py::none());
  m.def("p_layer", [](const std::string& hex) { return p_layer(Block64::from_hex(hex)).to_hex(); });
  m.def("suc_log2_cardinality", &suc_log2_cardinality, py::arg("r"), py::arg("set_size"));

  // genie
  py::class_<DeviceState>(m, "Device")
      .def_static(
          "manufacture",
          [](const std::filesystem::path& stem, const std::string& serial, std::optional<std::uint64_t> seed) {
            auto e = entropy_for(seed, 1);
            return DeviceState::manufacture(DeviceFiles::from_stem(stem), serial, *e);
          },
          py::arg("stem"), py::arg("serial"), py::arg("seed") = py::none())
      .def_static("load", [](const std::filesystem::path& stem) { return DeviceState::load(DeviceFiles::from_stem(stem)); })
      .def_property_readonly("serial", &DeviceState::serial)
      .def_property_readonly("lifecycle", [](const DeviceState& d) { return std::string(to_string(d.lifecycle())); })
      .def(
          "personalize",
          [](DeviceState& d, const std::filesystem::path& stem, const SBoxPool& pool, int rounds, int feistel_r,
             std::optional<std::uint64_t> seed) {
            auto e = entropy_for(seed, 2);
            const OtppReport rep = otpp(d, pool, make_params(rounds, feistel_r), *e);
            d.save_envm(DeviceFiles::from_stem(stem).envm);
            py::dict out;
            out["index_draws"] = rep.index_draws;
            out["index_bytes"] = rep.index_bytes;
            out["table_digest"] = to_hex(rep.table_digest);
            return out;
          },
          py::arg("stem"), py::arg("pool"), py::arg("rounds") = 15, py::arg("feistel_r") = 3,
          py::arg("seed") = py::none())
      .def("boot", [](DeviceState& d) { return std::const_pointer_cast<SucInstance>(reinit(d)); });

  // authority
  py::class_<UirStore>(m, "UirStore").def(py::init<std::optional<std::filesystem::path>>(), py::arg("directory") = py::none());
  py::class_<TrustedAuthority>(m, "TrustedAuthority")
      .def(py::init<UirStore&>(), py::keep_alive<1, 2>())
      .def(
          "enroll",
          [](TrustedAuthority& ta, const std::string& serial, std::shared_ptr<SucInstance> suc, std::size_t t,
             std::optional<std::uint64_t> seed) {
            LocalDeviceChannel dev(serial, std::move(suc));
            auto e = entropy_for(seed, 3);
            const EnrollReport rep = ta.enroll(dev, t, *e);
            return rep.payload_bytes;
          },
          py::arg("serial"), py::arg("suc"), py::arg("pairs"), py::arg("seed") = py::none())
      .def(
          "authenticate",
          [](TrustedAuthority& ta, const std::string& serial, std::shared_ptr<SucInstance> suc, bool inverse) {
            LocalDeviceChannel dev(serial, std::move(suc));
            const AuthOutcome o = inverse ? ta.inverse_authenticate(dev) : ta.authenticate(dev);
            return std::string(to_string(o.result));
          },
          py::arg("serial"), py::arg("suc"), py::arg("inverse") = false)
      .def("stats", [](const TrustedAuthority& ta) {
        py::list out;
        for (const auto& s : ta.stats()) {
          py::dict d;
          d["serial"] = s.serial;
          d["total"] = s.total;
          d["unused"] = s.unused;
          out.append(d);
        }
        return out;
      });

  // netlink framing
  m.def("encode_challenge", [](const std::string& hex) { return as_bytes(net::encode(net::challenge(Block64::from_hex(hex)))); });
  m.def("decode_frame", [](const py::bytes& wire) {
    const net::Frame f = net::decode(from_py(wire));
    return py::make_tuple(std::string(net::to_string(f.kind)), as_bytes(f.payload));
  });

  // analysis
  m.def(
      "avalanche",
      [](std::size_t sucs, std::size_t trials, int rounds, int feistel_r, bool eight_distinct, std::uint64_t seed,
         std::size_t pool_size) {
        analysis::AvalancheConfig cfg;
        cfg.suc_count = sucs;
        cfg.trials_per_suc = trials;
        cfg.rounds = rounds;
        cfg.feistel_r = feistel_r;
        cfg.sbox_mode = eight_distinct ? analysis::SBoxMode::kEightDistinct : analysis::SBoxMode::kSingleReplicated;
        cfg.seed = seed;
        cfg.pool_size = pool_size;
        const auto r = analysis::avalanche_histogram(cfg);
        py::dict d;
        d["counts"] = std::vector<std::uint64_t>(r.counts.begin(), r.counts.end());
        d["mean"] = r.mean;
        d["stddev"] = r.stddev;
        d["chi_square"] = r.chi_square;
        d["p_value"] = r.p_value;
        return d;
      },
      py::arg("sucs") = 1000, py::arg("trials") = 100, py::arg("rounds") = 15, py::arg("feistel_r") = 3,
      py::arg("eight_distinct") = false, py::arg("seed") = 0, py::arg("pool_size") = 1000);
  m.def("tau_otpp_ms", [](int r, std::uint64_t set_size) { return analysis::tau_otpp(r, set_size).total_ms; });
  m.def("tau_trng_ms", [](double kappa) { return analysis::tau_trng_us(kappa) / 1000.0; });
  m.def("reinit_ms", [] { return analysis::reinit_time().total_ms; });
  m.def("hardware_latency_us", [](double mhz) { return analysis::hardware_latency_anchor(mhz); });
  m.def("kappa_trng", [](int r, std::uint64_t set_size, bool reconciled_bytes) {
    return analysis::kappa_trng(r, set_size,
                                reconciled_bytes ? analysis::KappaInterpretation::kReconciledBytes
                                                 : analysis::KappaInterpretation::kLiteral);
  }, py::arg("r"), py::arg("set_size"), py::arg("reconciled_bytes") = false);
}
