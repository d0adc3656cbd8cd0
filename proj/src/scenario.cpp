#include "oqmem/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <variant>

#include <Eigen/Core>

#include "oqmem/electrostatics.hpp"
#include "oqmem/hubbard.hpp"
#include "oqmem/interference.hpp"
#include "oqmem/noise.hpp"
#include "oqmem/parallel.hpp"
#include "oqmem/protocol.hpp"
#include "oqmem/random.hpp"
#include "oqmem/stats.hpp"
#include "oqmem/units.hpp"

namespace oqmem::scenario {

namespace fs = std::filesystem;
using io::Json;
using io::Node;

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 6> kKinds{{
    {Kind::ExchangeSweep, "exchange-sweep"},
    {Kind::CouplingMap, "coupling-map"},
    {Kind::Protocol, "protocol"},
    {Kind::HomFidelity, "hom-fidelity"},
    {Kind::BandProfile, "band-profile"},
    {Kind::RateEstimate, "rate-estimate"},
}};

}  // namespace

std::string_view kind_name(Kind k) {
  for (const auto& [kind, name] : kKinds)
    if (kind == k) return name;
  return "unknown";
}

std::optional<Kind> parse_kind(std::string_view name) {
  for (const auto& [kind, n] : kKinds)
    if (n == name) return kind;
  return std::nullopt;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

RateEstimate estimate_rate_from_success(double p_success, double cycle_time,
                                        double detector_dead_time) {
  if (!(p_success >= 0 && p_success <= 1))
    throw InvalidParameterError("success probability must lie in [0, 1]");
  if (!(cycle_time > 0) || !std::isfinite(cycle_time))
    throw InvalidParameterError("cycle time must be positive");
  if (!(detector_dead_time >= 0) || !std::isfinite(detector_dead_time))
    throw InvalidParameterError("detector dead time must be non-negative");
  RateEstimate r;
  r.effective_cycle = std::max(cycle_time, detector_dead_time);
  r.attempts_per_second = 1e12 / r.effective_cycle;
  r.success_probability = p_success;
  r.successes_per_second = p_success * r.attempts_per_second;
  return r;
}

RateEstimate estimate_rate(double p_herald, double collection_efficiency, double cycle_time,
                           double detector_dead_time) {
  if (!(p_herald >= 0 && p_herald <= 1))
    throw InvalidParameterError("herald probability must lie in [0, 1]");
  if (!(collection_efficiency >= 0 && collection_efficiency <= 1))
    throw InvalidParameterError("collection efficiency must lie in [0, 1]");
  return estimate_rate_from_success(0.5 * p_herald * collection_efficiency, cycle_time,
                                    detector_dead_time);
}

// ---------------------------------------------------------------------------
// Plans

namespace {

template <typename Fn>
auto guard(const Node& n, Fn&& fn) {
  try {
    return fn();
  } catch (const io::SchemaError&) {
    throw;
  } catch (const DivergenceError&) {
    throw;
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

struct ExchangeSweepPlan {
  hubbard::Molecule molecule = hubbard::Molecule::O;
  std::vector<double> epsilon;
  std::vector<double> t;
  std::optional<hubbard::HubbardSystem> system;
};

struct CouplingMapPlan {
  electro::DeviceGeometry geometry;
  std::vector<double> xs, ys;
  double level = 100;
  std::vector<double> z_dd_sweep;
  double pitch = 100, dot_separation = 10;
};

struct ProtocolPlan {
  protocol::ProtocolParams params;
  noise::NoiseModel noise;
  std::uint64_t shots = 1000;
};

struct HomPlan {
  double offset1 = 0, decay1 = 0.01, arrival1 = 0;
  std::vector<double> offset2, decay2;
  double arrival2 = 0;
  std::vector<double> jitter;
  double efficiency = 1, time_resolution = 0;
  std::uint64_t samples = 100000;
};

struct LeverProbe {
  electro::Gate gate;
  double z_a;
  std::optional<double> z_b;  ///< set for a detuning lever arm
};

struct BandPlan {
  electro::LayerStack stack;
  electro::SolverOptions options;
  std::vector<LeverProbe> probes;
};

struct RatePlan {
  std::optional<double> p_success;
  double p_herald = 1, collection = 1;
  std::vector<double> cycle_time;
  double dead_time = 0;
};

using Plan = std::variant<ExchangeSweepPlan, CouplingMapPlan, ProtocolPlan, HomPlan, BandPlan,
                          RatePlan>;

std::vector<double> samples_or(const Node& n, std::string_view key, std::vector<double> fallback) {
  return n.has(key) ? n.samples(key) : fallback;
}

ExchangeSweepPlan plan_exchange(const Node& n) {
  n.allow_only({"molecule", "epsilon", "t", "system"});
  ExchangeSweepPlan p;
  const std::string m = n.string_or("molecule", "O");
  if (m == "E") {
    p.molecule = hubbard::Molecule::E;
  } else if (m != "O") {
    n.fail("molecule", "expected \"O\" or \"E\"");
  }
  p.epsilon = n.samples("epsilon");
  if (auto sys = n.find("system")) {
    if (n.has("t")) n.fail("t", "tunneling comes from the system when one is given");
    if (p.molecule != hubbard::Molecule::O)
      n.fail("system", "exact diagonalization columns are available for molecule O only");
    p.system = io::read_system(*sys);
    const double t = p.system->t(hubbard::Dot::T, hubbard::Dot::B) / std::sqrt(2.0);
    if (!(t > 0)) sys->fail("tunnel", "T-B tunneling must be positive");
    p.t = {t};
  } else {
    p.t = n.samples("t");
  }
  for (double t : p.t)
    if (!(t > 0)) n.fail("t", "tunneling must be positive");
  return p;
}

CouplingMapPlan plan_coupling(const Node& n) {
  n.allow_only({"geometry", "x", "y", "contour_level", "z_dd_sweep"});
  CouplingMapPlan p;
  const Node g = n.at("geometry");
  p.geometry = io::read_geometry(g);
  p.pitch = g.number_or("pitch", 100);
  p.dot_separation = g.number_or("dot_separation", 10);
  p.xs = samples_or(n, "x", {});
  p.ys = samples_or(n, "y", {});
  if (p.xs.empty()) {
    for (int i = 0; i <= 200; ++i) p.xs.push_back(-150 + 2.0 * i);
  }
  if (p.ys.empty()) {
    for (int i = 0; i <= 200; ++i) p.ys.push_back(-200 + 2.0 * i);
  }
  if (!std::is_sorted(p.xs.begin(), p.xs.end()) || !std::is_sorted(p.ys.begin(), p.ys.end()))
    n.fail("grid coordinates must be ascending");
  p.level = n.number_or("contour_level", 100);
  if (!(p.level > 0)) n.fail("contour_level", "must be positive");
  if (n.has("z_dd_sweep")) {
    if (!g.has("z_dd")) n.fail("z_dd_sweep", "requires a stacked geometry given by z_dd");
    p.z_dd_sweep = n.samples("z_dd_sweep");
    for (double z : p.z_dd_sweep)
      guard(n.at("z_dd_sweep"),
            [&] { electro::DeviceGeometry::stacked(z, p.pitch, p.dot_separation).validate(); });
  }
  return p;
}

hubbard::EffectiveCouplings read_couplings(const Node& n) {
  n.allow_only({"epsilon_O", "t_O", "epsilon_E", "t_E", "J_23", "delta_dd", "coulomb_shift_O",
                "coulomb_shift_E"});
  return guard(n, [&] {
    const double tO = n.number("t_O"), tE = n.number("t_E");
    if (!(tO > 0)) n.fail("t_O", "must be positive");
    if (!(tE > 0)) n.fail("t_E", "must be positive");
    return hubbard::couplings_from_parameters(
        n.number("epsilon_O"), tO, n.number("epsilon_E"), tE, n.number("J_23"),
        n.number("delta_dd"), n.number_or("coulomb_shift_O", 0), n.number_or("coulomb_shift_E", 0));
  });
}

ProtocolPlan plan_protocol(const Node& n) {
  n.allow_only({"couplings", "system", "J_O_emit", "shots", "detection_efficiency",
                "cycle_time_ps", "init_fidelity", "ramp_phase_E", "delay_after_emission_ps",
                "delay_after_stark_ps", "max_attempts", "t_CZ_ps", "re_duration_ps", "noise"});
  ProtocolPlan p;
  hubbard::EffectiveCouplings c;
  if (n.has("couplings") == n.has("system"))
    n.fail("exactly one of \"couplings\" or \"system\" is required");
  if (auto cn = n.find("couplings")) {
    c = read_couplings(*cn);
  } else {
    const Node sn = n.at("system");
    const auto sys = io::read_system(sn);
    c = guard(sn, [&] { return hubbard::effective_couplings(sys); });
  }
  const double emit = n.number_or("J_O_emit", c.J_O - c.dJ_O);
  p.params = guard(n, [&] { return protocol::ProtocolParams::calibrated(c, emit); });
  p.params.t_CZ = n.number_or("t_CZ_ps", p.params.t_CZ);
  p.params.re_duration = n.number_or("re_duration_ps", p.params.re_duration);
  p.params.detection_efficiency = n.number_or("detection_efficiency", 1);
  p.params.cycle_time = n.number_or("cycle_time_ps", p.params.cycle_time);
  p.params.init_fidelity = n.number_or("init_fidelity", 1);
  p.params.ramp_phase_E = n.number_or("ramp_phase_E", 0);
  p.params.delay_after_emission = n.number_or("delay_after_emission_ps", 0);
  p.params.delay_after_stark = n.number_or("delay_after_stark_ps", 0);
  p.params.max_attempts = n.count_or("max_attempts", p.params.max_attempts);
  guard(n, [&] { p.params.validate(); });
  if (auto nn = n.find("noise")) p.noise = io::read_noise(*nn);
  p.shots = n.count_or("shots", 1000);
  if (p.shots == 0 || p.shots > 100'000'000) n.fail("shots", "expected between 1 and 10^8");
  return p;
}

HomPlan plan_hom(const Node& n) {
  n.allow_only({"port1", "port2", "detector", "samples"});
  HomPlan p;
  const Node a = n.at("port1");
  a.allow_only({"offset", "decay", "arrival"});
  p.offset1 = a.number_or("offset", 0);
  p.decay1 = a.number("decay");
  p.arrival1 = a.number_or("arrival", 0);
  const Node b = n.at("port2");
  b.allow_only({"offset", "decay", "arrival"});
  p.offset2 = samples_or(b, "offset", {0.0});
  p.decay2 = samples_or(b, "decay", {p.decay1});
  p.arrival2 = b.number_or("arrival", 0);
  p.jitter = {0.0};
  if (auto d = n.find("detector")) {
    d->allow_only({"jitter", "efficiency", "time_resolution"});
    p.jitter = samples_or(*d, "jitter", {0.0});
    p.efficiency = d->number_or("efficiency", 1);
    p.time_resolution = d->number_or("time_resolution", 0);
    for (double j : p.jitter)
      guard(*d, [&] { hom::DetectorModel{j, j, p.efficiency, p.time_resolution}.validate(); });
  }
  p.samples = n.count_or("samples", 100000);
  if (p.samples < 1000) n.fail("samples", "at least 1000 samples are required");
  for (double o : p.offset2)
    for (double k : p.decay2)
      guard(n, [&] {
        hom::PacketSet::two_sources(p.offset1, p.decay1, p.arrival1, o, k, p.arrival2).validate();
      });
  return p;
}

BandPlan plan_band(const Node& n) {
  n.allow_only({"stack", "solver", "lever_arms"});
  BandPlan p;
  if (auto s = n.find("stack")) {
    p.stack = io::read_stack(*s);
  } else {
    p.stack = electro::LayerStack::default_accumulation();
  }
  if (auto o = n.find("solver")) p.options = io::read_solver_options(*o);
  if (auto l = n.find("lever_arms")) {
    for (const Node& e : l->elements()) {
      e.allow_only({"gate", "z", "z_a", "z_b"});
      const std::string name = e.string("gate");
      const auto gate = electro::parse_gate(name);
      if (!gate) e.fail("gate", "expected \"top\" or \"back\"");
      LeverProbe probe{*gate, 0, std::nullopt};
      if (e.has("z")) {
        if (e.has("z_a") || e.has("z_b")) e.fail("give either z or z_a/z_b");
        probe.z_a = e.number("z");
      } else {
        probe.z_a = e.number("z_a");
        probe.z_b = e.number("z_b");
      }
      const double depth = p.stack.total_thickness();
      for (double z : {probe.z_a, probe.z_b.value_or(probe.z_a)})
        if (!(z >= 0 && z <= depth)) e.fail("probe depth lies outside the stack");
      p.probes.push_back(probe);
    }
  }
  return p;
}

RatePlan plan_rate(const Node& n) {
  n.allow_only({"p_success", "p_herald", "collection_efficiency", "cycle_time_ps",
                "dead_time_ps"});
  RatePlan p;
  if (n.has("p_success")) {
    if (n.has("p_herald") || n.has("collection_efficiency"))
      n.fail("p_success", "cannot be combined with p_herald or collection_efficiency");
    p.p_success = n.number("p_success");
  }
  p.p_herald = n.number_or("p_herald", 1);
  p.collection = n.number_or("collection_efficiency", 1);
  p.cycle_time = n.samples("cycle_time_ps");
  p.dead_time = n.number_or("dead_time_ps", 0);
  for (double c : p.cycle_time)
    guard(n, [&] {
      return p.p_success ? estimate_rate_from_success(*p.p_success, c, p.dead_time)
                         : estimate_rate(p.p_herald, p.collection, c, p.dead_time);
    });
  return p;
}

Plan make_plan(const Scenario& s) {
  const Node n(s.parameters, "parameters");
  n.require_object();
  switch (s.kind) {
    case Kind::ExchangeSweep: return plan_exchange(n);
    case Kind::CouplingMap: return plan_coupling(n);
    case Kind::Protocol: return plan_protocol(n);
    case Kind::HomFidelity: return plan_hom(n);
    case Kind::BandProfile: return plan_band(n);
    case Kind::RateEstimate: return plan_rate(n);
  }
  n.fail("unsupported kind");
}

// ---------------------------------------------------------------------------
// Output

class Csv {
 public:
  Csv(const std::string& manifest, std::initializer_list<std::string_view> columns) {
    text_ = "# manifest=" + manifest + "\n";
    bool first = true;
    for (auto c : columns) {
      if (!first) text_ += ',';
      text_ += c;
      first = false;
    }
    text_ += '\n';
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) text_ += ',';
      text_ += format_number(v);
      first = false;
    }
    text_ += '\n';
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

class Writer {
 public:
  Writer(const Scenario& s, const RunOptions& o, std::uint64_t seed)
      : scenario_(s), options_(o), seed_(seed), start_(std::chrono::steady_clock::now()) {
    manifest_name_ = s.output + ".manifest.json";
    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    if (ec) throw io::IoError("cannot create '" + o.out_dir.string() + "': " + ec.message());
  }

  const std::string& manifest_name() const { return manifest_name_; }

  void write(const std::string& suffix, const std::string& contents) {
    const fs::path path = options_.out_dir / (scenario_.output + suffix);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io::IoError("cannot write '" + path.string() + "'");
    out << contents;
    out.close();
    if (!out) throw io::IoError("write failed for '" + path.string() + "'");
    files_.push_back({path, fnv1a(contents)});
  }

  void summary(Json body) {
    Json doc;
    doc["manifest"] = manifest_name_;
    doc["kind"] = kind_name(scenario_.kind);
    doc["seed"] = seed_;
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = *it;
    write(".summary.json", doc.dump(2) + "\n");
  }

  RunResult finish(std::string_view status) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json m;
    m["tool"] = "oqmem";
    m["version"] = kVersion;
    m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                         std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    m["kind"] = kind_name(scenario_.kind);
    m["seed"] = seed_;
    m["status"] = status;
    m["input"] = {{"source", fs::path(scenario_.source_name).filename().string()},
                  {"fnv1a", hex64(fnv1a(scenario_.source_text))}};
    Json outs = Json::array();
    RunResult r;
    for (const auto& [path, hash] : files_) {
      outs.push_back({{"file", path.filename().string()}, {"fnv1a", hex64(hash)}});
      r.outputs.push_back(path);
    }
    m["outputs"] = outs;
    m["threads"] = resolve_threads(options_.threads);
    m["wall_time_s"] = wall;
    r.manifest = options_.out_dir / manifest_name_;
    std::ofstream out(r.manifest, std::ios::binary | std::ios::trunc);
    if (!out) throw io::IoError("cannot write '" + r.manifest.string() + "'");
    out << m.dump(2) << "\n";
    if (!out) throw io::IoError("write failed for '" + r.manifest.string() + "'");
    return r;
  }

 private:
  const Scenario& scenario_;
  const RunOptions& options_;
  std::uint64_t seed_;
  std::chrono::steady_clock::time_point start_;
  std::string manifest_name_;
  std::vector<std::pair<fs::path, std::uint64_t>> files_;
};

void execute(const ExchangeSweepPlan& p, Writer& w, std::uint64_t) {
  const bool ed = p.system.has_value();
  Csv csv = ed ? Csv(w.manifest_name(), {"epsilon_ueV", "t_ueV", "J_ueV", "theta_rad",
                                         "dJ_depsilon", "J_ed_ueV"})
               : Csv(w.manifest_name(),
                     {"epsilon_ueV", "t_ueV", "J_ueV", "theta_rad", "dJ_depsilon"});
  double jmin = INFINITY, jmax = -INFINITY;
  for (double t : p.t)
    for (double e : p.epsilon) {
      const double J = hubbard::exchange_energy(e, t);
      jmin = std::min(jmin, J);
      jmax = std::max(jmax, J);
      const double th = hubbard::mixing_angle(e, t), slope = hubbard::exchange_slope(e, t);
      if (ed) {
        hubbard::HubbardSystem s = *p.system;
        s.epsilon_O = e;
        const double gap = hubbard::exact_diagonalize(s, hubbard::Molecule::O).singlet_triplet_gap();
        csv.row({e, t, J, th, slope, gap});
      } else {
        csv.row({e, t, J, th, slope});
      }
    }
  w.write(".csv", csv.text());
  w.summary({{"points", p.t.size() * p.epsilon.size()}, {"J_min_ueV", jmin}, {"J_max_ueV", jmax}});
}

void execute(const CouplingMapPlan& p, Writer& w, std::uint64_t, unsigned threads) {
  const electro::Grid grid = electro::delta_dd_map(p.geometry, p.xs, p.ys, threads);
  Csv csv(w.manifest_name(), {"x_nm", "y_nm", "delta_dd_ueV"});
  for (std::size_t iy = 0; iy < p.ys.size(); ++iy)
    for (std::size_t ix = 0; ix < p.xs.size(); ++ix)
      csv.row({p.xs[ix], p.ys[iy], grid.values(static_cast<Eigen::Index>(iy),
                                               static_cast<Eigen::Index>(ix))});
  w.write(".csv", csv.text());
  Json body;
  body["delta_dd_aligned_ueV"] = electro::delta_dd(p.geometry);
  body["contour_level_ueV"] = p.level;
  body["contour_diameter_nm"] = 2 * electro::contour_radius(grid, p.level);
  if (!p.z_dd_sweep.empty()) {
    Csv z(w.manifest_name(), {"z_dd_nm", "delta_dd_ueV"});
    for (double zdd : p.z_dd_sweep) {
      electro::DeviceGeometry g =
          electro::DeviceGeometry::stacked(zdd, p.pitch, p.dot_separation);
      g.gate_plane_z = p.geometry.gate_plane_z;
      g.dielectric = p.geometry.dielectric;
      z.row({zdd, electro::delta_dd(g)});
    }
    w.write(".zdd.csv", z.text());
  }
  w.summary(body);
}

void execute(const ProtocolPlan& p, Writer& w, std::uint64_t seed, unsigned threads) {
  constexpr std::size_t kChunks = 64;
  const std::size_t n = p.shots;
  const std::size_t per = (n + kChunks - 1) / kChunks;
  struct Chunk {
    std::vector<protocol::ProtocolRecord> records;
  };
  const auto chunks = map_chunks<Chunk>(kChunks, threads, [&](std::size_t c) {
    Chunk out;
    for (std::size_t i = c * per; i < std::min(n, (c + 1) * per); ++i)
      out.records.push_back(protocol::run_protocol(p.params, p.noise, derive_seed(seed, i)));
    return out;
  });
  std::string text;
  RunningStats fid, attempts;
  std::uint64_t total_attempts = 0, successes = 0;
  std::size_t shot = 0;
  for (const auto& c : chunks)
    for (const auto& r : c.records) {
      Json line;
      line["manifest"] = w.manifest_name();
      line["shot"] = shot++;
      const Json rec = Json::parse(r.to_json());
      for (auto it = rec.begin(); it != rec.end(); ++it) line[it.key()] = *it;
      text += line.dump() + "\n";
      total_attempts += r.attempts;
      attempts.add(static_cast<double>(r.attempts));
      if (r.success) {
        ++successes;
        fid.add(r.fidelity);
      }
    }
  w.write(".jsonl", text);
  const Estimate f = fid.estimate(), a = attempts.estimate();
  Json body;
  body["shots"] = n;
  body["successes"] = successes;
  body["total_attempts"] = total_attempts;
  body["success_per_attempt"] =
      static_cast<double>(successes) / static_cast<double>(total_attempts);
  body["mean_attempts"] = a.mean;
  body["mean_attempts_std_error"] = a.std_error;
  body["mean_fidelity"] = successes ? Json(f.mean) : Json(nullptr);
  body["fidelity_std_error"] = successes ? Json(f.std_error) : Json(nullptr);
  body["t_CZ_ps"] = p.params.t_CZ;
  body["J_OE_ueV"] = p.params.couplings.J_OE;
  w.summary(body);
}

void execute(const HomPlan& p, Writer& w, std::uint64_t seed, unsigned threads) {
  Csv csv(w.manifest_name(), {"offset2", "decay2", "jitter_ps", "mean_G", "fidelity_closed_form",
                              "fidelity_mc", "fidelity_mc_std_error"});
  std::uint64_t row = 0;
  for (double o : p.offset2)
    for (double k : p.decay2)
      for (double j : p.jitter) {
        const auto packets =
            hom::PacketSet::two_sources(p.offset1, p.decay1, p.arrival1, o, k, p.arrival2);
        const hom::DetectorModel det{j, j, p.efficiency, p.time_resolution};
        const Estimate mc =
            hom::mean_bell_fidelity(packets, det, p.samples, derive_seed(seed, row++), threads);
        csv.row({o, k, j, hom::mean_g_factor(packets), hom::closed_form_fidelity(packets, det),
                 mc.mean, mc.std_error});
      }
  w.write(".csv", csv.text());
  w.summary({{"rows", row}, {"samples_per_row", p.samples}});
}

void execute(const BandPlan& p, Writer& w, std::uint64_t) {
  electro::BandProfile prof;
  try {
    prof = electro::solve_band_profile(p.stack, p.options);
  } catch (const DivergenceError& e) {
    Csv dump(w.manifest_name(), {"iteration", "residual_eV"});
    for (std::size_t i = 0; i < e.residuals().size(); ++i)
      dump.row({static_cast<double>(i + 1), e.residuals()[i]});
    w.write(".residuals.csv", dump.text());
    throw;
  }
  Csv csv(w.manifest_name(), {"z_nm", "conduction_band_eV", "density_cm3"});
  for (std::size_t i = 0; i < prof.z.size(); ++i)
    csv.row({prof.z[i], prof.conduction_band[i], prof.density[i] * units::kPerNm3ToPerCm3});
  w.write(".csv", csv.text());
  Csv states(w.manifest_name(), {"index", "energy_meV", "qw_fraction"});
  for (std::size_t i = 0; i < prof.states.size(); ++i)
    states.row({static_cast<double>(i), prof.states[i].energy * 1e3, prof.states[i].qw_fraction});
  w.write(".states.csv", states.text());
  Csv res(w.manifest_name(), {"iteration", "residual_eV"});
  for (std::size_t i = 0; i < prof.residuals.size(); ++i)
    res.row({static_cast<double>(i + 1), prof.residuals[i]});
  w.write(".residuals.csv", res.text());

  Json body;
  body["iterations"] = prof.iterations;
  body["final_residual_eV"] = prof.residuals.empty() ? 0.0 : prof.residuals.back();
  body["gauss_error"] = prof.gauss_error;
  body["sheet_density_cm2"] = prof.sheet_density * units::kPerNm2ToPerCm2;
  Json levers = Json::array();
  for (const auto& probe : p.probes) {
    Json l;
    l["gate"] = probe.gate == electro::Gate::Top ? "top" : "back";
    if (probe.z_b) {
      l["z_a_nm"] = probe.z_a;
      l["z_b_nm"] = *probe.z_b;
      l["lever_arm_meV_per_V"] =
          electro::detuning_lever_arm(p.stack, probe.gate, probe.z_a, *probe.z_b, p.options);
    } else {
      l["z_nm"] = probe.z_a;
      l["lever_arm_meV_per_V"] = electro::lever_arm(p.stack, probe.gate, probe.z_a, p.options);
    }
    levers.push_back(l);
  }
  body["lever_arms"] = levers;
  w.summary(body);
}

void execute(const RatePlan& p, Writer& w, std::uint64_t) {
  Csv csv(w.manifest_name(), {"cycle_time_ps", "effective_cycle_ps", "success_probability",
                              "attempts_per_s", "successes_per_s"});
  RateEstimate first;
  for (std::size_t i = 0; i < p.cycle_time.size(); ++i) {
    const RateEstimate r =
        p.p_success ? estimate_rate_from_success(*p.p_success, p.cycle_time[i], p.dead_time)
                    : estimate_rate(p.p_herald, p.collection, p.cycle_time[i], p.dead_time);
    if (i == 0) first = r;
    csv.row({p.cycle_time[i], r.effective_cycle, r.success_probability, r.attempts_per_second,
             r.successes_per_second});
  }
  w.write(".csv", csv.text());
  w.summary({{"effective_cycle_ps", first.effective_cycle},
             {"success_probability", first.success_probability},
             {"attempts_per_s", first.attempts_per_second},
             {"successes_per_s", first.successes_per_second}});
}

}  // namespace

// ---------------------------------------------------------------------------

Scenario parse(const std::string& text, const std::string& source_name) {
  const Json doc = io::parse_document(text, source_name);
  Scenario s;
  s.source_text = text;
  s.source_name = source_name;
  try {
    const Node root(doc, "");
    root.allow_only({"kind", "seed", "output", "parameters", "description"});
    const std::string kind = root.string("kind");
    const auto k = parse_kind(kind);
    if (!k) root.fail("kind", "unknown kind '" + kind + "'");
    s.kind = *k;
    s.seed = root.count_or("seed", 0);
    s.output = root.string_or("output", std::string(kind_name(s.kind)));
    if (s.output.empty() || s.output.find_first_of("/\\") != std::string::npos ||
        s.output.front() == '.')
      root.fail("output", "expected a plain file base name");
    s.parameters = root.has("parameters") ? root.at("parameters").value() : Json::object();
    validate(s);
  } catch (const io::SchemaError& e) {
    std::string key = e.path();
    if (const auto dot = key.find_last_of('.'); dot != std::string::npos) key = key.substr(dot + 1);
    if (const auto br = key.find('['); br != std::string::npos) key = key.substr(0, br);
    const int line = io::locate_key(text, key);
    const std::string where = line > 0 ? source_name + ":" + std::to_string(line) : source_name;
    throw io::SchemaError(e.path(), e.message() + " (" + where + ")");
  }
  return s;
}

Scenario load(const std::string& path) { return parse(io::read_file(path), path); }

void validate(const Scenario& s) { (void)make_plan(s); }

RunResult run(const Scenario& s, const RunOptions& options) {
  const Plan plan = make_plan(s);
  const std::uint64_t seed = options.seed.value_or(s.seed);
  Writer w(s, options, seed);
  try {
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, CouplingMapPlan> || std::is_same_v<P, ProtocolPlan> ||
                        std::is_same_v<P, HomPlan>) {
            execute(p, w, seed, options.threads);
          } else {
            execute(p, w, seed);
          }
        },
        plan);
  } catch (const DivergenceError&) {
    w.finish("diverged");
    throw;
  }
  return w.finish("ok");
}

std::string schema_text(std::optional<Kind> kind) {
  static const std::array<std::pair<Kind, const char*>, 6> kText{{
      {Kind::ExchangeSweep, R"(exchange-sweep
  molecule        "O" | "E"                       default "O"
  epsilon         samples, μeV                    required
  t               samples, μeV (> 0)              required unless system is given
  system          hubbard system; adds the J_ed_ueV column (molecule O)
  output .csv     epsilon_ueV,t_ueV,J_ueV,theta_rad,dJ_depsilon[,J_ed_ueV]
)"},
      {Kind::CouplingMap, R"(coupling-map
  geometry        {z_dd, pitch=100, dot_separation=10} or {saqdm_B, saqdm_T, gqd[3]},
                  plus gate_plane_z (optional), dielectric=12.9; nm
  x, y            samples, nm                     default -150..250 and -200..200, step 2
  contour_level   μeV                             default 100
  z_dd_sweep      samples, nm; writes .zdd.csv (z_dd_nm,delta_dd_ueV)
  output .csv     x_nm,y_nm,delta_dd_ueV
)"},
      {Kind::Protocol, R"(protocol
  couplings       {epsilon_O, t_O, epsilon_E, t_E, J_23, delta_dd,
                   coulomb_shift_O=0, coulomb_shift_E=0}; μeV
  system          hubbard system (instead of couplings)
  J_O_emit        μeV                             default: bare J_O
  shots           count                           default 1000
  detection_efficiency=1, cycle_time_ps=1e4, init_fidelity=1, ramp_phase_E=0,
  delay_after_emission_ps=0, delay_after_stark_ps=0, max_attempts=1e6,
  t_CZ_ps, re_duration_ps (calibrated when omitted)
  noise           {hyperfine_sigma_O, hyperfine_sigma_E, charge_sigma_O,
                   charge_sigma_E, leakage_rate}; all default 0
  output .jsonl   one record per shot
)"},
      {Kind::HomFidelity, R"(hom-fidelity
  port1           {offset=0 rad/ps, decay 1/ps (required), arrival=0 ps}
  port2           {offset samples, decay samples (default port1 decay), arrival=0}
  detector        {jitter samples ps (both detectors), efficiency=1, time_resolution=0}
  samples         count (>= 1000)                 default 100000
  output .csv     offset2,decay2,jitter_ps,mean_G,fidelity_closed_form,
                  fidelity_mc,fidelity_mc_std_error
)"},
      {Kind::BandProfile, R"(band-profile
  stack           {layers[{label, material, thickness, free_charge=false,
                   donor_density_cm3=0, band_offset, effective_mass, dielectric}],
                   top_bias=1, back_bias=1, schottky_barrier=0.8}; default stack when omitted
  solver          {grid_spacing=0.5, mixing=0.1, max_iterations=500, tolerance=1e-6,
                   window_margin=15, n_states=3}
  lever_arms      [{gate "top"|"back", z} or {gate, z_a, z_b}]; depths nm
  output .csv     z_nm,conduction_band_eV,density_cm3
         .states.csv, .residuals.csv
)"},
      {Kind::RateEstimate, R"(rate-estimate
  p_success       per-attempt success probability (replaces the next two)
  p_herald=1, collection_efficiency=1
  cycle_time_ps   samples                         required
  dead_time_ps    default 0
  output .csv     cycle_time_ps,effective_cycle_ps,success_probability,
                  attempts_per_s,successes_per_s
)"},
  }};
  std::string out;
  if (!kind) {
    out += "document: {kind, seed=0, output=<kind>, parameters, description}\n";
    out += "samples: a number, an array, or {start, stop, count}\n\n";
  }
  for (const auto& [k, text] : kText)
    if (!kind || *kind == k) {
      out += text;
      if (!kind) out += '\n';
    }
  return out;
}

}  // namespace oqmem::scenario
