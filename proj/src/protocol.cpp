#include "oqmem/protocol.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "oqmem/errors.hpp"
#include "oqmem/noise.hpp"
#include "oqmem/units.hpp"

namespace oqmem::protocol {

namespace {

using cd = std::complex<double>;
constexpr Spin kSpins[] = {Spin::S, Spin::T0};
constexpr Photon kPhotons[] = {Photon::Vacuum, Photon::H, Photon::V};
constexpr Memory kQubit[] = {Memory::Zero, Memory::One};

double z_of(Spin s) { return s == Spin::S ? 1.0 : -1.0; }
double z_of(Memory q) { return q == Memory::Zero ? 1.0 : q == Memory::One ? -1.0 : 0.0; }

/// Multiplies every (s, p) memory doublet by m.
void apply_memory(RegisterState& st, const Matrix2c<double>& m) {
  for (Spin s : kSpins)
    for (Photon p : kPhotons) {
      const cd a0 = st(s, p, Memory::Zero), a1 = st(s, p, Memory::One);
      st(s, p, Memory::Zero) = m(0, 0) * a0 + m(0, 1) * a1;
      st(s, p, Memory::One) = m(1, 0) * a0 + m(1, 1) * a1;
    }
}

void apply_memory(HeraldedState& st, const Matrix2c<double>& m) {
  for (Photon p : kPhotons) {
    cd& a0 = st.amplitudes[heralded_index(p, Memory::Zero)];
    cd& a1 = st.amplitudes[heralded_index(p, Memory::One)];
    const cd b0 = m(0, 0) * a0 + m(0, 1) * a1;
    const cd b1 = m(1, 0) * a0 + m(1, 1) * a1;
    a0 = b0;
    a1 = b1;
  }
}

void track(PhaseLedger& ledger, double duration, const CZTerms& calibrated) {
  if (ledger.emitted && !ledger.stark_applied)
    ledger.exchange_phase_O += calibrated.dJ_O * duration / units::kHbar;
  if (ledger.re_applied) ledger.exchange_phase_E += calibrated.J_E * duration / units::kHbar;
}

RegisterState diagonal_evolution(const RegisterState& state, double duration,
                                 const CZTerms& actual, const CZTerms& calibrated) {
  if (!(duration >= 0) || !std::isfinite(duration))
    throw InvalidParameterError("evolution time must be finite and non-negative");
  RegisterState out = state;
  const double k = duration / (2 * units::kHbar);
  for (Spin s : kSpins)
    for (Photon p : kPhotons)
      for (Memory q : {Memory::Zero, Memory::One, Memory::Q}) {
        const double zs = z_of(s), zq = z_of(q);
        const double e = actual.dJ_O * zs + actual.J_E * zq + actual.J_OE * zs * zq;
        out(s, p, q) *= std::polar(1.0, k * e);
      }
  out.time += duration;
  track(out.ledger, duration, calibrated);
  return out;
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw InvalidParameterError(std::string(what) + " must be finite");
}

}  // namespace

double PhaseLedger::xi() const {
  const cd alpha = re(0, 0), beta = re(1, 0);
  if (std::abs(beta) < 1e-12)
    throw CalibrationError("memory pulse leaves |0> unrotated; xi undefined");
  return std::arg(-alpha / beta);
}

double PhaseLedger::eta1() const { return units::kPi / 2 - xi() + exchange_phase_O; }
double PhaseLedger::eta2() const { return units::kPi / 2 + exchange_phase_E; }

Matrix2c<double> PhaseLedger::residual_rotation() const {
  return z_phase(eta2()) * re * z_phase(eta1());
}

double RegisterState::leakage_population() const {
  double p = 0;
  for (Spin s : kSpins)
    for (Photon ph : kPhotons) p += std::norm((*this)(s, ph, Memory::Q));
  return p;
}

double cz_time(double J_OE) {
  if (!(J_OE != 0) || !std::isfinite(J_OE))
    throw InvalidParameterError("CZ time needs a finite nonzero J_OE");
  return units::kPi * units::kHbar / (2 * std::abs(J_OE));
}

double calibrated_re_duration(double J_23) {
  if (!(J_23 > 0) || !std::isfinite(J_23))
    throw InvalidParameterError("memory pulse needs a positive J_23");
  return units::kHbar * (units::kPi - std::atan(std::sqrt(8.0))) / J_23;
}

ProtocolParams ProtocolParams::calibrated(const hubbard::EffectiveCouplings& c, double J_O_emit) {
  ProtocolParams p;
  p.J_O_emit = J_O_emit;
  p.couplings = c;
  p.t_CZ = cz_time(c.J_OE);
  p.re_duration = calibrated_re_duration(c.J_23);
  return p;
}

CZTerms ProtocolParams::cz_terms() const {
  return {couplings.J_O - J_O_emit, couplings.J_E, couplings.J_OE};
}

void ProtocolParams::validate() const {
  require_finite(J_O_emit, "J_O_emit");
  require_finite(couplings.J_O, "J_O");
  require_finite(couplings.J_E, "J_E");
  require_finite(couplings.J_OE, "J_OE");
  require_finite(couplings.J_23, "J_23");
  if (!(t_CZ > 0) || !std::isfinite(t_CZ)) throw InvalidParameterError("t_CZ must be positive");
  if (!(re_duration >= 0)) throw InvalidParameterError("memory pulse duration must be >= 0");
  if (!(detection_efficiency >= 0 && detection_efficiency <= 1))
    throw InvalidParameterError("detection efficiency must lie in [0, 1]");
  if (!(cycle_time > 0)) throw InvalidParameterError("cycle time must be positive");
  if (!(init_fidelity >= 0 && init_fidelity <= 1))
    throw InvalidParameterError("initialization fidelity must lie in [0, 1]");
  require_finite(ramp_phase_E, "ramp phase");
  if (!(delay_after_emission >= 0) || !(delay_after_stark >= 0))
    throw InvalidParameterError("delays must be non-negative");
  if (max_attempts == 0) throw InvalidParameterError("max_attempts must be at least 1");
}

RegisterState init_saqdm(Spin spin) {
  RegisterState st;
  st(spin, Photon::Vacuum, Memory::Zero) = 1.0;
  return st;
}

RegisterState emit_entangled_photon(const RegisterState& state) {
  if (state.ledger.emitted) throw ProtocolOrderError("photon already emitted this cycle");
  for (Spin s : kSpins)
    for (Photon p : {Photon::H, Photon::V})
      for (Memory q : {Memory::Zero, Memory::One, Memory::Q})
        if (state(s, p, q) != cd(0)) throw ProtocolOrderError("photon slot is not empty");
  RegisterState out = state;
  const cd i(0, 1);
  const double r = 1 / std::sqrt(2.0);
  for (Memory q : {Memory::Zero, Memory::One, Memory::Q}) {
    const cd a = state(Spin::S, Photon::Vacuum, q);
    out(Spin::S, Photon::Vacuum, q) = 0;
    out(Spin::S, Photon::H, q) = r * a;
    out(Spin::T0, Photon::V, q) = i * r * a;
    // A triplet never reaches the emitting trion and stays dark.
  }
  out.ledger.emitted = true;
  return out;
}

RegisterState apply_re_pulse(const RegisterState& state, double tau, double J_23) {
  if (!(tau >= 0) || !std::isfinite(tau)) throw InvalidParameterError("pulse length must be >= 0");
  if (!(J_23 >= 0) || !std::isfinite(J_23)) throw InvalidParameterError("J_23 must be >= 0");
  const Matrix2c<double> u = axis_rotation(tau * J_23 / units::kHbar, 2 * units::kPi / 3);
  RegisterState out = state;
  apply_memory(out, u);
  out.time += tau;
  out.ledger.re = u * out.ledger.re;
  out.ledger.re_applied = true;
  return out;
}

RegisterState evolve_cz(const RegisterState& state, double duration, const CZTerms& actual,
                        const CZTerms& calibrated) {
  if (!state.ledger.emitted) throw ProtocolOrderError("CZ evolution before photon emission");
  RegisterState out = diagonal_evolution(state, duration, actual, calibrated);
  out.ledger.cz_applied = true;
  return out;
}

RegisterState evolve_cz(const RegisterState& state, double duration, const ProtocolParams& params) {
  return evolve_cz(state, duration, params.cz_terms(), params.cz_terms());
}

RegisterState idle(const RegisterState& state, double duration, double dJ_O, double J_E) {
  const CZTerms terms{dJ_O, J_E, 0.0};
  return diagonal_evolution(state, duration, terms, terms);
}

RegisterState apply_stark_rotation(const RegisterState& state) {
  const Matrix2c<double> x = x_rotation(units::kPi / 2);
  RegisterState out = state;
  for (Photon p : kPhotons)
    for (Memory q : {Memory::Zero, Memory::One, Memory::Q}) {
      const cd s = state(Spin::S, p, q), t = state(Spin::T0, p, q);
      out(Spin::S, p, q) = x(0, 0) * s + x(0, 1) * t;
      out(Spin::T0, p, q) = x(1, 0) * s + x(1, 1) * t;
    }
  out.ledger.stark_applied = true;
  return out;
}

RegisterState leak_memory(const RegisterState& state, Rng& rng) {
  double pop[3] = {0, 0, 0};
  for (Spin s : kSpins)
    for (Photon p : kPhotons)
      for (int q = 0; q < 3; ++q) pop[q] += std::norm(state(s, p, static_cast<Memory>(q)));
  const double total = pop[0] + pop[1] + pop[2];
  const double u = rng.uniform() * total;
  const int outcome = u < pop[0] ? 0 : u < pop[0] + pop[1] ? 1 : 2;
  if (pop[outcome] <= 0) return state;
  RegisterState out = state;
  const double scale = 1 / std::sqrt(pop[outcome]);
  for (Spin s : kSpins)
    for (Photon p : kPhotons) {
      const cd a = state(s, p, static_cast<Memory>(outcome)) * scale;
      for (int q = 0; q < 3; ++q) out(s, p, static_cast<Memory>(q)) = 0;
      out(s, p, Memory::Q) = a;
    }
  return out;
}

double erasure_probability(const RegisterState& state) {
  double p = 0;
  for (Photon ph : kPhotons)
    for (Memory q : {Memory::Zero, Memory::One, Memory::Q}) p += std::norm(state(Spin::T0, ph, q));
  return p;
}

HeraldedState project_erasure(const RegisterState& state) {
  if (!state.ledger.stark_applied)
    throw ProtocolOrderError("erasure heralding requires the Stark rotation first");
  const double p = erasure_probability(state);
  if (!(p > 0)) throw UndefinedEventError("no triplet component to herald");
  HeraldedState out;
  const double scale = 1 / std::sqrt(p);
  for (Photon ph : kPhotons)
    for (Memory q : {Memory::Zero, Memory::One, Memory::Q})
      out.amplitudes[heralded_index(ph, q)] = state(Spin::T0, ph, q) * scale;
  out.time = state.time;
  out.ledger = state.ledger;
  return out;
}

HeraldResult herald_erasure(const RegisterState& state, Rng& rng, double detection_efficiency) {
  if (!state.ledger.stark_applied)
    throw ProtocolOrderError("erasure heralding requires the Stark rotation first");
  if (!(detection_efficiency >= 0 && detection_efficiency <= 1))
    throw InvalidParameterError("detection efficiency must lie in [0, 1]");
  const double p = detection_efficiency * erasure_probability(state);
  if (!rng.bernoulli(p)) return {};
  return {true, project_erasure(state)};
}

HeraldedState correct_local_rotation(const HeraldedState& state) {
  if (!state.ledger.complete())
    throw CalibrationError("phase ledger incomplete; cannot invert the memory rotation");
  HeraldedState out = state;
  const auto& l = state.ledger;
  apply_memory(out, z_phase(-l.eta1()) * l.re.adjoint() * z_phase(-l.eta2()));
  return out;
}

double bell_fidelity(const HeraldedState& state) {
  const cd overlap = (state(Photon::H, Memory::Zero) + state(Photon::V, Memory::One)) /
                     std::sqrt(2.0);
  return std::norm(overlap);
}

HeraldedState ideal_heralded_state(const PhaseLedger& ledger) {
  HeraldedState out;
  out.ledger = ledger;
  const Matrix2c<double> r = ledger.residual_rotation();
  const double s = 1 / std::sqrt(2.0);
  for (int q = 0; q < 2; ++q) {
    out.amplitudes[heralded_index(Photon::H, kQubit[q])] = s * r(q, 0);
    out.amplitudes[heralded_index(Photon::V, kQubit[q])] = s * r(q, 1);
  }
  return out;
}

std::string ProtocolRecord::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["attempts"] = attempts;
  j["outcome"] = success ? "success" : "failure";
  if (success)
    j["fidelity"] = fidelity;
  else
    j["fidelity"] = nullptr;
  j["elapsed_ps"] = elapsed;
  return j.dump();
}

ProtocolRecord run_protocol(const ProtocolParams& params, std::uint64_t seed) {
  return run_protocol(params, noise::NoiseModel{}, seed);
}

ProtocolRecord run_protocol(const ProtocolParams& params, const noise::NoiseModel& model,
                            std::uint64_t seed) {
  params.validate();
  model.validate();
  Rng rng(seed);
  const CZTerms calibrated = params.cz_terms();
  ProtocolRecord rec;
  rec.seed = seed;
  rec.fidelity = std::numeric_limits<double>::quiet_NaN();
  for (std::uint64_t attempt = 1; attempt <= params.max_attempts; ++attempt) {
    const noise::NoiseRealization shot = noise::sample_quasistatic(model, rng);
    const bool dark = rng.bernoulli(1 - params.init_fidelity);
    const bool leak = rng.bernoulli(model.leakage_rate);

    RegisterState st = emit_entangled_photon(init_saqdm(dark ? Spin::T0 : Spin::S));
    if (params.delay_after_emission > 0)
      st = idle(st, params.delay_after_emission, 0.0, calibrated.J_E);
    st = apply_re_pulse(st, params.re_duration, params.couplings.J_23);
    if (leak) st = leak_memory(st, rng);
    st = evolve_cz(st, params.t_CZ, noise::perturbed_terms(params, shot), calibrated);
    if (params.ramp_phase_E != 0) {
      apply_memory(st, z_phase(params.ramp_phase_E));
      st.ledger.exchange_phase_E += params.ramp_phase_E;
    }
    st = apply_stark_rotation(st);
    if (params.delay_after_stark > 0)
      st = idle(st, params.delay_after_stark, calibrated.dJ_O, 0.0);

    HeraldResult h = herald_erasure(st, rng, params.detection_efficiency);
    if (h.success) {
      rec.attempts = attempt;
      rec.success = true;
      rec.state = correct_local_rotation(*h.state);
      rec.fidelity = bell_fidelity(*rec.state);
      rec.elapsed = static_cast<double>(attempt) * params.cycle_time;
      return rec;
    }
  }
  rec.attempts = params.max_attempts;
  rec.elapsed = static_cast<double>(params.max_attempts) * params.cycle_time;
  return rec;
}

}  // namespace oqmem::protocol
