#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "oqmem/hubbard.hpp"
#include "oqmem/linalg.hpp"
#include "oqmem/random.hpp"

// State-vector model of the heralded transfer of spin-photon entanglement
// onto the gated memory qubit.
//
// Register basis |s⟩_O ⊗ |p⟩_γ ⊗ |q⟩_E with s ∈ {S, T0}, p ∈ {∅, H, V},
// q ∈ {0, 1, Q}; flat index (s·3 + p)·3 + q. Everything runs in a frame
// co-rotating at the emission-time optical exchange, so the photon and the
// optical molecule accrue no phase while idle at that configuration.

namespace oqmem::noise {
struct NoiseModel;
}

namespace oqmem::protocol {

enum class Spin : int { S = 0, T0 = 1 };
enum class Photon : int { Vacuum = 0, H = 1, V = 2 };
enum class Memory : int { Zero = 0, One = 1, Q = 2 };

inline constexpr int kRegisterDim = 18;
inline constexpr int kHeraldedDim = 9;

constexpr int register_index(Spin s, Photon p, Memory q) {
  return (static_cast<int>(s) * 3 + static_cast<int>(p)) * 3 + static_cast<int>(q);
}
/// Photon ⊗ memory index used after the optical molecule is erased.
constexpr int heralded_index(Photon p, Memory q) {
  return static_cast<int>(p) * 3 + static_cast<int>(q);
}

/// Rotation ξ = tan⁻¹√2 produced by the calibrated memory pulse.
inline const double kXi = std::atan(std::sqrt(2.0));

/// Everything needed to undo the local memory rotation after heralding.
struct PhaseLedger {
  bool emitted = false;
  bool re_applied = false;
  bool cz_applied = false;
  bool stark_applied = false;
  Matrix2c<double> re = Matrix2c<double>::Identity();  ///< product of applied memory pulses
  double exchange_phase_O = 0;  ///< ∫ δJ_O dt/ħ between emission and Stark rotation
  double exchange_phase_E = 0;  ///< ∫ J_E dt/ħ after the memory pulse, plus ramp phases

  bool complete() const { return emitted && re_applied && cz_applied && stark_applied; }
  /// ξ read back from the recorded pulse (tan⁻¹√2 for the calibrated one).
  double xi() const;
  double eta1() const;
  double eta2() const;
  /// R′_E = e^{iη2 Z/2} R_E e^{iη1 Z/2}.
  Matrix2c<double> residual_rotation() const;
};

struct RegisterState {
  Eigen::Matrix<std::complex<double>, kRegisterDim, 1> amplitudes =
      Eigen::Matrix<std::complex<double>, kRegisterDim, 1>::Zero();
  double time = 0;  ///< ps
  PhaseLedger ledger;

  std::complex<double>& operator()(Spin s, Photon p, Memory q) {
    return amplitudes[register_index(s, p, q)];
  }
  std::complex<double> operator()(Spin s, Photon p, Memory q) const {
    return amplitudes[register_index(s, p, q)];
  }
  double norm() const { return amplitudes.norm(); }
  /// Population in the leaked |Q⟩ memory level.
  double leakage_population() const;
};

/// Photon ⊗ memory state left after erasure of the optical molecule.
struct HeraldedState {
  Eigen::Matrix<std::complex<double>, kHeraldedDim, 1> amplitudes =
      Eigen::Matrix<std::complex<double>, kHeraldedDim, 1>::Zero();
  double time = 0;
  PhaseLedger ledger;

  std::complex<double> operator()(Photon p, Memory q) const {
    return amplitudes[heralded_index(p, q)];
  }
};

/// Diagonal CZ-window Hamiltonian −½[δJ_O Z_O + J_E Z_E + J_OE Z_O Z_E] in the
/// co-rotating frame. |Q⟩ carries no Z_E weight.
struct CZTerms {
  double dJ_O = 0;
  double J_E = 0;
  double J_OE = 0;
};

struct ProtocolParams {
  double J_O_emit = 0;  ///< μeV, optical exchange at photon creation
  hubbard::EffectiveCouplings couplings;  ///< CZ configuration
  double t_CZ = 0;                        ///< ps
  double re_duration = 0;                 ///< ps; memory pulse at J_23
  double detection_efficiency = 1.0;
  double cycle_time = 1.0e4;     ///< ps
  double init_fidelity = 1.0;    ///< probability the optical molecule is pumped into |S⟩
  double ramp_phase_E = 0;       ///< calibrated extra memory phase from finite gate ramps
  double delay_after_emission = 0;  ///< ps
  double delay_after_stark = 0;     ///< ps
  std::uint64_t max_attempts = 1'000'000;

  /// Calibrated parameters: t_CZ = πħ/(2|J_OE|), memory pulse at ħ(π − tan⁻¹√8)/J_23.
  static ProtocolParams calibrated(const hubbard::EffectiveCouplings& c, double J_O_emit);
  CZTerms cz_terms() const;
  void validate() const;
};

double cz_time(double J_OE);
double calibrated_re_duration(double J_23);

RegisterState init_saqdm(Spin spin = Spin::S);
RegisterState emit_entangled_photon(const RegisterState& state);
RegisterState apply_re_pulse(const RegisterState& state, double tau, double J_23);
/// Evolves with `actual` while recording the phases implied by `calibrated`.
RegisterState evolve_cz(const RegisterState& state, double duration, const CZTerms& actual,
                        const CZTerms& calibrated);
RegisterState evolve_cz(const RegisterState& state, double duration, const ProtocolParams& params);
/// Free evolution outside the CZ window (no ZZ term). Phases are tracked.
RegisterState idle(const RegisterState& state, double duration, double dJ_O, double J_E);
RegisterState apply_stark_rotation(const RegisterState& state);
/// Projective {0,1} measurement of the memory followed by transfer into |Q⟩.
RegisterState leak_memory(const RegisterState& state, Rng& rng);

/// Probability of projecting onto |T0⟩_O.
double erasure_probability(const RegisterState& state);
/// Deterministic |T0⟩_O projection and renormalization.
HeraldedState project_erasure(const RegisterState& state);

struct HeraldResult {
  bool success = false;
  std::optional<HeraldedState> state;  ///< empty on failure: reset required
};
HeraldResult herald_erasure(const RegisterState& state, Rng& rng, double detection_efficiency);

HeraldedState correct_local_rotation(const HeraldedState& state);
/// |⟨Φ|ψ⟩|² with Φ = (|H,0⟩ + |V,1⟩)/√2.
double bell_fidelity(const HeraldedState& state);
/// R′_E (|H,0⟩ + |V,1⟩)/√2 for the given ledger.
HeraldedState ideal_heralded_state(const PhaseLedger& ledger);

struct ProtocolRecord {
  std::uint64_t seed = 0;
  std::uint64_t attempts = 0;
  bool success = false;
  double fidelity = 0;  ///< NaN on failure
  double elapsed = 0;   ///< simulated ps
  std::optional<HeraldedState> state;

  std::string to_json() const;
};

ProtocolRecord run_protocol(const ProtocolParams& params, std::uint64_t seed);
ProtocolRecord run_protocol(const ProtocolParams& params, const noise::NoiseModel& noise,
                            std::uint64_t seed);

}  // namespace oqmem::protocol
