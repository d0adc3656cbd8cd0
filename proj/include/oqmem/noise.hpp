#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "oqmem/linalg.hpp"
#include "oqmem/protocol.hpp"
#include "oqmem/random.hpp"
#include "oqmem/stats.hpp"

// Quasi-static noise: hyperfine gradients act as a static shift of each
// qubit's splitting during the CZ window, charge noise as static detuning
// offsets pushed through the exchange formulas. Energies μeV, times ps.

namespace oqmem::noise {

struct NoiseModel {
  double hyperfine_sigma_O = 0;
  double hyperfine_sigma_E = 0;
  double charge_sigma_O = 0;
  double charge_sigma_E = 0;
  double leakage_rate = 0;  ///< per attempt

  void validate() const;
};

struct NoiseRealization {
  double hyperfine_O = 0;
  double hyperfine_E = 0;
  double d_epsilon_O = 0;
  double d_epsilon_E = 0;
};

/// Always consumes four normal deviates so streams stay aligned across models.
NoiseRealization sample_quasistatic(const NoiseModel& model, Rng& rng);

/// CZ-window terms seen by the register for one realization.
protocol::CZTerms perturbed_terms(const protocol::ProtocolParams& params,
                                  const NoiseRealization& realization);

/// √2·ħ/σ.
double t2_star(double sigma);

struct Envelope {
  std::vector<double> times;
  std::vector<double> coherence;
  double t2_star = 0;
};
/// exp(−t²σ²/2ħ²) for the chosen molecule's hyperfine sigma.
Envelope dephasing_envelope(const NoiseModel& model, hubbard::Molecule molecule,
                            std::span<const double> times);

enum class PulseAxis { X_O, X_E };

struct EchoSequence {
  double duration = 0;              ///< ps
  std::vector<double> pulse_times;  ///< ps, sorted, within [0, duration]
  PulseAxis axis = PulseAxis::X_O;

  void validate() const;
};

/// Coherence of a qubit prepared in |+⟩ under a static splitting shift
/// `detuning`, after removing the noiseless pulse sequence. 1 means fully
/// refocused; without pulses it is e^{i·detuning·T/ħ}.
std::complex<double> apply_echo(const EchoSequence& sequence, double detuning);

/// Free-induction (or echoed) coherence averaged over quasi-static shots.
std::vector<Estimate> monte_carlo_coherence(const NoiseModel& model, hubbard::Molecule molecule,
                                            std::span<const double> times,
                                            std::span<const double> echo_fractions,
                                            std::size_t n_shots, std::uint64_t seed,
                                            unsigned threads = 0);

// Three-spin memory under static Zeeman gradients. Exchange π pulses swap
// neighbouring spins; 6k evenly spaced pulses alternating (1,2) and (2,3)
// visit every permutation of the dots equally often.
using Matrix8c = Eigen::Matrix<std::complex<double>, 8, 8>;

struct GradientSequenceResult {
  Matrix8c unitary;
  Matrix2c<double> logical;  ///< block on the m = +1/2 qubit subspace
  double logical_angle = 0;  ///< rotation angle of the logical block
  double subspace_leakage = 0;
};

/// Applies exp(−i·exchange_angle·S1·S2), then free evolution for `duration`
/// under H = Σ b_i S_z^i interleaved with n_pulses swaps (0 or a multiple of 6).
GradientSequenceResult run_gradient_sequence(const Eigen::Vector3d& gradients, double duration,
                                             double exchange_angle, int n_pulses);

struct NoisyFidelity {
  Estimate fidelity;               ///< conditioned on heralded success
  double success_per_attempt = 0;  ///< shots / total attempts
  std::size_t failures = 0;
};

NoisyFidelity noisy_protocol_fidelity(const protocol::ProtocolParams& params,
                                      const NoiseModel& model, std::size_t n_shots,
                                      std::uint64_t seed, unsigned threads = 0);

}  // namespace oqmem::noise
