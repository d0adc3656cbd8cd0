#pragma once

#include <complex>
#include <cstdint>

#include "oqmem/stats.hpp"

// Two-photon interference between the memory-entangled photon (port 1) and a
// network photon (port 2), heralded by H at output 1 and V at output 2.
// Times ps, rates 1/ps, carrier offsets rad/ps.

namespace oqmem::hom {

enum class Polarization { H, V };

struct Wavepacket {
  Polarization polarization = Polarization::H;
  int port = 1;
  double carrier_offset = 0;  ///< δ
  double decay = 0.01;        ///< κ
  double arrival = 0;         ///< τ

  void validate() const;
  /// ζ(t) = √(2κ) e^{−κ(t−τ)} e^{−iδt} for t > τ, else 0.
  std::complex<double> mode(double t) const;
};

struct PacketSet {
  Wavepacket H1, H2, V1, V2;

  /// Port-1 packets share (δ1, κ1, τ1), port-2 packets (δ2, κ2, τ2).
  static PacketSet two_sources(double offset1, double decay1, double arrival1, double offset2,
                               double decay2, double arrival2);
  void validate() const;
};

struct DetectorModel {
  double jitter_1 = 0;  ///< σ1, ps rms
  double jitter_2 = 0;
  double efficiency = 1;  ///< event-rate scale only
  double time_resolution = 0;  ///< ps bin width; 0 means continuous

  void validate() const;
};

/// Unnormalized branch amplitudes ¼ζ_H2(t1)ζ_V1(t2) and ¼ζ_H1(t1)ζ_V2(t2).
struct BranchAmplitudes {
  std::complex<double> c0, c1;
  bool null_event() const { return c0 == 0.0 && c1 == 0.0; }
};
BranchAmplitudes conditional_state(double t1, double t2, const PacketSet& packets);

struct Phases {
  double minus = 0;  ///< φ−
  double plus = 0;   ///< φ+
};
/// The state is e^{−iφ+} e^{iφ− Z}(|c0|, |c1|).
Phases relative_phase(double t1, double t2, const PacketSet& packets);

double g_factor(double t1, double t2, const PacketSet& packets);

/// ⟨G⟩ over the branch-summed detection-time density, in closed form.
double mean_g_factor(const PacketSet& packets);
/// ½[1 + ⟨G⟩ e^{−(δH1−δH2)²σ1²/2 − (δV1−δV2)²σ2²/2}].
double closed_form_fidelity(const PacketSet& packets, const DetectorModel& detectors);

/// Monte Carlo Bell fidelity after phase correction with the measured times.
Estimate mean_bell_fidelity(const PacketSet& packets, const DetectorModel& detectors,
                            std::size_t n_samples, std::uint64_t seed, unsigned threads = 0);

}  // namespace oqmem::hom
