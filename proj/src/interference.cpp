#include "oqmem/interference.hpp"

#include <algorithm>
#include <cmath>

#include "oqmem/errors.hpp"
#include "oqmem/parallel.hpp"
#include "oqmem/random.hpp"

namespace oqmem::hom {

namespace {

constexpr std::size_t kChunks = 64;

double envelope_overlap(const Wavepacket& a, const Wavepacket& b) {
  const double start = std::max(a.arrival, b.arrival);
  return 2 * std::sqrt(a.decay * b.decay) / (a.decay + b.decay) *
         std::exp(-a.decay * (start - a.arrival) - b.decay * (start - b.arrival));
}

double quantize(double t, double bin) { return bin > 0 ? std::round(t / bin) * bin : t; }

}  // namespace

void Wavepacket::validate() const {
  if (!(decay > 0) || !std::isfinite(decay)) throw InvalidParameterError("decay rate must be > 0");
  if (!std::isfinite(carrier_offset) || !std::isfinite(arrival))
    throw InvalidParameterError("wavepacket offset and arrival must be finite");
  if (port != 1 && port != 2) throw InvalidParameterError("port must be 1 or 2");
}

std::complex<double> Wavepacket::mode(double t) const {
  if (!(t > arrival)) return 0.0;
  return std::sqrt(2 * decay) * std::exp(-decay * (t - arrival)) *
         std::polar(1.0, -carrier_offset * t);
}

PacketSet PacketSet::two_sources(double offset1, double decay1, double arrival1, double offset2,
                                 double decay2, double arrival2) {
  PacketSet p;
  p.H1 = {Polarization::H, 1, offset1, decay1, arrival1};
  p.V1 = {Polarization::V, 1, offset1, decay1, arrival1};
  p.H2 = {Polarization::H, 2, offset2, decay2, arrival2};
  p.V2 = {Polarization::V, 2, offset2, decay2, arrival2};
  return p;
}

void PacketSet::validate() const {
  const Wavepacket* all[] = {&H1, &H2, &V1, &V2};
  const Polarization pol[] = {Polarization::H, Polarization::H, Polarization::V, Polarization::V};
  const int port[] = {1, 2, 1, 2};
  for (int i = 0; i < 4; ++i) {
    all[i]->validate();
    if (all[i]->polarization != pol[i] || all[i]->port != port[i])
      throw InvalidParameterError("packet set entries have mismatched labels");
  }
}

void DetectorModel::validate() const {
  if (!(jitter_1 >= 0) || !(jitter_2 >= 0) || !std::isfinite(jitter_1) || !std::isfinite(jitter_2))
    throw InvalidParameterError("detector jitter must be finite and non-negative");
  if (!(efficiency >= 0 && efficiency <= 1))
    throw InvalidParameterError("detector efficiency must lie in [0, 1]");
  if (!(time_resolution >= 0) || !std::isfinite(time_resolution))
    throw InvalidParameterError("time resolution must be non-negative");
}

BranchAmplitudes conditional_state(double t1, double t2, const PacketSet& p) {
  return {0.25 * p.H2.mode(t1) * p.V1.mode(t2), 0.25 * p.H1.mode(t1) * p.V2.mode(t2)};
}

Phases relative_phase(double t1, double t2, const PacketSet& p) {
  Phases ph;
  ph.minus = ((p.H1.carrier_offset - p.H2.carrier_offset) * t1 +
              (p.V2.carrier_offset - p.V1.carrier_offset) * t2) /
             2;
  ph.plus = ((p.H1.carrier_offset + p.H2.carrier_offset) * t1 +
             (p.V1.carrier_offset + p.V2.carrier_offset) * t2) /
            2;
  return ph;
}

double g_factor(double t1, double t2, const PacketSet& p) {
  const BranchAmplitudes b = conditional_state(t1, t2, p);
  if (b.null_event()) throw UndefinedEventError("both interference branches vanish");
  const double a0 = std::abs(b.c0), a1 = std::abs(b.c1);
  // Ratio form stays finite when one branch underflows.
  const double hi = std::max(a0, a1), r = std::min(a0, a1) / hi;
  return 2 * r / (1 + r * r);
}

double mean_g_factor(const PacketSet& p) {
  p.validate();
  return envelope_overlap(p.H1, p.H2) * envelope_overlap(p.V1, p.V2);
}

double closed_form_fidelity(const PacketSet& p, const DetectorModel& d) {
  d.validate();
  const double dh = (p.H1.carrier_offset - p.H2.carrier_offset) * d.jitter_1;
  const double dv = (p.V1.carrier_offset - p.V2.carrier_offset) * d.jitter_2;
  return 0.5 * (1 + mean_g_factor(p) * std::exp(-dh * dh / 2 - dv * dv / 2));
}

Estimate mean_bell_fidelity(const PacketSet& p, const DetectorModel& d, std::size_t n_samples,
                            std::uint64_t seed, unsigned threads) {
  p.validate();
  d.validate();
  if (n_samples < 1000) throw InvalidParameterError("need at least 1000 samples");
  struct Partial {
    RunningStats stats;
    std::size_t null_events = 0;
  };
  auto parts = map_chunks<Partial>(kChunks, threads, [&](std::size_t c) {
    Partial out;
    Rng rng(derive_seed(seed, c));
    const std::size_t begin = c * n_samples / kChunks, end = (c + 1) * n_samples / kChunks;
    for (std::size_t i = begin; i < end; ++i) {
      // Branch-summed density: an equal mixture of the two product densities.
      const bool first = rng.uniform() < 0.5;
      const Wavepacket& a = first ? p.H2 : p.H1;
      const Wavepacket& b = first ? p.V1 : p.V2;
      const double t1 = a.arrival + rng.exponential(2 * a.decay);
      const double t2 = b.arrival + rng.exponential(2 * b.decay);
      const double m1 = quantize(t1 + rng.normal(0, 1) * d.jitter_1, d.time_resolution);
      const double m2 = quantize(t2 + rng.normal(0, 1) * d.jitter_2, d.time_resolution);

      const BranchAmplitudes amp = conditional_state(t1, t2, p);
      const double norm2 = std::norm(amp.c0) + std::norm(amp.c1);
      if (!(norm2 > 0)) {
        ++out.null_events;
        continue;
      }
      const double phi = relative_phase(m1, m2, p).minus;
      const std::complex<double> corrected =
          amp.c0 * std::polar(1.0, -phi) + amp.c1 * std::polar(1.0, phi);
      out.stats.add(std::norm(corrected) / (2 * norm2));
    }
    return out;
  });
  RunningStats total;
  std::size_t nulls = 0;
  for (const auto& part : parts) {
    total.merge(part.stats);
    nulls += part.null_events;
  }
  if (total.count() == 0)
    throw DiagnosticsError("every sampled detection pattern was a null event (" +
                           std::to_string(nulls) + ")");
  return total.estimate();
}

}  // namespace oqmem::hom
