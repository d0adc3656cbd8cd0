#include "oqmem/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oqmem/errors.hpp"
#include "oqmem/parallel.hpp"
#include "oqmem/units.hpp"

namespace oqmem::noise {

namespace {

using cd = std::complex<double>;
constexpr std::size_t kChunks = 64;

double sigma_for(const NoiseModel& m, hubbard::Molecule molecule) {
  return molecule == hubbard::Molecule::O ? m.hyperfine_sigma_O : m.hyperfine_sigma_E;
}

struct ShotRange {
  std::size_t begin, end;
};

ShotRange chunk_range(std::size_t chunk, std::size_t n_chunks, std::size_t n) {
  return {chunk * n / n_chunks, (chunk + 1) * n / n_chunks};
}

}  // namespace

void NoiseModel::validate() const {
  const double sigmas[] = {hyperfine_sigma_O, hyperfine_sigma_E, charge_sigma_O, charge_sigma_E};
  for (double s : sigmas)
    if (!(s >= 0) || !std::isfinite(s))
      throw InvalidParameterError("noise sigmas must be finite and non-negative");
  if (!(leakage_rate >= 0 && leakage_rate <= 1))
    throw InvalidParameterError("leakage rate must lie in [0, 1]");
}

NoiseRealization sample_quasistatic(const NoiseModel& model, Rng& rng) {
  NoiseRealization r;
  r.hyperfine_O = rng.normal(0, 1) * model.hyperfine_sigma_O;
  r.hyperfine_E = rng.normal(0, 1) * model.hyperfine_sigma_E;
  r.d_epsilon_O = rng.normal(0, 1) * model.charge_sigma_O;
  r.d_epsilon_E = rng.normal(0, 1) * model.charge_sigma_E;
  return r;
}

protocol::CZTerms perturbed_terms(const protocol::ProtocolParams& params,
                                  const NoiseRealization& r) {
  hubbard::EffectiveCouplings c = params.couplings;
  if (r.d_epsilon_O != 0 || r.d_epsilon_E != 0)
    c = hubbard::shifted_detunings(c, r.d_epsilon_O, r.d_epsilon_E);
  return {c.J_O - params.J_O_emit + r.hyperfine_O, c.J_E + r.hyperfine_E, c.J_OE};
}

double t2_star(double sigma) {
  if (!(sigma >= 0)) throw InvalidParameterError("sigma must be non-negative");
  if (sigma == 0) return std::numeric_limits<double>::infinity();
  return std::sqrt(2.0) * units::kHbar / sigma;
}

Envelope dephasing_envelope(const NoiseModel& model, hubbard::Molecule molecule,
                            std::span<const double> times) {
  model.validate();
  const double sigma = sigma_for(model, molecule);
  Envelope e;
  e.t2_star = t2_star(sigma);
  e.times.assign(times.begin(), times.end());
  for (double t : times) {
    const double x = t * sigma / units::kHbar;
    e.coherence.push_back(std::exp(-x * x / 2));
  }
  return e;
}

void EchoSequence::validate() const {
  if (!(duration >= 0) || !std::isfinite(duration))
    throw InvalidSequenceError("sequence duration must be finite and non-negative");
  double last = 0;
  for (double t : pulse_times) {
    if (!std::isfinite(t) || t < 0 || t > duration)
      throw InvalidSequenceError("pulse time outside the sequence interval");
    if (t < last) throw InvalidSequenceError("pulse times must be sorted");
    last = t;
  }
}

std::complex<double> apply_echo(const EchoSequence& sequence, double detuning) {
  sequence.validate();
  // Amplitudes of |0⟩, |1⟩ under H = ½·detuning·Z with −iX pulses.
  cd a0 = 1 / std::sqrt(2.0), a1 = a0;
  double t_prev = 0;
  auto free = [&](double dt) {
    const double phase = detuning * dt / (2 * units::kHbar);
    a0 *= std::polar(1.0, -phase);
    a1 *= std::polar(1.0, phase);
  };
  for (double t : sequence.pulse_times) {
    free(t - t_prev);
    std::swap(a0, a1);
    t_prev = t;
  }
  free(sequence.duration - t_prev);
  // The −i pulse phases are global; an odd pulse count leaves the ideal
  // sequence a net X, which is undone here.
  if (sequence.pulse_times.size() % 2 == 1) std::swap(a0, a1);
  return 2.0 * std::conj(a0) * a1;
}

std::vector<Estimate> monte_carlo_coherence(const NoiseModel& model, hubbard::Molecule molecule,
                                            std::span<const double> times,
                                            std::span<const double> echo_fractions,
                                            std::size_t n_shots, std::uint64_t seed,
                                            unsigned threads) {
  model.validate();
  if (n_shots == 0) throw InvalidParameterError("need at least one shot");
  for (double f : echo_fractions)
    if (!(f >= 0 && f <= 1)) throw InvalidSequenceError("echo fractions must lie in [0, 1]");
  const double sigma = sigma_for(model, molecule);
  const std::size_t n_chunks = std::min(kChunks, n_shots);
  auto partial = map_chunks<std::vector<RunningStats>>(n_chunks, threads, [&](std::size_t c) {
    std::vector<RunningStats> acc(times.size());
    Rng rng(derive_seed(seed, c));
    const ShotRange r = chunk_range(c, n_chunks, n_shots);
    EchoSequence seq;
    seq.pulse_times.resize(echo_fractions.size());
    for (std::size_t shot = r.begin; shot < r.end; ++shot) {
      const double delta = rng.normal(0, sigma);
      for (std::size_t k = 0; k < times.size(); ++k) {
        seq.duration = times[k];
        for (std::size_t p = 0; p < echo_fractions.size(); ++p)
          seq.pulse_times[p] = echo_fractions[p] * times[k];
        acc[k].add(apply_echo(seq, delta).real());
      }
    }
    return acc;
  });
  std::vector<Estimate> out;
  for (std::size_t k = 0; k < times.size(); ++k) {
    RunningStats total;
    for (const auto& p : partial) total.merge(p[k]);
    out.push_back(total.estimate());
  }
  return out;
}

namespace {

// Spin i is bit i of the basis index; a set bit means spin down.
double sz(int index, int spin) { return ((index >> spin) & 1) ? -0.5 : 0.5; }

int swap_bits(int index, int a, int b) {
  const int ba = (index >> a) & 1, bb = (index >> b) & 1;
  if (ba == bb) return index;
  return index ^ ((1 << a) | (1 << b));
}

Matrix8c swap_matrix(int a, int b) {
  Matrix8c m = Matrix8c::Zero();
  for (int i = 0; i < 8; ++i) m(swap_bits(i, a, b), i) = 1;
  return m;
}

Matrix8c free_evolution(const Eigen::Vector3d& b, double dt) {
  Matrix8c m = Matrix8c::Zero();
  for (int i = 0; i < 8; ++i) {
    const double e = b[0] * sz(i, 0) + b[1] * sz(i, 1) + b[2] * sz(i, 2);
    m(i, i) = std::polar(1.0, -e * dt / units::kHbar);
  }
  return m;
}

/// Logical basis on m = +1/2: singlet of spins 1,2 with 3 up, and the
/// orthogonal total-spin-1/2 state.
Eigen::Matrix<cd, 8, 2> logical_basis() {
  Eigen::Matrix<cd, 8, 2> v = Eigen::Matrix<cd, 8, 2>::Zero();
  const int down1 = 1, down2 = 2, down3 = 4;
  v(down2, 0) = 1 / std::sqrt(2.0);
  v(down1, 0) = -1 / std::sqrt(2.0);
  v(down3, 1) = 2 / std::sqrt(6.0);
  v(down2, 1) = -1 / std::sqrt(6.0);
  v(down1, 1) = -1 / std::sqrt(6.0);
  return v;
}

}  // namespace

GradientSequenceResult run_gradient_sequence(const Eigen::Vector3d& gradients, double duration,
                                             double exchange_angle, int n_pulses) {
  if (!gradients.allFinite() || !std::isfinite(exchange_angle))
    throw InvalidParameterError("gradients and exchange angle must be finite");
  if (!(duration >= 0) || !std::isfinite(duration))
    throw InvalidSequenceError("sequence duration must be finite and non-negative");
  if (n_pulses < 0 || n_pulses % 6 != 0)
    throw InvalidSequenceError("permutation sequences need a multiple of 6 pulses");

  const Matrix8c swap12 = swap_matrix(0, 1), swap23 = swap_matrix(1, 2);
  const cd i(0, 1);
  // exp(−iθ S1·S2) with S1·S2 = SWAP/2 − 1/4.
  Matrix8c u = std::polar(1.0, exchange_angle / 4) *
               (std::cos(exchange_angle / 2) * Matrix8c::Identity() -
                i * std::sin(exchange_angle / 2) * swap12);
  const int segments = std::max(1, n_pulses);
  const Matrix8c step = free_evolution(gradients, duration / segments);
  for (int k = 0; k < segments; ++k) {
    u = step * u;
    if (n_pulses > 0) u = (-i) * (k % 2 == 0 ? swap12 : swap23) * u;
  }

  const auto v = logical_basis();
  GradientSequenceResult out;
  out.unitary = u;
  out.logical = v.adjoint() * u * v;
  double kept = 1;
  for (int c = 0; c < 2; ++c) kept = std::min(kept, out.logical.col(c).squaredNorm());
  out.subspace_leakage = 1 - kept;
  const cd det = out.logical.determinant();
  const Matrix2c<double> su = out.logical / std::sqrt(det);
  const double half_trace = std::clamp(std::abs(su.trace().real()) / 2, 0.0, 1.0);
  out.logical_angle = 2 * std::acos(half_trace);
  return out;
}

NoisyFidelity noisy_protocol_fidelity(const protocol::ProtocolParams& params,
                                      const NoiseModel& model, std::size_t n_shots,
                                      std::uint64_t seed, unsigned threads) {
  if (n_shots < 100) throw InvalidParameterError("noisy fidelity needs at least 100 shots");
  params.validate();
  model.validate();
  struct Partial {
    RunningStats fidelity;
    std::uint64_t attempts = 0;
    std::size_t failures = 0;
  };
  const std::size_t n_chunks = std::min(kChunks, n_shots);
  auto parts = map_chunks<Partial>(n_chunks, threads, [&](std::size_t c) {
    Partial p;
    const ShotRange r = chunk_range(c, n_chunks, n_shots);
    for (std::size_t shot = r.begin; shot < r.end; ++shot) {
      const auto rec = protocol::run_protocol(params, model, derive_seed(seed, shot));
      p.attempts += rec.attempts;
      if (rec.success)
        p.fidelity.add(rec.fidelity);
      else
        ++p.failures;
    }
    return p;
  });
  RunningStats total;
  std::uint64_t attempts = 0;
  NoisyFidelity out;
  for (const auto& p : parts) {
    total.merge(p.fidelity);
    attempts += p.attempts;
    out.failures += p.failures;
  }
  out.fidelity = total.estimate();
  out.success_per_attempt =
      attempts ? static_cast<double>(total.count()) / static_cast<double>(attempts) : 0.0;
  return out;
}

}  // namespace oqmem::noise
