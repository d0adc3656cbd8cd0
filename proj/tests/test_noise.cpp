#include <doctest.h>

#include <cmath>
#include <vector>

#include "oqmem/errors.hpp"
#include "oqmem/noise.hpp"

using namespace oqmem;
using namespace oqmem::noise;

namespace {

constexpr double kHbar = 658.2119569;

protocol::ProtocolParams params() {
  const auto c = hubbard::couplings_from_parameters(0, 30, 0, 40, 20, 16, 0, 0);
  return protocol::ProtocolParams::calibrated(c, c.J_O - c.dJ_O);
}

}  // namespace

TEST_CASE("T2* and the dephasing envelope") {
  CHECK(t2_star(0.5) == doctest::Approx(std::sqrt(2.0) * kHbar / 0.5));
  CHECK(std::isinf(t2_star(0)));
  NoiseModel m;
  m.hyperfine_sigma_E = 0.1;
  const std::vector<double> ts = {0, 1000, 5000, 20000};
  const Envelope e = dephasing_envelope(m, hubbard::Molecule::E, ts);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double x = ts[k] * 0.1 / kHbar;
    CHECK(e.coherence[k] == doctest::Approx(std::exp(-x * x / 2)).epsilon(1e-12));
  }
  CHECK(e.t2_star == doctest::Approx(t2_star(0.1)));
}

TEST_CASE("free precession and mid-point echo for a static shift") {
  EchoSequence fid{5000, {}, PulseAxis::X_O};
  for (double d : {-3.0, 0.0, 0.4, 17.0}) {
    const auto c = apply_echo(fid, d);
    CHECK(c.real() == doctest::Approx(std::cos(d * 5000 / kHbar)).epsilon(1e-12));
    CHECK(c.imag() == doctest::Approx(std::sin(d * 5000 / kHbar)).epsilon(1e-12));
    const EchoSequence hahn{5000, {2500}, PulseAxis::X_O};
    CHECK(std::abs(apply_echo(hahn, d) - 1.0) < 1e-10);
    const EchoSequence cpmg{5000, {1250, 3750}, PulseAxis::X_E};
    CHECK(std::abs(apply_echo(cpmg, d) - 1.0) < 1e-10);
  }
  const EchoSequence off{5000, {2000}, PulseAxis::X_O};
  CHECK(std::abs(apply_echo(off, 1.0) - std::polar(1.0, -1000 / kHbar)) < 1e-12);
}

TEST_CASE("invalid pulse sequences are rejected") {
  CHECK_THROWS_AS(apply_echo({100, {60, 40}, PulseAxis::X_O}, 1), InvalidSequenceError);
  CHECK_THROWS_AS(apply_echo({100, {150}, PulseAxis::X_O}, 1), InvalidSequenceError);
  CHECK_THROWS_AS(apply_echo({-1, {}, PulseAxis::X_O}, 1), InvalidSequenceError);
  NoiseModel m;
  const double t[] = {10};
  const double bad[] = {1.5};
  CHECK_THROWS_AS(monte_carlo_coherence(m, hubbard::Molecule::O, t, bad, 10, 1),
                  InvalidSequenceError);
}

TEST_CASE("Monte Carlo free-induction decay follows the Gaussian envelope") {
  NoiseModel m;
  m.hyperfine_sigma_O = 0.2;
  const std::vector<double> ts = {0, 2000, 5000, 8000, 15000};
  const auto mc = monte_carlo_coherence(m, hubbard::Molecule::O, ts, {}, 100000, 77);
  const auto env = dephasing_envelope(m, hubbard::Molecule::O, ts);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    INFO("t = " << ts[k]);
    CHECK(std::abs(mc[k].mean - env.coherence[k]) <= 3 * mc[k].std_error + 1e-12);
  }
  const double half[] = {0.5};
  const auto echo = monte_carlo_coherence(m, hubbard::Molecule::O, ts, half, 2000, 77);
  for (const auto& e : echo) CHECK(std::abs(e.mean - 1) < 1e-10);
}

TEST_CASE("coherence estimates do not depend on the worker count") {
  NoiseModel m;
  m.hyperfine_sigma_E = 0.3;
  const double ts[] = {3000};
  const auto a = monte_carlo_coherence(m, hubbard::Molecule::E, ts, {}, 5000, 5, 1);
  const auto b = monte_carlo_coherence(m, hubbard::Molecule::E, ts, {}, 5000, 5, 4);
  CHECK(a[0].mean == b[0].mean);
  CHECK(a[0].std_error == b[0].std_error);
}

TEST_CASE("quasi-static draws stay aligned across models") {
  NoiseModel a, b;
  a.hyperfine_sigma_O = 1;
  a.charge_sigma_E = 1;
  b = a;
  b.hyperfine_sigma_O = 3;
  b.charge_sigma_E = 0;
  Rng ra(8), rb(8);
  for (int i = 0; i < 20; ++i) {
    const auto x = sample_quasistatic(a, ra), y = sample_quasistatic(b, rb);
    CHECK(y.hyperfine_O == doctest::Approx(3 * x.hyperfine_O));
    CHECK(y.d_epsilon_E == 0);
  }
}

TEST_CASE("perturbed CZ terms") {
  const auto p = params();
  const auto base = perturbed_terms(p, {});
  CHECK(base.dJ_O == p.cz_terms().dJ_O);
  CHECK(base.J_E == p.cz_terms().J_E);
  CHECK(base.J_OE == p.cz_terms().J_OE);
  const auto hf = perturbed_terms(p, {0.5, -0.25, 0, 0});
  CHECK(hf.dJ_O == doctest::Approx(base.dJ_O + 0.5));
  CHECK(hf.J_E == doctest::Approx(base.J_E - 0.25));
  const auto ch = perturbed_terms(p, {0, 0, 2.0, 0});
  // J_O(ε) = J(ε) + sin²(θ_O/2)·sin²(θ_E/2)·Δ_DD/4, referenced to the bare J(0).
  const double s_O = (1 - 2 / std::hypot(2.0, 60.0)) / 2;
  const double expected = hubbard::exchange_energy(2, 30) + s_O * 0.5 * 16 / 4 - 30;
  CHECK(ch.dJ_O == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("memory hyperfine noise degrades the Bell fidelity as predicted") {
  const auto p = params();
  NoiseModel m;
  // T2* = 10·t_CZ.
  m.hyperfine_sigma_E = std::sqrt(2.0) * kHbar / (10 * p.t_CZ);
  const auto r = noisy_protocol_fidelity(p, m, 4000, 21);
  const double x = m.hyperfine_sigma_E * p.t_CZ / kHbar;
  const double predicted = (1 + std::exp(-x * x / 2)) / 2;
  CHECK(predicted == doctest::Approx(0.995).epsilon(1e-4));
  CHECK(std::abs(r.fidelity.mean - predicted) <= 4 * r.fidelity.std_error);
  CHECK(r.failures == 0);
  CHECK(r.success_per_attempt == doctest::Approx(0.5).epsilon(0.05));
  CHECK_THROWS_AS(noisy_protocol_fidelity(p, m, 10, 1), InvalidParameterError);
}

TEST_CASE("fidelity falls as charge noise grows") {
  const auto p = params();
  double last = 1.0 + 1e-12;
  for (double s : {0.0, 0.2, 0.6, 1.5}) {
    NoiseModel m;
    m.charge_sigma_O = s;
    m.charge_sigma_E = s;
    const double f = noisy_protocol_fidelity(p, m, 400, 2).fidelity.mean;
    CHECK(f < last);
    last = f;
  }
}

TEST_CASE("permutation sequences refocus static gradients") {
  const Eigen::Vector3d b(0.12, -0.05, 0.03);
  const double T = 2e5;
  const auto bare = run_gradient_sequence(b, T, 0, 0);
  const auto pulsed = run_gradient_sequence(b, T, 0, 6 * 200);
  CHECK(bare.subspace_leakage > 0.01);
  CHECK(pulsed.subspace_leakage < 1e-3);
  CHECK(pulsed.logical_angle < 0.05);
  CHECK((pulsed.unitary.adjoint() * pulsed.unitary - Matrix8c::Identity()).norm() < 1e-10);

  const auto uniform = run_gradient_sequence(Eigen::Vector3d::Constant(0.2), T, 0, 0);
  CHECK(uniform.subspace_leakage < 1e-12);
  CHECK(uniform.logical_angle < 1e-6);

  const auto exch = run_gradient_sequence(Eigen::Vector3d::Zero(), 0, 0.8, 0);
  CHECK(exch.logical_angle == doctest::Approx(0.8).epsilon(1e-9));
  CHECK_THROWS_AS(run_gradient_sequence(b, T, 0, 7), InvalidSequenceError);
}
