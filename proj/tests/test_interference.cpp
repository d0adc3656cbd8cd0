#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "oqmem/errors.hpp"
#include "oqmem/interference.hpp"

using namespace oqmem;
using namespace oqmem::hom;

namespace {

// Composite Simpson rule on [a,b]², n even.
double simpson_2d(const std::function<double(double, double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double sum = 0;
  for (int i = 0; i <= n; ++i) {
    const double wi = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    for (int j = 0; j <= n; ++j) {
      const double wj = (j == 0 || j == n) ? 1 : (j % 2 ? 4 : 2);
      sum += wi * wj * f(a + i * h, a + j * h);
    }
  }
  return sum * h * h / 9;
}

// |ζ(t)| for an exponential packet arriving at τ.
double envelope(double kappa, double tau, double t) {
  return t > tau ? std::sqrt(2 * kappa) * std::exp(-kappa * (t - tau)) : 0.0;
}

}  // namespace

TEST_CASE("exponential packets give the sech overlap pointwise") {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(0, 400);
  for (double k2 : {0.01, 0.013, 0.02, 0.05}) {
    const auto p = PacketSet::two_sources(0, 0.01, 0, 0.003, k2, 0);
    for (int i = 0; i < 200; ++i) {
      const double t1 = u(g), t2 = u(g);
      CHECK(std::abs(g_factor(t1, t2, p) - 1 / std::cosh((k2 - 0.01) * (t2 - t1))) < 1e-9);
    }
  }
}

TEST_CASE("branch amplitudes and their relative phase") {
  const auto p = PacketSet::two_sources(0.002, 0.01, 0, -0.004, 0.015, 5);
  const double t1 = 37, t2 = 120;
  const auto c = conditional_state(t1, t2, p);
  CHECK(std::abs(c.c0) == doctest::Approx(0.25 * envelope(0.015, 5, t1) * envelope(0.01, 0, t2)));
  CHECK(std::abs(c.c1) == doctest::Approx(0.25 * envelope(0.01, 0, t1) * envelope(0.015, 5, t2)));
  const Phases ph = relative_phase(t1, t2, p);
  const double expected = ((0.002 + 0.004) * t1 + (-0.004 - 0.002) * t2) / 2;
  CHECK(std::remainder(ph.minus - expected, 2 * M_PI) == doctest::Approx(0).epsilon(1e-12));
  CHECK_THROWS_AS(g_factor(1, 2, p), UndefinedEventError);
}

TEST_CASE("mean overlap matches direct two-dimensional integration") {
  for (auto [k1, k2, tau2] : {std::tuple{0.01, 0.01, 0.0}, std::tuple{0.01, 0.016, 0.0},
                              std::tuple{0.02, 0.012, 15.0}}) {
    const auto p = PacketSet::two_sources(0, k1, 0, 0, k2, tau2);
    auto c0 = [&](double t1, double t2) { return envelope(k2, tau2, t1) * envelope(k1, 0, t2); };
    auto c1 = [&](double t1, double t2) { return envelope(k1, 0, t1) * envelope(k2, tau2, t2); };
    const double hi = 3000;
    const double num = simpson_2d([&](double a, double b) { return 2 * c0(a, b) * c1(a, b); }, 0,
                                  hi, 1200);
    const double den = simpson_2d(
        [&](double a, double b) { return c0(a, b) * c0(a, b) + c1(a, b) * c1(a, b); }, 0, hi, 1200);
    INFO("k1 " << k1 << " k2 " << k2);
    CHECK(mean_g_factor(p) == doctest::Approx(num / den).epsilon(2e-3));
  }
  CHECK(mean_g_factor(PacketSet::two_sources(0, 0.01, 0, 0, 0.01, 0)) == doctest::Approx(1));
}

TEST_CASE("Monte Carlo Bell fidelity agrees with the closed form") {
  for (double dd_sigma : {0.0, 0.8, 1.6})
    for (double dk : {0.0, 0.3}) {
      const double sigma = 40;
      const auto p = PacketSet::two_sources(0, 0.01, 0, dd_sigma / sigma, 0.01 * (1 + dk), 0);
      const DetectorModel d{sigma, sigma, 1, 0};
      const Estimate mc = mean_bell_fidelity(p, d, 20000, 17);
      const double cf = closed_form_fidelity(p, d);
      INFO("dd_sigma " << dd_sigma << " dk " << dk);
      CHECK(std::abs(mc.mean - cf) <= 3 * mc.std_error + 1e-12);
    }
}

TEST_CASE("fidelity estimates are thread-count independent and efficiency-blind") {
  const auto p = PacketSet::two_sources(0, 0.01, 0, 0.01, 0.012, 0);
  const Estimate a = mean_bell_fidelity(p, {30, 30, 1, 0}, 5000, 3, 1);
  const Estimate b = mean_bell_fidelity(p, {30, 30, 0.2, 0}, 5000, 3, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("coarse time bins still give a valid fidelity") {
  const auto p = PacketSet::two_sources(0, 0.01, 0, 0.005, 0.01, 0);
  const Estimate e = mean_bell_fidelity(p, {0, 0, 1, 50}, 5000, 8);
  CHECK(e.mean > 0.5);
  CHECK(e.mean < 1.0);
}

TEST_CASE("interference inputs are validated") {
  auto p = PacketSet::two_sources(0, 0.01, 0, 0, 0.01, 0);
  p.H2.decay = 0;
  CHECK_THROWS_AS(mean_g_factor(p), InvalidParameterError);
  p = PacketSet::two_sources(0, 0.01, 0, 0, 0.01, 0);
  p.V1.port = 2;
  CHECK_THROWS_AS(p.validate(), InvalidParameterError);
  const auto ok = PacketSet::two_sources(0, 0.01, 0, 0, 0.01, 0);
  CHECK_THROWS_AS(closed_form_fidelity(ok, {-1, 0, 1, 0}), InvalidParameterError);
  CHECK_THROWS_AS(mean_bell_fidelity(ok, {}, 999, 1), InvalidParameterError);
}
