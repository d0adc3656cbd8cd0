#include <doctest.h>

#include <cmath>

#include "oqmem/electrostatics.hpp"
#include "oqmem/errors.hpp"

using namespace oqmem;
using namespace oqmem::electro;

namespace {

// e²/(4π ε0) in μeV·nm.
constexpr double kCoulombUeVNm = 1.4399645478e6;

double coulomb(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double eps) {
  return kCoulombUeVNm / (eps * (a - b).norm());
}

double hand_delta(const DeviceGeometry& g) {
  const auto& T = g.saqdm_T;
  const auto& B = g.saqdm_B;
  const auto& d1 = g.gqd[0];
  const auto& d2 = g.gqd[1];
  const double e = g.dielectric;
  return coulomb(T, d1, e) - coulomb(T, d2, e) - coulomb(B, d1, e) + coulomb(B, d2, e);
}

}  // namespace

TEST_CASE("point interaction with and without an image plane") {
  const Eigen::Vector3d a(0, 0, 10), b(30, 40, 10);
  CHECK(point_interaction(a, b, 12.9, std::nullopt) ==
        doctest::Approx(kCoulombUeVNm / (12.9 * 50)).epsilon(1e-12));
  const Eigen::Vector3d b_image(30, 40, -10 - 2 * 5);
  const double screened = point_interaction(a, b, 12.9, -5.0);
  CHECK(screened == doctest::Approx(coulomb(a, b, 12.9) - coulomb(a, b_image, 12.9)).epsilon(1e-12));
  CHECK(screened < coulomb(a, b, 12.9));
}

TEST_CASE("dipole coupling matches the four-term point-charge sum") {
  for (double z : {25.0, 30.0, 37.5, 60.0}) {
    const auto g = DeviceGeometry::stacked(z, 100, 10);
    CHECK(delta_dd(g) == doctest::Approx(hand_delta(g)).epsilon(1e-12));
    const auto moved = g.shifted(13, -7);
    CHECK(delta_dd(moved) == doctest::Approx(hand_delta(moved)).epsilon(1e-12));
  }
}

TEST_CASE("coupling magnitude and trend with stacking height") {
  const double d30 = delta_dd(DeviceGeometry::stacked(30, 100));
  CHECK(std::abs(d30) >= 300);
  CHECK(std::abs(d30) <= 3000);
  double prev = INFINITY;
  for (double z = 30; z <= 40.001; z += 0.5) {
    const double d = std::abs(delta_dd(DeviceGeometry::stacked(z, 100)));
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("an image plane below the dots reduces the coupling") {
  for (double z : {25.0, 30.0, 40.0})
    for (double pitch : {60.0, 100.0, 150.0})
      for (double plane : {-5.0, -20.0, -60.0})
        for (double dx : {0.0, 20.0, -35.0}) {
          auto g = DeviceGeometry::stacked(z, pitch).shifted(dx, 10);
          const double bare = std::abs(delta_dd(g));
          g.gate_plane_z = plane;
          CHECK(std::abs(delta_dd(g)) < bare);
        }
}

TEST_CASE("coupling maps") {
  const auto g = DeviceGeometry::stacked(30, 100);
  std::vector<double> xs, ys;
  for (int i = 0; i <= 40; ++i) xs.push_back(-100 + 7.5 * i);
  for (int i = 0; i <= 30; ++i) ys.push_back(-120 + 8 * i);
  const Grid a = delta_dd_map(g, xs, ys, 1);
  const Grid b = delta_dd_map(g, xs, ys, 4);
  CHECK(a.values == b.values);
  CHECK(a.values(15, 13) == doctest::Approx(delta_dd(g.shifted(xs[13], ys[15]))));
  // Mirror symmetry in y.
  for (int ix = 0; ix <= 40; ++ix)
    CHECK(a.values(0, ix) == doctest::Approx(a.values(30, ix)).epsilon(1e-12));
  CHECK(contour_radius(a, 1e9) == 0);
  CHECK(contour_radius(a, 100) > 0);
}

TEST_CASE("contour radius of a synthetic disk") {
  Grid g;
  for (int i = 0; i <= 200; ++i) {
    g.xs.push_back(-50 + 0.5 * i);
    g.ys.push_back(-50 + 0.5 * i);
  }
  g.values = Eigen::MatrixXd::Zero(201, 201);
  for (int iy = 0; iy <= 200; ++iy)
    for (int ix = 0; ix <= 200; ++ix) {
      const double r = std::hypot(g.xs[ix] - 5, g.ys[iy] + 3);
      g.values(iy, ix) = -std::exp(-r * r / 200);
      // A second, disconnected blob that must be ignored.
      if (std::hypot(g.xs[ix] + 40, g.ys[iy] - 40) < 4) g.values(iy, ix) = -0.9;
    }
  // |v| ≥ 0.5 inside r² ≤ 200·ln 2.
  CHECK(contour_radius(g, 0.5) == doctest::Approx(std::sqrt(200 * std::log(2.0))).epsilon(0.01));
}

TEST_CASE("geometry validation") {
  auto g = DeviceGeometry::stacked(30, 100);
  g.saqdm_T = g.saqdm_B;
  CHECK_THROWS_AS(g.validate(), InvalidGeometryError);
  g = DeviceGeometry::stacked(30, 100);
  g.gate_plane_z = 10;
  CHECK_THROWS_AS(delta_dd(g), InvalidGeometryError);
  CHECK_THROWS_AS(DeviceGeometry::stacked(-5, 100).validate(), InvalidGeometryError);
  CHECK_THROWS_AS(DeviceGeometry::stacked(30, 0).validate(), InvalidGeometryError);
}

TEST_CASE("material table") {
  CHECK(material("GaAs").band_offset == 0);
  CHECK(material("AlAs").band_offset > material("Al0.4Ga0.6As").band_offset);
  CHECK(material("Al0.4Ga0.6As").band_offset > material("Al0.3Ga0.7As").band_offset);
  CHECK(material("InAs").band_offset < 0);
  CHECK_THROWS_AS(material("Unobtainium"), InvalidParameterError);
  CHECK(material_table().size() == 5);
  CHECK(parse_gate("top") == Gate::Top);
  CHECK_FALSE(parse_gate("side").has_value());
}

TEST_CASE("charge-free uniform slab has a linear band edge") {
  LayerStack s;
  s.layers = {Layer::of("a", "GaAs", 40), Layer::of("b", "GaAs", 60)};
  s.top_bias = 0.3;
  s.back_bias = -0.2;
  const auto p = solve_band_profile(s);
  CHECK(p.sheet_density == 0);
  const double top = s.schottky_barrier - 0.3, back = s.schottky_barrier + 0.2;
  for (double z : {0.0, 12.5, 50.0, 77.0, 100.0})
    CHECK(p.band_at(z) == doctest::Approx(top + (back - top) * z / 100).epsilon(1e-9));

  s.top_bias = s.back_bias = 0;
  const auto flat = solve_band_profile(s);
  for (double e : flat.conduction_band) CHECK(e == doctest::Approx(s.schottky_barrier));
}

TEST_CASE("default stack under accumulation") {
  const LayerStack s = LayerStack::default_accumulation();
  const auto p = solve_band_profile(s);
  REQUIRE(!p.residuals.empty());
  CHECK(p.residuals.back() < 1e-6);
  for (std::size_t i = 1; i < p.residuals.size(); ++i) CHECK(p.residuals[i] <= p.residuals[i - 1]);
  CHECK(p.gauss_error < 1e-8);
  CHECK(p.sheet_density > 0);
  REQUIRE(!p.states.empty());
  const double qw_top = s.layer_top("qw"), qw_bottom = qw_top + 10;
  CHECK(p.states[0].energy < std::min(p.band_at(qw_top - 1), p.band_at(qw_bottom + 1)));
  CHECK(p.states[0].qw_fraction > 0.5);

  // Charge sits in the well only.
  double outside = 0;
  for (std::size_t i = 0; i < p.z.size(); ++i)
    if (p.z[i] < qw_top - 1e-9 || p.z[i] > qw_bottom + 1e-9) outside += p.density[i];
  CHECK(outside == 0);

  SolverOptions fine;
  fine.grid_spacing = 0.25;
  const auto q = solve_band_profile(s, fine);
  double worst = 0;
  for (double z = 0; z <= s.total_thickness(); z += 1)
    worst = std::max(worst, std::abs(q.band_at(z) - p.band_at(z)));
  CHECK(worst < 1e-4);
}

TEST_CASE("solver failures surface as divergence errors") {
  SolverOptions o;
  o.max_iterations = 3;
  try {
    solve_band_profile(LayerStack::default_accumulation(), o);
    FAIL("expected a divergence error");
  } catch (const DivergenceError& e) {
    CHECK(e.residuals().size() == 3);
  }
  o = {};
  o.mixing = 0;
  CHECK_THROWS_AS(solve_band_profile(LayerStack::default_accumulation(), o), InvalidParameterError);
}

TEST_CASE("lever arms") {
  const LayerStack s = LayerStack::default_accumulation();
  CHECK(lever_arm(s, Gate::Top, 0) == doctest::Approx(1000).epsilon(1e-6));
  CHECK(lever_arm(s, Gate::Back, s.total_thickness()) == doctest::Approx(1000).epsilon(1e-6));
  double prev = INFINITY;
  for (double z : {0.0, 20.0, 60.0, 110.0, 140.0}) {
    const double l = lever_arm(s, Gate::Top, z);
    CHECK(l < prev);
    CHECK(l > 0);
    prev = l;
  }
  const double zT = s.layer_top("dots_top") + 1.5, zB = s.layer_top("dots_bottom") + 1.5;
  CHECK(detuning_lever_arm(s, Gate::Top, zT, zB) ==
        doctest::Approx(lever_arm(s, Gate::Top, zT) - lever_arm(s, Gate::Top, zB)).epsilon(1e-6));
}
