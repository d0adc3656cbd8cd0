#include "oqmem/hubbard.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "oqmem/errors.hpp"
#include "oqmem/quadrature.hpp"
#include "oqmem/units.hpp"

namespace oqmem::hubbard {

namespace {

constexpr std::array<std::string_view, kDots> kNames = {"T", "B", "1", "2", "3"};

bool finite(double x) { return std::isfinite(x); }

}  // namespace

std::string_view dot_name(Dot d) { return kNames[idx(d)]; }

std::optional<Dot> parse_dot(std::string_view name) {
  for (int i = 0; i < kDots; ++i)
    if (kNames[i] == name) return static_cast<Dot>(i);
  return std::nullopt;
}

void Orbital::validate(bool allow_point) const {
  if (!center.allFinite() || !widths.allFinite())
    throw InvalidParameterError("orbital has non-finite center or widths");
  if (allow_point ? (widths.array() < 0).any() : (widths.array() <= 0).any())
    throw InvalidParameterError("orbital widths must be strictly positive");
}

double coulomb_integral(const Orbital& a, const Orbital& b, double dielectric) {
  if (!(dielectric > 0)) throw InvalidParameterError("dielectric constant must be positive");
  a.validate(true);
  b.validate(true);
  const Eigen::Vector3d d = b.center - a.center;
  const Eigen::Vector3d var = a.widths.array().square() + b.widths.array().square();
  const double prefactor = units::kCoulomb / dielectric;

  // The separation vector is Gaussian with mean d and covariance diag(var).
  // E[1/|X|] is infinite when that distribution lives on a line or a point
  // through the origin.
  int spread_axes = 0;
  bool offset_outside_support = false;
  for (int i = 0; i < 3; ++i) {
    if (var[i] > 0)
      ++spread_axes;
    else if (d[i] != 0)
      offset_outside_support = true;
  }
  if (spread_axes == 0) {
    if (!offset_outside_support)
      throw DegenerateGeometryError("coincident point charges have infinite Coulomb energy");
    return prefactor / d.norm();
  }
  if (spread_axes == 1 && !offset_outside_support)
    throw DegenerateGeometryError("line-like charge overlap has infinite Coulomb energy");

  // 1/r = (2/√π) ∫₀^∞ exp(−u²r²) du, averaged over the Gaussian in closed form.
  const double scale = std::sqrt(d.squaredNorm() + var.sum());
  auto integrand = [&](double x) {
    const double w = x / (1 - x);
    const double u = w / scale;
    double value = 1.0 / ((1 - x) * (1 - x));
    for (int i = 0; i < 3; ++i) {
      const double g = 1 + 2 * u * u * var[i];
      value *= std::exp(-u * u * d[i] * d[i] / g) / std::sqrt(g);
    }
    return value;
  };
  const double integral = integrate_gk15<double>(integrand, 0.0, 1.0, 1e-12);
  const double result = prefactor * 2 / std::sqrt(units::kPi) * integral / scale;
  if (!finite(result) || result <= 0)
    throw DegenerateGeometryError("Coulomb integral did not evaluate to a finite energy");
  return result;
}

void HubbardSystem::set_tunnel(Dot a, Dot b, double value) {
  tunnel(idx(a), idx(b)) = value;
  tunnel(idx(b), idx(a)) = value;
}

void HubbardSystem::set_coulomb(Dot a, Dot b, double value) {
  coulomb(idx(a), idx(b)) = value;
  coulomb(idx(b), idx(a)) = value;
}

void HubbardSystem::compute_coulomb_from_orbitals() {
  for (int j = 0; j < kDots; ++j) {
    for (int k = j; k < kDots; ++k) {
      if (!orbitals[j] || !orbitals[k]) continue;
      const bool point =
          (orbitals[j]->widths.array() == 0).all() || (orbitals[k]->widths.array() == 0).all();
      if (j == k && point) continue;  // on-site energy of a point charge is undefined
      set_coulomb(static_cast<Dot>(j), static_cast<Dot>(k),
                  coulomb_integral(*orbitals[j], *orbitals[k], dielectric));
    }
  }
}

void HubbardSystem::validate() const {
  if (!(dielectric > 0)) throw InvalidParameterError("dielectric constant must be positive");
  if (!finite(epsilon_O) || !finite(epsilon_E) || !finite(epsilon_23))
    throw InvalidParameterError("detunings must be finite");
  for (const auto& o : orbitals)
    if (o) o->validate(true);
  if (!tunnel.allFinite()) throw InvalidParameterError("tunnel matrix must be finite");
  if ((tunnel - tunnel.transpose()).cwiseAbs().maxCoeff() > 0)
    throw InvalidParameterError("tunnel matrix must be symmetric");
  for (int j = 0; j < kDots; ++j)
    for (int k = 0; k < kDots; ++k) {
      const auto mj = molecule_of(static_cast<Dot>(j)), mk = molecule_of(static_cast<Dot>(k));
      if (mj != mk && tunnel(j, k) != 0)
        throw InvalidParameterError("tunneling between the two molecules must be zero");
      if (j != k && tunnel(j, k) < 0)
        throw InvalidParameterError("tunnel couplings must be non-negative");
      const double u = coulomb(j, k);
      if (std::isnan(u)) continue;
      if (!finite(u) || u < 0) throw InvalidParameterError("Coulomb elements must be >= 0");
      if (std::isnan(coulomb(k, j)) || coulomb(k, j) != u)
        throw InvalidParameterError("Coulomb matrix must be symmetric");
    }
  for (int j = 0; j < kDots; ++j)
    for (int k = 0; k < kDots; ++k) {
      if (j == k || std::isnan(coulomb(j, j)) || std::isnan(coulomb(j, k))) continue;
      if (!(coulomb(j, j) > coulomb(j, k)))
        throw InvalidParameterError("on-site repulsion U_" + std::string(kNames[j]) +
                                    " must exceed inter-dot elements");
    }
}

double mixing_angle(double epsilon, double t) {
  if (!(t > 0) || !finite(t) || std::isnan(epsilon))
    throw InvalidParameterError("mixing angle needs a positive tunnel coupling");
  return std::atan2(2 * t, epsilon);
}

double exchange_energy(double epsilon, double t) {
  if (!(t > 0) || !finite(t) || std::isnan(epsilon))
    throw InvalidParameterError("exchange energy needs a positive tunnel coupling");
  const double root = std::hypot(epsilon, 2 * t);
  // Rationalized branch avoids cancellation deep in the (1,1) regime.
  return epsilon > 0 ? 2 * t * t / (root + epsilon) : (root - epsilon) / 2;
}

double exchange_slope(double epsilon, double t) {
  const double half = mixing_angle(epsilon, t) / 2;
  return -std::sin(half) * std::sin(half);
}

double dipole_dipole_shift(const HubbardSystem& s) {
  const double terms[] = {s.U(Dot::T, Dot::D1), s.U(Dot::T, Dot::D2), s.U(Dot::B, Dot::D1),
                          s.U(Dot::B, Dot::D2)};
  for (double u : terms)
    if (std::isnan(u)) throw IncompleteModelError("cross-molecule Coulomb elements are missing");
  return terms[0] - terms[1] - terms[2] + terms[3];
}

EffectiveCouplings couplings_from_parameters(double epsilon_O, double t_O, double epsilon_E,
                                             double t_E, double J_23, double delta_dd,
                                             double coulomb_shift_O, double coulomb_shift_E) {
  EffectiveCouplings c;
  c.epsilon_O = epsilon_O;
  c.t_O = t_O;
  c.epsilon_E = epsilon_E;
  c.t_E = t_E;
  c.delta_dd = delta_dd;
  c.coulomb_shift_O = coulomb_shift_O;
  c.coulomb_shift_E = coulomb_shift_E;
  c.theta_O = mixing_angle(epsilon_O, t_O);
  c.theta_E = mixing_angle(epsilon_E, t_E);
  const double sO = std::pow(std::sin(c.theta_O / 2), 2);
  const double sE = std::pow(std::sin(c.theta_E / 2), 2);
  const double bare_O = exchange_energy(epsilon_O, t_O);
  c.J_O = bare_O + sO * (coulomb_shift_O + delta_dd / 4 * sE);
  c.J_E = exchange_energy(epsilon_E, t_E) + sE * (coulomb_shift_E + delta_dd / 4 * sO);
  c.J_23 = J_23;
  c.J_OE = sE * sO * delta_dd / 4;
  c.dJ_O = c.J_O - bare_O;
  return c;
}

EffectiveCouplings effective_couplings(const HubbardSystem& s) {
  s.validate();
  const double delta = dipole_dipole_shift(s);
  const double shift_O =
      (s.U(Dot::T, Dot::D1) + s.U(Dot::T, Dot::D2) - s.U(Dot::B, Dot::D1) - s.U(Dot::B, Dot::D2)) /
      2;
  const double shift_E =
      (s.U(Dot::T, Dot::D2) + s.U(Dot::B, Dot::D2) - s.U(Dot::T, Dot::D1) - s.U(Dot::B, Dot::D1)) /
      2;
  const double t23 = s.t(Dot::D2, Dot::D3) / std::sqrt(2.0);
  const double J23 = t23 > 0 ? exchange_energy(s.epsilon_23, t23) : 0.0;
  return couplings_from_parameters(s.epsilon_O, s.t(Dot::T, Dot::B) / std::sqrt(2.0),
                                   s.epsilon_E, s.t(Dot::D1, Dot::D2) / std::sqrt(2.0), J23,
                                   delta, shift_O, shift_E);
}

EffectiveCouplings shifted_detunings(const EffectiveCouplings& c, double d_epsilon_O,
                                     double d_epsilon_E) {
  EffectiveCouplings out = couplings_from_parameters(
      c.epsilon_O + d_epsilon_O, c.t_O, c.epsilon_E + d_epsilon_E, c.t_E, c.J_23, c.delta_dd,
      c.coulomb_shift_O, c.coulomb_shift_E);
  return out;
}

double wkb_barrier_modulation(double chi, double curvature, double delta_chi) {
  if (!(curvature > 0)) throw InvalidParameterError("barrier curvature must be positive");
  (void)chi;  // the ratio is independent of the reference height
  return std::exp(-units::kPi * delta_chi / curvature);
}

// ---------------------------------------------------------------------------
// Exact diagonalization

namespace {

double need(const HubbardSystem& s, Dot a, Dot b) {
  const double u = s.U(a, b);
  if (std::isnan(u))
    throw IncompleteModelError("missing Coulomb element U_" + std::string(dot_name(a)) +
                               std::string(dot_name(b)));
  return u;
}

/// Coulomb energy of an occupation pattern over `dots`, plus singly occupied
/// background dots.
double coulomb_energy(const HubbardSystem& s, std::span<const Dot> dots,
                      std::span<const int> occupation, std::span<const Dot> background) {
  double e = 0;
  for (std::size_t j = 0; j < dots.size(); ++j) {
    if (occupation[j] == 2) e += need(s, dots[j], dots[j]);
    for (std::size_t k = j + 1; k < dots.size(); ++k)
      if (occupation[j] && occupation[k])
        e += 0.5 * need(s, dots[j], dots[k]) * occupation[j] * occupation[k];
    for (Dot b : background)
      if (occupation[j]) e += 0.5 * need(s, dots[j], b) * occupation[j];
  }
  return e;
}

struct Model {
  fock::Sector sector;
  Eigen::MatrixXd h;
};

/// Hamiltonian over `dots` with the given site energies and electron groups.
Model build_model(const HubbardSystem& s, const std::vector<Dot>& dots,
                  const std::vector<double>& site_energy, std::vector<fock::Group> groups,
                  int two_sz, std::size_t max_dim, std::span<const Dot> background) {
  const int n = static_cast<int>(dots.size());
  fock::Sector sector(n, std::move(groups), two_sz, max_dim);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(sector.size(), sector.size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double t = s.t(dots[a], dots[b]);
      if (t != 0) h += (t / 2) * sector.hopping(a, b);
    }
  h += sector.diagonal([&](fock::Determinant d) {
    std::vector<int> occ(n);
    double e = 0;
    for (int j = 0; j < n; ++j) {
      occ[j] = int((d >> fock::orbital(j, 0)) & 1u) + int((d >> fock::orbital(j, 1)) & 1u);
      e += site_energy[j] * occ[j];
    }
    return e + coulomb_energy(s, dots, occ, background);
  });
  return {std::move(sector), std::move(h)};
}

/// Groups the eigenvectors of a commuting label operator by eigenvalue.
std::map<long, Eigen::MatrixXd> label_blocks(const Eigen::MatrixXd& label) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(label);
  std::map<long, std::vector<int>> cols;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    cols[std::lround(es.eigenvalues()[i] * 4)].push_back(i);
  std::map<long, Eigen::MatrixXd> blocks;
  for (auto& [key, list] : cols) {
    Eigen::MatrixXd v(label.rows(), static_cast<Eigen::Index>(list.size()));
    for (std::size_t c = 0; c < list.size(); ++c) v.col(c) = es.eigenvectors().col(list[c]);
    blocks[key] = std::move(v);
  }
  return blocks;
}

double spin_from_s_squared(double s2) { return (-1 + std::sqrt(1 + 4 * s2)) / 2; }

}  // namespace

const Level& Spectrum::lowest(double total_spin) const {
  for (const auto& l : levels)
    if (std::abs(l.total_spin - total_spin) < 1e-6) return l;
  throw InvalidParameterError("no level with the requested total spin");
}

std::vector<const Level*> Spectrum::with_spin(double total_spin) const {
  std::vector<const Level*> out;
  for (const auto& l : levels)
    if (std::abs(l.total_spin - total_spin) < 1e-6) out.push_back(&l);
  return out;
}

double Spectrum::singlet_triplet_gap() const { return lowest(1.0).energy - lowest(0.0).energy; }

Spectrum exact_diagonalize(const HubbardSystem& s, Molecule molecule) {
  s.validate();
  std::vector<Dot> dots;
  std::vector<double> site(0);
  std::vector<fock::Group> groups;
  int two_sz = 0;
  if (molecule == Molecule::O) {
    dots = {Dot::T, Dot::B};
    const int o02[] = {0, 2}, o11[] = {1, 1};
    const double dU = coulomb_energy(s, dots, o02, {}) - coulomb_energy(s, dots, o11, {});
    site = {0.0, s.epsilon_O - dU};
    groups = {{{0, 1}, 2}};
    two_sz = 0;
  } else {
    dots = {Dot::D1, Dot::D2, Dot::D3};
    const int o201[] = {2, 0, 1}, o111[] = {1, 1, 1}, o102[] = {1, 0, 2};
    const double ref = coulomb_energy(s, dots, o111, {});
    site = {s.epsilon_E - (coulomb_energy(s, dots, o201, {}) - ref), 0.0,
            s.epsilon_23 - (coulomb_energy(s, dots, o102, {}) - ref)};
    groups = {{{0, 1, 2}, 3}};
    two_sz = 1;
  }
  Model m = build_model(s, dots, site, std::move(groups), two_sz, kMaxSectorDimension, {});

  std::vector<int> all(dots.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const Eigen::MatrixXd s2 = m.sector.spin_squared(all);

  Spectrum out;
  out.hamiltonian = m.h;
  for (std::size_t i = 0; i < m.sector.size(); ++i) out.basis.push_back(m.sector.det(i));
  for (const auto& [key, v] : label_blocks(s2)) {
    const double spin = spin_from_s_squared(key / 4.0);
    const Eigen::MatrixXd block = v.transpose() * m.h * v;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      out.levels.push_back({es.eigenvalues()[i], spin, v * es.eigenvectors().col(i)});
  }
  std::sort(out.levels.begin(), out.levels.end(),
            [](const Level& a, const Level& b) { return a.energy < b.energy; });
  return out;
}

ZZSpectrum coupled_spectrum(const HubbardSystem& s) {
  s.validate();
  const Dot background[] = {Dot::D3};
  const std::vector<Dot> o_dots = {Dot::T, Dot::B};
  const std::vector<Dot> e_dots = {Dot::D1, Dot::D2};
  const int o02[] = {0, 2}, o11[] = {1, 1}, e20[] = {2, 0};
  const double e_B = s.epsilon_O - (coulomb_energy(s, o_dots, o02, background) -
                                    coulomb_energy(s, o_dots, o11, background));
  const double e_1 = s.epsilon_E - (coulomb_energy(s, e_dots, e20, background) -
                                    coulomb_energy(s, e_dots, o11, background));
  const std::vector<Dot> dots = {Dot::T, Dot::B, Dot::D1, Dot::D2};
  Model m = build_model(s, dots, {0.0, e_B, e_1, 0.0}, {{{0, 1}, 2}, {{2, 3}, 2}}, 0,
                        kMaxCoupledDimension, background);

  const int o_sites[] = {0, 1}, e_sites[] = {2, 3};
  // Eigenvalues 0, 2, 8, 10 label (S_O, S_E) = (0,0), (1,0), (0,1), (1,1).
  const Eigen::MatrixXd label = m.sector.spin_squared(o_sites) + 4 * m.sector.spin_squared(e_sites);
  ZZSpectrum out{};
  for (const auto& [key, v] : label_blocks(label)) {
    const Eigen::MatrixXd block = v.transpose() * m.h * v;
    const double ground = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(block).eigenvalues()[0];
    switch (key) {
      case 0: out.E_SS = ground; break;
      case 8: out.E_TS = ground; break;
      case 32: out.E_ST = ground; break;
      case 40: out.E_TT = ground; break;
      default: throw DiagnosticsError("unexpected spin label in coupled spectrum");
    }
  }
  return out;
}

}  // namespace oqmem::hubbard
