#include "oqmem/electrostatics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oqmem/errors.hpp"
#include "oqmem/hubbard.hpp"
#include "oqmem/parallel.hpp"
#include "oqmem/units.hpp"

namespace oqmem::electro {

// ---------------------------------------------------------------------------
// Point-charge coupling

DeviceGeometry DeviceGeometry::stacked(double z_dd, double pitch, double dot_separation) {
  DeviceGeometry g;
  g.saqdm_B = {0, 0, z_dd - dot_separation / 2};
  g.saqdm_T = {0, 0, z_dd + dot_separation / 2};
  for (int i = 0; i < 3; ++i) g.gqd[i] = {i * pitch, 0, 0};
  return g;
}

DeviceGeometry DeviceGeometry::shifted(double dx, double dy) const {
  DeviceGeometry g = *this;
  const Eigen::Vector3d d(dx, dy, 0);
  g.saqdm_B += d;
  g.saqdm_T += d;
  return g;
}

void DeviceGeometry::validate() const {
  if (!(dielectric > 0)) throw InvalidParameterError("dielectric constant must be positive");
  const Eigen::Vector3d* all[] = {&saqdm_B, &saqdm_T, &gqd[0], &gqd[1], &gqd[2]};
  for (auto* p : all)
    if (!p->allFinite()) throw InvalidGeometryError("dot positions must be finite");
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      if (*all[i] == *all[j]) throw InvalidGeometryError("dot positions must be distinct");
  if (!(saqdm_T.z() > saqdm_B.z())) throw InvalidGeometryError("T dot must sit above B dot");
  const double qw = std::max({gqd[0].z(), gqd[1].z(), gqd[2].z()});
  if (!(saqdm_B.z() > qw)) throw InvalidGeometryError("SAQDM must lie above the QW plane");
  if (gate_plane_z) {
    if (!std::isfinite(*gate_plane_z)) throw InvalidGeometryError("gate plane must be finite");
    const double side = saqdm_B.z() - *gate_plane_z;
    for (auto* p : all)
      if ((p->z() - *gate_plane_z) * side <= 0)
        throw InvalidGeometryError("all dots must lie on one side of the gate plane");
  }
}

double point_interaction(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double dielectric,
                         std::optional<double> gate_plane_z) {
  const hubbard::Orbital pa{a, Eigen::Vector3d::Zero()};
  double u = hubbard::coulomb_integral(pa, {b, Eigen::Vector3d::Zero()}, dielectric);
  if (gate_plane_z) {
    const Eigen::Vector3d image(b.x(), b.y(), 2 * *gate_plane_z - b.z());
    u -= hubbard::coulomb_integral(pa, {image, Eigen::Vector3d::Zero()}, dielectric);
  }
  return u;
}

double delta_dd(const DeviceGeometry& g) {
  g.validate();
  auto U = [&](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return point_interaction(a, b, g.dielectric, g.gate_plane_z);
  };
  return U(g.saqdm_T, g.gqd[0]) - U(g.saqdm_T, g.gqd[1]) - U(g.saqdm_B, g.gqd[0]) +
         U(g.saqdm_B, g.gqd[1]);
}

Grid delta_dd_map(const DeviceGeometry& geometry, const std::vector<double>& xs,
                  const std::vector<double>& ys, unsigned threads) {
  geometry.validate();
  Grid out{xs, ys, Eigen::MatrixXd(ys.size(), xs.size())};
  auto rows = map_chunks<Eigen::VectorXd>(ys.size(), threads, [&](std::size_t iy) {
    Eigen::VectorXd row(xs.size());
    for (std::size_t ix = 0; ix < xs.size(); ++ix)
      row[ix] = delta_dd(geometry.shifted(xs[ix], ys[iy]));
    return row;
  });
  for (std::size_t iy = 0; iy < ys.size(); ++iy) out.values.row(iy) = rows[iy].transpose();
  return out;
}

namespace {

std::vector<double> cell_widths(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i == 0 ? v[0] : (v[i - 1] + v[i]) / 2;
    const double hi = i + 1 == n ? v[n - 1] : (v[i] + v[i + 1]) / 2;
    w[i] = hi - lo;
  }
  // Edge cells get a full spacing so a single interior cell is not halved.
  w.front() = v[1] - v[0];
  w.back() = v[n - 1] - v[n - 2];
  return w;
}

}  // namespace

double contour_radius(const Grid& map, double level) {
  const Eigen::Index ny = map.values.rows(), nx = map.values.cols();
  if (nx == 0 || ny == 0) throw InvalidParameterError("empty map");
  const Eigen::MatrixXd mag = map.values.cwiseAbs();
  Eigen::Index py = 0, px = 0;
  const double peak = mag.maxCoeff(&py, &px);
  if (peak < level) return 0.0;

  const auto wx = cell_widths(map.xs), wy = cell_widths(map.ys);
  std::vector<char> seen(static_cast<std::size_t>(nx * ny), 0);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack{{py, px}};
  seen[py * nx + px] = 1;
  double area = 0;
  while (!stack.empty()) {
    const auto [y, x] = stack.back();
    stack.pop_back();
    area += wx[x] * wy[y];
    const std::pair<Eigen::Index, Eigen::Index> next[] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
    for (const auto& [ny2, nx2] : next) {
      if (ny2 < 0 || nx2 < 0 || ny2 >= ny || nx2 >= nx) continue;
      if (seen[ny2 * nx + nx2] || mag(ny2, nx2) < level) continue;
      seen[ny2 * nx + nx2] = 1;
      stack.push_back({ny2, nx2});
    }
  }
  return std::sqrt(area / units::kPi);
}

// ---------------------------------------------------------------------------
// Materials and stacks

const std::vector<Material>& material_table() {
  static const std::vector<Material> table = {
      {"GaAs", 0.0, 0.067, 12.9},
      {"Al0.3Ga0.7As", 0.243, 0.092, 12.05},
      {"Al0.4Ga0.6As", 0.324, 0.100, 11.76},
      {"AlAs", 0.81, 0.15, 10.06},
      {"InAs", -0.5, 0.023, 15.15},
  };
  return table;
}

const Material& material(std::string_view name) {
  for (const auto& m : material_table())
    if (m.name == name) return m;
  throw InvalidParameterError("unknown material '" + std::string(name) + "'");
}

Layer Layer::of(std::string_view label, std::string_view material_name, double thickness,
                bool free_charge) {
  const Material& m = material(material_name);
  return {std::string(label), thickness, m.band_offset, m.effective_mass, m.dielectric, 0.0,
          free_charge};
}

LayerStack LayerStack::default_stack() {
  LayerStack s;
  s.layers = {
      Layer::of("etch_stop_top", "AlAs", 10),
      Layer::of("cap", "Al0.3Ga0.7As", 100),
      Layer::of("dots_top", "InAs", 3),
      Layer::of("tunnel_barrier", "Al0.3Ga0.7As", 7),
      Layer::of("dots_bottom", "InAs", 3),
      Layer::of("spacer_upper", "Al0.3Ga0.7As", 20),
      Layer::of("qw", "GaAs", 10, true),
      Layer::of("spacer_lower", "Al0.3Ga0.7As", 10),
      Layer::of("buffer", "Al0.4Ga0.6As", 40),
      Layer::of("etch_stop_back", "AlAs", 10),
  };
  return s;
}

LayerStack LayerStack::default_accumulation() {
  LayerStack s = default_stack();
  s.top_bias = 1.0;
  s.back_bias = 1.0;
  return s;
}

double LayerStack::total_thickness() const {
  double t = 0;
  for (const auto& l : layers) t += l.thickness;
  return t;
}

double LayerStack::layer_top(std::string_view label) const {
  double z = 0;
  for (const auto& l : layers) {
    if (l.label == label) return z;
    z += l.thickness;
  }
  throw InvalidParameterError("no layer labelled '" + std::string(label) + "'");
}

void LayerStack::validate() const {
  if (layers.empty()) throw InvalidParameterError("layer stack is empty");
  for (const auto& l : layers) {
    if (!(l.thickness > 0) || !std::isfinite(l.thickness))
      throw InvalidParameterError("layer '" + l.label + "' needs a positive thickness");
    if (!(l.effective_mass > 0) || !(l.dielectric > 0))
      throw InvalidParameterError("layer '" + l.label + "' needs positive mass and dielectric");
    if (!std::isfinite(l.band_offset) || !(l.donor_density >= 0))
      throw InvalidParameterError("layer '" + l.label + "' has invalid offset or doping");
  }
  if (!std::isfinite(top_bias) || !std::isfinite(back_bias) || !std::isfinite(schottky_barrier))
    throw InvalidParameterError("biases must be finite");
}

// ---------------------------------------------------------------------------
// 1-D solver

namespace {

struct Mesh {
  double h = 0;
  std::vector<double> z;
  std::vector<double> eps_face;  ///< between node i and i+1
  std::vector<double> inv_mass_face;
  std::vector<double> offset, donors, free_weight, mass;  ///< node averages
  std::vector<const Layer*> cell;

  /// Control-volume Thomas–Fermi density at node i: each adjacent half cell
  /// uses its own material. Returns (n, ∂n/∂u).
  std::pair<double, double> density(std::size_t i, double u) const;
};

Mesh build_mesh(const LayerStack& s, double spacing) {
  const double total = s.total_thickness();
  const int n = std::max(4, static_cast<int>(std::lround(total / spacing)));
  Mesh m;
  m.h = total / n;
  std::vector<const Layer*> cell(n);
  std::size_t li = 0;
  double top = 0;
  for (int c = 0; c < n; ++c) {
    const double mid = (c + 0.5) * m.h;
    while (li + 1 < s.layers.size() && mid > top + s.layers[li].thickness) {
      top += s.layers[li].thickness;
      ++li;
    }
    cell[c] = &s.layers[li];
  }
  m.cell = cell;
  for (int c = 0; c < n; ++c) {
    m.eps_face.push_back(cell[c]->dielectric);
    m.inv_mass_face.push_back(1 / cell[c]->effective_mass);
  }
  for (int i = 0; i <= n; ++i) {
    m.z.push_back(i * m.h);
    const Layer* a = cell[std::max(0, i - 1)];
    const Layer* b = cell[std::min(n - 1, i)];
    m.offset.push_back((a->band_offset + b->band_offset) / 2);
    m.donors.push_back((a->donor_density + b->donor_density) / 2);
    m.free_weight.push_back((a->holds_free_charge + b->holds_free_charge) / 2.0);
    m.mass.push_back((a->effective_mass + b->effective_mass) / 2);
  }
  return m;
}

/// Thomas–Fermi density at 0 K with E_F = 0, and its derivative w.r.t. E_c.
std::pair<double, double> thomas_fermi(double ec, double mass, double weight) {
  if (weight == 0 || ec >= 0) return {0.0, 0.0};
  const double k2 = mass * (-ec) / units::kHbar2Over2Me;
  const double n = weight * std::pow(k2, 1.5) / (3 * units::kPi * units::kPi);
  return {n, -1.5 * n / (-ec)};
}

/// Solves a tridiagonal system in place (Thomas algorithm).
void solve_tridiagonal(std::vector<double> lower, std::vector<double> diag,
                       std::vector<double> upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

std::pair<double, double> Mesh::density(std::size_t i, double u) const {
  double n = 0, dn = 0;
  const std::size_t cells[] = {i == 0 ? 0 : i - 1, std::min(i, cell.size() - 1)};
  for (std::size_t c : cells) {
    const Layer* l = cell[c];
    const auto [nc, dc] = thomas_fermi(l->band_offset + u, l->effective_mass,
                                       l->holds_free_charge ? 1.0 : 0.0);
    n += nc / 2;
    dn += dc / 2;
  }
  return {n, dn};
}

struct NewtonStep {
  std::vector<double> step;  ///< interior nodes
  double residual;
};

NewtonStep newton_step(const Mesh& m, const std::vector<double>& u) {
  const std::size_t n = m.z.size();
  const std::size_t k = n - 2;
  const double h2 = m.h * m.h, C = units::kElementaryOverEps0;
  std::vector<double> lower(k), diag(k), upper(k), rhs(k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t i = j + 1;
    const double el = m.eps_face[i - 1], er = m.eps_face[i];
    const auto [dens, dn] = m.density(i, u[i]);
    const double lap = (er * (u[i + 1] - u[i]) - el * (u[i] - u[i - 1])) / h2;
    rhs[j] = lap - C * (m.donors[i] - dens);
    lower[j] = el / h2;
    upper[j] = er / h2;
    diag[j] = -(el + er) / h2 + C * dn;
  }
  solve_tridiagonal(lower, diag, upper, rhs);
  double res = 0;
  for (double s : rhs) res = std::max(res, std::abs(s));
  return {std::move(rhs), res};
}

}  // namespace

double BandProfile::band_at(double depth) const {
  if (z.empty()) throw InvalidParameterError("empty band profile");
  if (depth <= z.front()) return conduction_band.front();
  if (depth >= z.back()) return conduction_band.back();
  const auto it = std::upper_bound(z.begin(), z.end(), depth);
  const std::size_t i = static_cast<std::size_t>(it - z.begin());
  const double f = (depth - z[i - 1]) / (z[i] - z[i - 1]);
  return conduction_band[i - 1] * (1 - f) + conduction_band[i] * f;
}

BandProfile solve_band_profile(const LayerStack& stack, const SolverOptions& opt) {
  stack.validate();
  if (!(opt.grid_spacing > 0) || !(opt.mixing > 0 && opt.mixing <= 1) ||
      opt.max_iterations < 1 || !(opt.tolerance > 0))
    throw InvalidParameterError("invalid solver options");
  const Mesh m = build_mesh(stack, opt.grid_spacing);
  const std::size_t n = m.z.size();

  // u is the electrostatic part of the band edge, E_c = offset + u.
  std::vector<double> u(n);
  const double u_top = stack.schottky_barrier - stack.top_bias;
  const double u_back = stack.schottky_barrier - stack.back_bias;
  for (std::size_t i = 0; i < n; ++i) u[i] = u_top + (u_back - u_top) * m.z[i] / m.z.back();

  BandProfile out;
  bool converged = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const NewtonStep s = newton_step(m, u);
    out.residuals.push_back(s.residual);
    out.iterations = it + 1;
    if (!std::isfinite(s.residual))
      throw DivergenceError("band solver produced a non-finite update", out.residuals);
    if (s.residual < opt.tolerance) {
      converged = true;
      break;
    }
    for (std::size_t j = 0; j < s.step.size(); ++j) u[j + 1] -= opt.mixing * s.step[j];
  }
  if (!converged)
    throw DivergenceError("band solver did not converge in " +
                              std::to_string(opt.max_iterations) + " iterations",
                          out.residuals);
  if (opt.polish) {
    for (int k = 0; k < 8; ++k) {
      const NewtonStep s = newton_step(m, u);
      for (std::size_t j = 0; j < s.step.size(); ++j) u[j + 1] -= s.step[j];
      const double after = newton_step(m, u).residual;
      out.residuals.push_back(after);
      if (after < 1e-14) break;
    }
  }

  out.z = m.z;
  double charge = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.conduction_band.push_back(m.offset[i] + u[i]);
    out.density.push_back(m.density(i, u[i]).first);
    if (i > 0 && i + 1 < n) {
      out.sheet_density += out.density[i] * m.h;
      charge += (m.donors[i] - out.density[i]) * m.h;
    }
  }
  const double C = units::kElementaryOverEps0;
  const double flux_top = m.eps_face.front() * (u[1] - u[0]) / m.h;
  const double flux_back = m.eps_face.back() * (u[n - 1] - u[n - 2]) / m.h;
  const double scale =
      std::max({std::abs(C * charge), std::abs(flux_top), std::abs(flux_back), 1e-300});
  out.gauss_error = std::abs(C * charge - (flux_back - flux_top)) / scale;

  // Envelope functions in a hard-wall window around the free-charge layers.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, top = 0;
  for (const auto& l : stack.layers) {
    if (l.holds_free_charge) {
      lo = std::min(lo, top);
      hi = std::max(hi, top + l.thickness);
    }
    top += l.thickness;
  }
  if (std::isfinite(lo) && opt.n_states > 0) {
    lo = std::max(0.0, lo - opt.window_margin);
    hi = std::min(m.z.back(), hi + opt.window_margin);
    const std::size_t i0 = static_cast<std::size_t>(std::ceil(lo / m.h - 1e-9));
    const std::size_t i1 = static_cast<std::size_t>(std::floor(hi / m.h + 1e-9));
    if (i1 > i0 + 2) {
      const std::size_t k = i1 - i0 - 1;
      const double K = units::kHbar2Over2Me / (m.h * m.h);
      Eigen::VectorXd d(k), e(k - 1);
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t i = i0 + 1 + j;
        d[j] = out.conduction_band[i] + K * (m.inv_mass_face[i - 1] + m.inv_mass_face[i]);
        if (j + 1 < k) e[j] = -K * m.inv_mass_face[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(d, e);
      const double edge = std::min(out.conduction_band[i0], out.conduction_band[i1]);
      for (std::size_t i = i0; i <= i1; ++i) out.window_z.push_back(m.z[i]);
      for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(k) &&
                               static_cast<int>(out.states.size()) < opt.n_states;
           ++s) {
        const double energy = es.eigenvalues()[s];
        if (!(energy < edge)) break;
        BoundState b{energy, std::vector<double>(k + 2, 0.0), 0.0};
        Eigen::VectorXd v = es.eigenvectors().col(s) / std::sqrt(m.h);
        if (v.sum() < 0) v = -v;
        for (std::size_t j = 0; j < k; ++j) {
          b.envelope[j + 1] = v[j];
          b.qw_fraction += m.free_weight[i0 + 1 + j] * v[j] * v[j] * m.h;
        }
        out.states.push_back(std::move(b));
      }
    }
  }
  return out;
}

std::optional<Gate> parse_gate(std::string_view name) {
  if (name == "top") return Gate::Top;
  if (name == "back") return Gate::Back;
  return std::nullopt;
}

namespace {

std::pair<BandProfile, BandProfile> bias_pair(const LayerStack& stack, Gate gate,
                                              const SolverOptions& options, double step) {
  if (!(step > 0)) throw InvalidParameterError("bias step must be positive");
  LayerStack plus = stack, minus = stack;
  double& vp = gate == Gate::Top ? plus.top_bias : plus.back_bias;
  double& vm = gate == Gate::Top ? minus.top_bias : minus.back_bias;
  vp += step;
  vm -= step;
  return {solve_band_profile(plus, options), solve_band_profile(minus, options)};
}

}  // namespace

double lever_arm(const LayerStack& stack, Gate gate, double probe_z, const SolverOptions& options,
                 double step) {
  const auto [plus, minus] = bias_pair(stack, gate, options, step);
  return -(plus.band_at(probe_z) - minus.band_at(probe_z)) / (2 * step) * 1000.0;
}

double detuning_lever_arm(const LayerStack& stack, Gate gate, double z_a, double z_b,
                          const SolverOptions& options, double step) {
  const auto [plus, minus] = bias_pair(stack, gate, options, step);
  const double dp = plus.band_at(z_b) - plus.band_at(z_a);
  const double dm = minus.band_at(z_b) - minus.band_at(z_a);
  return (dp - dm) / (2 * step) * 1000.0;
}

}  // namespace oqmem::electro
