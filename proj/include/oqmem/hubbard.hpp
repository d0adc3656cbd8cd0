#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "oqmem/fock.hpp"

// Tight-binding / Coulomb model of the optically active double dot (T, B)
// and the gated triple dot (1, 2, 3), and the qubit-level couplings derived
// from it. Energies μeV, lengths nm.

namespace oqmem::hubbard {

enum class Dot : int { T = 0, B = 1, D1 = 2, D2 = 3, D3 = 4 };
enum class Molecule { O, E };

inline constexpr int kDots = 5;
inline constexpr std::size_t kMaxSectorDimension = 15;
inline constexpr std::size_t kMaxCoupledDimension = 18;

constexpr int idx(Dot d) { return static_cast<int>(d); }
constexpr Molecule molecule_of(Dot d) { return idx(d) < 2 ? Molecule::O : Molecule::E; }
std::string_view dot_name(Dot d);
std::optional<Dot> parse_dot(std::string_view name);

/// Gaussian charge density centred at `center` with per-axis standard
/// deviations `widths`.
struct Orbital {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d widths = Eigen::Vector3d::Constant(5.0);

  void validate(bool allow_point = false) const;
};

/// U for two Gaussian densities, μeV. Zero widths give the point-charge limit.
double coulomb_integral(const Orbital& a, const Orbital& b, double dielectric);

using DotMatrix = Eigen::Matrix<double, kDots, kDots>;

/// Site energies are not stored: the detunings fix them. tunnel(j,k) is the
/// Hamiltonian coefficient t_jk, acting as t_jk/2 per spin between the dots,
/// so the singlet (1,1)-(0,2) coupling is t_jk/√2. Pair interactions contribute
/// U_jj n_j↑n_j↓ on site and U_jk n_j n_k / 2 between distinct dots. Unset
/// Coulomb elements are NaN.
struct HubbardSystem {
  std::array<std::optional<Orbital>, kDots> orbitals;
  DotMatrix tunnel = DotMatrix::Zero();
  DotMatrix coulomb = DotMatrix::Constant(std::numeric_limits<double>::quiet_NaN());
  double epsilon_O = 0.0;   ///< E(0,2) − E(1,1) of the T/B pair
  double epsilon_E = 0.0;   ///< E(2,0,1) − E(1,1,1)
  double epsilon_23 = 0.0;  ///< E(1,0,2) − E(1,1,1)
  double dielectric = 12.9;

  double t(Dot a, Dot b) const { return tunnel(idx(a), idx(b)); }
  double U(Dot a, Dot b) const { return coulomb(idx(a), idx(b)); }
  void set_tunnel(Dot a, Dot b, double value);
  void set_coulomb(Dot a, Dot b, double value);

  /// Fills every Coulomb element computable from the stored orbitals.
  void compute_coulomb_from_orbitals();
  void validate() const;
};

struct EffectiveCouplings {
  double J_O = 0, J_E = 0, J_23 = 0, J_OE = 0;
  double delta_dd = 0;
  double theta_O = 0, theta_E = 0;
  double dJ_O = 0;  ///< J_O during CZ minus the bare exchange at photon emission

  // Inputs retained so the couplings can be re-evaluated under detuning shifts.
  double epsilon_O = 0, t_O = 0, epsilon_E = 0, t_E = 0;
  double coulomb_shift_O = 0;  ///< (U_T1 + U_T2 − U_B1 − U_B2)/2
  double coulomb_shift_E = 0;  ///< (U_T2 + U_B2 − U_T1 − U_B1)/2
};

double mixing_angle(double epsilon, double t);
double exchange_energy(double epsilon, double t);
/// ∂J/∂ε = −sin²(θ/2).
double exchange_slope(double epsilon, double t);
double dipole_dipole_shift(const HubbardSystem& system);

EffectiveCouplings couplings_from_parameters(double epsilon_O, double t_O, double epsilon_E,
                                             double t_E, double J_23, double delta_dd,
                                             double coulomb_shift_O, double coulomb_shift_E);
EffectiveCouplings effective_couplings(const HubbardSystem& system);
EffectiveCouplings shifted_detunings(const EffectiveCouplings& c, double d_epsilon_O,
                                     double d_epsilon_E);

/// Ratio t_E(χ + δχ)/t_E(χ) for a parabolic barrier of curvature C_E.
double wkb_barrier_modulation(double chi, double curvature, double delta_chi);

struct Level {
  double energy;
  double total_spin;
  Eigen::VectorXd state;
};

struct Spectrum {
  std::vector<fock::Determinant> basis;
  std::vector<Level> levels;  ///< ascending energy
  Eigen::MatrixXd hamiltonian;

  /// Lowest level with the given total spin.
  const Level& lowest(double total_spin) const;
  std::vector<const Level*> with_spin(double total_spin) const;
  /// E(lowest S=1) − E(lowest S=0); two-electron sectors only.
  double singlet_triplet_gap() const;
};

/// Fixed-charge, fixed-m_z spectrum of one molecule (2 electrons, m_z = 0
/// for O; 3 electrons, m_z = +1/2 for E), resolved by total spin.
Spectrum exact_diagonalize(const HubbardSystem& system, Molecule molecule);

struct ZZSpectrum {
  double E_SS, E_ST, E_TS, E_TT;  ///< first index O, second index E (dots 1,2)
  double zz() const { return -(E_SS - E_ST - E_TS + E_TT) / 2; }
};

/// Ground energies of the coupled T,B + 1,2 model (dot 3 a fixed background
/// charge, no inter-molecule tunneling) in each singlet/triplet block.
ZZSpectrum coupled_spectrum(const HubbardSystem& system);

}  // namespace oqmem::hubbard
