#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

// Point-charge estimates of the inter-molecule dipole coupling, and a 1-D
// self-consistent conduction-band solver for the heterostructure. Lengths nm,
// Coulomb energies μeV, band energies eV.

namespace oqmem::electro {

struct DeviceGeometry {
  Eigen::Vector3d saqdm_B = Eigen::Vector3d::Zero();
  Eigen::Vector3d saqdm_T = Eigen::Vector3d::Zero();
  std::array<Eigen::Vector3d, 3> gqd{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                                     Eigen::Vector3d::Zero()};
  std::optional<double> gate_plane_z;  ///< perfect-conductor image plane
  double dielectric = 12.9;

  /// GQDs at x = 0, pitch, 2·pitch in the z = 0 plane; SAQDM centred at
  /// height z_dd above GQD 1 with B and T a distance `dot_separation` apart.
  static DeviceGeometry stacked(double z_dd, double pitch, double dot_separation = 10.0);
  /// SAQDM moved laterally by (dx, dy).
  DeviceGeometry shifted(double dx, double dy) const;
  void validate() const;
};

/// Screened point-charge interaction between unit charges, μeV.
double point_interaction(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double dielectric,
                         std::optional<double> gate_plane_z);

/// U_T1 − U_T2 − U_B1 + U_B2 for the geometry.
double delta_dd(const DeviceGeometry& geometry);

struct Grid {
  std::vector<double> xs, ys;
  Eigen::MatrixXd values;  ///< values(iy, ix)
};

/// Δ_DD with the SAQDM displaced by every (x, y) of the grid.
Grid delta_dd_map(const DeviceGeometry& geometry, const std::vector<double>& xs,
                  const std::vector<double>& ys, unsigned threads = 0);

/// Equivalent-area radius of the connected region around the |value|
/// maximum where |value| ≥ level. Zero if the level exceeds the maximum.
double contour_radius(const Grid& map, double level);

struct Material {
  std::string name;
  double band_offset;     ///< eV, relative to GaAs
  double effective_mass;  ///< m*/m_e
  double dielectric;
};

/// Editable defaults: GaAs, Al0.3Ga0.7As, Al0.4Ga0.6As, AlAs, InAs.
const Material& material(std::string_view name);
const std::vector<Material>& material_table();

struct Layer {
  std::string label;
  double thickness;  ///< nm
  double band_offset;
  double effective_mass;
  double dielectric;
  double donor_density = 0;  ///< nm⁻³
  bool holds_free_charge = false;

  static Layer of(std::string_view label, std::string_view material_name, double thickness,
                  bool free_charge = false);
};

/// Layers listed from the top surface down; depth z = 0 at the top gate.
struct LayerStack {
  std::vector<Layer> layers;
  double top_bias = 0;   ///< V
  double back_bias = 0;  ///< V
  double schottky_barrier = 0.8;  ///< eV, GaAs-referenced band edge at zero bias

  static LayerStack default_stack();
  /// Bias used for the accumulated 2DEG.
  static LayerStack default_accumulation();
  double total_thickness() const;
  /// Depth of the top face of the layer with the given label.
  double layer_top(std::string_view label) const;
  void validate() const;
};

struct SolverOptions {
  double grid_spacing = 0.5;  ///< nm
  double mixing = 0.1;
  int max_iterations = 500;
  double tolerance = 1e-6;  ///< eV
  double window_margin = 15;  ///< nm either side of the free-charge layers
  int n_states = 3;
  bool polish = true;  ///< finish with undamped Newton steps
};

struct BoundState {
  double energy;                  ///< eV
  std::vector<double> envelope;   ///< normalized on the window nodes, nm^{-1/2}
  double qw_fraction;             ///< ∫|ψ|² over free-charge layers
};

struct BandProfile {
  std::vector<double> z;
  std::vector<double> conduction_band;  ///< eV relative to the Fermi level
  std::vector<double> density;          ///< nm⁻³
  double sheet_density = 0;             ///< nm⁻²
  std::vector<double> window_z;
  std::vector<BoundState> states;
  std::vector<double> residuals;  ///< ‖F(u) − u‖∞ per iteration, eV
  int iterations = 0;
  double gauss_error = 0;  ///< relative mismatch of charge vs boundary fields

  /// Linear interpolation of the band edge at depth z.
  double band_at(double z) const;
};

BandProfile solve_band_profile(const LayerStack& stack, const SolverOptions& options = {});

enum class Gate { Top, Back };
std::optional<Gate> parse_gate(std::string_view name);

/// −∂E_c(probe_z)/∂V_gate in meV/V by central difference.
double lever_arm(const LayerStack& stack, Gate gate, double probe_z,
                 const SolverOptions& options = {}, double step = 0.01);
/// Lever arm on the depth difference E_c(z_b) − E_c(z_a), meV/V.
double detuning_lever_arm(const LayerStack& stack, Gate gate, double z_a, double z_b,
                          const SolverOptions& options = {}, double step = 0.01);

}  // namespace oqmem::electro
