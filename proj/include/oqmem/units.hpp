#pragma once

// Internal unit system: energies in μeV, lengths in nm, times in ps.
// The band-profile solver works in eV / nm and says so in its names.

namespace oqmem::units {

inline constexpr double kPi = 3.14159265358979323846;

/// Reduced Planck constant, μeV·ps.
inline constexpr double kHbar = 658.2119569;
/// h·1 GHz expressed in μeV.
inline constexpr double kGHz = 4.135667696;
/// e²/(4πε₀), μeV·nm.
inline constexpr double kCoulomb = 1.4399645478e6;
/// e²/ε₀, eV·nm (Poisson source prefactor for densities in nm⁻³).
inline constexpr double kElementaryOverEps0 = 18.0951280;
/// ħ²/(2 m_e), eV·nm².
inline constexpr double kHbar2Over2Me = 0.0380998212;

inline constexpr double kPerNm3ToPerCm3 = 1e21;
inline constexpr double kPerNm2ToPerCm2 = 1e14;

constexpr double ghz_to_ueV(double f_ghz) { return f_ghz * kGHz; }
constexpr double ueV_to_ghz(double e_ueV) { return e_ueV / kGHz; }
constexpr double ueV_to_rad_per_ps(double e_ueV) { return e_ueV / kHbar; }

}  // namespace oqmem::units
