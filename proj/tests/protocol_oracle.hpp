#pragma once

// Expected heralded state built from explicit 2×2 matrices, independent of
// the phase ledger.

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "oqmem/protocol.hpp"

namespace oqmem::testing {

inline Eigen::Matrix2cd diag_phase(double a) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(0, 0) = std::polar(1.0, a / 2);
  m(1, 1) = std::polar(1.0, -a / 2);
  return m;
}

// Calibrated memory pulse: angle π − tan⁻¹√8 about the axis 120° from z in
// the x–z plane.
inline Eigen::Matrix2cd memory_pulse() {
  const double a = M_PI - std::atan(std::sqrt(8.0)), phi = 2 * M_PI / 3;
  Eigen::Matrix2cd n;
  n << std::cos(phi), std::sin(phi), std::sin(phi), -std::cos(phi);
  return std::cos(a / 2) * Eigen::Matrix2cd::Identity() +
         std::complex<double>(0, 1) * std::sin(a / 2) * n;
}

using HeraldedVector = Eigen::Matrix<std::complex<double>, protocol::kHeraldedDim, 1>;

/// e^{iη2Z/2} R_E e^{iη1Z/2} applied to the memory half of (|H,0⟩ + |V,1⟩)/√2.
inline HeraldedVector expected_state(double eta1, double eta2) {
  using protocol::Memory;
  using protocol::Photon;
  const Eigen::Matrix2cd r = diag_phase(eta2) * memory_pulse() * diag_phase(eta1);
  HeraldedVector v = HeraldedVector::Zero();
  for (int q = 0; q < 2; ++q) {
    const Memory m = q == 0 ? Memory::Zero : Memory::One;
    v[protocol::heralded_index(Photon::H, m)] = r(q, 0) / std::sqrt(2.0);
    v[protocol::heralded_index(Photon::V, m)] = r(q, 1) / std::sqrt(2.0);
  }
  return v;
}

}  // namespace oqmem::testing
