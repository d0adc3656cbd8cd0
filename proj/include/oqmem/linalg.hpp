#pragma once

#include <complex>

#include <Eigen/Dense>

#include "oqmem/units.hpp"

// Small dense complex helpers shared by the protocol and noise modules.

namespace oqmem {

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
using Matrix2c = Eigen::Matrix<Complex<Scalar>, 2, 2>;

template <typename Scalar>
Matrix2c<Scalar> pauli_x() {
  Matrix2c<Scalar> m;
  m << 0, 1, 1, 0;
  return m;
}

template <typename Scalar>
Matrix2c<Scalar> pauli_y() {
  const Complex<Scalar> i(0, 1);
  Matrix2c<Scalar> m;
  m << Scalar(0), -i, i, Scalar(0);
  return m;
}

template <typename Scalar>
Matrix2c<Scalar> pauli_z() {
  Matrix2c<Scalar> m;
  m << 1, 0, 0, -1;
  return m;
}

/// exp(i·angle/2·(Z cos φ + X sin φ)).
template <typename Scalar>
Matrix2c<Scalar> axis_rotation(Scalar angle, Scalar phi) {
  const Complex<Scalar> i(0, 1);
  const Matrix2c<Scalar> n = std::cos(phi) * pauli_z<Scalar>() + std::sin(phi) * pauli_x<Scalar>();
  return std::cos(angle / 2) * Matrix2c<Scalar>::Identity() + i * std::sin(angle / 2) * n;
}

/// exp(i·angle/2·Z).
template <typename Scalar>
Matrix2c<Scalar> z_phase(Scalar angle) {
  return axis_rotation<Scalar>(angle, Scalar(0));
}

/// exp(-i·angle/2·X).
template <typename Scalar>
Matrix2c<Scalar> x_rotation(Scalar angle) {
  return axis_rotation<Scalar>(-angle, Scalar(units::kPi / 2));
}

/// exp(-i·H·t) for Hermitian H.
template <typename Derived>
auto hermitian_exp(const Eigen::MatrixBase<Derived>& h, typename Derived::RealScalar t) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime,
                            Derived::ColsAtCompileTime>;
  Eigen::SelfAdjointEigenSolver<Mat> es(h.eval());
  const auto phases =
      (es.eigenvalues().array() * (-t)).unaryExpr([](auto x) {
        return std::polar(typename Derived::RealScalar(1), x);
      });
  return Mat(es.eigenvectors() * phases.matrix().asDiagonal() * es.eigenvectors().adjoint());
}

}  // namespace oqmem
