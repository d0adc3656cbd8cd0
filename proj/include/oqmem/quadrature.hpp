#pragma once

#include <array>
#include <cmath>
#include <limits>

namespace oqmem {

/// Adaptive 7/15-point Gauss–Kronrod integration of f over [a, b].
template <typename Scalar, typename Fn>
Scalar integrate_gk15(Fn&& f, Scalar a, Scalar b, Scalar rel_tol = Scalar(1e-10),
                      int max_depth = 40) {
  static constexpr std::array<double, 8> xk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  auto segment = [&](Scalar lo, Scalar hi, Scalar& err) {
    const Scalar c = (lo + hi) / 2, h = (hi - lo) / 2;
    const Scalar fc = f(c);
    Scalar k = fc * Scalar(wk[7]);
    Scalar g = fc * Scalar(wg[3]);
    for (int j = 0; j < 7; ++j) {
      const Scalar dx = h * Scalar(xk[j]);
      const Scalar s = f(c - dx) + f(c + dx);
      k += Scalar(wk[j]) * s;
      if (j % 2 == 1) g += Scalar(wg[j / 2]) * s;
    }
    err = std::abs((k - g) * h);
    return k * h;
  };

  auto recurse = [&](auto&& self, Scalar lo, Scalar hi, Scalar whole, Scalar err,
                     Scalar tol, int depth) -> Scalar {
    if (err <= tol || depth >= max_depth) return whole;
    const Scalar mid = (lo + hi) / 2;
    Scalar el, er;
    const Scalar left = segment(lo, mid, el);
    const Scalar right = segment(mid, hi, er);
    return self(self, lo, mid, left, el, tol / 2, depth + 1) +
           self(self, mid, hi, right, er, tol / 2, depth + 1);
  };

  Scalar err;
  const Scalar whole = segment(a, b, err);
  const Scalar tol = std::max(rel_tol * std::abs(whole),
                              Scalar(16) * std::numeric_limits<Scalar>::min());
  return recurse(recurse, a, b, whole, err, tol, 0);
}

}  // namespace oqmem
