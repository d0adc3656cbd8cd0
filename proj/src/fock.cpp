#include "oqmem/fock.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "oqmem/errors.hpp"

namespace oqmem::fock {

std::optional<std::pair<Determinant, int>> apply(Determinant det, std::span<const Op> ops) {
  int sign = 1;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const Determinant bit = Determinant{1} << it->orbital;
    const bool occupied = det & bit;
    if (it->create == occupied) return std::nullopt;
    if (std::popcount(det & (bit - 1)) % 2) sign = -sign;
    det ^= bit;
  }
  return std::make_pair(det, sign);
}

namespace {

int site_count(Determinant d, int site) {
  return ((d >> orbital(site, 0)) & 1u) + ((d >> orbital(site, 1)) & 1u);
}

}  // namespace

bool Sector::admissible(Determinant d, int n_sites, const std::vector<Group>& groups,
                        int two_sz) {
  int up = 0, down = 0;
  for (int s = 0; s < n_sites; ++s) {
    up += (d >> orbital(s, 0)) & 1u;
    down += (d >> orbital(s, 1)) & 1u;
  }
  if (up - down != two_sz) return false;
  int grouped = 0;
  for (const auto& g : groups) {
    int n = 0;
    for (int s : g.sites) n += site_count(d, s);
    if (n != g.electrons) return false;
    grouped += n;
  }
  return grouped == up + down;
}

std::size_t Sector::count(int n_sites, const std::vector<Group>& groups, int two_sz) {
  std::size_t n = 0;
  const Determinant end = Determinant{1} << (2 * n_sites);
  for (Determinant d = 0; d < end; ++d)
    if (admissible(d, n_sites, groups, two_sz)) ++n;
  return n;
}

Sector::Sector(int n_sites, std::vector<Group> groups, int two_sz, std::size_t max_dimension)
    : n_sites_(n_sites) {
  if (n_sites < 1 || n_sites > 12) throw DimensionError("unsupported site count");
  const std::size_t dim = count(n_sites, groups, two_sz);
  if (dim > max_dimension)
    throw DimensionError("sector dimension " + std::to_string(dim) + " exceeds limit " +
                         std::to_string(max_dimension));
  dets_.reserve(dim);
  const Determinant end = Determinant{1} << (2 * n_sites);
  for (Determinant d = 0; d < end; ++d)
    if (admissible(d, n_sites, groups, two_sz)) dets_.push_back(d);
}

std::optional<std::size_t> Sector::index(Determinant d) const {
  auto it = std::lower_bound(dets_.begin(), dets_.end(), d);
  if (it == dets_.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dets_.begin());
}

int Sector::occupation(std::size_t i, int site) const { return site_count(dets_[i], site); }

Eigen::MatrixXd Sector::from_strings(
    const std::vector<std::pair<double, std::vector<Op>>>& terms) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
  for (std::size_t col = 0; col < size(); ++col) {
    for (const auto& [coef, ops] : terms) {
      auto r = fock::apply(dets_[col], std::span<const Op>(ops));
      if (!r) continue;
      auto row = index(r->first);
      if (!row) continue;
      m(*row, col) += coef * r->second;
    }
  }
  return m;
}

Eigen::MatrixXd Sector::hopping(int a, int b) const {
  std::vector<std::pair<double, std::vector<Op>>> terms;
  for (int s = 0; s < 2; ++s) {
    terms.push_back({1.0, {{true, orbital(a, s)}, {false, orbital(b, s)}}});
    terms.push_back({1.0, {{true, orbital(b, s)}, {false, orbital(a, s)}}});
  }
  return from_strings(terms);
}

Eigen::MatrixXd Sector::spin_squared(std::span<const int> sites) const {
  // S² = S₋S₊ + S_z² + S_z
  std::vector<std::pair<double, std::vector<Op>>> terms;
  for (int i : sites)
    for (int j : sites)
      terms.push_back({1.0,
                       {{true, orbital(i, 1)}, {false, orbital(i, 0)},
                        {true, orbital(j, 0)}, {false, orbital(j, 1)}}});
  Eigen::MatrixXd m = from_strings(terms);
  for (std::size_t k = 0; k < size(); ++k) {
    double sz = 0;
    for (int s : sites)
      sz += 0.5 * (double((dets_[k] >> orbital(s, 0)) & 1u) -
                   double((dets_[k] >> orbital(s, 1)) & 1u));
    m(k, k) += sz * sz + sz;
  }
  return m;
}

}  // namespace oqmem::fock
