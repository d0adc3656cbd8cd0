#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

// Fixed-particle-number Fock sectors for a handful of spinful sites. Spin
// orbital 2*site is spin up, 2*site+1 spin down.

namespace oqmem::fock {

using Determinant = std::uint32_t;

constexpr int orbital(int site, int spin) { return 2 * site + spin; }

/// A set of sites constrained to hold a fixed number of electrons.
struct Group {
  std::vector<int> sites;
  int electrons = 0;
};

struct Op {
  bool create;
  int orbital;
};

/// Applies an operator string right-to-left. Returns the resulting
/// determinant and sign, or nothing if the string annihilates the state.
std::optional<std::pair<Determinant, int>> apply(Determinant det, std::span<const Op> ops);

class Sector {
 public:
  /// Throws DimensionError if the sector would exceed max_dimension.
  Sector(int n_sites, std::vector<Group> groups, int two_sz, std::size_t max_dimension);

  static std::size_t count(int n_sites, const std::vector<Group>& groups, int two_sz);

  std::size_t size() const { return dets_.size(); }
  int n_sites() const { return n_sites_; }
  Determinant det(std::size_t i) const { return dets_[i]; }
  std::optional<std::size_t> index(Determinant d) const;
  int occupation(std::size_t i, int site) const;

  /// Σ_σ (c†_aσ c_bσ + c†_bσ c_aσ).
  Eigen::MatrixXd hopping(int a, int b) const;
  /// Diagonal matrix of f(determinant).
  template <typename Fn>
  Eigen::MatrixXd diagonal(Fn&& f) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
    for (std::size_t i = 0; i < size(); ++i) m(i, i) = f(dets_[i]);
    return m;
  }
  /// Total spin S² of the electrons on the given sites.
  Eigen::MatrixXd spin_squared(std::span<const int> sites) const;

 private:
  static bool admissible(Determinant d, int n_sites, const std::vector<Group>& groups,
                         int two_sz);
  Eigen::MatrixXd from_strings(const std::vector<std::pair<double, std::vector<Op>>>& terms) const;

  int n_sites_;
  std::vector<Determinant> dets_;
};

}  // namespace oqmem::fock
