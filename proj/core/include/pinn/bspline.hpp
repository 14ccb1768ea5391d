#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pinn {

/// Non-decreasing knot sequence for B-splines of a fixed degree.
///
/// The "interior span" is [knots[degree], knots[size-1-degree]]; on it the
/// degree-`degree` basis functions form a partition of unity. The last
/// interior knot is treated as closed on the left span, so the partition
/// also holds at the right end of the interior span.
class KnotVector {
 public:
  KnotVector(std::vector<double> knots, int degree);

  /// g uniform intervals over [lo, hi] plus `degree` extension knots on each
  /// side with the same spacing; g + 2*degree + 1 knots in total.
  static KnotVector uniform(int grid, int degree, double lo, double hi);

  int degree() const noexcept { return degree_; }
  std::size_t size() const noexcept { return knots_.size(); }
  double operator[](std::size_t i) const noexcept { return knots_[i]; }
  std::span<const double> knots() const noexcept { return knots_; }

  /// Number of degree-`degree` basis functions, size() - degree - 1.
  std::size_t basis_count() const noexcept;
  double interior_lo() const noexcept { return knots_[degree_]; }
  double interior_hi() const noexcept {
    return knots_[knots_.size() - 1 - degree_];
  }

  /// Degree-0 indicator of span [knots[j], knots[j+1]) with the closing
  /// convention at the last interior knot.
  bool span_contains(std::size_t j, double x) const noexcept;

 private:
  std::vector<double> knots_;
  int degree_;
};

/// B_i^d(x) by the Cox-de Boor recursion. Terms over zero-length knot spans
/// contribute 0. Requires i + d + 1 < knots.size(); throws "invalid basis
/// index" otherwise. `d` may be lower than knots.degree() (used for
/// derivatives).
double bspline_basis(double x, std::size_t i, int d, const KnotVector& knots);

/// d/dx B_i^d(x) = d/(k[i+d]-k[i]) B_i^{d-1} - d/(k[i+d+1]-k[i+1]) B_{i+1}^{d-1}.
double bspline_basis_derivative(double x, std::size_t i, int d,
                                const KnotVector& knots);

}  // namespace pinn
