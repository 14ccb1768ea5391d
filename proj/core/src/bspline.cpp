#include "pinn/bspline.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "pinn/error.hpp"

namespace pinn {

KnotVector::KnotVector(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
  if (degree_ < 0) throw Error("invalid knot vector: negative degree");
  if (knots_.size() < static_cast<std::size_t>(2 * degree_ + 2))
    throw Error("invalid knot vector: need at least 2*degree+2 knots");
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    throw Error("invalid knot vector: knots must be non-decreasing");
}

KnotVector KnotVector::uniform(int grid, int degree, double lo, double hi) {
  if (grid < 1) throw Error("invalid knot vector: grid size must be >= 1");
  if (!(hi > lo)) throw Error("invalid knot vector: empty range");
  const double h = (hi - lo) / grid;
  std::vector<double> k(static_cast<std::size_t>(grid + 2 * degree + 1));
  for (std::size_t j = 0; j < k.size(); ++j)
    k[j] = lo + (static_cast<double>(j) - degree) * h;
  // Pin the interior end points so the range is reproduced exactly.
  k[static_cast<std::size_t>(degree)] = lo;
  k[static_cast<std::size_t>(degree + grid)] = hi;
  return KnotVector(std::move(k), degree);
}

std::size_t KnotVector::basis_count() const noexcept {
  return knots_.size() - static_cast<std::size_t>(degree_) - 1;
}

bool KnotVector::span_contains(std::size_t j, double x) const noexcept {
  if (j + 1 >= knots_.size()) return false;
  const double a = knots_[j];
  const double b = knots_[j + 1];
  const std::size_t end = knots_.size() - 1 - static_cast<std::size_t>(degree_);
  if (x == knots_[end] && a < b) {
    if (j + 1 == end) return true;
    if (j == end) return false;
  }
  return a <= x && x < b;
}

namespace {

constexpr int kMaxDegree = 16;

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

double bspline_basis(double x, std::size_t i, int d, const KnotVector& knots) {
  if (d < 0 || d > kMaxDegree || i + static_cast<std::size_t>(d) + 1 >= knots.size())
    throw Error("invalid basis index: i=" + std::to_string(i) +
                " d=" + std::to_string(d) +
                " knots=" + std::to_string(knots.size()));
  // Triangular Cox-de Boor table over spans i..i+d.
  std::array<double, kMaxDegree + 1> n{};
  for (int j = 0; j <= d; ++j)
    n[j] = knots.span_contains(i + j, x) ? 1.0 : 0.0;
  for (int k = 1; k <= d; ++k) {
    for (int j = 0; j <= d - k; ++j) {
      const std::size_t s = i + j;
      const double left = ratio(x - knots[s], knots[s + k] - knots[s]);
      const double right =
          ratio(knots[s + k + 1] - x, knots[s + k + 1] - knots[s + 1]);
      n[j] = left * n[j] + right * n[j + 1];
    }
  }
  return n[0];
}

double bspline_basis_derivative(double x, std::size_t i, int d,
                                const KnotVector& knots) {
  if (d < 0 || i + static_cast<std::size_t>(d) + 1 >= knots.size())
    throw Error("invalid basis index: i=" + std::to_string(i) +
                " d=" + std::to_string(d));
  if (d == 0) return 0.0;
  const double c1 = ratio(d, knots[i + d] - knots[i]);
  const double c2 = ratio(d, knots[i + d + 1] - knots[i + 1]);
  double out = 0.0;
  if (c1 != 0.0) out += c1 * bspline_basis(x, i, d - 1, knots);
  if (c2 != 0.0) out -= c2 * bspline_basis(x, i + 1, d - 1, knots);
  return out;
}

}  // namespace pinn
