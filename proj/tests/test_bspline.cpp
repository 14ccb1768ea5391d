#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pinn/autodiff.hpp"
#include "pinn/bspline.hpp"
#include "pinn/error.hpp"

using namespace pinn;

namespace {

constexpr int kGrid = 5;
constexpr int kOrder = 3;

KnotVector default_knots() { return KnotVector::uniform(kGrid, kOrder, -1.0, 1.0); }

struct Oracle {
  std::size_t i;
  double x, value, d1, d2;
};

// scipy.interpolate.BSpline.basis_element on the uniform g=5, d=3 knot
// vector over [-1, 1] (knots -2.2, -1.8, ..., 2.2).
const Oracle kOracle[] = {
    {0, -0.95, 0.11165364583333331, -0.95703124999999978, 5.4687499999999991},
    {0, 0.0, 0, 0, 0},
    {3, -0.95, 0.00032552083333333418, 0.019531250000000031, 0.78125000000000044},
    {3, -0.3, 0.61197916666666663, 1.0156250000000004, -7.8124999999999964},
    {3, 0.0, 0.47916666666666674, -1.5624999999999991, -3.1250000000000027},
    {3, 0.37, 0.031684895833333372, -0.41328125000000027, 3.5937500000000009},
    {3, 0.99, 0, 0, 0},
    {5, 0.0, 0.020833333333333311, 0.31249999999999978, 3.1249999999999982},
    {5, 0.37, 0.43109635416666658, 1.6351562500000003, -1.7187499999999947},
    {5, 0.99, 0.17947135416666687, -1.3101562500000004, 5.7812499999999964},
    {7, 0.37, 0, 0, 0},
    {7, 0.99, 0.15447656249999983, 1.1882812499999991, 6.0937499999999964},
};

double second_derivative(double x, std::size_t i, const KnotVector& k) {
  ad::Graph g;
  const auto id = g.register_knots(k);
  const ad::Var v = g.input(0);
  const ad::Var b = ad::bspline(v, id, i, kOrder);
  const ad::Var d2 = ad::derivative(ad::derivative(b, v), v);
  const std::vector<double> in{x};
  return ad::evaluate(g, std::vector<ad::Var>{d2}, {in, {}})[0];
}

}  // namespace

TEST(BSpline, UniformKnotLayout) {
  const auto k = default_knots();
  ASSERT_EQ(k.size(), static_cast<std::size_t>(kGrid + 2 * kOrder + 1));
  EXPECT_EQ(k.basis_count(), static_cast<std::size_t>(kGrid + kOrder));
  EXPECT_EQ(k.interior_lo(), -1.0);
  EXPECT_EQ(k.interior_hi(), 1.0);
  EXPECT_NEAR(k[0], -2.2, 1e-15);
  EXPECT_NEAR(k[k.size() - 1], 2.2, 1e-15);
}

TEST(BSpline, MatchesReferenceImplementation) {
  const auto k = default_knots();
  for (const auto& o : kOracle) {
    EXPECT_NEAR(bspline_basis(o.x, o.i, kOrder, k), o.value, 1e-13) << o.i << " " << o.x;
    EXPECT_NEAR(bspline_basis_derivative(o.x, o.i, kOrder, k), o.d1, 1e-12)
        << o.i << " " << o.x;
    EXPECT_NEAR(second_derivative(o.x, o.i, k), o.d2, 1e-10) << o.i << " " << o.x;
  }
}

TEST(BSpline, PartitionOfUnityOnInterior) {
  const auto k = default_knots();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 1000; ++n) {
    const double x = n == 0 ? -1.0 : n == 1 ? 1.0 : u(rng);
    double s = 0.0;
    for (std::size_t i = 0; i < k.basis_count(); ++i) s += bspline_basis(x, i, kOrder, k);
    EXPECT_NEAR(s, 1.0, 1e-12) << x;
  }
}

TEST(BSpline, LocalSupportIsExact) {
  const auto k = default_knots();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (int n = 0; n < 2000; ++n) {
    const double x = u(rng);
    for (std::size_t i = 0; i < k.basis_count(); ++i) {
      const double b = bspline_basis(x, i, kOrder, k);
      if (x < k[i] || x > k[i + kOrder + 1]) EXPECT_EQ(b, 0.0) << i << " " << x;
      else EXPECT_GE(b, 0.0);
    }
  }
}

TEST(BSpline, DerivativesContinuousAcrossKnots) {
  const auto k = default_knots();
  const double eps = 1e-9;
  for (std::size_t j = 1; j + 1 < k.size(); ++j) {
    const double x = k[j];
    for (std::size_t i = 0; i < k.basis_count(); ++i) {
      const double l1 = bspline_basis_derivative(x - eps, i, kOrder, k);
      const double r1 = bspline_basis_derivative(x + eps, i, kOrder, k);
      EXPECT_NEAR(l1, r1, 1e-6) << "knot " << j << " basis " << i;
      const double l2 = second_derivative(x - eps, i, k);
      const double r2 = second_derivative(x + eps, i, k);
      EXPECT_NEAR(l2, r2, 1e-6) << "knot " << j << " basis " << i;
    }
  }
}

TEST(BSpline, RightEndOfInteriorBelongsToLastSpan) {
  const auto k = default_knots();
  const std::size_t end = k.size() - 1 - kOrder;
  EXPECT_TRUE(k.span_contains(end - 1, 1.0));
  EXPECT_FALSE(k.span_contains(end, 1.0));
  EXPECT_NEAR(bspline_basis(1.0, k.basis_count() - 1, kOrder, k), 1.0 / 6.0, 1e-15);
}

TEST(BSpline, InvalidBasisIndexThrows) {
  const auto k = default_knots();
  EXPECT_THROW(bspline_basis(0.0, k.basis_count(), kOrder, k), Error);
  try {
    bspline_basis(0.0, 100, kOrder, k);
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("invalid basis index", 0), 0u);
  }
}
