#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pinn/autodiff.hpp"
#include "pinn/error.hpp"

using namespace pinn;
using namespace pinn::ad;

namespace {

double eval1(Graph& g, Var out, std::vector<double> inputs) {
  return evaluate(g, std::span<const Var>(&out, 1), {inputs, {}})[0];
}

// Deterministic random expression over three inputs; all operations are
// kept on smooth, bounded branches so central differences are meaningful.
Var random_expr(Graph& g, std::span<const Var> x, std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 10);
  if (depth == 0) {
    std::uniform_int_distribution<int> leaf(0, 3);
    const int l = leaf(rng);
    if (l == 3) return g.constant(std::uniform_real_distribution<double>(-2, 2)(rng));
    return x[static_cast<std::size_t>(l)];
  }
  const Var a = random_expr(g, x, rng, depth - 1);
  switch (pick(rng)) {
    case 0: return a + random_expr(g, x, rng, depth - 1);
    case 1: return a - random_expr(g, x, rng, depth - 1);
    case 2: return a * random_expr(g, x, rng, depth - 1);
    case 3: return a / (1.5 + square(random_expr(g, x, rng, depth - 1)));
    case 4: return -a;
    case 5: return tanh(a);
    case 6: return sigmoid(a);
    case 7: return silu(a);
    case 8: return exp(tanh(a));
    case 9: return powi(tanh(a), 3);
    default: return 0.5 * a;
  }
}

}  // namespace

TEST(Autodiff, PrimitiveFirstDerivativesMatchFiniteDifferences) {
  const std::vector<std::pair<const char*, GraphBuilder>> cases = {
      {"add", [](Graph&, std::span<const Var> x) { return x[0] + x[1]; }},
      {"sub", [](Graph&, std::span<const Var> x) { return x[0] - x[1]; }},
      {"mul", [](Graph&, std::span<const Var> x) { return x[0] * x[1]; }},
      {"div", [](Graph&, std::span<const Var> x) { return x[0] / x[1]; }},
      {"neg", [](Graph&, std::span<const Var> x) { return -x[0]; }},
      {"powi", [](Graph&, std::span<const Var> x) { return powi(x[0], 4); }},
      {"powi-neg", [](Graph&, std::span<const Var> x) { return powi(x[1], -2); }},
      {"exp", [](Graph&, std::span<const Var> x) { return exp(x[0]); }},
      {"tanh", [](Graph&, std::span<const Var> x) { return tanh(x[0]); }},
      {"sigmoid", [](Graph&, std::span<const Var> x) { return sigmoid(x[0]); }},
      {"silu", [](Graph&, std::span<const Var> x) { return silu(x[0]); }},
      {"max", [](Graph&, std::span<const Var> x) { return max(x[0], 0.0) * x[1]; }},
      {"min", [](Graph&, std::span<const Var> x) { return min(x[0], 2.0) * x[1]; }},
      {"bspline",
       [](Graph& g, std::span<const Var> x) {
         const auto k = g.register_knots(KnotVector::uniform(5, 3, -1.0, 1.0));
         return bspline(x[0], k, 3, 3);
       }},
  };
  const std::vector<double> point{0.37, 1.3};
  for (const auto& [name, f] : cases)
    EXPECT_LE(finite_difference_check(f, point, 1e-6), 1e-7) << name;
}

TEST(Autodiff, RandomComposedExpressionsMatchFiniteDifferences) {
  std::mt19937_64 pts(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    const int depth = 1 + c % 6;
    const GraphBuilder f = [c, depth](Graph& g, std::span<const Var> x) {
      std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(c));
      return random_expr(g, x, rng, depth);
    };
    const std::vector<double> p{u(pts), u(pts), u(pts)};
    EXPECT_LE(finite_difference_check(f, p, 1e-5), 1e-5) << "case " << c;
  }
}

TEST(Autodiff, NestedSecondDerivativesOfPolynomialAreExact) {
  Graph g;
  const Var x = g.input(0), y = g.input(1);
  const Var f = powi(x, 3) * square(y) + 2.0 * x * y - 5.0 * powi(y, 4);
  const Var fx = derivative(f, x);
  const Var fy = derivative(f, y);
  const Var fxx = derivative(fx, x);
  const Var fxy = derivative(fx, y);
  const Var fyy = derivative(fy, y);
  const Var fxxx = derivative(fxx, x);
  const double X = 0.7, Y = -1.3;
  const Var outs[] = {fxx, fxy, fyy, fxxx};
  const std::vector<double> in{X, Y};
  const auto v = evaluate(g, outs, {in, {}});
  EXPECT_NEAR(v[0], 6 * X * Y * Y, 1e-9);
  EXPECT_NEAR(v[1], 6 * X * X * Y + 2.0, 1e-9);
  EXPECT_NEAR(v[2], 2 * X * X * X - 60 * Y * Y, 1e-9);
  EXPECT_NEAR(v[3], 6 * Y * Y, 1e-9);
}

TEST(Autodiff, ConstantFoldingAndDeduplication) {
  Graph g;
  const Var x = g.input(0);
  EXPECT_EQ((x + 0.0).id(), x.id());
  EXPECT_EQ((x * 1.0).id(), x.id());
  EXPECT_TRUE(g.is_constant((x * 0.0).id()));
  EXPECT_EQ(g.constant(2.5).id(), g.constant(2.5).id());
  EXPECT_EQ(g.input(0).id(), x.id());
  EXPECT_EQ(g.parameter(3).id(), g.parameter(3).id());
  const Var c = g.constant(2.0) * g.constant(3.0);
  ASSERT_TRUE(g.is_constant(c.id()));
  EXPECT_EQ(g.node(c.id()).c, 6.0);
}

TEST(Autodiff, UnreachableLeafHasZeroDerivative) {
  Graph g;
  const Var x = g.input(0), y = g.input(1);
  const Var d = derivative(square(x), y);
  ASSERT_TRUE(g.is_constant(d.id()));
  EXPECT_EQ(g.node(d.id()).c, 0.0);
}

TEST(Autodiff, UnboundInputThrows) {
  Graph g;
  const Var f = g.input(0) * g.input(2);
  const std::vector<double> in{1.0, 2.0};
  try {
    eval1(g, f, in);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("unbound input", 0), 0u) << e.what();
  }
}

TEST(Autodiff, NonFiniteValueNamesTheOffendingNode) {
  Graph g;
  const Var x = g.input(0);
  const Var big = exp(x);
  const Var out = tanh(big) + big;
  try {
    eval1(g, out, {1000.0});
    FAIL() << "expected an exception";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.node(), big.id());
    EXPECT_EQ(std::string(e.what()).rfind("non-finite value", 0), 0u) << e.what();
  }
}

TEST(Autodiff, InvalidStepThrows) {
  const GraphBuilder f = [](Graph&, std::span<const Var> x) { return x[0]; };
  const std::vector<double> p{1.0};
  EXPECT_THROW(finite_difference_check(f, p, 0.0), Error);
  EXPECT_THROW(finite_difference_check(f, p, -1e-3), Error);
}

TEST(Autodiff, ProgramBackpropMatchesSymbolicGradient) {
  Graph g;
  const Var x = g.input(0);
  const Var w[3] = {g.parameter(0), g.parameter(1), g.parameter(2)};
  const Var h = tanh(w[0] * x + w[1]);
  const Var f = w[2] * h * h + exp(0.1 * w[0]) * x;
  const auto grads = gradient(f, w);

  const std::vector<double> in{0.8};
  const std::vector<double> par{0.3, -0.2, 1.7};
  const auto expect = evaluate(g, grads, {in, par});

  Program prog(g, std::span<const Var>(&f, 1));
  EXPECT_EQ(prog.params_needed(), 3u);
  EXPECT_EQ(prog.inputs_needed(), 1u);
  prog.run({in, par});
  std::vector<double> pg(3, 0.0), ig(1, 0.0);
  const double seed = 2.0;
  prog.backprop(std::span<const double>(&seed, 1), pg, ig);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(pg[i], 2.0 * expect[i], 1e-14);
  const double dfdx = evaluate(g, std::vector<Var>{derivative(f, x)}, {in, par})[0];
  EXPECT_NEAR(ig[0], 2.0 * dfdx, 1e-14);

  // Backprop accumulates.
  prog.backprop(std::span<const double>(&seed, 1), pg);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(pg[i], 4.0 * expect[i], 1e-13);
}

TEST(Autodiff, EvaluationIsDeterministic) {
  Graph g;
  const Var x = g.input(0), y = g.input(1);
  const Var f = silu(x * y) / (1.0 + square(y)) + sigmoid(x - y);
  const std::vector<double> in{0.123, -4.56};
  const double a = eval1(g, f, in);
  const double b = eval1(g, f, in);
  EXPECT_EQ(a, b);
}

TEST(Autodiff, SpecValueExamples) {
  Graph g;
  const Var x = g.input(0);
  EXPECT_EQ(eval1(g, tanh(x), {0.0}), 0.0);
  EXPECT_EQ(eval1(g, silu(x), {0.0}), 0.0);
  EXPECT_EQ(eval1(g, x * x + 3.0, {2.0}), 7.0);
  EXPECT_EQ(eval1(g, derivative(tanh(x), x), {0.0}), 1.0);
  EXPECT_EQ(eval1(g, derivative(derivative(powi(x, 3), x), x), {2.0}), 12.0);
  EXPECT_EQ(eval1(g, derivative(silu(x), x), {0.0}), 0.5);
  EXPECT_NEAR(eval1(g, derivative(derivative(powi(x, 4), x), x), {1.0}), 12.0, 1e-12);
}

TEST(Autodiff, FiniteDifferenceCheckExamples) {
  const std::vector<double> one{1.0}, p3{0.3}, any{-0.7};
  EXPECT_LT(finite_difference_check(
                [](Graph&, std::span<const Var> x) { return square(x[0]); }, one, 1e-5),
            1e-7);
  EXPECT_LT(finite_difference_check(
                [](Graph&, std::span<const Var> x) { return tanh(x[0]); }, p3, 1e-5),
            1e-6);
  EXPECT_EQ(finite_difference_check(
                [](Graph& g, std::span<const Var>) { return g.constant(4.0); }, any, 1e-5),
            0.0);
}

TEST(Autodiff, PrimitivesAgreeWithFiniteDifferencesOnRandomPoints) {
  const std::vector<GraphBuilder> prims = {
      [](Graph&, std::span<const Var> x) { return x[0] * x[0] + x[0]; },
      [](Graph&, std::span<const Var> x) { return x[0] / (3.0 + x[0]); },
      [](Graph&, std::span<const Var> x) { return exp(x[0]); },
      [](Graph&, std::span<const Var> x) { return tanh(x[0]); },
      [](Graph&, std::span<const Var> x) { return sigmoid(x[0]); },
      [](Graph&, std::span<const Var> x) { return silu(x[0]); },
      [](Graph&, std::span<const Var> x) { return powi(x[0], 5); },
      [](Graph&, std::span<const Var> x) { return -x[0]; },
      [](Graph&, std::span<const Var> x) { return 2.0 - x[0]; },
  };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (std::size_t k = 0; k < prims.size(); ++k)
    for (int n = 0; n < 20; ++n) {
      const std::vector<double> p{u(rng)};
      EXPECT_LE(finite_difference_check(prims[k], p, 1e-5), 1e-5) << k << " at " << p[0];
    }
}

TEST(Autodiff, GradientIsLinear) {
  Graph g;
  const Var x = g.input(0), y = g.input(1);
  const Var f = tanh(x * y), h = exp(x) - square(y);
  const Var wrt[] = {x, y};
  const auto gf = gradient(f, wrt), gh = gradient(h, wrt);
  const auto gl = gradient(2.5 * f + (-1.5) * h, wrt);
  const std::vector<double> in{0.4, -0.9};
  const Var outs[] = {gf[0], gf[1], gh[0], gh[1], gl[0], gl[1]};
  const auto v = evaluate(g, outs, {in, {}});
  EXPECT_NEAR(v[4], 2.5 * v[0] - 1.5 * v[2], 1e-12);
  EXPECT_NEAR(v[5], 2.5 * v[1] - 1.5 * v[3], 1e-12);
}
