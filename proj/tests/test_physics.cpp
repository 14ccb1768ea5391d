#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pinn/error.hpp"
#include "pinn/physics.hpp"

using namespace pinn;
using namespace pinn::physics;
using sampling::CaseDefinition;
using sampling::CaseKind;
using sampling::Point;

namespace {

FieldBuilder constant_fields(double u, double v, double p) {
  return [=](ad::Graph& g, ad::Var, ad::Var, ad::Var) {
    return Fields{g.constant(u), g.constant(v), g.constant(p)};
  };
}

std::array<double, 3> field_values(const FieldBuilder& f, const Point& pt,
                                   std::span<const double> params) {
  ad::Graph g;
  const auto fs = f(g, g.input(0), g.input(1), g.input(2));
  const ad::Var outs[3] = {fs.u, fs.v, fs.p};
  const auto v = ad::evaluate(g, outs, {pt, params});
  return {v[0], v[1], v[2]};
}

nets::NetworkSpec small_spec(nets::Family f) {
  nets::NetworkSpec s;
  s.layers = {3, 8, 8, 3};
  s.family = f;
  return s;
}

const LossTerm& term(const std::vector<LossTerm>& ts, const std::string& tag) {
  for (const auto& t : ts)
    if (t.tag == tag) return t;
  throw std::runtime_error("no term " + tag);
}

}  // namespace

TEST(Residuals, ConstantFieldIsExactSolution) {
  const auto r = residuals_at(constant_fields(0, 0, 0), {1.0, 0.3, 0.4}, 1000.0, 0.01);
  EXPECT_EQ(r.r_u, 0.0);
  EXPECT_EQ(r.r_v, 0.0);
  EXPECT_EQ(r.r_c, 0.0);
}

TEST(Residuals, ShearFieldByHand) {
  const FieldBuilder f = [](ad::Graph& g, ad::Var, ad::Var x, ad::Var y) {
    return Fields{y, x, g.constant(0.0)};
  };
  for (const Point& p : {Point{0.0, 0.3, -0.7}, Point{2.0, 1.5, 0.25}}) {
    const auto r = residuals_at(f, p, 1.0, 0.0);
    EXPECT_DOUBLE_EQ(r.r_u, p[1]);
    EXPECT_DOUBLE_EQ(r.r_v, p[2]);
    EXPECT_EQ(r.r_c, 0.0);
  }
}

TEST(Residuals, SteadyPoiseuilleManufacturedSolution) {
  const auto c = sampling::make_case(CaseKind::Poiseuille);
  const double h = c.domain.hi[2], U = 0.3;
  const double dpdx = -2.0 * c.rho * c.nu * U / (h * h);
  const FieldBuilder f = [&](ad::Graph& g, ad::Var, ad::Var x, ad::Var y) {
    return Fields{U * (1.0 - ad::square(y / h)), g.constant(0.0), dpdx * x};
  };
  const auto pts = sampling::sample_interior(c, 100, 5);
  for (const auto& p : pts.rows) {
    const auto r = residuals_at(f, p, c.rho, c.nu);
    EXPECT_LE(std::abs(r.r_u), 1e-8);
    EXPECT_LE(std::abs(r.r_v), 1e-8);
    EXPECT_LE(std::abs(r.r_c), 1e-8);
  }
}

TEST(Residuals, NetworkResidualsMatchFiniteDifferenceOracle) {
  const auto c = sampling::make_case(CaseKind::Cavity);
  for (auto fam : {nets::Family::TanhMlp, nets::Family::Kan}) {
    const auto params = nets::init_params(small_spec(fam), 21);
    const auto f = network_fields(params, case_scaling(c, params.spec));
    const auto pts = sampling::sample_interior(c, 20, 9);
    const double h = 1e-4;
    for (const auto& p : pts.rows) {
      const auto at = [&](double dt, double dx, double dy) {
        return field_values(f, {p[0] + dt, p[1] + dx, p[2] + dy}, params.values);
      };
      const auto c0 = at(0, 0, 0);
      std::array<std::array<double, 3>, 3> d1{}, d2{};
      const double shift[3][3] = {{h, 0, 0}, {0, h, 0}, {0, 0, h}};
      for (int a = 0; a < 3; ++a) {
        const auto fp = at(shift[a][0], shift[a][1], shift[a][2]);
        const auto fm = at(-shift[a][0], -shift[a][1], -shift[a][2]);
        for (int k = 0; k < 3; ++k) {
          d1[a][k] = (fp[k] - fm[k]) / (2 * h);
          d2[a][k] = (fp[k] - 2 * c0[k] + fm[k]) / (h * h);
        }
      }
      // d1[axis][field]: axis 0=t 1=x 2=y; field 0=u 1=v 2=p
      const double ru = d1[0][0] + c0[0] * d1[1][0] + c0[1] * d1[2][0] + d1[1][2] / c.rho -
                        c.nu * (d2[1][0] + d2[2][0]);
      const double rv = d1[0][1] + c0[0] * d1[1][1] + c0[1] * d1[2][1] + d1[2][2] / c.rho -
                        c.nu * (d2[1][1] + d2[2][1]);
      const double rc = d1[1][0] + d1[2][1];
      const auto r = residuals_at(f, p, c.rho, c.nu, params.values);
      EXPECT_NEAR(r.r_u, ru, 1e-3 * (std::abs(ru) + 1e-4));
      EXPECT_NEAR(r.r_v, rv, 1e-3 * (std::abs(rv) + 1e-4));
      EXPECT_NEAR(r.r_c, rc, 1e-3 * (std::abs(rc) + 1e-4));
    }
  }
}

TEST(Residuals, NonFiniteResidualNamesThePoint) {
  const FieldBuilder f = [](ad::Graph& g, ad::Var, ad::Var x, ad::Var) {
    return Fields{ad::exp(ad::exp(ad::exp(x))), g.constant(0.0), g.constant(0.0)};
  };
  try {
    residuals_at(f, {0.5, 7.0, 0.25}, 1.0, 0.1);
    FAIL() << "expected residual blow-up";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_EQ(msg.rfind("residual blow-up", 0), 0u);
    EXPECT_NE(msg.find("x=7"), std::string::npos) << msg;
  }
}

TEST(Terms, CaseTermLists) {
  const std::pair<CaseKind, std::size_t> expect[] = {{CaseKind::Cavity, 6},
                                                     {CaseKind::Poiseuille, 4},
                                                     {CaseKind::BfsSlip, 5},
                                                     {CaseKind::BfsNoSlip, 3}};
  for (const auto& [k, n] : expect) {
    const auto terms = case_terms(sampling::make_case(k));
    ASSERT_EQ(terms.size(), n);
    EXPECT_EQ(terms.front().tag, "phy");
    EXPECT_EQ(terms.front().role, "interior");
    EXPECT_EQ(terms.back().tag, "initial");
  }
  const auto cav = case_terms(sampling::make_case(CaseKind::Cavity));
  EXPECT_EQ(cav[4].tag, "up");
  EXPECT_EQ(cav[4].role, "boundary:up");
}

TEST(Terms, ZeroNetOnCavity) {
  const auto c = sampling::make_case(CaseKind::Cavity);
  const auto params = nets::zero_params(small_spec(nets::Family::TanhMlp));
  const auto batches = sampling::sample_case(c, {64, 32, 16}, 1);
  const auto terms = assemble_losses(c, params, batches);
  ASSERT_EQ(terms.size(), 6u);
  EXPECT_EQ(term(terms, "up").aggregate, 1.0);
  for (double v : term(terms, "up").pointwise) EXPECT_EQ(v, 1.0);
  for (const char* tag : {"phy", "left", "right", "bottom", "initial"})
    EXPECT_EQ(term(terms, tag).aggregate, 0.0) << tag;
}

TEST(Terms, PlugFlowSatisfiesNoSlipStepData) {
  const auto c = sampling::make_case(CaseKind::BfsNoSlip);
  auto params = nets::zero_params(small_spec(nets::Family::TanhMlp));
  params.view("2.bias")[0] = c.inflow;
  const auto batches = sampling::sample_case(c, {64, 32, 16}, 2);
  for (const auto& t : assemble_losses(c, params, batches))
    EXPECT_NEAR(t.aggregate, 0.0, 1e-15) << t.tag;
}

TEST(Terms, PoiseuilleWallVanishesForZeroPressure) {
  const auto c = sampling::make_case(CaseKind::Poiseuille);
  const auto params = nets::zero_params(small_spec(nets::Family::Kan));
  const auto batches = sampling::sample_case(c, {16, 16, 16}, 3);
  EXPECT_EQ(term(assemble_losses(c, params, batches), "wall").aggregate, 0.0);
}

TEST(Terms, MissingBatchAndUnknownTag) {
  const auto c = sampling::make_case(CaseKind::Poiseuille);
  const auto params = nets::zero_params(small_spec(nets::Family::TanhMlp));
  auto batches = sampling::sample_case(c, {16, 16, 16}, 3);
  batches.pop_back();
  try {
    assemble_losses(c, params, batches);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("incomplete batch set", 0), 0u);
  }
  ad::Graph g;
  const auto fs = constant_fields(0, 0, 0)(g, g.input(0), g.input(1), g.input(2));
  EXPECT_THROW(pointwise_term(c, "lid", fs, g.input(0), g.input(1), g.input(2)), Error);
}

TEST(Terms, ProgramGradientMatchesFiniteDifference) {
  const auto c = sampling::make_case(CaseKind::Cavity);
  auto params = nets::init_params(small_spec(nets::Family::Kan), 4);
  auto progs = compile_terms(c, network_fields(params, case_scaling(c, params.spec)));
  const auto pts = sampling::sample_interior(c, 8, 6);
  std::vector<double> w(pts.rows.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 + 0.1 * static_cast<double>(i);
  std::vector<double> grad(params.values.size(), 0.0);
  auto& phy = progs[0].program;
  evaluate_pointwise(phy, pts, params.values, w, 1.0, grad);
  const auto objective = [&](const std::vector<double>& theta) {
    const auto pw = evaluate_pointwise(phy, pts, theta);
    double s = 0.0;
    for (std::size_t i = 0; i < pw.size(); ++i) s += w[i] * pw[i];
    return s;
  };
  std::mt19937_64 rng(0);
  std::uniform_int_distribution<std::size_t> pick(0, params.values.size() - 1);
  for (int n = 0; n < 12; ++n) {
    const std::size_t k = pick(rng);
    auto tp = params.values, tm = params.values;
    tp[k] += 1e-6;
    tm[k] -= 1e-6;
    const double fd = (objective(tp) - objective(tm)) / 2e-6;
    EXPECT_NEAR(grad[k], fd, 1e-5 * (1.0 + std::abs(fd))) << params.block_of(k);
  }
}
