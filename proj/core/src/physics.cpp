#include "pinn/physics.hpp"

#include <cmath>
#include <spdlog/fmt/fmt.h>

#include "pinn/error.hpp"

namespace pinn::physics {

using ad::Var;
using sampling::CaseDefinition;
using sampling::CaseKind;

FieldBuilder network_fields(const nets::Params& params,
                            const nets::InputScaling& scaling) {
  return [&params, scaling](ad::Graph& g, Var t, Var x, Var y) {
    const Var in[3] = {t, x, y};
    const auto out = nets::forward(g, params, scaling, in);
    if (out.size() < 3)
      throw Error("shape error: network must have 3 outputs (u, v, p), has " +
                  std::to_string(out.size()));
    return Fields{out[0], out[1], out[2]};
  };
}

nets::InputScaling case_scaling(const CaseDefinition& c,
                                const nets::NetworkSpec& spec) {
  (void)spec;
  return nets::InputScaling{{c.domain.lo.begin(), c.domain.lo.end()},
                            {c.domain.hi.begin(), c.domain.hi.end()}};
}

ResidualTriple ns_residuals(const Fields& f, Var t, Var x, Var y, double rho,
                            double nu) {
  const Var txy[3] = {t, x, y};
  const auto du = ad::gradient(f.u, txy);
  const auto dv = ad::gradient(f.v, txy);
  const Var xy[2] = {x, y};
  const auto dp = ad::gradient(f.p, xy);

  const Var u_xx = ad::derivative(du[1], x);
  const Var u_yy = ad::derivative(du[2], y);
  const Var v_xx = ad::derivative(dv[1], x);
  const Var v_yy = ad::derivative(dv[2], y);

  ResidualTriple r;
  r.r_u = du[0] + f.u * du[1] + f.v * du[2] + dp[0] / rho - nu * (u_xx + u_yy);
  r.r_v = dv[0] + f.u * dv[1] + f.v * dv[2] + dp[1] / rho - nu * (v_xx + v_yy);
  r.r_c = du[1] + dv[2];
  return r;
}

ResidualValues residuals_at(const FieldBuilder& fields,
                            const sampling::Point& pt, double rho, double nu,
                            std::span<const double> params) {
  ad::Graph g;
  const Var t = g.input(0), x = g.input(1), y = g.input(2);
  const auto r = ns_residuals(fields(g, t, x, y), t, x, y, rho, nu);
  const Var outs[3] = {r.r_u, r.r_v, r.r_c};
  const auto blow_up = [&pt] {
    return Error(fmt::format(
        "residual blow-up: non-finite residual at (t={:.17g}, x={:.17g}, y={:.17g})",
        pt[0], pt[1], pt[2]));
  };
  std::vector<double> v;
  try {
    v = ad::evaluate(g, outs, {pt, params});
  } catch (const NonFiniteError&) {
    throw blow_up();
  }
  for (double d : v)
    if (!std::isfinite(d)) throw blow_up();
  return {v[0], v[1], v[2]};
}

std::vector<TermSpec> case_terms(const CaseDefinition& c) {
  std::vector<std::string> tags;
  switch (c.kind) {
    case CaseKind::Cavity:
      tags = {"phy", "left", "right", "bottom", "up", "initial"};
      break;
    case CaseKind::Poiseuille:
      tags = {"phy", "inlet", "wall", "initial"};
      break;
    case CaseKind::BfsSlip:
      tags = {"phy", "inlet", "outlet", "wall", "initial"};
      break;
    case CaseKind::BfsNoSlip:
      tags = {"phy", "inlet", "initial"};
      break;
  }
  std::vector<TermSpec> out;
  for (auto& tag : tags) {
    std::string role = tag == "phy"       ? "interior"
                       : tag == "initial" ? "initial"
                                          : "boundary:" + tag;
    out.push_back({std::move(tag), std::move(role)});
  }
  return out;
}

namespace {

Var d_dx(Var f, Var x) { return ad::derivative(f, x); }

}  // namespace

Var pointwise_term(const CaseDefinition& c, std::string_view tag,
                   const Fields& f, Var t, Var x, Var y) {
  if (tag == "phy") {
    const auto r = ns_residuals(f, t, x, y, c.rho, c.nu);
    return square(r.r_u) + square(r.r_v) + square(r.r_c);
  }
  const bool cavity = c.kind == CaseKind::Cavity;
  if (tag == "initial") {
    if (cavity) return square(f.u) + square(f.v) + square(f.p);
    return square(f.u - c.inflow) + square(f.v) + square(f.p);
  }
  // Boundary terms: the tag must be one of the case's segments.
  (void)c.segment(tag);
  if (cavity) {
    if (tag == "up") return square(f.u - c.lid_velocity) + square(f.v);
    return square(f.u) + square(f.v);
  }
  if (tag == "inlet") {
    switch (c.kind) {
      case CaseKind::BfsSlip:
        return square(f.u - c.inflow) + square(f.v);
      case CaseKind::BfsNoSlip:
        return square(f.u - c.inflow) + square(f.v) + square(f.p - c.p_inlet) +
               square(d_dx(f.p, x));
      default:
        return square(f.u - c.inflow) + square(f.p - c.p_inlet) +
               square(d_dx(f.p, x));
    }
  }
  if (tag == "wall") return square(f.p - c.p_wall) + square(d_dx(f.p, y));
  if (tag == "outlet")
    return square(f.u - c.u_outlet) + square(f.v - c.v_outlet) + square(f.p) +
           square(d_dx(f.u, x)) + square(d_dx(f.v, x));
  throw Error("undefined boundary: no loss term '" + std::string(tag) +
              "' in case " + std::string(c.name()));
}

std::vector<TermProgram> compile_terms(const CaseDefinition& c,
                                       const FieldBuilder& fields) {
  std::vector<TermProgram> out;
  for (auto& spec : case_terms(c)) {
    ad::Graph g;
    const Var t = g.input(0), x = g.input(1), y = g.input(2);
    const Var loss = pointwise_term(c, spec.tag, fields(g, t, x, y), t, x, y);
    out.push_back({std::move(spec.tag), std::move(spec.role),
                   ad::Program(g, std::span<const Var>(&loss, 1))});
  }
  return out;
}

std::vector<double> evaluate_pointwise(ad::Program& prog,
                                       const sampling::PointSet& points,
                                       std::span<const double> params,
                                       std::span<const double> point_weights,
                                       double scale,
                                       std::span<double> param_grad) {
  if (!point_weights.empty() && point_weights.size() != points.rows.size())
    throw Error("shape error: " + std::to_string(point_weights.size()) +
                " point weights for " + std::to_string(points.rows.size()) +
                " points");
  std::vector<double> out;
  out.reserve(points.rows.size());
  for (std::size_t i = 0; i < points.rows.size(); ++i) {
    prog.run({points.rows[i], params});
    out.push_back(prog.output(0));
    if (param_grad.empty()) continue;
    const double seed =
        scale * (point_weights.empty() ? 1.0 : point_weights[i]);
    if (seed != 0.0) prog.backprop(std::span<const double>(&seed, 1), param_grad);
  }
  return out;
}

LossTerm make_loss_term(std::string tag, std::vector<double> pointwise) {
  LossTerm t{std::move(tag), std::move(pointwise), 0.0};
  double s = 0.0;
  for (double v : t.pointwise) s += v;
  t.aggregate = t.pointwise.empty() ? 0.0 : s / static_cast<double>(t.pointwise.size());
  return t;
}

std::vector<LossTerm> assemble_losses(std::span<TermProgram> programs,
                                      std::span<const sampling::PointSet> batches,
                                      std::span<const double> params) {
  std::vector<LossTerm> out;
  for (auto& tp : programs) {
    const sampling::PointSet* batch = nullptr;
    for (const auto& b : batches)
      if (b.role == tp.role) batch = &b;
    if (batch == nullptr)
      throw Error("incomplete batch set: no batch for role '" + tp.role +
                  "' (term " + tp.tag + ")");
    out.push_back(make_loss_term(tp.tag, evaluate_pointwise(tp.program, *batch, params)));
  }
  return out;
}

std::vector<LossTerm> assemble_losses(const CaseDefinition& c,
                                      const nets::Params& params,
                                      std::span<const sampling::PointSet> batches) {
  auto programs =
      compile_terms(c, network_fields(params, case_scaling(c, params.spec)));
  return assemble_losses(programs, batches, params.values);
}

}  // namespace pinn::physics
