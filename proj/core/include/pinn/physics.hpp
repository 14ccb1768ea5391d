#pragma once

// Incompressible Navier-Stokes residuals and the per-case loss terms.
//
// Every loss term is a pointwise expression in (t, x, y) and the network
// parameters; it is compiled once into an ad::Program whose inputs are
// (t, x, y) and whose single output is the pointwise squared mismatch.

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinn/autodiff.hpp"
#include "pinn/nets.hpp"
#include "pinn/sampling.hpp"

namespace pinn::physics {

struct Fields {
  ad::Var u, v, p;
};

/// Builds (u, v, p) from coordinate nodes (t, x, y) inside the given graph.
using FieldBuilder =
    std::function<Fields(ad::Graph&, ad::Var t, ad::Var x, ad::Var y)>;

/// Network fields: outputs 0, 1, 2 of the forward pass.
FieldBuilder network_fields(const nets::Params& params,
                            const nets::InputScaling& scaling);

/// Scaling that maps the case's space-time box onto the net's input range.
nets::InputScaling case_scaling(const sampling::CaseDefinition& c,
                                const nets::NetworkSpec& spec);

struct ResidualTriple {
  ad::Var r_u, r_v, r_c;
};

/// r_u = u_t + u u_x + v u_y + p_x / rho - nu (u_xx + u_yy)
/// r_v = v_t + u v_x + v v_y + p_y / rho - nu (v_xx + v_yy)
/// r_c = u_x + v_y
ResidualTriple ns_residuals(const Fields& f, ad::Var t, ad::Var x, ad::Var y,
                            double rho, double nu);

struct ResidualValues {
  double r_u = 0.0, r_v = 0.0, r_c = 0.0;
};

/// Evaluates the residual triple at one point. Throws "residual blow-up"
/// with the point coordinates if any component is non-finite.
ResidualValues residuals_at(const FieldBuilder& fields, const sampling::Point& pt,
                            double rho, double nu,
                            std::span<const double> params = {});

/// Loss term tag and the point-set role it is evaluated on.
struct TermSpec {
  std::string tag;
  std::string role;
};

/// Ordered term list of a case: cavity 6, poiseuille 4, bfs-slip 5,
/// bfs-no-slip 3 terms.
std::vector<TermSpec> case_terms(const sampling::CaseDefinition& c);

/// Pointwise loss expression of one term. Throws "undefined boundary" for a
/// tag the case does not define.
ad::Var pointwise_term(const sampling::CaseDefinition& c, std::string_view tag,
                       const Fields& f, ad::Var t, ad::Var x, ad::Var y);

struct TermProgram {
  std::string tag;
  std::string role;
  ad::Program program;  // inputs (t, x, y); output 0: pointwise loss
};

std::vector<TermProgram> compile_terms(const sampling::CaseDefinition& c,
                                       const FieldBuilder& fields);

struct LossTerm {
  std::string tag;
  std::vector<double> pointwise;
  double aggregate = 0.0;  // mean of pointwise
};

/// Runs `prog` on every row of `points` and returns pointwise values. When
/// `param_grad` is non-empty, also accumulates
///   d/dtheta  sum_i scale * w_i * pointwise_i
/// with w_i = point_weights[i] (or 1 when point_weights is empty).
std::vector<double> evaluate_pointwise(ad::Program& prog,
                                       const sampling::PointSet& points,
                                       std::span<const double> params,
                                       std::span<const double> point_weights = {},
                                       double scale = 0.0,
                                       std::span<double> param_grad = {});

LossTerm make_loss_term(std::string tag, std::vector<double> pointwise);

/// Terms of `programs` on the matching batches (looked up by role). Throws
/// "incomplete batch set" when a role has no batch.
std::vector<LossTerm> assemble_losses(std::span<TermProgram> programs,
                                      std::span<const sampling::PointSet> batches,
                                      std::span<const double> params);

/// Convenience overload that compiles the case's terms for the network.
std::vector<LossTerm> assemble_losses(const sampling::CaseDefinition& c,
                                      const nets::Params& params,
                                      std::span<const sampling::PointSet> batches);

}  // namespace pinn::physics
