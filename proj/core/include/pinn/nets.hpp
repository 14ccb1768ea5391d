#pragma once

// Network definitions: a tanh MLP and a KAN whose edges blend SiLU with a
// learnable B-spline. Both are built as autodiff graphs whose parameter
// leaves index into a flat Params::values vector.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinn/autodiff.hpp"
#include "pinn/checkpoint.hpp"

namespace pinn::nets {

enum class Family { TanhMlp, Kan };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

struct NetworkSpec {
  std::vector<int> layers{3, 20, 20, 3};
  Family family = Family::TanhMlp;
  int grid = 5;         // KAN grid size g
  int order = 3;        // KAN spline order d
  double noise = 0.1;   // std-dev of initial spline coefficients
  double range_lo = -1.0;
  double range_hi = 1.0;

  /// Throws "invalid network spec" describing the first violated rule.
  void validate() const;
  int basis_per_edge() const { return grid + order; }
};

/// Closed-form parameter count.
///   tanh-mlp: sum over layers of in*out + out
///   kan:      sum over layers of in*out*(g + d + 3)
std::size_t parameter_count(const NetworkSpec& spec);

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::vector<std::size_t> shape;
};

/// Block layout for a spec. MLP layer l: "l.weight" [out,in], "l.bias" [out].
/// KAN layer l: "l.mix" [out,in], "l.lambda_b" [out,in], "l.lambda_s"
/// [out,in], "l.coef" [out,in,g+d].
std::vector<ParamBlock> param_layout(const NetworkSpec& spec);

struct Params {
  NetworkSpec spec;
  std::uint64_t seed = 0;
  std::vector<ParamBlock> blocks;
  std::vector<double> values;

  const ParamBlock& block(std::string_view name) const;
  std::span<double> view(std::string_view name);
  std::span<const double> view(std::string_view name) const;
  /// Name of the block containing flat index i.
  const std::string& block_of(std::size_t i) const;
  /// Flat index range [first, last) of the last hidden layer's parameters,
  /// or the whole vector if the network has no hidden layer.
  std::pair<std::size_t, std::size_t> last_hidden_range() const;
};

/// All-zero parameters with the spec's layout.
Params zero_params(const NetworkSpec& spec);

/// Xavier-normal weights (MLP weights, KAN mixing weights), zero biases,
/// lambda_b = lambda_s = 1, spline coefficients ~ Normal(0, noise).
/// Deterministic in `seed`.
Params init_params(const NetworkSpec& spec, std::uint64_t seed);

/// Affine map from a physical box onto [range_lo, range_hi] per input.
struct InputScaling {
  std::vector<double> lo;
  std::vector<double> hi;
  static InputScaling identity(std::size_t dims, double lo, double hi);
};

/// SiLU branch and basis values of one KAN input, shared by every edge
/// leaving that input.
struct KanFeatures {
  ad::Var silu;
  std::vector<ad::Var> basis;
};

KanFeatures kan_features(ad::Var x, std::uint32_t knots, int basis_count,
                         int order);

/// lambda_b * silu(x) + lambda_s * sum_i coef_i * B_i(x)
ad::Var kan_edge(const KanFeatures& f, ad::Var lambda_b, ad::Var lambda_s,
                 std::span<const ad::Var> coef);
ad::Var kan_edge(ad::Var x, std::uint32_t knots, int order, ad::Var lambda_b,
                 ad::Var lambda_s, std::span<const ad::Var> coef);

/// Builds the network in `g`. Inputs are physical coordinates; they are
/// mapped to [range_lo, range_hi] by `scaling` before the first layer.
/// Parameter leaves are g.parameter(flat index into params.values).
/// Throws "shape error" if inputs.size() != layers.front().
std::vector<ad::Var> forward(ad::Graph& g, const Params& params,
                             const InputScaling& scaling,
                             std::span<const ad::Var> inputs);

void save_params(Archive& ar, const Params& params);
Params load_params(const Archive& ar);

}  // namespace pinn::nets
