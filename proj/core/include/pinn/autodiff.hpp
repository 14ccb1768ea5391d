#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Graph is an append-only DAG of scalar nodes. Node ids are assigned in
// creation order, so parents always precede children and id order is a valid
// evaluation order. gradient() builds derivative *nodes* in the same graph,
// which makes derivatives themselves differentiable (reverse-over-reverse).
//
// Evaluation is separate from construction: a Program compiles the
// dependency cone of some output nodes into a flat tape that can be run many
// times with different input/parameter bindings, and can back-propagate
// numerically for the parameter gradient of a scalar combination of outputs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pinn/bspline.hpp"

namespace pinn::ad {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xffffffffu;

enum class Op : std::uint8_t {
  Constant,
  Input,
  Parameter,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  PowInt,
  Exp,
  Tanh,
  Sigmoid,
  Silu,
  MaxConst,   // max(a, c)
  MinConst,   // min(a, c)
  StepAbove,  // a > c ? 1 : 0, zero derivative
  StepBelow,  // a < c ? 1 : 0, zero derivative
  BSpline,    // B_i^d(a) over a registered knot vector
};

std::string_view op_name(Op op);

struct Node {
  Op op;
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  double c = 0.0;     // constant value / threshold
  std::int32_t k = 0; // leaf index / integer exponent / basis descriptor
};

struct BasisDesc {
  std::uint32_t knots;
  std::uint32_t index;
  std::int32_t degree;
};

class Var;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var constant(double v);
  /// Leaf bound to Bindings::inputs[index]. One node per index.
  Var input(std::size_t index);
  /// Leaf bound to Bindings::params[index]. One node per index.
  Var parameter(std::size_t index);

  std::uint32_t register_knots(KnotVector knots);
  const KnotVector& knots(std::uint32_t id) const { return *knots_[id]; }

  NodeId make(Op op, NodeId a, NodeId b = kNoNode, double c = 0.0,
              std::int32_t k = 0);
  NodeId make_bspline(NodeId x, std::uint32_t knots, std::size_t index,
                      int degree);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_[id]; }
  bool is_constant(NodeId id) const {
    return nodes_[id].op == Op::Constant;
  }
  bool is_leaf(NodeId id) const {
    const Op op = nodes_[id].op;
    return op == Op::Input || op == Op::Parameter;
  }
  const BasisDesc& basis(std::int32_t k) const {
    return bases_[static_cast<std::size_t>(k)];
  }
  std::shared_ptr<const KnotVector> knots_ptr(std::uint32_t id) const {
    return knots_[id];
  }

 private:
  NodeId push(Node n);
  NodeId constant_id(double v);
  double fold(const Node& n) const;

  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, NodeId> constants_;
  std::unordered_map<std::size_t, NodeId> inputs_;
  std::unordered_map<std::size_t, NodeId> params_;
  std::vector<std::shared_ptr<const KnotVector>> knots_;
  std::vector<BasisDesc> bases_;
};

/// Lightweight handle to a node; arithmetic on Vars appends nodes.
class Var {
 public:
  Var() = default;
  Var(Graph* g, NodeId id) : g_(g), id_(id) {}

  Graph* graph() const noexcept { return g_; }
  NodeId id() const noexcept { return id_; }
  bool valid() const noexcept { return g_ != nullptr && id_ != kNoNode; }

 private:
  Graph* g_ = nullptr;
  NodeId id_ = kNoNode;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);
inline Var& operator+=(Var& a, Var b) { return a = a + b; }

Var powi(Var a, int k);
inline Var square(Var a) { return powi(a, 2); }
Var exp(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var silu(Var a);
Var max(Var a, double c);
Var min(Var a, double c);
Var bspline(Var x, std::uint32_t knots, std::size_t index, int degree);

/// Sum of a sequence of nodes, left to right. Empty -> constant 0.
Var sum(Graph& g, std::span<const Var> terms);

/// Symbolic reverse mode. Returns, for each element of `wrt`, a node holding
/// d(output)/d(wrt[i]). Nodes unreachable from `output` get constant 0.
std::vector<Var> gradient(Var output, std::span<const Var> wrt);
Var derivative(Var output, Var wrt);

struct Bindings {
  std::span<const double> inputs;
  std::span<const double> params;
};

/// Compiled, re-runnable evaluation of the dependency cone of some outputs.
class Program {
 public:
  Program() = default;
  Program(const Graph& g, std::span<const Var> outputs);

  std::size_t size() const noexcept { return code_.size(); }
  std::size_t output_count() const noexcept { return outputs_.size(); }
  /// Highest input/parameter leaf index referenced, plus one.
  std::size_t inputs_needed() const noexcept { return inputs_needed_; }
  std::size_t params_needed() const noexcept { return params_needed_; }

  /// Evaluates every node. Throws "unbound input" if a referenced leaf has
  /// no binding, and NonFiniteError ("non-finite value") naming the first
  /// offending graph node.
  void run(const Bindings& b);
  double output(std::size_t k) const { return values_[outputs_[k]]; }

  /// After run(): accumulates d(sum_k seeds[k] * output_k) / d(leaf) into
  /// param_grad (indexed like Bindings::params) and, if non-empty,
  /// input_grad (indexed like Bindings::inputs).
  void backprop(std::span<const double> seeds, std::span<double> param_grad,
                std::span<double> input_grad = {});

 private:
  struct Instr {
    Op op;
    std::uint32_t a;
    std::uint32_t b;
    double c;
    std::int32_t k;
  };

  std::vector<Instr> code_;
  std::vector<NodeId> origin_;  // graph node of each slot
  std::vector<std::uint32_t> outputs_;
  std::vector<BasisDesc> bases_;
  std::vector<std::shared_ptr<const KnotVector>> knots_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
  std::size_t inputs_needed_ = 0;
  std::size_t params_needed_ = 0;
};

/// One-shot evaluation of `outputs` under `bindings`.
std::vector<double> evaluate(const Graph& g, std::span<const Var> outputs,
                             const Bindings& bindings);

using GraphBuilder = std::function<Var(Graph&, std::span<const Var>)>;

/// Compares gradient() of f at `point` against central differences with
/// step h. Returns max_i |analytic_i - numeric_i| / max(1, |analytic_i|).
/// Throws "invalid step" for h <= 0.
double finite_difference_check(const GraphBuilder& f,
                               std::span<const double> point, double h);

}  // namespace pinn::ad
