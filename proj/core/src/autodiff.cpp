#include "pinn/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "pinn/error.hpp"

namespace pinn::ad {

namespace {

double ipow(double x, int k) {
  if (k < 0) return 1.0 / ipow(x, -k);
  double r = 1.0;
  while (k > 0) {
    if (k & 1) r *= x;
    x *= x;
    k >>= 1;
  }
  return r;
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Value of a non-leaf op given parent values.
inline double apply(Op op, double a, double b, double c, std::int32_t k) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Neg: return -a;
    case Op::PowInt: return ipow(a, k);
    case Op::Exp: return std::exp(a);
    case Op::Tanh: return std::tanh(a);
    case Op::Sigmoid: return sigmoid_value(a);
    case Op::Silu: return a * sigmoid_value(a);
    case Op::MaxConst: return a > c ? a : c;
    case Op::MinConst: return a < c ? a : c;
    case Op::StepAbove: return a > c ? 1.0 : 0.0;
    case Op::StepBelow: return a < c ? 1.0 : 0.0;
    default: return 0.0;
  }
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Input: return "input";
    case Op::Parameter: return "parameter";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::PowInt: return "pow-int";
    case Op::Exp: return "exp";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Silu: return "silu";
    case Op::MaxConst: return "max";
    case Op::MinConst: return "min";
    case Op::StepAbove: return "step-above";
    case Op::StepBelow: return "step-below";
    case Op::BSpline: return "bspline";
  }
  return "?";
}

// ---------------------------------------------------------------- Graph --

NodeId Graph::push(Node n) {
  if (nodes_.size() >= kNoNode) throw Error("graph too large");
  nodes_.push_back(n);
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::constant_id(double v) {
  const auto key = std::bit_cast<std::uint64_t>(v);
  if (auto it = constants_.find(key); it != constants_.end()) return it->second;
  const NodeId id = push(Node{Op::Constant, kNoNode, kNoNode, v, 0});
  constants_.emplace(key, id);
  return id;
}

Var Graph::constant(double v) { return Var(this, constant_id(v)); }

Var Graph::input(std::size_t index) {
  if (auto it = inputs_.find(index); it != inputs_.end())
    return Var(this, it->second);
  const NodeId id = push(
      Node{Op::Input, kNoNode, kNoNode, 0.0, static_cast<std::int32_t>(index)});
  inputs_.emplace(index, id);
  return Var(this, id);
}

Var Graph::parameter(std::size_t index) {
  if (auto it = params_.find(index); it != params_.end())
    return Var(this, it->second);
  const NodeId id = push(Node{Op::Parameter, kNoNode, kNoNode, 0.0,
                              static_cast<std::int32_t>(index)});
  params_.emplace(index, id);
  return Var(this, id);
}

std::uint32_t Graph::register_knots(KnotVector knots) {
  knots_.push_back(std::make_shared<const KnotVector>(std::move(knots)));
  return static_cast<std::uint32_t>(knots_.size() - 1);
}

double Graph::fold(const Node& n) const {
  if (n.op == Op::BSpline) {
    const BasisDesc& bd = bases_[static_cast<std::size_t>(n.k)];
    return bspline_basis(nodes_[n.a].c, bd.index, bd.degree, *knots_[bd.knots]);
  }
  const double a = nodes_[n.a].c;
  const double b = n.b == kNoNode ? 0.0 : nodes_[n.b].c;
  return apply(n.op, a, b, n.c, n.k);
}

NodeId Graph::make(Op op, NodeId a, NodeId b, double c, std::int32_t k) {
  const Node n{op, a, b, c, k};
  const bool ca = is_constant(a);
  const bool cb = b != kNoNode && is_constant(b);
  if (ca && (b == kNoNode || cb)) return constant_id(fold(n));

  // Identity folding with constants only.
  auto cval = [&](NodeId id) { return nodes_[id].c; };
  switch (op) {
    case Op::Add:
      if (ca && cval(a) == 0.0) return b;
      if (cb && cval(b) == 0.0) return a;
      break;
    case Op::Sub:
      if (cb && cval(b) == 0.0) return a;
      if (ca && cval(a) == 0.0) return make(Op::Neg, b);
      break;
    case Op::Mul:
      if ((ca && cval(a) == 0.0) || (cb && cval(b) == 0.0))
        return constant_id(0.0);
      if (ca && cval(a) == 1.0) return b;
      if (cb && cval(b) == 1.0) return a;
      if (ca && cval(a) == -1.0) return make(Op::Neg, b);
      if (cb && cval(b) == -1.0) return make(Op::Neg, a);
      break;
    case Op::Div:
      if (ca && cval(a) == 0.0) return constant_id(0.0);
      if (cb && cval(b) == 1.0) return a;
      break;
    case Op::Neg:
      if (nodes_[a].op == Op::Neg) return nodes_[a].a;
      break;
    case Op::PowInt:
      if (k == 0) return constant_id(1.0);
      if (k == 1) return a;
      break;
    default:
      break;
  }
  return push(n);
}

NodeId Graph::make_bspline(NodeId x, std::uint32_t knots, std::size_t index,
                           int degree) {
  if (knots >= knots_.size()) throw Error("invalid basis index: unknown knots");
  if (degree < 0 || index + static_cast<std::size_t>(degree) + 1 >=
                        knots_[knots]->size())
    throw Error("invalid basis index: i=" + std::to_string(index) +
                " d=" + std::to_string(degree));
  bases_.push_back(
      BasisDesc{knots, static_cast<std::uint32_t>(index), degree});
  return make(Op::BSpline, x, kNoNode, 0.0,
              static_cast<std::int32_t>(bases_.size() - 1));
}

// ----------------------------------------------------------- Var algebra --

namespace {

Graph& common(Var a, Var b) {
  if (a.graph() != b.graph() || a.graph() == nullptr)
    throw Error("graph mismatch: operands belong to different graphs");
  return *a.graph();
}

Var bin(Op op, Var a, Var b) {
  Graph& g = common(a, b);
  return Var(&g, g.make(op, a.id(), b.id()));
}

Var un(Op op, Var a, double c = 0.0, std::int32_t k = 0) {
  return Var(a.graph(), a.graph()->make(op, a.id(), kNoNode, c, k));
}

Var cst(Var like, double v) { return like.graph()->constant(v); }

}  // namespace

Var operator+(Var a, Var b) { return bin(Op::Add, a, b); }
Var operator-(Var a, Var b) { return bin(Op::Sub, a, b); }
Var operator*(Var a, Var b) { return bin(Op::Mul, a, b); }
Var operator/(Var a, Var b) { return bin(Op::Div, a, b); }
Var operator-(Var a) { return un(Op::Neg, a); }
Var operator+(Var a, double b) { return a + cst(a, b); }
Var operator+(double a, Var b) { return cst(b, a) + b; }
Var operator-(Var a, double b) { return a - cst(a, b); }
Var operator-(double a, Var b) { return cst(b, a) - b; }
Var operator*(Var a, double b) { return a * cst(a, b); }
Var operator*(double a, Var b) { return cst(b, a) * b; }
Var operator/(Var a, double b) { return a / cst(a, b); }
Var operator/(double a, Var b) { return cst(b, a) / b; }

Var powi(Var a, int k) { return un(Op::PowInt, a, 0.0, k); }
Var exp(Var a) { return un(Op::Exp, a); }
Var tanh(Var a) { return un(Op::Tanh, a); }
Var sigmoid(Var a) { return un(Op::Sigmoid, a); }
Var silu(Var a) { return un(Op::Silu, a); }
Var max(Var a, double c) { return un(Op::MaxConst, a, c); }
Var min(Var a, double c) { return un(Op::MinConst, a, c); }

Var bspline(Var x, std::uint32_t knots, std::size_t index, int degree) {
  return Var(x.graph(), x.graph()->make_bspline(x.id(), knots, index, degree));
}

Var sum(Graph& g, std::span<const Var> terms) {
  if (terms.empty()) return g.constant(0.0);
  Var acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) acc = acc + terms[i];
  return acc;
}

// -------------------------------------------------------------- gradient --

namespace {

// Ancestors of `root` (inclusive), ascending id order.
std::vector<NodeId> ancestors(const Graph& g, std::span<const NodeId> roots) {
  std::vector<char> seen(g.size(), 0);
  std::vector<NodeId> stack(roots.begin(), roots.end());
  std::vector<NodeId> out;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    if (seen[id]) continue;
    seen[id] = 1;
    out.push_back(id);
    const Node& n = g.node(id);
    if (n.a != kNoNode && !seen[n.a]) stack.push_back(n.a);
    if (n.b != kNoNode && !seen[n.b]) stack.push_back(n.b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<Var> gradient(Var output, std::span<const Var> wrt) {
  Graph& g = *output.graph();
  for (const Var& w : wrt)
    if (w.graph() != &g) throw Error("graph mismatch: wrt leaf in other graph");

  const NodeId root = output.id();
  const NodeId roots[] = {root};
  const std::vector<NodeId> order = ancestors(g, roots);

  std::vector<NodeId> adj(static_cast<std::size_t>(root) + 1, kNoNode);
  adj[root] = g.constant(1.0).id();

  auto accumulate = [&](NodeId target, NodeId contrib) {
    if (g.is_constant(contrib) && g.node(contrib).c == 0.0) return;
    adj[target] =
        adj[target] == kNoNode ? contrib : g.make(Op::Add, adj[target], contrib);
  };

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId id = *it;
    const NodeId gid = adj[id];
    if (gid == kNoNode) continue;
    const Node n = g.node(id);  // copy: make() may reallocate
    Var G(&g, gid);
    Var A = n.a != kNoNode ? Var(&g, n.a) : Var();
    Var B = n.b != kNoNode ? Var(&g, n.b) : Var();
    Var self(&g, id);
    switch (n.op) {
      case Op::Constant:
      case Op::Input:
      case Op::Parameter:
      case Op::StepAbove:
      case Op::StepBelow:
        break;
      case Op::Add:
        accumulate(n.a, gid);
        accumulate(n.b, gid);
        break;
      case Op::Sub:
        accumulate(n.a, gid);
        accumulate(n.b, (-G).id());
        break;
      case Op::Mul:
        accumulate(n.a, (G * B).id());
        accumulate(n.b, (G * A).id());
        break;
      case Op::Div:
        accumulate(n.a, (G / B).id());
        accumulate(n.b, (-(G * self / B)).id());
        break;
      case Op::Neg:
        accumulate(n.a, (-G).id());
        break;
      case Op::PowInt:
        accumulate(n.a, (G * (static_cast<double>(n.k) * powi(A, n.k - 1))).id());
        break;
      case Op::Exp:
        accumulate(n.a, (G * self).id());
        break;
      case Op::Tanh:
        accumulate(n.a, (G * (1.0 - square(self))).id());
        break;
      case Op::Sigmoid:
        accumulate(n.a, (G * (self * (1.0 - self))).id());
        break;
      case Op::Silu: {
        Var s = sigmoid(A);
        accumulate(n.a, (G * (s * (1.0 + A * (1.0 - s)))).id());
        break;
      }
      case Op::MaxConst:
        accumulate(n.a, (G * Var(&g, g.make(Op::StepAbove, n.a, kNoNode, n.c))).id());
        break;
      case Op::MinConst:
        accumulate(n.a, (G * Var(&g, g.make(Op::StepBelow, n.a, kNoNode, n.c))).id());
        break;
      case Op::BSpline: {
        const BasisDesc bd = g.basis(n.k);
        if (bd.degree == 0) break;
        const KnotVector& kv = g.knots(bd.knots);
        const std::size_t i = bd.index;
        const int d = bd.degree;
        const double s1 = kv[i + d] - kv[i];
        const double s2 = kv[i + d + 1] - kv[i + 1];
        Var deriv = g.constant(0.0);
        if (s1 != 0.0) deriv = deriv + (d / s1) * bspline(A, bd.knots, i, d - 1);
        if (s2 != 0.0)
          deriv = deriv - (d / s2) * bspline(A, bd.knots, i + 1, d - 1);
        accumulate(n.a, (G * deriv).id());
        break;
      }
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    const NodeId id = w.id();
    if (id <= root && adj[id] != kNoNode)
      out.emplace_back(&g, adj[id]);
    else
      out.push_back(g.constant(0.0));
  }
  return out;
}

Var derivative(Var output, Var wrt) {
  const Var w[] = {wrt};
  return gradient(output, w)[0];
}

// --------------------------------------------------------------- Program --

Program::Program(const Graph& g, std::span<const Var> outputs) {
  std::vector<NodeId> roots;
  roots.reserve(outputs.size());
  for (const Var& v : outputs) {
    if (v.graph() != &g) throw Error("graph mismatch: output in other graph");
    roots.push_back(v.id());
  }
  const std::vector<NodeId> order = ancestors(g, roots);

  std::unordered_map<NodeId, std::uint32_t> slot;
  slot.reserve(order.size());
  code_.reserve(order.size());
  origin_.reserve(order.size());
  std::unordered_map<std::uint32_t, std::int32_t> basis_map;
  std::unordered_map<std::uint32_t, std::uint32_t> knot_map;

  for (const NodeId id : order) {
    const Node& n = g.node(id);
    Instr ins{n.op, 0, 0, n.c, n.k};
    if (n.a != kNoNode) ins.a = slot.at(n.a);
    if (n.b != kNoNode) ins.b = slot.at(n.b);
    if (n.op == Op::Input)
      inputs_needed_ = std::max(inputs_needed_, static_cast<std::size_t>(n.k) + 1);
    if (n.op == Op::Parameter)
      params_needed_ = std::max(params_needed_, static_cast<std::size_t>(n.k) + 1);
    if (n.op == Op::BSpline) {
      BasisDesc bd = g.basis(n.k);
      auto [kit, kins] = knot_map.try_emplace(
          bd.knots, static_cast<std::uint32_t>(knots_.size()));
      if (kins) knots_.push_back(g.knots_ptr(bd.knots));
      bd.knots = kit->second;
      bases_.push_back(bd);
      ins.k = static_cast<std::int32_t>(bases_.size() - 1);
    }
    slot.emplace(id, static_cast<std::uint32_t>(code_.size()));
    code_.push_back(ins);
    origin_.push_back(id);
  }
  for (const NodeId r : roots) outputs_.push_back(slot.at(r));
  values_.assign(code_.size(), 0.0);
  adjoints_.assign(code_.size(), 0.0);
}

void Program::run(const Bindings& b) {
  if (b.inputs.size() < inputs_needed_)
    throw Error("unbound input: program reads " +
                std::to_string(inputs_needed_) + " inputs, " +
                std::to_string(b.inputs.size()) + " bound");
  if (b.params.size() < params_needed_)
    throw Error("unbound input: program reads " +
                std::to_string(params_needed_) + " parameters, " +
                std::to_string(b.params.size()) + " bound");

  double* v = values_.data();
  const std::size_t n = code_.size();
  for (std::size_t s = 0; s < n; ++s) {
    const Instr& in = code_[s];
    switch (in.op) {
      case Op::Constant: v[s] = in.c; break;
      case Op::Input: v[s] = b.inputs[static_cast<std::size_t>(in.k)]; break;
      case Op::Parameter: v[s] = b.params[static_cast<std::size_t>(in.k)]; break;
      case Op::Add: v[s] = v[in.a] + v[in.b]; break;
      case Op::Sub: v[s] = v[in.a] - v[in.b]; break;
      case Op::Mul: v[s] = v[in.a] * v[in.b]; break;
      case Op::Div: v[s] = v[in.a] / v[in.b]; break;
      case Op::Neg: v[s] = -v[in.a]; break;
      case Op::BSpline: {
        const BasisDesc& bd = bases_[static_cast<std::size_t>(in.k)];
        v[s] = bspline_basis(v[in.a], bd.index, bd.degree, *knots_[bd.knots]);
        break;
      }
      default: v[s] = apply(in.op, v[in.a], 0.0, in.c, in.k); break;
    }
  }

  // Multiplying by zero turns Inf into NaN, so one pass detects both.
  double probe = 0.0;
  for (std::size_t s = 0; s < n; ++s) probe += v[s] * 0.0;
  if (!std::isfinite(probe)) {
    for (std::size_t s = 0; s < n; ++s) {
      if (!std::isfinite(v[s])) {
        throw NonFiniteError(
            origin_[s], "non-finite value at node " + std::to_string(origin_[s]) +
                            " (" + std::string(op_name(code_[s].op)) +
                            "): " + std::to_string(v[s]));
      }
    }
  }
}

void Program::backprop(std::span<const double> seeds,
                       std::span<double> param_grad,
                       std::span<double> input_grad) {
  if (seeds.size() != outputs_.size())
    throw Error("shape error: one seed per program output required");
  if (param_grad.size() < params_needed_)
    throw Error("shape error: parameter gradient buffer too small");
  std::fill(adjoints_.begin(), adjoints_.end(), 0.0);
  for (std::size_t k = 0; k < outputs_.size(); ++k)
    adjoints_[outputs_[k]] += seeds[k];

  const double* v = values_.data();
  double* g = adjoints_.data();
  for (std::size_t s = code_.size(); s-- > 0;) {
    const double gs = g[s];
    if (gs == 0.0) continue;
    const Instr& in = code_[s];
    switch (in.op) {
      case Op::Constant:
      case Op::StepAbove:
      case Op::StepBelow:
        break;
      case Op::Input:
        if (!input_grad.empty())
          input_grad[static_cast<std::size_t>(in.k)] += gs;
        break;
      case Op::Parameter:
        param_grad[static_cast<std::size_t>(in.k)] += gs;
        break;
      case Op::Add:
        g[in.a] += gs;
        g[in.b] += gs;
        break;
      case Op::Sub:
        g[in.a] += gs;
        g[in.b] -= gs;
        break;
      case Op::Mul:
        g[in.a] += gs * v[in.b];
        g[in.b] += gs * v[in.a];
        break;
      case Op::Div:
        g[in.a] += gs / v[in.b];
        g[in.b] -= gs * v[s] / v[in.b];
        break;
      case Op::Neg:
        g[in.a] -= gs;
        break;
      case Op::PowInt:
        g[in.a] += gs * in.k * ipow(v[in.a], in.k - 1);
        break;
      case Op::Exp:
        g[in.a] += gs * v[s];
        break;
      case Op::Tanh:
        g[in.a] += gs * (1.0 - v[s] * v[s]);
        break;
      case Op::Sigmoid:
        g[in.a] += gs * v[s] * (1.0 - v[s]);
        break;
      case Op::Silu: {
        const double x = v[in.a];
        const double sg = sigmoid_value(x);
        g[in.a] += gs * (sg + x * sg * (1.0 - sg));
        break;
      }
      case Op::MaxConst:
        if (v[in.a] > in.c) g[in.a] += gs;
        break;
      case Op::MinConst:
        if (v[in.a] < in.c) g[in.a] += gs;
        break;
      case Op::BSpline: {
        const BasisDesc& bd = bases_[static_cast<std::size_t>(in.k)];
        g[in.a] += gs * bspline_basis_derivative(v[in.a], bd.index, bd.degree,
                                                 *knots_[bd.knots]);
        break;
      }
    }
  }
}

std::vector<double> evaluate(const Graph& g, std::span<const Var> outputs,
                             const Bindings& bindings) {
  Program p(g, outputs);
  p.run(bindings);
  std::vector<double> out(outputs.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = p.output(k);
  return out;
}

double finite_difference_check(const GraphBuilder& f,
                               std::span<const double> point, double h) {
  if (!(h > 0.0)) throw Error("invalid step: h must be positive");
  Graph g;
  std::vector<Var> xs;
  for (std::size_t i = 0; i < point.size(); ++i) xs.push_back(g.input(i));
  const Var y = f(g, xs);
  std::vector<Var> outs = gradient(y, xs);
  outs.insert(outs.begin(), y);
  Program prog(g, outs);

  std::vector<double> x(point.begin(), point.end());
  prog.run({x, {}});
  std::vector<double> analytic(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) analytic[i] = prog.output(i + 1);

  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    x[i] = point[i] + h;
    prog.run({x, {}});
    const double fp = prog.output(0);
    x[i] = point[i] - h;
    prog.run({x, {}});
    const double fm = prog.output(0);
    x[i] = point[i];
    const double numeric = (fp - fm) / (2.0 * h);
    const double err =
        std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace pinn::ad
