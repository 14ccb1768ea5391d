#include "pinn/nets.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "pinn/error.hpp"

namespace pinn::nets {

using ad::Graph;
using ad::Var;

std::string_view family_name(Family f) {
  return f == Family::Kan ? "kan" : "tanh-mlp";
}

Family parse_family(std::string_view name) {
  if (name == "tanh-mlp" || name == "tanh") return Family::TanhMlp;
  if (name == "kan" || name == "bspline-silu") return Family::Kan;
  throw Error("invalid config: unknown network family '" + std::string(name) + "'");
}

void NetworkSpec::validate() const {
  if (layers.size() < 2)
    throw Error("invalid network spec: need at least 2 layer sizes");
  for (int n : layers)
    if (n <= 0) throw Error("invalid network spec: layer sizes must be positive");
  if (family == Family::Kan) {
    if (grid < 1) throw Error("invalid network spec: grid size must be >= 1");
    if (order < 0) throw Error("invalid network spec: spline order must be >= 0");
    if (!(range_hi > range_lo))
      throw Error("invalid network spec: empty input range");
  }
  if (!(noise >= 0.0)) throw Error("invalid network spec: negative noise scale");
}

std::size_t parameter_count(const NetworkSpec& spec) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < spec.layers.size(); ++l) {
    const auto in = static_cast<std::size_t>(spec.layers[l]);
    const auto out = static_cast<std::size_t>(spec.layers[l + 1]);
    if (spec.family == Family::TanhMlp)
      n += in * out + out;
    else
      n += in * out * static_cast<std::size_t>(spec.basis_per_edge() + 3);
  }
  return n;
}

std::vector<ParamBlock> param_layout(const NetworkSpec& spec) {
  spec.validate();
  std::vector<ParamBlock> blocks;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t size = 1;
    for (auto s : shape) size *= s;
    blocks.push_back(ParamBlock{std::move(name), offset, size, std::move(shape)});
    offset += size;
  };
  for (std::size_t l = 0; l + 1 < spec.layers.size(); ++l) {
    const auto in = static_cast<std::size_t>(spec.layers[l]);
    const auto out = static_cast<std::size_t>(spec.layers[l + 1]);
    const std::string p = std::to_string(l) + ".";
    if (spec.family == Family::TanhMlp) {
      add(p + "weight", {out, in});
      add(p + "bias", {out});
    } else {
      add(p + "mix", {out, in});
      add(p + "lambda_b", {out, in});
      add(p + "lambda_s", {out, in});
      add(p + "coef",
          {out, in, static_cast<std::size_t>(spec.basis_per_edge())});
    }
  }
  if (offset != parameter_count(spec))
    throw Error("internal: parameter layout disagrees with closed form");
  return blocks;
}

const ParamBlock& Params::block(std::string_view name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw Error("unknown parameter block: " + std::string(name));
}

std::span<double> Params::view(std::string_view name) {
  const auto& b = block(name);
  return std::span<double>(values).subspan(b.offset, b.size);
}

std::span<const double> Params::view(std::string_view name) const {
  const auto& b = block(name);
  return std::span<const double>(values).subspan(b.offset, b.size);
}

const std::string& Params::block_of(std::size_t i) const {
  for (const auto& b : blocks)
    if (i >= b.offset && i < b.offset + b.size) return b.name;
  throw Error("parameter index out of range: " + std::to_string(i));
}

std::pair<std::size_t, std::size_t> Params::last_hidden_range() const {
  const std::size_t n_layers = spec.layers.size() - 1;
  if (n_layers < 2) return {0, values.size()};
  const std::string prefix = std::to_string(n_layers - 2) + ".";
  std::size_t first = values.size();
  std::size_t last = 0;
  for (const auto& b : blocks) {
    if (b.name.rfind(prefix, 0) == 0) {
      first = std::min(first, b.offset);
      last = std::max(last, b.offset + b.size);
    }
  }
  return {first, last};
}

Params zero_params(const NetworkSpec& spec) {
  Params p;
  p.spec = spec;
  p.blocks = param_layout(spec);
  p.values.assign(parameter_count(spec), 0.0);
  return p;
}

Params init_params(const NetworkSpec& spec, std::uint64_t seed) {
  Params p = zero_params(spec);
  p.seed = seed;
  std::mt19937_64 rng(seed);
  for (const auto& b : p.blocks) {
    auto v = std::span<double>(p.values).subspan(b.offset, b.size);
    const auto leaf = b.name.substr(b.name.find('.') + 1);
    if (leaf == "weight" || leaf == "mix") {
      const double fan_out = static_cast<double>(b.shape[0]);
      const double fan_in = static_cast<double>(b.shape[1]);
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (fan_in + fan_out)));
      for (double& x : v) x = dist(rng);
    } else if (leaf == "lambda_b" || leaf == "lambda_s") {
      std::fill(v.begin(), v.end(), 1.0);
    } else if (leaf == "coef") {
      if (spec.noise > 0.0) {
        std::normal_distribution<double> dist(0.0, spec.noise);
        for (double& x : v) x = dist(rng);
      }
    }
    // biases stay zero
  }
  return p;
}

InputScaling InputScaling::identity(std::size_t dims, double lo, double hi) {
  return InputScaling{std::vector<double>(dims, lo), std::vector<double>(dims, hi)};
}

KanFeatures kan_features(Var x, std::uint32_t knots, int basis_count,
                         int order) {
  KanFeatures f;
  f.silu = ad::silu(x);
  f.basis.reserve(static_cast<std::size_t>(basis_count));
  for (int i = 0; i < basis_count; ++i)
    f.basis.push_back(ad::bspline(x, knots, static_cast<std::size_t>(i), order));
  return f;
}

Var kan_edge(const KanFeatures& f, Var lambda_b, Var lambda_s,
             std::span<const Var> coef) {
  if (coef.size() != f.basis.size())
    throw Error("shape error: expected " + std::to_string(f.basis.size()) +
                " spline coefficients, got " + std::to_string(coef.size()));
  Graph& g = *f.silu.graph();
  Var spline = g.constant(0.0);
  for (std::size_t i = 0; i < coef.size(); ++i) spline += coef[i] * f.basis[i];
  return lambda_b * f.silu + lambda_s * spline;
}

Var kan_edge(Var x, std::uint32_t knots, int order, Var lambda_b, Var lambda_s,
             std::span<const Var> coef) {
  return kan_edge(kan_features(x, knots, static_cast<int>(coef.size()), order),
                  lambda_b, lambda_s, coef);
}

namespace {

std::vector<Var> mlp_forward(Graph& g, const Params& p, std::vector<Var> h) {
  const auto& layers = p.spec.layers;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto in = static_cast<std::size_t>(layers[l]);
    const auto out = static_cast<std::size_t>(layers[l + 1]);
    const std::string pre = std::to_string(l) + ".";
    const std::size_t w0 = p.block(pre + "weight").offset;
    const std::size_t b0 = p.block(pre + "bias").offset;
    const bool hidden = l + 2 < layers.size();
    std::vector<Var> next;
    next.reserve(out);
    for (std::size_t j = 0; j < out; ++j) {
      Var z = g.parameter(b0 + j);
      for (std::size_t k = 0; k < in; ++k)
        z += g.parameter(w0 + j * in + k) * h[k];
      next.push_back(hidden ? ad::tanh(z) : z);
    }
    h = std::move(next);
  }
  return h;
}

std::vector<Var> kan_forward(Graph& g, const Params& p, std::vector<Var> h) {
  const auto& spec = p.spec;
  const int nb = spec.basis_per_edge();
  const std::uint32_t knots = g.register_knots(
      KnotVector::uniform(spec.grid, spec.order, spec.range_lo, spec.range_hi));
  const auto& layers = spec.layers;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto in = static_cast<std::size_t>(layers[l]);
    const auto out = static_cast<std::size_t>(layers[l + 1]);
    const std::string pre = std::to_string(l) + ".";
    const std::size_t mix = p.block(pre + "mix").offset;
    const std::size_t lb = p.block(pre + "lambda_b").offset;
    const std::size_t ls = p.block(pre + "lambda_s").offset;
    const std::size_t cf = p.block(pre + "coef").offset;

    std::vector<KanFeatures> feats;
    feats.reserve(in);
    for (std::size_t k = 0; k < in; ++k)
      feats.push_back(kan_features(h[k], knots, nb, spec.order));

    std::vector<Var> next;
    next.reserve(out);
    std::vector<Var> coef(static_cast<std::size_t>(nb));
    for (std::size_t j = 0; j < out; ++j) {
      Var acc = g.constant(0.0);
      for (std::size_t k = 0; k < in; ++k) {
        const std::size_t e = j * in + k;
        for (int i = 0; i < nb; ++i)
          coef[static_cast<std::size_t>(i)] =
              g.parameter(cf + e * static_cast<std::size_t>(nb) +
                          static_cast<std::size_t>(i));
        const Var phi =
            kan_edge(feats[k], g.parameter(lb + e), g.parameter(ls + e), coef);
        acc += g.parameter(mix + e) * phi;
      }
      next.push_back(acc);
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace

std::vector<Var> forward(Graph& g, const Params& params,
                         const InputScaling& scaling,
                         std::span<const Var> inputs) {
  const auto& spec = params.spec;
  const auto n_in = static_cast<std::size_t>(spec.layers.front());
  if (inputs.size() != n_in)
    throw Error("shape error: network expects " + std::to_string(n_in) +
                " inputs, got " + std::to_string(inputs.size()));
  if (scaling.lo.size() != n_in || scaling.hi.size() != n_in)
    throw Error("shape error: input scaling has wrong dimension");

  std::vector<Var> h;
  h.reserve(n_in);
  for (std::size_t k = 0; k < n_in; ++k) {
    const double span = scaling.hi[k] - scaling.lo[k];
    if (!(span > 0.0)) throw Error("shape error: empty input scaling interval");
    const double a = (spec.range_hi - spec.range_lo) / span;
    const double b = spec.range_lo - a * scaling.lo[k];
    h.push_back(a * inputs[k] + b);
  }
  return spec.family == Family::TanhMlp ? mlp_forward(g, params, std::move(h))
                                        : kan_forward(g, params, std::move(h));
}

void save_params(Archive& ar, const Params& p) {
  std::vector<double> layers(p.spec.layers.begin(), p.spec.layers.end());
  ar.put("spec.layers", std::move(layers));
  ar.put_string("spec.family", std::string(family_name(p.spec.family)));
  ar.put("spec.grid", std::vector<double>{static_cast<double>(p.spec.grid)});
  ar.put("spec.order", std::vector<double>{static_cast<double>(p.spec.order)});
  ar.put("spec.noise", std::vector<double>{p.spec.noise});
  ar.put("spec.range", std::vector<double>{p.spec.range_lo, p.spec.range_hi});
  ar.put_string("spec.seed", std::to_string(p.seed));
  for (const auto& b : p.blocks) ar.put("param." + b.name, p.view(b.name));
}

Params load_params(const Archive& ar) {
  NetworkSpec spec;
  spec.layers.clear();
  for (double v : ar.array("spec.layers")) spec.layers.push_back(static_cast<int>(v));
  spec.family = parse_family(ar.string("spec.family"));
  spec.grid = static_cast<int>(ar.scalar("spec.grid"));
  spec.order = static_cast<int>(ar.scalar("spec.order"));
  spec.noise = ar.scalar("spec.noise");
  const auto& range = ar.array("spec.range");
  if (range.size() != 2) throw Error("invalid checkpoint: spec.range");
  spec.range_lo = range[0];
  spec.range_hi = range[1];
  Params p = zero_params(spec);
  p.seed = std::stoull(ar.string("spec.seed"));
  for (const auto& b : p.blocks) {
    const auto& vals = ar.array("param." + b.name);
    if (vals.size() != b.size)
      throw Error("invalid checkpoint: block " + b.name + " has " +
                  std::to_string(vals.size()) + " values, expected " +
                  std::to_string(b.size));
    std::copy(vals.begin(), vals.end(), p.values.begin() + static_cast<std::ptrdiff_t>(b.offset));
  }
  return p;
}

}  // namespace pinn::nets
