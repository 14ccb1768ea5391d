#include "pinn/adam.hpp"

#include <cmath>

#include "pinn/error.hpp"

namespace pinn::train {

AdamState AdamState::zeros(std::size_t n, const AdamConfig& cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& s, std::span<const nets::ParamBlock> blocks) {
  if (grads.size() != params.size() || s.m.size() != params.size() ||
      s.v.size() != params.size())
    throw Error("shape error: adam step over " + std::to_string(params.size()) +
                " parameters with " + std::to_string(grads.size()) +
                " gradients and " + std::to_string(s.m.size()) + " moments");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (std::isfinite(grads[i])) continue;
    std::string where = "parameter " + std::to_string(i);
    for (const auto& b : blocks)
      if (i >= b.offset && i < b.offset + b.size)
        where = "block '" + b.name + "' entry " + std::to_string(i - b.offset);
    throw Error("gradient blow-up: non-finite gradient in " + where);
  }
  ++s.t;
  const auto& c = s.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = c.beta1 * s.m[i] + (1.0 - c.beta1) * g;
    s.v[i] = c.beta2 * s.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = s.m[i] / bc1;
    const double v_hat = s.v[i] / bc2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

void save_adam(Archive& ar, const AdamState& s) {
  ar.put("adam.m", s.m);
  ar.put("adam.v", s.v);
  ar.put("adam.t", std::vector<double>{static_cast<double>(s.t)});
  ar.put("adam.cfg", std::vector<double>{s.cfg.lr, s.cfg.beta1, s.cfg.beta2, s.cfg.eps});
}

AdamState load_adam(const Archive& ar) {
  AdamState s;
  s.m = ar.array("adam.m");
  s.v = ar.array("adam.v");
  s.t = static_cast<std::int64_t>(ar.scalar("adam.t"));
  const auto& c = ar.array("adam.cfg");
  if (c.size() != 4) throw Error("invalid config: adam block has wrong size");
  s.cfg = {c[0], c[1], c[2], c[3]};
  return s;
}

}  // namespace pinn::train
