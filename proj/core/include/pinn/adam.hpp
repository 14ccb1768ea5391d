#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pinn/checkpoint.hpp"
#include "pinn/nets.hpp"

namespace pinn::train {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  static AdamState zeros(std::size_t n, const AdamConfig& cfg = {});
};

/// One bias-corrected Adam step in place. Throws "gradient blow-up" naming
/// the parameter block (from `blocks`, if given) of the first non-finite
/// gradient entry; nothing is modified in that case.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, std::span<const nets::ParamBlock> blocks = {});

void save_adam(Archive& ar, const AdamState& s);
AdamState load_adam(const Archive& ar);

}  // namespace pinn::train
