#pragma once

// Loss-weighting schemes. Every update is a pure function: it takes a
// WeightState by value together with the statistics of one epoch and
// returns the next state.
//
//   fixed     constant term weights
//   rba       per-point  lambda <- gamma*lambda + eta*|e|/max|e|
//   sa        per-point  lambda <- lambda + lr*lambda*r^2, effective weight lambda^2
//   lra       per-term   EMA towards max|grad L_phy| / mean|grad L_i|
//   gradnorm  per-term   one L1 step towards G_W * r_i^alpha, then sum(w) = m

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinn/checkpoint.hpp"

namespace pinn::balancing {

enum class Scheme { Fixed, Rba, Sa, Lra, GradNorm };

std::string_view scheme_name(Scheme s);
Scheme parse_scheme(std::string_view name);
bool is_pointwise(Scheme s);

struct Hyper {
  double rba_gamma = 0.5;
  double rba_eta = 0.5;
  double sa_lr = 0.001;
  double lra_alpha = 0.5;
  double lra_ceiling = 1e4;
  double gn_alpha = 1.5;
  double gn_lr = 0.001;
};

/// Bookkeeping of weight-update work, accumulated across epochs.
struct OpCounters {
  std::uint64_t point_weight_updates = 0;
  std::uint64_t term_weight_updates = 0;
  std::uint64_t extra_gradient_passes = 0;
  bool operator==(const OpCounters&) const = default;
};

/// Work one epoch's update performs for a scheme with `terms` terms and
/// `batch` points per term.
OpCounters epoch_cost(Scheme s, std::size_t batch, std::size_t terms);

struct WeightState {
  Scheme scheme = Scheme::Fixed;
  std::vector<std::string> terms;
  std::vector<double> term_weights;                // lambda_k
  std::vector<std::vector<double>> point_weights;  // rba / sa, one per term
  std::vector<double> initial_losses;              // gradnorm L_i(0)
  Hyper hyper;
  std::int64_t step_count = 0;
  OpCounters ops;
};

/// Initial state: every lambda = 1. Point-weight arrays are sized from
/// `pool_sizes` for point-wise schemes (ignored otherwise).
WeightState make_state(Scheme s, std::vector<std::string> terms,
                       const Hyper& hyper = {},
                       std::span<const std::size_t> pool_sizes = {});

/// Constant weights, one per term. Throws "weight/term arity mismatch".
WeightState fixed_weights(std::vector<std::string> terms,
                          std::span<const double> weights);

/// Broadcast (phy, boundary, initial) constants over a term list whose
/// first entry is the physics term and whose "initial" entry is the
/// initial condition.
std::vector<double> heuristic_weights(std::span<const std::string> terms,
                                      double phy, double bc, double ic);

/// Residual magnitudes of one term's batch and the pool index of each row.
struct PointStats {
  std::vector<std::size_t> index;
  std::vector<double> residual;
  /// index = 0..n-1
  static PointStats dense(std::vector<double> residual);
};

WeightState rba_update(WeightState s, std::span<const PointStats> stats);
/// Throws "weight divergence" if a weight becomes non-finite.
WeightState sa_update(WeightState s, std::span<const PointStats> stats);
/// term_grads[k] is the gradient of the unweighted term k w.r.t. all
/// network parameters; term 0 is the residual term and keeps lambda = 1.
WeightState lra_update(WeightState s, std::span<const std::vector<double>> term_grads);
/// grad_norms[k]: norm of the unweighted term-k gradient restricted to the
/// shared layer; losses[k]: current aggregate. The first call records
/// L_i(0). Throws "weight divergence" if the weights become non-finite or
/// their sum non-positive.
WeightState gradnorm_update(WeightState s, std::span<const double> grad_norms,
                            std::span<const double> losses);

/// Per-term multiplier of the term's (point-weighted) mean: lambda_k for
/// per-term schemes, 1 for point-wise ones.
double term_coefficient(const WeightState& s, std::size_t k);

/// Effective weight of each batch row of term k: lambda (rba), lambda^2
/// (sa), 1 otherwise.
std::vector<double> batch_point_weights(const WeightState& s, std::size_t k,
                                        std::span<const std::size_t> index);

/// sum_k coef_k * mean_i(w_ki * pointwise_ki). `index[k]` gives the pool
/// rows of term k's batch and may be empty for per-term schemes.
/// Throws "weight/term arity mismatch".
double weighted_total(std::span<const std::vector<double>> pointwise,
                      const WeightState& s,
                      std::span<const std::vector<std::size_t>> index = {});

void save_state(Archive& ar, const WeightState& s);
WeightState load_state(const Archive& ar);

}  // namespace pinn::balancing
