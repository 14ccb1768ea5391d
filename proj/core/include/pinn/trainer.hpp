#pragma once

// Mini-batch training loop. One epoch is one iteration: a batch per term,
// per-term gradients, Adam step, then the end-of-epoch weight update.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinn/adam.hpp"
#include "pinn/balancing.hpp"
#include "pinn/nets.hpp"
#include "pinn/physics.hpp"
#include "pinn/sampling.hpp"

namespace pinn::train {

/// Loss terms with their collocation pools. pools[k] feeds terms[k].
struct Problem {
  std::vector<physics::TermProgram> terms;
  std::vector<sampling::PointSet> pools;
  /// Parameter range used for GradNorm's gradient norms.
  std::pair<std::size_t, std::size_t> shared_range{0, 0};

  std::vector<std::string> term_names() const;
  std::vector<std::size_t> pool_sizes() const;
};

/// Compiles the case's loss terms for the network layout of `params` and
/// samples their pools.
Problem make_problem(const sampling::CaseDefinition& c, const nets::Params& params,
                     const sampling::SampleCounts& counts, std::uint64_t seed);

struct TrainRecord {
  std::int64_t epoch = 0;
  std::vector<double> terms;    // per-term aggregates
  double total = 0.0;           // weighted total
  std::vector<double> weights;  // weights used for `total` (mean effective
                                // point weight for point-wise schemes)
  double iter_seconds = 0.0;
};

struct TrainState {
  nets::Params params;
  AdamState adam;
  balancing::WeightState weights;
  std::mt19937_64 rng;
  std::int64_t epoch = 0;  // epochs completed
  std::vector<TrainRecord> history;
};

TrainState initial_state(nets::Params params, balancing::WeightState weights,
                         std::uint64_t seed, const AdamConfig& adam = {});

struct TrainConfig {
  std::int64_t epochs = 5000;  // train until this many epochs are completed
  std::size_t batch = 128;
  std::int64_t checkpoint_every = 1000;  // 0 disables
  std::filesystem::path checkpoint_path;  // empty disables
  std::int64_t log_every = 0;             // 0 disables progress logging
  /// Called after every completed epoch.
  std::function<void(const TrainState&)> on_epoch;
};

/// Trains in place from state.epoch + 1 through config.epochs. Pre-flight
/// problems (arity, batch larger than a pool) throw pinn::Error; numerical
/// failure during an epoch throws DivergenceError ("training diverged")
/// carrying that epoch, with `state` holding everything before it.
void train(Problem& problem, TrainState& state, const TrainConfig& config);

/// One epoch's losses without any update (same evaluation path as train).
std::vector<physics::LossTerm> epoch_losses(Problem& problem, const TrainState& state,
                                            std::span<const sampling::PointSet> batches);

void save_checkpoint(const std::filesystem::path& path, const TrainState& s);
TrainState load_checkpoint(const std::filesystem::path& path);

/// `epoch,total,<terms>`; doubles printed with 17 significant digits.
void write_history_csv(std::ostream& out, std::span<const std::string> terms,
                       std::span<const TrainRecord> history);
/// `epoch,term,lambda`
void write_weight_csv(std::ostream& out, std::span<const std::string> terms,
                      std::span<const TrainRecord> history);
/// `epoch,iter_seconds`
void write_timing_csv(std::ostream& out, std::span<const TrainRecord> history);

}  // namespace pinn::train
