#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pinn/evaluation.hpp"
#include "pinncli/config.hpp"

namespace pinncli {

/// Exit status of a command: 0 success, 2 training diverged, 1 error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDiverged = 2;

/// Reference field for a config: a CSV path, or "analytic" for the
/// closed-form channel profile (poiseuille only). Empty path -> nullopt.
/// Throws "reference not found".
std::optional<pinn::eval::ReferenceField> load_reference(const RunConfig& cfg);

/// The analytic channel-flow reference used for poiseuille (6 x 21 x 21
/// grid, centreline velocity 1.5 * inflow).
pinn::eval::ReferenceField analytic_reference(const pinn::sampling::CaseDefinition& c);

struct RunOutcome {
  std::vector<std::string> terms;
  std::vector<pinn::train::TrainRecord> history;
  std::optional<pinn::eval::RmseReport> report;
  pinn::eval::FailureStatus status;
  double final_loss = 0.0;
};

/// Trains one resolved config into `dir`, writing manifest.txt,
/// history.csv, weights.csv, timing.csv, checkpoint, status.txt and, with a
/// reference, report.txt.
RunOutcome run_training(const RunConfig& cfg, const std::filesystem::path& dir);

/// Report of the network stored in the config's checkpoint.
pinn::eval::RmseReport evaluate_checkpoint(const RunConfig& cfg,
                                           const pinn::eval::ReferenceField& ref);

int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_export(const RunConfig& cfg);
/// Takes the unresolved config; each cell is resolved on its own.
int cmd_sweep(const RunConfig& cfg);

/// Runs `command` ("train", "eval", "export", "sweep") on an unresolved,
/// validated config.
int dispatch(const std::string& command, const RunConfig& cfg);

}  // namespace pinncli
