#pragma once

// Run configuration: a flat `section.key = value` text format. The same
// format is used for config files and for the manifest each run writes, so
// a manifest can be fed back as a config.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pinn/balancing.hpp"
#include "pinn/nets.hpp"
#include "pinn/sampling.hpp"
#include "pinn/trainer.hpp"

namespace pinncli {

struct RunConfig {
  // case.*
  std::string case_name = "cavity";
  double lid_velocity = 1.0;
  double inflow = 0.2;
  double p_inlet = 0.0;
  double p_wall = 0.0;
  double u_outlet = 0.0;
  double v_outlet = 0.0;

  // net.*  (empty layers: 3,20,20,3 for tanh-mlp, 3,5,5,3 for kan)
  std::string family = "tanh-mlp";
  std::vector<int> layers;
  int grid = 5;
  int order = 3;
  double noise = 0.1;

  // scheme.*  (empty weights: per-case heuristic for fixed)
  std::string scheme = "fixed";
  std::vector<double> weights;
  double rba_gamma = 0.5;
  double rba_eta = 0.5;
  double sa_lr = 0.001;
  double lra_alpha = 0.5;
  double lra_ceiling = 1e4;
  double gn_alpha = 1.5;
  double gn_lr = -1.0;  // < 0: same as train.lr

  // train.*
  std::int64_t epochs = 5000;
  std::size_t batch = 128;
  std::uint64_t seed = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t interior = 20000;
  std::size_t boundary = 2000;
  std::size_t initial = 2000;
  std::int64_t checkpoint_every = 1000;
  std::int64_t log_every = 0;
  bool resume = false;

  // paths.*
  std::string reference;   // CSV path, or "analytic" (poiseuille only)
  std::string output = "runs/default";
  std::string checkpoint;  // empty: <output>/checkpoint.txt

  // export.*
  double export_t = -1.0;  // < 0: end of the time interval
  std::size_t export_nx = 100;
  std::size_t export_ny = 100;

  // sweep.*
  std::vector<std::string> sweep_cases{"cavity", "poiseuille", "bfs-slip", "bfs-no-slip"};
  std::vector<std::string> sweep_families{"tanh-mlp", "kan"};
  std::vector<std::string> sweep_schemes{"fixed", "rba", "sa", "lra", "gradnorm"};
  std::string sweep_field = "u";
  std::string sweep_reference_dir;

  bool operator==(const RunConfig&) const = default;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; '#' starts a comment. Throws
/// "invalid config" on a line without '='.
KeyValues parse_key_values(const std::string& text);

/// Every accepted key, in manifest order.
const std::vector<std::string>& known_keys();

/// Sets one field. Throws "unknown option" or "invalid config: <key> ...".
void apply(RunConfig& cfg, const std::string& key, const std::string& value);

/// Throws "invalid config" naming the first invalid field.
void validate(const RunConfig& cfg);

/// Fills family- and case-dependent defaults (layers, fixed weights,
/// GradNorm step size) so the manifest records effective values.
RunConfig resolve(RunConfig cfg);

/// Defaults <- file (if given) <- flags, then validate and, unless
/// `resolved` is false, resolve.
RunConfig parse_config(const std::filesystem::path* file, const KeyValues& flags,
                       bool resolved = true);

/// Complete effective configuration in the config format.
std::string to_manifest(const RunConfig& cfg);

// Library objects derived from a config.
pinn::sampling::CaseDefinition make_case(const RunConfig& cfg);
pinn::nets::NetworkSpec make_spec(const RunConfig& cfg);
pinn::balancing::Hyper make_hyper(const RunConfig& cfg);
pinn::sampling::SampleCounts make_counts(const RunConfig& cfg);
pinn::train::AdamConfig make_adam(const RunConfig& cfg);

/// Output directory, prefixed by $PINN_OUTPUT_ROOT when relative.
std::filesystem::path output_dir(const RunConfig& cfg);
std::filesystem::path checkpoint_path(const RunConfig& cfg);

}  // namespace pinncli
