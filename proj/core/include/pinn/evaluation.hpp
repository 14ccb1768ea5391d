#pragma once

// Scoring against reference fields, the KAN-vs-tanh improvement percentage,
// field-grid export and iteration timing statistics.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinn/nets.hpp"
#include "pinn/sampling.hpp"

namespace pinn::eval {

struct ReferenceRow {
  double t, x, y, u, v, p;
};

struct ReferenceField {
  std::vector<ReferenceRow> rows;
  std::string source;

  std::vector<sampling::Point> points() const;
  /// Throws "invalid reference" on duplicate (t,x,y) keys or non-finite
  /// values.
  void validate() const;
};

/// Headered CSV `t,x,y,u,v,p`. Throws "reference not found" if the file is
/// missing.
ReferenceField read_reference_csv(const std::filesystem::path& path);
void write_reference_csv(std::ostream& out, const ReferenceField& ref);

/// i-th of n evenly spaced values on [lo, hi] (lo when n == 1).
double grid_coordinate(double lo, double hi, std::size_t i, std::size_t n);

/// Steady channel flow u = U (1 - (y/h)^2), v = 0, p = dp/dx (x - x_r) with
/// dp/dx = -2 rho nu U / h^2, on an nt x nx x ny grid of the case box.
ReferenceField poiseuille_reference(const sampling::CaseDefinition& c, double U,
                                    std::size_t nt, std::size_t nx, std::size_t ny);

struct FieldValues {
  std::vector<double> u, v, p;
};

/// Network prediction at the given points.
FieldValues predict(const nets::Params& params, const sampling::CaseDefinition& c,
                    std::span<const sampling::Point> points);

struct FieldError {
  double rmse = 0.0;
  double ref_rms = 0.0;
  std::optional<double> relative;  // absent when the reference RMS is 0
  bool reliable = false;           // reference RMS >= 1e-6
};

struct RmseReport {
  FieldError u, v, p;
  std::size_t n = 0;
};

/// Throws "no evaluation points" for an empty reference and "shape error"
/// when the prediction length differs.
RmseReport rmse(const FieldValues& pred, const ReferenceField& ref);

/// (tanh - kan) / tanh * 100; empty when tanh == 0.
std::optional<double> delta_improvement(double rmse_tanh, double rmse_kan);

struct TimingSummary {
  double mean = 0.0, p50 = 0.0, p95 = 0.0;
  std::size_t n = 0;
};

/// Mean and nearest-rank percentiles. Throws "empty history".
TimingSummary timing_summary(std::span<const double> seconds);

/// Writes `x,y,u,v,p` rows (x outer, y inner) at time t on an nx x ny grid,
/// adding `u_ref,v_ref,p_ref,abs_err_u,abs_err_v,abs_err_p` when `ref`
/// holds an exact row for every grid point. Returns whether reference
/// columns were written. Throws "time out of range".
bool export_field_grid(std::ostream& out, const nets::Params& params,
                       const sampling::CaseDefinition& c, double t, std::size_t nx,
                       std::size_t ny, const ReferenceField* ref = nullptr);

struct FailureStatus {
  bool failed = false;
  std::string reason;
  std::optional<std::int64_t> epoch;
  std::string label() const { return failed ? "F" : "OK"; }
};

/// F when any reliable field's relative error exceeds 0.9, or when the run
/// diverged (with its epoch).
FailureStatus detect_failure(const RmseReport* report,
                             std::optional<std::int64_t> diverged_epoch = {},
                             const std::string& divergence_reason = {});

/// key=value lines.
void write_report(std::ostream& out, const RmseReport& r);

}  // namespace pinn::eval
