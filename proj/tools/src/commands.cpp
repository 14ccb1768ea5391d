#include "pinncli/commands.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "pinn/error.hpp"
#include "pinn/physics.hpp"
#include "pinn/trainer.hpp"

namespace pinncli {

namespace fs = std::filesystem;
using pinn::Error;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

template <class F>
void write_with(const fs::path& path, F&& f) {
  std::ostringstream os;
  f(os);
  write_file(path, os.str());
}

pinn::balancing::WeightState initial_weights(const RunConfig& cfg,
                                             const pinn::train::Problem& problem) {
  const auto scheme = pinn::balancing::parse_scheme(cfg.scheme);
  if (scheme == pinn::balancing::Scheme::Fixed)
    return pinn::balancing::fixed_weights(problem.term_names(), cfg.weights);
  return pinn::balancing::make_state(scheme, problem.term_names(), make_hyper(cfg),
                                     problem.pool_sizes());
}

std::string report_text(const pinn::eval::RmseReport& r,
                        const pinn::eval::FailureStatus& status) {
  std::ostringstream os;
  pinn::eval::write_report(os, r);
  os << "status=" << status.label() << '\n';
  if (!status.reason.empty()) os << "reason=" << status.reason << '\n';
  return os.str();
}

std::string status_text(const RunOutcome& o, std::int64_t epochs_done) {
  std::string s;
  s += "status=" + o.status.label() + "\n";
  s += fmt::format("epochs_completed={}\n", epochs_done);
  s += fmt::format("final_loss={:.17g}\n", o.final_loss);
  if (o.status.epoch) s += fmt::format("diverged_epoch={}\n", *o.status.epoch);
  if (!o.status.reason.empty()) s += "reason=" + o.status.reason + "\n";
  if (!o.history.empty()) {
    std::vector<double> secs;
    for (const auto& r : o.history) secs.push_back(r.iter_seconds);
    const auto t = pinn::eval::timing_summary(secs);
    s += fmt::format("iter_seconds_mean={:.9g}\niter_seconds_p50={:.9g}\n"
                     "iter_seconds_p95={:.9g}\n",
                     t.mean, t.p50, t.p95);
  }
  return s;
}

}  // namespace

pinn::eval::ReferenceField analytic_reference(const pinn::sampling::CaseDefinition& c) {
  return pinn::eval::poiseuille_reference(c, 1.5 * c.inflow, 6, 21, 21);
}

std::optional<pinn::eval::ReferenceField> load_reference(const RunConfig& cfg) {
  if (cfg.reference.empty()) return std::nullopt;
  if (cfg.reference == "analytic") {
    const auto c = make_case(cfg);
    if (c.kind != pinn::sampling::CaseKind::Poiseuille)
      throw Error("reference not found: no analytic reference for case " + cfg.case_name);
    return analytic_reference(c);
  }
  return pinn::eval::read_reference_csv(cfg.reference);
}

pinn::eval::RmseReport evaluate_checkpoint(const RunConfig& cfg,
                                           const pinn::eval::ReferenceField& ref) {
  const auto ckpt = checkpoint_path(cfg);
  if (!fs::exists(ckpt)) throw Error("reference not found: no checkpoint at " + ckpt.string());
  const auto state = pinn::train::load_checkpoint(ckpt);
  const auto c = make_case(cfg);
  const auto pts = ref.points();
  return pinn::eval::rmse(pinn::eval::predict(state.params, c, pts), ref);
}

RunOutcome run_training(const RunConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "manifest.txt", to_manifest(cfg));

  const auto c = make_case(cfg);
  const auto spec = make_spec(cfg);
  auto params = pinn::nets::init_params(spec, cfg.seed);
  auto problem = pinn::train::make_problem(c, params, make_counts(cfg), cfg.seed);
  auto state = pinn::train::initial_state(std::move(params), initial_weights(cfg, problem),
                                          cfg.seed, make_adam(cfg));

  RunConfig run_cfg = cfg;
  if (run_cfg.checkpoint.empty()) run_cfg.checkpoint = (dir / "checkpoint.txt").string();
  const fs::path ckpt = run_cfg.checkpoint;
  if (cfg.resume && fs::exists(ckpt)) {
    auto loaded = pinn::train::load_checkpoint(ckpt);
    if (loaded.params.values.size() != state.params.values.size() ||
        loaded.weights.terms != state.weights.terms)
      throw Error("invalid config: checkpoint " + ckpt.string() +
                  " does not match the configured network or case");
    spdlog::info("resuming from {} at epoch {}", ckpt.string(), loaded.epoch);
    state = std::move(loaded);
  }

  pinn::train::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch = cfg.batch;
  tc.checkpoint_every = cfg.checkpoint_every;
  tc.checkpoint_path = ckpt;
  tc.log_every = cfg.log_every;

  RunOutcome out;
  out.terms = problem.term_names();
  std::optional<std::int64_t> diverged;
  std::string reason;
  try {
    pinn::train::train(problem, state, tc);
  } catch (const pinn::DivergenceError& e) {
    diverged = e.epoch();
    reason = e.what();
    spdlog::error("{}", reason);
  }
  pinn::train::save_checkpoint(ckpt, state);
  out.history = state.history;
  out.final_loss = out.history.empty() ? 0.0 : out.history.back().total;

  write_with(dir / "history.csv", [&](std::ostream& os) {
    pinn::train::write_history_csv(os, out.terms, out.history);
  });
  write_with(dir / "weights.csv", [&](std::ostream& os) {
    pinn::train::write_weight_csv(os, out.terms, out.history);
  });
  write_with(dir / "timing.csv", [&](std::ostream& os) {
    pinn::train::write_timing_csv(os, out.history);
  });

  if (auto ref = load_reference(cfg); ref && !diverged)
    out.report = pinn::eval::rmse(pinn::eval::predict(state.params, c, ref->points()), *ref);
  out.status = pinn::eval::detect_failure(out.report ? &*out.report : nullptr, diverged,
                                          reason);
  if (out.report) write_file(dir / "report.txt", report_text(*out.report, out.status));
  write_file(dir / "status.txt", status_text(out, state.epoch));
  return out;
}

int cmd_train(const RunConfig& cfg) {
  const auto dir = output_dir(cfg);
  const auto out = run_training(cfg, dir);
  spdlog::info("train: {} epochs, final loss {:.6e}, status {} -> {}", out.history.size(),
               out.final_loss, out.status.label(), dir.string());
  if (!out.status.reason.empty()) spdlog::info("status reason: {}", out.status.reason);
  return out.status.epoch ? kExitDiverged : kExitOk;
}

int cmd_eval(const RunConfig& cfg) {
  const auto ref = load_reference(cfg);
  if (!ref) throw Error("reference not found: set paths.reference");
  const auto report = evaluate_checkpoint(cfg, *ref);
  const auto status = pinn::eval::detect_failure(&report);
  const auto text = report_text(report, status);
  write_file(output_dir(cfg) / "report.txt", text);
  std::cout << text;
  return kExitOk;
}

int cmd_export(const RunConfig& cfg) {
  const auto ckpt = checkpoint_path(cfg);
  if (!fs::exists(ckpt)) throw Error("reference not found: no checkpoint at " + ckpt.string());
  const auto state = pinn::train::load_checkpoint(ckpt);
  const auto c = make_case(cfg);
  const double t = cfg.export_t < 0.0 ? c.domain.hi[0] : cfg.export_t;
  const auto ref = load_reference(cfg);
  const auto path = output_dir(cfg) / "field_grid.csv";
  bool with_ref = false;
  write_with(path, [&](std::ostream& os) {
    with_ref = pinn::eval::export_field_grid(os, state.params, c, t, cfg.export_nx,
                                             cfg.export_ny, ref ? &*ref : nullptr);
  });
  spdlog::info("export: {}x{} grid at t={} -> {}{}", cfg.export_nx, cfg.export_ny, t,
               path.string(), with_ref ? " (with reference columns)" : "");
  return kExitOk;
}

int cmd_sweep(const RunConfig& base) {
  struct Cell {
    std::string scheme, family, case_name;
    std::optional<double> rmse;
    double final_loss = 0.0;
    std::string status;
  };
  std::vector<Cell> cells;
  const auto root = output_dir(base);
  for (const auto& case_name : base.sweep_cases) {
    for (const auto& family : base.sweep_families) {
      for (const auto& scheme : base.sweep_schemes) {
        RunConfig cfg = base;
        cfg.case_name = case_name;
        cfg.family = family;
        cfg.scheme = scheme;
        cfg.checkpoint.clear();
        cfg.resume = false;
        cfg.reference.clear();
        if (!base.sweep_reference_dir.empty()) {
          const auto file = fs::path(base.sweep_reference_dir) / (case_name + ".csv");
          if (fs::exists(file)) cfg.reference = file.string();
        }
        if (cfg.reference.empty() && case_name == "poiseuille") cfg.reference = "analytic";
        const auto dir = root / case_name / family / scheme;
        cfg.output = dir.string();
        validate(cfg);
        cfg = resolve(cfg);
        spdlog::info("sweep cell {}/{}/{}", case_name, family, scheme);
        const auto out = run_training(cfg, dir);
        Cell cell{scheme, family, case_name, std::nullopt, out.final_loss,
                  out.status.label()};
        if (out.report) {
          const auto& r = *out.report;
          cell.rmse = base.sweep_field == "u" ? r.u.rmse
                      : base.sweep_field == "v" ? r.v.rmse
                                                : r.p.rmse;
        }
        cells.push_back(cell);
      }
    }
  }

  const auto fmt_opt = [](std::optional<double> v) {
    return v ? fmt::format("{:.17g}", *v) : std::string();
  };
  std::ostringstream os;
  os << "scheme,family,case,field,rmse,final_loss,delta_pct,status\n";
  for (const auto& c : cells) {
    std::optional<double> delta;
    if (c.family == "kan") {
      for (const auto& t : cells) {
        if (t.family != "tanh-mlp" || t.case_name != c.case_name || t.scheme != c.scheme)
          continue;
        delta = (t.rmse && c.rmse)
                    ? pinn::eval::delta_improvement(*t.rmse, *c.rmse)
                    : pinn::eval::delta_improvement(t.final_loss, c.final_loss);
      }
    }
    os << c.scheme << ',' << c.family << ',' << c.case_name << ',' << base.sweep_field
       << ',' << fmt_opt(c.rmse) << ',' << fmt::format("{:.17g}", c.final_loss) << ','
       << fmt_opt(delta) << ',' << c.status << '\n';
  }
  write_file(root / "sweep.csv", os.str());
  std::cout << os.str();
  return kExitOk;
}

int dispatch(const std::string& command, const RunConfig& cfg) {
  if (command == "sweep") return cmd_sweep(cfg);
  const RunConfig resolved = resolve(cfg);
  if (command == "train") return cmd_train(resolved);
  if (command == "eval") return cmd_eval(resolved);
  if (command == "export") return cmd_export(resolved);
  throw Error("unknown option: command '" + command + "'");
}

}  // namespace pinncli
