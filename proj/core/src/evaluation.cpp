#include "pinn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include <spdlog/fmt/fmt.h>

#include "pinn/error.hpp"
#include "pinn/physics.hpp"

namespace pinn::eval {

std::vector<sampling::Point> ReferenceField::points() const {
  std::vector<sampling::Point> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.t, r.x, r.y});
  return out;
}

void ReferenceField::validate() const {
  std::map<std::tuple<double, double, double>, std::size_t> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    for (double d : {r.t, r.x, r.y, r.u, r.v, r.p})
      if (!std::isfinite(d))
        throw Error("invalid reference: non-finite value in row " + std::to_string(i + 1));
    auto [it, fresh] = seen.emplace(std::make_tuple(r.t, r.x, r.y), i);
    if (!fresh)
      throw Error(fmt::format("invalid reference: duplicate point (t={}, x={}, y={}) "
                              "in rows {} and {}",
                              r.t, r.x, r.y, it->second + 1, i + 1));
  }
}

ReferenceField read_reference_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("reference not found: " + path.string());
  ReferenceField ref;
  ref.source = path.string();
  std::string line;
  if (!std::getline(in, line)) throw Error("invalid reference: empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y,u,v,p")
    throw Error("invalid reference: expected header 't,x,y,u,v,p' in " + path.string());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[6];
    const char* p = line.c_str();
    for (int k = 0; k < 6; ++k) {
      char* end = nullptr;
      v[k] = std::strtod(p, &end);
      if (end == p || (k < 5 && *end != ',') || (k == 5 && *end != '\0'))
        throw Error("invalid reference: malformed line " + std::to_string(lineno) +
                    " of " + path.string());
      p = end + 1;
    }
    ref.rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  ref.validate();
  return ref;
}

void write_reference_csv(std::ostream& out, const ReferenceField& ref) {
  out << "t,x,y,u,v,p\n";
  for (const auto& r : ref.rows)
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.t, r.x,
                       r.y, r.u, r.v, r.p);
}

double grid_coordinate(double lo, double hi, std::size_t i, std::size_t n) {
  if (n <= 1) return lo;
  if (i + 1 == n) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

ReferenceField poiseuille_reference(const sampling::CaseDefinition& c, double U,
                                    std::size_t nt, std::size_t nx, std::size_t ny) {
  const auto& d = c.domain;
  const double h = 0.5 * (d.hi[2] - d.lo[2]);
  const double yc = 0.5 * (d.hi[2] + d.lo[2]);
  const double dpdx = -2.0 * c.rho * c.nu * U / (h * h);
  ReferenceField ref;
  ref.source = "analytic channel flow";
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const double t = grid_coordinate(d.lo[0], d.hi[0], a, nt);
        const double x = grid_coordinate(d.lo[1], d.hi[1], i, nx);
        const double y = grid_coordinate(d.lo[2], d.hi[2], j, ny);
        const double s = (y - yc) / h;
        ref.rows.push_back({t, x, y, U * (1.0 - s * s), 0.0, dpdx * (x - d.hi[1])});
      }
  return ref;
}

FieldValues predict(const nets::Params& params, const sampling::CaseDefinition& c,
                    std::span<const sampling::Point> points) {
  ad::Graph g;
  const ad::Var t = g.input(0), x = g.input(1), y = g.input(2);
  const auto f = physics::network_fields(params, physics::case_scaling(c, params.spec))(g, t, x, y);
  const ad::Var outs[3] = {f.u, f.v, f.p};
  ad::Program prog(g, outs);
  FieldValues out;
  for (const auto& pt : points) {
    prog.run({pt, params.values});
    out.u.push_back(prog.output(0));
    out.v.push_back(prog.output(1));
    out.p.push_back(prog.output(2));
  }
  return out;
}

namespace {

FieldError field_error(std::span<const double> pred, const std::vector<double>& ref) {
  double se = 0.0, sr = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = pred[i] - ref[i];
    se += d * d;
    sr += ref[i] * ref[i];
  }
  const double n = static_cast<double>(ref.size());
  FieldError e;
  e.rmse = std::sqrt(se / n);
  e.ref_rms = std::sqrt(sr / n);
  if (e.ref_rms > 0.0) e.relative = e.rmse / e.ref_rms;
  e.reliable = e.ref_rms >= 1e-6;
  return e;
}

}  // namespace

RmseReport rmse(const FieldValues& pred, const ReferenceField& ref) {
  const std::size_t n = ref.rows.size();
  if (n == 0) throw Error("no evaluation points: reference is empty");
  if (pred.u.size() != n || pred.v.size() != n || pred.p.size() != n)
    throw Error("shape error: " + std::to_string(pred.u.size()) + " predictions for " +
                std::to_string(n) + " reference rows");
  std::vector<double> ru, rv, rp;
  for (const auto& r : ref.rows) {
    ru.push_back(r.u);
    rv.push_back(r.v);
    rp.push_back(r.p);
  }
  RmseReport rep;
  rep.n = n;
  rep.u = field_error(pred.u, ru);
  rep.v = field_error(pred.v, rv);
  rep.p = field_error(pred.p, rp);
  return rep;
}

std::optional<double> delta_improvement(double rmse_tanh, double rmse_kan) {
  if (rmse_tanh == 0.0) return std::nullopt;
  return (rmse_tanh - rmse_kan) / rmse_tanh * 100.0;
}

TimingSummary timing_summary(std::span<const double> seconds) {
  if (seconds.empty()) throw Error("empty history: no iteration timings recorded");
  std::vector<double> v(seconds.begin(), seconds.end());
  TimingSummary s;
  s.n = v.size();
  double sum = 0.0;
  for (double d : v) sum += d;
  s.mean = sum / static_cast<double>(v.size());
  const auto rank = [&](double pct) {
    auto r = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(v.size())));
    r = std::clamp<std::size_t>(r, 1, v.size());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(r - 1), v.end());
    return v[r - 1];
  };
  s.p50 = rank(50.0);
  s.p95 = rank(95.0);
  return s;
}

bool export_field_grid(std::ostream& out, const nets::Params& params,
                       const sampling::CaseDefinition& c, double t, std::size_t nx,
                       std::size_t ny, const ReferenceField* ref) {
  const auto& d = c.domain;
  if (!(t >= d.lo[0] && t <= d.hi[0]))
    throw Error(fmt::format("time out of range: t={} outside [{}, {}]", t, d.lo[0], d.hi[0]));
  std::vector<sampling::Point> pts;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      pts.push_back({t, grid_coordinate(d.lo[1], d.hi[1], i, nx),
                     grid_coordinate(d.lo[2], d.hi[2], j, ny)});
  const FieldValues f = predict(params, c, pts);

  std::vector<const ReferenceRow*> match;
  if (ref != nullptr) {
    std::map<std::tuple<double, double, double>, const ReferenceRow*> lookup;
    for (const auto& r : ref->rows) lookup[{r.t, r.x, r.y}] = &r;
    for (const auto& p : pts) {
      auto it = lookup.find({p[0], p[1], p[2]});
      if (it == lookup.end()) {
        match.clear();
        break;
      }
      match.push_back(it->second);
    }
  }
  const bool with_ref = !match.empty();
  out << "x,y,u,v,p";
  if (with_ref) out << ",u_ref,v_ref,p_ref,abs_err_u,abs_err_v,abs_err_p";
  out << '\n';
  for (std::size_t k = 0; k < pts.size(); ++k) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", pts[k][1], pts[k][2],
                       f.u[k], f.v[k], f.p[k]);
    if (with_ref) {
      const auto& r = *match[k];
      out << fmt::format(",{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", r.u, r.v, r.p,
                         std::abs(f.u[k] - r.u), std::abs(f.v[k] - r.v),
                         std::abs(f.p[k] - r.p));
    }
    out << '\n';
  }
  return with_ref;
}

FailureStatus detect_failure(const RmseReport* report,
                             std::optional<std::int64_t> diverged_epoch,
                             const std::string& divergence_reason) {
  FailureStatus s;
  if (diverged_epoch) {
    s.failed = true;
    s.epoch = diverged_epoch;
    const std::string tag = fmt::format("epoch {}", *diverged_epoch);
    if (divergence_reason.empty())
      s.reason = "training diverged at " + tag;
    else if (divergence_reason.find(tag) == std::string::npos)
      s.reason = "training diverged at " + tag + ": " + divergence_reason;
    else
      s.reason = divergence_reason;
    return s;
  }
  if (report == nullptr) return s;
  const std::pair<const char*, const FieldError*> fields[] = {
      {"u", &report->u}, {"v", &report->v}, {"p", &report->p}};
  for (const auto& [name, e] : fields) {
    if (e->reliable && e->relative && *e->relative > 0.9) {
      s.failed = true;
      s.reason += fmt::format("{}relative error of {} is {:.1f}% (> 90%)",
                              s.reason.empty() ? "" : "; ", name, *e->relative * 100.0);
    }
  }
  return s;
}

void write_report(std::ostream& out, const RmseReport& r) {
  out << "n=" << r.n << '\n';
  const std::pair<const char*, const FieldError*> fields[] = {
      {"u", &r.u}, {"v", &r.v}, {"p", &r.p}};
  for (const auto& [name, e] : fields) {
    out << fmt::format("rmse_{}={:.17g}\n", name, e->rmse);
    out << fmt::format("ref_rms_{}={:.17g}\n", name, e->ref_rms);
    if (e->relative)
      out << fmt::format("rel_{}={:.17g}\n", name, *e->relative);
    else
      out << fmt::format("rel_{}=n/a\n", name);
    out << fmt::format("reliable_{}={}\n", name, e->reliable ? 1 : 0);
  }
}

}  // namespace pinn::eval
