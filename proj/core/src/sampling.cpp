#include "pinn/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "pinn/error.hpp"

namespace pinn::sampling {

std::string_view case_name(CaseKind kind) {
  switch (kind) {
    case CaseKind::Cavity: return "cavity";
    case CaseKind::Poiseuille: return "poiseuille";
    case CaseKind::BfsSlip: return "bfs-slip";
    case CaseKind::BfsNoSlip: return "bfs-no-slip";
  }
  return "?";
}

CaseKind parse_case(std::string_view name) {
  for (auto k : {CaseKind::Cavity, CaseKind::Poiseuille, CaseKind::BfsSlip,
                 CaseKind::BfsNoSlip})
    if (case_name(k) == name) return k;
  throw Error("invalid config: unknown case '" + std::string(name) + "'");
}

Point Box::from_unit(const Point& u) const {
  Point p;
  for (std::size_t i = 0; i < 3; ++i) p[i] = lo[i] + u[i] * (hi[i] - lo[i]);
  return p;
}

Point Box::to_unit(const Point& p) const {
  Point u;
  for (std::size_t i = 0; i < 3; ++i) u[i] = (p[i] - lo[i]) / (hi[i] - lo[i]);
  return u;
}

const Segment& CaseDefinition::segment(std::string_view tag) const {
  for (const auto& s : segments)
    if (s.tag == tag) return s;
  throw Error("undefined boundary: '" + std::string(tag) + "' in case " +
              std::string(name()));
}

CaseDefinition make_case(CaseKind kind) {
  CaseDefinition c;
  c.kind = kind;
  switch (kind) {
    case CaseKind::Cavity:
      c.domain = {{0.0, 0.0, 0.0}, {10.0, 1.0, 1.0}};
      c.rho = 1056.0;
      c.nu = 0.01;
      c.segments = {{"left", 1, {0.0}},
                    {"right", 1, {1.0}},
                    {"bottom", 2, {0.0}},
                    {"up", 2, {1.0}}};
      break;
    case CaseKind::Poiseuille:
      c.domain = {{0.0, 0.0, -0.0075}, {5.0, 1.0, 0.0075}};
      c.rho = 1060.0;
      c.nu = 3.3144e-6;
      break;
    case CaseKind::BfsSlip:
    case CaseKind::BfsNoSlip:
      c.domain = {{0.0, 0.0, -7.5e-3}, {5.0, 1.0, 7.5e-3}};
      c.rho = 1056.0;
      c.nu = 0.00345;
      break;
  }
  if (kind != CaseKind::Cavity) {
    c.segments = {{"inlet", 1, {c.domain.lo[1]}},
                  {"outlet", 1, {c.domain.hi[1]}},
                  {"wall", 2, {c.domain.lo[2], c.domain.hi[2]}}};
  }
  return c;
}

std::uint64_t stream_skip(std::size_t role_index, std::uint64_t seed) {
  // Role streams are 2^24 points apart; the seed shifts every stream by a
  // multiple of 2^10 inside its window. Index 0 (the origin) is never used.
  return (static_cast<std::uint64_t>(role_index) << 24) +
         ((seed % 4096u) << 10) + 1u;
}

namespace {

constexpr std::size_t kInteriorRole = 0;
constexpr std::size_t kInitialRole = 1;
constexpr std::size_t kFirstSegmentRole = 2;

}  // namespace

PointSet sample_interior(const CaseDefinition& c, std::size_t n,
                         std::uint64_t seed) {
  const auto raw = sobol(n, 3, stream_skip(kInteriorRole, seed));
  PointSet ps{"interior", {}};
  ps.rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r)
    ps.rows.push_back(c.domain.from_unit({raw[3 * r], raw[3 * r + 1], raw[3 * r + 2]}));
  return ps;
}

PointSet sample_initial(const CaseDefinition& c, std::size_t n,
                        std::uint64_t seed) {
  const auto raw = sobol(n, 2, stream_skip(kInitialRole, seed));
  PointSet ps{"initial", {}};
  ps.rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    Point p = c.domain.from_unit({0.0, raw[2 * r], raw[2 * r + 1]});
    p[0] = c.domain.lo[0];
    ps.rows.push_back(p);
  }
  return ps;
}

PointSet sample_segment(const CaseDefinition& c, std::string_view tag,
                        std::size_t n, std::uint64_t seed) {
  std::size_t index = 0;
  while (index < c.segments.size() && c.segments[index].tag != tag) ++index;
  if (index == c.segments.size())
    throw Error("undefined boundary: '" + std::string(tag) + "' in case " +
                std::string(c.name()));
  const Segment& seg = c.segments[index];
  const auto raw = sobol(n, 2, stream_skip(kFirstSegmentRole + index, seed));
  const std::size_t free_axis = seg.axis == 1 ? 2 : 1;
  PointSet ps{"boundary:" + seg.tag, {}};
  ps.rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    Point u{raw[2 * r], 0.0, 0.0};
    u[free_axis] = raw[2 * r + 1];
    Point p = c.domain.from_unit(u);
    p[static_cast<std::size_t>(seg.axis)] = seg.values[r % seg.values.size()];
    ps.rows.push_back(p);
  }
  return ps;
}

std::vector<PointSet> sample_case(const CaseDefinition& c,
                                  const SampleCounts& counts,
                                  std::uint64_t seed) {
  std::vector<PointSet> out;
  out.push_back(sample_interior(c, counts.interior, seed));
  out.push_back(sample_initial(c, counts.initial, seed));
  for (const auto& s : c.segments)
    out.push_back(sample_segment(c, s.tag, counts.boundary, seed));
  return out;
}

std::vector<std::size_t> minibatch_indices(std::size_t pool, std::size_t batch,
                                           std::mt19937_64& rng) {
  if (batch > pool)
    throw Error("insufficient points: batch " + std::to_string(batch) +
                " > pool " + std::to_string(pool));
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(batch);
  return idx;
}

PointSet minibatch(const PointSet& points, std::size_t batch,
                   std::mt19937_64& rng) {
  PointSet out{points.role, {}};
  out.rows.reserve(batch);
  for (std::size_t i : minibatch_indices(points.rows.size(), batch, rng))
    out.rows.push_back(points.rows[i]);
  return out;
}

void write_points_csv(std::ostream& out, std::span<const PointSet> sets) {
  const auto old = out.precision(17);
  out << "role,t,x,y\n";
  for (const auto& s : sets)
    for (const auto& p : s.rows)
      out << s.role << ',' << p[0] << ',' << p[1] << ',' << p[2] << '\n';
  out.precision(old);
}

}  // namespace pinn::sampling
