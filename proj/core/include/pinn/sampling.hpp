#pragma once

// Flow-case domain definitions, Sobol collocation and mini-batching.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pinn::sampling {

/// Unscrambled Sobol points with Joe-Kuo direction numbers, Gray-code order.
/// Returns n rows of `dim` coordinates (row-major) in [0,1). Point index 0 is
/// the origin: with skip = 0 the first row is all zeros. Row r is point
/// index skip + r. Supports 1 <= dim <= 6; throws "dimension out of range".
std::vector<double> sobol(std::size_t n, std::size_t dim, std::uint64_t skip = 0);

enum class CaseKind { Cavity, Poiseuille, BfsSlip, BfsNoSlip };

std::string_view case_name(CaseKind kind);
CaseKind parse_case(std::string_view name);

using Point = std::array<double, 3>;  // (t, x, y)

struct Box {
  Point lo;
  Point hi;
  Point from_unit(const Point& u) const;
  Point to_unit(const Point& p) const;
};

/// A boundary piece: coordinate `axis` (1 = x, 2 = y) is pinned to one of
/// `values`; rows alternate between values when there are two (channel
/// walls).
struct Segment {
  std::string tag;
  int axis = 1;
  std::vector<double> values;
};

struct CaseDefinition {
  CaseKind kind = CaseKind::Cavity;
  Box domain;          // [t0,tr] x [x0,xr] x [y0,yr]
  double rho = 1.0;    // density
  double nu = 0.0;     // viscosity, as given per case
  std::vector<Segment> segments;

  // Boundary/initial data.
  double lid_velocity = 1.0;  // cavity "up"
  double inflow = 0.2;        // inlet/initial streamwise velocity
  double p_inlet = 0.0;
  double p_wall = 0.0;
  double u_outlet = 0.0;
  double v_outlet = 0.0;

  const Segment& segment(std::string_view tag) const;
  std::string_view name() const { return case_name(kind); }
};

/// The four flow cases with their physical constants.
CaseDefinition make_case(CaseKind kind);

struct PointSet {
  std::string role;  // "interior", "initial" or "boundary:<tag>"
  std::vector<Point> rows;
};

struct SampleCounts {
  std::size_t interior = 20000;
  std::size_t boundary = 2000;  // per segment
  std::size_t initial = 2000;
};

/// Sobol stream offset used for a role, derived from the seed. Streams for
/// different roles never overlap for pools below 2^24 points.
std::uint64_t stream_skip(std::size_t role_index, std::uint64_t seed);

PointSet sample_interior(const CaseDefinition& c, std::size_t n, std::uint64_t seed);
PointSet sample_initial(const CaseDefinition& c, std::size_t n, std::uint64_t seed);
/// Throws "undefined boundary" for an unknown tag.
PointSet sample_segment(const CaseDefinition& c, std::string_view tag,
                        std::size_t n, std::uint64_t seed);

/// Interior, initial, then every segment in declaration order.
std::vector<PointSet> sample_case(const CaseDefinition& c,
                                  const SampleCounts& counts, std::uint64_t seed);

/// Uniform draw of `batch` distinct indices from [0, pool) by a partial
/// Fisher-Yates shuffle. Throws "insufficient points" if batch > pool.
std::vector<std::size_t> minibatch_indices(std::size_t pool, std::size_t batch,
                                           std::mt19937_64& rng);
PointSet minibatch(const PointSet& points, std::size_t batch, std::mt19937_64& rng);

/// `role,t,x,y` with a header line.
void write_points_csv(std::ostream& out, std::span<const PointSet> sets);

}  // namespace pinn::sampling
