#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "pinn/error.hpp"
#include "pinn/sampling.hpp"

using namespace pinn;
using namespace pinn::sampling;

namespace {

// scipy.stats.qmc.Sobol(d=6, scramble=False), which emits the origin first.
const double kFirst16[16][6] = {
    {0, 0, 0, 0, 0, 0},
    {.5, .5, .5, .5, .5, .5},
    {.75, .25, .25, .25, .75, .75},
    {.25, .75, .75, .75, .25, .25},
    {.375, .375, .625, .875, .375, .125},
    {.875, .875, .125, .375, .875, .625},
    {.625, .125, .875, .625, .625, .875},
    {.125, .625, .375, .125, .125, .375},
    {.1875, .3125, .9375, .4375, .5625, .3125},
    {.6875, .8125, .4375, .9375, .0625, .8125},
    {.9375, .0625, .6875, .1875, .3125, .5625},
    {.4375, .5625, .1875, .6875, .8125, .0625},
    {.3125, .1875, .3125, .5625, .9375, .4375},
    {.8125, .6875, .8125, .0625, .4375, .9375},
    {.5625, .4375, .0625, .8125, .1875, .6875},
    {.0625, .9375, .5625, .3125, .6875, .1875},
};
const double kIndex1000[6] = {0.2197265625, 0.0966796875, 0.5185546875,
                              0.6767578125, 0.2802734375, 0.9072265625};
const double kIndex1001[6] = {0.7197265625, 0.5966796875, 0.0185546875,
                              0.1767578125, 0.7802734375, 0.4072265625};

// Largest |fraction of points in [0,a)x[0,b) - a*b| over a 64x64 corner grid.
double grid_discrepancy(const std::vector<double>& xy) {
  const std::size_t n = xy.size() / 2;
  double worst = 0.0;
  for (int i = 1; i <= 64; ++i)
    for (int j = 1; j <= 64; ++j) {
      const double a = i / 64.0, b = j / 64.0;
      std::size_t c = 0;
      for (std::size_t r = 0; r < n; ++r)
        if (xy[2 * r] < a && xy[2 * r + 1] < b) ++c;
      worst = std::max(worst, std::abs(static_cast<double>(c) / static_cast<double>(n) - a * b));
    }
  return worst;
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

}  // namespace

TEST(Sobol, MatchesReferenceSequence) {
  const auto s = sobol(16, 6);
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t d = 0; d < 6; ++d) EXPECT_EQ(s[r * 6 + d], kFirst16[r][d]) << r << "," << d;
  const auto far = sobol(2, 6, 1000);
  for (std::size_t d = 0; d < 6; ++d) {
    EXPECT_EQ(far[d], kIndex1000[d]);
    EXPECT_EQ(far[6 + d], kIndex1001[d]);
  }
}

TEST(Sobol, FirstPointIsOrigin) {
  const auto s = sobol(1, 2);
  EXPECT_EQ(s, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(sobol(1, 2, 1), (std::vector<double>{0.5, 0.5}));
}

TEST(Sobol, SkipMatchesPrefix) {
  const auto all = sobol(300, 3);
  const auto tail = sobol(100, 3, 200);
  EXPECT_TRUE(std::equal(tail.begin(), tail.end(), all.begin() + 600));
}

TEST(Sobol, CoordinatesInUnitInterval) {
  for (std::size_t d = 1; d <= 6; ++d)
    for (double v : sobol(4096, d, 12345)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
}

TEST(Sobol, LowerDiscrepancyThanUniformRandom) {
  const auto q = sobol(1024, 2);
  std::mt19937_64 rng(0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> r(2048);
  for (double& v : r) v = u(rng);
  EXPECT_LT(grid_discrepancy(q), grid_discrepancy(r));
}

TEST(Sobol, UnsupportedDimension) {
  EXPECT_THROW(sobol(4, 0), Error);
  try {
    sobol(4, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(starts_with(e.what(), "dimension out of range"));
  }
}

TEST(Cases, NamesRoundTripAndUnknownFails) {
  for (auto k : {CaseKind::Cavity, CaseKind::Poiseuille, CaseKind::BfsSlip, CaseKind::BfsNoSlip})
    EXPECT_EQ(parse_case(case_name(k)), k);
  EXPECT_THROW(parse_case("channel"), Error);
}

TEST(Cases, BoxMappingRoundTrips) {
  const auto c = make_case(CaseKind::Poiseuille);
  const Point p{1.7, 0.31, -0.004};
  const Point back = c.domain.from_unit(c.domain.to_unit(p));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back[i], p[i], 1e-12);
}

TEST(Sampling, CavityLidIsPinned) {
  const auto c = make_case(CaseKind::Cavity);
  const auto s = sample_segment(c, "up", 500, 1);
  EXPECT_EQ(s.role, "boundary:up");
  ASSERT_EQ(s.rows.size(), 500u);
  for (const auto& p : s.rows) {
    EXPECT_EQ(p[2], 1.0);
    EXPECT_GE(p[0], 0.0);
    EXPECT_LE(p[0], 10.0);
    EXPECT_GE(p[1], 0.0);
    EXPECT_LE(p[1], 1.0);
  }
}

TEST(Sampling, InitialRowsAtStartTime) {
  for (auto k : {CaseKind::Cavity, CaseKind::Poiseuille}) {
    const auto c = make_case(k);
    for (const auto& p : sample_initial(c, 300, 4).rows) EXPECT_EQ(p[0], 0.0);
  }
}

TEST(Sampling, PoiseuilleWallsOnBothSides) {
  const auto c = make_case(CaseKind::Poiseuille);
  const auto s = sample_segment(c, "wall", 400, 2);
  std::size_t lo = 0, hi = 0;
  for (const auto& p : s.rows) {
    if (p[2] == -0.0075) ++lo;
    else if (p[2] == 0.0075) ++hi;
    else ADD_FAILURE() << "wall row off the wall: y=" << p[2];
  }
  EXPECT_EQ(lo, 200u);
  EXPECT_EQ(hi, 200u);
  EXPECT_THROW(sample_segment(c, "lid", 10, 2), Error);
}

TEST(Sampling, InteriorInsideDomain) {
  const auto c = make_case(CaseKind::BfsSlip);
  for (const auto& p : sample_interior(c, 2000, 3).rows)
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_GE(p[i], c.domain.lo[i]);
      EXPECT_LE(p[i], c.domain.hi[i]);
    }
}

TEST(Sampling, SampleCaseRolesAndDeterminism) {
  const auto c = make_case(CaseKind::Cavity);
  const SampleCounts n{100, 20, 30};
  const auto a = sample_case(c, n, 7), b = sample_case(c, n, 7), d = sample_case(c, n, 8);
  ASSERT_EQ(a.size(), 6u);
  EXPECT_EQ(a[0].role, "interior");
  EXPECT_EQ(a[0].rows.size(), 100u);
  EXPECT_EQ(a[1].role, "initial");
  EXPECT_EQ(a[1].rows.size(), 30u);
  EXPECT_EQ(a[2].role, "boundary:left");
  EXPECT_EQ(a[5].role, "boundary:up");
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].rows, b[i].rows);
  EXPECT_NE(a[0].rows, d[0].rows);
}

TEST(Minibatch, FullBatchIsPermutation) {
  std::mt19937_64 rng(3);
  const auto idx = minibatch_indices(50, 50, rng);
  std::vector<std::size_t> sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Minibatch, SameRngStateSameBatch) {
  const auto c = make_case(CaseKind::Cavity);
  const auto pool = sample_interior(c, 1000, 1);
  std::mt19937_64 r1(99), r2(99);
  EXPECT_EQ(minibatch(pool, 128, r1).rows, minibatch(pool, 128, r2).rows);
  const auto idx = minibatch_indices(1000, 128, r1);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 128u);
}

TEST(Minibatch, IndicesAreRoughlyUniform) {
  std::mt19937_64 rng(5);
  std::vector<int> hits(20, 0);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i)
    for (auto k : minibatch_indices(20, 5, rng)) ++hits[k];
  const double expected = draws * 5.0 / 20.0;
  for (int h : hits) EXPECT_NEAR(h, expected, 0.05 * expected);
}

TEST(Minibatch, InsufficientPoints) {
  std::mt19937_64 rng(0);
  try {
    minibatch_indices(10, 11, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(starts_with(e.what(), "insufficient points"));
  }
}

TEST(Sampling, CsvExport) {
  const auto c = make_case(CaseKind::Cavity);
  const std::vector<PointSet> sets{sample_initial(c, 2, 0)};
  std::ostringstream out;
  write_points_csv(out, sets);
  const auto text = out.str();
  EXPECT_TRUE(starts_with(text, "role,t,x,y\n"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
