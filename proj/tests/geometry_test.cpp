// Copyright 2026 The lanekeep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "lanekeep/errors.hpp"
#include "lanekeep/geometry.hpp"
#include "lanekeep/track.hpp"

namespace lanekeep {
namespace {

// Independent endpoint integration: composite Simpson on the heading law.
Pose2D simpson_endpoint(const ClothoidSegment& seg, int n = 20000) {
  const double h = seg.length / n;
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double th = seg.heading_at(i * h);
    sx += w * std::cos(th);
    sy += w * std::sin(th);
  }
  return make_pose(seg.start.x + sx * h / 3.0, seg.start.y + sy * h / 3.0,
                   seg.heading_at(seg.length));
}

TEST(WrapAngle, MapsIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(wrap_angle(0.3 - 4 * kPi), 0.3, 1e-12);
}

TEST(FitClothoid, StraightSegment) {
  const auto seg = fit_clothoid({0, 0, 0}, {1, 0, 0});
  EXPECT_NEAR(seg.kappa0, 0.0, 1e-12);
  EXPECT_NEAR(seg.kappa_rate, 0.0, 1e-12);
  EXPECT_NEAR(seg.length, 1.0, 1e-12);
}

TEST(FitClothoid, QuarterCircle) {
  const auto seg = fit_clothoid({0, 0, 0}, make_pose(1, 1, kPi / 2));
  EXPECT_NEAR(seg.kappa0, 1.0, 1e-6);
  EXPECT_NEAR(seg.kappa_rate, 0.0, 1e-6);
  EXPECT_NEAR(seg.length, kPi / 2, 1e-6);
  const Pose2D e = simpson_endpoint(seg);
  EXPECT_NEAR(e.x, 1.0, 1e-9);
  EXPECT_NEAR(e.y, 1.0, 1e-9);
}

TEST(FitClothoid, LateralShiftNeedsCurvatureRate) {
  const auto seg = fit_clothoid({0, 0, 0}, {1, 0.2, 0});
  EXPECT_GT(std::abs(seg.kappa_rate), 1e-3);
  const Pose2D e = simpson_endpoint(seg);
  EXPECT_NEAR(e.x, 1.0, 1e-6);
  EXPECT_NEAR(e.y, 0.2, 1e-6);
  EXPECT_NEAR(wrap_angle(e.theta), 0.0, 1e-6);
}

TEST(FitClothoid, CoincidentEndpointsRejected) {
  EXPECT_THROW(fit_clothoid({1, 1, 0}, {1, 1, 0.5}), DomainError);
}

TEST(FitClothoid, RandomPairsInterpolateBothEnds) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> dist(0.1, 5.0), dth(-2.0, 2.0),
      ang(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const double r = dist(gen), bearing = ang(gen), th0 = ang(gen);
    const Pose2D a = make_pose(0.3, -0.2, th0);
    const Pose2D b = make_pose(a.x + r * std::cos(bearing),
                               a.y + r * std::sin(bearing), th0 + dth(gen));
    const auto seg = fit_clothoid(a, b);
    const Pose2D e = point_at(seg, seg.length);
    ASSERT_NEAR(e.x, b.x, 1e-6) << i;
    ASSERT_NEAR(e.y, b.y, 1e-6) << i;
    ASSERT_NEAR(wrap_angle(e.theta - b.theta), 0.0, 1e-6) << i;
  }
}

TEST(PointAt, StartStraightAndCircle) {
  const ClothoidSegment any{make_pose(1, 2, 0.3), 0.4, -0.2, 3.0};
  const Pose2D p0 = point_at(any, 0.0);
  EXPECT_EQ(p0.x, 1.0);
  EXPECT_EQ(p0.y, 2.0);
  EXPECT_DOUBLE_EQ(p0.theta, 0.3);

  const Pose2D s = point_at({{0, 0, 0}, 0, 0, 2.0}, 0.7);
  EXPECT_NEAR(s.x, 0.7, 1e-12);
  EXPECT_NEAR(s.y, 0.0, 1e-12);

  const Pose2D c = point_at({{0, 0, 0}, 1.0, 0.0, kPi / 2}, kPi / 2);
  EXPECT_NEAR(c.x, 1.0, 1e-9);
  EXPECT_NEAR(c.y, 1.0, 1e-9);
  EXPECT_NEAR(c.theta, kPi / 2, 1e-9);
}

TEST(PointAt, OutOfRangeThrows) {
  const ClothoidSegment seg{{0, 0, 0}, 0, 0, 1.0};
  EXPECT_THROW(point_at(seg, 1.1), DomainError);
  EXPECT_THROW(point_at(seg, -0.1), DomainError);
}

TEST(ConcatPath, PrefixSums) {
  const ClothoidSegment a{{0, 0, 0}, 0, 0, 1.0};
  const ClothoidSegment b{{1, 0, 0}, 0, 0, 1.0};
  const ArcPath p = concat_path({a, b}, false);
  EXPECT_DOUBLE_EQ(p.total_length(), 2.0);
  ASSERT_EQ(p.cumulative_length.size(), 2u);
  EXPECT_DOUBLE_EQ(p.cumulative_length[0], 1.0);
  EXPECT_DOUBLE_EQ(p.cumulative_length[1], 2.0);
}

TEST(ConcatPath, EmptyAndBrokenChains) {
  EXPECT_THROW(concat_path({}, false), DomainError);
  const ClothoidSegment a{{0, 0, 0}, 0, 0, 1.0};
  const ClothoidSegment gap{{1.5, 0, 0}, 0, 0, 1.0};
  try {
    concat_path({a, a, gap}, false);
    FAIL() << "expected ContinuityError";
  } catch (const ContinuityError& e) {
    // a -> a is itself broken at junction 1.
    EXPECT_EQ(e.junction(), 1u);
  }
  const ClothoidSegment b{{1, 0, 0}, 0, 0, 1.0};
  try {
    concat_path({a, b, gap}, false);
    FAIL() << "expected ContinuityError";
  } catch (const ContinuityError& e) {
    EXPECT_EQ(e.junction(), 2u);
  }
}

TEST(ConcatPath, FigureEightLengthsSum) {
  TrackParams p;
  const TrackSpec t = make_track(p);
  for (const ArcPath& path : t.paths) {
    EXPECT_EQ(path.segments.size(), 199u);
    double sum = 0.0;
    for (const auto& s : path.segments) sum += s.length;
    EXPECT_NEAR(path.cumulative_length.back(), sum, 1e-9);
  }
}

TEST(SampleReftable, StraightRows) {
  const ArcPath p = concat_path({{{0, 0, 0}, 0, 0, 2.0}}, false);
  const RefTable t = sample_reftable(p, 0.5);
  ASSERT_EQ(t.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(t[i].S, 0.5 * i, 1e-12);
  EXPECT_THROW(sample_reftable(p, 0.0), DomainError);
}

TEST(SampleReftable, CircleQuadrants) {
  std::vector<ClothoidSegment> segs;
  Pose2D start{1, 0, kPi / 2};
  for (int k = 0; k < 4; ++k) {
    segs.push_back({start, 1.0, 0.0, kPi / 2});
    start = end_pose(segs.back());
  }
  const RefTable t = sample_reftable(concat_path(segs, true), kPi / 2);
  ASSERT_EQ(t.size(), 4u);
  const double xs[] = {1, 0, -1, 0}, ys[] = {0, 1, 0, -1};
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(t[k].x, xs[k], 1e-9);
    EXPECT_NEAR(t[k].y, ys[k], 1e-9);
    EXPECT_NEAR(wrap_angle(t[k].theta - wrap_angle(kPi / 2 * (k + 1))), 0.0, 1e-9);
  }
}

TEST(SampleReftable, FigureEightChordsAndHeadings) {
  TrackParams p;
  const TrackSpec t = make_track(p);
  for (const RefTable& table : t.ref_tables) {
    for (std::size_t i = 1; i < table.size(); ++i) {
      const double dx = table[i].x - table[i - 1].x;
      const double dy = table[i].y - table[i - 1].y;
      const double chord = std::hypot(dx, dy);
      ASSERT_NEAR(chord, 0.1, 1e-3);
      const double fd = std::atan2(dy, dx);
      const double mid =
          table[i - 1].theta + 0.5 * wrap_angle(table[i].theta - table[i - 1].theta);
      ASSERT_LT(std::abs(wrap_angle(fd - mid)), 0.05);
      ASSERT_NEAR(table[i].S - table[i - 1].S, 0.1, 1e-9);
    }
  }
}

TEST(CurvatureAt, StraightCircleAndFiniteDifference) {
  const ArcPath line = concat_path({{{0, 0, 0}, 0, 0, 3.0}}, false);
  EXPECT_EQ(curvature_at(line, 1.3), 0.0);
  const ArcPath circ = concat_path({{{0, 0, 0}, 1.0, 0, 1.0}}, false);
  EXPECT_DOUBLE_EQ(curvature_at(circ, 0.5), 1.0);
  EXPECT_THROW(curvature_at(circ, 1.5), DomainError);

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const ClothoidSegment seg{{0, 0, u(gen)}, u(gen), u(gen), 2.0 + u(gen)};
    const ArcPath p = concat_path({seg}, false);
    const double m = 0.5 * seg.length, h = 1e-5;
    const double fd = (p.pose_at(m + h).theta - p.pose_at(m - h).theta) / (2 * h);
    EXPECT_NEAR(curvature_at(p, m), std::abs(fd), 1e-4);
  }
}

RefTable uniform_table(std::size_t n, double ds) {
  RefTable t;
  t.spacing_ds = ds;
  for (std::size_t i = 0; i < n; ++i) t.rows.push_back({ds * i, 0, 0, 0});
  return t;
}

std::size_t linear_nearest(const RefTable& t, double S) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs(t[i].S - S) < std::abs(t[best].S - S)) best = i;
  }
  return best;
}

TEST(NearestIndex, Examples) {
  const RefTable t = uniform_table(20, 0.1);
  EXPECT_EQ(nearest_index(t, 0.234), 2u);
  EXPECT_EQ(nearest_index(t, t[5].S), 5u);
  EXPECT_EQ(nearest_index(t, 0.05), 0u);
  EXPECT_EQ(nearest_index(t, -3.0), 0u);
  EXPECT_EQ(nearest_index(t, 99.0), 19u);
}

TEST(NearestIndex, MatchesLinearScan) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    RefTable t;
    std::uniform_real_distribution<double> step(0.01, 0.5);
    double S = 0.0;
    for (int i = 0; i < 200; ++i) {
      t.rows.push_back({S, 0, 0, 0});
      // Occasional exact repeats of a spacing create true ties.
      S += (i % 7 == 0) ? 0.25 : step(gen);
    }
    std::uniform_real_distribution<double> q(-1.0, S + 1.0);
    for (int i = 0; i < 500; ++i) {
      const double s = (i % 5 == 0) ? 0.5 * (t[i % 199].S + t[i % 199 + 1].S) : q(gen);
      ASSERT_EQ(nearest_index(t, s), linear_nearest(t, s)) << s;
    }
  }
}

TEST(RefTableCsv, RoundTrip) {
  TrackParams p;
  const TrackSpec t = make_track(p);
  std::stringstream ss;
  write_reftable_csv(ss, t.ref_tables[0]);
  EXPECT_EQ(ss.str().rfind("S,x,y,theta\n", 0), 0u);
  const RefTable back = read_reftable_csv(ss);
  ASSERT_EQ(back.size(), t.ref_tables[0].size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_NEAR(back[i].x, t.ref_tables[0][i].x, 1e-7 * (1 + std::abs(back[i].x)));
  }
}

}  // namespace
}  // namespace lanekeep
