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

#ifndef LANEKEEP_TRACK_HPP_
#define LANEKEEP_TRACK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lanekeep/errors.hpp"
#include "lanekeep/geometry.hpp"
#include "lanekeep/rng.hpp"

namespace lanekeep {

using Curve = std::function<Vec2(double)>;  // t in [0, 1]

struct LaneCurves {
  Curve c1;  // left lane
  Curve c2;  // right lane
  double min_separation = 1.3;
  bool closed = true;
};

// Lemniscate of Gerono: (s cos tau, a s sin tau cos tau), tau = 2 pi t.
// Curvature runs from 0 at the crossing to 1 / (a^2 s) at the lobe tips.
struct FigureEight {
  double scale = 10.0;
  double aspect = 0.3;

  Vec2 point(double t) const {
    const double tau = 2.0 * kPi * t;
    return {scale * std::cos(tau),
            aspect * scale * std::sin(tau) * std::cos(tau)};
  }
  // Derivatives with respect to tau.
  Vec2 d1(double t) const {
    const double tau = 2.0 * kPi * t;
    return {-scale * std::sin(tau), aspect * scale * std::cos(2.0 * tau)};
  }
  Vec2 d2(double t) const {
    const double tau = 2.0 * kPi * t;
    return {-scale * std::cos(tau), -2.0 * aspect * scale * std::sin(2.0 * tau)};
  }
  // Signed curvature (positive turning left).
  double curvature(double t) const {
    const Vec2 a = d1(t), b = d2(t);
    const double sp = std::hypot(a.x, a.y);
    return (a.x * b.y - a.y * b.x) / (sp * sp * sp);
  }
  Vec2 left_normal(double t) const {
    const Vec2 a = d1(t);
    const double sp = std::hypot(a.x, a.y);
    return {-a.y / sp, a.x / sp};
  }
};

inline LaneCurves make_figure_eight(double scale, double min_separation) {
  if (!(scale > 0.0)) throw DomainError("make_figure_eight: scale must be > 0");
  if (!(min_separation > 0.0)) {
    throw DomainError("make_figure_eight: min_separation must be > 0");
  }
  const FigureEight base{scale};
  const double half = 0.5 * min_separation;
  // An offset curve folds onto itself once the offset reaches the radius of
  // curvature.
  double kmax = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    kmax = std::max(kmax, std::abs(base.curvature(i / 20000.0)));
  }
  if (half * kmax >= 1.0) {
    throw GeometryError(
        "make_figure_eight: lane offset exceeds the minimum radius of "
        "curvature; increase scale");
  }
  LaneCurves lanes;
  lanes.min_separation = min_separation;
  lanes.closed = true;
  lanes.c1 = [base, half](double t) { return base.point(t) + half * base.left_normal(t); };
  lanes.c2 = [base, half](double t) { return base.point(t) - half * base.left_normal(t); };
  return lanes;
}

// Circle of the given centerline radius, counter-clockwise from (radius, 0).
inline LaneCurves make_circle_lanes(double radius, double min_separation) {
  if (!(radius > 0.5 * min_separation)) {
    throw GeometryError("make_circle_lanes: radius too small for lane width");
  }
  const double half = 0.5 * min_separation;
  LaneCurves lanes;
  lanes.min_separation = min_separation;
  lanes.closed = true;
  lanes.c1 = [=](double t) {
    const double a = 2.0 * kPi * t;
    return Vec2{(radius - half) * std::cos(a), (radius - half) * std::sin(a)};
  };
  lanes.c2 = [=](double t) {
    const double a = 2.0 * kPi * t;
    return Vec2{(radius + half) * std::cos(a), (radius + half) * std::sin(a)};
  };
  return lanes;
}

// Straight corridor along +x starting at the origin.
inline LaneCurves make_straight_lanes(double length, double min_separation) {
  if (!(length > 0.0)) throw DomainError("make_straight_lanes: length must be > 0");
  const double half = 0.5 * min_separation;
  LaneCurves lanes;
  lanes.min_separation = min_separation;
  lanes.closed = false;
  lanes.c1 = [=](double t) { return Vec2{length * t, half}; };
  lanes.c2 = [=](double t) { return Vec2{length * t, -half}; };
  return lanes;
}

inline std::vector<Vec2> discretize_curve(const Curve& curve, std::size_t n) {
  if (n < 3) throw DomainError("discretize: n must be >= 3");
  std::vector<Vec2> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back(curve(static_cast<double>(i) / static_cast<double>(n - 1)));
  }
  return pts;
}

inline std::pair<std::vector<Vec2>, std::vector<Vec2>> discretize_lanes(
    const LaneCurves& curves, std::size_t n) {
  return {discretize_curve(curves.c1, n), discretize_curve(curves.c2, n)};
}

inline std::vector<Vec2> geometric_center(const std::vector<Vec2>& points1,
                                          const std::vector<Vec2>& points2) {
  if (points1.size() != points2.size()) {
    throw DomainError("geometric_center: lane point counts differ");
  }
  std::vector<Vec2> centers;
  centers.reserve(points1.size());
  for (std::size_t i = 0; i < points1.size(); ++i) {
    centers.push_back(0.5 * (points1[i] + points2[i]));
  }
  return centers;
}

enum class ConeMode { kExact, kUniformDisc };

struct ConeLayout {
  std::vector<Vec2> lane1_cones;
  std::vector<Vec2> lane2_cones;
  std::vector<Vec2> nominal1;
  std::vector<Vec2> nominal2;
  std::uint64_t seed = 0;
  double radius = 0.0;
  ConeMode mode = ConeMode::kExact;
};

inline ConeLayout randomize_cones(const std::vector<Vec2>& nominal1,
                                  const std::vector<Vec2>& nominal2, double r,
                                  std::uint64_t seed,
                                  ConeMode mode = ConeMode::kExact) {
  if (!(r >= 0.0)) throw DomainError("randomize_cones: r must be >= 0");
  ConeLayout layout;
  layout.nominal1 = nominal1;
  layout.nominal2 = nominal2;
  layout.seed = seed;
  layout.radius = r;
  layout.mode = mode;
  Rng rng(seed);
  auto perturb = [&](const std::vector<Vec2>& nominal) {
    std::vector<Vec2> out;
    out.reserve(nominal.size());
    for (const Vec2& c : nominal) {
      const double beta = 2.0 * kPi * rng.uniform();
      const double rho = mode == ConeMode::kExact ? r : r * rng.uniform();
      if (r == 0.0) {
        out.push_back(c);
      } else {
        out.push_back({c.x + rho * std::cos(beta), c.y + rho * std::sin(beta)});
      }
    }
    return out;
  };
  layout.lane1_cones = perturb(nominal1);
  layout.lane2_cones = perturb(nominal2);
  return layout;
}

struct WaypointSets {
  std::vector<std::vector<Vec2>> sets;
  std::size_t shift_w = 0;
  std::size_t n = 0;
};

// Sets 1..j/2 are the centers rotated by (k-1)*w; sets j/2+1..j reverse them.
inline WaypointSets make_waypoint_sets(const std::vector<Vec2>& centers,
                                       std::size_t j, std::size_t w) {
  const std::size_t n = centers.size();
  if (j == 0 || j % 2 != 0) {
    throw DomainError("make_waypoint_sets: j must be even and positive");
  }
  if (n == 0 || w * (j / 2 - 1) >= n) {
    throw DomainError("make_waypoint_sets: shift exceeds waypoint count");
  }
  WaypointSets out;
  out.shift_w = w;
  out.n = n;
  const std::size_t half = j / 2;
  for (std::size_t k = 0; k < half; ++k) {
    std::vector<Vec2> set(n);
    for (std::size_t i = 0; i < n; ++i) set[i] = centers[(i + k * w) % n];
    out.sets.push_back(std::move(set));
  }
  for (std::size_t k = 0; k < half; ++k) {
    std::vector<Vec2> rev(out.sets[k].rbegin(), out.sets[k].rend());
    out.sets.push_back(std::move(rev));
  }
  return out;
}

namespace detail {

// Drops consecutive coincident points (including the wrap for closed loops).
inline std::vector<Vec2> dedupe(const std::vector<Vec2>& pts, bool closed) {
  std::vector<Vec2> out;
  for (const Vec2& p : pts) {
    if (out.empty() || distance(out.back(), p) >= 1e-9) out.push_back(p);
  }
  while (closed && out.size() > 1 && distance(out.back(), out.front()) < 1e-9) {
    out.pop_back();
  }
  return out;
}

}  // namespace detail

// Waypoint headings from the chord through the neighbouring points.
inline std::vector<Pose2D> waypoint_poses(const std::vector<Vec2>& raw,
                                          bool closed) {
  const auto pts = detail::dedupe(raw, closed);
  const std::size_t m = pts.size();
  if (m < 2) throw DomainError("waypoint_poses: need at least two distinct points");
  std::vector<Pose2D> poses(m);
  for (std::size_t i = 0; i < m; ++i) {
    Vec2 prev, next;
    if (closed) {
      prev = pts[(i + m - 1) % m];
      next = pts[(i + 1) % m];
    } else {
      prev = pts[i == 0 ? 0 : i - 1];
      next = pts[i + 1 == m ? m - 1 : i + 1];
    }
    poses[i] = make_pose(pts[i].x, pts[i].y,
                         std::atan2(next.y - prev.y, next.x - prev.x));
  }
  return poses;
}

inline ArcPath build_path(const std::vector<Vec2>& waypoints, bool closed) {
  const auto poses = waypoint_poses(waypoints, closed);
  const std::size_t m = poses.size();
  const std::size_t count = closed ? m : m - 1;
  std::vector<ClothoidSegment> segs;
  segs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    try {
      segs.push_back(fit_clothoid(poses[i], poses[(i + 1) % m]));
    } catch (const FittingError& e) {
      throw FittingError(std::string(e.what()) + " (segment " +
                             std::to_string(i) + ")",
                         e.residual());
    }
  }
  return concat_path(std::move(segs), closed);
}

inline std::vector<ArcPath> build_paths(const WaypointSets& sets, bool closed) {
  std::vector<ArcPath> paths;
  paths.reserve(sets.sets.size());
  for (std::size_t k = 0; k < sets.sets.size(); ++k) {
    try {
      paths.push_back(build_path(sets.sets[k], closed));
    } catch (const FittingError& e) {
      throw FittingError(std::string(e.what()) + " in set " + std::to_string(k),
                         e.residual());
    }
  }
  return paths;
}

inline std::vector<RefTable> sample_all(const std::vector<ArcPath>& paths,
                                        double ds) {
  if (!(ds > 0.0)) throw DomainError("build_ref_tables: ds must be positive");
  std::vector<RefTable> tables;
  tables.reserve(paths.size());
  for (const auto& p : paths) tables.push_back(sample_reftable(p, ds));
  return tables;
}

inline std::vector<RefTable> build_ref_tables(const WaypointSets& sets,
                                              double ds, bool closed = true) {
  if (!(ds > 0.0)) throw DomainError("build_ref_tables: ds must be positive");
  return sample_all(build_paths(sets, closed), ds);
}

enum class TrackShape { kFigureEight, kCircle, kStraight };

struct TrackParams {
  TrackShape shape = TrackShape::kFigureEight;
  std::uint64_t seed = 1;
  std::size_t n = 200;
  std::size_t j = 10;
  std::size_t w = 40;
  double r = 0.15;
  ConeMode cone_mode = ConeMode::kExact;
  double ds = 0.1;
  double lane_width = 1.3;
  double scale = 10.0;  // figure-eight scale, circle radius, or straight length
};

struct TrackSpec {
  TrackParams params;
  LaneCurves lane_curves;
  ConeLayout cones;
  std::vector<Vec2> centers;
  WaypointSets waypoint_sets;
  std::vector<ArcPath> paths;
  std::vector<RefTable> ref_tables;
  double lane_width = 1.3;

  bool closed() const { return lane_curves.closed; }
};

inline LaneCurves make_lanes(const TrackParams& p) {
  switch (p.shape) {
    case TrackShape::kFigureEight:
      return make_figure_eight(p.scale, p.lane_width);
    case TrackShape::kCircle:
      return make_circle_lanes(p.scale, p.lane_width);
    case TrackShape::kStraight:
      return make_straight_lanes(p.scale, p.lane_width);
  }
  throw DomainError("make_lanes: unknown shape");
}

inline TrackSpec make_track(const TrackParams& params) {
  TrackSpec t;
  t.params = params;
  t.lane_width = params.lane_width;
  t.lane_curves = make_lanes(params);
  auto [p1, p2] = discretize_lanes(t.lane_curves, params.n);
  t.centers = geometric_center(p1, p2);
  t.cones = randomize_cones(p1, p2, params.r, params.seed, params.cone_mode);
  // Open corridors have no meaningful rotation; only reversal applies.
  const std::size_t w = t.lane_curves.closed ? params.w : 0;
  t.waypoint_sets = make_waypoint_sets(t.centers, params.j, w);
  t.paths = build_paths(t.waypoint_sets, t.lane_curves.closed);
  t.ref_tables = sample_all(t.paths, params.ds);
  return t;
}

inline const char* to_string(TrackShape s) {
  switch (s) {
    case TrackShape::kFigureEight: return "figure_eight";
    case TrackShape::kCircle: return "circle";
    case TrackShape::kStraight: return "straight";
  }
  return "?";
}

inline TrackShape parse_track_shape(const std::string& s) {
  if (s == "figure_eight") return TrackShape::kFigureEight;
  if (s == "circle") return TrackShape::kCircle;
  if (s == "straight") return TrackShape::kStraight;
  throw DomainError("unknown track shape: " + s);
}

inline const char* to_string(ConeMode m) {
  return m == ConeMode::kExact ? "exact" : "uniform_disc";
}

inline ConeMode parse_cone_mode(const std::string& s) {
  if (s == "exact") return ConeMode::kExact;
  if (s == "uniform_disc") return ConeMode::kUniformDisc;
  throw DomainError("unknown cone mode: " + s);
}

}  // namespace lanekeep

#endif  // LANEKEEP_TRACK_HPP_
