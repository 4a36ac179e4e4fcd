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

#ifndef LANEKEEP_GEOMETRY_HPP_
#define LANEKEEP_GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "lanekeep/errors.hpp"

namespace lanekeep {

inline constexpr double kPi = std::numbers::pi;

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

inline Pose2D make_pose(double x, double y, double theta) {
  return {x, y, wrap_angle(theta)};
}

// Expresses `world` in the frame of `frame`.
inline Vec2 to_body(const Pose2D& frame, Vec2 world) {
  const double c = std::cos(frame.theta), s = std::sin(frame.theta);
  const double dx = world.x - frame.x, dy = world.y - frame.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

inline Vec2 to_world(const Pose2D& frame, Vec2 body) {
  const double c = std::cos(frame.theta), s = std::sin(frame.theta);
  return {frame.x + c * body.x - s * body.y, frame.y + s * body.x + c * body.y};
}

namespace quadrature {

inline constexpr std::array<double, 5> kNodes = {
    0.1488743389816312108848260, 0.4333953941292471907992659,
    0.6794095682990244062343274, 0.8650633666889845107320967,
    0.9739065285171717200779640};
inline constexpr std::array<double, 5> kWeights = {
    0.2955242247147528701738930, 0.2692667193099963550912269,
    0.2190863625159820439955349, 0.1494513491505805931457763,
    0.0666713443086881375935688};

// 10-point Gauss-Legendre rule for a vector-valued integrand.
template <std::size_t N, typename F>
std::array<double, N> gauss_legendre(const F& f, double a, double b) {
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  std::array<double, N> sum{};
  for (std::size_t i = 0; i < kNodes.size(); ++i) {
    const auto lo = f(mid - half * kNodes[i]);
    const auto hi = f(mid + half * kNodes[i]);
    for (std::size_t k = 0; k < N; ++k) {
      sum[k] += kWeights[i] * (lo[k] + hi[k]);
    }
  }
  for (auto& v : sum) v *= half;
  return sum;
}

template <std::size_t N, typename F>
std::array<double, N> adaptive_impl(const F& f, double a, double b,
                                    const std::array<double, N>& whole,
                                    double tol, int depth) {
  const double m = 0.5 * (a + b);
  const auto left = gauss_legendre<N>(f, a, m);
  const auto right = gauss_legendre<N>(f, m, b);
  double err = 0.0;
  std::array<double, N> sum{};
  for (std::size_t k = 0; k < N; ++k) {
    sum[k] = left[k] + right[k];
    err = std::max(err, std::abs(sum[k] - whole[k]));
  }
  if (err <= tol || depth >= 40) return sum;
  const auto l = adaptive_impl<N>(f, a, m, left, 0.5 * tol, depth + 1);
  const auto r = adaptive_impl<N>(f, m, b, right, 0.5 * tol, depth + 1);
  for (std::size_t k = 0; k < N; ++k) sum[k] = l[k] + r[k];
  return sum;
}

// Adaptive Gauss-Legendre: bisects until the two-panel estimate agrees with
// the one-panel estimate to `tol` in every component.
template <std::size_t N, typename F>
std::array<double, N> integrate(const F& f, double a, double b,
                                double tol = 1e-12) {
  if (a == b) return {};
  const auto whole = gauss_legendre<N>(f, a, b);
  return adaptive_impl<N>(f, a, b, whole, tol, 0);
}

}  // namespace quadrature

// Curve with curvature kappa0 + kappa_rate * s for s in [0, length].
struct ClothoidSegment {
  Pose2D start;
  double kappa0 = 0.0;
  double kappa_rate = 0.0;
  double length = 0.0;

  double heading_at(double s) const {
    return start.theta + kappa0 * s + 0.5 * kappa_rate * s * s;
  }
  double curvature_at(double s) const { return kappa0 + kappa_rate * s; }
};

inline constexpr double kQuadratureTol = 1e-10;

inline Pose2D point_at(const ClothoidSegment& seg, double s) {
  const double slack = 1e-12 * std::max(1.0, seg.length);
  if (!(s >= -slack && s <= seg.length + slack)) {
    throw DomainError("point_at: arc length outside [0, length]");
  }
  s = std::clamp(s, 0.0, seg.length);
  if (s == 0.0) return seg.start;
  const auto xy = quadrature::integrate<2>(
      [&](double u) {
        const double th = seg.heading_at(u);
        return std::array<double, 2>{std::cos(th), std::sin(th)};
      },
      0.0, s, kQuadratureTol * 1e-3);
  return make_pose(seg.start.x + xy[0], seg.start.y + xy[1], seg.heading_at(s));
}

inline Pose2D end_pose(const ClothoidSegment& seg) {
  return point_at(seg, seg.length);
}

namespace detail {

// Integrals over t in [0,1] of cos/sin(a t^2 + b t + c) and the t^2 - t
// weighted cosine used for d/dA of the normalized G1 residual.
inline std::array<double, 3> fresnel_moments(double a, double b, double c) {
  return quadrature::integrate<3>(
      [&](double t) {
        const double th = (a * t + b) * t + c;
        const double ct = std::cos(th);
        return std::array<double, 3>{ct, std::sin(th), (t * t - t) * ct};
      },
      0.0, 1.0, 1e-15);
}

// Initial guess for the normalized curvature-rate parameter.
inline double guess_rate(double phi0, double phi1) {
  constexpr std::array<double, 6> kCoeff = {
      2.989696028701907, 0.716228953608281,  -0.458969738821509,
      -0.502821153340377, 0.261062141752652, -0.045854475238709};
  const double x = phi0 / kPi, y = phi1 / kPi, xy = x * y;
  const double x2 = x * x, y2 = y * y;
  return (phi0 + phi1) *
         (kCoeff[0] + xy * (kCoeff[1] + xy * kCoeff[2]) +
          (kCoeff[3] + xy * kCoeff[4]) * (x2 + y2) +
          kCoeff[5] * (x2 * x2 + y2 * y2));
}

}  // namespace detail

// G1 Hermite interpolation: the clothoid leaving `p_start` with its heading
// and arriving at `p_end` with its heading.
inline ClothoidSegment fit_clothoid(const Pose2D& p_start, const Pose2D& p_end) {
  const double dx = p_end.x - p_start.x, dy = p_end.y - p_start.y;
  const double chord = std::hypot(dx, dy);
  if (!(chord >= 1e-9)) {
    throw DomainError("fit_clothoid: endpoints coincide");
  }
  const double phi = std::atan2(dy, dx);
  const double phi0 = wrap_angle(p_start.theta - phi);
  const double phi1 = wrap_angle(p_end.theta - phi);
  const double delta = phi1 - phi0;

  // theta(t) = A t^2 + (delta - A) t + phi0 on the unit chord; find A with
  // zero lateral residual.
  auto residual = [&](double a) {
    return detail::fresnel_moments(a, delta - a, phi0);
  };
  auto finish = [&](double a, double x_int) {
    ClothoidSegment seg;
    seg.start = p_start;
    seg.length = chord / x_int;
    seg.kappa0 = (delta - a) / seg.length;
    seg.kappa_rate = 2.0 * a / (seg.length * seg.length);
    return seg;
  };

  constexpr double kTol = 1e-13;
  constexpr int kMaxIter = 100;
  double a = detail::guess_rate(phi0, phi1);
  double last_residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < kMaxIter; ++it) {
    const auto m = residual(a);
    last_residual = std::abs(m[1]);
    if (last_residual <= kTol) {
      if (m[0] > 0.0) return finish(a, m[0]);
      break;
    }
    if (m[2] == 0.0 || !std::isfinite(m[2])) break;
    a -= m[1] / m[2];
    if (!std::isfinite(a)) break;
  }

  // Fallback: bracket every sign change of the residual on a grid, bisect,
  // and keep the shortest valid curve.
  constexpr double kSpan = 80.0, kStep = 0.05;
  double best_len = std::numeric_limits<double>::infinity();
  ClothoidSegment best;
  double lo = -kSpan;
  double f_lo = residual(lo)[1];
  for (double hi = lo + kStep; hi <= kSpan + 1e-12; hi += kStep) {
    const double f_hi = residual(hi)[1];
    if ((f_lo <= 0.0) != (f_hi <= 0.0)) {
      double l = lo, h = hi, fl = f_lo;
      for (int it = 0; it < 200 && h - l > 1e-15; ++it) {
        const double mid = 0.5 * (l + h);
        const double fm = residual(mid)[1];
        if ((fm <= 0.0) == (fl <= 0.0)) {
          l = mid;
          fl = fm;
        } else {
          h = mid;
        }
      }
      const double root = 0.5 * (l + h);
      const auto m = residual(root);
      if (m[0] > 0.0 && std::abs(m[1]) <= 1e-11) {
        const double len = chord / m[0];
        if (len < best_len) {
          best_len = len;
          best = finish(root, m[0]);
        }
      }
      last_residual = std::min(last_residual, std::abs(m[1]));
    }
    lo = hi;
    f_lo = f_hi;
  }
  if (std::isfinite(best_len)) return best;
  throw FittingError("fit_clothoid: G1 root-find did not converge",
                     last_residual);
}

// Concatenated clothoids with prefix-sum arc length.
struct ArcPath {
  std::vector<ClothoidSegment> segments;
  std::vector<double> cumulative_length;  // cumulative_length[k] = sum_{i<=k}
  bool closed = false;

  double total_length() const {
    return cumulative_length.empty() ? 0.0 : cumulative_length.back();
  }

  double segment_begin(std::size_t k) const {
    return k == 0 ? 0.0 : cumulative_length[k - 1];
  }

  // Containing segment and local arc length for path arc length S.
  std::pair<std::size_t, double> locate(double S) const {
    const double total = total_length();
    const double slack = 1e-9 * std::max(1.0, total);
    if (segments.empty() || !(S >= -slack && S <= total + slack)) {
      throw DomainError("ArcPath: arc length outside [0, total length]");
    }
    S = std::clamp(S, 0.0, total);
    auto it = std::upper_bound(cumulative_length.begin(),
                               cumulative_length.end(), S);
    std::size_t k = static_cast<std::size_t>(it - cumulative_length.begin());
    if (k >= segments.size()) k = segments.size() - 1;
    const double local =
        std::clamp(S - segment_begin(k), 0.0, segments[k].length);
    return {k, local};
  }

  Pose2D pose_at(double S) const {
    const auto [k, s] = locate(S);
    return point_at(segments[k], s);
  }
};

inline constexpr double kJunctionPosTol = 1e-6;
inline constexpr double kJunctionHeadingTol = 1e-6;

inline ArcPath concat_path(std::vector<ClothoidSegment> segments, bool closed) {
  if (segments.empty()) throw DomainError("concat_path: no segments");
  auto check = [&](const ClothoidSegment& prev, const Pose2D& next,
                   std::size_t junction) {
    const Pose2D e = end_pose(prev);
    if (std::hypot(e.x - next.x, e.y - next.y) > kJunctionPosTol ||
        std::abs(wrap_angle(e.theta - next.theta)) > kJunctionHeadingTol) {
      throw ContinuityError(
          "concat_path: discontinuity at junction " + std::to_string(junction),
          junction);
    }
  };
  for (std::size_t k = 1; k < segments.size(); ++k) {
    check(segments[k - 1], segments[k].start, k);
  }
  if (closed) check(segments.back(), segments.front().start, segments.size());

  ArcPath path;
  path.closed = closed;
  path.cumulative_length.reserve(segments.size());
  double acc = 0.0;
  for (const auto& seg : segments) {
    if (!(seg.length >= 0.0)) throw DomainError("concat_path: negative length");
    acc += seg.length;
    path.cumulative_length.push_back(acc);
  }
  path.segments = std::move(segments);
  return path;
}

// Unsigned curvature at path arc length S.
inline double curvature_at(const ArcPath& path, double S) {
  const auto [k, s] = path.locate(S);
  return std::abs(path.segments[k].curvature_at(s));
}

struct RefRow {
  double S = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2D pose() const { return {x, y, theta}; }
};

// Distance-stamped reference poses sampled every `spacing_ds` along a path.
struct RefTable {
  std::vector<RefRow> rows;
  double spacing_ds = 0.0;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  const RefRow& operator[](std::size_t i) const { return rows[i]; }
  const RefRow& back() const { return rows.back(); }
};

inline RefTable sample_reftable(const ArcPath& path, double ds) {
  if (!(ds > 0.0)) throw DomainError("sample_reftable: ds must be positive");
  const double total = path.total_length();
  if (!(total >= ds)) {
    throw DomainError("sample_reftable: path shorter than ds");
  }
  const double eps = 1e-9 * std::max(1.0, total);
  const auto full = static_cast<std::size_t>(std::floor(total / ds + 1e-9));
  RefTable table;
  table.spacing_ds = ds;
  table.rows.reserve(full + 2);
  for (std::size_t k = 0; k <= full; ++k) {
    const double S = std::min(static_cast<double>(k) * ds, total);
    if (path.closed && k > 0 && S >= total - eps) break;
    const Pose2D p = path.pose_at(S);
    table.rows.push_back({S, p.x, p.y, p.theta});
  }
  if (!path.closed && table.rows.back().S < total - eps) {
    const Pose2D p = path.pose_at(total);
    table.rows.push_back({total, p.x, p.y, p.theta});
  }
  return table;
}

// Row index minimizing |S_r - S|, lowest index on ties. Queries outside the
// table clamp to the nearest end.
inline std::size_t nearest_index(const RefTable& table, double S) {
  if (table.empty()) throw DomainError("nearest_index: empty table");
  const auto& rows = table.rows;
  auto it = std::lower_bound(rows.begin(), rows.end(), S,
                             [](const RefRow& r, double v) { return r.S < v; });
  std::size_t i = static_cast<std::size_t>(it - rows.begin());
  if (i == rows.size()) return rows.size() - 1;
  if (i > 0 && std::abs(rows[i - 1].S - S) <= std::abs(rows[i].S - S)) --i;
  // Rounded differences can tie with further-left rows.
  while (i > 0 && std::abs(rows[i - 1].S - S) == std::abs(rows[i].S - S)) --i;
  return i;
}

inline void write_reftable_csv(std::ostream& out, const RefTable& table) {
  out << "S,x,y,theta\n";
  char buf[160];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", r.S, r.x, r.y,
                  r.theta);
    out << buf;
  }
}

inline RefTable read_reftable_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("S,x,y,theta", 0) != 0) {
    throw DomainError("read_reftable_csv: missing header");
  }
  RefTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RefRow r;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r.S, &r.x, &r.y,
                    &r.theta) != 4) {
      throw DomainError("read_reftable_csv: malformed row: " + line);
    }
    table.rows.push_back(r);
  }
  if (table.rows.size() >= 2) table.spacing_ds = table.rows[1].S - table.rows[0].S;
  return table;
}

}  // namespace lanekeep

#endif  // LANEKEEP_GEOMETRY_HPP_
