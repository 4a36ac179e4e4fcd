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

#ifndef LANEKEEP_SENSOR_HPP_
#define LANEKEEP_SENSOR_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lanekeep/errors.hpp"
#include "lanekeep/geometry.hpp"
#include "lanekeep/track.hpp"

namespace lanekeep {

inline constexpr int kImageW = 320;
inline constexpr int kImageH = 96;

// Forward-looking pinhole camera over flat ground. Body frame: x forward,
// y left; camera x right, y down, z along the optical axis.
struct CameraModel {
  double mount_height = 0.5;
  double pitch = 0.35;  // downward tilt
  double focal = 250.0;
  double u0 = 159.5;
  double v0 = 47.5;
  int image_w = kImageW;
  int image_h = kImageH;

  void validate() const {
    if (!(focal > 0.0)) throw DomainError("CameraModel: focal must be > 0");
    if (!(pitch > 0.0 && pitch < 0.5 * kPi)) {
      throw DomainError("CameraModel: pitch must lie in (0, pi/2)");
    }
    if (!(mount_height > 0.0)) throw DomainError("CameraModel: height must be > 0");
    if (image_w != kImageW || image_h != kImageH) {
      throw DomainError("CameraModel: image must be 320x96");
    }
  }
};

struct BinaryImage {
  std::vector<std::uint8_t> px =
      std::vector<std::uint8_t>(static_cast<std::size_t>(kImageW * kImageH), 0);

  std::uint8_t at(int row, int col) const {
    return px[static_cast<std::size_t>(row * kImageW + col)];
  }
  std::uint8_t& at(int row, int col) {
    return px[static_cast<std::size_t>(row * kImageW + col)];
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto p : px) n += p;
    return n;
  }
  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

// Pre-threshold intensities in [0, 1].
struct GrayImage {
  std::vector<float> px =
      std::vector<float>(static_cast<std::size_t>(kImageW * kImageH), 0.0f);
};

// Maps image points onto the ground plane and back. The image-to-ground
// direction is the planar homography X = H U.
class GroundHomography {
 public:
  explicit GroundHomography(const CameraModel& cam) : cam_(cam) {
    cam.validate();
    const double h = cam.mount_height, sp = std::sin(cam.pitch),
                 cp = std::cos(cam.pitch), f = cam.focal;
    h_ = {{{0.0, -h * sp, h * (f * cp + cam.v0 * sp)},
           {-h, 0.0, h * cam.u0},
           {0.0, cp, f * sp - cam.v0 * cp}}};
  }

  const std::array<std::array<double, 3>, 3>& matrix() const { return h_; }

  // Homogeneous scale for image row v; non-positive above the horizon.
  double row_scale(double v) const { return h_[2][1] * v + h_[2][2]; }

  Vec2 to_ground(double u, double v) const {
    const double w = row_scale(v);
    if (!(w > 1e-12)) {
      throw GeometryError("ground_homography: image point above the horizon");
    }
    return {(h_[0][1] * v + h_[0][2]) / w, (h_[1][0] * u + h_[1][2]) / w};
  }

  // Image point of a body-frame ground point, if it lies in front of the
  // camera.
  std::optional<Vec2> project(Vec2 ground) const {
    const double sp = std::sin(cam_.pitch), cp = std::cos(cam_.pitch);
    const double zc = ground.x * cp + cam_.mount_height * sp;
    if (!(zc > 1e-9)) return std::nullopt;
    const double xc = -ground.y;
    const double yc = -ground.x * sp + cam_.mount_height * cp;
    return Vec2{cam_.u0 + cam_.focal * xc / zc, cam_.v0 + cam_.focal * yc / zc};
  }

  const CameraModel& camera() const { return cam_; }

 private:
  CameraModel cam_;
  std::array<std::array<double, 3>, 3> h_{};
};

inline GroundHomography ground_homography(const CameraModel& cam) {
  return GroundHomography(cam);
}

enum class MarkerType { kCone, kCylinder, kSolidLane };

// Footprint size: cone disc radius, cylinder square side, or lane strip width.
struct MarkerKind {
  MarkerType type = MarkerType::kCone;
  double size = 0.1;
};

inline MarkerKind default_marker(MarkerType t) {
  switch (t) {
    case MarkerType::kCone: return {t, 0.1};
    case MarkerType::kCylinder: return {t, 0.16};
    case MarkerType::kSolidLane: return {t, 0.1};
  }
  return {t, 0.1};
}

inline const char* to_string(MarkerType t) {
  switch (t) {
    case MarkerType::kCone: return "cone";
    case MarkerType::kCylinder: return "cylinder";
    case MarkerType::kSolidLane: return "solid_lane";
  }
  return "?";
}

inline MarkerType parse_marker_type(const std::string& s) {
  if (s == "cone" || s == "cones") return MarkerType::kCone;
  if (s == "cylinder" || s == "cylinders") return MarkerType::kCylinder;
  if (s == "solid_lane" || s == "solid_lanes") return MarkerType::kSolidLane;
  throw DomainError("unknown marker kind: " + s);
}

// Removes markers of `lane` (1, 2, or 0 for both) whose arc-length coordinate
// along that lane lies in [s_begin, s_end].
struct MissingSpan {
  int lane = 0;
  double s_begin = 0.0;
  double s_end = 0.0;

  bool covers(int marker_lane, double s) const {
    return (lane == 0 || lane == marker_lane) && s >= s_begin && s <= s_end;
  }
};

namespace detail {

struct Interval {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool empty() const { return !(lo <= hi); }
  void add(double a, double b) {
    lo = std::min(lo, a);
    hi = std::max(hi, b);
  }
};

// Lateral extent of a disc cut by the line x = row_x.
inline void disc_cut(Vec2 c, double radius, double row_x, Interval& out) {
  const double dx = row_x - c.x;
  const double rem = radius * radius - dx * dx;
  if (rem < 0.0) return;
  const double s = std::sqrt(rem);
  out.add(c.y - s, c.y + s);
}

// Lateral extent of a convex polygon cut by the line x = row_x.
template <std::size_t N>
void polygon_cut(const std::array<Vec2, N>& poly, double row_x, Interval& out) {
  for (std::size_t i = 0; i < N; ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % N];
    if ((a.x <= row_x && b.x >= row_x) || (b.x <= row_x && a.x >= row_x)) {
      if (a.x == b.x) {
        out.add(std::min(a.y, b.y), std::max(a.y, b.y));
      } else {
        const double t = (row_x - a.x) / (b.x - a.x);
        const double y = a.y + t * (b.y - a.y);
        out.add(y, y);
      }
    }
  }
}

}  // namespace detail

// Rasterizes track markers into the pseudo-camera image. A pixel is active
// when its center's ground point lies inside a marker footprint; each image
// row is a line of constant forward distance, so footprints are filled one
// row interval at a time.
class Renderer {
 public:
  struct Cone {
    Vec2 pos;
    int lane;
    double arc;
  };
  struct LanePoint {
    Vec2 pos;
    double arc;
  };

  Renderer(const TrackSpec& track, const CameraModel& cam, MarkerKind kind,
           std::size_t lane_samples = 1500)
      : homography_(cam), kind_(kind) {
    if (!(kind.size > 0.0)) throw DomainError("MarkerKind: size must be > 0");
    init_rows();
    build_lanes(track, lane_samples);
  }

  const CameraModel& camera() const { return homography_.camera(); }
  const GroundHomography& homography() const { return homography_; }
  const MarkerKind& kind() const { return kind_; }
  const std::vector<Cone>& cones() const { return cones_; }
  const std::vector<LanePoint>& lane_polyline(int lane) const {
    return lane == 1 ? lane1_ : lane2_;
  }

  BinaryImage render(const Pose2D& robot, double blur_sigma = 0.0,
                     const std::vector<MissingSpan>& missing = {}) const {
    BinaryImage img;
    render_into(robot, img, missing);
    if (blur_sigma > 0.0) img = gaussian_blur_threshold(img, blur_sigma);
    return img;
  }

  void render_into(const Pose2D& robot, BinaryImage& img,
                   const std::vector<MissingSpan>& missing) const {
    std::fill(img.px.begin(), img.px.end(), std::uint8_t{0});
    const Frame frame(robot);
    auto skipped = [&](int lane, double arc) {
      for (const auto& m : missing) {
        if (m.covers(lane, arc)) return true;
      }
      return false;
    };
    switch (kind_.type) {
      case MarkerType::kCone:
      case MarkerType::kCylinder:
        for (const Cone& c : cones_) {
          if (std::abs(c.pos.x - robot.x) > view_radius_ ||
              std::abs(c.pos.y - robot.y) > view_radius_) {
            continue;
          }
          if (!missing.empty() && skipped(c.lane, c.arc)) continue;
          draw_point_marker(frame, c.pos, img);
        }
        break;
      case MarkerType::kSolidLane:
        for (int lane = 1; lane <= 2; ++lane) {
          const auto& pts = lane_polyline(lane);
          const auto& chunks = lane == 1 ? chunks1_ : chunks2_;
          for (std::size_t k = 0; k < chunks.size(); ++k) {
            const Chunk& ch = chunks[k];
            if (distance(ch.center, robot.position()) > view_radius_ + ch.radius) {
              continue;
            }
            const std::size_t end = std::min(ch.first + kChunk, pts.size() - 1);
            for (std::size_t i = ch.first; i < end; ++i) {
              if (!missing.empty() && (skipped(lane, pts[i].arc) ||
                                       skipped(lane, pts[i + 1].arc))) {
                continue;
              }
              draw_strip(frame, pts[i].pos, pts[i + 1].pos, img);
            }
          }
        }
        break;
    }
  }

  static BinaryImage gaussian_blur_threshold(const BinaryImage& img,
                                             double sigma) {
    const GrayImage g = gaussian_blur(img, sigma);
    BinaryImage out;
    for (std::size_t i = 0; i < out.px.size(); ++i) {
      out.px[i] = g.px[i] >= 0.5f ? 1 : 0;
    }
    return out;
  }

  // Separable Gaussian with zero padding outside the frame.
  static GrayImage gaussian_blur(const BinaryImage& img, double sigma) {
    GrayImage out;
    if (!(sigma > 0.0)) {
      for (std::size_t i = 0; i < img.px.size(); ++i) out.px[i] = img.px[i];
      return out;
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      k[static_cast<std::size_t>(i + radius)] =
          std::exp(-0.5 * (i * i) / (sigma * sigma));
      sum += k[static_cast<std::size_t>(i + radius)];
    }
    for (auto& v : k) v /= sum;
    std::vector<double> tmp(img.px.size(), 0.0);
    for (int r = 0; r < kImageH; ++r) {
      for (int c = 0; c < kImageW; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int cc = c + i;
          if (cc < 0 || cc >= kImageW) continue;
          acc += k[static_cast<std::size_t>(i + radius)] * img.at(r, cc);
        }
        tmp[static_cast<std::size_t>(r * kImageW + c)] = acc;
      }
    }
    for (int r = 0; r < kImageH; ++r) {
      for (int c = 0; c < kImageW; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int rr = r + i;
          if (rr < 0 || rr >= kImageH) continue;
          acc += k[static_cast<std::size_t>(i + radius)] *
                 tmp[static_cast<std::size_t>(rr * kImageW + c)];
        }
        out.px[static_cast<std::size_t>(r * kImageW + c)] =
            static_cast<float>(acc);
      }
    }
    return out;
  }

 private:
  static constexpr std::size_t kChunk = 16;

  struct Frame {
    explicit Frame(const Pose2D& p)
        : origin(p.position()), c(std::cos(p.theta)), s(std::sin(p.theta)) {}
    Vec2 to_body(Vec2 w) const {
      const double dx = w.x - origin.x, dy = w.y - origin.y;
      return {c * dx + s * dy, -s * dx + c * dy};
    }
    Vec2 origin;
    double c, s;
  };

  struct Chunk {
    std::size_t first;
    Vec2 center;
    double radius;
  };

  // Rows whose ground line lies within [lo, hi]; rows get nearer as r grows.
  std::pair<int, int> row_range(double lo, double hi) const {
    const auto first = std::partition_point(
        row_x_sorted_.begin(), row_x_sorted_.end(),
        [&](double x) { return x > hi; });
    const auto last = std::partition_point(
        first, row_x_sorted_.end(), [&](double x) { return x >= lo; });
    return {row_first_ + static_cast<int>(first - row_x_sorted_.begin()),
            row_first_ + static_cast<int>(last - row_x_sorted_.begin())};
  }

  void init_rows() {
    const CameraModel& cam = homography_.camera();
    row_x_.assign(kImageH, std::numeric_limits<double>::quiet_NaN());
    row_scale_.assign(kImageH, 0.0);
    x_min_ = std::numeric_limits<double>::infinity();
    x_max_ = -x_min_;
    for (int r = 0; r < kImageH; ++r) {
      const double w = homography_.row_scale(r);
      if (!(w > 1e-12)) continue;
      const Vec2 g = homography_.to_ground(cam.u0, r);
      row_x_[static_cast<std::size_t>(r)] = g.x;
      // Y(u) = -(h / w) (u - u0) on this row.
      row_scale_[static_cast<std::size_t>(r)] = cam.mount_height / w;
      x_min_ = std::min(x_min_, g.x);
      x_max_ = std::max(x_max_, g.x);
      y_max_ = std::max(y_max_, std::abs(homography_.to_ground(-0.5, r).y));
    }
    row_first_ = 0;
    while (row_first_ < kImageH && std::isnan(row_x_[static_cast<std::size_t>(row_first_)])) {
      ++row_first_;
    }
    row_x_sorted_.assign(row_x_.begin() + row_first_, row_x_.end());
    view_radius_ = std::hypot(x_max_, y_max_) + 1.0;
  }

  void build_lanes(const TrackSpec& track, std::size_t samples) {
    auto sample = [&](const Curve& curve) {
      std::vector<LanePoint> pts;
      pts.reserve(samples);
      double arc = 0.0;
      for (std::size_t i = 0; i < samples; ++i) {
        const Vec2 p = curve(static_cast<double>(i) / static_cast<double>(samples - 1));
        if (!pts.empty()) arc += distance(pts.back().pos, p);
        pts.push_back({p, arc});
      }
      return pts;
    };
    lane1_ = sample(track.lane_curves.c1);
    lane2_ = sample(track.lane_curves.c2);
    // Cone i sits at curve parameter i / (n - 1).
    auto arc_at = [&](const std::vector<LanePoint>& pts, double t) {
      const double idx = t * static_cast<double>(pts.size() - 1);
      const auto i0 = std::min(static_cast<std::size_t>(idx), pts.size() - 2);
      const double f = idx - static_cast<double>(i0);
      return pts[i0].arc + f * (pts[i0 + 1].arc - pts[i0].arc);
    };
    auto add_cones = [&](const std::vector<Vec2>& cones, int lane,
                         const std::vector<LanePoint>& pts) {
      const std::size_t n = cones.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        cones_.push_back({cones[i], lane, arc_at(pts, t)});
      }
    };
    add_cones(track.cones.lane1_cones, 1, lane1_);
    add_cones(track.cones.lane2_cones, 2, lane2_);
    auto chunk = [](const std::vector<LanePoint>& pts) {
      std::vector<Chunk> out;
      for (std::size_t first = 0; first + 1 < pts.size(); first += kChunk) {
        const std::size_t end = std::min(first + kChunk, pts.size() - 1);
        Vec2 c{};
        for (std::size_t i = first; i <= end; ++i) c = c + pts[i].pos;
        c = (1.0 / static_cast<double>(end - first + 1)) * c;
        double rad = 0.0;
        for (std::size_t i = first; i <= end; ++i) rad = std::max(rad, distance(c, pts[i].pos));
        out.push_back({first, c, rad});
      }
      return out;
    };
    chunks1_ = chunk(lane1_);
    chunks2_ = chunk(lane2_);
  }

  bool outside_view(Vec2 b, double reach) const {
    return b.x < x_min_ - reach || b.x > x_max_ + reach ||
           std::abs(b.y) > y_max_ + reach;
  }

  // Fills columns whose centers fall in the lateral interval on row r.
  void fill_row(int r, const detail::Interval& iv, BinaryImage& img) const {
    if (iv.empty()) return;
    const double k = row_scale_[static_cast<std::size_t>(r)];
    const double u0 = homography_.camera().u0;
    const double u_lo = u0 - iv.hi / k;
    const double u_hi = u0 - iv.lo / k;
    const int c0 = std::max(0, static_cast<int>(std::ceil(u_lo)));
    const int c1 = std::min(kImageW - 1, static_cast<int>(std::floor(u_hi)));
    if (c0 > c1) return;
    auto* row = &img.px[static_cast<std::size_t>(r * kImageW)];
    std::fill(row + c0, row + c1 + 1, std::uint8_t{1});
  }

  void draw_point_marker(const Frame& frame, Vec2 world, BinaryImage& img) const {
    const Vec2 b = frame.to_body(world);
    const double reach = kind_.type == MarkerType::kCone
                             ? kind_.size
                             : kind_.size * std::sqrt(0.5);
    if (outside_view(b, reach)) return;
    std::array<Vec2, 4> square{};
    if (kind_.type == MarkerType::kCylinder) {
      // World-axis-aligned square expressed in the body frame.
      const double h = 0.5 * kind_.size;
      const std::array<Vec2, 4> corners = {
          Vec2{-h, -h}, Vec2{h, -h}, Vec2{h, h}, Vec2{-h, h}};
      for (std::size_t i = 0; i < 4; ++i) {
        square[i] = frame.to_body(world + corners[i]);
      }
    }
    const auto [r0, r1] = row_range(b.x - reach, b.x + reach);
    for (int r = r0; r < r1; ++r) {
      const double rx = row_x_[static_cast<std::size_t>(r)];
      detail::Interval iv;
      if (kind_.type == MarkerType::kCone) {
        detail::disc_cut(b, kind_.size, rx, iv);
      } else {
        detail::polygon_cut(square, rx, iv);
      }
      fill_row(r, iv, img);
    }
  }

  void draw_strip(const Frame& frame, Vec2 wa, Vec2 wb, BinaryImage& img) const {
    const double hw = 0.5 * kind_.size;
    const Vec2 a = frame.to_body(wa), b = frame.to_body(wb);
    const double seg = distance(a, b);
    if (outside_view(0.5 * (a + b), 0.5 * seg + hw)) return;
    std::array<Vec2, 4> rect{};
    const bool has_rect = seg > 1e-12;
    if (has_rect) {
      const Vec2 n{-(b.y - a.y) / seg * hw, (b.x - a.x) / seg * hw};
      rect = {a + n, b + n, b - n, a - n};
    }
    const double lo = std::min(a.x, b.x) - hw, hi = std::max(a.x, b.x) + hw;
    const auto [r0, r1] = row_range(lo, hi);
    for (int r = r0; r < r1; ++r) {
      const double rx = row_x_[static_cast<std::size_t>(r)];
      detail::Interval iv;
      detail::disc_cut(a, hw, rx, iv);
      detail::disc_cut(b, hw, rx, iv);
      if (has_rect) detail::polygon_cut(rect, rx, iv);
      fill_row(r, iv, img);
    }
  }

  GroundHomography homography_;
  MarkerKind kind_;
  std::vector<double> row_x_;
  std::vector<double> row_scale_;
  std::vector<double> row_x_sorted_;
  int row_first_ = 0;
  double x_min_ = 0.0, x_max_ = 0.0, y_max_ = 0.0, view_radius_ = 0.0;
  std::vector<Cone> cones_;
  std::vector<LanePoint> lane1_, lane2_;
  std::vector<Chunk> chunks1_, chunks2_;
};

inline BinaryImage render_view(const Pose2D& robot, const TrackSpec& track,
                               const CameraModel& cam, MarkerKind kind,
                               double blur_sigma,
                               const std::vector<MissingSpan>& missing_spans) {
  if (!(blur_sigma >= 0.0)) throw DomainError("render_view: blur_sigma must be >= 0");
  if (!std::isfinite(robot.x) || !std::isfinite(robot.y) ||
      !std::isfinite(robot.theta)) {
    throw DomainError("render_view: non-finite pose");
  }
  return Renderer(track, cam, kind).render(robot, blur_sigma, missing_spans);
}

using FeatureVec = std::vector<double>;

struct PoolingGrid {
  int cols = 0;
  int rows = 0;
};

inline bool is_supported_feature_dim(std::size_t d) {
  return d >= 16 && d <= 2048 && (d & (d - 1)) == 0;
}

// Power-of-two cell grid whose cell aspect is closest to the image aspect.
inline PoolingGrid pooling_grid(std::size_t d) {
  if (!is_supported_feature_dim(d)) {
    throw DomainError("distill: unsupported feature size " + std::to_string(d));
  }
  const double target = std::log(static_cast<double>(kImageW) / kImageH);
  PoolingGrid best;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t cols = 1; cols <= d; cols *= 2) {
    const std::size_t rows = d / cols;
    if (cols > static_cast<std::size_t>(kImageW) ||
        rows > static_cast<std::size_t>(kImageH)) {
      continue;
    }
    const double err = std::abs(std::log(static_cast<double>(cols) / rows) - target);
    if (err < best_err - 1e-12) {
      best_err = err;
      best = {static_cast<int>(cols), static_cast<int>(rows)};
    }
  }
  return best;
}

namespace detail {

// Number of set bytes in [first, last); pixel bytes are 0 or 1.
inline std::uint64_t count_span(const std::uint8_t* first, const std::uint8_t* last) {
  std::uint64_t sum = 0;
  while (last - first >= 8) {
    std::uint64_t w;
    std::memcpy(&w, first, sizeof(w));
    sum += (w * 0x0101010101010101ULL) >> 56;
    first += 8;
  }
  while (first != last) sum += *first++;
  return sum;
}

}  // namespace detail

// Mean-pools the image over a grid of d cells, row-major from the top-left.
inline FeatureVec distill(const BinaryImage& img, std::size_t d) {
  const PoolingGrid g = pooling_grid(d);
  std::vector<int> col_edge(static_cast<std::size_t>(g.cols + 1));
  std::vector<int> row_edge(static_cast<std::size_t>(g.rows + 1));
  for (int i = 0; i <= g.cols; ++i) col_edge[static_cast<std::size_t>(i)] = i * kImageW / g.cols;
  for (int i = 0; i <= g.rows; ++i) row_edge[static_cast<std::size_t>(i)] = i * kImageH / g.rows;
  FeatureVec out(d, 0.0);
  for (int gr = 0; gr < g.rows; ++gr) {
    const int r0 = row_edge[static_cast<std::size_t>(gr)];
    const int r1 = row_edge[static_cast<std::size_t>(gr + 1)];
    for (int gc = 0; gc < g.cols; ++gc) {
      const int c0 = col_edge[static_cast<std::size_t>(gc)];
      const int c1 = col_edge[static_cast<std::size_t>(gc + 1)];
      std::uint64_t sum = 0;
      for (int r = r0; r < r1; ++r) {
        const auto* row = &img.px[static_cast<std::size_t>(r * kImageW)];
        sum += detail::count_span(row + c0, row + c1);
      }
      out[static_cast<std::size_t>(gr * g.cols + gc)] =
          static_cast<double>(sum) / static_cast<double>((r1 - r0) * (c1 - c0));
    }
  }
  return out;
}

inline int frame_hold_ratio(double source_hz, double control_hz) {
  if (!(source_hz > 0.0) || !(control_hz >= source_hz)) {
    throw DomainError("frame_hold: need 0 < source_hz <= control_hz");
  }
  const double ratio = control_hz / source_hz;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9) {
    throw DomainError("frame_hold: control rate not divisible by source rate");
  }
  return static_cast<int>(rounded);
}

inline bool is_fresh_frame(std::size_t step_index, double source_hz,
                           double control_hz) {
  return step_index % static_cast<std::size_t>(frame_hold_ratio(source_hz, control_hz)) == 0;
}

inline const BinaryImage& frame_hold(std::size_t step_index, double source_hz,
                                     double control_hz, const BinaryImage& latest,
                                     const BinaryImage& held) {
  return is_fresh_frame(step_index, source_hz, control_hz) ? latest : held;
}

// Signed horizontal offset of the active-pixel centroid from the image center,
// normalized to [-1, 1] (positive right of center). Empty image -> nullopt.
inline std::optional<double> centroid_offset(const BinaryImage& img) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < kImageH; ++r) {
    const auto* row = &img.px[static_cast<std::size_t>(r * kImageW)];
    for (int c = 0; c < kImageW; ++c) {
      if (row[c]) {
        sum += c;
        ++n;
      }
    }
  }
  if (n == 0) return std::nullopt;
  const double center = 0.5 * (kImageW - 1);
  return (sum / static_cast<double>(n) - center) / center;
}

// e_c in [0, 1]; an empty view counts as the worst case.
inline double centroid_error(const BinaryImage& img) {
  const auto off = centroid_offset(img);
  return off ? std::min(1.0, std::abs(*off)) : 1.0;
}

inline void write_pgm(std::ostream& out, const BinaryImage& img) {
  out << "P5\n" << kImageW << " " << kImageH << "\n255\n";
  for (auto p : img.px) out.put(static_cast<char>(p ? 255 : 0));
}

inline void write_feature_csv(std::ostream& out, const FeatureVec& f) {
  char buf[32];
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6g", f[i]);
    out << (i ? "," : "") << buf;
  }
  out << "\n";
}

}  // namespace lanekeep

#endif  // LANEKEEP_SENSOR_HPP_
