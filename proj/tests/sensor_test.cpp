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
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "lanekeep/errors.hpp"
#include "lanekeep/sensor.hpp"
#include "lanekeep/track.hpp"

namespace lanekeep {
namespace {

// A scene whose only marker is the given list of lane-1 cones.
TrackSpec cone_scene(std::vector<Vec2> cones) {
  TrackSpec t;
  t.lane_curves = make_straight_lanes(20.0, 1.3);
  t.cones.lane1_cones = std::move(cones);
  return t;
}

Vec2 centroid(const BinaryImage& img) {
  double su = 0, sv = 0;
  std::size_t n = 0;
  for (int r = 0; r < kImageH; ++r) {
    for (int c = 0; c < kImageW; ++c) {
      if (img.at(r, c)) {
        su += c;
        sv += r;
        ++n;
      }
    }
  }
  return {su / n, sv / n};
}

const CameraModel kCam{};
const MarkerKind kCone = default_marker(MarkerType::kCone);

TEST(RenderView, ConeOnAxisIsCentered) {
  const BinaryImage img = render_view({0, 0, 0}, cone_scene({{2.0, 0.0}}), kCam, kCone, 0, {});
  ASSERT_GT(img.count(), 0u);
  EXPECT_NEAR(centroid(img).x, kCam.u0, 1.0);
}

TEST(RenderView, EmptyFrustumIsBlank) {
  EXPECT_EQ(render_view({0, 0, 0}, cone_scene({{-3.0, 0.0}}), kCam, kCone, 0, {}).count(), 0u);
  EXPECT_EQ(render_view({0, 0, 0}, cone_scene({}), kCam, kCone, 0, {}).count(), 0u);
}

TEST(RenderView, BlurGrowsBlobAndKeepsCentroid) {
  const TrackSpec t = cone_scene({{2.0, 0.3}});
  const BinaryImage sharp = render_view({0, 0, 0}, t, kCam, kCone, 0, {});
  const BinaryImage blurred = render_view({0, 0, 0}, t, kCam, kCone, 2.0, {});
  // Oracle: direct 2D convolution with an untruncated Gaussian kernel.
  BinaryImage oracle;
  const double s = 2.0;
  for (int r = 0; r < kImageH; ++r) {
    for (int c = 0; c < kImageW; ++c) {
      double acc = 0.0, norm = 0.0;
      for (int dr = -12; dr <= 12; ++dr) {
        for (int dc = -12; dc <= 12; ++dc) {
          const double w = std::exp(-(dr * dr + dc * dc) / (2 * s * s));
          norm += w;
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < kImageH && cc >= 0 && cc < kImageW) acc += w * sharp.at(rr, cc);
        }
      }
      oracle.at(r, c) = acc / norm >= 0.5 ? 1 : 0;
    }
  }
  std::size_t diff = 0;
  for (std::size_t i = 0; i < oracle.px.size(); ++i) diff += oracle.px[i] != blurred.px[i];
  EXPECT_LE(diff, blurred.count() / 20 + 2);
  // Thresholding at 0.5 erodes a convex blob, so the count follows the oracle
  // rather than growing.
  EXPECT_NEAR(static_cast<double>(blurred.count()), static_cast<double>(oracle.count()),
              0.05 * oracle.count() + 2);
  EXPECT_GT(blurred.count(), 0u);
  EXPECT_NEAR(centroid(blurred).x, centroid(sharp).x, 1.0);
  EXPECT_NEAR(centroid(blurred).y, centroid(sharp).y, 1.0);
}

TEST(RenderView, Deterministic) {
  const TrackSpec t = make_track(TrackParams{});
  for (MarkerType m : {MarkerType::kCone, MarkerType::kCylinder, MarkerType::kSolidLane}) {
    const Pose2D p = t.paths[0].pose_at(3.0);
    EXPECT_EQ(render_view(p, t, kCam, default_marker(m), 0, {}),
              render_view(p, t, kCam, default_marker(m), 0, {}));
  }
}

TEST(RenderView, MissingSpanRemovesCones) {
  const TrackSpec t = make_track(TrackParams{});
  const Pose2D p = t.paths[0].pose_at(0.0);
  const BinaryImage full = render_view(p, t, kCam, kCone, 0, {});
  const BinaryImage none = render_view(p, t, kCam, kCone, 0, {{0, 0.0, 1e6}});
  EXPECT_GT(full.count(), 0u);
  EXPECT_EQ(none.count(), 0u);
}

TEST(RenderView, Errors) {
  const TrackSpec t = cone_scene({{2.0, 0.0}});
  EXPECT_THROW(render_view({NAN, 0, 0}, t, kCam, kCone, 0, {}), DomainError);
  EXPECT_THROW(render_view({0, 0, 0}, t, kCam, kCone, -1, {}), DomainError);
  EXPECT_THROW(render_view({0, 0, 0}, t, kCam, {MarkerType::kCone, 0.0}, 0, {}), DomainError);
}

TEST(Distill, UniformImages) {
  BinaryImage zero, one;
  std::fill(one.px.begin(), one.px.end(), 1);
  for (double v : distill(zero, 64)) EXPECT_EQ(v, 0.0);
  for (double v : distill(one, 64)) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(distill(zero, 64).size(), 64u);
}

TEST(Distill, HalfCell) {
  const PoolingGrid g = pooling_grid(64);
  EXPECT_EQ(g.cols, 16);
  EXPECT_EQ(g.rows, 4);
  BinaryImage img;
  // Cell (row 1, col 2) spans rows 24..47 and columns 40..59.
  for (int r = 24; r < 36; ++r) {
    for (int c = 40; c < 60; ++c) img.at(r, c) = 1;
  }
  const FeatureVec f = distill(img, 64);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_EQ(f[i], i == 1 * 16 + 2 ? 0.5 : 0.0) << i;
  }
}

TEST(Distill, SupportedSizes) {
  BinaryImage img;
  img.at(10, 10) = 1;
  for (std::size_t d = 16; d <= 2048; d *= 2) {
    const FeatureVec f = distill(img, d);
    ASSERT_EQ(f.size(), d);
    const PoolingGrid g = pooling_grid(d);
    double total = 0.0;
    for (double v : f) total += v;
    EXPECT_NEAR(total * (kImageW / g.cols) * (kImageH / g.rows), 1.0, 1e-9) << d;
  }
  EXPECT_THROW(distill(img, 48), DomainError);
  EXPECT_THROW(distill(img, 8), DomainError);
  EXPECT_THROW(distill(img, 4096), DomainError);
}

TEST(FrameHold, Ratios) {
  for (std::size_t k = 0; k < 40; ++k) EXPECT_TRUE(is_fresh_frame(k, 20, 20));
  for (std::size_t k = 0; k < 40; ++k) EXPECT_EQ(is_fresh_frame(k, 4, 20), k % 5 == 0);
  for (std::size_t k = 0; k < 40; ++k) EXPECT_EQ(is_fresh_frame(k, 1, 20), k % 20 == 0);
  EXPECT_THROW(frame_hold_ratio(3, 20), DomainError);
  EXPECT_THROW(frame_hold_ratio(40, 20), DomainError);
}

TEST(FrameHold, DistinctImageCount) {
  for (int k : {1, 2, 5, 20}) {
    for (std::size_t T : {1u, 7u, 40u, 101u}) {
      BinaryImage held;
      std::set<std::vector<std::uint8_t>> seen;
      for (std::size_t t = 0; t < T; ++t) {
        BinaryImage latest;
        latest.at(static_cast<int>(t / kImageW), static_cast<int>(t % kImageW)) = 1;
        held = frame_hold(t, 20.0 / k, 20.0, latest, held);
        seen.insert(held.px);
      }
      EXPECT_EQ(seen.size(), (T + k - 1) / k) << k << " " << T;
    }
  }
}

TEST(CentroidError, Examples) {
  BinaryImage img;
  for (int r = 0; r < kImageH; ++r) {
    img.at(r, 159) = 1;
    img.at(r, 160) = 1;
  }
  EXPECT_DOUBLE_EQ(centroid_error(img), 0.0);
  BinaryImage left;
  left.at(5, 0) = 1;
  EXPECT_DOUBLE_EQ(centroid_error(left), 1.0);
  BinaryImage q;
  // Three pixels at 239 and one at 240 average to 239.25.
  q.at(0, 239) = q.at(1, 239) = q.at(2, 239) = 1;
  q.at(3, 240) = 1;
  EXPECT_NEAR(centroid_error(q), (239.25 - 159.5) / 159.5, 1e-12);
  EXPECT_DOUBLE_EQ(centroid_error(BinaryImage{}), 1.0);
}

TEST(Homography, AxisAndSign) {
  const GroundHomography h(kCam);
  const Vec2 axis = h.to_ground(kCam.u0, kCam.v0);
  EXPECT_NEAR(axis.x, kCam.mount_height / std::tan(kCam.pitch), 1e-12);
  EXPECT_NEAR(axis.y, 0.0, 1e-12);
  EXPECT_GT(h.to_ground(kCam.u0 - 30, kCam.v0 + 10).y, 0.0);
  // The horizon sits above the top row for the default pitch, so probe a
  // steeper point.
  EXPECT_THROW(h.to_ground(kCam.u0, kCam.v0 - kCam.focal / std::tan(kCam.pitch) - 1),
               GeometryError);
}

TEST(Homography, ExactRoundTrip) {
  const GroundHomography h(kCam);
  for (double x = 1.0; x <= 8.0; x += 0.37) {
    for (double y = -2.0; y <= 2.0; y += 0.29) {
      const auto uv = h.project({x, y});
      ASSERT_TRUE(uv.has_value());
      const Vec2 g = h.to_ground(uv->x, uv->y);
      ASSERT_NEAR(g.x, x, 1e-9);
      ASSERT_NEAR(g.y, y, 1e-9);
    }
  }
}

TEST(Homography, RenderedConeRoundTrip) {
  const GroundHomography h(kCam);
  for (Vec2 p : {Vec2{2.0, 0.0}, Vec2{2.0, 0.4}, Vec2{2.0, -0.5}}) {
    const BinaryImage img = render_view({0, 0, 0}, cone_scene({p}), kCam, kCone, 0, {});
    const Vec2 c = centroid(img);
    const Vec2 g = h.to_ground(c.x, c.y);
    EXPECT_NEAR(g.x, p.x, 0.05);
    EXPECT_NEAR(g.y, p.y, 0.05);
  }
}

TEST(Camera, Validation) {
  CameraModel c;
  c.pitch = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = CameraModel{};
  c.image_w = 640;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(MarkerKind, Parse) {
  EXPECT_EQ(parse_marker_type("cylinders"), MarkerType::kCylinder);
  EXPECT_EQ(parse_marker_type(to_string(MarkerType::kSolidLane)), MarkerType::kSolidLane);
  EXPECT_THROW(parse_marker_type("flag"), DomainError);
}

}  // namespace
}  // namespace lanekeep
