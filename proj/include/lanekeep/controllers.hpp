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

#ifndef LANEKEEP_CONTROLLERS_HPP_
#define LANEKEEP_CONTROLLERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lanekeep/errors.hpp"
#include "lanekeep/geometry.hpp"
#include "lanekeep/robot.hpp"
#include "lanekeep/sensor.hpp"
#include "lanekeep/tracking.hpp"

namespace lanekeep {

struct PDGains {
  double kp = 1.2;
  double kd = 0.1;
  double v_ref = 0.75;

  void validate() const {
    if (!std::isfinite(kp) || !std::isfinite(kd)) {
      throw DomainError("PDGains: gains must be finite");
    }
    if (!(v_ref >= kVMin && v_ref <= kVMax)) {
      throw DomainError("PDGains: v_ref outside [0.1, 1]");
    }
  }
};

struct PurePursuitConfig {
  double lookahead = 1.5;
  double v_fixed = 0.75;
};

struct MPCConfig {
  std::size_t horizon = 10;
  double dt = 0.1;
  double q_pos = 10.0;
  double q_theta = 1.0;
  double r_v = 0.1;
  double r_omega = 0.1;
  double v_min = 0.0;
  double v_max = 1.0;
  double omega_max = 0.5;
  std::size_t max_iterations = 100;
  double kkt_tolerance = 1e-6;

  void validate() const {
    if (horizon < 1) throw DomainError("MPCConfig: horizon must be >= 1");
    if (!(dt > 0.0)) throw DomainError("MPCConfig: dt must be > 0");
    if (!(q_pos >= 0.0 && q_theta >= 0.0 && r_v >= 0.0 && r_omega >= 0.0)) {
      throw DomainError("MPCConfig: weights must be >= 0");
    }
  }
};

// e > 0 when the lane centroid sits left of the image center.
inline BodyTwist pd_center(double e, double e_prev, double dt,
                           const PDGains& gains) {
  if (!(dt > 0.0)) throw DomainError("pd_center: dt must be > 0");
  const double omega = gains.kp * e + gains.kd * (e - e_prev) / dt;
  return {gains.v_ref, std::clamp(omega, -kOmegaMax, kOmegaMax)};
}

inline BodyTwist pure_pursuit(Vec2 goal, double v, double lookahead) {
  if (!(lookahead > 0.0)) throw DomainError("pure_pursuit: L must be > 0");
  if (goal.x <= 0.0) return {v, goal.y < 0.0 ? -kOmegaMax : kOmegaMax};
  const double alpha = std::atan2(goal.y, goal.x);
  const double omega = 2.0 * v * std::sin(alpha) / lookahead;
  return {v, std::clamp(omega, -kOmegaMax, kOmegaMax)};
}

inline double icg_reward(double e_c, double e_v, const BodyTwist& action,
                         const RewardWeights& w) {
  return detail::sq_complement(e_c) + detail::sq_complement(e_v) +
         detail::sq_complement(std::abs(action.v) / w.v_max) +
         detail::sq_complement(std::abs(action.omega) / w.omega_max);
}

enum class RewardMode { kWaypoint, kCentroid };

inline const char* to_string(RewardMode m) {
  return m == RewardMode::kWaypoint ? "wpg" : "icg";
}

inline RewardMode parse_reward_mode(const std::string& s) {
  if (s == "wpg") return RewardMode::kWaypoint;
  if (s == "icg") return RewardMode::kCentroid;
  throw DomainError("unknown reward mode: " + s);
}

// Both reward families share the episode mechanics; only this callback
// differs.
inline RewardFn make_reward(RewardMode mode) {
  if (mode == RewardMode::kWaypoint) return waypoint_reward();
  return [](const RewardInputs& in) {
    return icg_reward(centroid_error(in.episode.image()), in.e_v, in.action,
                      in.weights);
  };
}

// ---------------------------------------------------------------------------
// Lane fit

namespace detail {

// Least-squares polynomial y = c0 + c1 x + c2 x^2, degree reduced when the
// samples do not support it.
struct Quadratic {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double operator()(double x) const { return c0 + x * (c1 + x * c2); }
  double slope(double x) const { return c1 + 2.0 * c2 * x; }
};

inline Quadratic fit_quadratic(const std::vector<double>& xs,
                               const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n == 0) throw DomainError("fit_quadratic: no samples");
  double lo = xs[0], hi = xs[0];
  for (double x : xs) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  // Center and scale the abscissa for conditioning.
  const double mid = 0.5 * (lo + hi);
  const double half = std::max(0.5 * (hi - lo), 1e-9);
  int degree = 2;
  if (hi - lo < 1e-9) degree = 0;
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (xs[i] - mid) / half;
    for (int d = 0; d <= degree; ++d) a(i, d) = std::pow(t, d);
    b(i) = ys[i];
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  // Expand back to the raw abscissa.
  Quadratic q;
  const double s = 1.0 / half;
  const double k0 = c(0);
  const double k1 = degree >= 1 ? c(1) : 0.0;
  const double k2 = degree >= 2 ? c(2) : 0.0;
  q.c0 = k0 - k1 * mid * s + k2 * mid * mid * s * s;
  q.c1 = k1 * s - 2.0 * k2 * mid * s * s;
  q.c2 = k2 * s * s;
  return q;
}

}  // namespace detail

inline constexpr std::size_t kMinLanePixels = 6;
inline constexpr std::size_t kMinSidePixels = 3;

// Body-frame reference poses spaced `spacing` apart along the fitted lane
// center, starting from the robot.
inline std::vector<Pose2D> lane_fit_waypoints(const BinaryImage& img,
                                              const CameraModel& cam,
                                              std::size_t horizon,
                                              double spacing,
                                              double lane_width = 1.3) {
  if (!(spacing > 0.0)) throw DomainError("lane_fit_waypoints: spacing <= 0");
  std::vector<double> lr, lc, rr, rc;
  const double mid_col = 0.5 * (kImageW - 1);
  int row_lo = kImageH, row_hi = -1;
  for (int r = 0; r < kImageH; ++r) {
    for (int c = 0; c < kImageW; ++c) {
      if (!img.at(r, c)) continue;
      if (c < mid_col) {
        lr.push_back(r);
        lc.push_back(c);
      } else {
        rr.push_back(r);
        rc.push_back(c);
      }
      row_lo = std::min(row_lo, r);
      row_hi = std::max(row_hi, r);
    }
  }
  if (lr.size() + rr.size() < kMinLanePixels) {
    throw InfeasibleError("lane_fit_waypoints: no lane reference in image");
  }
  const GroundHomography hom(cam);
  const bool has_left = lr.size() >= kMinSidePixels;
  const bool has_right = rr.size() >= kMinSidePixels;

  std::vector<double> gx, gy;
  if (has_left && has_right) {
    const auto fl = detail::fit_quadratic(lr, lc);
    const auto fr = detail::fit_quadratic(rr, rc);
    for (int r = row_lo; r <= row_hi; ++r) {
      const Vec2 g = hom.to_ground(0.5 * (fl(r) + fr(r)), r);
      gx.push_back(g.x);
      gy.push_back(g.y);
    }
  } else {
    // Single boundary: shift it by half a lane toward the missing side.
    const bool left = has_left;
    const auto f = detail::fit_quadratic(left ? lr : rr, left ? lc : rc);
    std::vector<double> bx, by;
    for (int r = row_lo; r <= row_hi; ++r) {
      const Vec2 g = hom.to_ground(f(r), r);
      bx.push_back(g.x);
      by.push_back(g.y);
    }
    const auto boundary = detail::fit_quadratic(bx, by);
    const double off = (left ? -0.5 : 0.5) * lane_width;
    for (std::size_t i = 0; i < bx.size(); ++i) {
      const double m = boundary.slope(bx[i]);
      const double inv = 1.0 / std::sqrt(1.0 + m * m);
      // Left normal of the tangent (1, m) is (-m, 1).
      gx.push_back(bx[i] - off * m * inv);
      gy.push_back(by[i] + off * inv);
    }
  }
  const auto center = detail::fit_quadratic(gx, gy);

  std::vector<Pose2D> out;
  out.reserve(horizon);
  constexpr double kStep = 1e-3;
  double x = 0.0, arc = 0.0;
  double y = center(0.0);
  double next = spacing;
  while (out.size() < horizon) {
    const double x1 = x + kStep;
    const double y1 = center(x1);
    const double d = std::hypot(kStep, y1 - y);
    if (arc + d >= next) {
      const double f = (next - arc) / d;
      const double xs = x + f * kStep;
      out.push_back(make_pose(xs, center(xs), std::atan(center.slope(xs))));
      next += spacing;
      continue;
    }
    arc += d;
    x = x1;
    y = y1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linearized MPC

struct BoxQpResult {
  Eigen::VectorXd x;
  double kkt = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// min 0.5 x'Hx + f'x  s.t. lo <= x <= hi, by projected Newton with an
// Armijo search along the projection arc.
inline BoxQpResult solve_box_qp(const Eigen::MatrixXd& H,
                                const Eigen::VectorXd& f,
                                const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, Eigen::VectorXd x0,
                                std::size_t max_iterations, double tol) {
  const Eigen::Index n = f.size();
  auto project = [&](const Eigen::VectorXd& v) {
    return v.cwiseMax(lo).cwiseMin(hi).eval();
  };
  auto cost = [&](const Eigen::VectorXd& v) {
    return 0.5 * v.dot(H * v) + f.dot(v);
  };
  BoxQpResult res;
  res.x = project(x0);
  for (res.iterations = 0;; ++res.iterations) {
    const Eigen::VectorXd g = H * res.x + f;
    res.kkt = (res.x - project(res.x - g)).cwiseAbs().maxCoeff();
    if (res.kkt <= tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= max_iterations) break;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = res.x(i) <= lo(i) && g(i) > 0.0;
      const bool at_hi = res.x(i) >= hi(i) && g(i) < 0.0;
      if (!at_lo && !at_hi) free.push_back(i);
    }
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    if (!free.empty()) {
      const Eigen::Index m = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd hf(m, m);
      Eigen::VectorXd gf(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        gf(a) = g(free[a]);
        for (Eigen::Index b = 0; b < m; ++b) hf(a, b) = H(free[a], free[b]);
      }
      const Eigen::VectorXd df = hf.ldlt().solve(-gf);
      for (Eigen::Index a = 0; a < m; ++a) d(free[a]) = df(a);
    }
    const double c0 = cost(res.x);
    double step = 1.0;
    Eigen::VectorXd trial;
    bool moved = false;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      trial = project(res.x + step * d);
      if (cost(trial) <= c0 + 1e-4 * g.dot(trial - res.x)) {
        moved = true;
        break;
      }
    }
    if (!moved) {
      // Fall back to a projected gradient step.
      const double lip = std::max(H.diagonal().cwiseAbs().sum(), 1e-12);
      trial = project(res.x - g / lip);
    }
    res.x = trial;
  }
  return res;
}

struct MpcResult {
  BodyTwist u0;
  std::vector<BodyTwist> plan;
  double kkt = 0.0;
  std::size_t iterations = 0;
  bool feasible = false;
};

// Unicycle f_d: Euler step of (V cos th, V sin th, omega).
inline Pose2D unicycle_step(const Pose2D& x, const BodyTwist& u, double dt) {
  return {x.x + dt * u.v * std::cos(x.theta), x.y + dt * u.v * std::sin(x.theta),
          x.theta + dt * u.omega};
}

// One receding-horizon solve around the robot (origin of the body frame),
// linearized along the rollout of `nominal` (warm start).
inline MpcResult nmpc_step(const std::vector<Pose2D>& ref, const MPCConfig& cfg,
                           std::vector<BodyTwist> nominal = {}) {
  cfg.validate();
  const std::size_t N = cfg.horizon;
  if (ref.size() < N) throw DomainError("nmpc_step: reference shorter than horizon");
  if (nominal.size() != N) {
    const double v0 = std::clamp(std::hypot(ref[0].x, ref[0].y) / cfg.dt,
                                 cfg.v_min, cfg.v_max);
    nominal.assign(N, BodyTwist{v0, 0.0});
  }
  const Eigen::Index n = static_cast<Eigen::Index>(2 * N);

  std::vector<Pose2D> xbar(N + 1);
  xbar[0] = Pose2D{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < N; ++k) {
    xbar[k + 1] = unicycle_step(xbar[k], nominal[k], cfg.dt);
  }
  // Prediction x_k = xbar_k + G (u - ubar), stacked 3N x 2N.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(3 * N), n);
  for (std::size_t k = 0; k < N; ++k) {
    const double c = std::cos(xbar[k].theta), s = std::sin(xbar[k].theta);
    const double vb = nominal[k].v;
    Eigen::Matrix3d A;
    A << 1, 0, -cfg.dt * vb * s, 0, 1, cfg.dt * vb * c, 0, 0, 1;
    Eigen::Matrix<double, 3, 2> B;
    B << cfg.dt * c, 0, cfg.dt * s, 0, 0, cfg.dt;
    const Eigen::Index r = static_cast<Eigen::Index>(3 * k);
    if (k > 0) {
      G.block(r, 0, 3, static_cast<Eigen::Index>(2 * k)) =
          A * G.block(r - 3, 0, 3, static_cast<Eigen::Index>(2 * k));
    }
    G.block(r, static_cast<Eigen::Index>(2 * k), 3, 2) = B;
  }
  Eigen::VectorXd e(static_cast<Eigen::Index>(3 * N)), q(static_cast<Eigen::Index>(3 * N));
  Eigen::VectorXd ubar(n), rdiag(n), lo(n), hi(n);
  for (std::size_t k = 0; k < N; ++k) {
    const Eigen::Index r = static_cast<Eigen::Index>(3 * k);
    e(r) = xbar[k + 1].x - ref[k].x;
    e(r + 1) = xbar[k + 1].y - ref[k].y;
    e(r + 2) = wrap_angle(xbar[k + 1].theta - ref[k].theta);
    q(r) = q(r + 1) = cfg.q_pos;
    q(r + 2) = cfg.q_theta;
    const Eigen::Index c = static_cast<Eigen::Index>(2 * k);
    ubar(c) = nominal[k].v;
    ubar(c + 1) = nominal[k].omega;
    rdiag(c) = cfg.r_v;
    rdiag(c + 1) = cfg.r_omega;
    lo(c) = cfg.v_min;
    hi(c) = cfg.v_max;
    lo(c + 1) = -cfg.omega_max;
    hi(c + 1) = cfg.omega_max;
  }
  const Eigen::MatrixXd QG = q.asDiagonal() * G;
  Eigen::MatrixXd H = G.transpose() * QG;
  H.diagonal() += rdiag;
  H.diagonal().array() += 1e-12;
  const Eigen::VectorXd f = QG.transpose() * (e - G * ubar);

  const BoxQpResult qp =
      solve_box_qp(H, f, lo, hi, ubar, cfg.max_iterations, cfg.kkt_tolerance);
  MpcResult out;
  out.kkt = qp.kkt;
  out.iterations = qp.iterations;
  out.feasible = qp.converged;
  out.plan.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    out.plan[k] = {qp.x(static_cast<Eigen::Index>(2 * k)),
                   qp.x(static_cast<Eigen::Index>(2 * k + 1))};
  }
  out.u0 = out.plan[0];
  return out;
}

// ---------------------------------------------------------------------------
// Episode actors

enum class ControllerType { kPD, kPurePursuit, kNmpc, kPolicy, kOracle };
enum class ReferenceSource { kVision, kGroundTruth };

inline const char* to_string(ControllerType c) {
  switch (c) {
    case ControllerType::kPD: return "pd";
    case ControllerType::kPurePursuit: return "pure_pursuit";
    case ControllerType::kNmpc: return "nmpc";
    case ControllerType::kPolicy: return "policy";
    case ControllerType::kOracle: return "oracle";
  }
  return "?";
}

inline ControllerType parse_controller(const std::string& s) {
  if (s == "pd") return ControllerType::kPD;
  if (s == "pure_pursuit") return ControllerType::kPurePursuit;
  if (s == "nmpc") return ControllerType::kNmpc;
  if (s == "policy") return ControllerType::kPolicy;
  if (s == "oracle") return ControllerType::kOracle;
  throw DomainError("unknown controller: " + s);
}

inline const char* to_string(ReferenceSource s) {
  return s == ReferenceSource::kVision ? "vision" : "ground_truth";
}

inline ReferenceSource parse_reference_source(const std::string& s) {
  if (s == "vision") return ReferenceSource::kVision;
  if (s == "ground_truth") return ReferenceSource::kGroundTruth;
  throw DomainError("unknown reference source: " + s);
}

class PdActor {
 public:
  explicit PdActor(PDGains gains) : gains_(gains) { gains_.validate(); }

  Action operator()(Episode& ep) {
    const auto off = centroid_offset(ep.image());
    const double e = off ? -*off : e_prev_;
    const BodyTwist u = pd_center(e, first_ ? e : e_prev_, ep.config().dt, gains_);
    first_ = false;
    e_prev_ = e;
    return u;
  }

 private:
  PDGains gains_;
  double e_prev_ = 0.0;
  bool first_ = true;
};

// Body-frame goal on the true path at Euclidean distance L ahead of the robot.
inline Vec2 path_goal(Episode& ep, double lookahead) {
  const ArcPath& path = ep.path();
  const Pose2D& pose = ep.state().pose;
  auto dist = [&](double s) {
    return distance(path_pose(path, s).position(), pose.position());
  };
  const double S = ep.S();
  double a = S, b = S;
  const double step = 0.05;
  const double limit = S + 4.0 * lookahead + 2.0;
  while (dist(b) < lookahead && b < limit) {
    a = b;
    b += step;
  }
  for (int k = 0; k < 60 && b - a > 1e-9; ++k) {
    const double m = 0.5 * (a + b);
    (dist(m) < lookahead ? a : b) = m;
  }
  return to_body(pose, path_pose(path, b).position());
}

class PurePursuitActor {
 public:
  PurePursuitActor(PurePursuitConfig cfg, ReferenceSource source,
                   double lane_width)
      : cfg_(cfg), source_(source), lane_width_(lane_width) {}

  Action operator()(Episode& ep) {
    if (source_ == ReferenceSource::kGroundTruth) {
      last_ = pure_pursuit(path_goal(ep, cfg_.lookahead), cfg_.v_fixed,
                           cfg_.lookahead);
      return last_;
    }
    constexpr double kSpacing = 0.05;
    const auto n = static_cast<std::size_t>(std::ceil(cfg_.lookahead / kSpacing)) + 1;
    try {
      const auto wps = lane_fit_waypoints(ep.image(), ep.camera(), n, kSpacing,
                                          lane_width_);
      const Pose2D* goal = nullptr;
      for (const auto& w : wps) {
        if (std::hypot(w.x, w.y) <= cfg_.lookahead) goal = &w;
      }
      if (goal == nullptr) {
        ++fallbacks_;
        return last_;
      }
      last_ = pure_pursuit(goal->position(), cfg_.v_fixed, cfg_.lookahead);
    } catch (const InfeasibleError&) {
      ++fallbacks_;
    }
    return last_;
  }

  std::size_t fallbacks() const { return fallbacks_; }

 private:
  PurePursuitConfig cfg_;
  ReferenceSource source_;
  double lane_width_;
  BodyTwist last_{0.75, 0.0};
  std::size_t fallbacks_ = 0;
};

class NmpcActor {
 public:
  NmpcActor(MPCConfig cfg, double v_ref, ReferenceSource source,
            double lane_width, double max_lead = 1.0)
      : cfg_(cfg),
        v_ref_(v_ref),
        source_(source),
        lane_width_(lane_width),
        max_lead_(max_lead) {
    cfg_.validate();
  }

  Action operator()(Episode& ep) {
    std::vector<Pose2D> ref;
    const double spacing = v_ref_ * cfg_.dt;
    if (source_ == ReferenceSource::kGroundTruth) {
      // Reference advances in time, never behind the robot nor too far ahead.
      const double S = ep.S();
      s_ref_ = std::clamp(s_ref_, S, S + max_lead_);
      const Pose2D& pose = ep.state().pose;
      for (std::size_t k = 1; k <= cfg_.horizon; ++k) {
        const Pose2D p = path_pose(ep.path(), s_ref_ + spacing * static_cast<double>(k));
        const Vec2 b = to_body(pose, p.position());
        ref.push_back(make_pose(b.x, b.y, p.theta - pose.theta));
      }
      s_ref_ += v_ref_ * ep.config().dt;
    } else {
      try {
        ref = lane_fit_waypoints(ep.image(), ep.camera(), cfg_.horizon, spacing,
                                 lane_width_);
      } catch (const InfeasibleError&) {
        ++fallbacks_;
        return last_;
      }
    }
    const MpcResult r = nmpc_step(ref, cfg_, warm_);
    if (!r.feasible) {
      ++fallbacks_;
      warm_.clear();
      return last_;
    }
    warm_.assign(r.plan.begin() + 1, r.plan.end());
    warm_.push_back(r.plan.back());
    last_ = r.u0;
    return last_;
  }

  std::size_t fallbacks() const { return fallbacks_; }

 private:
  MPCConfig cfg_;
  double v_ref_;
  ReferenceSource source_;
  double lane_width_;
  double max_lead_;
  double s_ref_ = 0.0;
  std::vector<BodyTwist> warm_;
  BodyTwist last_{0.0, 0.0};
  std::size_t fallbacks_ = 0;
};

}  // namespace lanekeep

#endif  // LANEKEEP_CONTROLLERS_HPP_
