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

#ifndef LANEKEEP_ROBOT_HPP_
#define LANEKEEP_ROBOT_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "lanekeep/errors.hpp"
#include "lanekeep/geometry.hpp"

namespace lanekeep {

// Body-frame velocity: longitudinal speed and yaw rate.
struct BodyTwist {
  double v = 0.0;
  double omega = 0.0;
  friend bool operator==(const BodyTwist&, const BodyTwist&) = default;
};

struct WheelSpeeds {
  double left = 0.0;   // rad/s
  double right = 0.0;  // rad/s
  friend bool operator==(const WheelSpeeds&, const WheelSpeeds&) = default;
};

// Estimated wheel radius and track width of the skid-steer IK model.
struct IKParams {
  double r_hat = 0.165;
  double b_hat = 0.55;
};

// Fraction of the commanded motion actually realized.
struct SlipModel {
  double traversal_gain = 1.0;
  double omega_gain = 1.0;
};

struct RobotState {
  Pose2D pose;
  BodyTwist twist;
  WheelSpeeds wheel;
  double time = 0.0;
};

using Action = std::variant<BodyTwist, WheelSpeeds>;

enum class ActionSpace { kBodyTwist, kWheelSpeeds };

inline const char* to_string(ActionSpace s) {
  return s == ActionSpace::kBodyTwist ? "body_twist" : "wheel_speeds";
}

inline ActionSpace parse_action_space(const std::string& s) {
  if (s == "body_twist" || s == "ik") return ActionSpace::kBodyTwist;
  if (s == "wheel_speeds" || s == "e2e") return ActionSpace::kWheelSpeeds;
  throw DomainError("unknown action space: " + s);
}

inline constexpr double kVMin = 0.1;
inline constexpr double kVMax = 1.0;
inline constexpr double kOmegaMax = 0.5;

// v = r (phi_L + phi_R) / 2, omega = r (phi_R - phi_L) / b.
inline BodyTwist ik_wheel_to_body(const WheelSpeeds& w, const IKParams& p) {
  return {0.5 * p.r_hat * (w.left + w.right),
          p.r_hat * (w.right - w.left) / p.b_hat};
}

inline WheelSpeeds body_to_wheel(const BodyTwist& t, const IKParams& p) {
  const double half = 0.5 * t.omega * p.b_hat;
  return {(t.v - half) / p.r_hat, (t.v + half) / p.r_hat};
}

inline BodyTwist clamp_action(double raw_v, double raw_omega) {
  return {std::clamp(raw_v, kVMin, kVMax),
          std::clamp(raw_omega, -kOmegaMax, kOmegaMax)};
}

inline BodyTwist clamp_action(const BodyTwist& t) {
  return clamp_action(t.v, t.omega);
}

// Per-wheel bounds whose image under the IK map covers the body-twist box.
struct WheelBox {
  double lo = 0.0;
  double hi = 0.0;
};

inline WheelBox wheel_box(const IKParams& p) {
  return {(kVMin - 0.5 * kOmegaMax * p.b_hat) / p.r_hat,
          (kVMax + 0.5 * kOmegaMax * p.b_hat) / p.r_hat};
}

inline WheelSpeeds clamp_wheels(const WheelSpeeds& w, const IKParams& p) {
  const WheelBox box = wheel_box(p);
  return {std::clamp(w.left, box.lo, box.hi), std::clamp(w.right, box.lo, box.hi)};
}

inline BodyTwist action_to_twist(const Action& a, const IKParams& p) {
  if (const auto* t = std::get_if<BodyTwist>(&a)) return *t;
  return ik_wheel_to_body(std::get<WheelSpeeds>(a), p);
}

// Pose after moving with a constant body twist for dt (exact arc).
inline Pose2D integrate_twist(const Pose2D& pose, double v, double omega,
                              double dt) {
  if (std::abs(omega) > 1e-9) {
    const double th1 = pose.theta + omega * dt;
    const double radius = v / omega;
    return make_pose(pose.x + radius * (std::sin(th1) - std::sin(pose.theta)),
                     pose.y - radius * (std::cos(th1) - std::cos(pose.theta)),
                     th1);
  }
  return make_pose(pose.x + v * dt * std::cos(pose.theta),
                   pose.y + v * dt * std::sin(pose.theta),
                   pose.theta + omega * dt);
}

inline RobotState step_dynamics(const RobotState& state, const Action& action,
                                double dt, const SlipModel& slip,
                                const IKParams& p) {
  if (!(dt > 0.0)) throw DomainError("step_dynamics: dt must be > 0");
  const BodyTwist cmd = action_to_twist(action, p);
  if (!std::isfinite(cmd.v) || !std::isfinite(cmd.omega)) {
    throw DomainError("step_dynamics: non-finite action");
  }
  const BodyTwist eff{cmd.v * slip.traversal_gain, cmd.omega * slip.omega_gain};
  RobotState next;
  next.pose = integrate_twist(state.pose, eff.v, eff.omega, dt);
  next.twist = eff;
  next.wheel = body_to_wheel(eff, p);
  next.time = state.time + dt;
  return next;
}

}  // namespace lanekeep

#endif  // LANEKEEP_ROBOT_HPP_
