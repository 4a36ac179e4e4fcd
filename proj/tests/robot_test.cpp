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

#include <gtest/gtest.h>

#include "lanekeep/errors.hpp"
#include "lanekeep/robot.hpp"

namespace lanekeep {
namespace {

const IKParams kIk{};

TEST(InverseKinematics, ForwardExamples) {
  const BodyTwist t = ik_wheel_to_body({2.0, 2.0}, kIk);
  EXPECT_NEAR(t.v, 0.33, 1e-12);
  EXPECT_EQ(t.omega, 0.0);
  const BodyTwist spin = ik_wheel_to_body({-1.5, 1.5}, kIk);
  EXPECT_EQ(spin.v, 0.0);
  EXPECT_GT(spin.omega, 0.0);
  EXPECT_EQ(ik_wheel_to_body({0, 0}, kIk), (BodyTwist{0, 0}));
}

TEST(InverseKinematics, InverseExamples) {
  const WheelSpeeds w = body_to_wheel({0.33, 0.0}, kIk);
  EXPECT_NEAR(w.left, 2.0, 1e-12);
  EXPECT_NEAR(w.right, 2.0, 1e-12);
  EXPECT_EQ(body_to_wheel({0, 0}, kIk), (WheelSpeeds{0, 0}));
}

TEST(InverseKinematics, RoundTripAndLinearity) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const BodyTwist t{u(gen), u(gen)};
    const BodyTwist back = ik_wheel_to_body(body_to_wheel(t, kIk), kIk);
    ASSERT_NEAR(back.v, t.v, 1e-12);
    ASSERT_NEAR(back.omega, t.omega, 1e-12);

    const WheelSpeeds w1{u(gen), u(gen)}, w2{u(gen), u(gen)};
    const double a = u(gen), b = u(gen);
    const BodyTwist lhs =
        ik_wheel_to_body({a * w1.left + b * w2.left, a * w1.right + b * w2.right}, kIk);
    const BodyTwist f1 = ik_wheel_to_body(w1, kIk), f2 = ik_wheel_to_body(w2, kIk);
    ASSERT_NEAR(lhs.v, a * f1.v + b * f2.v, 1e-12);
    ASSERT_NEAR(lhs.omega, a * f1.omega + b * f2.omega, 1e-12);
  }
}

TEST(ClampAction, Boxes) {
  EXPECT_EQ(clamp_action(0.5, 0.2), (BodyTwist{0.5, 0.2}));
  EXPECT_EQ(clamp_action(0.0, 0.9), (BodyTwist{0.1, 0.5}));
  EXPECT_EQ(clamp_action(2.0, -3.0), (BodyTwist{1.0, -0.5}));
}

TEST(ClampAction, IdempotentProjection) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const BodyTwist c = clamp_action(u(gen), u(gen));
    ASSERT_GE(c.v, kVMin);
    ASSERT_LE(c.v, kVMax);
    ASSERT_LE(std::abs(c.omega), kOmegaMax);
    ASSERT_EQ(clamp_action(c), c);
  }
}

TEST(WheelBox, CornersMapIntoTwistBox) {
  const WheelBox box = wheel_box(kIk);
  const BodyTwist lo_hi = ik_wheel_to_body({box.lo, box.hi}, kIk);
  EXPECT_GT(lo_hi.v, kVMin);
  const WheelSpeeds clamped = clamp_wheels({-100.0, 100.0}, kIk);
  EXPECT_EQ(clamped.left, box.lo);
  EXPECT_EQ(clamped.right, box.hi);
  const WheelSpeeds full = body_to_wheel({kVMax, kOmegaMax}, kIk);
  EXPECT_NEAR(full.right, box.hi, 1e-12);
}

RobotState origin() { return RobotState{}; }

TEST(StepDynamics, Examples) {
  const RobotState s1 = step_dynamics(origin(), BodyTwist{1.0, 0.0}, 0.05, {}, kIk);
  EXPECT_NEAR(s1.pose.x, 0.05, 1e-15);
  EXPECT_EQ(s1.pose.y, 0.0);
  EXPECT_EQ(s1.pose.theta, 0.0);
  EXPECT_NEAR(s1.time, 0.05, 1e-15);

  const RobotState s2 = step_dynamics(origin(), BodyTwist{0.0, 0.5}, 1.0, {}, kIk);
  EXPECT_EQ(s2.pose.x, 0.0);
  EXPECT_EQ(s2.pose.y, 0.0);
  EXPECT_NEAR(s2.pose.theta, 0.5, 1e-15);

  const RobotState s3 = step_dynamics(origin(), BodyTwist{1.0, 1.0}, kPi / 2, {}, kIk);
  EXPECT_NEAR(s3.pose.x, 1.0, 1e-9);
  EXPECT_NEAR(s3.pose.y, 1.0, 1e-9);
  EXPECT_NEAR(s3.pose.theta, kPi / 2, 1e-9);
}

TEST(StepDynamics, Errors) {
  EXPECT_THROW(step_dynamics(origin(), BodyTwist{1, 0}, 0.0, {}, kIk), DomainError);
  EXPECT_THROW(step_dynamics(origin(), BodyTwist{NAN, 0}, 0.05, {}, kIk), DomainError);
  EXPECT_THROW(step_dynamics(origin(), WheelSpeeds{INFINITY, 0}, 0.05, {}, kIk),
               DomainError);
}

TEST(StepDynamics, WheelActionsUseIk) {
  const RobotState a = step_dynamics(origin(), WheelSpeeds{2.0, 2.5}, 0.05, {}, kIk);
  const RobotState b = step_dynamics(
      origin(), ik_wheel_to_body({2.0, 2.5}, kIk), 0.05, {}, kIk);
  EXPECT_EQ(a.pose.x, b.pose.x);
  EXPECT_EQ(a.pose.y, b.pose.y);
  EXPECT_EQ(a.pose.theta, b.pose.theta);
}

TEST(StepDynamics, HalfStepsCompose) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> v(0.0, 1.0), w(-0.5, 0.5), dt(0.01, 1.0);
  for (int i = 0; i < 1000; ++i) {
    RobotState s;
    s.pose = make_pose(v(gen), w(gen), 4 * w(gen));
    const BodyTwist a{v(gen), i % 10 == 0 ? 0.0 : w(gen)};
    const double h = dt(gen);
    const RobotState one = step_dynamics(s, a, h, {}, kIk);
    const RobotState two =
        step_dynamics(step_dynamics(s, a, h / 2, {}, kIk), a, h / 2, {}, kIk);
    ASSERT_NEAR(one.pose.x, two.pose.x, 1e-9);
    ASSERT_NEAR(one.pose.y, two.pose.y, 1e-9);
    ASSERT_NEAR(wrap_angle(one.pose.theta - two.pose.theta), 0.0, 1e-9);
  }
}

TEST(StepDynamics, SlipScalesArcLengthAndKeepsWheelConsistent) {
  const SlipModel slip{0.8, 0.9};
  const RobotState s = step_dynamics(origin(), BodyTwist{0.5, 0.0}, 0.2, slip, kIk);
  EXPECT_DOUBLE_EQ(std::hypot(s.pose.x, s.pose.y), 0.8 * 0.5 * 0.2);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RobotState state;
  for (int i = 0; i < 200; ++i) {
    state = step_dynamics(state, BodyTwist{u(gen), u(gen)}, 0.05, slip, kIk);
    const BodyTwist back = ik_wheel_to_body(state.wheel, kIk);
    ASSERT_NEAR(back.v, state.twist.v, 1e-9);
    ASSERT_NEAR(back.omega, state.twist.omega, 1e-9);
    ASSERT_GT(state.pose.theta, -kPi);
    ASSERT_LE(state.pose.theta, kPi);
  }
}

TEST(ActionSpace, Parse) {
  EXPECT_EQ(parse_action_space("ik"), ActionSpace::kBodyTwist);
  EXPECT_EQ(parse_action_space("e2e"), ActionSpace::kWheelSpeeds);
  EXPECT_EQ(parse_action_space(to_string(ActionSpace::kWheelSpeeds)),
            ActionSpace::kWheelSpeeds);
  EXPECT_THROW(parse_action_space("x"), DomainError);
}

}  // namespace
}  // namespace lanekeep
