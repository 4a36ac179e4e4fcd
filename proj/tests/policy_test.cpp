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
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lanekeep/controllers.hpp"
#include "lanekeep/policy.hpp"

namespace lanekeep {
namespace {

const Scene& corridor() {
  static const auto track = [] {
    TrackParams p;
    p.shape = TrackShape::kStraight;
    p.scale = 60.0;
    p.n = 60;
    p.j = 2;
    return std::make_shared<const TrackSpec>(make_track(p));
  }();
  static const Scene scene =
      make_scene(track, track->params.ds, CameraModel{}, default_marker(MarkerType::kCone));
  return scene;
}

const Scene& figure_eight() {
  static const auto track = std::make_shared<const TrackSpec>(make_track(TrackParams{}));
  static const Scene scene =
      make_scene(track, track->params.ds, CameraModel{}, default_marker(MarkerType::kCone));
  return scene;
}

TEST(PolicyAct, Examples) {
  LinearPolicy p = LinearPolicy::zeros(64, ActionSpace::kBodyTwist);
  const FeatureVec f(64, 0.3);
  EXPECT_EQ(std::get<BodyTwist>(policy_act(f, p)), (BodyTwist{0.1, 0.0}));
  p.weights[3] = 5.0;
  p.bias = {0.4, -0.2};
  EXPECT_EQ(std::get<BodyTwist>(policy_act(FeatureVec(64, 0.0), p)), (BodyTwist{0.4, -0.2}));
  EXPECT_THROW(policy_act(FeatureVec(32, 0.0), p), DomainError);
}

TEST(PolicyAct, OutputsStayInBoxes) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> w(0.0, 5.0);
  std::uniform_real_distribution<double> f(0.0, 1.0);
  for (ActionSpace s : {ActionSpace::kBodyTwist, ActionSpace::kWheelSpeeds}) {
    LinearPolicy p = LinearPolicy::zeros(16, s);
    const WheelBox box = wheel_box(p.ik);
    for (int t = 0; t < 2000; ++t) {
      std::vector<double> theta(p.num_params());
      for (double& v : theta) v = w(gen);
      p.set_params(theta);
      FeatureVec x(16);
      for (double& v : x) v = f(gen);
      const Action a = policy_act(x, p);
      if (s == ActionSpace::kBodyTwist) {
        const auto b = std::get<BodyTwist>(a);
        ASSERT_EQ(clamp_action(b), b);
      } else {
        const auto ws = std::get<WheelSpeeds>(a);
        ASSERT_GE(ws.left, box.lo);
        ASSERT_LE(ws.left, box.hi);
        ASSERT_GE(ws.right, box.lo);
        ASSERT_LE(ws.right, box.hi);
      }
    }
  }
}

TEST(LinearPolicy, ParamsRoundTrip) {
  LinearPolicy p = LinearPolicy::zeros(16, ActionSpace::kBodyTwist);
  std::vector<double> theta(p.num_params());
  std::iota(theta.begin(), theta.end(), 1.0);
  p.set_params(theta);
  EXPECT_EQ(p.params(), theta);
  EXPECT_EQ(p.bias[1], 34.0);
  EXPECT_THROW(p.set_params({1.0}), DomainError);
}

TEST(PolicyCsv, RoundTripAndErrors) {
  LinearPolicy p = LinearPolicy::zeros(16, ActionSpace::kWheelSpeeds);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> theta(p.num_params());
  for (double& v : theta) v = n(gen);
  p.set_params(theta);
  std::stringstream ss;
  write_policy_csv(ss, p);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "16,wheel_speeds");
  const LinearPolicy q = read_policy_csv(ss);
  EXPECT_EQ(q.params(), p.params());
  EXPECT_EQ(q.action_space, ActionSpace::kWheelSpeeds);

  for (const char* bad : {"", "16\n", "16,warp\n", "2,body_twist\n1,2\n",
                          "2,body_twist\n1,2\n3,x\n0,0\n",
                          "2,body_twist\n1,2\n3,4\n0\n"}) {
    std::stringstream in(bad);
    EXPECT_THROW(read_policy_csv(in), ConfigError) << bad;
  }
}

TEST(EvaluateCandidate, OracleNearMaximumAndZeroPositive) {
  TrainEnv env{&figure_eight(), EpisodeConfig{}, RewardMode::kWaypoint};
  env.episode.weights.v_desired = 0.1;
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const auto oracle = [] { return Actor(OracleFollower(0.1)); };
  double steps = 0.0;
  for (const auto& r : run_episodes(env, oracle, seeds)) steps += r.steps.size();
  steps /= seeds.size();
  EXPECT_GE(evaluate_actor(env, oracle, seeds), 0.9 * 5.0 * steps);

  const LinearPolicy zero = LinearPolicy::zeros(64, ActionSpace::kBodyTwist);
  const double r0 = evaluate_candidate(zero.params(), env, ActionSpace::kBodyTwist, seeds);
  EXPECT_GT(r0, 0.0);
  EXPECT_EQ(r0, evaluate_candidate(zero.params(), env, ActionSpace::kBodyTwist, seeds));
  EXPECT_THROW(evaluate_actor(env, oracle, {}), DomainError);
}

TEST(RewardModes, ShareEpisodeMechanics) {
  EpisodeConfig cfg;
  cfg.termination.max_steps = 200;
  const TrainEnv wpg{&figure_eight(), cfg, RewardMode::kWaypoint};
  const TrainEnv icg{&figure_eight(), cfg, RewardMode::kCentroid};
  const auto factory = [] {
    return Actor([](Episode& ep) {
      return Action{BodyTwist{0.5, 0.2 * std::sin(0.1 * ep.status().t)}};
    });
  };
  const auto a = run_episodes(wpg, factory, {5})[0];
  const auto b = run_episodes(icg, factory, {5})[0];
  ASSERT_EQ(a.steps.size(), b.steps.size());
  bool reward_differs = false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    ASSERT_EQ(a.steps[i].pose, b.steps[i].pose);
    ASSERT_EQ(a.steps[i].S, b.steps[i].S);
    ASSERT_EQ(a.steps[i].e_x, b.steps[i].e_x);
    ASSERT_LE(b.steps[i].reward, 4.0);
    reward_differs |= a.steps[i].reward != b.steps[i].reward;
  }
  EXPECT_TRUE(reward_differs);
}

TEST(CemTrain, ZeroIterationsReturnsInitialMean) {
  TrainEnv env{&corridor(), EpisodeConfig{}, RewardMode::kWaypoint};
  CEMConfig cfg;
  cfg.iterations = 0;
  const TrainResult r = cem_train(env, ActionSpace::kBodyTwist, cfg);
  EXPECT_TRUE(r.curve.empty());
  for (double v : r.policy.params()) EXPECT_EQ(v, 0.0);
  cfg.elite_fraction = 1.0;
  EXPECT_THROW(cem_train(env, ActionSpace::kBodyTwist, cfg), DomainError);
}

TEST(CemTrain, DeterministicAcrossJobCounts) {
  EpisodeConfig ec;
  ec.termination.max_steps = 60;
  TrainEnv env{&corridor(), ec, RewardMode::kWaypoint};
  CEMConfig cfg;
  cfg.population = 12;
  cfg.iterations = 3;
  cfg.episodes_per_candidate = 2;
  const TrainResult a = cem_train(env, ActionSpace::kBodyTwist, cfg);
  const TrainResult b = cem_train(env, ActionSpace::kBodyTwist, cfg);
  cfg.jobs = 3;
  const TrainResult c = cem_train(env, ActionSpace::kBodyTwist, cfg);
  ASSERT_EQ(a.curve.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.curve[i].elite_mean, b.curve[i].elite_mean);
    EXPECT_EQ(a.curve[i].elite_mean, c.curve[i].elite_mean);
    EXPECT_EQ(a.curve[i].population_mean, c.curve[i].population_mean);
  }
  EXPECT_EQ(a.policy.params(), c.policy.params());
  std::ostringstream ca, cb;
  write_curve_csv(ca, a.curve);
  write_curve_csv(cb, b.curve);
  EXPECT_EQ(ca.str(), cb.str());
}

TEST(CemTrain, LearnsOnCorridor) {
  EpisodeConfig ec;
  ec.termination.max_steps = 200;
  TrainEnv env{&corridor(), ec, RewardMode::kWaypoint};
  CEMConfig cfg;
  cfg.population = 64;
  cfg.iterations = 50;
  cfg.episodes_per_candidate = 1;
  const TrainResult r = cem_train(env, ActionSpace::kBodyTwist, cfg);
  ASSERT_EQ(r.curve.size(), 50u);
  EXPECT_GT(r.curve.back().elite_mean, r.curve.front().elite_mean);
  std::size_t non_decreasing = 0;
  for (std::size_t i = 1; i < r.curve.size(); ++i) {
    // Plateau noise from fresh episode seeds is allowed up to 1%.
    non_decreasing += r.curve[i].elite_mean >= 0.99 * r.curve[i - 1].elite_mean;
  }
  EXPECT_GE(non_decreasing, 44u);
}

TEST(ParallelFor, PropagatesExceptions) {
  std::vector<int> hit(20, 0);
  parallel_for(20, 4, [&](std::size_t i) { hit[i] = 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(20, 4,
                            [](std::size_t i) {
                              if (i == 7) throw DomainError("boom");
                            }),
               DomainError);
}

}  // namespace
}  // namespace lanekeep
