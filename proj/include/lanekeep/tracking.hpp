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

#ifndef LANEKEEP_TRACKING_HPP_
#define LANEKEEP_TRACKING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lanekeep/errors.hpp"
#include "lanekeep/geometry.hpp"
#include "lanekeep/rng.hpp"
#include "lanekeep/robot.hpp"
#include "lanekeep/sensor.hpp"
#include "lanekeep/track.hpp"

namespace lanekeep {

enum class DoneReason { kNone, kTranslation, kOrientation, kMaxSteps };

inline const char* to_string(DoneReason r) {
  switch (r) {
    case DoneReason::kNone: return "none";
    case DoneReason::kTranslation: return "translation";
    case DoneReason::kOrientation: return "orientation";
    case DoneReason::kMaxSteps: return "max_steps";
  }
  return "?";
}

inline DoneReason parse_done_reason(const std::string& s) {
  if (s == "none") return DoneReason::kNone;
  if (s == "translation") return DoneReason::kTranslation;
  if (s == "orientation") return DoneReason::kOrientation;
  if (s == "max_steps") return DoneReason::kMaxSteps;
  throw DomainError("unknown done reason: " + s);
}

struct RewardWeights {
  double v_desired = 0.75;
  double v_max = 1.0;
  double omega_max = 0.5;
  double e_x_cap = 1.0;
};

struct TerminationConfig {
  double e_x_limit = 1.0;
  double e_theta_limit = 0.1;
  std::size_t max_steps = 1000;
};

inline double arc_increment(const Pose2D& prev, const Pose2D& next) {
  return std::hypot(next.x - prev.x, next.y - prev.y);
}

struct WaypointPick {
  Pose2D ref;
  std::size_t index = 0;
};

// Nearest row by arc length, shifted forward by the look-ahead `alpha`.
// Closed loops wrap S over `loop_length` and the shifted index over the rows.
inline WaypointPick select_waypoint(const RefTable& table, double S,
                                    std::size_t alpha, double loop_length = 0.0) {
  if (loop_length > 0.0) {
    S = std::fmod(S, loop_length);
    if (S < 0.0) S += loop_length;
    std::size_t i = nearest_index(table, S);
    if (i + 1 == table.size() && loop_length - S < S - table[i].S) i = 0;
    i = (i + alpha) % table.size();
    return {table[i].pose(), i};
  }
  const std::size_t i =
      std::min(nearest_index(table, S) + alpha, table.size() - 1);
  return {table[i].pose(), i};
}

inline double position_error(const Pose2D& pose, const Pose2D& ref) {
  return std::hypot(pose.x - ref.x, pose.y - ref.y);
}

// 1 - q . q_ref for planar unit quaternions of the two headings.
inline double orientation_error(double theta, double theta_ref) {
  const double d = wrap_angle(theta - theta_ref);
  return 1.0 - std::cos(0.5 * d);
}

inline double velocity_error(double v, const RewardWeights& w) {
  return std::min(std::abs(v - w.v_desired) / w.v_max, 1.0);
}

namespace detail {
inline double sq_complement(double e) {
  const double c = 1.0 - std::clamp(e, 0.0, 1.0);
  return c * c;
}
}  // namespace detail

inline double step_reward(double e_x, double e_theta, double e_v,
                          const BodyTwist& action, const RewardWeights& w) {
  return detail::sq_complement(e_x / w.e_x_cap) +
         detail::sq_complement(e_theta) + detail::sq_complement(e_v) +
         detail::sq_complement(std::abs(action.v) / w.v_max) +
         detail::sq_complement(std::abs(action.omega) / w.omega_max);
}

inline DoneReason check_termination(double e_x, double e_theta, std::size_t t,
                                    const TerminationConfig& cfg) {
  if (e_x >= cfg.e_x_limit) return DoneReason::kTranslation;
  if (e_theta >= cfg.e_theta_limit) return DoneReason::kOrientation;
  if (t >= cfg.max_steps) return DoneReason::kMaxSteps;
  return DoneReason::kNone;
}

// Pose on the table at arc length S, linearly interpolated between rows.
inline Pose2D interpolate_pose(const RefTable& table, double S) {
  const auto& rows = table.rows;
  if (S <= rows.front().S) return rows.front().pose();
  if (S >= rows.back().S) return rows.back().pose();
  auto it = std::upper_bound(rows.begin(), rows.end(), S,
                             [](double v, const RefRow& r) { return v < r.S; });
  const RefRow& b = *it;
  const RefRow& a = *(it - 1);
  const double f = (S - a.S) / (b.S - a.S);
  return make_pose(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y),
                   a.theta + f * wrap_angle(b.theta - a.theta));
}

// Distance from `pose` to the nearest table row within `window` rows of
// `hint` (whole table when window == 0).
inline double lateral_offset(const RefTable& table, const Pose2D& pose,
                             std::size_t hint = 0, std::size_t window = 0) {
  std::size_t lo = 0, hi = table.size();
  if (window > 0) {
    lo = hint > window ? hint - window : 0;
    hi = std::min(table.size(), hint + window + 1);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = lo; i < hi; ++i) {
    best = std::min(best, std::hypot(pose.x - table[i].x, pose.y - table[i].y));
  }
  return best;
}

// Track, reference tables at the working spacing, and the marker renderer.
struct Scene {
  std::shared_ptr<const TrackSpec> track;
  std::vector<RefTable> tables;
  std::shared_ptr<const Renderer> renderer;

  const std::vector<ArcPath>& paths() const { return track->paths; }
};

inline Scene make_scene(std::shared_ptr<const TrackSpec> track, double ds,
                        const CameraModel& cam, MarkerKind kind) {
  Scene s;
  s.tables = ds == track->params.ds ? track->ref_tables : sample_all(track->paths, ds);
  s.renderer = std::make_shared<Renderer>(*track, cam, kind);
  s.track = std::move(track);
  return s;
}

struct EpisodeConfig {
  double dt = 0.05;
  IKParams ik;
  SlipModel slip;
  RewardWeights weights;
  TerminationConfig termination;
  std::size_t alpha = 0;
  int table_index = -1;  // negative: drawn from the episode seed
  std::size_t feature_dim = 64;
  double source_hz = 20.0;
  double control_hz = 20.0;
  double blur_sigma = 0.0;
  std::vector<MissingSpan> missing;
  std::optional<Pose2D> initial_pose;  // defaults to the first table row
};

struct EpisodeStatus {
  std::size_t t = 0;
  double S = 0.0;
  std::size_t table_index = 0;
  Pose2D last_pose;
  bool done = false;
  DoneReason done_reason = DoneReason::kNone;
};

struct StepInfo {
  double reward = 0.0;
  bool terminated = false;  // translation / orientation limit
  bool truncated = false;   // step budget exhausted
  DoneReason done_reason = DoneReason::kNone;
  double e_x = 0.0;
  double e_theta = 0.0;
  double e_v = 0.0;
  double S = 0.0;
  std::size_t i_star = 0;
  BodyTwist action;  // body-frame command after clamping
};

class Episode;

struct RewardInputs {
  double e_x;
  double e_theta;
  double e_v;
  BodyTwist action;
  const RewardWeights& weights;
  Episode& episode;
};

using RewardFn = std::function<double(const RewardInputs&)>;

inline RewardFn waypoint_reward() {
  return [](const RewardInputs& in) {
    return step_reward(in.e_x, in.e_theta, in.e_v, in.action, in.weights);
  };
}

// One run of the waypoint-selection routine: reset places the robot on the
// first row of a randomly drawn reference table; each step simulates the
// action, accumulates chord arc length, picks the reference row, and scores
// the tracking errors.
class Episode {
 public:
  Episode(const Scene& scene, EpisodeConfig cfg, RewardFn reward)
      : scene_(&scene), cfg_(std::move(cfg)), reward_(std::move(reward)) {
    if (scene.tables.empty()) throw DomainError("Episode: scene has no tables");
    hold_ratio_ = static_cast<std::size_t>(
        frame_hold_ratio(cfg_.source_hz, cfg_.control_hz));
    if (!(cfg_.blur_sigma >= 0.0)) throw DomainError("Episode: blur_sigma < 0");
  }

  void reset(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t j = scene_->tables.size();
    std::size_t k = rng.below(j);
    if (cfg_.table_index >= 0) {
      k = static_cast<std::size_t>(cfg_.table_index);
      if (k >= j) throw DomainError("Episode: table_index out of range");
    }
    status_ = EpisodeStatus{};
    status_.table_index = k;
    table_ = &scene_->tables[k];
    state_ = RobotState{};
    state_.pose = cfg_.initial_pose ? *cfg_.initial_pose : (*table_)[0].pose();
    status_.last_pose = state_.pose;
    fresh_pose_ = state_.pose;
    image_valid_ = false;
    features_valid_ = false;
    started_ = true;
  }

  StepInfo step(const Action& action) {
    if (!started_) throw DomainError("Episode: step before reset");
    if (status_.done) throw DomainError("Episode: step after done");
    BodyTwist cmd;
    if (const auto* w = std::get_if<WheelSpeeds>(&action)) {
      cmd = clamp_action(ik_wheel_to_body(clamp_wheels(*w, cfg_.ik), cfg_.ik));
    } else {
      cmd = clamp_action(std::get<BodyTwist>(action));
    }
    const Pose2D prev = state_.pose;
    state_ = step_dynamics(state_, cmd, cfg_.dt, cfg_.slip, cfg_.ik);
    status_.S += arc_increment(prev, state_.pose);
    status_.last_pose = state_.pose;
    status_.t += 1;
    if (status_.t % hold_ratio_ == 0) {
      fresh_pose_ = state_.pose;
      image_valid_ = false;
      features_valid_ = false;
    }

    StepInfo info;
    info.action = cmd;
    info.S = status_.S;
    const ArcPath& p = path();
    const WaypointPick pick = select_waypoint(
        *table_, status_.S, cfg_.alpha, p.closed ? p.total_length() : 0.0);
    info.i_star = pick.index;
    info.e_x = position_error(state_.pose, pick.ref);
    info.e_theta = orientation_error(state_.pose.theta, pick.ref.theta);
    info.e_v = velocity_error(state_.twist.v, cfg_.weights);
    info.reward = reward_(RewardInputs{info.e_x, info.e_theta, info.e_v, cmd,
                                       cfg_.weights, *this});
    info.done_reason =
        check_termination(info.e_x, info.e_theta, status_.t, cfg_.termination);
    info.truncated = info.done_reason == DoneReason::kMaxSteps;
    info.terminated = info.done_reason == DoneReason::kTranslation ||
                      info.done_reason == DoneReason::kOrientation;
    status_.done = info.done_reason != DoneReason::kNone;
    status_.done_reason = info.done_reason;
    return info;
  }

  // Camera frame visible to the controller at the current step; with a slow
  // source it is the frame captured at the last fresh step.
  const BinaryImage& image() {
    if (!image_valid_) {
      scene_->renderer->render_into(fresh_pose_, image_, cfg_.missing);
      if (cfg_.blur_sigma > 0.0) {
        image_ = Renderer::gaussian_blur_threshold(image_, cfg_.blur_sigma);
      }
      image_valid_ = true;
    }
    return image_;
  }

  const FeatureVec& features() {
    if (!features_valid_) {
      features_ = distill(image(), cfg_.feature_dim);
      features_valid_ = true;
    }
    return features_;
  }

  const RobotState& state() const { return state_; }
  const EpisodeStatus& status() const { return status_; }
  double S() const { return status_.S; }
  bool done() const { return status_.done; }
  const RefTable& table() const { return *table_; }
  const ArcPath& path() const { return scene_->paths()[status_.table_index]; }
  const Scene& scene() const { return *scene_; }
  const EpisodeConfig& config() const { return cfg_; }
  const CameraModel& camera() const { return scene_->renderer->camera(); }

 private:
  const Scene* scene_;
  EpisodeConfig cfg_;
  RewardFn reward_;
  std::size_t hold_ratio_ = 1;
  bool started_ = false;
  const RefTable* table_ = nullptr;
  RobotState state_;
  EpisodeStatus status_;
  Pose2D fresh_pose_;
  BinaryImage image_;
  bool image_valid_ = false;
  FeatureVec features_;
  bool features_valid_ = false;
};

using Actor = std::function<Action(Episode&)>;
using ActorFactory = std::function<Actor()>;

struct StepRecord {
  std::size_t t = 0;
  Pose2D pose;
  BodyTwist twist;   // realized
  BodyTwist action;  // commanded
  double S = 0.0;
  std::size_t i_star = 0;
  double e_x = 0.0;
  double e_theta = 0.0;
  double e_v = 0.0;
  double reward = 0.0;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::size_t table_index = 0;
  std::vector<StepRecord> steps;
  DoneReason done_reason = DoneReason::kNone;

  double episode_return() const {
    double r = 0.0;
    for (const auto& s : steps) r += s.reward;
    return r;
  }
  double final_S() const { return steps.empty() ? 0.0 : steps.back().S; }
};

inline EpisodeRecord run_episode(const Scene& scene, const EpisodeConfig& cfg,
                                 const RewardFn& reward, Actor actor,
                                 std::uint64_t seed) {
  Episode ep(scene, cfg, reward);
  ep.reset(seed);
  EpisodeRecord rec;
  rec.seed = seed;
  rec.table_index = ep.status().table_index;
  rec.steps.reserve(cfg.termination.max_steps);
  while (!ep.done()) {
    const Action a = actor(ep);
    const StepInfo info = ep.step(a);
    const RobotState& st = ep.state();
    rec.steps.push_back({ep.status().t, st.pose, st.twist, info.action, info.S,
                         info.i_star, info.e_x, info.e_theta, info.e_v,
                         info.reward});
    rec.done_reason = info.done_reason;
  }
  return rec;
}

namespace detail {
inline double path_arc(const ArcPath& path, double S) {
  const double total = path.total_length();
  if (path.closed) {
    S = std::fmod(S, total);
    return S < 0.0 ? S + total : S;
  }
  return std::clamp(S, 0.0, total);
}
}  // namespace detail

// Path pose at arc length S; closed paths wrap, open paths clamp.
inline Pose2D path_pose(const ArcPath& path, double S) {
  return path.pose_at(detail::path_arc(path, S));
}

inline double signed_curvature(const ArcPath& path, double S) {
  const auto [k, s] = path.locate(detail::path_arc(path, S));
  return path.segments[k].curvature_at(s);
}

// Ground-truth follower: curvature feed-forward along the continuous path
// plus light lateral and heading feedback, slowing wherever the yaw-rate
// limit would otherwise be exceeded within the next second of travel.
class OracleFollower {
 public:
  explicit OracleFollower(double v_desired, double yaw_margin = 0.9)
      : v_desired_(v_desired), yaw_margin_(yaw_margin) {}

  Action operator()(Episode& ep) const {
    const ArcPath& path = ep.path();
    const double S = ep.S();
    double kappa_max = 0.0;
    for (int i = 0; i <= 10; ++i) {
      kappa_max = std::max(kappa_max,
                           std::abs(signed_curvature(path, S + 0.1 * i * v_desired_)));
    }
    double v = v_desired_;
    if (kappa_max * v > yaw_margin_ * kOmegaMax) {
      v = yaw_margin_ * kOmegaMax / kappa_max;
    }
    v = std::clamp(v, kVMin, kVMax);
    const Pose2D& pose = ep.state().pose;
    const Pose2D ref = path_pose(path, S);
    const double e_y = to_body(pose, ref.position()).y;
    const double e_th = wrap_angle(ref.theta - pose.theta);
    const double kappa = signed_curvature(path, S + 0.5 * v * ep.config().dt);
    return BodyTwist{v, v * kappa + 4.0 * e_y + 2.0 * e_th};
  }

 private:
  double v_desired_;
  double yaw_margin_;
};

inline void write_episode_csv(std::ostream& out, const EpisodeRecord& rec) {
  out << "t,x,y,theta,v,omega,a_v,a_omega,S,i_star,e_x,e_theta,e_V,reward\n";
  char buf[512];
  for (const auto& s : rec.steps) {
    std::snprintf(buf, sizeof(buf),
                  "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%.9g,%.9g,%.9g,%.9g\n",
                  s.t, s.pose.x, s.pose.y, s.pose.theta, s.twist.v, s.twist.omega,
                  s.action.v, s.action.omega, s.S, s.i_star, s.e_x, s.e_theta,
                  s.e_v, s.reward);
    out << buf;
  }
  out << "# done_reason=" << to_string(rec.done_reason) << "\n";
}

}  // namespace lanekeep

#endif  // LANEKEEP_TRACKING_HPP_
