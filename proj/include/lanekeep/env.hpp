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

#ifndef LANEKEEP_ENV_HPP_
#define LANEKEEP_ENV_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lanekeep/controllers.hpp"
#include "lanekeep/errors.hpp"
#include "lanekeep/robot.hpp"
#include "lanekeep/sensor.hpp"
#include "lanekeep/tracking.hpp"

namespace lanekeep {

inline constexpr const char* kEnvAbiVersion = "lanekeep-env/1";

struct EnvStep {
  FeatureVec observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  std::map<std::string, double> info;  // e_x, e_theta, e_V, S, i_star
  std::string done_reason = "none";
};

// Step/reset surface over one episode, for external training loops. Actions
// are two floats read in the handle's action space.
class EnvHandle {
 public:
  EnvHandle(std::shared_ptr<const Scene> scene, EpisodeConfig cfg, RewardMode mode,
            ActionSpace space)
      : scene_(std::move(scene)),
        space_(space),
        episode_(*scene_, std::move(cfg), make_reward(mode)) {}

  static const char* abi_version() { return kEnvAbiVersion; }

  std::size_t observation_size() const { return episode_.config().feature_dim; }
  ActionSpace action_space() const { return space_; }

  std::array<double, 2> action_low() const {
    if (space_ == ActionSpace::kWheelSpeeds) {
      const WheelBox b = wheel_box(episode_.config().ik);
      return {b.lo, b.lo};
    }
    return {kVMin, -kOmegaMax};
  }

  std::array<double, 2> action_high() const {
    if (space_ == ActionSpace::kWheelSpeeds) {
      const WheelBox b = wheel_box(episode_.config().ik);
      return {b.hi, b.hi};
    }
    return {kVMax, kOmegaMax};
  }

  FeatureVec reset(std::uint64_t seed) {
    episode_.reset(seed);
    active_ = true;
    return episode_.features();
  }

  EnvStep step(const std::array<double, 2>& a) {
    if (!active_) throw DomainError("EnvHandle: step without an active episode");
    const Action action = space_ == ActionSpace::kWheelSpeeds
                              ? Action(WheelSpeeds{a[0], a[1]})
                              : Action(BodyTwist{a[0], a[1]});
    const StepInfo s = episode_.step(action);
    EnvStep out;
    out.reward = s.reward;
    out.terminated = s.terminated;
    out.truncated = s.truncated;
    out.done_reason = to_string(s.done_reason);
    out.info = {{"e_x", s.e_x},
                {"e_theta", s.e_theta},
                {"e_V", s.e_v},
                {"S", s.S},
                {"i_star", static_cast<double>(s.i_star)}};
    out.observation = episode_.features();
    if (episode_.done()) active_ = false;
    return out;
  }

  // Current camera frame as binary PGM bytes.
  std::string debug_pgm() {
    std::ostringstream os;
    write_pgm(os, episode_.image());
    return os.str();
  }

  const Episode& episode() const { return episode_; }

 private:
  std::shared_ptr<const Scene> scene_;
  ActionSpace space_;
  Episode episode_;
  bool active_ = false;
};

}  // namespace lanekeep

#endif  // LANEKEEP_ENV_HPP_
