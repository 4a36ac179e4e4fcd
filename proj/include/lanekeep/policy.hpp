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

#ifndef LANEKEEP_POLICY_HPP_
#define LANEKEEP_POLICY_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lanekeep/controllers.hpp"
#include "lanekeep/errors.hpp"
#include "lanekeep/rng.hpp"
#include "lanekeep/robot.hpp"
#include "lanekeep/sensor.hpp"
#include "lanekeep/tracking.hpp"

namespace lanekeep {

struct LinearPolicy {
  std::size_t feature_dim = 64;
  ActionSpace action_space = ActionSpace::kBodyTwist;
  std::vector<double> weights;  // 2 x d, row-major
  std::array<double, 2> bias{0.0, 0.0};
  IKParams ik;

  static LinearPolicy zeros(std::size_t d, ActionSpace space) {
    LinearPolicy p;
    p.feature_dim = d;
    p.action_space = space;
    p.weights.assign(2 * d, 0.0);
    return p;
  }

  std::size_t num_params() const { return 2 * feature_dim + 2; }

  std::vector<double> params() const {
    std::vector<double> out(weights);
    out.push_back(bias[0]);
    out.push_back(bias[1]);
    return out;
  }

  void set_params(const std::vector<double>& theta) {
    if (theta.size() != num_params()) {
      throw DomainError("LinearPolicy: parameter count mismatch");
    }
    weights.assign(theta.begin(), theta.end() - 2);
    bias = {theta[theta.size() - 2], theta[theta.size() - 1]};
  }
};

inline Action policy_act(const FeatureVec& features, const LinearPolicy& p) {
  const std::size_t d = p.feature_dim;
  if (features.size() != d) throw DomainError("policy_act: feature size mismatch");
  if (p.weights.size() != 2 * d) throw DomainError("policy_act: bad weight shape");
  double a0 = p.bias[0], a1 = p.bias[1];
  const double* w0 = p.weights.data();
  const double* w1 = w0 + d;
  for (std::size_t i = 0; i < d; ++i) {
    a0 += w0[i] * features[i];
    a1 += w1[i] * features[i];
  }
  if (p.action_space == ActionSpace::kWheelSpeeds) {
    return clamp_wheels(WheelSpeeds{a0, a1}, p.ik);
  }
  return clamp_action(a0, a1);
}

inline Actor policy_actor(const LinearPolicy& p) {
  return [p](Episode& ep) { return policy_act(ep.features(), p); };
}

// Everything an episode needs apart from the actor.
struct TrainEnv {
  const Scene* scene = nullptr;
  EpisodeConfig episode;
  RewardMode reward_mode = RewardMode::kWaypoint;
};

inline std::vector<EpisodeRecord> run_episodes(const TrainEnv& env,
                                               const ActorFactory& factory,
                                               const std::vector<std::uint64_t>& seeds) {
  const RewardFn reward = make_reward(env.reward_mode);
  std::vector<EpisodeRecord> out;
  out.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    out.push_back(run_episode(*env.scene, env.episode, reward, factory(), s));
  }
  return out;
}

inline double evaluate_actor(const TrainEnv& env, const ActorFactory& factory,
                             const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw DomainError("evaluate_actor: no seeds");
  double total = 0.0;
  for (const auto& rec : run_episodes(env, factory, seeds)) {
    total += rec.episode_return();
  }
  return total / static_cast<double>(seeds.size());
}

inline double evaluate_candidate(const std::vector<double>& params,
                                 const TrainEnv& env, ActionSpace space,
                                 const std::vector<std::uint64_t>& seeds) {
  LinearPolicy p = LinearPolicy::zeros(env.episode.feature_dim, space);
  p.ik = env.episode.ik;
  p.set_params(params);
  return evaluate_actor(env, [&p] { return policy_actor(p); }, seeds);
}

struct CEMConfig {
  std::size_t population = 64;
  double elite_fraction = 0.25;
  std::size_t iterations = 100;
  double init_std = 0.5;
  double min_std = 0.01;
  std::size_t episodes_per_candidate = 3;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  std::size_t elite_count() const {
    return static_cast<std::size_t>(
        std::ceil(elite_fraction * static_cast<double>(population)));
  }

  void validate() const {
    if (population < 1) throw DomainError("CEMConfig: population must be >= 1");
    if (!(elite_fraction > 0.0 && elite_fraction < 1.0)) {
      throw DomainError("CEMConfig: elite_fraction outside (0, 1)");
    }
    if (elite_count() < 1) throw DomainError("CEMConfig: no elites");
    if (!(init_std > 0.0) || !(min_std >= 0.0)) {
      throw DomainError("CEMConfig: std must be positive");
    }
    if (episodes_per_candidate < 1) {
      throw DomainError("CEMConfig: episodes_per_candidate must be >= 1");
    }
  }
};

struct CurvePoint {
  std::size_t iteration = 0;
  double elite_mean = 0.0;
  double population_mean = 0.0;
};

struct TrainResult {
  LinearPolicy policy;
  std::vector<CurvePoint> curve;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be
// written by index so the outcome is schedule independent.
inline void parallel_for(std::size_t n, std::size_t jobs,
                         const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      (void)w;
      for (std::size_t i = next++; i < n; i = next++) {
        if (failed) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::vector<std::uint64_t> episode_seeds(std::uint64_t seed,
                                                std::size_t iteration,
                                                std::size_t count) {
  std::vector<std::uint64_t> out(count);
  for (std::size_t e = 0; e < count; ++e) {
    out[e] = derive_seed(seed, 0x45504953ULL, iteration, e);
  }
  return out;
}

inline TrainResult cem_train(const TrainEnv& env, ActionSpace space,
                             const CEMConfig& cfg) {
  cfg.validate();
  const std::size_t d = env.episode.feature_dim;
  LinearPolicy base = LinearPolicy::zeros(d, space);
  base.ik = env.episode.ik;
  const std::size_t n = base.num_params();
  std::vector<double> mean(n, 0.0), stdev(n, cfg.init_std);
  const std::size_t elites = cfg.elite_count();

  TrainResult result;
  std::vector<std::vector<double>> cand(cfg.population, std::vector<double>(n));
  std::vector<double> returns(cfg.population);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    // Common random numbers: every candidate sees the same episode seeds.
    const auto seeds = episode_seeds(cfg.seed, it, cfg.episodes_per_candidate);
    for (std::size_t i = 0; i < cfg.population; ++i) {
      Rng rng(derive_seed(cfg.seed, 0x43414E44ULL, it, i));
      for (std::size_t k = 0; k < n; ++k) {
        cand[i][k] = mean[k] + stdev[k] * rng.normal();
      }
    }
    parallel_for(cfg.population, cfg.jobs, [&](std::size_t i) {
      returns[i] = evaluate_candidate(cand[i], env, space, seeds);
    });
    std::vector<std::size_t> order(cfg.population);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return returns[a] > returns[b];
    });
    CurvePoint pt;
    pt.iteration = it;
    for (std::size_t i = 0; i < cfg.population; ++i) pt.population_mean += returns[i];
    pt.population_mean /= static_cast<double>(cfg.population);
    for (std::size_t e = 0; e < elites; ++e) pt.elite_mean += returns[order[e]];
    pt.elite_mean /= static_cast<double>(elites);
    result.curve.push_back(pt);

    for (std::size_t k = 0; k < n; ++k) {
      double m = 0.0;
      for (std::size_t e = 0; e < elites; ++e) m += cand[order[e]][k];
      m /= static_cast<double>(elites);
      double v = 0.0;
      for (std::size_t e = 0; e < elites; ++e) {
        const double dv = cand[order[e]][k] - m;
        v += dv * dv;
      }
      v /= static_cast<double>(elites);
      mean[k] = m;
      stdev[k] = std::max(std::sqrt(v), cfg.min_std);
    }
  }
  result.policy = base;
  result.policy.set_params(mean);
  return result;
}

inline void write_policy_csv(std::ostream& out, const LinearPolicy& p) {
  out << p.feature_dim << "," << to_string(p.action_space) << "\n";
  char buf[64];
  for (int r = 0; r < 2; ++r) {
    for (std::size_t i = 0; i < p.feature_dim; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", p.weights[r * p.feature_dim + i]);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.bias[0], p.bias[1]);
  out << buf;
}

namespace detail {
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": bad number '" + s + "'");
  }
}
}  // namespace detail

inline LinearPolicy read_policy_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("policy csv: empty");
  const auto head = detail::split_csv(line);
  if (head.size() != 2) throw ConfigError("policy csv: bad header");
  const double dd = detail::parse_double(head[0], "policy csv");
  if (!(dd >= 1.0) || dd != std::floor(dd)) throw ConfigError("policy csv: bad d");
  ActionSpace space;
  try {
    space = parse_action_space(head[1]);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("policy csv: ") + e.what());
  }
  LinearPolicy p = LinearPolicy::zeros(static_cast<std::size_t>(dd), space);
  for (int r = 0; r < 2; ++r) {
    if (!std::getline(in, line)) throw ConfigError("policy csv: missing weights");
    const auto cells = detail::split_csv(line);
    if (cells.size() != p.feature_dim) throw ConfigError("policy csv: bad row width");
    for (std::size_t i = 0; i < p.feature_dim; ++i) {
      p.weights[r * p.feature_dim + i] = detail::parse_double(cells[i], "policy csv");
    }
  }
  if (!std::getline(in, line)) throw ConfigError("policy csv: missing bias");
  const auto b = detail::split_csv(line);
  if (b.size() != 2) throw ConfigError("policy csv: bad bias row");
  p.bias = {detail::parse_double(b[0], "policy csv"),
            detail::parse_double(b[1], "policy csv")};
  return p;
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& c) {
  out << "iteration,elite_mean,population_mean\n";
  char buf[128];
  for (const auto& p : c) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6g,%.6g\n", p.iteration, p.elite_mean,
                  p.population_mean);
    out << buf;
  }
}

}  // namespace lanekeep

#endif  // LANEKEEP_POLICY_HPP_
