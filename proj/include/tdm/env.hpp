#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tdm/common.hpp"

namespace tdm {

struct EnvSpec {
  std::string name;
  int n = 0;  // observation dimension
  int m = 0;  // action dimension; action space is [-1,1]^m
  bool reward_from_obs = true;
  int episode_steps = 200;
  double dt = 0.05;
  double obs_clip = 5.0;              // tokenizer clip range for observations
  double target_velocity = 1.0;       // velocity-tracking envs
  std::vector<int> velocity_dims;     // observation dims excluded from position RMS
};

struct EnvState {
  Vecd state;
  int step_index = 0;
  double accumulated_return = 0.0;  // sum of post-action rewards
};

// Tolerance kernel for velocity tracking: flat 1.0 inside |v-target| <= 0.1,
// Gaussian decay outside. Scale 0.25 keeps the do-nothing floor low.
double velocity_reward_kernel(double v, double target);

class Env {
 public:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }
  const EnvState& state() const { return state_; }
  void restore(const EnvState& s) { state_ = s; }

  void reset(std::uint64_t seed) {
    state_.state = initial_state(seed);
    state_.step_index = 0;
    state_.accumulated_return = 0.0;
  }

  Vecd observe() const { return observe_state(state_.state); }
  double reward() const { return reward_state(state_.state); }
  bool done() const { return state_.step_index >= spec_.episode_steps; }

  // Clips the action to the unit box, integrates one dt, accumulates return.
  double step(const Vecd& action) {
    require(action.size() == spec_.m, "env " + spec_.name + ": action dimension mismatch");
    const Vecd a = action.cwiseMax(-1.0).cwiseMin(1.0);
    Vecd next = dynamics(state_.state, a);
    if (!next.allFinite())
      throw TdmError("env " + spec_.name + ": non-finite state after step " +
                     std::to_string(state_.step_index));
    state_.state = std::move(next);
    state_.step_index += 1;
    const double r = reward_state(state_.state);
    state_.accumulated_return += r;
    return r;
  }

  virtual double reward_of_obs(const Vecd& obs) const {
    (void)obs;
    throw TdmError("env " + spec_.name + ": reward is not a function of the observation");
  }

  virtual std::unique_ptr<Env> clone() const = 0;

 protected:
  virtual Vecd initial_state(std::uint64_t seed) const = 0;
  virtual Vecd dynamics(const Vecd& s, const Vecd& a) const = 0;
  virtual Vecd observe_state(const Vecd& s) const = 0;
  virtual double reward_state(const Vecd& s) const = 0;

  EnvSpec spec_;
  EnvState state_;
};

// Fixed environments: "point-mass", "pole-swingup", "k-link-pole(k)".
std::unique_ptr<Env> make_fixed_env(const std::string& name);
std::unique_ptr<Env> make_fixed_env(const std::string& name, double target_velocity,
                                    int episode_steps);

// Undamped, unactuated pole variant for integrator checks.
std::unique_ptr<Env> make_conservative_pole(int links, double dt);

}  // namespace tdm
