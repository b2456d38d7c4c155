#pragma once

#include <memory>
#include <string>

#include "tdm/planner.hpp"

namespace tdm {

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(std::uint64_t episode_seed) { (void)episode_seed; }
  virtual Vecd act(const Env& env) = 0;
};

// Actions follow the planner's clipped Brownian walk; the fair "random" floor,
// since a collapsed planner degrades to exactly this.
std::unique_ptr<Policy> make_brownian_policy(double variance = 2.0);

// Feedforward-plus-proportional velocity tracker for the point mass.
std::unique_ptr<Policy> make_point_mass_expert();

// MPC against the true dynamics; the default expert everywhere else.
std::unique_ptr<Policy> make_gt_mpc_policy(const Env& env, int num_candidates, int horizon,
                                           std::uint64_t seed);

struct ExpertValidation {
  std::string expert_name;
  double expert_return = 0.0;
  double reference_return = 0.0;  // ground-truth MPC with a large budget
  double fraction = 0.0;
  bool passed = false;  // fraction >= 0.9
};

// Builds the expert for an env: the analytic controller where one exists,
// otherwise ground-truth MPC with K=512, N=20.
std::unique_ptr<Policy> make_expert(const Env& env, std::uint64_t seed);

// Compares the expert against the large-budget ground-truth MPC reference over
// a few episodes. A failing env is flagged, not rejected.
ExpertValidation validate_expert(Env& env, Policy& expert, std::uint64_t seed,
                                 int episodes = 4);

// Runs one episode under a policy; exploration noise (stddev, clipped into the
// unit box) makes an expert "near-expert".
double run_policy_episode(Env& env, Policy& policy, std::uint64_t episode_seed,
                          double exploration_noise = 0.0);

}  // namespace tdm
