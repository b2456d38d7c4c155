#include "tdm/expert.hpp"

#include <cmath>

namespace tdm {

namespace {

class BrownianPolicy : public Policy {
 public:
  explicit BrownianPolicy(double variance) : variance_(variance) {}
  std::string name() const override { return "brownian-random"; }
  void begin_episode(std::uint64_t episode_seed) override {
    rng_ = Rng(derive_seed(episode_seed, "policy.brownian"));
    current_.resize(0);
  }
  Vecd act(const Env& env) override {
    const int m = env.spec().m;
    if (current_.size() != m) current_ = Vecd::Zero(m);
    const double sd = std::sqrt(variance_);
    for (int d = 0; d < m; ++d) current_[d] = clip(current_[d] + rng_.normal(0.0, sd), -1.0, 1.0);
    return current_;
  }

 private:
  double variance_;
  Rng rng_{0};
  Vecd current_;
};

class PointMassExpert : public Policy {
 public:
  std::string name() const override { return "point-mass-expert"; }
  Vecd act(const Env& env) override {
    const double target = env.spec().target_velocity;
    const double v = env.state().state[1];
    Vecd a(1);
    a[0] = clip(target / 2.0 + 2.0 * (target - v), -1.0, 1.0);
    return a;
  }
};

class GtMpcPolicy : public Policy {
 public:
  GtMpcPolicy(const Env& env, int num_candidates, int horizon, std::uint64_t seed)
      : model_(make_ground_truth_model(env)), seed_(seed) {
    cfg_.num_candidates = num_candidates;
    cfg_.horizon = horizon;
    objective_.kind = ObjectiveKind::PredictedRewards;  // oracle rewards
    label_ = "gt-mpc-K" + std::to_string(num_candidates) + "-N" + std::to_string(horizon);
  }

  std::string name() const override { return label_; }

  void begin_episode(std::uint64_t episode_seed) override {
    rng_ = Rng(derive_seed(seed_ ^ episode_seed, "policy.gtmpc"));
    step_ = 0;
  }

  Vecd act(const Env& env) override {
    model_->observe_privileged(env.state());
    PlannerConfig step_cfg = cfg_;
    step_cfg.seed = derive_seed(seed_, "policy.gtmpc.step", step_++);
    CandidateSet cands = sample_brownian_candidates(env.spec().m, step_cfg, rng_);
    auto eval = evaluate_candidates(*model_, env.observe().transpose(), env.reward(), cands,
                                    objective_, step_cfg);
    return select_action(eval.scores, cands).action;
  }

 private:
  std::unique_ptr<PlannerModel> model_;
  PlannerConfig cfg_;
  Objective objective_;
  std::uint64_t seed_;
  Rng rng_{0};
  int step_ = 0;
  std::string label_;
};

}  // namespace

std::unique_ptr<Policy> make_brownian_policy(double variance) {
  return std::make_unique<BrownianPolicy>(variance);
}

std::unique_ptr<Policy> make_point_mass_expert() { return std::make_unique<PointMassExpert>(); }

std::unique_ptr<Policy> make_gt_mpc_policy(const Env& env, int num_candidates, int horizon,
                                           std::uint64_t seed) {
  return std::make_unique<GtMpcPolicy>(env, num_candidates, horizon, seed);
}

std::unique_ptr<Policy> make_expert(const Env& env, std::uint64_t seed) {
  if (env.spec().name == "point-mass") return make_point_mass_expert();
  return make_gt_mpc_policy(env, 512, 20, seed);
}

double run_policy_episode(Env& env, Policy& policy, std::uint64_t episode_seed,
                          double exploration_noise) {
  env.reset(derive_seed(episode_seed, "episode.init"));
  policy.begin_episode(episode_seed);
  Rng noise(derive_seed(episode_seed, "episode.noise"));
  double total = 0.0;
  while (!env.done()) {
    Vecd a = policy.act(env);
    if (exploration_noise > 0.0)
      for (int d = 0; d < a.size(); ++d)
        a[d] = clip(a[d] + noise.normal(0.0, exploration_noise), -1.0, 1.0);
    total += env.step(a);
  }
  return total;
}

ExpertValidation validate_expert(Env& env, Policy& expert, std::uint64_t seed, int episodes) {
  ExpertValidation v;
  v.expert_name = expert.name();
  auto reference = make_gt_mpc_policy(env, 512, 20, derive_seed(seed, "expert.reference"));
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t es = derive_seed(seed, "expert.validate", e);
    v.expert_return += run_policy_episode(env, expert, es);
    v.reference_return += run_policy_episode(env, *reference, es);
  }
  v.expert_return /= episodes;
  v.reference_return /= episodes;
  v.fraction = v.reference_return > 0 ? v.expert_return / v.reference_return : 1.0;
  v.passed = v.fraction >= 0.9;
  return v;
}

}  // namespace tdm
