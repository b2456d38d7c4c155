#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tdm/model_iface.hpp"
#include "tdm/rng.hpp"

namespace tdm {

enum class ObjectiveKind { RewardFromObs, PredictedRewards };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::RewardFromObs;
  std::function<double(const Vecd&)> reward_from_obs;  // required for RewardFromObs
};

struct PlannerConfig {
  int num_candidates = 128;          // K
  int horizon = 20;                  // N, in environment steps
  double noise_drift = 0.0;
  double noise_variance = 2.0;       // per planner step
  double proposal_sigma = -1.0;      // < 0: plain random shooting
  int samples_per_candidate = 1;
  std::uint64_t seed = 0;

  void validate() const {
    require(num_candidates >= 1 && horizon >= 1, "planner: K and N must be positive");
    require(noise_variance > 0.0, "planner: noise variance must be positive");
    require(samples_per_candidate >= 1, "planner: samples_per_candidate must be positive");
  }
};

// K action sequences, each horizon x m, every entry in [-1,1].
struct CandidateSet {
  std::vector<Matd> sequences;

  int count() const { return static_cast<int>(sequences.size()); }
  void validate() const {
    for (const auto& s : sequences)
      require((s.array() >= -1.0).all() && (s.array() <= 1.0).all(),
              "candidate set: action outside [-1,1]");
  }
};

// Clipped Brownian random walk per action dimension: the first value is drawn
// from the increment distribution around the drift, each later value adds a
// fresh increment and re-clips. Saturation at the box edges gives the slight
// bang-bang bias.
CandidateSet sample_brownian_candidates(int action_dim, const PlannerConfig& cfg, Rng& rng);

// Raw increment stream (pre-clip), exposed so the noise statistics can be
// checked directly.
double brownian_increment(const PlannerConfig& cfg, Rng& rng);

struct EvaluationResult {
  Vecd scores;                 // K, -inf for diverged candidates
  int diverged = 0;
  bool rewardless_model = false;  // objective wanted rewards the model lacks
};

// Scores candidates through the model: mean over samples_per_candidate
// rollouts of sum_k R(o_{t+k}) or sum_k r_{t+k}. Lanes are chunked at a fixed
// width and chunks may run in parallel; scores are reduced in candidate order
// so any worker count selects the same action.
EvaluationResult evaluate_candidates(const PlannerModel& model, const Matd& obs,
                                     double reward, const CandidateSet& candidates,
                                     const Objective& objective, const PlannerConfig& cfg);

// Proposal-biased planning: candidate k at step j applies
// clip(proposal_mean + brownian_walk_sigma). With sigma = 0 all candidates
// collapse onto the proposal rollout. Returns the realized candidate set
// alongside the scores.
struct ProposalEvaluation {
  EvaluationResult eval;
  CandidateSet realized;
};
ProposalEvaluation evaluate_proposal_candidates(const PlannerModel& model, const Matd& obs,
                                                double reward, double sigma,
                                                const Objective& objective,
                                                const PlannerConfig& cfg);

struct ActionChoice {
  int index = 0;
  double score = 0.0;
  Vecd action;
  bool fallback = false;  // all candidates diverged; took candidate 0
};

// argmax with ties broken toward the lowest index; all -inf falls back to
// candidate 0 with a flag.
ActionChoice select_action(const Vecd& scores, const CandidateSet& candidates);

struct McpStepLog {
  int step;
  int chosen_index;
  double best_score;
  double realized_reward;
};

struct EpisodeResult {
  double episode_return = 0.0;  // sum of post-action rewards
  std::vector<McpStepLog> log;
  int diverged_rollouts = 0;
};

// The MPC loop: at every environment step build candidates, score them through
// the model, execute the best first action, and append the realized step to
// the model's history. Only realized steps ever enter the history.
EpisodeResult run_mpc_episode(Env& env, PlannerModel& model, const PlannerConfig& cfg,
                              const Objective& objective, std::uint64_t episode_seed);

// Width of the fixed lane chunks used by evaluate_candidates.
int planner_chunk_width();

}  // namespace tdm
