#include "tdm/planner.hpp"

#include <algorithm>
#include <cmath>

namespace tdm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kChunk = 64;
}  // namespace

int planner_chunk_width() { return kChunk; }

double brownian_increment(const PlannerConfig& cfg, Rng& rng) {
  return rng.normal(cfg.noise_drift, std::sqrt(cfg.noise_variance));
}

CandidateSet sample_brownian_candidates(int action_dim, const PlannerConfig& cfg, Rng& rng) {
  cfg.validate();
  CandidateSet set;
  set.sequences.resize(cfg.num_candidates);
  for (auto& seq : set.sequences) {
    seq.resize(cfg.horizon, action_dim);
    for (int d = 0; d < action_dim; ++d) {
      double a = clip(brownian_increment(cfg, rng), -1.0, 1.0);
      seq(0, d) = a;
      for (int j = 1; j < cfg.horizon; ++j) {
        a = clip(a + brownian_increment(cfg, rng), -1.0, 1.0);
        seq(j, d) = a;
      }
    }
  }
  return set;
}

namespace {

struct ChunkPlan {
  int begin;  // candidate range [begin, end)
  int end;
};

std::vector<ChunkPlan> chunk_candidates(int count) {
  std::vector<ChunkPlan> chunks;
  for (int at = 0; at < count; at += kChunk)
    chunks.push_back({at, std::min(at + kChunk, count)});
  return chunks;
}

Matd lane_obs_block(const Matd& obs, int begin, int lanes) {
  if (obs.rows() == 1) return obs;
  return obs.middleRows(begin, lanes);
}

// Rolls one chunk of candidates and accumulates objective sums per lane.
void roll_chunk(const PlannerModel& model, const Matd& obs, double reward,
                const Objective& objective, const PlannerConfig& cfg,
                const CandidateSet& candidates, int begin, int end, std::uint64_t seed,
                Vecd& scores_out, int& diverged_out) {
  const int lanes = end - begin;
  const Matd obs_block = lane_obs_block(obs, begin, lanes);
  const Vecd r0 = Vecd::Constant(1, reward);
  auto session = model.make_session(obs_block, r0, lanes, begin, seed, cfg.horizon);

  Vecd sums = Vecd::Zero(lanes);
  std::vector<std::uint8_t> alive(lanes, 1);
  Matd actions(lanes, candidates.sequences[begin].cols());
  for (int j = 0; j < cfg.horizon; ++j) {
    for (int b = 0; b < lanes; ++b) actions.row(b) = candidates.sequences[begin + b].row(j);
    RolloutStepResult step = session->step(actions);
    for (int b = 0; b < lanes; ++b) {
      if (!step.alive[b]) alive[b] = 0;
      if (!alive[b]) continue;
      if (objective.kind == ObjectiveKind::RewardFromObs) {
        sums[b] += objective.reward_from_obs(step.next_obs.row(b).transpose());
      } else if (step.rewards.size() > 0) {
        sums[b] += step.rewards[b];
      }
    }
  }
  for (int b = 0; b < lanes; ++b) {
    if (!alive[b]) {
      scores_out[begin + b] = kNegInf;
      ++diverged_out;
    } else {
      scores_out[begin + b] = sums[b];
    }
  }
}

}  // namespace

EvaluationResult evaluate_candidates(const PlannerModel& model, const Matd& obs,
                                     double reward, const CandidateSet& candidates,
                                     const Objective& objective, const PlannerConfig& cfg) {
  cfg.validate();
  require(candidates.count() >= 1, "evaluate_candidates: empty candidate set");
  if (objective.kind == ObjectiveKind::RewardFromObs)
    require(static_cast<bool>(objective.reward_from_obs),
            "evaluate_candidates: RewardFromObs objective without a reward map");

  EvaluationResult result;
  result.rewardless_model =
      objective.kind == ObjectiveKind::PredictedRewards && !model.provides_rewards();

  const int count = candidates.count();
  Vecd total = Vecd::Zero(count);
  std::vector<int> diverged_per_chunk;
  for (int s = 0; s < cfg.samples_per_candidate; ++s) {
    Vecd scores(count);
    const auto chunks = chunk_candidates(count);
    std::vector<int> diverged(chunks.size(), 0);
    parallel_for(static_cast<int>(chunks.size()), [&](int c) {
      roll_chunk(model, obs, reward, objective, cfg, candidates, chunks[c].begin,
                 chunks[c].end, derive_seed(cfg.seed, "planner.sample", s), scores,
                 diverged[c]);
    });
    for (int d : diverged) result.diverged += d;
    // -inf in any sample kills the candidate; otherwise accumulate the mean.
    if (s == 0)
      total = scores;
    else
      for (int i = 0; i < count; ++i)
        total[i] = (std::isinf(scores[i]) || std::isinf(total[i]))
                       ? kNegInf
                       : total[i] + scores[i];
  }
  if (cfg.samples_per_candidate > 1)
    for (int i = 0; i < count; ++i)
      if (!std::isinf(total[i])) total[i] /= cfg.samples_per_candidate;
  result.scores = std::move(total);
  return result;
}

ProposalEvaluation evaluate_proposal_candidates(const PlannerModel& model, const Matd& obs,
                                                double reward, double sigma,
                                                const Objective& objective,
                                                const PlannerConfig& cfg) {
  cfg.validate();
  require(sigma >= 0.0, "proposal: sigma must be non-negative");
  if (objective.kind == ObjectiveKind::RewardFromObs)
    require(static_cast<bool>(objective.reward_from_obs),
            "proposal: RewardFromObs objective without a reward map");

  const int count = cfg.num_candidates;
  const int m = model.action_dim();
  ProposalEvaluation out;
  out.eval.scores = Vecd::Constant(count, 0.0);
  out.eval.rewardless_model =
      objective.kind == ObjectiveKind::PredictedRewards && !model.provides_rewards();
  out.realized.sequences.assign(count, Matd::Zero(cfg.horizon, m));

  const auto chunks = chunk_candidates(count);
  std::vector<int> diverged(chunks.size(), 0);
  parallel_for(static_cast<int>(chunks.size()), [&](int c) {
    const int begin = chunks[c].begin, end = chunks[c].end;
    const int lanes = end - begin;
    const Vecd r0 = Vecd::Constant(1, reward);
    auto session = model.make_session(lane_obs_block(obs, begin, lanes), r0, lanes, begin,
                                      derive_seed(cfg.seed, "planner.proposal"), cfg.horizon);
    require(session->can_propose(), "proposal: model cannot propose actions");

    // Per-lane Brownian perturbation walks with variance sigma.
    std::vector<Rng> noise;
    noise.reserve(lanes);
    for (int b = 0; b < lanes; ++b)
      noise.emplace_back(derive_seed(cfg.seed, "planner.proposal.noise", begin + b));
    Matd walk = Matd::Zero(lanes, m);

    Vecd sums = Vecd::Zero(lanes);
    std::vector<std::uint8_t> alive(lanes, 1);
    const double sd = std::sqrt(sigma);
    for (int j = 0; j < cfg.horizon; ++j) {
      Matd mean = session->propose_actions();
      Matd actions(lanes, m);
      for (int b = 0; b < lanes; ++b)
        for (int d = 0; d < m; ++d) {
          if (sigma > 0.0) walk(b, d) += noise[b].normal(0.0, sd);
          actions(b, d) = clip(mean(b, d) + walk(b, d), -1.0, 1.0);
        }
      for (int b = 0; b < lanes; ++b) out.realized.sequences[begin + b].row(j) = actions.row(b);
      RolloutStepResult step = session->step(actions);
      for (int b = 0; b < lanes; ++b) {
        if (!step.alive[b]) alive[b] = 0;
        if (!alive[b]) continue;
        if (objective.kind == ObjectiveKind::RewardFromObs)
          sums[b] += objective.reward_from_obs(step.next_obs.row(b).transpose());
        else if (step.rewards.size() > 0)
          sums[b] += step.rewards[b];
      }
    }
    for (int b = 0; b < lanes; ++b) {
      if (!alive[b]) {
        out.eval.scores[begin + b] = kNegInf;
        ++diverged[c];
      } else {
        out.eval.scores[begin + b] = sums[b];
      }
    }
  });
  for (int d : diverged) out.eval.diverged += d;
  return out;
}

ActionChoice select_action(const Vecd& scores, const CandidateSet& candidates) {
  require(scores.size() == candidates.count(), "select_action: score/candidate mismatch");
  require(scores.size() >= 1, "select_action: empty scores");
  int best = -1;
  double best_score = kNegInf;
  for (int i = 0; i < scores.size(); ++i) {
    if (std::isfinite(scores[i]) && scores[i] > best_score) {
      best = i;
      best_score = scores[i];
    }
  }
  ActionChoice choice;
  if (best < 0) {
    choice.index = 0;
    choice.score = kNegInf;
    choice.fallback = true;
  } else {
    choice.index = best;
    choice.score = best_score;
  }
  choice.action = candidates.sequences[choice.index].row(0).transpose();
  return choice;
}

EpisodeResult run_mpc_episode(Env& env, PlannerModel& model, const PlannerConfig& cfg,
                              const Objective& objective, std::uint64_t episode_seed) {
  cfg.validate();
  require(env.spec().n == model.obs_dim() && env.spec().m == model.action_dim(),
          "run_mpc_episode: env and model dimensions disagree");
  env.reset(derive_seed(episode_seed, "episode.init"));
  model.begin_episode();
  Rng cand_rng(derive_seed(episode_seed, "episode.candidates"));

  EpisodeResult result;
  while (!env.done()) {
    const int t = env.state().step_index;
    const Vecd obs = env.observe();
    const double r = env.reward();
    model.observe_privileged(env.state());

    PlannerConfig step_cfg = cfg;
    step_cfg.seed = derive_seed(episode_seed, "episode.step", t);

    ActionChoice choice;
    int diverged = 0;
    if (cfg.proposal_sigma >= 0.0) {
      auto prop = evaluate_proposal_candidates(model, obs.transpose(), r,
                                               cfg.proposal_sigma, objective, step_cfg);
      choice = select_action(prop.eval.scores, prop.realized);
      diverged = prop.eval.diverged;
    } else {
      CandidateSet cands = sample_brownian_candidates(env.spec().m, step_cfg, cand_rng);
      auto eval = evaluate_candidates(model, obs.transpose(), r, cands, objective, step_cfg);
      choice = select_action(eval.scores, cands);
      diverged = eval.diverged;
    }
    result.diverged_rollouts += diverged;

    const double realized = env.step(choice.action);
    model.commit_step(obs, r, choice.action);
    result.log.push_back({t, choice.index, choice.score, realized});
    result.episode_return += realized;
  }
  return result;
}

}  // namespace tdm
