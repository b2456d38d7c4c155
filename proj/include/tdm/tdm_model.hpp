#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "tdm/decoder.hpp"
#include "tdm/expert.hpp"
#include "tdm/model_iface.hpp"
#include "tdm/tokenizer.hpp"
#include "tdm/transformer.hpp"

namespace tdm {

struct DecodeMode {
  bool greedy = false;      // default: per-token sampling, one rollout/candidate
  double temperature = 1.0;
};

// Most recent realized tokens, bounded by a cap; truncation drops whole tokens
// from the front.
class History {
 public:
  explicit History(int cap = 0) : cap_(cap) {}

  void set_cap(int cap) {
    cap_ = cap;
    trim();
  }
  int cap() const { return cap_; }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<int>& tokens() const { return tokens_; }

  void append(const TokenSequence& seq) {
    tokens_.insert(tokens_.end(), seq.tokens.begin(), seq.tokens.end());
    trim();
  }
  void clear() { tokens_.clear(); }

 private:
  void trim() {
    if (cap_ > 0 && static_cast<int>(tokens_.size()) > cap_)
      tokens_.erase(tokens_.begin(),
                    tokens_.begin() + (static_cast<int>(tokens_.size()) - cap_));
  }
  int cap_;
  std::vector<int> tokens_;
};

// Samples one value token (separator masked to -inf) or returns the argmax.
template <typename S>
int sample_value_token(const MatX<S>& logits, int row, int num_bins, const DecodeMode& mode,
                       Rng& rng) {
  if (mode.greedy) {
    int best = 0;
    S best_v = logits(row, 0);
    for (int t = 1; t < num_bins; ++t)
      if (logits(row, t) > best_v) {
        best_v = logits(row, t);
        best = t;
      }
    return best;
  }
  const double inv_t = 1.0 / mode.temperature;
  double mx = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < num_bins; ++t)
    mx = std::max(mx, static_cast<double>(logits(row, t)));
  double z = 0.0;
  for (int t = 0; t < num_bins; ++t)
    z += std::exp((static_cast<double>(logits(row, t)) - mx) * inv_t);
  double u = rng.uniform01() * z;
  for (int t = 0; t < num_bins; ++t) {
    u -= std::exp((static_cast<double>(logits(row, t)) - mx) * inv_t);
    if (u <= 0.0) return t;
  }
  return num_bins - 1;
}

// The sequence model exposed as a dynamics model. One set of weights serves
// the reward-model, behavior-cloning and dynamics views; they differ only in
// the prompt and in which token roles are generated.
class TdmModel : public PlannerModel {
 public:
  TdmModel(TransformerConfig cfg, TrajectoryCodec codec, EnvSpec env_spec, DecodeMode mode)
      : cfg_(std::move(cfg)),
        codec_(std::move(codec)),
        env_spec_(std::move(env_spec)),
        mode_(mode),
        params_(make_transformer_parameters<float>(cfg_)),
        history_(cfg_.context_window) {
    codec_.validate();
    require(cfg_.vocab_size == codec_.vocab_size(), "tdm: config/codec vocabulary mismatch");
    require(cfg_.context_window >= env_spec_.n + env_spec_.m + 2,
            "tdm: one full environment step must fit the context window");
  }

  ModelParameters<float>& params() { return params_; }
  const ModelParameters<float>& params() const { return params_; }
  const TransformerConfig& config() const { return cfg_; }
  const TrajectoryCodec& codec() const { return codec_; }
  const EnvSpec& env_spec() const { return env_spec_; }
  History& history() { return history_; }
  DecodeMode& mode() { return mode_; }
  const DecodeMode& mode() const { return mode_; }

  // Context ablation hook: cap the realized history below the trained window.
  void set_history_cap(int tokens) {
    history_cap_ = std::min(tokens, cfg_.context_window);
    history_.set_cap(history_cap_);
  }
  int history_cap() const { return history_cap_ > 0 ? history_cap_ : cfg_.context_window; }

  // Preloads the history with a behavior prompt (e.g. an expert episode).
  void warm_start(const TokenSequence& prompt) { history_.append(prompt); }

  // --- PlannerModel ---
  std::string kind() const override { return "tdm"; }
  int obs_dim() const override { return env_spec_.n; }
  int action_dim() const override { return env_spec_.m; }
  bool provides_rewards() const override { return true; }

  void begin_episode() override {
    history_.clear();
    history_.set_cap(history_cap());
  }

  void commit_step(const Vecd& obs, double reward, const Vecd& action) override {
    history_.append(codec_.encode_step(obs, reward, action));
  }

  std::unique_ptr<RolloutSession> make_session(const Matd& obs0, const Vecd& reward0,
                                               int lanes, int lane_offset,
                                               std::uint64_t seed,
                                               int horizon_steps) const override;

  // --- conditioning views (single-lane helpers) ---
  // prompt (h, o_t) -> r_t
  double predict_reward(const Vecd& obs, std::uint64_t seed) const;
  // prompt (h, o_t, r_t) -> a_t
  Vecd act_bc(const Vecd& obs, double reward, std::uint64_t seed) const;
  // prompt (h, o_t, r_t, a_t) -> o_{t+1}
  Vecd predict_next_observation(const Vecd& obs, double reward, const Vecd& action,
                                std::uint64_t seed) const;

  struct Imagined {
    Matd observations;  // N x n
    Vecd rewards;       // N, aligned with observations
  };
  // Closed-loop imagination: predictions feed back as conditioning.
  Imagined rollout_imagined(const Vecd& obs, double reward, const Matd& actions,
                            std::uint64_t seed) const;

 private:
  TransformerConfig cfg_;
  TrajectoryCodec codec_;
  EnvSpec env_spec_;
  DecodeMode mode_;
  ModelParameters<float> params_;
  History history_;
  int history_cap_ = 0;
};

// Uses the BC view of a TdmModel as an acting policy. Realized steps are
// committed into the model history so the prompt stays aligned with the
// episode.
class BcTdmPolicy : public Policy {
 public:
  BcTdmPolicy(TdmModel& model, std::optional<TokenSequence> warm_start_prompt, std::uint64_t seed)
      : model_(model), prompt_(std::move(warm_start_prompt)), seed_(seed) {}

  std::string name() const override { return "bc-policy"; }

  void begin_episode(std::uint64_t episode_seed) override {
    model_.begin_episode();
    if (prompt_) model_.warm_start(*prompt_);
    episode_seed_ = episode_seed;
    step_ = 0;
    pending_ = false;
  }

  Vecd act(const Env& env) override {
    const Vecd obs = env.observe();
    const double r = env.reward();
    if (pending_) model_.commit_step(pending_obs_, pending_reward_, pending_action_);
    const Vecd a =
        model_.act_bc(obs, r, derive_seed(seed_ ^ episode_seed_, "bc.step", step_++));
    pending_obs_ = obs;
    pending_reward_ = r;
    pending_action_ = a;
    pending_ = true;
    return a;
  }

 private:
  TdmModel& model_;
  std::optional<TokenSequence> prompt_;
  std::uint64_t seed_;
  std::uint64_t episode_seed_ = 0;
  int step_ = 0;
  bool pending_ = false;
  Vecd pending_obs_, pending_action_;
  double pending_reward_ = 0.0;
};

}  // namespace tdm
