#include "tdm/tdm_model.hpp"

#include <algorithm>

namespace tdm {

namespace {

// Batched closed-loop imagination through the sequence model. The context
// always ends at a reward token; step() appends [a (m), SEP, o (n), r] with
// action and separator tokens forced and observation/reward tokens sampled
// under the role mask. When the window fills mid-rollout the front half of
// every lane's stream is dropped and the caches are rebuilt.
class TdmSession : public RolloutSession {
 public:
  TdmSession(const TdmModel& model, const std::vector<int>& hist, const Matd& obs0,
             const Vecd& reward0, int lanes, int lane_offset, std::uint64_t seed,
             int horizon_steps)
      : model_(model),
        decoder_(model.params(), model.config(), lanes),
        lanes_(lanes),
        n_(model.env_spec().n),
        m_(model.env_spec().m) {
    require(obs0.cols() == n_, "tdm session: observation dimension mismatch");
    require(obs0.rows() == 1 || obs0.rows() == lanes, "tdm session: bad obs0 shape");
    require(reward0.size() == 1 || reward0.size() == lanes, "tdm session: bad reward0 shape");

    lane_rngs_.reserve(lanes);
    for (int b = 0; b < lanes; ++b)
      lane_rngs_.emplace_back(derive_seed(seed, "tdm.lane", lane_offset + b));
    lane_tokens_.assign(lanes, {});

    const auto& codec = model.codec();
    const int window = model.config().context_window;
    const int block = n_ + m_ + 2;
    const int rollout_tokens = horizon_steps * block;

    // Trim history so the whole rollout fits without a mid-flight rebuild
    // whenever possible.
    int keep = std::min<int>(static_cast<int>(hist.size()),
                             window - (n_ + 2) - rollout_tokens);
    keep = std::clamp(keep, 0, window - (n_ + 2));

    std::vector<int> prefix(hist.end() - keep, hist.end());
    prefix.push_back(codec.separator_token());
    if (obs0.rows() == 1) {
      for (int i = 0; i < n_; ++i)
        prefix.push_back(encode_scalar(obs0(0, i), codec.obs));
      prefix.push_back(encode_scalar(reward0[0], codec.reward));
      decoder_.prime(prefix);
      for (int b = 0; b < lanes; ++b) lane_tokens_[b] = prefix;
    } else {
      decoder_.prime(prefix);
      for (int b = 0; b < lanes; ++b) lane_tokens_[b] = prefix;
      std::vector<int> toks(lanes);
      for (int i = 0; i < n_; ++i) {
        for (int b = 0; b < lanes; ++b) toks[b] = encode_scalar(obs0(b, i), codec.obs);
        advance(toks);
      }
      for (int b = 0; b < lanes; ++b)
        toks[b] = encode_scalar(reward0.size() == 1 ? reward0[0] : reward0[b], codec.reward);
      advance(toks);
    }
  }

  int lanes() const override { return lanes_; }

  RolloutStepResult step(const Matd& actions) override {
    require(actions.rows() == lanes_ && actions.cols() == m_,
            "tdm session: action block shape mismatch");
    const auto& codec = model_.codec();
    ensure_capacity(m_ + 1 + n_ + 1);

    std::vector<int> toks(lanes_);
    for (int d = 0; d < m_; ++d) {
      for (int b = 0; b < lanes_; ++b)
        toks[b] = encode_scalar(clip(actions(b, d), -1.0, 1.0), codec.action);
      advance(toks);
    }
    advance(std::vector<int>(lanes_, codec.separator_token()));

    RolloutStepResult out;
    out.next_obs.resize(lanes_, n_);
    out.rewards.resize(lanes_);
    out.alive.assign(lanes_, 1);
    for (int i = 0; i < n_; ++i) {
      sample_into(toks);
      advance(toks);
      for (int b = 0; b < lanes_; ++b) out.next_obs(b, i) = decode_token(toks[b], codec.obs);
    }
    sample_into(toks);
    advance(toks);
    for (int b = 0; b < lanes_; ++b) out.rewards[b] = decode_token(toks[b], codec.reward);
    return out;
  }

  bool can_propose() const override { return true; }

  // BC view: generate the action tokens for each lane, then rewind so the
  // planner can feed its perturbed version instead.
  Matd propose_actions() override {
    const auto& codec = model_.codec();
    ensure_capacity(m_ + 1 + n_ + 1);
    Matd mean(lanes_, m_);
    std::vector<int> toks(lanes_);
    for (int d = 0; d < m_; ++d) {
      sample_into(toks);
      advance(toks);
      for (int b = 0; b < lanes_; ++b) mean(b, d) = decode_token(toks[b], codec.action);
    }
    decoder_.rewind(m_);
    for (auto& stream : lane_tokens_) stream.resize(stream.size() - m_);
    return mean;
  }

 private:
  void advance(const std::vector<int>& toks) {
    decoder_.advance(toks);
    for (int b = 0; b < lanes_; ++b) lane_tokens_[b].push_back(toks[b]);
  }

  void sample_into(std::vector<int>& toks) {
    const auto& logits = decoder_.last_logits();
    const int bins = model_.codec().num_bins();
    for (int b = 0; b < lanes_; ++b)
      toks[b] = sample_value_token(logits, b, bins, model_.mode(), lane_rngs_[b]);
  }

  void ensure_capacity(int upcoming) {
    const int window = model_.config().context_window;
    if (decoder_.length() + upcoming <= window) return;
    const int keep = std::min(window - upcoming, window / 2);
    require(keep >= 1, "tdm session: context window cannot hold one step");
    for (auto& stream : lane_tokens_)
      stream.erase(stream.begin(), stream.end() - keep);
    decoder_.reprime_per_lane(lane_tokens_);
  }

  const TdmModel& model_;
  BatchDecoder<float> decoder_;
  int lanes_, n_, m_;
  std::vector<Rng> lane_rngs_;
  std::vector<std::vector<int>> lane_tokens_;
};

}  // namespace

std::unique_ptr<RolloutSession> TdmModel::make_session(const Matd& obs0, const Vecd& reward0,
                                                       int lanes, int lane_offset,
                                                       std::uint64_t seed,
                                                       int horizon_steps) const {
  return std::make_unique<TdmSession>(*this, history_.tokens(), obs0, reward0, lanes,
                                      lane_offset, seed, horizon_steps);
}

double TdmModel::predict_reward(const Vecd& obs, std::uint64_t seed) const {
  require(obs.size() == env_spec_.n, "predict_reward: observation dimension mismatch");
  std::vector<int> prompt = history_.tokens();
  const int window = cfg_.context_window;
  const int tail = env_spec_.n + 2;
  if (static_cast<int>(prompt.size()) > window - tail)
    prompt.erase(prompt.begin(), prompt.end() - (window - tail));
  prompt.push_back(codec_.separator_token());
  for (int i = 0; i < obs.size(); ++i) prompt.push_back(encode_scalar(obs[i], codec_.obs));

  BatchDecoder<float> dec(params_, cfg_, 1);
  dec.prime(prompt);
  Rng rng(derive_seed(seed, "tdm.lane", 0));
  const int tok = sample_value_token(dec.last_logits(), 0, codec_.num_bins(), mode_, rng);
  return decode_token(tok, codec_.reward);
}

Vecd TdmModel::act_bc(const Vecd& obs, double reward, std::uint64_t seed) const {
  auto session = make_session(obs.transpose(), Vecd::Constant(1, reward), 1, 0, seed, 1);
  return session->propose_actions().row(0).transpose();
}

Vecd TdmModel::predict_next_observation(const Vecd& obs, double reward, const Vecd& action,
                                        std::uint64_t seed) const {
  auto session = make_session(obs.transpose(), Vecd::Constant(1, reward), 1, 0, seed, 1);
  return session->step(action.transpose()).next_obs.row(0).transpose();
}

TdmModel::Imagined TdmModel::rollout_imagined(const Vecd& obs, double reward,
                                              const Matd& actions, std::uint64_t seed) const {
  const int horizon = static_cast<int>(actions.rows());
  require(horizon >= 1, "rollout_imagined: need at least one step");
  auto session =
      make_session(obs.transpose(), Vecd::Constant(1, reward), 1, 0, seed, horizon);
  Imagined out;
  out.observations.resize(horizon, env_spec_.n);
  out.rewards.resize(horizon);
  for (int j = 0; j < horizon; ++j) {
    auto res = session->step(actions.row(j));
    out.observations.row(j) = res.next_obs.row(0);
    out.rewards[j] = res.rewards[0];
  }
  return out;
}

}  // namespace tdm
