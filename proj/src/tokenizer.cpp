#include "tdm/tokenizer.hpp"

#include <algorithm>
#include <cmath>

namespace tdm {

void TokenizerSpec::validate() const {
  require(num_bins > 0, "tokenizer: num_bins must be positive");
  require(num_bins % 2 == 0, "tokenizer: num_bins must be even");
  require(companding_mu > 0.0, "tokenizer: companding_mu must be positive");
  require(clip_range > 0.0, "tokenizer: clip_range must be positive");
  require(separator_token >= num_bins, "tokenizer: separator collides with value tokens");
  require(vocab_size > num_bins, "tokenizer: vocab_size must cover special tokens");
}

namespace {

double compand(double xn, double mu) {
  const double c = std::log1p(mu * std::abs(xn)) / std::log1p(mu);
  return std::copysign(c, xn);
}

double expand(double c, double mu) {
  const double x = std::expm1(std::abs(c) * std::log1p(mu)) / mu;
  return std::copysign(x, c);
}

}  // namespace

int encode_scalar(double value, const TokenizerSpec& spec) {
  require(std::isfinite(value), "encode_scalar: non-finite value");
  const double clipped = clip(value, -spec.clip_range, spec.clip_range);
  const double c = compand(clipped / spec.clip_range, spec.companding_mu);
  const int t = static_cast<int>(std::floor(spec.num_bins * (c + 1.0) / 2.0));
  return std::clamp(t, 0, spec.num_bins - 1);
}

double decode_token(int token, const TokenizerSpec& spec) {
  require(token >= 0 && token < spec.num_bins,
          "decode_token: token " + std::to_string(token) + " is not a value token");
  const double c = 2.0 * (token + 0.5) / spec.num_bins - 1.0;
  return expand(c, spec.companding_mu) * spec.clip_range;
}

double bin_width(int token, const TokenizerSpec& spec) {
  require(token >= 0 && token < spec.num_bins, "bin_width: not a value token");
  const double clo = 2.0 * token / spec.num_bins - 1.0;
  const double chi = 2.0 * (token + 1) / spec.num_bins - 1.0;
  return std::abs(expand(chi, spec.companding_mu) - expand(clo, spec.companding_mu)) *
         spec.clip_range;
}

void TokenSequence::append(const TokenSequence& other, int step_offset) {
  tokens.insert(tokens.end(), other.tokens.begin(), other.tokens.end());
  for (TokenSlot slot : other.layout) {
    slot.step += step_offset;
    layout.push_back(slot);
  }
}

void TokenSequence::validate(const TokenizerSpec& spec) const {
  require(tokens.size() == layout.size(), "token sequence: layout/token length mismatch");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    require(tokens[i] >= 0 && tokens[i] < spec.vocab_size,
            "token sequence: token out of vocabulary at index " + std::to_string(i));
    const bool is_sep = tokens[i] == spec.separator_token;
    const bool wants_sep = layout[i].role == TokenRole::Separator;
    require(is_sep == wants_sep, "token sequence: separator/layout mismatch at index " +
                                     std::to_string(i));
  }
}

void Trajectory::validate() const {
  require(observations.size() == rewards.size(),
          "trajectory: observations/rewards length mismatch");
  require(observations.size() == actions.size() || observations.size() == actions.size() + 1,
          "trajectory: observations must match actions or exceed them by one");
  for (std::size_t t = 0; t < actions.size(); ++t) {
    for (int i = 0; i < actions[t].size(); ++i) {
      require(actions[t][i] >= -1.0 && actions[t][i] <= 1.0,
              "trajectory: action component outside [-1,1] at step " + std::to_string(t));
    }
  }
}

TrajectoryCodec TrajectoryCodec::defaults(double obs_clip) {
  TrajectoryCodec codec;
  codec.obs.clip_range = obs_clip;
  codec.action.clip_range = 1.0;
  codec.reward.clip_range = 1.0;
  return codec;
}

void TrajectoryCodec::validate() const {
  obs.validate();
  action.validate();
  reward.validate();
  require(obs.num_bins == action.num_bins && obs.num_bins == reward.num_bins,
          "codec: roles must share the value vocabulary");
  require(obs.separator_token == action.separator_token &&
              obs.separator_token == reward.separator_token,
          "codec: roles must share the separator token");
}

const TokenizerSpec& TrajectoryCodec::spec_for(TokenRole role) const {
  switch (role) {
    case TokenRole::Observation: return obs;
    case TokenRole::Action: return action;
    case TokenRole::Reward: return reward;
    default: break;
  }
  throw TdmError("spec_for: separator has no value spec");
}

TokenSequence TrajectoryCodec::encode_step(const Vecd& obs_v, double reward_v,
                                           const std::optional<Vecd>& action_v) const {
  TokenSequence seq;
  const int n = static_cast<int>(obs_v.size());
  const int m = action_v ? static_cast<int>(action_v->size()) : 0;
  seq.tokens.reserve(n + m + 2);
  seq.layout.reserve(n + m + 2);

  seq.tokens.push_back(separator_token());
  seq.layout.push_back({TokenRole::Separator, 0, 0});
  for (int i = 0; i < n; ++i) {
    require(std::isfinite(obs_v[i]),
            "encode_step: non-finite observation component " + std::to_string(i));
    seq.tokens.push_back(encode_scalar(obs_v[i], obs));
    seq.layout.push_back({TokenRole::Observation, 0, i});
  }
  require(std::isfinite(reward_v), "encode_step: non-finite reward");
  seq.tokens.push_back(encode_scalar(reward_v, reward));
  seq.layout.push_back({TokenRole::Reward, 0, 0});
  for (int i = 0; i < m; ++i) {
    const double a = (*action_v)[i];
    require(std::isfinite(a) && a >= -1.0 && a <= 1.0,
            "encode_step: action component " + std::to_string(i) + " outside [-1,1]");
    seq.tokens.push_back(encode_scalar(a, action));
    seq.layout.push_back({TokenRole::Action, 0, i});
  }
  return seq;
}

TokenSequence TrajectoryCodec::encode_trajectory(const Trajectory& traj) const {
  traj.validate();
  TokenSequence seq;
  for (std::size_t t = 0; t < traj.observations.size(); ++t) {
    std::optional<Vecd> act;
    if (t < traj.actions.size()) act = traj.actions[t];
    TokenSequence step_seq;
    try {
      step_seq = encode_step(traj.observations[t], traj.rewards[t], act);
    } catch (const TdmError& e) {
      throw TdmError("encode_trajectory: step " + std::to_string(t) + ": " + e.what());
    }
    seq.append(step_seq, static_cast<int>(t));
  }
  return seq;
}

Vecd TrajectoryCodec::decode_vector(const std::vector<int>& tokens, TokenRole role) const {
  const TokenizerSpec& spec = spec_for(role);
  Vecd out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) out[i] = decode_token(tokens[i], spec);
  return out;
}

}  // namespace tdm
