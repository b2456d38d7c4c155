#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdm/common.hpp"

namespace tdm {

// One integer token per scalar: clamp to [-clip_range, clip_range], mu-law
// compand, then uniform half-open binning. Values sitting exactly on a bin
// edge go to the upper bin, so 0.0 lands in bin num_bins/2.
struct TokenizerSpec {
  int num_bins = 256;
  double companding_mu = 100.0;
  double clip_range = 1.0;
  int separator_token = 256;
  int vocab_size = 257;

  void validate() const;
};

enum class TokenRole : std::uint8_t { Observation, Action, Reward, Separator };

struct TokenSlot {
  TokenRole role;
  int step = 0;  // environment step index within the encoded span
  int dim = 0;   // scalar index within the role vector (0 for reward/separator)
};

struct TokenSequence {
  std::vector<int> tokens;
  std::vector<TokenSlot> layout;

  std::size_t size() const { return tokens.size(); }
  void append(const TokenSequence& other, int step_offset);
  void validate(const TokenizerSpec& spec) const;
};

// Episode-aligned trajectory. rewards[t] is the reward received together with
// observations[t]; actions[t] is taken from observations[t]. The final
// observation may have no following action.
struct Trajectory {
  std::vector<Vecd> observations;
  std::vector<Vecd> actions;
  std::vector<double> rewards;

  std::size_t steps() const { return actions.size(); }
  void validate() const;
};

int encode_scalar(double value, const TokenizerSpec& spec);
double decode_token(int token, const TokenizerSpec& spec);

// Width of the value-space bin that token t covers (for round-trip bounds).
double bin_width(int token, const TokenizerSpec& spec);

// Shared value vocabulary for all roles; clip ranges differ per role so one
// integer space covers observations, actions in [-1,1] and rewards in [0,1].
struct TrajectoryCodec {
  TokenizerSpec obs;
  TokenizerSpec action;
  TokenizerSpec reward;

  static TrajectoryCodec defaults(double obs_clip = 5.0);

  void validate() const;
  int num_bins() const { return obs.num_bins; }
  int vocab_size() const { return obs.vocab_size; }
  int separator_token() const { return obs.separator_token; }
  const TokenizerSpec& spec_for(TokenRole role) const;

  int tokens_per_step(int n, int m) const { return n + m + 2; }

  // Emits [separator, o (n), r, a (m)]; pass no action for a terminal step.
  TokenSequence encode_step(const Vecd& obs_v, double reward_v,
                            const std::optional<Vecd>& action_v) const;
  TokenSequence encode_trajectory(const Trajectory& traj) const;

  Vecd decode_vector(const std::vector<int>& tokens, TokenRole role) const;
};

}  // namespace tdm
