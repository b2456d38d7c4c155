#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tdm/dataset.hpp"
#include "tdm/model_iface.hpp"
#include "tdm/tokenizer.hpp"
#include "tdm/transformer.hpp"

namespace tdm {

enum class MlpInputMode { Raw, TokenizedEmbedded };
enum class MlpOutputMode { Absolute, Delta, CategoricalTokens };

std::string mlp_variant_name(MlpInputMode in, MlpOutputMode out);
MlpInputMode mlp_input_mode_from_string(const std::string& s);
MlpOutputMode mlp_output_mode_from_string(const std::string& s);

// Single-step (o_t, a_t) -> o_{t+1} baselines. Delta and categorical are both
// output modes, so they cannot be combined; categorical decoding goes through
// the shared tokenizer.
struct MlpBaselineConfig {
  std::vector<int> hidden = {256, 256};
  MlpInputMode input_mode = MlpInputMode::Raw;
  MlpOutputMode output_mode = MlpOutputMode::Absolute;
  int embedding_width = 64;

  void validate() const {
    require(!hidden.empty(), "mlp: need at least one hidden layer");
    for (int h : hidden) require(h >= 1, "mlp: hidden sizes must be positive");
    require(embedding_width >= 1, "mlp: embedding width must be positive");
  }
};

struct Transition {
  Vecd obs;
  Vecd action;
  Vecd next_obs;
};

std::vector<Transition> dataset_transitions(const EpisodeDataset& dataset);

class MlpModel : public PlannerModel {
 public:
  MlpModel(MlpBaselineConfig cfg, TrajectoryCodec codec, EnvSpec env_spec);

  const MlpBaselineConfig& config() const { return cfg_; }
  ModelParameters<float>& params() { return params_; }
  const ModelParameters<float>& params() const { return params_; }
  void init(std::uint64_t seed);

  Vecd predict(const Vecd& obs, const Vecd& action) const;
  Matd forward_batch(const Matd& obs, const Matd& actions) const;
  // Iterated single-step prediction, feeding outputs back.
  Matd rollout(const Vecd& obs, const Matd& actions) const;

  struct TrainResultMlp {
    std::vector<LossPoint> curve;
    double final_loss = 0.0;
  };
  TrainResultMlp train(const std::vector<Transition>& transitions, int steps, int batch,
                       std::uint64_t seed, const AdamConfig& adam = {});

  // --- PlannerModel ---
  std::string kind() const override { return "mlp-" + mlp_variant_name(cfg_.input_mode,
                                                                       cfg_.output_mode); }
  int obs_dim() const override { return env_spec_.n; }
  int action_dim() const override { return env_spec_.m; }
  bool provides_rewards() const override { return false; }
  void begin_episode() override {}
  void commit_step(const Vecd&, double, const Vecd&) override {}
  std::unique_ptr<RolloutSession> make_session(const Matd& obs0, const Vecd& reward0,
                                               int lanes, int lane_offset,
                                               std::uint64_t seed,
                                               int horizon_steps) const override;

 private:
  MlpBaselineConfig cfg_;
  TrajectoryCodec codec_;
  EnvSpec env_spec_;
  ModelParameters<float> params_;
};

}  // namespace tdm
