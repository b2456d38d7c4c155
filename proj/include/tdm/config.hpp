#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdm/baselines.hpp"
#include "tdm/morphology.hpp"
#include "tdm/planner.hpp"
#include "tdm/tdm_model.hpp"
#include "tdm/toml.hpp"

namespace tdm {

struct EnvConfig {
  std::string kind = "pole-swingup";  // fixed env name, or "morphology"
  std::string family = "chain";
  std::uint64_t morphology_seed = 0;
  int dof_min = 4, dof_max = 20;
  double target_velocity = 1.0;
  int episode_steps = 200;
  bool observe_body_velocity = false;
};

std::unique_ptr<Env> make_env(const EnvConfig& cfg);

struct TrainSettings {
  int steps = 2000;
  int batch = 8;
  double learning_rate = 3e-4;
  double clip_norm = 1.0;
  int episodes = 200;            // collect: episode count
  double exploration_noise = 0.05;
};

struct EvalSettings {
  int episodes = 8;
  std::vector<int> horizon_grid = {5, 10, 20};
  std::vector<int> window_grid = {4, 16, 64, 256};
  std::vector<double> sigma_grid = {0.0, 0.25, 1.0, 16.0};
  std::vector<int> pred_horizons = {0, 1, 2, 5, 10, 20};
  int pred_runs = 30;
};

struct RegimeSettings {
  std::string kind = "specialist";  // specialist | fewshot | zeroshot | crosstask
  std::vector<int> finetune_sizes = {10, 30, 100, 300, 1000};
  int finetune_subsets = 3;
  std::vector<int> eval_points_percent = {50, 100};
  int finetune_steps_base = 200;
  int finetune_steps_per_episode = 4;
  std::string pretrain_family = "chain";
  int pretrain_morphologies = 0;
  std::uint64_t pretrain_seed_base = 1000;
  int pretrain_episodes_per_env = 8;
  std::vector<std::string> pretrain_fixed_envs;
  int pretrain_fixed_episodes = 100;
  int pretrain_steps = 6000;
  int heldout_morphologies = 10;
  std::uint64_t heldout_seed_base = 900000;
  double eval_task_target = 0.0;
  double return_threshold_fraction = 0.6;  // of expert return, for data-efficiency
};

struct IoPaths {
  std::string dataset;      // input dataset override
  std::string checkpoint;   // input checkpoint override
};

// A RunConfig plus the code version determines every output. Unknown keys are
// rejected so the config file remains a faithful experimental record.
struct RunConfig {
  std::uint64_t master_seed = 0;
  std::string out_dir = "runs/out";
  EnvConfig env;
  TrajectoryCodec codec = TrajectoryCodec::defaults();
  std::string model_kind = "tdm";  // tdm | mlp | ground-truth
  TransformerConfig transformer;
  MlpBaselineConfig mlp;
  DecodeMode decode;
  TrainSettings train;
  PlannerConfig planner;
  EvalSettings eval;
  RegimeSettings regime;
  IoPaths io;
  std::uint64_t config_hash = 0;

  static RunConfig from_document(TomlDocument doc);
  static RunConfig from_file(const std::filesystem::path& path,
                             const std::vector<std::string>& dotted_overrides);
  nlohmann::json to_json() const;
};

}  // namespace tdm
