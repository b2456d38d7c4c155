#pragma once

#include <optional>
#include <vector>

#include "tdm/expert.hpp"
#include "tdm/morphology.hpp"
#include "tdm/tokenizer.hpp"
#include "tdm/training.hpp"

namespace tdm {

// Episodes of raw trajectories plus everything needed to rebuild the
// generating environment. Token streams are always recomputed from this, never
// stored.
struct EpisodeDataset {
  EnvSpec env_spec;
  std::optional<MorphologyDescriptor> morphology;
  bool observe_body_velocity = false;
  std::uint64_t generation_seed = 0;
  double exploration_noise = 0.0;
  std::string policy_name;
  std::uint64_t config_hash = 0;
  std::vector<Trajectory> episodes;

  // Sum of post-action rewards per episode.
  std::vector<double> episode_returns() const;
  std::size_t transition_count() const;
  std::unique_ptr<Env> rebuild_env() const;
};

EpisodeDataset collect_dataset(Env& env, Policy& policy, int episodes, std::uint64_t seed,
                               double exploration_noise = 0.0);

void save_dataset(const EpisodeDataset& dataset, const std::filesystem::path& path);
EpisodeDataset load_dataset(const std::filesystem::path& path);

struct HistogramBin {
  double lo, hi;
  int count;
};
std::vector<HistogramBin> return_histogram(const std::vector<double>& returns, int bins);

TokenCorpus tokenize_dataset(const EpisodeDataset& dataset, const TrajectoryCodec& codec);

}  // namespace tdm
