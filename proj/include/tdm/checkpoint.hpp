#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "tdm/transformer.hpp"

namespace tdm {

// Named-tensor checkpoint: a config header (model kind plus its full JSON
// config), parameter tensors with optimizer moments in declared order, and the
// training-step counter. Loading validates names and shapes against the
// expected parameter layout and refuses on any mismatch.
struct CheckpointInfo {
  std::string model_kind;
  nlohmann::json config;
  std::int64_t step = 0;
  std::uint64_t config_hash = 0;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& model_kind,
                     const nlohmann::json& config, const ModelParameters<float>& params,
                     std::uint64_t config_hash);

CheckpointInfo peek_checkpoint(const std::filesystem::path& path);

// params must already have the expected layout (from the model config); values
// and moments are filled in.
CheckpointInfo load_checkpoint(const std::filesystem::path& path,
                               const std::string& expected_kind,
                               ModelParameters<float>& params);

}  // namespace tdm
