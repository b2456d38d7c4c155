#pragma once

#include "json.hpp"
#include "tdm/baselines.hpp"
#include "tdm/env.hpp"
#include "tdm/morphology.hpp"
#include "tdm/tokenizer.hpp"
#include "tdm/transformer.hpp"

namespace tdm {

nlohmann::json to_json(const EnvSpec& s);
EnvSpec env_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MorphologyDescriptor& d);
MorphologyDescriptor morphology_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TokenizerSpec& s);
TokenizerSpec tokenizer_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrajectoryCodec& c);
TrajectoryCodec codec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TransformerConfig& c);
TransformerConfig transformer_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MlpBaselineConfig& c);
MlpBaselineConfig mlp_config_from_json(const nlohmann::json& j);

}  // namespace tdm
