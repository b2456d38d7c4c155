#include "tdm/serialize.hpp"

namespace tdm {

nlohmann::json to_json(const EnvSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["n"] = s.n;
  j["m"] = s.m;
  j["reward_from_obs"] = s.reward_from_obs;
  j["episode_steps"] = s.episode_steps;
  j["dt"] = s.dt;
  j["obs_clip"] = s.obs_clip;
  j["target_velocity"] = s.target_velocity;
  j["velocity_dims"] = s.velocity_dims;
  return j;
}

EnvSpec env_spec_from_json(const nlohmann::json& j) {
  EnvSpec s;
  s.name = j.at("name").get<std::string>();
  s.n = j.at("n").get<int>();
  s.m = j.at("m").get<int>();
  s.reward_from_obs = j.at("reward_from_obs").get<bool>();
  s.episode_steps = j.at("episode_steps").get<int>();
  s.dt = j.at("dt").get<double>();
  s.obs_clip = j.at("obs_clip").get<double>();
  s.target_velocity = j.at("target_velocity").get<double>();
  s.velocity_dims = j.at("velocity_dims").get<std::vector<int>>();
  return s;
}

nlohmann::json to_json(const MorphologyDescriptor& d) {
  nlohmann::json j;
  j["family"] = family_to_string(d.family);
  j["seed"] = d.seed;
  j["dof"] = d.dof;
  j["parent"] = d.parent;
  j["mass"] = d.mass;
  j["stiffness"] = d.stiffness;
  j["damping"] = d.damping;
  j["coupling"] = d.coupling;
  j["reaction"] = d.reaction;
  j["gain"] = d.gain;
  j["thrust_weight"] = d.thrust_weight;
  return j;
}

MorphologyDescriptor morphology_from_json(const nlohmann::json& j) {
  MorphologyDescriptor d;
  d.family = family_from_string(j.at("family").get<std::string>());
  d.seed = j.at("seed").get<std::uint64_t>();
  d.dof = j.at("dof").get<int>();
  d.parent = j.at("parent").get<std::vector<int>>();
  d.mass = j.at("mass").get<std::vector<double>>();
  d.stiffness = j.at("stiffness").get<std::vector<double>>();
  d.damping = j.at("damping").get<std::vector<double>>();
  d.coupling = j.at("coupling").get<std::vector<double>>();
  d.reaction = j.at("reaction").get<std::vector<double>>();
  d.gain = j.at("gain").get<std::vector<double>>();
  d.thrust_weight = j.at("thrust_weight").get<std::vector<double>>();
  d.validate();
  return d;
}

nlohmann::json to_json(const TokenizerSpec& s) {
  nlohmann::json j;
  j["num_bins"] = s.num_bins;
  j["companding_mu"] = s.companding_mu;
  j["clip_range"] = s.clip_range;
  j["separator_token"] = s.separator_token;
  j["vocab_size"] = s.vocab_size;
  return j;
}

TokenizerSpec tokenizer_spec_from_json(const nlohmann::json& j) {
  TokenizerSpec s;
  s.num_bins = j.at("num_bins").get<int>();
  s.companding_mu = j.at("companding_mu").get<double>();
  s.clip_range = j.at("clip_range").get<double>();
  s.separator_token = j.at("separator_token").get<int>();
  s.vocab_size = j.at("vocab_size").get<int>();
  s.validate();
  return s;
}

nlohmann::json to_json(const TrajectoryCodec& c) {
  nlohmann::json j;
  j["observation"] = to_json(c.obs);
  j["action"] = to_json(c.action);
  j["reward"] = to_json(c.reward);
  return j;
}

TrajectoryCodec codec_from_json(const nlohmann::json& j) {
  TrajectoryCodec c;
  c.obs = tokenizer_spec_from_json(j.at("observation"));
  c.action = tokenizer_spec_from_json(j.at("action"));
  c.reward = tokenizer_spec_from_json(j.at("reward"));
  c.validate();
  return c;
}

nlohmann::json to_json(const TransformerConfig& c) {
  nlohmann::json j;
  j["vocab_size"] = c.vocab_size;
  j["context_window"] = c.context_window;
  j["num_layers"] = c.num_layers;
  j["num_heads"] = c.num_heads;
  j["model_width"] = c.model_width;
  j["feedforward_width"] = c.feedforward_width;
  j["positional_encoding"] = c.positional_encoding;
  return j;
}

TransformerConfig transformer_config_from_json(const nlohmann::json& j) {
  TransformerConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.context_window = j.at("context_window").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.model_width = j.at("model_width").get<int>();
  c.feedforward_width = j.at("feedforward_width").get<int>();
  c.positional_encoding = j.at("positional_encoding").get<std::string>();
  c.validate();
  return c;
}

nlohmann::json to_json(const MlpBaselineConfig& c) {
  nlohmann::json j;
  j["hidden"] = c.hidden;
  j["input_mode"] = c.input_mode == MlpInputMode::Raw ? "raw" : "tokenized-embedded";
  switch (c.output_mode) {
    case MlpOutputMode::Absolute: j["output_mode"] = "absolute"; break;
    case MlpOutputMode::Delta: j["output_mode"] = "delta"; break;
    case MlpOutputMode::CategoricalTokens: j["output_mode"] = "categorical-tokens"; break;
  }
  j["embedding_width"] = c.embedding_width;
  return j;
}

MlpBaselineConfig mlp_config_from_json(const nlohmann::json& j) {
  MlpBaselineConfig c;
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.input_mode = mlp_input_mode_from_string(j.at("input_mode").get<std::string>());
  c.output_mode = mlp_output_mode_from_string(j.at("output_mode").get<std::string>());
  c.embedding_width = j.at("embedding_width").get<int>();
  c.validate();
  return c;
}

}  // namespace tdm
