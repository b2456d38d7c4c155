#include "tdm/config.hpp"

#include "tdm/serialize.hpp"

namespace tdm {

std::unique_ptr<Env> make_env(const EnvConfig& cfg) {
  if (cfg.kind == "morphology") {
    const MorphologyDescriptor desc = sample_morphology(
        family_from_string(cfg.family), cfg.morphology_seed, cfg.dof_min, cfg.dof_max);
    MorphologyEnvOptions opts;
    opts.target_velocity = cfg.target_velocity;
    opts.episode_steps = cfg.episode_steps;
    opts.observe_body_velocity = cfg.observe_body_velocity;
    return make_morphology_env(desc, opts);
  }
  return make_fixed_env(cfg.kind, cfg.target_velocity, cfg.episode_steps);
}

namespace {

std::vector<int> to_ints(const std::vector<std::int64_t>& in) {
  return std::vector<int>(in.begin(), in.end());
}

std::vector<double> get_double_array(const TomlDocument& doc, const std::string& path,
                                     std::vector<double> fallback) {
  if (!doc.contains(path)) return fallback;
  const TomlValue& v = doc.at(path);
  require(v.kind == TomlValue::Kind::Array, "config: '" + path + "' must be an array");
  std::vector<double> out;
  for (const auto& item : v.array) out.push_back(item.as_number());
  return out;
}

}  // namespace

RunConfig RunConfig::from_document(TomlDocument doc) {
  RunConfig c;
  c.master_seed = static_cast<std::uint64_t>(doc.get_int("master_seed", 0));
  c.out_dir = doc.get_string("out_dir", c.out_dir);

  c.env.kind = doc.get_string("env.kind", c.env.kind);
  c.env.family = doc.get_string("env.family", c.env.family);
  c.env.morphology_seed = static_cast<std::uint64_t>(doc.get_int("env.morphology_seed", 0));
  c.env.dof_min = static_cast<int>(doc.get_int("env.dof_min", c.env.dof_min));
  c.env.dof_max = static_cast<int>(doc.get_int("env.dof_max", c.env.dof_max));
  c.env.target_velocity = doc.get_double("env.target_velocity", c.env.target_velocity);
  c.env.episode_steps = static_cast<int>(doc.get_int("env.episode_steps", c.env.episode_steps));
  c.env.observe_body_velocity =
      doc.get_bool("env.observe_body_velocity", c.env.observe_body_velocity);

  const int num_bins = static_cast<int>(doc.get_int("tokenizer.num_bins", 256));
  const double mu = doc.get_double("tokenizer.companding_mu", 100.0);
  c.codec = TrajectoryCodec::defaults(doc.get_double("tokenizer.obs_clip", 5.0));
  c.codec.action.clip_range = doc.get_double("tokenizer.action_clip", 1.0);
  c.codec.reward.clip_range = doc.get_double("tokenizer.reward_clip", 1.0);
  for (TokenizerSpec* spec : {&c.codec.obs, &c.codec.action, &c.codec.reward}) {
    spec->num_bins = num_bins;
    spec->companding_mu = mu;
    spec->separator_token = num_bins;
    spec->vocab_size = num_bins + 1;
  }
  c.codec.validate();

  c.model_kind = doc.get_string("model.kind", c.model_kind);
  require(c.model_kind == "tdm" || c.model_kind == "mlp" || c.model_kind == "ground-truth",
          "config: model.kind must be tdm, mlp or ground-truth");
  c.transformer.vocab_size = c.codec.vocab_size();
  c.transformer.num_layers = static_cast<int>(doc.get_int("model.layers", 4));
  c.transformer.num_heads = static_cast<int>(doc.get_int("model.heads", 4));
  c.transformer.model_width = static_cast<int>(doc.get_int("model.width", 128));
  c.transformer.feedforward_width = static_cast<int>(doc.get_int("model.feedforward", 512));
  c.transformer.context_window = static_cast<int>(doc.get_int("model.context_window", 256));
  c.transformer.validate();
  c.decode.greedy = doc.get_bool("model.greedy", false);
  c.decode.temperature = doc.get_double("model.temperature", 1.0);

  {
    std::vector<std::int64_t> hidden_default(c.mlp.hidden.begin(), c.mlp.hidden.end());
    c.mlp.hidden = to_ints(doc.get_int_array("model.hidden", hidden_default));
    c.mlp.input_mode = mlp_input_mode_from_string(doc.get_string("model.input_mode", "raw"));
    c.mlp.output_mode =
        mlp_output_mode_from_string(doc.get_string("model.output_mode", "absolute"));
    c.mlp.embedding_width = static_cast<int>(doc.get_int("model.embedding_width", 64));
    c.mlp.validate();
  }

  c.train.steps = static_cast<int>(doc.get_int("train.steps", c.train.steps));
  c.train.batch = static_cast<int>(doc.get_int("train.batch", c.train.batch));
  c.train.learning_rate = doc.get_double("train.learning_rate", c.train.learning_rate);
  c.train.clip_norm = doc.get_double("train.clip_norm", c.train.clip_norm);
  c.train.episodes = static_cast<int>(doc.get_int("train.episodes", c.train.episodes));
  c.train.exploration_noise =
      doc.get_double("train.exploration_noise", c.train.exploration_noise);

  c.planner.num_candidates = static_cast<int>(doc.get_int("planner.K", 128));
  c.planner.horizon = static_cast<int>(doc.get_int("planner.N", 20));
  c.planner.noise_drift = doc.get_double("planner.drift", 0.0);
  c.planner.noise_variance = doc.get_double("planner.variance", 2.0);
  c.planner.proposal_sigma = doc.get_double("planner.proposal_sigma", -1.0);
  c.planner.samples_per_candidate =
      static_cast<int>(doc.get_int("planner.samples_per_candidate", 1));
  c.planner.validate();

  c.eval.episodes = static_cast<int>(doc.get_int("eval.episodes", c.eval.episodes));
  {
    std::vector<std::int64_t> hd(c.eval.horizon_grid.begin(), c.eval.horizon_grid.end());
    c.eval.horizon_grid = to_ints(doc.get_int_array("eval.horizon_grid", hd));
    std::vector<std::int64_t> wd(c.eval.window_grid.begin(), c.eval.window_grid.end());
    c.eval.window_grid = to_ints(doc.get_int_array("eval.window_grid", wd));
    c.eval.sigma_grid = get_double_array(doc, "eval.sigma_grid", c.eval.sigma_grid);
    std::vector<std::int64_t> pd(c.eval.pred_horizons.begin(), c.eval.pred_horizons.end());
    c.eval.pred_horizons = to_ints(doc.get_int_array("eval.pred_horizons", pd));
  }
  c.eval.pred_runs = static_cast<int>(doc.get_int("eval.pred_runs", c.eval.pred_runs));

  c.regime.kind = doc.get_string("regime.kind", c.regime.kind);
  require(c.regime.kind == "specialist" || c.regime.kind == "fewshot" ||
              c.regime.kind == "zeroshot" || c.regime.kind == "crosstask",
          "config: regime.kind must be specialist, fewshot, zeroshot or crosstask");
  {
    std::vector<std::int64_t> fd(c.regime.finetune_sizes.begin(), c.regime.finetune_sizes.end());
    c.regime.finetune_sizes = to_ints(doc.get_int_array("regime.finetune_sizes", fd));
    std::vector<std::int64_t> ed(c.regime.eval_points_percent.begin(),
                                 c.regime.eval_points_percent.end());
    c.regime.eval_points_percent = to_ints(doc.get_int_array("regime.eval_points", ed));
  }
  c.regime.finetune_subsets =
      static_cast<int>(doc.get_int("regime.finetune_subsets", c.regime.finetune_subsets));
  c.regime.finetune_steps_base =
      static_cast<int>(doc.get_int("regime.finetune_steps_base", c.regime.finetune_steps_base));
  c.regime.finetune_steps_per_episode = static_cast<int>(
      doc.get_int("regime.finetune_steps_per_episode", c.regime.finetune_steps_per_episode));
  c.regime.pretrain_family = doc.get_string("regime.pretrain_family", c.regime.pretrain_family);
  c.regime.pretrain_morphologies = static_cast<int>(
      doc.get_int("regime.pretrain_morphologies", c.regime.pretrain_morphologies));
  c.regime.pretrain_seed_base = static_cast<std::uint64_t>(
      doc.get_int("regime.pretrain_seed_base", c.regime.pretrain_seed_base));
  c.regime.pretrain_episodes_per_env = static_cast<int>(
      doc.get_int("regime.pretrain_episodes_per_env", c.regime.pretrain_episodes_per_env));
  c.regime.pretrain_fixed_envs =
      doc.get_string_array("regime.pretrain_fixed_envs", c.regime.pretrain_fixed_envs);
  c.regime.pretrain_fixed_episodes = static_cast<int>(
      doc.get_int("regime.pretrain_fixed_episodes", c.regime.pretrain_fixed_episodes));
  c.regime.pretrain_steps =
      static_cast<int>(doc.get_int("regime.pretrain_steps", c.regime.pretrain_steps));
  c.regime.heldout_morphologies = static_cast<int>(
      doc.get_int("regime.heldout_morphologies", c.regime.heldout_morphologies));
  c.regime.heldout_seed_base = static_cast<std::uint64_t>(
      doc.get_int("regime.heldout_seed_base", c.regime.heldout_seed_base));
  c.regime.eval_task_target =
      doc.get_double("regime.eval_task_target", c.regime.eval_task_target);
  c.regime.return_threshold_fraction = doc.get_double("regime.return_threshold_fraction",
                                                      c.regime.return_threshold_fraction);

  c.io.dataset = doc.get_string("io.dataset", "");
  c.io.checkpoint = doc.get_string("io.checkpoint", "");

  const auto leftover = doc.unconsumed();
  if (!leftover.empty())
    throw TdmError("config: unknown key '" + leftover.front() + "'");

  // Canonical fingerprint over the parsed view, not the raw text.
  c.config_hash = fnv1a64(c.to_json().dump());
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path,
                               const std::vector<std::string>& dotted_overrides) {
  TomlDocument doc = TomlDocument::parse(read_text(path));
  for (const auto& ov : dotted_overrides) {
    const auto eq = ov.find('=');
    require(eq != std::string::npos, "--set expects path=value, got '" + ov + "'");
    const std::string key = ov.substr(0, eq);
    std::string raw = ov.substr(eq + 1);
    // Bare words that are not numbers/bools/arrays are treated as strings.
    TomlValue v;
    try {
      v = TomlDocument::parse_value(raw);
    } catch (const TdmError&) {
      v.kind = TomlValue::Kind::String;
      v.str = raw;
    }
    doc.set(key, v);
  }
  return from_document(std::move(doc));
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["master_seed"] = master_seed;
  j["out_dir"] = out_dir;
  j["env"] = {{"kind", env.kind},
              {"family", env.family},
              {"morphology_seed", env.morphology_seed},
              {"dof_min", env.dof_min},
              {"dof_max", env.dof_max},
              {"target_velocity", env.target_velocity},
              {"episode_steps", env.episode_steps},
              {"observe_body_velocity", env.observe_body_velocity}};
  j["tokenizer"] = tdm::to_json(codec);
  j["model_kind"] = model_kind;
  j["transformer"] = tdm::to_json(transformer);
  j["mlp"] = tdm::to_json(mlp);
  j["decode"] = {{"greedy", decode.greedy}, {"temperature", decode.temperature}};
  j["train"] = {{"steps", train.steps},
                {"batch", train.batch},
                {"learning_rate", train.learning_rate},
                {"clip_norm", train.clip_norm},
                {"episodes", train.episodes},
                {"exploration_noise", train.exploration_noise}};
  j["planner"] = {{"K", planner.num_candidates},
                  {"N", planner.horizon},
                  {"drift", planner.noise_drift},
                  {"variance", planner.noise_variance},
                  {"proposal_sigma", planner.proposal_sigma},
                  {"samples_per_candidate", planner.samples_per_candidate}};
  j["eval"] = {{"episodes", eval.episodes},
               {"horizon_grid", eval.horizon_grid},
               {"window_grid", eval.window_grid},
               {"sigma_grid", eval.sigma_grid},
               {"pred_horizons", eval.pred_horizons},
               {"pred_runs", eval.pred_runs}};
  j["regime"] = {{"kind", regime.kind},
                 {"finetune_sizes", regime.finetune_sizes},
                 {"finetune_subsets", regime.finetune_subsets},
                 {"eval_points", regime.eval_points_percent},
                 {"finetune_steps_base", regime.finetune_steps_base},
                 {"finetune_steps_per_episode", regime.finetune_steps_per_episode},
                 {"pretrain_family", regime.pretrain_family},
                 {"pretrain_morphologies", regime.pretrain_morphologies},
                 {"pretrain_seed_base", regime.pretrain_seed_base},
                 {"pretrain_episodes_per_env", regime.pretrain_episodes_per_env},
                 {"pretrain_fixed_envs", regime.pretrain_fixed_envs},
                 {"pretrain_fixed_episodes", regime.pretrain_fixed_episodes},
                 {"pretrain_steps", regime.pretrain_steps},
                 {"heldout_morphologies", regime.heldout_morphologies},
                 {"heldout_seed_base", regime.heldout_seed_base},
                 {"eval_task_target", regime.eval_task_target},
                 {"return_threshold_fraction", regime.return_threshold_fraction}};
  j["io"] = {{"dataset", io.dataset}, {"checkpoint", io.checkpoint}};
  return j;
}

}  // namespace tdm
