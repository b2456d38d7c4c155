#include "tdm/dataset.hpp"

#include <cstring>

#include "tdm/artifact.hpp"
#include "tdm/serialize.hpp"

namespace tdm {

// ---------------------------------------------------------------------------
// container helpers
// ---------------------------------------------------------------------------

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}
std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& at) {
  require(at + 4 <= in.size(), "artifact payload truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  at += 4;
  return v;
}
std::uint64_t get_u64(const std::vector<std::uint8_t>& in, std::size_t& at) {
  require(at + 8 <= in.size(), "artifact payload truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  at += 8;
  return v;
}
double get_f64(const std::vector<std::uint8_t>& in, std::size_t& at) {
  const std::uint64_t bits = get_u64(in, at);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_artifact(const std::filesystem::path& path, const ArtifactHeader& header,
                    const std::vector<std::uint8_t>& payload) {
  nlohmann::json j;
  j["kind"] = header.kind;
  j["version"] = header.version;
  j["meta"] = header.meta;
  j["payload_hash"] = hash_hex(hash_bytes(payload.data(), payload.size()));
  j["config_hash"] = hash_hex(header.config_hash);
  const std::string head = j.dump();

  std::vector<std::uint8_t> bytes;
  bytes.reserve(8 + 8 + head.size() + payload.size());
  bytes.insert(bytes.end(), kArtifactMagic, kArtifactMagic + 8);
  put_u64(bytes, head.size());
  bytes.insert(bytes.end(), head.begin(), head.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  write_bytes_atomic(path, bytes);
}

Artifact read_artifact(const std::filesystem::path& path, const std::string& expected_kind) {
  const auto bytes = read_bytes(path);
  require(bytes.size() >= 16, "artifact too short: " + path.string());
  require(std::memcmp(bytes.data(), kArtifactMagic, 8) == 0,
          "artifact magic mismatch in " + path.string());
  std::size_t at = 8;
  const std::uint64_t head_len = get_u64(bytes, at);
  require(at + head_len <= bytes.size(), "artifact header truncated in " + path.string());
  const std::string head(bytes.begin() + at, bytes.begin() + at + head_len);
  at += head_len;

  Artifact a;
  nlohmann::json j = nlohmann::json::parse(head);
  a.header.kind = j.at("kind").get<std::string>();
  a.header.version = j.at("version").get<int>();
  require(a.header.kind == expected_kind, "artifact kind mismatch: expected '" +
                                              expected_kind + "', found '" + a.header.kind +
                                              "' in " + path.string());
  require(a.header.version == 1, "artifact version " + std::to_string(a.header.version) +
                                     " not supported (expected 1) in " + path.string());
  a.header.meta = j.at("meta");
  a.payload.assign(bytes.begin() + at, bytes.end());
  const std::string expect_hash = j.at("payload_hash").get<std::string>();
  const std::string found_hash = hash_hex(hash_bytes(a.payload.data(), a.payload.size()));
  require(expect_hash == found_hash, "artifact payload hash mismatch in " + path.string() +
                                         ": expected " + expect_hash + ", found " +
                                         found_hash);
  a.header.payload_hash = hash_bytes(a.payload.data(), a.payload.size());
  a.header.config_hash =
      std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  return a;
}

// ---------------------------------------------------------------------------
// dataset
// ---------------------------------------------------------------------------

std::vector<double> EpisodeDataset::episode_returns() const {
  std::vector<double> out;
  out.reserve(episodes.size());
  for (const auto& traj : episodes) {
    double total = 0.0;
    for (std::size_t t = 1; t < traj.rewards.size(); ++t) total += traj.rewards[t];
    out.push_back(total);
  }
  return out;
}

std::size_t EpisodeDataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& traj : episodes) n += traj.actions.size();
  return n;
}

std::unique_ptr<Env> EpisodeDataset::rebuild_env() const {
  if (morphology) {
    MorphologyEnvOptions opts;
    opts.target_velocity = env_spec.target_velocity;
    opts.episode_steps = env_spec.episode_steps;
    opts.observe_body_velocity = observe_body_velocity;
    return make_morphology_env(*morphology, opts);
  }
  return make_fixed_env(env_spec.name, env_spec.target_velocity, env_spec.episode_steps);
}

EpisodeDataset collect_dataset(Env& env, Policy& policy, int episodes, std::uint64_t seed,
                               double exploration_noise) {
  require(episodes >= 1, "collect_dataset: need at least one episode");
  EpisodeDataset ds;
  ds.env_spec = env.spec();
  ds.generation_seed = seed;
  ds.exploration_noise = exploration_noise;
  ds.policy_name = policy.name();
  ds.episodes.resize(episodes);

  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t es = derive_seed(seed, "collect.episode", e);
    env.reset(derive_seed(es, "episode.init"));
    policy.begin_episode(es);
    Rng noise(derive_seed(es, "episode.noise"));
    Trajectory& traj = ds.episodes[e];
    try {
      traj.observations.push_back(env.observe());
      traj.rewards.push_back(env.reward());
      while (!env.done()) {
        Vecd a = policy.act(env);
        if (exploration_noise > 0.0)
          for (int d = 0; d < a.size(); ++d)
            a[d] = clip(a[d] + noise.normal(0.0, exploration_noise), -1.0, 1.0);
        a = a.cwiseMax(-1.0).cwiseMin(1.0);
        const double r = env.step(a);
        traj.actions.push_back(a);
        traj.observations.push_back(env.observe());
        traj.rewards.push_back(r);
      }
    } catch (const TdmError& err) {
      throw TdmError("collect_dataset: episode " + std::to_string(e) + ": " + err.what());
    }
    traj.validate();
  }
  return ds;
}

void save_dataset(const EpisodeDataset& dataset, const std::filesystem::path& path) {
  std::vector<std::uint8_t> payload;
  put_u32(payload, static_cast<std::uint32_t>(dataset.episodes.size()));
  for (const auto& traj : dataset.episodes) {
    put_u32(payload, static_cast<std::uint32_t>(traj.observations.size()));
    put_u32(payload, static_cast<std::uint32_t>(traj.actions.size()));
    for (const auto& o : traj.observations)
      for (int i = 0; i < o.size(); ++i) put_f64(payload, o[i]);
    for (const auto& a : traj.actions)
      for (int i = 0; i < a.size(); ++i) put_f64(payload, a[i]);
    for (double r : traj.rewards) put_f64(payload, r);
  }

  ArtifactHeader header;
  header.kind = "dataset";
  header.meta["env"] = to_json(dataset.env_spec);
  if (dataset.morphology) header.meta["morphology"] = to_json(*dataset.morphology);
  header.meta["observe_body_velocity"] = dataset.observe_body_velocity;
  header.meta["generation_seed"] = dataset.generation_seed;
  header.meta["exploration_noise"] = dataset.exploration_noise;
  header.meta["policy"] = dataset.policy_name;
  header.meta["episodes"] = dataset.episodes.size();
  header.config_hash = dataset.config_hash;
  write_artifact(path, header, payload);
}

EpisodeDataset load_dataset(const std::filesystem::path& path) {
  Artifact a = read_artifact(path, "dataset");
  EpisodeDataset ds;
  ds.env_spec = env_spec_from_json(a.header.meta.at("env"));
  if (a.header.meta.contains("morphology"))
    ds.morphology = morphology_from_json(a.header.meta.at("morphology"));
  ds.observe_body_velocity = a.header.meta.at("observe_body_velocity").get<bool>();
  ds.generation_seed = a.header.meta.at("generation_seed").get<std::uint64_t>();
  ds.exploration_noise = a.header.meta.at("exploration_noise").get<double>();
  ds.policy_name = a.header.meta.at("policy").get<std::string>();
  ds.config_hash = a.header.config_hash;

  std::size_t at = 0;
  const std::uint32_t count = get_u32(a.payload, at);
  ds.episodes.resize(count);
  for (auto& traj : ds.episodes) {
    const std::uint32_t n_obs = get_u32(a.payload, at);
    const std::uint32_t n_act = get_u32(a.payload, at);
    traj.observations.resize(n_obs);
    traj.actions.resize(n_act);
    traj.rewards.resize(n_obs);
    for (auto& o : traj.observations) {
      o.resize(ds.env_spec.n);
      for (int i = 0; i < o.size(); ++i) o[i] = get_f64(a.payload, at);
    }
    for (auto& act : traj.actions) {
      act.resize(ds.env_spec.m);
      for (int i = 0; i < act.size(); ++i) act[i] = get_f64(a.payload, at);
    }
    for (auto& r : traj.rewards) r = get_f64(a.payload, at);
    traj.validate();
  }
  require(at == a.payload.size(), "dataset payload has trailing bytes: " + path.string());
  return ds;
}

std::vector<HistogramBin> return_histogram(const std::vector<double>& returns, int bins) {
  require(bins >= 1, "histogram: bins must be positive");
  std::vector<HistogramBin> out;
  if (returns.empty()) return out;
  double lo = returns[0], hi = returns[0];
  for (double r : returns) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (hi <= lo) hi = lo + 1e-9;
  const double w = (hi - lo) / bins;
  out.resize(bins);
  for (int b = 0; b < bins; ++b) out[b] = {lo + b * w, lo + (b + 1) * w, 0};
  for (double r : returns) {
    int b = static_cast<int>((r - lo) / w);
    b = std::clamp(b, 0, bins - 1);
    out[b].count += 1;
  }
  return out;
}

TokenCorpus tokenize_dataset(const EpisodeDataset& dataset, const TrajectoryCodec& codec) {
  TokenCorpus corpus;
  corpus.episodes.reserve(dataset.episodes.size());
  for (const auto& traj : dataset.episodes)
    corpus.episodes.push_back(codec.encode_trajectory(traj).tokens);
  return corpus;
}

}  // namespace tdm
