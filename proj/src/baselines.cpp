#include "tdm/baselines.hpp"

#include <algorithm>

#include "tdm/autograd.hpp"

namespace tdm {

std::string mlp_variant_name(MlpInputMode in, MlpOutputMode out) {
  std::string name = in == MlpInputMode::Raw ? "raw" : "tokin";
  switch (out) {
    case MlpOutputMode::Absolute: name += "-abs"; break;
    case MlpOutputMode::Delta: name += "-delta"; break;
    case MlpOutputMode::CategoricalTokens: name += "-cat"; break;
  }
  return name;
}

MlpInputMode mlp_input_mode_from_string(const std::string& s) {
  if (s == "raw") return MlpInputMode::Raw;
  if (s == "tokenized-embedded") return MlpInputMode::TokenizedEmbedded;
  throw TdmError("unknown mlp input mode '" + s + "'");
}

MlpOutputMode mlp_output_mode_from_string(const std::string& s) {
  if (s == "absolute") return MlpOutputMode::Absolute;
  if (s == "delta") return MlpOutputMode::Delta;
  if (s == "categorical-tokens") return MlpOutputMode::CategoricalTokens;
  throw TdmError("unknown mlp output mode '" + s + "'");
}

std::vector<Transition> dataset_transitions(const EpisodeDataset& dataset) {
  std::vector<Transition> out;
  out.reserve(dataset.transition_count());
  for (const auto& traj : dataset.episodes)
    for (std::size_t t = 0; t < traj.actions.size(); ++t)
      out.push_back({traj.observations[t], traj.actions[t], traj.observations[t + 1]});
  return out;
}

namespace {

int input_slots(const EnvSpec& s) { return s.n + s.m; }

// Stacked per-slot embedding table: slot s, token t -> row s*bins + t.
std::vector<int> slot_ids(const Vecd& obs, const Vecd& action, const TrajectoryCodec& codec) {
  const int bins = codec.num_bins();
  std::vector<int> ids;
  ids.reserve(obs.size() + action.size());
  for (int i = 0; i < obs.size(); ++i)
    ids.push_back(static_cast<int>(i) * bins + encode_scalar(obs[i], codec.obs));
  for (int i = 0; i < action.size(); ++i)
    ids.push_back((static_cast<int>(obs.size()) + i) * bins +
                  encode_scalar(clip(action[i], -1.0, 1.0), codec.action));
  return ids;
}

}  // namespace

MlpModel::MlpModel(MlpBaselineConfig cfg, TrajectoryCodec codec, EnvSpec env_spec)
    : cfg_(std::move(cfg)), codec_(std::move(codec)), env_spec_(std::move(env_spec)) {
  cfg_.validate();
  codec_.validate();
  int in_width = cfg_.input_mode == MlpInputMode::Raw
                     ? env_spec_.n + env_spec_.m
                     : cfg_.embedding_width;
  const int out_width = cfg_.output_mode == MlpOutputMode::CategoricalTokens
                            ? env_spec_.n * codec_.num_bins()
                            : env_spec_.n;
  if (cfg_.input_mode == MlpInputMode::TokenizedEmbedded)
    detail::push_tensor(params_, "embed.table", input_slots(env_spec_) * codec_.num_bins(),
                        cfg_.embedding_width);
  int prev = in_width;
  for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
    detail::push_tensor(params_, "layer" + std::to_string(i) + ".w", prev, cfg_.hidden[i]);
    detail::push_tensor(params_, "layer" + std::to_string(i) + ".b", 1, cfg_.hidden[i]);
    prev = cfg_.hidden[i];
  }
  detail::push_tensor(params_, "out.w", prev, out_width);
  detail::push_tensor(params_, "out.b", 1, out_width);
}

void MlpModel::init(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& t : params_.tensors) {
    if (t.name.ends_with(".b")) {
      t.value.setZero();
      continue;
    }
    const double scale = t.name == "embed.table" ? 0.1 : std::sqrt(2.0 / t.value.rows());
    for (int i = 0; i < t.value.rows(); ++i)
      for (int j = 0; j < t.value.cols(); ++j)
        t.value(i, j) = static_cast<float>(rng.normal(0.0, scale));
    t.moment1.setZero();
    t.moment2.setZero();
  }
  params_.step = 0;
}

Matd MlpModel::forward_batch(const Matd& obs, const Matd& actions) const {
  const int batch = static_cast<int>(obs.rows());
  std::size_t k = 0;
  Matf x;
  if (cfg_.input_mode == MlpInputMode::Raw) {
    x.resize(batch, env_spec_.n + env_spec_.m);
    x.leftCols(env_spec_.n) = obs.cast<float>();
    x.rightCols(env_spec_.m) = actions.cast<float>();
  } else {
    const auto& table = params_.tensors[k++].value;
    x = Matf::Zero(batch, cfg_.embedding_width);
    for (int r = 0; r < batch; ++r)
      for (int id : slot_ids(obs.row(r).transpose(), actions.row(r).transpose(), codec_))
        x.row(r) += table.row(id);
  }
  for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
    const auto& w = params_.tensors[k++].value;
    const auto& b = params_.tensors[k++].value;
    Matf h = x * w;
    h.rowwise() += b.row(0);
    x = (0.5f * h.array() *
         (1.0f + (0.7978845608028654f * (h.array() + 0.044715f * h.array().cube())).tanh()))
            .matrix();
  }
  const auto& w = params_.tensors[k++].value;
  const auto& b = params_.tensors[k++].value;
  Matf y = x * w;
  y.rowwise() += b.row(0);

  Matd out(batch, env_spec_.n);
  switch (cfg_.output_mode) {
    case MlpOutputMode::Absolute:
      out = y.cast<double>();
      break;
    case MlpOutputMode::Delta:
      out = obs + y.cast<double>();
      break;
    case MlpOutputMode::CategoricalTokens: {
      const int bins = codec_.num_bins();
      for (int r = 0; r < batch; ++r)
        for (int d = 0; d < env_spec_.n; ++d) {
          int best = 0;
          float best_v = y(r, d * bins);
          for (int t = 1; t < bins; ++t)
            if (y(r, d * bins + t) > best_v) {
              best_v = y(r, d * bins + t);
              best = t;
            }
          out(r, d) = decode_token(best, codec_.obs);
        }
      break;
    }
  }
  return out;
}

Vecd MlpModel::predict(const Vecd& obs, const Vecd& action) const {
  require(obs.size() == env_spec_.n && action.size() == env_spec_.m,
          "mlp predict: dimension mismatch");
  return forward_batch(obs.transpose(), action.transpose()).row(0).transpose();
}

Matd MlpModel::rollout(const Vecd& obs, const Matd& actions) const {
  const int horizon = static_cast<int>(actions.rows());
  Matd out(horizon, env_spec_.n);
  Vecd current = obs;
  for (int j = 0; j < horizon; ++j) {
    current = predict(current, actions.row(j).transpose());
    out.row(j) = current.transpose();
  }
  return out;
}

MlpModel::TrainResultMlp MlpModel::train(const std::vector<Transition>& transitions,
                                         int steps, int batch, std::uint64_t seed,
                                         const AdamConfig& adam) {
  require(!transitions.empty(), "mlp train: empty dataset");
  TrainResultMlp result;
  Rng sampler(derive_seed(seed, "mlp.sampler"));
  const int bins = codec_.num_bins();

  for (int step = 0; step < steps; ++step) {
    Matd obs(batch, env_spec_.n), act(batch, env_spec_.m), next(batch, env_spec_.n);
    for (int r = 0; r < batch; ++r) {
      const auto& tr = transitions[sampler.below(transitions.size())];
      obs.row(r) = tr.obs.transpose();
      act.row(r) = tr.action.transpose();
      next.row(r) = tr.next_obs.transpose();
    }

    Tape<float> tape;
    std::vector<int> param_ids;
    for (const auto& t : params_.tensors) param_ids.push_back(tape.input(t.value));
    std::size_t k = 0;
    int x;
    if (cfg_.input_mode == MlpInputMode::Raw) {
      Matf xin(batch, env_spec_.n + env_spec_.m);
      xin.leftCols(env_spec_.n) = obs.cast<float>();
      xin.rightCols(env_spec_.m) = act.cast<float>();
      x = tape.input(std::move(xin));
    } else {
      std::vector<std::vector<int>> ids(batch);
      for (int r = 0; r < batch; ++r)
        ids[r] = slot_ids(obs.row(r).transpose(), act.row(r).transpose(), codec_);
      x = tape.embed_bag(param_ids[k++], ids);
    }
    for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
      const int w = param_ids[k++];
      const int b = param_ids[k++];
      x = tape.gelu(tape.add_row(tape.matmul(x, w), b));
    }
    const int y = tape.add_row(tape.matmul(x, param_ids[k++]), param_ids[k++]);

    int loss;
    if (cfg_.output_mode == MlpOutputMode::CategoricalTokens) {
      std::vector<std::vector<int>> targets(batch, std::vector<int>(env_spec_.n));
      for (int r = 0; r < batch; ++r)
        for (int d = 0; d < env_spec_.n; ++d)
          targets[r][d] = encode_scalar(next(r, d), codec_.obs);
      loss = tape.grouped_xent_sum(y, targets, bins);
    } else {
      Matf target = cfg_.output_mode == MlpOutputMode::Delta ? (next - obs).cast<float>()
                                                             : next.cast<float>();
      loss = tape.squared_error_sum(y, target);
    }
    tape.backward(loss);

    const double mean_loss = tape.value(loss)(0, 0) / batch;
    if (!std::isfinite(mean_loss))
      throw TdmError("mlp train: non-finite loss at batch " + std::to_string(step));
    std::vector<Matf> grads(params_.tensors.size());
    const float inv = 1.0f / static_cast<float>(batch);
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] = tape.grad(param_ids[i]) * inv;
    adam_step(params_, grads, adam);

    if (step % 50 == 0 || step + 1 == steps) result.curve.push_back({params_.step, mean_loss});
    result.final_loss = mean_loss;
  }
  params_.check_finite();
  return result;
}

namespace {

class MlpSession : public RolloutSession {
 public:
  MlpSession(const MlpModel& model, const Matd& obs0, int lanes)
      : model_(model), current_(lanes, model.obs_dim()) {
    if (obs0.rows() == 1)
      current_.rowwise() = obs0.row(0);
    else
      current_ = obs0;
  }

  int lanes() const override { return static_cast<int>(current_.rows()); }

  RolloutStepResult step(const Matd& actions) override {
    RolloutStepResult out;
    out.next_obs = model_.forward_batch(current_, actions);
    out.alive.assign(lanes(), 1);
    for (int b = 0; b < lanes(); ++b) {
      if (!out.next_obs.row(b).allFinite()) {
        out.alive[b] = 0;
        out.next_obs.row(b).setZero();
      }
    }
    current_ = out.next_obs;
    return out;
  }

 private:
  const MlpModel& model_;
  Matd current_;
};

}  // namespace

std::unique_ptr<RolloutSession> MlpModel::make_session(const Matd& obs0, const Vecd&,
                                                       int lanes, int, std::uint64_t,
                                                       int) const {
  return std::make_unique<MlpSession>(*this, obs0, lanes);
}

}  // namespace tdm
