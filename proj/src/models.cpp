#include "tdm/model_iface.hpp"

namespace tdm {

namespace {

class GroundTruthSession : public RolloutSession {
 public:
  GroundTruthSession(const Env& env, const EnvState& start, int lanes) {
    lanes_.reserve(lanes);
    for (int b = 0; b < lanes; ++b) {
      lanes_.push_back(env.clone());
      lanes_.back()->restore(start);
    }
  }

  int lanes() const override { return static_cast<int>(lanes_.size()); }

  RolloutStepResult step(const Matd& actions) override {
    const int n = lanes_.front()->spec().n;
    RolloutStepResult out;
    out.next_obs.resize(lanes(), n);
    out.rewards.resize(lanes());
    out.alive.assign(lanes(), 1);
    for (int b = 0; b < lanes(); ++b) {
      try {
        out.rewards[b] = lanes_[b]->step(actions.row(b).transpose());
        out.next_obs.row(b) = lanes_[b]->observe().transpose();
      } catch (const TdmError&) {
        out.alive[b] = 0;
        out.next_obs.row(b).setZero();
        out.rewards[b] = 0.0;
      }
    }
    return out;
  }

 private:
  std::vector<std::unique_ptr<Env>> lanes_;
};

// The exact dynamics used as a model. Needs the true state, which it receives
// through observe_privileged; per-lane start observations are not supported
// because observations generally do not determine the hidden state.
class GroundTruthModel : public PlannerModel {
 public:
  explicit GroundTruthModel(const Env& env) : env_(env.clone()), state_(env.state()) {}

  std::string kind() const override { return "ground-truth"; }
  int obs_dim() const override { return env_->spec().n; }
  int action_dim() const override { return env_->spec().m; }
  bool provides_rewards() const override { return true; }

  void begin_episode() override {}
  void commit_step(const Vecd&, double, const Vecd&) override {}
  void observe_privileged(const EnvState& state) override { state_ = state; }

  std::unique_ptr<RolloutSession> make_session(const Matd& obs0, const Vecd&, int lanes,
                                               int, std::uint64_t, int) const override {
    require(obs0.rows() == 1,
            "ground-truth model: per-lane start observations are not supported");
    return std::make_unique<GroundTruthSession>(*env_, state_, lanes);
  }

 private:
  std::unique_ptr<Env> env_;
  EnvState state_;
};

}  // namespace

std::unique_ptr<PlannerModel> make_ground_truth_model(const Env& env) {
  return std::make_unique<GroundTruthModel>(env);
}

}  // namespace tdm
