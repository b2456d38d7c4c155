#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tdm/common.hpp"
#include "tdm/env.hpp"

namespace tdm {

// One step of imagined rollout across a batch of lanes. rewards is empty when
// the model does not predict rewards. A dead lane (non-finite prediction)
// keeps producing rows but its alive flag is cleared; the planner scores it
// -inf instead of crashing.
struct RolloutStepResult {
  Matd next_obs;                  // lanes x n
  Vecd rewards;                   // lanes, or empty
  std::vector<std::uint8_t> alive;
};

class RolloutSession {
 public:
  virtual ~RolloutSession() = default;
  virtual int lanes() const = 0;
  virtual RolloutStepResult step(const Matd& actions) = 0;  // lanes x m

  // Proposal support: mean actions conditioned on each lane's imagined state.
  virtual bool can_propose() const { return false; }
  virtual Matd propose_actions() {
    throw TdmError("this model cannot act as a proposal policy");
  }
};

// Shared contract between the planner and every dynamics model (sequence
// model, MLP baselines, ground truth). Sessions are created per evaluation
// chunk and may run concurrently; they hold an immutable snapshot of the
// model's episode history.
class PlannerModel {
 public:
  virtual ~PlannerModel() = default;
  virtual std::string kind() const = 0;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual bool provides_rewards() const = 0;

  virtual void begin_episode() = 0;
  // Realized environment step, appended after the action was executed.
  virtual void commit_step(const Vecd& obs, double reward, const Vecd& action) = 0;
  // Oracle models track the true state; learned models ignore this.
  virtual void observe_privileged(const EnvState& state) { (void)state; }

  // obs0 is 1 x n (broadcast to all lanes) or lanes x n; reward0 likewise 1 or
  // lanes entries. lane_offset makes per-lane sampling streams independent of
  // how lanes are chunked. horizon_steps lets implementations budget their
  // context before the rollout starts.
  virtual std::unique_ptr<RolloutSession> make_session(const Matd& obs0, const Vecd& reward0,
                                                       int lanes, int lane_offset,
                                                       std::uint64_t seed,
                                                       int horizon_steps) const = 0;
};

// The environment itself, used as an oracle dynamics model. Tracks the true
// state via observe_privileged and rolls exact copies per lane.
std::unique_ptr<PlannerModel> make_ground_truth_model(const Env& env);

}  // namespace tdm
