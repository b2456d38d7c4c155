#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tdm/env.hpp"

namespace tdm {

enum class MorphologyFamily { Line, Chain, Bush, Tree };

MorphologyFamily family_from_string(const std::string& s);
std::string family_to_string(MorphologyFamily f);

// One procedurally generated articulated system: a rooted tree of links with
// per-link physical coefficients, all a deterministic function of
// (family, seed).
struct MorphologyDescriptor {
  MorphologyFamily family = MorphologyFamily::Chain;
  std::uint64_t seed = 0;
  int dof = 0;
  std::vector<int> parent;       // parent link index, -1 for the root
  std::vector<double> mass;      // mass-like
  std::vector<double> stiffness;
  std::vector<double> damping;
  std::vector<double> coupling;  // edge strength to parent
  std::vector<double> reaction;  // asymmetry of the back-reaction on the parent
  std::vector<double> gain;      // actuation gain
  std::vector<double> thrust_weight;

  void validate() const;
  bool is_path() const;
  // Structural generality: a path is a valid chain, any chain a valid bush,
  // any bush a valid tree (all are parent[i] < i rooted trees).
  bool valid_as(MorphologyFamily f) const;
};

MorphologyDescriptor sample_morphology(MorphologyFamily family, std::uint64_t seed);
MorphologyDescriptor sample_morphology(MorphologyFamily family, std::uint64_t seed,
                                       int dof_min, int dof_max);

struct MorphologyEnvOptions {
  double target_velocity = 1.0;
  int episode_steps = 200;
  // Appends the body velocity to the observation and exposes R(o); used by
  // cross-task runs that plan with a different target on the same dynamics.
  bool observe_body_velocity = false;
};

// Damped, nonlinearly coupled oscillators over the sampled tree. Links paddle:
// positive joint velocity produces forward thrust, a drag-limited body
// velocity integrates it, and the reward tracks the target velocity. The body
// velocity is hidden unless observe_body_velocity is set, so reward prediction
// genuinely requires history.
std::unique_ptr<Env> make_morphology_env(const MorphologyDescriptor& desc,
                                         const MorphologyEnvOptions& opts = {});

}  // namespace tdm
