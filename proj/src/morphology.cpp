#include "tdm/morphology.hpp"

#include <algorithm>
#include <cmath>

#include "tdm/rng.hpp"

namespace tdm {

MorphologyFamily family_from_string(const std::string& s) {
  if (s == "line") return MorphologyFamily::Line;
  if (s == "chain") return MorphologyFamily::Chain;
  if (s == "bush") return MorphologyFamily::Bush;
  if (s == "tree") return MorphologyFamily::Tree;
  throw TdmError("unknown morphology family '" + s + "'");
}

std::string family_to_string(MorphologyFamily f) {
  switch (f) {
    case MorphologyFamily::Line: return "line";
    case MorphologyFamily::Chain: return "chain";
    case MorphologyFamily::Bush: return "bush";
    case MorphologyFamily::Tree: return "tree";
  }
  return "?";
}

void MorphologyDescriptor::validate() const {
  require(dof >= 1, "morphology: dof must be positive");
  require(static_cast<int>(parent.size()) == dof, "morphology: parent size mismatch");
  require(parent[0] == -1, "morphology: link 0 must be the root");
  for (int i = 1; i < dof; ++i)
    require(parent[i] >= 0 && parent[i] < i, "morphology: parents must precede children");
  for (const auto* v : {&mass, &stiffness, &damping, &coupling, &reaction, &gain,
                        &thrust_weight})
    require(static_cast<int>(v->size()) == dof, "morphology: coefficient size mismatch");
}

bool MorphologyDescriptor::is_path() const {
  for (int i = 1; i < dof; ++i)
    if (parent[i] != i - 1) return false;
  return true;
}

bool MorphologyDescriptor::valid_as(MorphologyFamily f) const {
  // Every descriptor is a rooted tree with parent[i] < i. Line and Chain
  // require a path; Bush and Tree accept any such tree.
  switch (f) {
    case MorphologyFamily::Line:
    case MorphologyFamily::Chain:
      return is_path();
    case MorphologyFamily::Bush:
    case MorphologyFamily::Tree:
      return true;
  }
  return false;
}

MorphologyDescriptor sample_morphology(MorphologyFamily family, std::uint64_t seed,
                                       int dof_min, int dof_max) {
  require(dof_min >= 1 && dof_max >= dof_min, "sample_morphology: bad dof range");
  Rng rng(derive_seed(seed, "morphology", static_cast<std::uint64_t>(family)));
  MorphologyDescriptor d;
  d.family = family;
  d.seed = seed;
  d.dof = dof_min + static_cast<int>(rng.below(dof_max - dof_min + 1));
  d.parent.assign(d.dof, -1);

  // Limb structure. Line grows a single limb link by link; chain keeps a path
  // of limbs of 1-2 links with one of 5 attachment directions per limb; bush
  // fills every link of a limb before descending; tree attaches anywhere.
  std::vector<double> direction(d.dof, 0.0);
  switch (family) {
    case MorphologyFamily::Line:
      for (int i = 1; i < d.dof; ++i) {
        d.parent[i] = i - 1;
        direction[i] = rng.uniform(0.0, 1.0);  // rotation axis draw
      }
      break;
    case MorphologyFamily::Chain: {
      int i = 1;
      while (i < d.dof) {
        const int limb = 1 + static_cast<int>(rng.below(2));
        const double dir = static_cast<double>(rng.below(5)) / 5.0;
        for (int j = 0; j < limb && i < d.dof; ++j, ++i) {
          d.parent[i] = i - 1;
          direction[i] = dir;
        }
      }
      break;
    }
    case MorphologyFamily::Bush: {
      // breadth-first: attach 1-3 children per open link in order
      std::vector<int> frontier = {0};
      int i = 1;
      std::size_t f = 0;
      while (i < d.dof) {
        const int at = frontier[std::min(f, frontier.size() - 1)];
        const int kids = 1 + static_cast<int>(rng.below(3));
        for (int c = 0; c < kids && i < d.dof; ++c, ++i) {
          d.parent[i] = at;
          direction[i] = static_cast<double>(rng.below(5)) / 5.0;
          frontier.push_back(i);
        }
        ++f;
      }
      break;
    }
    case MorphologyFamily::Tree:
      for (int i = 1; i < d.dof; ++i) {
        d.parent[i] = static_cast<int>(rng.below(i));
        direction[i] = static_cast<double>(rng.below(6)) / 6.0;
      }
      break;
  }

  d.mass.resize(d.dof);
  d.stiffness.resize(d.dof);
  d.damping.resize(d.dof);
  d.coupling.resize(d.dof);
  d.reaction.resize(d.dof);
  d.gain.resize(d.dof);
  d.thrust_weight.resize(d.dof);
  double weight_sum = 0.0;
  for (int i = 0; i < d.dof; ++i) {
    d.mass[i] = rng.uniform(0.8, 1.5);
    d.stiffness[i] = rng.uniform(2.0, 6.0);
    d.damping[i] = rng.uniform(0.2, 0.5);
    d.coupling[i] = rng.uniform(0.5, 2.0);
    d.reaction[i] = 0.6 + 0.8 * direction[i];
    d.gain[i] = rng.uniform(1.5, 3.0);
    d.thrust_weight[i] = rng.uniform(0.3, 1.0);
    weight_sum += d.thrust_weight[i];
  }
  // Total paddle authority is held constant across morphologies so the target
  // velocity stays reachable regardless of dof.
  for (int i = 0; i < d.dof; ++i) d.thrust_weight[i] *= 3.0 / weight_sum;
  d.validate();
  return d;
}

MorphologyDescriptor sample_morphology(MorphologyFamily family, std::uint64_t seed) {
  return sample_morphology(family, seed, 4, 20);
}

namespace {

// State layout: [q (dof), qdot (dof), v_body].
class MorphologyEnv : public Env {
 public:
  MorphologyEnv(MorphologyDescriptor desc, const MorphologyEnvOptions& opts)
      : Env(make_spec(desc, opts)), d_(std::move(desc)), observe_v_(opts.observe_body_velocity) {}

  std::unique_ptr<Env> clone() const override { return std::make_unique<MorphologyEnv>(*this); }

  double reward_of_obs(const Vecd& obs) const override {
    require(observe_v_, "morphology env: reward is not observable here");
    return velocity_reward_kernel(obs[spec_.n - 1] * 2.0, spec_.target_velocity);
  }

  const MorphologyDescriptor& descriptor() const { return d_; }

 protected:
  Vecd initial_state(std::uint64_t seed) const override {
    Rng rng(seed);
    Vecd s = Vecd::Zero(2 * d_.dof + 1);
    for (int i = 0; i < d_.dof; ++i) s[i] = rng.uniform(-0.3, 0.3);
    for (int i = 0; i < d_.dof; ++i) s[d_.dof + i] = rng.uniform(-0.1, 0.1);
    return s;
  }

  Vecd dynamics(const Vecd& s, const Vecd& a) const override {
    const int k = d_.dof;
    const auto q = s.head(k);
    const auto qd = s.segment(k, k);
    const double v = s[2 * k];

    Vecd acc(k);
    for (int i = 0; i < k; ++i) {
      double f = -d_.stiffness[i] * q[i] - d_.damping[i] * qd[i] + d_.gain[i] * a[i];
      if (d_.parent[i] >= 0) f += d_.coupling[i] * std::sin(q[d_.parent[i]] - q[i]);
      for (int c = 0; c < k; ++c)
        if (d_.parent[c] == i)
          f -= d_.reaction[c] * d_.coupling[c] * std::sin(q[i] - q[c]);
      acc[i] = f / d_.mass[i];
    }
    double thrust = 0.0;
    for (int i = 0; i < k; ++i) thrust += d_.thrust_weight[i] * std::max(qd[i], 0.0);

    Vecd next(2 * k + 1);
    next.segment(k, k) = qd + spec_.dt * acc;
    next.head(k) = q + spec_.dt * next.segment(k, k);
    next[2 * k] = v + spec_.dt * (thrust - kDrag * v) / kBodyMass;
    return next;
  }

  Vecd observe_state(const Vecd& s) const override {
    const int k = d_.dof;
    Vecd o(spec_.n);
    o.head(k) = s.head(k);
    o.segment(k, k) = s.segment(k, k) / 2.0;
    for (int i = 0; i < k; ++i)
      o[2 * k + i] = d_.parent[i] >= 0 ? std::sin(s[d_.parent[i]] - s[i]) : 0.0;
    if (observe_v_) o[spec_.n - 1] = s[2 * k] / 2.0;
    return o;
  }

  double reward_state(const Vecd& s) const override {
    return velocity_reward_kernel(s[2 * d_.dof], spec_.target_velocity);
  }

 private:
  static constexpr double kDrag = 1.0;
  static constexpr double kBodyMass = 1.5;

  static EnvSpec make_spec(const MorphologyDescriptor& d, const MorphologyEnvOptions& opts) {
    d.validate();
    EnvSpec spec;
    spec.name = family_to_string(d.family) + "-" + std::to_string(d.seed) + "-dof" +
                std::to_string(d.dof);
    spec.n = 3 * d.dof + (opts.observe_body_velocity ? 1 : 0);
    spec.m = d.dof;
    spec.reward_from_obs = opts.observe_body_velocity;
    spec.episode_steps = opts.episode_steps;
    spec.target_velocity = opts.target_velocity;
    for (int i = 0; i < d.dof; ++i) spec.velocity_dims.push_back(d.dof + i);
    if (opts.observe_body_velocity) spec.velocity_dims.push_back(spec.n - 1);
    return spec;
  }

  MorphologyDescriptor d_;
  bool observe_v_;
};

}  // namespace

std::unique_ptr<Env> make_morphology_env(const MorphologyDescriptor& desc,
                                         const MorphologyEnvOptions& opts) {
  return std::make_unique<MorphologyEnv>(desc, opts);
}

}  // namespace tdm
