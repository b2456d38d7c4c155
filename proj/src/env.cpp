#include "tdm/env.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "tdm/rng.hpp"

namespace tdm {

double velocity_reward_kernel(double v, double target) {
  const double d = std::abs(v - target);
  if (d <= 0.1) return 1.0;
  const double t = (d - 0.1) / 0.25;
  return std::exp(-0.5 * t * t);
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Point mass on a circular track. State (p, v); p wraps in [-10, 10).
// Observation [sin(pi p/10), cos(pi p/10), v]; reward tracks target velocity.
// ---------------------------------------------------------------------------
class PointMassEnv : public Env {
 public:
  PointMassEnv(double target_velocity, int episode_steps)
      : Env(make_spec(target_velocity, episode_steps)) {}

  std::unique_ptr<Env> clone() const override { return std::make_unique<PointMassEnv>(*this); }

  double reward_of_obs(const Vecd& obs) const override {
    return velocity_reward_kernel(obs[2], spec_.target_velocity);
  }

 protected:
  Vecd initial_state(std::uint64_t seed) const override {
    Rng rng(seed);
    Vecd s(2);
    s[0] = rng.uniform(-10.0, 10.0);
    s[1] = rng.uniform(-0.05, 0.05);
    return s;
  }

  Vecd dynamics(const Vecd& s, const Vecd& a) const override {
    const double gain = 2.0, drag = 1.0;
    Vecd next(2);
    next[1] = s[1] + spec_.dt * (gain * a[0] - drag * s[1]);
    double p = s[0] + spec_.dt * next[1];
    while (p >= 10.0) p -= 20.0;
    while (p < -10.0) p += 20.0;
    next[0] = p;
    return next;
  }

  Vecd observe_state(const Vecd& s) const override {
    Vecd o(3);
    o[0] = std::sin(kPi * s[0] / 10.0);
    o[1] = std::cos(kPi * s[0] / 10.0);
    o[2] = s[1];
    return o;
  }

  double reward_state(const Vecd& s) const override {
    return velocity_reward_kernel(s[1], spec_.target_velocity);
  }

 private:
  static EnvSpec make_spec(double target_velocity, int episode_steps) {
    EnvSpec spec;
    spec.name = "point-mass";
    spec.n = 3;
    spec.m = 1;
    spec.reward_from_obs = true;
    spec.episode_steps = episode_steps;
    spec.target_velocity = target_velocity;
    spec.velocity_dims = {2};
    return spec;
  }
};

// ---------------------------------------------------------------------------
// Cart with a k-link pendulum, all links unactuated; the cart carries the
// single control force. Angles are measured from upright. Point masses at the
// link tips give the closed-form mass matrix
//   M_xx  = Mc + sum_i m_i
//   M_xa  = mu_a l_a cos th_a
//   M_ab  = mu_max(a,b) l_a l_b cos(th_a - th_b),  mu_a = sum_{i>=a} m_i
// and the bias term is assembled from dM/dth, dT/dth and gravity.
// Semi-implicit Euler; a hard rail at |x| <= 3 stops the cart.
// ---------------------------------------------------------------------------
class PoleEnv : public Env {
 public:
  PoleEnv(int links, double target /*unused, poles have their own reward*/,
          int episode_steps, bool conservative, double dt)
      : Env(make_spec(links, episode_steps, dt)),
        k_(links),
        conservative_(conservative) {
    (void)target;
    masses_ = Vecd::Constant(k_, 0.35);
    lengths_ = Vecd::Constant(k_, 0.6);
    mu_ = Vecd(k_);
    for (int a = 0; a < k_; ++a) mu_[a] = masses_.tail(k_ - a).sum();
  }

  std::unique_ptr<Env> clone() const override { return std::make_unique<PoleEnv>(*this); }

  double reward_of_obs(const Vecd& obs) const override {
    double upright = 1.0;
    for (int i = 0; i < k_; ++i) upright *= 0.5 * (1.0 + obs[2 + 2 * i]);
    return centering(obs[0]) * upright;
  }

  double total_energy(const Vecd& s) const {
    const int d = k_ + 1;
    const Vecd q = s.head(d), qd = s.tail(d);
    Matd M = mass_matrix(q);
    const double kinetic = 0.5 * qd.dot(M * qd);
    double potential = 0.0;
    for (int a = 0; a < k_; ++a) potential += kGravity * mu_[a] * lengths_[a] * std::cos(q[a + 1]);
    return kinetic + potential;
  }

 protected:
  Vecd initial_state(std::uint64_t seed) const override {
    Rng rng(seed);
    const int d = k_ + 1;
    Vecd s = Vecd::Zero(2 * d);
    s[0] = rng.uniform(-0.3, 0.3);
    for (int i = 0; i < k_; ++i) s[1 + i] = kPi + rng.uniform(-0.05, 0.05);
    for (int i = 0; i < d; ++i) s[d + i] += rng.uniform(-0.01, 0.01);
    return s;
  }

  Vecd dynamics(const Vecd& s, const Vecd& a) const override {
    const int d = k_ + 1;
    Vecd q = s.head(d), qd = s.tail(d);

    Matd M = mass_matrix(q);
    Vecd rhs = Vecd::Zero(d);
    rhs[0] += kForceGain * a[0];
    if (!conservative_) {
      rhs[0] -= kCartDamping * qd[0];
      for (int i = 1; i < d; ++i) rhs[i] -= kJointDamping * qd[i];
    }
    // -(dM/dt) qd + dT/dq - dV/dq, from the closed-form dM/dth entries.
    for (int ai = 1; ai < d; ++ai) {
      const int av = ai - 1;
      const double sa = std::sin(q[ai]);
      rhs[ai] += kGravity * mu_[av] * lengths_[av] * sa;  // -dV/dth = +g mu l sin
    }
    // dT/dq_a = 0.5 qd^T dM/dq_a qd ; (Mdot qd)_k = sum_j sum_l dM_kj/dq_l qd_l qd_j
    for (int av = 0; av < k_; ++av) {
      const int ai = av + 1;
      const double sa = std::sin(q[ai]);
      // d(M_x,ai)/d th_a = -mu_a l_a sin th_a
      const double dMxa = -mu_[av] * lengths_[av] * sa;
      double dT = qd[0] * dMxa * qd[ai];
      for (int bv = 0; bv < k_; ++bv) {
        const int bi = bv + 1;
        if (bv == av) continue;
        const double der = -mu_[std::max(av, bv)] * lengths_[av] * lengths_[bv] *
                           std::sin(q[ai] - q[bi]);
        dT += qd[ai] * der * qd[bi];
      }
      rhs[ai] += dT;
    }
    // (Mdot qd)_k: accumulate directly.
    Vecd mdot_qd = Vecd::Zero(d);
    for (int av = 0; av < k_; ++av) {
      const int ai = av + 1;
      const double sa = std::sin(q[ai]);
      const double dMxa = -mu_[av] * lengths_[av] * sa * qd[ai];  // d/dt of mu l cos
      mdot_qd[0] += dMxa * qd[ai];
      mdot_qd[ai] += dMxa * qd[0];
      for (int bv = 0; bv < k_; ++bv) {
        const int bi = bv + 1;
        if (bv == av) continue;
        const double dM = -mu_[std::max(av, bv)] * lengths_[av] * lengths_[bv] *
                          std::sin(q[ai] - q[bi]) * (qd[ai] - qd[bi]);
        // time derivative of M_{ai,bi}; contributes to row ai with qd[bi]
        mdot_qd[ai] += 0.5 * dM * qd[bi];
        mdot_qd[bi] += 0.5 * dM * qd[ai];
      }
    }
    rhs -= mdot_qd;

    const Vecd qdd = M.ldlt().solve(rhs);
    Vecd next(2 * d);
    next.tail(d) = qd + spec_.dt * qdd;
    next.head(d) = q + spec_.dt * next.tail(d);
    // rail
    if (!conservative_) {
      if (next[0] > kRail) {
        next[0] = kRail;
        if (next[d] > 0) next[d] = 0;
      } else if (next[0] < -kRail) {
        next[0] = -kRail;
        if (next[d] < 0) next[d] = 0;
      }
    }
    for (int i = 1; i < d; ++i) {
      while (next[i] > kPi) next[i] -= 2 * kPi;
      while (next[i] < -kPi) next[i] += 2 * kPi;
    }
    return next;
  }

  Vecd observe_state(const Vecd& s) const override {
    const int d = k_ + 1;
    Vecd o(spec_.n);
    o[0] = s[0];
    o[1] = s[d] / 2.0;
    for (int i = 0; i < k_; ++i) {
      o[2 + 2 * i] = std::cos(s[1 + i]);
      o[3 + 2 * i] = std::sin(s[1 + i]);
    }
    for (int i = 0; i < k_; ++i) o[2 + 2 * k_ + i] = s[d + 1 + i] / 2.0;
    return o;
  }

  double reward_state(const Vecd& s) const override {
    double upright = 1.0;
    for (int i = 0; i < k_; ++i) upright *= 0.5 * (1.0 + std::cos(s[1 + i]));
    return centering(s[0]) * upright;
  }

 private:
  static constexpr double kGravity = 9.8;
  static constexpr double kForceGain = 6.0;
  static constexpr double kCartDamping = 0.4;
  static constexpr double kJointDamping = 0.03;
  static constexpr double kCartMass = 1.0;
  static constexpr double kRail = 3.0;

  static double centering(double x) {
    const double d = std::abs(x);
    if (d <= 1.0) return 1.0;
    const double t = (d - 1.0) / 1.0;
    return std::exp(-0.5 * t * t);
  }

  Matd mass_matrix(const Vecd& q) const {
    const int d = k_ + 1;
    Matd M(d, d);
    M(0, 0) = kCartMass + masses_.sum();
    for (int av = 0; av < k_; ++av) {
      const int ai = av + 1;
      const double v = mu_[av] * lengths_[av] * std::cos(q[ai]);
      M(0, ai) = v;
      M(ai, 0) = v;
      for (int bv = 0; bv < k_; ++bv) {
        const int bi = bv + 1;
        M(ai, bi) = mu_[std::max(av, bv)] * lengths_[av] * lengths_[bv] *
                    std::cos(q[ai] - q[bi]);
      }
    }
    return M;
  }

  static EnvSpec make_spec(int links, int episode_steps, double dt) {
    EnvSpec spec;
    spec.name = links == 1 ? "pole-swingup" : "k-link-pole(" + std::to_string(links) + ")";
    spec.n = 2 + 3 * links;
    spec.m = 1;
    spec.reward_from_obs = true;
    spec.episode_steps = episode_steps;
    spec.dt = dt;
    spec.velocity_dims.push_back(1);
    for (int i = 0; i < links; ++i) spec.velocity_dims.push_back(2 + 2 * links + i);
    return spec;
  }

  int k_;
  bool conservative_;
  Vecd masses_, lengths_, mu_;
};

}  // namespace

std::unique_ptr<Env> make_fixed_env(const std::string& name, double target_velocity,
                                    int episode_steps) {
  if (name == "point-mass") return std::make_unique<PointMassEnv>(target_velocity, episode_steps);
  if (name == "pole-swingup")
    return std::make_unique<PoleEnv>(1, target_velocity, episode_steps, false, 0.05);
  if (name.rfind("k-link-pole(", 0) == 0 && name.back() == ')') {
    const int k = std::stoi(name.substr(12, name.size() - 13));
    require(k >= 1 && k <= 5, "make_fixed_env: link count out of range");
    return std::make_unique<PoleEnv>(k, target_velocity, episode_steps, false, 0.05);
  }
  throw TdmError("make_fixed_env: unknown environment '" + name + "'");
}

std::unique_ptr<Env> make_fixed_env(const std::string& name) {
  return make_fixed_env(name, 1.0, 200);
}

std::unique_ptr<Env> make_conservative_pole(int links, double dt) {
  return std::make_unique<PoleEnv>(links, 1.0, 1000000, true, dt);
}

}  // namespace tdm
