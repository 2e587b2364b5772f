#pragma once

#include <memory>
#include <string>

#include "redor/numeric.hpp"

namespace redor {

struct EnvSpec {
  std::string name;
  int obs_dim = 0;
  int act_dim = 0;
  int horizon = 0;
  Vector action_low;   // per dimension
  Vector action_high;  // per dimension
  double r_max = 1.0;

  void validate() const;
};

// Fixed-horizon continuous-control task with deterministic dynamics and
// bounded positive rewards in (0, r_max].
class ToyEnv {
public:
  virtual ~ToyEnv() = default;

  const EnvSpec& spec() const { return spec_; }

  virtual Vector reset(Rng& rng) const = 0;

  struct StepResult {
    Vector next_state;
    double reward;
  };
  virtual StepResult step(const Vector& state, const Vector& action) const = 0;

  // Noise-free scripted controller toward the goal encoded in the state.
  virtual Vector expert_action(const Vector& state) const = 0;

  Vector clamp_action(const Vector& action) const;

protected:
  EnvSpec spec_;
};

// State = [position (2), goal - position (2)], action = bounded velocity.
// Reward r = r_max * exp(-|pos' - goal|). Start and goal boxes are
// configurable so start-at-goal episodes can be constructed.
class PointMassEnv : public ToyEnv {
public:
  PointMassEnv(double start_spread = 1.0, double goal_spread = 1.0,
               int horizon = 50);
  Vector reset(Rng& rng) const override;
  StepResult step(const Vector& state, const Vector& action) const override;
  Vector expert_action(const Vector& state) const override;

private:
  double start_spread_;
  double goal_spread_;
};

// State = [position, velocity, goal - position], action = bounded
// acceleration on a line; same exponential distance shaping.
class DoubleIntegratorEnv : public ToyEnv {
public:
  explicit DoubleIntegratorEnv(int horizon = 50);
  Vector reset(Rng& rng) const override;
  StepResult step(const Vector& state, const Vector& action) const override;
  Vector expert_action(const Vector& state) const override;
};

enum class PolicyKind { expert, random };

PolicyKind parse_policy_kind(const std::string& name);
std::string policy_kind_name(PolicyKind kind);

// Expert: scripted controller plus noise_scale-scaled Gaussian noise.
// Random: uniform over the action box (noise_scale ignored). Clamped.
Vector behavior_action(const ToyEnv& env, PolicyKind kind, const Vector& state,
                       double noise_scale, Rng& rng);

// Built-in environments: "point-mass", "double-integrator".
std::unique_ptr<ToyEnv> make_env(const std::string& name);

}  // namespace redor
