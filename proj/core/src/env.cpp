#include "redor/env.hpp"

namespace redor {

namespace {
constexpr double kDt = 0.1;
constexpr double kGainP = 4.0;
constexpr double kGainD = 2.0;
}  // namespace

void EnvSpec::validate() const {
  require(obs_dim >= 1 && act_dim >= 1, "env: obs_dim and act_dim must be >= 1");
  require(horizon >= 1, "env: horizon must be >= 1");
  require(action_low.size() == act_dim && action_high.size() == act_dim,
          "env: action bounds must have act_dim entries");
  for (int i = 0; i < act_dim; ++i)
    require(std::isfinite(action_low[i]) && std::isfinite(action_high[i]) &&
                action_low[i] < action_high[i],
            "env: action bounds must be finite with low < high");
  require(r_max > 0.0, "env: r_max must be positive");
}

Vector ToyEnv::clamp_action(const Vector& action) const {
  require(action.size() == spec_.act_dim, "env: action dimension mismatch");
  return action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
}

PointMassEnv::PointMassEnv(double start_spread, double goal_spread, int horizon)
    : start_spread_(start_spread), goal_spread_(goal_spread) {
  spec_.name = "point-mass";
  spec_.obs_dim = 4;
  spec_.act_dim = 2;
  spec_.horizon = horizon;
  spec_.action_low = Vector::Constant(2, -1.0);
  spec_.action_high = Vector::Constant(2, 1.0);
  spec_.r_max = 1.0;
  spec_.validate();
}

Vector PointMassEnv::reset(Rng& rng) const {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector pos(2), goal(2);
  for (int i = 0; i < 2; ++i) pos[i] = start_spread_ * dist(rng);
  for (int i = 0; i < 2; ++i) goal[i] = goal_spread_ * dist(rng);
  Vector state(4);
  state << pos, goal - pos;
  return state;
}

ToyEnv::StepResult PointMassEnv::step(const Vector& state,
                                      const Vector& action) const {
  require(state.size() == 4, "point-mass: state dimension mismatch");
  const Vector a = clamp_action(action);
  const Vector pos = state.head<2>();
  const Vector goal = pos + state.tail<2>();
  const Vector next_pos = pos + kDt * a;
  Vector next_state(4);
  next_state << next_pos, goal - next_pos;
  const double reward = spec_.r_max * std::exp(-(next_pos - goal).norm());
  return StepResult{next_state, reward};
}

Vector PointMassEnv::expert_action(const Vector& state) const {
  require(state.size() == 4, "point-mass: state dimension mismatch");
  return clamp_action(kGainP * state.tail<2>());
}

DoubleIntegratorEnv::DoubleIntegratorEnv(int horizon) {
  spec_.name = "double-integrator";
  spec_.obs_dim = 3;
  spec_.act_dim = 1;
  spec_.horizon = horizon;
  spec_.action_low = Vector::Constant(1, -1.0);
  spec_.action_high = Vector::Constant(1, 1.0);
  spec_.r_max = 1.0;
  spec_.validate();
}

Vector DoubleIntegratorEnv::reset(Rng& rng) const {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double pos = dist(rng);
  const double goal = dist(rng);
  Vector state(3);
  state << pos, 0.0, goal - pos;
  return state;
}

ToyEnv::StepResult DoubleIntegratorEnv::step(const Vector& state,
                                             const Vector& action) const {
  require(state.size() == 3, "double-integrator: state dimension mismatch");
  const Vector a = clamp_action(action);
  const double pos = state[0];
  const double vel = state[1];
  const double goal = pos + state[2];
  const double next_vel = std::clamp(vel + kDt * a[0], -2.0, 2.0);
  const double next_pos = pos + kDt * next_vel;
  Vector next_state(3);
  next_state << next_pos, next_vel, goal - next_pos;
  const double reward = spec_.r_max * std::exp(-std::abs(next_pos - goal));
  return StepResult{next_state, reward};
}

Vector DoubleIntegratorEnv::expert_action(const Vector& state) const {
  require(state.size() == 3, "double-integrator: state dimension mismatch");
  Vector a(1);
  a[0] = kGainP * state[2] - kGainD * state[1];
  return clamp_action(a);
}

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "expert") return PolicyKind::expert;
  if (name == "random") return PolicyKind::random;
  throw ContractError("unknown behavior policy id: '" + name + "'");
}

std::string policy_kind_name(PolicyKind kind) {
  return kind == PolicyKind::expert ? "expert" : "random";
}

Vector behavior_action(const ToyEnv& env, PolicyKind kind, const Vector& state,
                       double noise_scale, Rng& rng) {
  const EnvSpec& spec = env.spec();
  if (kind == PolicyKind::random) {
    Vector a(spec.act_dim);
    for (int i = 0; i < spec.act_dim; ++i) {
      std::uniform_real_distribution<double> dist(spec.action_low[i],
                                                  spec.action_high[i]);
      a[i] = dist(rng);
    }
    return a;
  }
  Vector a = env.expert_action(state);
  if (noise_scale > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_scale);
    for (int i = 0; i < spec.act_dim; ++i) a[i] += noise(rng);
  }
  return env.clamp_action(a);
}

std::unique_ptr<ToyEnv> make_env(const std::string& name) {
  if (name == "point-mass") return std::make_unique<PointMassEnv>();
  if (name == "double-integrator") return std::make_unique<DoubleIntegratorEnv>();
  throw ContractError("unknown environment: '" + name +
                      "' (built-in: point-mass, double-integrator)");
}

}  // namespace redor
