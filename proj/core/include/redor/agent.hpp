#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>

#include "redor/dataset.hpp"
#include "redor/mlp.hpp"

namespace redor {

struct TrainConfig {
  double critic_lr = 3e-4;
  double actor_lr = 3e-4;
  int batch_size = 256;
  double gamma = 0.99;
  double tau = 5e-3;          // target soft-update rate
  double policy_noise = 0.2;  // target policy smoothing, clipped
  double noise_clip = 0.5;
  double kappa = 2.5;         // behavior-cloning balance
  int steps = 20000;
  int hidden_dim = 256;
  int actor_delay = 2;

  void validate() const;
};

// Critic maps [state; action] to a scalar value; actor maps state to a
// tanh-squashed action inside the environment bounds.
struct AgentParams {
  MlpParams critic;
  MlpParams actor;
  MlpParams critic_target;
  MlpParams actor_target;
  long step = 0;
};

AgentParams init_agent(const EnvSpec& env, const TrainConfig& cfg, Rng& rng);

bool agent_params_equal(const AgentParams& a, const AgentParams& b);

Vector actor_act(const MlpParams& actor, const EnvSpec& env,
                 const Vector& state);

double critic_value(const MlpParams& critic, const Vector& state,
                    const Vector& action);

// Bootstrapped targets y = r + gamma * (1 - terminal) * Q'(s', pi'(s') + eps).
// noise (act_dim x batch) is added to the target action before clamping;
// nullptr means zero noise.
Vector td_targets(const AgentParams& params, const EnvSpec& env,
                  std::span<const Transition> batch, const TrainConfig& cfg,
                  const Matrix* noise);

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

// Mean squared TD error and its gradient over the critic parameters; targets
// use the frozen target networks with clipped Gaussian policy noise from rng.
LossGrad td_critic_loss_grad(const AgentParams& params, const EnvSpec& env,
                             std::span<const Transition> batch,
                             const TrainConfig& cfg, Rng& rng);

// Mean squared error against empirical discounted returns-to-go.
LossGrad mc_critic_loss_grad(const AgentParams& params,
                             std::span<const Transition> steps,
                             std::span<const double> returns_to_go);

struct ActorLossGrad {
  double loss = 0.0;
  Vector grad;
  double alpha = 1.0;
  bool alpha_fallback = false;  // all-zero values, alpha substituted with 1
};

// Mean of -Q(s, pi(s))/alpha + |pi(s) - a|^2 with alpha = mean|Q(s,a)|/kappa
// held constant; gradient flows through both the value and cloning terms.
ActorLossGrad actor_loss_grad(const AgentParams& params, const EnvSpec& env,
                              std::span<const Transition> batch,
                              const TrainConfig& cfg);

// Parameter snapshots indexed by selection round (1-based).
class CheckpointStore {
public:
  void put(int round, const AgentParams& params);
  const AgentParams& get(int round) const;
  bool has(int round) const;
  int round_count() const { return static_cast<int>(store_.size()); }
  const std::map<int, AgentParams>& all() const { return store_; }

private:
  std::map<int, AgentParams> store_;
};

// Weighted view into a dataset: one nonnegative weight per chosen trajectory.
struct DatasetView {
  const OfflineDataset* dataset = nullptr;
  std::vector<int> ids;
  Vector weights;

  static DatasetView full(const OfflineDataset& dataset);
  static DatasetView weighted(const OfflineDataset& dataset,
                              std::vector<int> ids, Vector weights);
};

struct TrainLogEntry {
  long step = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

// Stationary-objective statistics for convergence diagnostics: loss and
// gradients of the Monte-Carlo critic objective over the full dataset vs the
// weighted view, plus a parameter snapshot.
struct ConvergenceRecord {
  long step = 0;
  double full_loss = 0.0;
  double full_grad_norm = 0.0;
  double approx_err = 0.0;  // |grad_view - grad_full|
  Vector theta;             // flattened critic parameters
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  std::vector<ConvergenceRecord> convergence;
  long alpha_fallbacks = 0;
};

struct TrainOptions {
  CheckpointStore* checkpoints = nullptr;
  int checkpoint_rounds = 0;  // snapshots at steps ceil(steps * t / rounds)
  int log_every = 1000;
  bool record_convergence = false;
  int convergence_every = 1;
};

struct TrainResult {
  AgentParams params;
  TrainLog log;
};

// Alternating critic/actor updates (actor delayed by cfg.actor_delay) with
// Adam, tau-averaged targets after each actor update, and per-sample losses
// scaled by the owning trajectory's weight. Weights are rescaled to mean 1;
// zero-weight trajectories are dropped from the view before any sampling.
TrainResult train(const DatasetView& view, const TrainConfig& cfg,
                  std::uint64_t seed, const TrainOptions& options = {});

struct EvalStats {
  double mean_return = 0.0;
  double std_return = 0.0;
  int episodes = 0;
};

// Undiscounted episode returns of the deterministic actor; per-episode seeds
// derived from seed, so episodes may run concurrently.
EvalStats evaluate(const MlpParams& actor, const ToyEnv& env, int episodes,
                   std::uint64_t seed);

// Checkpoint files share the dataset serialization conventions.
void write_checkpoint(const std::filesystem::path& path, int round,
                      const AgentParams& params);
std::pair<int, AgentParams> read_checkpoint(const std::filesystem::path& path);

std::string checkpoint_filename(int round);

void save_checkpoints(const CheckpointStore& store,
                      const std::filesystem::path& dir);
CheckpointStore load_checkpoints(const std::filesystem::path& dir, int rounds);

}  // namespace redor
