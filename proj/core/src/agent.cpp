#include "redor/agent.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace redor {

using json = nlohmann::json;

void TrainConfig::validate() const {
  require(critic_lr > 0.0 && actor_lr > 0.0, "train: learning rates must be positive");
  require(batch_size >= 1, "train: batch size must be >= 1");
  require(gamma > 0.0 && gamma <= 1.0, "train: gamma must be in (0, 1]");
  require(tau > 0.0 && tau <= 1.0, "train: tau must be in (0, 1]");
  require(policy_noise >= 0.0 && noise_clip >= 0.0, "train: noise must be >= 0");
  require(kappa > 0.0, "train: kappa must be positive");
  require(steps >= 1, "train: step count must be >= 1");
  require(hidden_dim >= 1, "train: hidden dim must be >= 1");
  require(actor_delay >= 1, "train: actor delay must be >= 1");
}

AgentParams init_agent(const EnvSpec& env, const TrainConfig& cfg, Rng& rng) {
  env.validate();
  AgentParams p;
  p.critic = MlpParams::random_init(
      {env.obs_dim + env.act_dim, cfg.hidden_dim, cfg.hidden_dim, 1}, rng);
  p.actor = MlpParams::random_init(
      {env.obs_dim, cfg.hidden_dim, cfg.hidden_dim, env.act_dim}, rng);
  p.critic_target = p.critic;
  p.actor_target = p.actor;
  p.step = 0;
  return p;
}

bool agent_params_equal(const AgentParams& a, const AgentParams& b) {
  auto eq = [](const MlpParams& x, const MlpParams& y) {
    return x.shape == y.shape && x.w1 == y.w1 && x.b1 == y.b1 && x.w2 == y.w2 &&
           x.b2 == y.b2 && x.w3 == y.w3 && x.b3 == y.b3;
  };
  return a.step == b.step && eq(a.critic, b.critic) && eq(a.actor, b.actor) &&
         eq(a.critic_target, b.critic_target) &&
         eq(a.actor_target, b.actor_target);
}

namespace {

struct Batch {
  Matrix states;       // obs x B
  Matrix actions;      // act x B
  Matrix next_states;  // obs x B
  Vector rewards;
  Vector weights;
  std::vector<char> terminal;

  Eigen::Index size() const { return states.cols(); }
};

Batch batch_from_span(const EnvSpec& env, std::span<const Transition> batch) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  Batch b;
  b.states.resize(env.obs_dim, n);
  b.actions.resize(env.act_dim, n);
  b.next_states.resize(env.obs_dim, n);
  b.rewards.resize(n);
  b.weights = Vector::Ones(n);
  b.terminal.resize(batch.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = batch[static_cast<std::size_t>(j)];
    require(t.state.size() == env.obs_dim && t.action.size() == env.act_dim &&
                t.next_state.size() == env.obs_dim,
            "batch: transition dimensions do not match environment");
    b.states.col(j) = t.state;
    b.actions.col(j) = t.action;
    b.next_states.col(j) = t.next_state;
    b.rewards[j] = t.reward;
    b.terminal[static_cast<std::size_t>(j)] = t.terminal ? 1 : 0;
  }
  return b;
}

Matrix stack_sa(const Matrix& states, const Matrix& actions) {
  Matrix sa(states.rows() + actions.rows(), states.cols());
  sa.topRows(states.rows()) = states;
  sa.bottomRows(actions.rows()) = actions;
  return sa;
}

// pi(s) = center + half .* tanh(u) with the environment's action box.
Matrix squash(const EnvSpec& env, const Matrix& raw) {
  const Vector center = 0.5 * (env.action_low + env.action_high);
  const Vector half = 0.5 * (env.action_high - env.action_low);
  return ((raw.array().tanh().colwise() * half.array()).colwise() +
          center.array())
      .matrix();
}

Vector td_targets_batch(const AgentParams& params, const EnvSpec& env,
                        const Batch& b, const TrainConfig& cfg,
                        const Matrix* noise) {
  const MlpBatchCache actor_cache =
      mlp_forward_batch(params.actor_target, b.next_states);
  Matrix next_actions = squash(env, actor_cache.out);
  if (noise != nullptr) {
    require(noise->rows() == env.act_dim && noise->cols() == b.size(),
            "td_targets: noise shape mismatch");
    next_actions += *noise;
  }
  next_actions = (next_actions.array()
                      .colwise()
                      .max(env.action_low.array())
                      .colwise()
                      .min(env.action_high.array()))
                     .matrix();
  const MlpBatchCache critic_cache = mlp_forward_batch(
      params.critic_target, stack_sa(b.next_states, next_actions));
  Vector y(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const double mask = b.terminal[static_cast<std::size_t>(j)] ? 0.0 : 1.0;
    y[j] = b.rewards[j] + cfg.gamma * mask * critic_cache.out(0, j);
  }
  return y;
}

LossGrad critic_loss_grad_to_targets(const MlpParams& critic, const Matrix& sa,
                                     const Vector& targets,
                                     const Vector& weights) {
  const Eigen::Index n = sa.cols();
  const MlpBatchCache cache = mlp_forward_batch(critic, sa);
  const Vector q = cache.out.row(0).transpose();
  const Vector diff = q - targets;
  LossGrad out;
  out.loss = (weights.array() * diff.array().square()).sum() / n;
  Matrix dy(1, n);
  dy.row(0) = (2.0 / n) * (weights.array() * diff.array()).matrix().transpose();
  out.grad = mlp_backward_batch(critic, sa, cache, dy).param_grad;
  return out;
}

LossGrad weighted_td_loss_grad(const AgentParams& params, const EnvSpec& env,
                               const Batch& b, const TrainConfig& cfg,
                               const Matrix* noise) {
  const Vector y = td_targets_batch(params, env, b, cfg, noise);
  return critic_loss_grad_to_targets(params.critic,
                                     stack_sa(b.states, b.actions), y,
                                     b.weights);
}

ActorLossGrad weighted_actor_loss_grad(const AgentParams& params,
                                       const EnvSpec& env, const Batch& b,
                                       const TrainConfig& cfg) {
  const Eigen::Index n = b.size();
  const Vector half = 0.5 * (env.action_high - env.action_low);

  const MlpBatchCache actor_cache = mlp_forward_batch(params.actor, b.states);
  const Matrix tanh_u = actor_cache.out.array().tanh().matrix();
  const Matrix pi =
      ((tanh_u.array().colwise() * half.array()).colwise() +
       (0.5 * (env.action_low + env.action_high)).array())
          .matrix();

  const Matrix sa_pi = stack_sa(b.states, pi);
  const MlpBatchCache q_pi_cache = mlp_forward_batch(params.critic, sa_pi);
  const Vector q_pi = q_pi_cache.out.row(0).transpose();

  const MlpBatchCache q_data_cache =
      mlp_forward_batch(params.critic, stack_sa(b.states, b.actions));
  const double mean_abs_q = q_data_cache.out.row(0).array().abs().mean();

  ActorLossGrad out;
  out.alpha = mean_abs_q / cfg.kappa;
  if (out.alpha == 0.0) {
    out.alpha = 1.0;
    out.alpha_fallback = true;
  }

  const Matrix bc_diff = pi - b.actions;
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    loss += b.weights[j] *
            (-q_pi[j] / out.alpha + bc_diff.col(j).squaredNorm());
  out.loss = loss / n;

  // Value term: gradient reaches the action rows of the critic input.
  Matrix dy(1, n);
  dy.row(0) =
      (b.weights.array() * (-1.0 / (out.alpha * n))).matrix().transpose();
  const MlpBatchGrads critic_grads =
      mlp_backward_batch(params.critic, sa_pi, q_pi_cache, dy);
  Matrix d_action = critic_grads.input_grads.bottomRows(env.act_dim);
  d_action += (2.0 / n) * (bc_diff.array().rowwise() *
                           b.weights.transpose().array())
                              .matrix();

  // Chain through the tanh squash.
  const Matrix du =
      (d_action.array() * (1.0 - tanh_u.array().square()).colwise() *
       half.array())
          .matrix();
  out.grad =
      mlp_backward_batch(params.actor, b.states, actor_cache, du).param_grad;
  return out;
}

struct AdamState {
  Vector m, v;
  long t = 0;

  explicit AdamState(Eigen::Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}

  void update(Vector& params, const Vector& grad, double lr) {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    ++t;
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    params.array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }
};

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  target.w1 = tau * online.w1 + (1.0 - tau) * target.w1;
  target.b1 = tau * online.b1 + (1.0 - tau) * target.b1;
  target.w2 = tau * online.w2 + (1.0 - tau) * target.w2;
  target.b2 = tau * online.b2 + (1.0 - tau) * target.b2;
  target.w3 = tau * online.w3 + (1.0 - tau) * target.w3;
  target.b3 = tau * online.b3 + (1.0 - tau) * target.b3;
}

// Flattened view of every transition owned by a set of trajectories.
struct FlatData {
  Matrix sa;           // (obs+act) x N
  Matrix states;       // obs x N
  Matrix actions;      // act x N
  Matrix next_states;  // obs x N
  Vector rewards;
  Vector rtg;
  Vector weights;  // owning trajectory's weight, one entry per transition
  std::vector<char> terminal;

  Eigen::Index size() const { return states.cols(); }
};

FlatData flatten_view(const OfflineDataset& data, const std::vector<int>& ids,
                      const Vector& traj_weights) {
  std::size_t n = 0;
  for (int id : ids) n += data.trajectories[static_cast<std::size_t>(id)].length();
  const EnvSpec& env = data.env;
  FlatData f;
  f.states.resize(env.obs_dim, static_cast<Eigen::Index>(n));
  f.actions.resize(env.act_dim, static_cast<Eigen::Index>(n));
  f.next_states.resize(env.obs_dim, static_cast<Eigen::Index>(n));
  f.rewards.resize(static_cast<Eigen::Index>(n));
  f.rtg.resize(static_cast<Eigen::Index>(n));
  f.weights.resize(static_cast<Eigen::Index>(n));
  f.terminal.resize(n);
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Trajectory& traj = data.trajectories[static_cast<std::size_t>(ids[k])];
    for (std::size_t t = 0; t < traj.transitions.size(); ++t, ++col) {
      const Transition& tr = traj.transitions[t];
      f.states.col(col) = tr.state;
      f.actions.col(col) = tr.action;
      f.next_states.col(col) = tr.next_state;
      f.rewards[col] = tr.reward;
      f.rtg[col] = traj.returns_to_go[static_cast<Eigen::Index>(t)];
      f.weights[col] = traj_weights[static_cast<Eigen::Index>(k)];
      f.terminal[static_cast<std::size_t>(col)] = tr.terminal ? 1 : 0;
    }
  }
  f.sa = stack_sa(f.states, f.actions);
  return f;
}

Batch gather_batch(const FlatData& f, const std::vector<Eigen::Index>& idx) {
  Batch b;
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  b.states.resize(f.states.rows(), n);
  b.actions.resize(f.actions.rows(), n);
  b.next_states.resize(f.next_states.rows(), n);
  b.rewards.resize(n);
  b.weights.resize(n);
  b.terminal.resize(idx.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index i = idx[static_cast<std::size_t>(j)];
    b.states.col(j) = f.states.col(i);
    b.actions.col(j) = f.actions.col(i);
    b.next_states.col(j) = f.next_states.col(i);
    b.rewards[j] = f.rewards[i];
    b.weights[j] = f.weights[i];
    b.terminal[static_cast<std::size_t>(j)] = f.terminal[static_cast<std::size_t>(i)];
  }
  return b;
}

}  // namespace

Vector actor_act(const MlpParams& actor, const EnvSpec& env,
                 const Vector& state) {
  const Vector u = mlp_forward(actor, state);
  const Vector center = 0.5 * (env.action_low + env.action_high);
  const Vector half = 0.5 * (env.action_high - env.action_low);
  return center + half.cwiseProduct(u.array().tanh().matrix());
}

double critic_value(const MlpParams& critic, const Vector& state,
                    const Vector& action) {
  Vector sa(state.size() + action.size());
  sa << state, action;
  return mlp_forward(critic, sa)[0];
}

Vector td_targets(const AgentParams& params, const EnvSpec& env,
                  std::span<const Transition> batch, const TrainConfig& cfg,
                  const Matrix* noise) {
  require(!batch.empty(), "td_targets: empty batch");
  return td_targets_batch(params, env, batch_from_span(env, batch), cfg, noise);
}

LossGrad td_critic_loss_grad(const AgentParams& params, const EnvSpec& env,
                             std::span<const Transition> batch,
                             const TrainConfig& cfg, Rng& rng) {
  require(!batch.empty(), "td_critic_loss_grad: empty batch");
  const Batch b = batch_from_span(env, batch);
  Matrix noise(env.act_dim, b.size());
  std::normal_distribution<double> dist(0.0, cfg.policy_noise);
  for (Eigen::Index j = 0; j < b.size(); ++j)
    for (int i = 0; i < env.act_dim; ++i)
      noise(i, j) = std::clamp(dist(rng), -cfg.noise_clip, cfg.noise_clip);
  return weighted_td_loss_grad(params, env, b, cfg, &noise);
}

LossGrad mc_critic_loss_grad(const AgentParams& params,
                             std::span<const Transition> steps,
                             std::span<const double> returns_to_go) {
  require(!steps.empty(), "mc_critic_loss_grad: empty input");
  require(steps.size() == returns_to_go.size(),
          "mc_critic_loss_grad: one return per step required");
  const Eigen::Index n = static_cast<Eigen::Index>(steps.size());
  const Eigen::Index obs = steps[0].state.size();
  const Eigen::Index act = steps[0].action.size();
  Matrix sa(obs + act, n);
  Vector y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = steps[static_cast<std::size_t>(j)];
    sa.col(j).head(obs) = t.state;
    sa.col(j).tail(act) = t.action;
    y[j] = returns_to_go[static_cast<std::size_t>(j)];
  }
  return critic_loss_grad_to_targets(params.critic, sa, y, Vector::Ones(n));
}

ActorLossGrad actor_loss_grad(const AgentParams& params, const EnvSpec& env,
                              std::span<const Transition> batch,
                              const TrainConfig& cfg) {
  require(!batch.empty(), "actor_loss_grad: empty batch");
  return weighted_actor_loss_grad(params, env, batch_from_span(env, batch), cfg);
}

void CheckpointStore::put(int round, const AgentParams& params) {
  require(round >= 1, "checkpoint store: rounds are 1-based");
  store_[round] = params;
}

const AgentParams& CheckpointStore::get(int round) const {
  auto it = store_.find(round);
  if (it == store_.end())
    throw ContractError("checkpoint store: missing round " + std::to_string(round));
  return it->second;
}

bool CheckpointStore::has(int round) const { return store_.count(round) > 0; }

DatasetView DatasetView::full(const OfflineDataset& dataset) {
  DatasetView v;
  v.dataset = &dataset;
  v.ids.resize(dataset.trajectories.size());
  for (std::size_t i = 0; i < v.ids.size(); ++i) v.ids[i] = static_cast<int>(i);
  v.weights = Vector::Ones(static_cast<Eigen::Index>(v.ids.size()));
  return v;
}

DatasetView DatasetView::weighted(const OfflineDataset& dataset,
                                  std::vector<int> ids, Vector weights) {
  DatasetView v;
  v.dataset = &dataset;
  v.ids = std::move(ids);
  v.weights = std::move(weights);
  return v;
}

TrainResult train(const DatasetView& view, const TrainConfig& cfg,
                  std::uint64_t seed, const TrainOptions& options) {
  cfg.validate();
  require(view.dataset != nullptr, "train: view has no dataset");
  require(view.ids.size() == static_cast<std::size_t>(view.weights.size()),
          "train: one weight per trajectory id required");
  const OfflineDataset& data = *view.dataset;

  std::vector<int> ids;
  std::vector<double> kept;
  for (std::size_t i = 0; i < view.ids.size(); ++i) {
    const double w = view.weights[static_cast<Eigen::Index>(i)];
    require(w >= 0.0, "train: negative trajectory weight");
    require(view.ids[i] >= 0 &&
                view.ids[i] < static_cast<int>(data.trajectories.size()),
            "train: trajectory id out of range");
    if (w > 0.0) {
      ids.push_back(view.ids[i]);
      kept.push_back(w);
    }
  }
  require(!ids.empty(), "train: empty dataset view");

  Vector weights = Eigen::Map<Vector>(kept.data(), static_cast<Eigen::Index>(kept.size()));
  weights *= static_cast<double>(weights.size()) / weights.sum();

  const EnvSpec& env = data.env;
  const FlatData flat = flatten_view(data, ids, weights);

  Rng rng(seed);
  AgentParams params = init_agent(env, cfg, rng);

  AdamState critic_adam(params.critic.shape.param_count());
  AdamState actor_adam(params.actor.shape.param_count());

  // Convergence diagnostics compare the stationary Monte-Carlo objective on
  // the weighted view against the full dataset.
  std::optional<FlatData> flat_full;
  if (options.record_convergence)
    flat_full = flatten_view(data, DatasetView::full(data).ids,
                             Vector::Ones(static_cast<Eigen::Index>(
                                 data.trajectories.size())));

  TrainResult result;
  auto record_convergence = [&](long step) {
    const LossGrad full = critic_loss_grad_to_targets(
        params.critic, flat_full->sa, flat_full->rtg,
        Vector::Ones(flat_full->size()));
    const LossGrad rdc = critic_loss_grad_to_targets(params.critic, flat.sa,
                                                     flat.rtg, flat.weights);
    ConvergenceRecord rec;
    rec.step = step;
    rec.full_loss = full.loss;
    rec.full_grad_norm = full.grad.norm();
    rec.approx_err = (rdc.grad - full.grad).norm();
    rec.theta = params.critic.flatten();
    result.log.convergence.push_back(std::move(rec));
  };

  // Snapshot rounds at steps ceil(steps * t / rounds).
  std::multimap<long, int> snapshot_at;
  if (options.checkpoints != nullptr && options.checkpoint_rounds > 0) {
    for (int t = 1; t <= options.checkpoint_rounds; ++t) {
      const long step =
          (static_cast<long>(cfg.steps) * t + options.checkpoint_rounds - 1) /
          options.checkpoint_rounds;
      snapshot_at.emplace(step, t);
    }
  }

  std::uniform_int_distribution<Eigen::Index> pick(0, flat.size() - 1);
  std::normal_distribution<double> noise_dist(0.0, cfg.policy_noise);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(cfg.batch_size));
  double last_actor_loss = 0.0;

  for (long g = 1; g <= cfg.steps; ++g) {
    if (options.record_convergence &&
        (g - 1) % std::max(1, options.convergence_every) == 0)
      record_convergence(g - 1);

    for (auto& i : idx) i = pick(rng);
    const Batch batch = gather_batch(flat, idx);

    Matrix noise(env.act_dim, batch.size());
    for (Eigen::Index j = 0; j < batch.size(); ++j)
      for (int i = 0; i < env.act_dim; ++i)
        noise(i, j) = std::clamp(noise_dist(rng), -cfg.noise_clip, cfg.noise_clip);

    const LossGrad critic_lg =
        weighted_td_loss_grad(params, env, batch, cfg, &noise);
    Vector critic_flat = params.critic.flatten();
    critic_adam.update(critic_flat, critic_lg.grad, cfg.critic_lr);
    params.critic = MlpParams::unflatten(params.critic.shape, critic_flat);

    if (g % cfg.actor_delay == 0) {
      const ActorLossGrad actor_lg =
          weighted_actor_loss_grad(params, env, batch, cfg);
      if (actor_lg.alpha_fallback) ++result.log.alpha_fallbacks;
      last_actor_loss = actor_lg.loss;
      Vector actor_flat = params.actor.flatten();
      actor_adam.update(actor_flat, actor_lg.grad, cfg.actor_lr);
      params.actor = MlpParams::unflatten(params.actor.shape, actor_flat);

      soft_update(params.critic_target, params.critic, cfg.tau);
      soft_update(params.actor_target, params.actor, cfg.tau);
    }

    params.step = g;

    if (g % std::max(1, options.log_every) == 0 || g == cfg.steps)
      result.log.entries.push_back(TrainLogEntry{g, critic_lg.loss, last_actor_loss});

    auto range = snapshot_at.equal_range(g);
    for (auto it = range.first; it != range.second; ++it)
      options.checkpoints->put(it->second, params);
  }

  if (options.record_convergence) record_convergence(cfg.steps);

  result.params = std::move(params);
  return result;
}

EvalStats evaluate(const MlpParams& actor, const ToyEnv& env, int episodes,
                   std::uint64_t seed) {
  require(episodes >= 1, "evaluate: episodes must be >= 1");
  std::vector<double> returns(static_cast<std::size_t>(episodes), 0.0);
  parallel_for(static_cast<std::size_t>(episodes), [&](std::size_t ep) {
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (ep + 1)));
    Vector state = env.reset(rng);
    double total = 0.0;
    for (int t = 0; t < env.spec().horizon; ++t) {
      const Vector action = actor_act(actor, env.spec(), state);
      auto [next_state, reward] = env.step(state, action);
      total += reward;
      state = next_state;
    }
    returns[ep] = total;
  });
  EvalStats stats;
  stats.episodes = episodes;
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= episodes;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= episodes;
  stats.mean_return = mean;
  stats.std_return = std::sqrt(std::max(0.0, var));
  return stats;
}

namespace {

json mlp_to_json(const std::string& name, const MlpParams& p) {
  json j;
  j["name"] = name;
  j["shape"] = {p.shape.in, p.shape.hidden1, p.shape.hidden2, p.shape.out};
  const Vector flat = p.flatten();
  json values = json::array();
  for (Eigen::Index i = 0; i < flat.size(); ++i) values.push_back(flat[i]);
  j["values"] = std::move(values);
  return j;
}

MlpParams mlp_from_json(const json& j) {
  const auto shape_arr = j.at("shape");
  MlpShape shape{shape_arr.at(0).get<int>(), shape_arr.at(1).get<int>(),
                 shape_arr.at(2).get<int>(), shape_arr.at(3).get<int>()};
  const auto& values = j.at("values");
  Vector flat(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    flat[static_cast<Eigen::Index>(i)] = values[i].get<double>();
  return MlpParams::unflatten(shape, flat);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, int round,
                      const AgentParams& params) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  json header;
  header["format_version"] = 1;
  header["round"] = round;
  header["step"] = params.step;
  header["critic_in"] = params.critic.shape.in;
  header["actor_in"] = params.actor.shape.in;
  header["actor_out"] = params.actor.shape.out;
  out << header.dump() << "\n";
  out << mlp_to_json("critic", params.critic).dump() << "\n";
  out << mlp_to_json("actor", params.actor).dump() << "\n";
  out << mlp_to_json("critic_target", params.critic_target).dump() << "\n";
  out << mlp_to_json("actor_target", params.actor_target).dump() << "\n";
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::pair<int, AgentParams> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string line;
  long line_no = 0;
  auto next = [&]() -> json {
    if (!std::getline(in, line)) throw ParseError("truncated checkpoint", line_no + 1);
    ++line_no;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed checkpoint record", line_no);
    return j;
  };
  const json header = next();
  AgentParams params;
  int round = 0;
  try {
    round = header.at("round").get<int>();
    params.step = header.at("step").get<long>();
    params.critic = mlp_from_json(next());
    params.actor = mlp_from_json(next());
    params.critic_target = mlp_from_json(next());
    params.actor_target = mlp_from_json(next());
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad checkpoint: ") + e.what(), line_no);
  }
  return {round, std::move(params)};
}

std::string checkpoint_filename(int round) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "checkpoint_%04d.ckpt.jsonl", round);
  return buf;
}

void save_checkpoints(const CheckpointStore& store,
                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [round, params] : store.all())
    write_checkpoint(dir / checkpoint_filename(round), round, params);
}

CheckpointStore load_checkpoints(const std::filesystem::path& dir, int rounds) {
  CheckpointStore store;
  for (int t = 1; t <= rounds; ++t) {
    const auto path = dir / checkpoint_filename(t);
    if (!std::filesystem::exists(path))
      throw IoError("missing checkpoint for round " + std::to_string(t) +
                    ": " + path.string());
    auto [round, params] = read_checkpoint(path);
    if (round != t)
      throw ValidationError("checkpoint file " + path.string() +
                            " holds round " + std::to_string(round));
    store.put(t, params);
  }
  return store;
}

}  // namespace redor
