#include "redor/selector.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

namespace redor {

using json = nlohmann::json;

void SelectorConfig::validate() const {
  require(rounds >= 1, "selector: rounds must be >= 1");
  require(top_return_percent > 0.0 && top_return_percent <= 100.0,
          "selector: top-return percent must be in (0, 100]");
  require(epsilon > 0.0, "selector: epsilon must be positive");
  require(lambda >= 0.0, "selector: lambda must be nonnegative");
}

int SelectorConfig::resolved_budget(std::size_t trajectory_count) const {
  if (budget >= 1) return budget;
  return static_cast<int>((trajectory_count + 19) / 20);  // ceil(5%)
}

double residual_error(const Vector& weights, const Matrix& subset_gradients,
                      const Vector& full_gradient) {
  require(weights.size() == subset_gradients.cols(),
          "residual_error: one weight per column required");
  require(subset_gradients.cols() == 0 ||
              subset_gradients.rows() == full_gradient.size(),
          "residual_error: gradient dimension mismatch");
  if (subset_gradients.cols() == 0) return full_gradient.norm();
  return (subset_gradients * weights - full_gradient).norm();
}

double residual_error_reg(const Vector& weights, const Matrix& subset_gradients,
                          const Vector& full_gradient, double lambda) {
  require(lambda >= 0.0, "residual_error_reg: lambda must be nonnegative");
  return residual_error(weights, subset_gradients, full_gradient) +
         lambda * weights.squaredNorm();
}

std::vector<int> top_return_filter(const OfflineDataset& dataset,
                                   double m_percent) {
  require(m_percent > 0.0 && m_percent <= 100.0,
          "top_return_filter: percent must be in (0, 100]");
  const std::size_t n = dataset.trajectories.size();
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(m_percent * static_cast<double>(n) / 100.0));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dataset.trajectories[static_cast<std::size_t>(a)].total_return >
           dataset.trajectories[static_cast<std::size_t>(b)].total_return;
  });
  order.resize(std::min(keep, n));
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

struct TrajectoryGradient {
  Vector sum_grad;  // summed over the trajectory's steps
  double max_td = 0.0;
  double max_grad_q_sq = 0.0;
};

TrajectoryGradient trajectory_gradient(const Trajectory& traj,
                                       const MlpParams& critic) {
  const Eigen::Index steps = static_cast<Eigen::Index>(traj.length());
  const Eigen::Index obs = traj.transitions.front().state.size();
  const Eigen::Index act = traj.transitions.front().action.size();
  Matrix sa(obs + act, steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Transition& tr = traj.transitions[static_cast<std::size_t>(t)];
    sa.col(t).head(obs) = tr.state;
    sa.col(t).tail(act) = tr.action;
  }
  const MlpBatchCache cache = mlp_forward_batch(critic, sa);
  const Vector q = cache.out.row(0).transpose();
  const Vector diff = q - traj.returns_to_go;

  Matrix dy(1, steps);
  dy.row(0) = 2.0 * diff.transpose();

  TrajectoryGradient out;
  out.sum_grad = mlp_backward_batch(critic, sa, cache, dy).param_grad;
  out.max_td = diff.cwiseAbs().maxCoeff();
  out.max_grad_q_sq = mlp_unit_grad_sq_norms(critic, sa, cache).maxCoeff();
  return out;
}

}  // namespace

GradientTable build_gradient_table(const OfflineDataset& dataset,
                                   const std::vector<int>& candidates,
                                   const AgentParams& checkpoint) {
  require(!candidates.empty(), "gradient table: empty candidate set");
  require(checkpoint.critic.shape.in == dataset.env.obs_dim + dataset.env.act_dim,
          "gradient table: checkpoint critic dimension does not match dataset");
  std::vector<int> ids = candidates;
  std::sort(ids.begin(), ids.end());
  require(std::adjacent_find(ids.begin(), ids.end()) == ids.end(),
          "gradient table: duplicate candidate ids");
  require(ids.front() >= 0 &&
              ids.back() < static_cast<int>(dataset.trajectories.size()),
          "gradient table: candidate id out of range");

  const std::size_t n_traj = dataset.trajectories.size();
  std::vector<TrajectoryGradient> per_traj(n_traj);
  parallel_for(n_traj, [&](std::size_t i) {
    per_traj[i] = trajectory_gradient(dataset.trajectories[i], checkpoint.critic);
  });

  GradientTable table;
  table.candidate_ids = std::move(ids);

  const Eigen::Index dim = checkpoint.critic.shape.param_count();
  Vector full = Vector::Zero(dim);
  for (std::size_t i = 0; i < n_traj; ++i) {
    full += per_traj[i].sum_grad;
    table.u_td = std::max(table.u_td, per_traj[i].max_td);
    table.u_grad_q =
        std::max(table.u_grad_q, std::sqrt(per_traj[i].max_grad_q_sq));
  }
  table.full_gradient = full / static_cast<double>(dataset.transition_count());

  table.gradients.resize(dim, static_cast<Eigen::Index>(table.candidate_ids.size()));
  for (std::size_t k = 0; k < table.candidate_ids.size(); ++k) {
    const std::size_t id = static_cast<std::size_t>(table.candidate_ids[k]);
    table.gradients.col(static_cast<Eigen::Index>(k)) =
        per_traj[id].sum_grad /
        static_cast<double>(dataset.trajectories[id].length());
  }
  return table;
}

namespace {

Matrix columns_of(const Matrix& all, const std::vector<int>& cols) {
  Matrix out(all.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = all.col(cols[k]);
  return out;
}

// Ridge solve over the visited columns with negatives clamped to zero and the
// positive support re-solved until it stabilizes. Weight entries follow the
// `visited` order; clamped entries are zero.
Vector clamped_ridge_weights(const Matrix& all_columns,
                             const std::vector<int>& visited,
                             const Vector& target, double lambda) {
  std::vector<int> active(visited.size());
  std::iota(active.begin(), active.end(), 0);
  Vector w = Vector::Zero(static_cast<Eigen::Index>(visited.size()));

  while (!active.empty()) {
    std::vector<int> active_cols;
    active_cols.reserve(active.size());
    for (int k : active) active_cols.push_back(visited[static_cast<std::size_t>(k)]);
    const Vector sol =
        ridge_solve(columns_of(all_columns, active_cols), target, lambda);

    std::vector<int> positive;
    for (std::size_t k = 0; k < active.size(); ++k)
      if (sol[static_cast<Eigen::Index>(k)] > 0.0) positive.push_back(active[k]);

    if (positive.size() == active.size()) {
      w.setZero();
      for (std::size_t k = 0; k < active.size(); ++k)
        w[active[k]] = sol[static_cast<Eigen::Index>(k)];
      return w;
    }
    active = std::move(positive);
  }
  w.setZero();
  return w;
}

}  // namespace

Selection omp_select(const GradientTable& table, const SelectorConfig& cfg) {
  cfg.validate();
  require(table.candidate_count() >= 1, "omp_select: empty candidate set");

  const Vector& g = table.full_gradient;
  const Matrix& cols = table.gradients;
  const Eigen::Index n = table.candidate_count();
  const double g_norm = g.norm();
  const int budget =
      cfg.budget >= 1 ? std::min<int>(cfg.budget, static_cast<int>(n))
                      : static_cast<int>(n);

  Selection sel;
  sel.method = "redor";
  sel.round = table.round;
  sel.residual_history.push_back(g_norm);  // Err_lambda at w = 0

  std::vector<int> visited;  // column indices, in pick order
  std::vector<char> in_visited(static_cast<std::size_t>(n), 0);
  Vector w(0);

  if (g_norm > 0.0) {
    while (static_cast<int>(visited.size()) < budget) {
      const Vector residual =
          visited.empty() ? g : Vector(g - columns_of(cols, visited) * w);

      int best = -1;
      double best_corr = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (in_visited[static_cast<std::size_t>(i)]) continue;
        const double corr = std::abs(cols.col(i).dot(residual));
        if (corr > best_corr) {
          best_corr = corr;
          best = static_cast<int>(i);
        }
      }
      if (best < 0 || best_corr <= 0.0) break;  // nothing correlates

      visited.push_back(best);
      in_visited[static_cast<std::size_t>(best)] = 1;

      Vector w_new;
      try {
        w_new = clamped_ridge_weights(cols, visited, g, cfg.lambda);
      } catch (const SingularSystemError&) {
        w_new = Vector::Zero(static_cast<Eigen::Index>(visited.size()));
        w_new.head(w.size()) = w;
      }
      double err = residual_error_reg(w_new, columns_of(cols, visited), g,
                                      cfg.lambda);
      if (err > sel.residual_history.back()) {
        // The clamped re-solve moved off the previous support; keep the old
        // weights so the recorded residual never increases.
        w_new = Vector::Zero(static_cast<Eigen::Index>(visited.size()));
        w_new.head(w.size()) = w;
        err = sel.residual_history.back();
      }
      w = std::move(w_new);
      sel.residual_history.push_back(err);

      if (err / std::max(g_norm, 1e-300) <= cfg.epsilon) break;
    }
  }

  std::vector<std::pair<int, double>> support;
  for (std::size_t k = 0; k < visited.size(); ++k)
    if (w[static_cast<Eigen::Index>(k)] > 0.0)
      support.emplace_back(table.candidate_ids[static_cast<std::size_t>(
                               visited[k])],
                           w[static_cast<Eigen::Index>(k)]);
  std::sort(support.begin(), support.end());

  sel.ids.reserve(support.size());
  sel.weights.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    sel.ids.push_back(support[k].first);
    sel.weights[static_cast<Eigen::Index>(k)] = support[k].second;
  }
  return sel;
}

MultiRoundSelection redor_select(const OfflineDataset& dataset,
                                 const CheckpointStore& checkpoints,
                                 const SelectorConfig& cfg) {
  cfg.validate();
  SelectorConfig resolved = cfg;
  resolved.budget = cfg.resolved_budget(dataset.trajectories.size());

  const std::vector<int> candidates =
      top_return_filter(dataset, cfg.top_return_percent);

  MultiRoundSelection result;
  std::map<int, std::pair<double, int>> merged;  // id -> (weight sum, hits)
  for (int t = 1; t <= cfg.rounds; ++t) {
    GradientTable table =
        build_gradient_table(dataset, candidates, checkpoints.get(t));
    table.round = t;
    Selection sel = omp_select(table, resolved);
    sel.round = t;
    for (std::size_t k = 0; k < sel.ids.size(); ++k) {
      auto& slot = merged[sel.ids[k]];
      slot.first += sel.weights[static_cast<Eigen::Index>(k)];
      slot.second += 1;
    }
    result.rounds.push_back(std::move(sel));
  }

  result.ids.reserve(merged.size());
  result.weights.resize(static_cast<Eigen::Index>(merged.size()));
  Eigen::Index k = 0;
  for (const auto& [id, acc] : merged) {
    result.ids.push_back(id);
    result.weights[k++] = acc.first / acc.second;
  }
  return result;
}

BaselineMethod parse_baseline_method(const std::string& name) {
  if (name == "random") return BaselineMethod::random;
  if (name == "prioritized") return BaselineMethod::prioritized;
  if (name == "top_return") return BaselineMethod::top_return;
  if (name == "full") return BaselineMethod::full;
  throw ContractError("unknown baseline method: '" + name + "'");
}

std::string baseline_method_name(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::random: return "random";
    case BaselineMethod::prioritized: return "prioritized";
    case BaselineMethod::top_return: return "top_return";
    case BaselineMethod::full: return "full";
  }
  return "unknown";
}

Selection baseline_select(const OfflineDataset& dataset, BaselineMethod method,
                          int size, const AgentParams* params,
                          std::uint64_t seed) {
  const int n = static_cast<int>(dataset.trajectories.size());
  if (method != BaselineMethod::full)
    require(size >= 1 && size <= n, "baseline_select: size out of range");

  Selection sel;
  sel.method = baseline_method_name(method);

  switch (method) {
    case BaselineMethod::full: {
      sel.ids.resize(static_cast<std::size_t>(n));
      std::iota(sel.ids.begin(), sel.ids.end(), 0);
      break;
    }
    case BaselineMethod::random: {
      std::vector<int> pool(static_cast<std::size_t>(n));
      std::iota(pool.begin(), pool.end(), 0);
      Rng rng(seed);
      for (int k = 0; k < size; ++k) {
        std::uniform_int_distribution<int> pick(k, n - 1);
        std::swap(pool[static_cast<std::size_t>(k)],
                  pool[static_cast<std::size_t>(pick(rng))]);
      }
      sel.ids.assign(pool.begin(), pool.begin() + size);
      std::sort(sel.ids.begin(), sel.ids.end());
      break;
    }
    case BaselineMethod::top_return: {
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dataset.trajectories[static_cast<std::size_t>(a)].total_return >
               dataset.trajectories[static_cast<std::size_t>(b)].total_return;
      });
      order.resize(static_cast<std::size_t>(size));
      std::sort(order.begin(), order.end());
      sel.ids = std::move(order);
      break;
    }
    case BaselineMethod::prioritized: {
      require(params != nullptr, "baseline_select: prioritized needs agent params");
      TrainConfig cfg;
      cfg.gamma = dataset.gamma;
      std::vector<double> scores(static_cast<std::size_t>(n), 0.0);
      parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        const Trajectory& traj = dataset.trajectories[i];
        const Vector y =
            td_targets(*params, dataset.env, traj.transitions, cfg, nullptr);
        double acc = 0.0;
        for (std::size_t t = 0; t < traj.length(); ++t) {
          const Transition& tr = traj.transitions[t];
          const double q = critic_value(params->critic, tr.state, tr.action);
          const double diff = y[static_cast<Eigen::Index>(t)] - q;
          acc += diff * diff;
        }
        scores[i] = acc / static_cast<double>(traj.length());
      });
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] >
               scores[static_cast<std::size_t>(b)];
      });
      order.resize(static_cast<std::size_t>(size));
      std::sort(order.begin(), order.end());
      sel.ids = std::move(order);
      break;
    }
  }

  sel.weights = Vector::Ones(static_cast<Eigen::Index>(sel.ids.size()));
  return sel;
}

void write_selection(const SelectionFile& sel,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  json header;
  header["format_version"] = 1;
  header["method"] = sel.method;
  header["trajectory_count"] = sel.trajectory_count;
  header["config"] = {{"rounds", sel.config.rounds},
                      {"top_return_percent", sel.config.top_return_percent},
                      {"epsilon", sel.config.epsilon},
                      {"lambda", sel.config.lambda},
                      {"budget", sel.config.budget},
                      {"seed", sel.config.seed}};
  json histories = json::array();
  for (const auto& h : sel.residual_histories) histories.push_back(h);
  header["residual_histories"] = std::move(histories);
  out << header.dump() << "\n";
  for (std::size_t k = 0; k < sel.ids.size(); ++k) {
    json rec;
    rec["id"] = sel.ids[k];
    rec["weight"] = sel.weights[static_cast<Eigen::Index>(k)];
    out << rec.dump() << "\n";
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

SelectionFile read_selection(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object())
    throw ParseError("malformed header", 1);

  SelectionFile sel;
  long line_no = 1;
  try {
    sel.method = header.at("method").get<std::string>();
    sel.trajectory_count = header.at("trajectory_count").get<std::size_t>();
    const json& cfg = header.at("config");
    sel.config.rounds = cfg.at("rounds").get<int>();
    sel.config.top_return_percent = cfg.at("top_return_percent").get<double>();
    sel.config.epsilon = cfg.at("epsilon").get<double>();
    sel.config.lambda = cfg.at("lambda").get<double>();
    sel.config.budget = cfg.at("budget").get<int>();
    sel.config.seed = cfg.at("seed").get<std::uint64_t>();
    for (const auto& h : header.at("residual_histories"))
      sel.residual_histories.push_back(h.get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad header: ") + e.what(), 1);
  }

  std::vector<double> weights;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
      throw ParseError("malformed selection record", line_no);
    try {
      sel.ids.push_back(rec.at("id").get<int>());
      weights.push_back(rec.at("weight").get<double>());
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad selection record: ") + e.what(), line_no);
    }
  }
  sel.weights = Eigen::Map<Vector>(weights.data(),
                                   static_cast<Eigen::Index>(weights.size()));

  for (std::size_t k = 0; k < sel.ids.size(); ++k) {
    if (sel.ids[k] < 0 ||
        static_cast<std::size_t>(sel.ids[k]) >= sel.trajectory_count)
      throw ValidationError("selection id " + std::to_string(sel.ids[k]) +
                            " out of range");
    if (sel.weights[static_cast<Eigen::Index>(k)] < 0.0)
      throw ValidationError("negative selection weight");
    if (k > 0 && sel.ids[k] <= sel.ids[k - 1])
      throw ValidationError("selection ids must be unique and ascending");
  }
  for (const auto& h : sel.residual_histories)
    for (std::size_t i = 1; i < h.size(); ++i)
      if (h[i] > h[i - 1])
        throw ValidationError("residual history increases at entry " +
                              std::to_string(i));
  return sel;
}

}  // namespace redor
