#pragma once

#include "redor/agent.hpp"

namespace redor {

// Per-trajectory mean critic gradients at one checkpoint, plus the gradient
// over the whole dataset. Columns are ordered by ascending candidate id.
struct GradientTable {
  int round = 1;
  std::vector<int> candidate_ids;
  Matrix gradients;      // param_dim x candidate count
  Vector full_gradient;  // over every trajectory, not only candidates
  double u_td = 0.0;     // max |y - Q| over the dataset at this checkpoint
  double u_grad_q = 0.0;  // max per-step |grad Q|

  Eigen::Index candidate_count() const { return gradients.cols(); }
};

struct Selection {
  std::string method;
  std::vector<int> ids;  // ascending, unique
  Vector weights;        // one per id, strictly positive for omp output
  std::vector<double> residual_history;  // regularized residual per iteration
  int round = 1;
};

struct SelectorConfig {
  int rounds = 50;
  double top_return_percent = 50.0;
  double epsilon = 0.01;  // stop when Err_lambda / |full grad| drops below
  double lambda = 1e-4;
  int budget = 0;  // max picks per round; <= 0 resolves to ceil(5% of dataset)
  std::uint64_t seed = 0;

  void validate() const;
  int resolved_budget(std::size_t trajectory_count) const;
};

// |sum_i w_i g_i - g|_2. Zero-column matrices are allowed (gives |g|).
double residual_error(const Vector& weights, const Matrix& subset_gradients,
                      const Vector& full_gradient);

// residual_error + lambda * |w|^2.
double residual_error_reg(const Vector& weights, const Matrix& subset_gradients,
                          const Vector& full_gradient, double lambda);

// Ids of the ceil(m * N / 100) highest-return trajectories, ties broken by
// lower id, output ascending.
std::vector<int> top_return_filter(const OfflineDataset& dataset,
                                   double m_percent);

// Candidate columns are per-step means of the Monte-Carlo critic gradient
// over each trajectory; the full gradient averages over every transition in
// the dataset.
GradientTable build_gradient_table(const OfflineDataset& dataset,
                                   const std::vector<int>& candidates,
                                   const AgentParams& checkpoint);

// Greedy residual matching: repeatedly add the unvisited candidate with the
// largest |<g_i, residual>|, re-solve ridge weights over everything visited,
// clamp negatives to zero and re-solve on the positive support. Stops at the
// relative epsilon, the budget, or when no candidate correlates with the
// residual. The recorded history never increases; returned ids carry strictly
// positive weights.
Selection omp_select(const GradientTable& table, const SelectorConfig& cfg);

struct MultiRoundSelection {
  std::vector<int> ids;  // union across rounds, ascending
  Vector weights;        // mean weight over the rounds that chose the id
  std::vector<Selection> rounds;
};

// One filtered gradient-matching pass per stored checkpoint round, then a
// mean-merge of weights across rounds.
MultiRoundSelection redor_select(const OfflineDataset& dataset,
                                 const CheckpointStore& checkpoints,
                                 const SelectorConfig& cfg);

enum class BaselineMethod { random, prioritized, top_return, full };

BaselineMethod parse_baseline_method(const std::string& name);
std::string baseline_method_name(BaselineMethod method);

// Uniform-weight reference selections. `prioritized` ranks trajectories by
// mean per-step squared TD error under the given parameters (zero policy
// noise, so the ranking is deterministic).
Selection baseline_select(const OfflineDataset& dataset, BaselineMethod method,
                          int size, const AgentParams* params,
                          std::uint64_t seed);

// Selection files: header with config echo and per-round residual histories,
// then one record per selected trajectory.
struct SelectionFile {
  std::string method;
  SelectorConfig config;
  std::size_t trajectory_count = 0;
  std::vector<std::vector<double>> residual_histories;
  std::vector<int> ids;
  Vector weights;
};

void write_selection(const SelectionFile& sel, const std::filesystem::path& path);
SelectionFile read_selection(const std::filesystem::path& path);

}  // namespace redor
