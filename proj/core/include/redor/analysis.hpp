#pragma once

#include <map>

#include "redor/selector.hpp"

namespace redor {

struct ProbeReport {
  std::string probe;
  std::string instance;
  std::map<std::string, double> quantities;
  double bound = 0.0;
  bool pass = false;
  double tolerance = 0.0;
};

void write_probe_reports(const std::vector<ProbeReport>& reports,
                         const std::filesystem::path& path);

// Minimizes |cols * w - g| + lambda * |w|^2 over unconstrained w via a
// fixed-point on the residual norm; each inner step is one ridge solve.
Vector min_regularized_residual_weights(const Matrix& columns,
                                        const Vector& target, double lambda);

struct BruteForceResult {
  std::vector<int> ids;  // candidate ids of the optimal subset
  Vector weights;
  double err_reg = 0.0;
};

// Exhaustive minimum of the regularized residual over nonempty subsets of
// size <= k, with the selector's nonnegative weight rule. Guarded to <= 14
// candidates and k <= 4; ties resolve to the lexicographically smallest ids.
BruteForceResult brute_force_optimum(const GradientTable& table, int k,
                                     double lambda);

// Empirical submodularity ratio of F(S) = |g| - min_w Err_lambda(w, S) over
// nested subset pairs, against the ratio lower bound computed from the
// table's measured constants. Enumerates all pairs when 3^n fits the budget.
ProbeReport submodularity_ratio_probe(const GradientTable& table, double lambda,
                                      long sample_budget, std::uint64_t seed);

// Checks min_t L(theta_t) against L(theta*) + D*sigma/sqrt(G) + (D/G)*sum eps
// using the convergence records of a training run and a best-loss proxy for
// theta*.
ProbeReport convergence_bound_check(const TrainLog& log,
                                    const Vector& theta_star_proxy,
                                    double theta_star_loss, long total_steps);

// Seeded k-means over the candidate gradients; snaps centroids to their
// nearest candidates and compares the best fit over those columns against the
// summed nearest-center distances.
ProbeReport cluster_bound_check(const GradientTable& table, int cluster_count,
                                std::uint64_t seed);

// Greedy selection error vs the exhaustive optimum, checked against the
// 5 * (ln K + 2) multiplicative bound; also verifies oracle dominance.
ProbeReport greedy_ratio_check(const GradientTable& table, int k, double lambda,
                               int cluster_count);

// Weighted least-squares regression with an exact gradient Lipschitz
// constant, for step-size descent checks.
struct QuadraticToy {
  Matrix features;  // n x d, one sample per row
  Vector targets;
  Vector weights;  // per-sample subset weights, zero = excluded

  double full_loss(const Vector& theta) const;
  Vector full_grad(const Vector& theta) const;
  Vector subset_grad(const Vector& theta) const;
  double lipschitz() const;  // of the full-loss gradient
};

enum class LrSchedule { constant, exact_bound, half_bound };

std::string lr_schedule_name(LrSchedule schedule);

// Gradient descent on the weighted subset loss; wherever the alignment and
// step-size conditions hold, the full loss must not increase.
ProbeReport monotone_descent_check(const QuadraticToy& toy, LrSchedule schedule,
                                   double alpha, int steps, std::uint64_t seed);

struct MetricsRow {
  std::string method;
  std::uint64_t seed = 0;
  long step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  long subset_size = 0;
  double subset_fraction = 0.0;
  double selection_wall_time_ms = 0.0;
};

void export_metrics(const std::vector<MetricsRow>& rows,
                    const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

// Synthetic instances for probes and stress tests. Columns are Gaussian;
// the full gradient is a transition-count-weighted mean of the columns, the
// same shape real tables have.
GradientTable make_random_table(int candidates, int dim, std::uint64_t seed);

QuadraticToy make_random_quadratic(int samples, int dim, std::uint64_t seed);

}  // namespace redor
