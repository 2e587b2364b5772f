#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>

#include "redor/errors.hpp"

namespace redor {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Every run owns exactly one generator; no global RNG anywhere.
using Rng = std::mt19937_64;

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Solves argmin_w ||columns * w - target||^2 + lambda * ||w||^2 through the
// normal equations (G^T G + lambda I) w = G^T target, Cholesky with a single
// 1e-10 jitter retry. Throws SingularSystemError if the system stays
// unsolvable (possible only at lambda = 0 with rank-deficient columns).
Vector ridge_solve(const Matrix& columns, const Vector& target, double lambda);

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

// Worker cap: min(REDOR_THREADS or hardware_concurrency, jobs), at least 1.
std::size_t worker_count(std::size_t jobs);

// Runs fn(0..n-1), fanning out to worker_count(n) threads. Callers keep
// determinism by writing to disjoint preallocated slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace redor
