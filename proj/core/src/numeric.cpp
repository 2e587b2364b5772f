#include "redor/numeric.hpp"

#include <Eigen/Cholesky>
#include <charconv>
#include <cstdlib>
#include <thread>
#include <vector>

namespace redor {

namespace {

constexpr double kJitter = 1e-10;
constexpr double kSolveTol = 1e-10;

bool try_solve(const Matrix& a, const Vector& b, Vector& w) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  w = llt.solve(b);
  if (!w.allFinite()) return false;
  double scale = std::max(1.0, b.norm() + a.norm() * w.norm());
  return (a * w - b).norm() <= kSolveTol * scale;
}

}  // namespace

Vector ridge_solve(const Matrix& columns, const Vector& target, double lambda) {
  require(columns.cols() >= 1, "ridge_solve: need at least one column");
  require(columns.rows() == target.size(),
          "ridge_solve: column length does not match target length");
  require(lambda >= 0.0, "ridge_solve: lambda must be nonnegative");

  const Eigen::Index k = columns.cols();
  Matrix gram = columns.transpose() * columns;
  gram.diagonal().array() += lambda;
  const Vector rhs = columns.transpose() * target;

  Vector w;
  if (try_solve(gram, rhs, w)) return w;
  gram.diagonal().array() += kJitter;
  if (try_solve(gram, rhs, w)) return w;
  throw SingularSystemError("ridge_solve: singular normal equations for " +
                            std::to_string(k) + " column(s) at lambda = " +
                            format_double(lambda));
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ValidationError("not a valid number: '" + std::string(text) + "'");
  return value;
}

std::size_t worker_count(std::size_t jobs) {
  if (jobs <= 1) return jobs == 0 ? 1 : 1;
  std::size_t cap = std::thread::hardware_concurrency();
  if (cap == 0) cap = 1;
  if (const char* env = std::getenv("REDOR_THREADS")) {
    char* end = nullptr;
    long parsed = std::strtol(env, &end, 10);
    if (end != env && parsed >= 1) cap = static_cast<std::size_t>(parsed);
  }
  return std::min(cap, jobs);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace redor
