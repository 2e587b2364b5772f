#include "redor/mlp.hpp"

namespace redor {

namespace {

void check_shape(const MlpShape& s) {
  require(s.in >= 1 && s.hidden1 >= 1 && s.hidden2 >= 1 && s.out >= 1,
          "mlp: all layer dimensions must be positive");
}

int write_matrix(Vector& flat, int pos, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat[pos++] = m(r, c);
  return pos;
}

int read_matrix(const Vector& flat, int pos, Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[pos++];
  return pos;
}

void fill_layer(Matrix& w, Vector& b, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
  for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = dist(rng);
}

}  // namespace

MlpParams MlpParams::zeros(const MlpShape& shape) {
  check_shape(shape);
  MlpParams p;
  p.shape = shape;
  p.w1 = Matrix::Zero(shape.hidden1, shape.in);
  p.b1 = Vector::Zero(shape.hidden1);
  p.w2 = Matrix::Zero(shape.hidden2, shape.hidden1);
  p.b2 = Vector::Zero(shape.hidden2);
  p.w3 = Matrix::Zero(shape.out, shape.hidden2);
  p.b3 = Vector::Zero(shape.out);
  return p;
}

MlpParams MlpParams::random_init(const MlpShape& shape, Rng& rng) {
  MlpParams p = zeros(shape);
  fill_layer(p.w1, p.b1, rng);
  fill_layer(p.w2, p.b2, rng);
  fill_layer(p.w3, p.b3, rng);
  return p;
}

Vector MlpParams::flatten() const {
  Vector flat(shape.param_count());
  int pos = 0;
  pos = write_matrix(flat, pos, w1);
  for (Eigen::Index i = 0; i < b1.size(); ++i) flat[pos++] = b1[i];
  pos = write_matrix(flat, pos, w2);
  for (Eigen::Index i = 0; i < b2.size(); ++i) flat[pos++] = b2[i];
  pos = write_matrix(flat, pos, w3);
  for (Eigen::Index i = 0; i < b3.size(); ++i) flat[pos++] = b3[i];
  return flat;
}

MlpParams MlpParams::unflatten(const MlpShape& shape, const Vector& flat) {
  require(flat.size() == shape.param_count(),
          "mlp: flat vector length does not match shape");
  MlpParams p = zeros(shape);
  int pos = 0;
  pos = read_matrix(flat, pos, p.w1);
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1[i] = flat[pos++];
  pos = read_matrix(flat, pos, p.w2);
  for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2[i] = flat[pos++];
  pos = read_matrix(flat, pos, p.w3);
  for (Eigen::Index i = 0; i < p.b3.size(); ++i) p.b3[i] = flat[pos++];
  return p;
}

Vector mlp_forward(const MlpParams& p, const Vector& input) {
  require(input.size() == p.shape.in, "mlp_forward: input dimension mismatch");
  Vector a1 = ((p.w1 * input + p.b1).array().max(0.0)).matrix();
  Vector a2 = ((p.w2 * a1 + p.b2).array().max(0.0)).matrix();
  return p.w3 * a2 + p.b3;
}

MlpGrads mlp_backward(const MlpParams& p, const Vector& input,
                      const Vector& output_grad) {
  require(input.size() == p.shape.in, "mlp_backward: input dimension mismatch");
  require(output_grad.size() == p.shape.out,
          "mlp_backward: output gradient dimension mismatch");

  const Vector z1 = p.w1 * input + p.b1;
  const Vector a1 = z1.array().max(0.0).matrix();
  const Vector z2 = p.w2 * a1 + p.b2;
  const Vector a2 = z2.array().max(0.0).matrix();

  const Vector dz2 =
      ((p.w3.transpose() * output_grad).array() * (z2.array() > 0.0).cast<double>()).matrix();
  const Vector dz1 =
      ((p.w2.transpose() * dz2).array() * (z1.array() > 0.0).cast<double>()).matrix();

  MlpParams g = MlpParams::zeros(p.shape);
  g.w3 = output_grad * a2.transpose();
  g.b3 = output_grad;
  g.w2 = dz2 * a1.transpose();
  g.b2 = dz2;
  g.w1 = dz1 * input.transpose();
  g.b1 = dz1;

  return MlpGrads{g.flatten(), p.w1.transpose() * dz1};
}

MlpBatchCache mlp_forward_batch(const MlpParams& p, const Matrix& inputs) {
  require(inputs.rows() == p.shape.in,
          "mlp_forward_batch: input dimension mismatch");
  MlpBatchCache c;
  c.z1 = (p.w1 * inputs).colwise() + p.b1;
  c.a1 = c.z1.array().max(0.0).matrix();
  c.z2 = (p.w2 * c.a1).colwise() + p.b2;
  c.a2 = c.z2.array().max(0.0).matrix();
  c.out = (p.w3 * c.a2).colwise() + p.b3;
  return c;
}

MlpBatchGrads mlp_backward_batch(const MlpParams& p, const Matrix& inputs,
                                 const MlpBatchCache& cache,
                                 const Matrix& output_grads) {
  require(output_grads.rows() == p.shape.out &&
              output_grads.cols() == inputs.cols(),
          "mlp_backward_batch: output gradient shape mismatch");

  const Matrix dz2 =
      ((p.w3.transpose() * output_grads).array() * (cache.z2.array() > 0.0).cast<double>())
          .matrix();
  const Matrix dz1 =
      ((p.w2.transpose() * dz2).array() * (cache.z1.array() > 0.0).cast<double>()).matrix();

  MlpParams g = MlpParams::zeros(p.shape);
  g.w3 = output_grads * cache.a2.transpose();
  g.b3 = output_grads.rowwise().sum();
  g.w2 = dz2 * cache.a1.transpose();
  g.b2 = dz2.rowwise().sum();
  g.w1 = dz1 * inputs.transpose();
  g.b1 = dz1.rowwise().sum();

  return MlpBatchGrads{g.flatten(), p.w1.transpose() * dz1};
}

Vector mlp_unit_grad_sq_norms(const MlpParams& p, const Matrix& inputs,
                              const MlpBatchCache& cache) {
  require(p.shape.out == 1, "mlp_unit_grad_sq_norms: scalar output required");
  const Eigen::Index n = inputs.cols();

  // dz2 = w3^T 1 masked, dz1 chained; the per-sample parameter gradient is a
  // stack of rank-one blocks whose norms factor over (dz, activation) pairs.
  Matrix dz2 = ((p.w3.transpose() * Matrix::Ones(1, n)).array() *
                (cache.z2.array() > 0.0).cast<double>())
                   .matrix();
  Matrix dz1 = ((p.w2.transpose() * dz2).array() *
                (cache.z1.array() > 0.0).cast<double>())
                   .matrix();

  Vector out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x_sq = inputs.col(j).squaredNorm();
    const double a1_sq = cache.a1.col(j).squaredNorm();
    const double a2_sq = cache.a2.col(j).squaredNorm();
    out[j] = a2_sq + 1.0 + dz2.col(j).squaredNorm() * (a1_sq + 1.0) +
             dz1.col(j).squaredNorm() * (x_sq + 1.0);
  }
  return out;
}

}  // namespace redor
