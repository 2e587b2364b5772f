#pragma once

#include "redor/numeric.hpp"

namespace redor {

// Two-hidden-layer ReLU perceptron: in -> h1 -> h2 -> out, linear output.
struct MlpShape {
  int in = 0;
  int hidden1 = 256;
  int hidden2 = 256;
  int out = 0;

  int param_count() const {
    return hidden1 * in + hidden1 + hidden2 * hidden1 + hidden2 +
           out * hidden2 + out;
  }
  bool operator==(const MlpShape&) const = default;
};

struct MlpParams {
  MlpShape shape;
  Matrix w1, w2, w3;  // (h1 x in), (h2 x h1), (out x h2)
  Vector b1, b2, b3;

  static MlpParams zeros(const MlpShape& shape);
  // Uniform in +/- 1/sqrt(fan_in) per layer, drawn row-major from rng.
  static MlpParams random_init(const MlpShape& shape, Rng& rng);

  // Row-major weights then bias, layer by layer. unflatten(flatten(p)) == p.
  Vector flatten() const;
  static MlpParams unflatten(const MlpShape& shape, const Vector& flat);
};

Vector mlp_forward(const MlpParams& params, const Vector& input);

struct MlpGrads {
  Vector param_grad;  // flattened-parameter order
  Vector input_grad;
};

// Backprop of <output_grad, mlp(input)>; recomputes the forward pass.
MlpGrads mlp_backward(const MlpParams& params, const Vector& input,
                      const Vector& output_grad);

// Batched variants; samples are columns.
struct MlpBatchCache {
  Matrix z1, a1, z2, a2, out;
};

MlpBatchCache mlp_forward_batch(const MlpParams& params, const Matrix& inputs);

struct MlpBatchGrads {
  Vector param_grad;   // summed over batch columns
  Matrix input_grads;  // per-column input gradients
};

MlpBatchGrads mlp_backward_batch(const MlpParams& params, const Matrix& inputs,
                                 const MlpBatchCache& cache,
                                 const Matrix& output_grads);

// Squared parameter-gradient norm of each scalar output column, computed from
// the cached activations without materializing per-sample gradients. Requires
// shape.out == 1 and output_grad == 1.
Vector mlp_unit_grad_sq_norms(const MlpParams& params, const Matrix& inputs,
                              const MlpBatchCache& cache);

}  // namespace redor
