#include "finloc/gating.hpp"

#include <cmath>

#include "finloc/errors.hpp"
#include "finloc/numeric.hpp"

namespace finloc {

namespace {

void require_shapes(std::span<const double> x1, std::span<const double> x2,
                    const GateParams& params) {
  if (params.dim == 0) {
    throw ShapeError("gate: dim must be positive");
  }
  if (x1.size() != params.dim || x2.size() != params.dim) {
    throw ShapeError("gate: input length differs from params.dim");
  }
  if (params.weight.size() != 2 * 2 * params.dim || params.bias.size() != 2) {
    throw ShapeError("gate: weight must be 2 x 2*dim and bias length 2");
  }
  if (!all_finite(x1) || !all_finite(x2) || !all_finite(params.weight) ||
      !all_finite(params.bias)) {
    throw InvalidInputError("gate: inputs and parameters must be finite");
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Pre-activations of the two gates over the concatenated input.
void gate_logits(std::span<const double> x1, std::span<const double> x2,
                 const GateParams& params, double out[2]) {
  const std::size_t d = params.dim;
  for (int g = 0; g < 2; ++g) {
    const std::size_t row = static_cast<std::size_t>(g) * 2 * d;
    double z = params.bias[static_cast<std::size_t>(g)];
    for (std::size_t i = 0; i < d; ++i) {
      z += params.weight[row + i] * x1[i];
      z += params.weight[row + d + i] * x2[i];
    }
    out[g] = z;
  }
}

}  // namespace

GateParams GateParams::zeros(std::size_t dim) {
  GateParams p;
  p.dim = dim;
  p.weight.assign(2 * 2 * dim, 0.0);
  p.bias.assign(2, 0.0);
  return p;
}

std::vector<double> gate_forward(std::span<const double> x1,
                                 std::span<const double> x2,
                                 const GateParams& params) {
  require_shapes(x1, x2, params);
  double z[2];
  gate_logits(x1, x2, params, z);
  const double g1 = sigmoid(z[0]);
  const double g2 = sigmoid(z[1]);
  std::vector<double> out(params.dim);
  for (std::size_t i = 0; i < params.dim; ++i) {
    out[i] = g1 * x1[i] + g2 * x2[i];
  }
  return out;
}

GateGradients gate_backward(std::span<const double> x1,
                            std::span<const double> x2,
                            const GateParams& params,
                            std::span<const double> upstream) {
  require_shapes(x1, x2, params);
  if (upstream.size() != params.dim) {
    throw ShapeError("gate_backward: upstream length differs from params.dim");
  }
  if (!all_finite(upstream)) {
    throw InvalidInputError("gate_backward: upstream must be finite");
  }

  const std::size_t d = params.dim;
  double z[2];
  gate_logits(x1, x2, params, z);
  const double g[2] = {sigmoid(z[0]), sigmoid(z[1])};

  // d objective / d gate value, then through the sigmoid.
  double dgate[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < d; ++i) {
    dgate[0] += upstream[i] * x1[i];
    dgate[1] += upstream[i] * x2[i];
  }
  const double dz[2] = {dgate[0] * g[0] * (1.0 - g[0]),
                        dgate[1] * g[1] * (1.0 - g[1])};

  GateGradients grads;
  grads.x1.assign(d, 0.0);
  grads.x2.assign(d, 0.0);
  grads.weight.assign(2 * 2 * d, 0.0);
  grads.bias.assign(2, 0.0);

  for (int gi = 0; gi < 2; ++gi) {
    const std::size_t row = static_cast<std::size_t>(gi) * 2 * d;
    grads.bias[static_cast<std::size_t>(gi)] = dz[gi];
    for (std::size_t i = 0; i < d; ++i) {
      grads.weight[row + i] = dz[gi] * x1[i];
      grads.weight[row + d + i] = dz[gi] * x2[i];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    grads.x1[i] = g[0] * upstream[i] + dz[0] * params.weight[i] +
                  dz[1] * params.weight[2 * d + i];
    grads.x2[i] = g[1] * upstream[i] + dz[0] * params.weight[d + i] +
                  dz[1] * params.weight[2 * d + d + i];
  }
  return grads;
}

}  // namespace finloc
