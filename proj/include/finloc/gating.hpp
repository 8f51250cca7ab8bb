#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace finloc {

// Two scalar sigmoid gates over the concatenation of two feature
// vectors of length dim. The weight matrix is 2 x 2*dim, row-major;
// zero-initialized parameters make the layer blend both inputs equally
// at half strength.
struct GateParams {
  std::size_t dim = 0;
  std::vector<double> weight;  // 2 rows of 2*dim
  std::vector<double> bias;    // 2 entries

  static GateParams zeros(std::size_t dim);
};

// Gradients of a scalar objective with respect to every gate input.
struct GateGradients {
  std::vector<double> x1;
  std::vector<double> x2;
  std::vector<double> weight;
  std::vector<double> bias;
};

// out = g1 * x1 + g2 * x2 where (g1, g2) = sigmoid(W [x1; x2] + b).
// The result is a blend, deliberately not renormalized. Throws
// ShapeError on mismatched sizes.
std::vector<double> gate_forward(std::span<const double> x1,
                                 std::span<const double> x2,
                                 const GateParams& params);

// Backward pass for an upstream gradient of the same length as the
// output.
GateGradients gate_backward(std::span<const double> x1,
                            std::span<const double> x2,
                            const GateParams& params,
                            std::span<const double> upstream);

}  // namespace finloc
