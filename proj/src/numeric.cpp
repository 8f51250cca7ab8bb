#include "finloc/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "finloc/errors.hpp"

namespace finloc {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal_unit(std::mt19937_64& rng) {
  const double u1 = std::max(uniform_unit(rng), 1e-300);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  if (logits.size() != out.size()) {
    throw ShapeError("softmax: output size does not match input");
  }
  if (logits.empty()) {
    return;
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] /= total;
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  softmax_into(logits, out);
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace finloc
