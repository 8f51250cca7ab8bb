#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

namespace finloc {

bool all_finite(std::span<const double> values);

// Draw in [0, 1) from the top 53 bits of one generator step; identical
// on every platform, unlike the std distributions.
double uniform_unit(std::mt19937_64& rng);

// Standard normal via Box-Muller; consumes exactly two draws per call.
double normal_unit(std::mt19937_64& rng);

// Max-shifted softmax; safe for logits of any magnitude.
std::vector<double> softmax(std::span<const double> logits);
void softmax_into(std::span<const double> logits, std::span<double> out);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace finloc
