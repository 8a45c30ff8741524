#pragma once

#include <cmath>
#include <span>
#include <string>

#include "evade/errors.hpp"

namespace evade {

enum class KernelKind { Linear, Rbf };

// RBF: k(x,z) = exp(-gamma * ||x-z||^2). gamma is the precision parameter;
// the corresponding kernel width is sqrt(2/gamma).
struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;

  static KernelSpec rbf(double gamma) { return {KernelKind::Rbf, gamma}; }
  static KernelSpec linear() { return {KernelKind::Linear, 0.0}; }

  double width() const { return std::sqrt(2.0 / gamma); }
};

inline double dot(std::span<const double> x, std::span<const double> z) {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * z[k];
  return acc;
}

inline double squared_distance(std::span<const double> x, std::span<const double> z) {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - z[k];
    acc += diff * diff;
  }
  return acc;
}

inline double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                          std::span<const double> z) {
  if (x.size() != z.size())
    throw FormatError("kernel_eval: length mismatch " + std::to_string(x.size()) + " vs " +
                      std::to_string(z.size()));
  if (spec.kind == KernelKind::Linear) return dot(x, z);
  return std::exp(-spec.gamma * squared_distance(x, z));
}

}  // namespace evade
