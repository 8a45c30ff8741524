#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evade {

// Minimal row-major dense matrix; rows are handed out as spans.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }

  void push_row(std::span<const double> values) {
    data.insert(data.end(), values.begin(), values.end());
    ++rows;
  }
};

}  // namespace evade
