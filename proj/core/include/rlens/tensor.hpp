#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rlens/error.hpp"

namespace rlens {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Row-major real tensor.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(element_count(shape), fill) {}
  Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != element_count(shape)) {
      throw ShapeError("tensor data has " + std::to_string(data.size()) + " values, shape " +
                       to_string(shape) + " needs " + std::to_string(element_count(shape)));
    }
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool empty() const { return data.empty(); }
  std::span<double> values() { return data; }
  std::span<const double> values() const { return data; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace rlens
