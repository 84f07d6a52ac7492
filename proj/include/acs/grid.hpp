#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "acs/errors.hpp"

namespace acs {

class FermiChart;

// Scalar field on a (surface node) x (normal coordinate) tube grid, stored
// node-major: values[node * nt + j].
struct GridField {
  const FermiChart* chart = nullptr;
  std::size_t nodes = 0;
  int nt = 0;
  std::vector<double> values;

  GridField() = default;
  GridField(const FermiChart* c, std::size_t n, int t) : chart(c), nodes(n), nt(t), values(n * t, 0.0) {}

  double& at(std::size_t k, int j) { return values[k * nt + static_cast<std::size_t>(j)]; }
  double at(std::size_t k, int j) const { return values[k * nt + static_cast<std::size_t>(j)]; }

  // Throws InvalidSpec on NaN or infinity.
  void validate(const std::string& what) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        throw Error(ErrorCode::InvalidSpec, what + ": non-finite grid value",
                    {{"node", i / static_cast<std::size_t>(nt)}, {"j", i % static_cast<std::size_t>(nt)}});
      }
    }
  }
};

}  // namespace acs
