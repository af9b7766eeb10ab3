#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace changecap {

using Real = double;
using Index = Eigen::Index;

// Row-major storage so a serialized payload is a plain row-major scan of the data.
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Logical tensor shape: rank 0 (scalar), 1 (vector) or 2 (matrix).
using Shape = std::vector<Index>;

enum class Activation { Sigmoid, Relu, Tanh };

}  // namespace changecap
