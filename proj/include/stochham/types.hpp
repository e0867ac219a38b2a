#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace stochham {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One state (or driver value) per row; rows are contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Seed = std::uint64_t;

// z -> covector (same dimension as z), written into `out`.
using CovectorField = std::function<void(const Vec& z, Vec& out)>;
using VectorFieldFn = std::function<void(const Vec& z, Vec& out)>;

}  // namespace stochham
