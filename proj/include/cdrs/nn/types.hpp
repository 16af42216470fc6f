#pragma once

#include <Eigen/Dense>
#include <random>

namespace cdrs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

}  // namespace cdrs
