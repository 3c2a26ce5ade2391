#pragma once

#include <Eigen/Dense>

namespace covfmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace covfmm
