#pragma once

#include <Eigen/Dense>

namespace litr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace litr
