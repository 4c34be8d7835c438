#pragma once

#include <Eigen/Core>

namespace quasimodo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace quasimodo
