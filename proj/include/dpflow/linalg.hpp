#pragma once

#include <Eigen/Dense>

namespace dpflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace dpflow
