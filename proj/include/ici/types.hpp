#pragma once

#include <Eigen/Dense>

namespace ici {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace ici
