#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace agne {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised for malformed inputs: invalid graphs, dimension mismatches,
/// bad configuration values.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace agne
