#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace abc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a run cannot produce a meaningful result (as opposed to a
/// malformed call, which raises std::invalid_argument).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace abc
