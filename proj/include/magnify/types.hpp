#pragma once

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <string>

namespace magnify {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A map R^n -> R^n queried pointwise. Must be total on the ball being probed
/// and safe to call concurrently.
using Evaluator = std::function<Vector(const Vector&)>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_dimension(Eigen::Index got, Eigen::Index expected, const char* what) {
  if (got != expected) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace magnify
