#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bisbm {

inline constexpr const char* kVersion = "bisbm 0.1.0";

// Floor applied to estimated Poisson means before any log.
inline constexpr double kLambdaFloor = 1e-8;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace bisbm
