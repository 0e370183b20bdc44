#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mqsa {

using Index = Eigen::Index;

// Dense storage is row-major throughout: rows are items/positions, the last
// axis is the feature axis, and row blocks slice cheaply.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Exceptions used across the library; messages name the offending shape,
// key, or line so failures are actionable from the CLI.
struct DimensionError : std::invalid_argument { using std::invalid_argument::invalid_argument; };
struct ParameterError : std::invalid_argument { using std::invalid_argument::invalid_argument; };
struct ContractError : std::logic_error { using std::logic_error::logic_error; };
struct ParseError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ValidationError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DatasetError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct CheckpointError : std::runtime_error { using std::runtime_error::runtime_error; };
struct NumericError : std::runtime_error { using std::runtime_error::runtime_error; };

std::string shape_str(const std::vector<Index>& dims);
std::string shape_str(const Matrix& m);

}  // namespace mqsa
