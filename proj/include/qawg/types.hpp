#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qawg {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

// Kernels with an OpenMP variant take this flag; serial is the reference.
enum class Execution { serial, parallel };

// Error hierarchy. The CLI maps ConfigError -> exit 2 and DataError -> exit 3.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

// The request is well-formed but physically impossible (non-passive filter,
// zero-probability herald pattern, mixed state where a pure one is needed).
class PhysicsError : public Error {
  public:
    using Error::Error;
};

// Fock-space truncation would discard more probability than allowed.
class TruncationError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

class DataError : public Error {
  public:
    DataError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

}  // namespace qawg
