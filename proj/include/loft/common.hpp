#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace loft {

// All internal numerics are 64-bit; file payloads may be narrower (see dataio).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed arguments or data: wrong dimensions, non-finite entries, bad labels.
struct InvalidInputError : Error {
  using Error::Error;
};

/// Malformed file content; the message names the byte offset or line number.
struct FormatError : Error {
  using Error::Error;
};

/// The file could not be opened, read, or written.
struct IoError : Error {
  using Error::Error;
};

/// An iteration failed to converge or produced non-finite values.
struct NumericalFailureError : Error {
  using Error::Error;
};

/// A direction set lost rank (QR breakdown, failed retraction step).
struct DegenerateDirectionError : Error {
  using Error::Error;
};

/// A covariance with zero trace or an empty spectrum where a positive one is required.
struct DegenerateCovarianceError : Error {
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInputError(msg);
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const std::string& what) {
  if (!m.derived().allFinite()) throw InvalidInputError(what + ": non-finite entry");
}

}  // namespace loft
