#pragma once

#include <limits>
#include <string>

#include <Eigen/Dense>

#include "fpkproj/error.hpp"

namespace fpkproj::linalg {

inline constexpr double kMaxConditionNumber = 1e12;

/// Smallest and largest eigenvalue of a symmetric matrix.
struct Spectrum {
    double min = 0.0;
    double max = 0.0;
    double condition() const noexcept { return min > 0.0 ? max / min : std::numeric_limits<double>::infinity(); }
};

Spectrum symmetric_spectrum(const Eigen::MatrixXd& m);

/// Solves m x = b for symmetric positive definite m. Cholesky first, LU with
/// partial pivoting if Cholesky breaks down on a nearly semi-definite input.
/// Raises `on_failure` when m is singular or its condition number exceeds
/// `max_condition`.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, ErrorKind on_failure,
                          const std::string& what, double max_condition = kMaxConditionNumber);

}  // namespace fpkproj::linalg
