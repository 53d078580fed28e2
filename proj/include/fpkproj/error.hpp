#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace fpkproj {

/// Failure categories surfaced by the library. The CLI maps these to exit
/// codes, so the numbering of the enum is not significant but the names are.
enum class ErrorKind {
    NonFiniteIntegrand,
    DerivativeUnavailable,
    InadmissibleParameter,
    NonIntegrable,
    DegenerateFisher,
    BoundaryDegeneracy,
    IllConditionedMoments,
    InadmissibleRecovery,
    InadmissibleWeights,
    DegenerateMixtureMetric,
    DegenerateBasis,
    TrajectoryExit,
    SchemeInstability,
    SupportViolation,
    NotAnEigenfunction,
    InvalidArgument,
    ParseError,
    ValidationError,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class NonFiniteIntegrand : public Error {
public:
    NonFiniteIntegrand(std::size_t node_index, double node);

    std::size_t node_index() const noexcept { return node_index_; }
    double node() const noexcept { return node_; }

private:
    std::size_t node_index_;
    double node_;
};

/// Raised when a coordinate inversion lands outside the admissible set.
/// The unconstrained solution is kept for diagnostics.
class InadmissibleRecovery : public Error {
public:
    InadmissibleRecovery(const std::string& message, Eigen::VectorXd unconstrained);

    const Eigen::VectorXd& unconstrained() const noexcept { return unconstrained_; }

private:
    Eigen::VectorXd unconstrained_;
};

class TrajectoryExit : public Error {
public:
    TrajectoryExit(std::size_t step, const std::string& reason);

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class NotAnEigenfunction : public Error {
public:
    NotAnEigenfunction(std::size_t index, double sup_residual);

    std::size_t index() const noexcept { return index_; }
    double sup_residual() const noexcept { return sup_residual_; }

private:
    std::size_t index_;
    double sup_residual_;
};

}  // namespace fpkproj
