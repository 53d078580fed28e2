#include "fpkproj/error.hpp"

#include <cstdio>

namespace fpkproj {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NonFiniteIntegrand: return "NonFiniteIntegrand";
        case ErrorKind::DerivativeUnavailable: return "DerivativeUnavailable";
        case ErrorKind::InadmissibleParameter: return "InadmissibleParameter";
        case ErrorKind::NonIntegrable: return "NonIntegrable";
        case ErrorKind::DegenerateFisher: return "DegenerateFisher";
        case ErrorKind::BoundaryDegeneracy: return "BoundaryDegeneracy";
        case ErrorKind::IllConditionedMoments: return "IllConditionedMoments";
        case ErrorKind::InadmissibleRecovery: return "InadmissibleRecovery";
        case ErrorKind::InadmissibleWeights: return "InadmissibleWeights";
        case ErrorKind::DegenerateMixtureMetric: return "DegenerateMixtureMetric";
        case ErrorKind::DegenerateBasis: return "DegenerateBasis";
        case ErrorKind::TrajectoryExit: return "TrajectoryExit";
        case ErrorKind::SchemeInstability: return "SchemeInstability";
        case ErrorKind::SupportViolation: return "SupportViolation";
        case ErrorKind::NotAnEigenfunction: return "NotAnEigenfunction";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ValidationError: return "ValidationError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

namespace {

std::string format_node(std::size_t index, double node) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "integrand not finite at node %zu (x = %.17g)", index, node);
    return buf;
}

}  // namespace

NonFiniteIntegrand::NonFiniteIntegrand(std::size_t node_index, double node)
    : Error(ErrorKind::NonFiniteIntegrand, format_node(node_index, node)),
      node_index_(node_index),
      node_(node) {}

InadmissibleRecovery::InadmissibleRecovery(const std::string& message, Eigen::VectorXd unconstrained)
    : Error(ErrorKind::InadmissibleRecovery, message), unconstrained_(std::move(unconstrained)) {}

TrajectoryExit::TrajectoryExit(std::size_t step, const std::string& reason)
    : Error(ErrorKind::TrajectoryExit, "step " + std::to_string(step) + ": " + reason), step_(step) {}

NotAnEigenfunction::NotAnEigenfunction(std::size_t index, double sup_residual)
    : Error(ErrorKind::NotAnEigenfunction,
            "statistic " + std::to_string(index) + " fails the eigen-relation (sup residual " +
                std::to_string(sup_residual) + ")"),
      index_(index),
      sup_residual_(sup_residual) {}

}  // namespace fpkproj
