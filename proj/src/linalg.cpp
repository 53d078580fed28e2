#include "fpkproj/linalg.hpp"

#include <cmath>

namespace fpkproj::linalg {

Spectrum symmetric_spectrum(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) return {std::nan(""), std::nan("")};
    const auto& ev = es.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, ErrorKind on_failure,
                          const std::string& what, double max_condition) {
    if (m.rows() != m.cols() || m.rows() != b.size()) {
        throw Error(ErrorKind::InvalidArgument, what + ": dimension mismatch");
    }
    if (!m.allFinite() || !b.allFinite()) throw Error(on_failure, what + ": non-finite entries");
    const auto spec = symmetric_spectrum(m);
    if (!(spec.min > 0.0)) throw Error(on_failure, what + ": matrix is not positive definite");
    if (spec.condition() > max_condition) {
        throw Error(on_failure, what + ": condition number " + std::to_string(spec.condition()) + " too large");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    return m.partialPivLu().solve(b);
}

}  // namespace fpkproj::linalg
