#include "fpkproj/mixture_family.hpp"

#include <cmath>
#include <numbers>

#include "fpkproj/error.hpp"
#include "fpkproj/linalg.hpp"

namespace fpkproj {

namespace {

constexpr double kNormalisationTolerance = 1e-8;
constexpr double kMetricMinEigenvalue = 1e-12;

}  // namespace

MixtureFamily::MixtureFamily(std::string name, std::vector<DifferentiableFn> components, QuadratureRule rule)
    : name_(std::move(name)), components_(std::move(components)), rule_(std::move(rule)) {
    if (components_.size() < 2) throw Error(ErrorKind::InvalidArgument, "mixture needs at least two components");
    const auto nodes = rule_.nodes();
    const auto count = static_cast<Eigen::Index>(components_.size());
    const auto rows = static_cast<Eigen::Index>(nodes.size());
    table_.resize(rows, count);
    for (Eigen::Index j = 0; j < count; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double v = components_[static_cast<std::size_t>(j)](nodes[static_cast<std::size_t>(i)]);
            if (!std::isfinite(v)) throw NonFiniteIntegrand(static_cast<std::size_t>(i), nodes[static_cast<std::size_t>(i)]);
            if (v < 0.0) throw Error(ErrorKind::InvalidArgument, name_ + ": component " + std::to_string(j) + " is negative");
            table_(i, j) = v;
        }
    }
    const Eigen::Map<const Eigen::VectorXd> w(rule_.weights().data(), rows);
    for (Eigen::Index j = 0; j < count; ++j) {
        const double mass = w.dot(table_.col(j));
        if (std::abs(mass - 1.0) > kNormalisationTolerance) {
            throw Error(ErrorKind::InvalidArgument,
                        name_ + ": component " + std::to_string(j) + " integrates to " + std::to_string(mass));
        }
    }
    const auto n = count - 1;
    const auto& last = components_.back();
    for (Eigen::Index i = 0; i < n; ++i) tangents_.push_back(components_[static_cast<std::size_t>(i)] - last);

    const Eigen::MatrixXd diff = table_.leftCols(n).colwise() - table_.col(n);
    gamma_ = diff.transpose() * w.asDiagonal() * diff;
    gamma_ = 0.5 * (gamma_ + gamma_.transpose());
    beta_ = diff.transpose() * (w.array() * table_.col(n).array()).matrix();
    const auto spec = linalg::symmetric_spectrum(gamma_);
    if (!(spec.min > kMetricMinEigenvalue)) {
        throw Error(ErrorKind::DegenerateMixtureMetric,
                    name_ + ": direct metric γ is not positive definite (components too similar)");
    }
}

MixtureFamily MixtureFamily::gaussian(const std::vector<double>& means, const std::vector<double>& variances,
                                      QuadratureRule rule) {
    if (means.size() != variances.size()) {
        throw Error(ErrorKind::InvalidArgument, "gaussian mixture: means and variances differ in length");
    }
    std::vector<DifferentiableFn> comps;
    for (std::size_t i = 0; i < means.size(); ++i) comps.push_back(DifferentiableFn::gaussian_pdf(means[i], variances[i]));
    return MixtureFamily("gaussian-mixture", std::move(comps), std::move(rule));
}

MixtureFamily MixtureFamily::cosine_circle(const std::vector<int>& harmonics, QuadratureRule rule) {
    const double c = 1.0 / (2.0 * std::numbers::pi);
    std::vector<DifferentiableFn> comps;
    for (int k : harmonics) {
        if (k < 1) throw Error(ErrorKind::InvalidArgument, "cosine harmonics must be >= 1");
        comps.push_back(DifferentiableFn::cosine_series(c, {{k, c}}));
    }
    comps.push_back(DifferentiableFn::cosine_series(c, {}));
    return MixtureFamily("cosine-circle", std::move(comps), std::move(rule));
}

Eigen::VectorXd MixtureFamily::full_weights(const Eigen::VectorXd& theta) {
    Eigen::VectorXd out(theta.size() + 1);
    out.head(theta.size()) = theta;
    out[theta.size()] = 1.0 - theta.sum();
    return out;
}

bool MixtureFamily::is_admissible(const MixtureWeights& w) const {
    if (w.theta.size() != static_cast<Eigen::Index>(dimension()) || !w.theta.allFinite()) return false;
    if ((w.theta.array() < 0.0).any() || (w.theta.array() > 1.0).any()) return false;
    const double s = w.theta.sum();
    return s > kSimplexMargin && s < 1.0 - kSimplexMargin;
}

void MixtureFamily::check_admissible(const MixtureWeights& w) const {
    if (w.theta.size() != static_cast<Eigen::Index>(dimension())) {
        throw Error(ErrorKind::InvalidArgument, name_ + ": weight dimension mismatch");
    }
    if (!is_admissible(w)) {
        throw Error(ErrorKind::InadmissibleWeights, name_ + ": θ must satisfy θ_i ∈ [0,1], 0 < Σθ < 1");
    }
}

bool MixtureFamily::clamp(Eigen::VectorXd& theta) const {
    const Eigen::VectorXd before = theta;
    theta = theta.cwiseMax(0.0).cwiseMin(1.0);
    const double s = theta.sum();
    if (s >= 1.0 - kSimplexMargin) {
        theta *= (1.0 - 2.0 * kSimplexMargin) / s;
    } else if (s <= kSimplexMargin) {
        theta.setConstant(2.0 * kSimplexMargin / static_cast<double>(theta.size()));
    }
    return theta != before;
}

ScalarFn mixture_density(const MixtureFamily& fam, const MixtureWeights& w) {
    fam.check_admissible(w);
    const Eigen::VectorXd full = MixtureFamily::full_weights(w.theta);
    return [comps = fam.components(), full](double x) {
        double s = 0.0;
        for (std::size_t i = 0; i < comps.size(); ++i) s += full[static_cast<Eigen::Index>(i)] * comps[i](x);
        return s;
    };
}

MetricOffset gamma_and_beta(const MixtureFamily& fam) { return {fam.gamma(), fam.beta()}; }

MixtureExpectations weights_to_expectations(const MixtureFamily& fam, const MixtureWeights& w) {
    fam.check_admissible(w);
    return {fam.gamma() * w.theta + fam.beta()};
}

Eigen::VectorXd expectations_to_weights_unchecked(const MixtureFamily& fam, const MixtureExpectations& m) {
    if (m.m.size() != static_cast<Eigen::Index>(fam.dimension())) {
        throw Error(ErrorKind::InvalidArgument, fam.name() + ": expectation dimension mismatch");
    }
    return linalg::solve_spd(fam.gamma(), m.m - fam.beta(), ErrorKind::DegenerateMixtureMetric, "direct metric γ");
}

MixtureWeights expectations_to_weights(const MixtureFamily& fam, const MixtureExpectations& m) {
    Eigen::VectorXd theta = expectations_to_weights_unchecked(fam, m);
    if (!fam.is_admissible({theta})) {
        throw InadmissibleRecovery(fam.name() + ": recovered weights leave the open simplex", theta);
    }
    return {theta};
}

}  // namespace fpkproj
