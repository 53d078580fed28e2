#include "fpkproj/exp_family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpkproj/error.hpp"
#include "fpkproj/linalg.hpp"

namespace fpkproj {

namespace {

constexpr double kAdmissibilityMargin = 1e-12;
constexpr double kGramMinEigenvalue = 1e-10;

// Leading coefficient test for Σ θ_i c_i when every c_i is a polynomial.
bool polynomial_exponent_integrable(const std::vector<DifferentiableFn>& stats, const Eigen::VectorXd& theta) {
    std::vector<double> total;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& c = *stats[i].monomials();
        if (total.size() < c.size()) total.resize(c.size(), 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) total[k] += theta[static_cast<Eigen::Index>(i)] * c[k];
    }
    for (std::size_t k = total.size(); k-- > 1;) {
        if (std::abs(total[k]) > kAdmissibilityMargin) return k % 2 == 0 && total[k] < 0.0;
    }
    return false;
}

}  // namespace

ExpFamily::ExpFamily(std::string name, std::vector<DifferentiableFn> stats, QuadratureRule rule,
                     Admissibility admissibility, int ep_degree)
    : name_(std::move(name)),
      stats_(std::move(stats)),
      rule_(std::move(rule)),
      admissibility_(admissibility),
      ep_degree_(ep_degree) {
    if (stats_.empty()) throw Error(ErrorKind::InvalidArgument, "exponential family needs at least one statistic");
    if (admissibility_ == Admissibility::PolynomialIntegrable) {
        for (const auto& c : stats_) {
            if (!c.monomials()) {
                throw Error(ErrorKind::InvalidArgument, "polynomial admissibility needs polynomial statistics");
            }
        }
    }
    const auto nodes = rule_.nodes();
    const auto n = static_cast<Eigen::Index>(stats_.size());
    table_.resize(static_cast<Eigen::Index>(nodes.size()), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double v = stats_[static_cast<std::size_t>(j)](nodes[i]);
            if (!std::isfinite(v)) throw NonFiniteIntegrand(i, nodes[i]);
            table_(static_cast<Eigen::Index>(i), j) = v;
        }
    }
    const Eigen::Map<const Eigen::VectorXd> w(rule_.weights().data(), static_cast<Eigen::Index>(nodes.size()));
    const Eigen::MatrixXd gram = table_.transpose() * w.asDiagonal() * table_;
    const auto spec = linalg::symmetric_spectrum(gram);
    if (!(spec.min > kGramMinEigenvalue)) {
        throw Error(ErrorKind::InvalidArgument, "sufficient statistics are linearly dependent (Gram eigenvalue " +
                                                    std::to_string(spec.min) + ")");
    }
}

ExpFamily ExpFamily::exponential_polynomial(int n, QuadratureRule rule) {
    if (n < 2 || n % 2 != 0) throw Error(ErrorKind::InvalidArgument, "EP(n) requires an even n >= 2");
    std::vector<DifferentiableFn> stats;
    for (int k = 1; k <= n; ++k) stats.push_back(DifferentiableFn::monomial(k));
    return ExpFamily("EP(" + std::to_string(n) + ")", std::move(stats), std::move(rule),
                     Admissibility::LeadingMonomialNegative, n);
}

ExpFamily ExpFamily::hermite(const std::vector<int>& indices, QuadratureRule rule, double scale) {
    std::vector<DifferentiableFn> stats;
    std::string name = "hermite(";
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 1) throw Error(ErrorKind::InvalidArgument, "Hermite statistics need index >= 1");
        stats.push_back(DifferentiableFn::hermite(indices[i], scale));
        name += (i ? "," : "") + std::to_string(indices[i]);
    }
    return ExpFamily(name + ")", std::move(stats), std::move(rule), Admissibility::PolynomialIntegrable);
}

ExpFamily ExpFamily::custom_polynomial(const std::vector<int>& exponents, QuadratureRule rule) {
    std::vector<DifferentiableFn> stats;
    std::string name = "poly(";
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        if (exponents[i] < 1) throw Error(ErrorKind::InvalidArgument, "polynomial statistics need exponent >= 1");
        stats.push_back(DifferentiableFn::monomial(exponents[i]));
        name += (i ? "," : "") + std::to_string(exponents[i]);
    }
    return ExpFamily(name + ")", std::move(stats), std::move(rule), Admissibility::PolynomialIntegrable);
}

bool ExpFamily::is_admissible(const CanonicalParams& theta) const {
    if (theta.theta.size() != static_cast<Eigen::Index>(dimension()) || !theta.theta.allFinite()) return false;
    switch (admissibility_) {
        case Admissibility::LeadingMonomialNegative:
            return theta.theta[theta.theta.size() - 1] < -kAdmissibilityMargin;
        case Admissibility::PolynomialIntegrable:
            return polynomial_exponent_integrable(stats_, theta.theta);
        case Admissibility::DomainIntegrable:
            return true;
    }
    return false;
}

void ExpFamily::check_admissible(const CanonicalParams& theta) const {
    if (theta.theta.size() != static_cast<Eigen::Index>(dimension())) {
        throw Error(ErrorKind::InvalidArgument, name_ + ": parameter dimension mismatch");
    }
    if (!is_admissible(theta)) {
        throw Error(ErrorKind::InadmissibleParameter, name_ + ": θ outside the admissible set");
    }
}

CanonicalParams ExpFamily::default_guess() const {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
    t[t.size() - 1] = -0.5;
    return {t};
}

double ExpFamily::exponent(const CanonicalParams& theta, double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < stats_.size(); ++i) s += theta.theta[static_cast<Eigen::Index>(i)] * stats_[i](x);
    return s;
}

NodeDensity ExpFamily::node_density(const CanonicalParams& theta) const {
    check_admissible(theta);
    const Eigen::VectorXd s = table_ * theta.theta;
    const double smax = s.maxCoeff();
    if (!std::isfinite(smax)) throw Error(ErrorKind::NonIntegrable, name_ + ": exponent not finite");
    const Eigen::Map<const Eigen::VectorXd> w(rule_.weights().data(), s.size());
    NodeDensity out;
    out.weighted = w.array() * (s.array() - smax).exp();
    const double z = out.weighted.sum();
    if (!(z > 0.0) || !std::isfinite(z)) throw Error(ErrorKind::NonIntegrable, name_ + ": normaliser vanished");
    out.log_partition = smax + std::log(z);
    out.weighted /= z;
    return out;
}

double log_partition(const ExpFamily& fam, const CanonicalParams& theta) {
    return fam.node_density(theta).log_partition;
}

ScalarFn density(const ExpFamily& fam, const CanonicalParams& theta) {
    const double psi = log_partition(fam, theta);
    return [stats = fam.stats(), t = theta.theta, psi](double x) {
        double s = 0.0;
        for (std::size_t i = 0; i < stats.size(); ++i) s += t[static_cast<Eigen::Index>(i)] * stats[i](x);
        return std::exp(s - psi);
    };
}

DifferentiableFn density_fn(const ExpFamily& fam, const CanonicalParams& theta) {
    const double psi = log_partition(fam, theta);
    struct Parts {
        double p, s1, s2;
    };
    auto parts = [stats = fam.stats(), t = theta.theta, psi](double x) {
        double s = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < stats.size(); ++i) {
            const double ti = t[static_cast<Eigen::Index>(i)];
            s += ti * stats[i](x);
            s1 += ti * stats[i].d1(x);
            s2 += ti * stats[i].d2(x);
        }
        return Parts{std::exp(s - psi), s1, s2};
    };
    return DifferentiableFn(
        Representation::Analytic, [parts](double x) { return parts(x).p; },
        [parts](double x) {
            const auto q = parts(x);
            return q.p * q.s1;
        },
        [parts](double x) {
            const auto q = parts(x);
            return q.p * (q.s2 + q.s1 * q.s1);
        });
}

ExpectationParams expectation_params(const ExpFamily& fam, const CanonicalParams& theta, int count) {
    const auto n = static_cast<int>(fam.dimension());
    if (count < 1) throw Error(ErrorKind::InvalidArgument, "expectation count must be positive");
    if (count > n && !fam.is_ep()) {
        throw Error(ErrorKind::InvalidArgument, "extended moments are only defined for EP(n) families");
    }
    const auto nd = fam.node_density(theta);
    ExpectationParams out{Eigen::VectorXd(count)};
    const int direct = std::min(count, n);
    out.eta.head(direct) = fam.stat_table().leftCols(direct).transpose() * nd.weighted;
    if (count > n) {
        const auto x = fam.rule().nodes();
        for (int k = n + 1; k <= count; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += nd.weighted[static_cast<Eigen::Index>(i)] * std::pow(x[i], k);
            out.eta[k - 1] = s;
        }
    }
    return out;
}

ExpectationParams expectation_params(const ExpFamily& fam, const CanonicalParams& theta) {
    return expectation_params(fam, theta, static_cast<int>(fam.dimension()));
}

namespace {

Eigen::MatrixXd centered_fisher(const ExpFamily& fam, const NodeDensity& nd, const Eigen::VectorXd& eta) {
    const Eigen::MatrixXd centred = fam.stat_table().rowwise() - eta.transpose();
    return centred.transpose() * nd.weighted.asDiagonal() * centred;
}

}  // namespace

FisherMatrix fisher_matrix(const ExpFamily& fam, const CanonicalParams& theta) {
    const auto nd = fam.node_density(theta);
    const Eigen::VectorXd eta = fam.stat_table().transpose() * nd.weighted;
    FisherMatrix out{centered_fisher(fam, nd, eta)};
    out.g = 0.5 * (out.g + out.g.transpose());
    const auto spec = linalg::symmetric_spectrum(out.g);
    if (!(spec.min > 0.0) || spec.condition() > linalg::kMaxConditionNumber) {
        throw Error(ErrorKind::DegenerateFisher, fam.name() + ": Fisher matrix is not positive definite");
    }
    return out;
}

ExpectationParams moments_by_recursion(const CanonicalParams& theta, std::span<const double> base, int upto) {
    const auto n = static_cast<int>(theta.theta.size());
    if (n < 1 || static_cast<int>(base.size()) != n - 1) {
        throw Error(ErrorKind::InvalidArgument, "recursion needs base moments η_1..η_{n-1}");
    }
    if (upto < n) throw Error(ErrorKind::InvalidArgument, "recursion target must be >= n");
    const double theta_n = theta.theta[n - 1];
    if (std::abs(theta_n) < 1e-12) {
        throw Error(ErrorKind::BoundaryDegeneracy, "θ_n is too close to zero for the moment recursion");
    }
    std::vector<double> eta(static_cast<std::size_t>(upto) + 1, 0.0);  // eta[0] = η_0 = 1
    eta[0] = 1.0;
    std::copy(base.begin(), base.end(), eta.begin() + 1);
    for (int i = 0; i + n <= upto; ++i) {
        double acc = (i + 1) * eta[static_cast<std::size_t>(i)];
        for (int k = 1; k <= n - 1; ++k) acc += k * theta.theta[k - 1] * eta[static_cast<std::size_t>(i + k)];
        eta[static_cast<std::size_t>(n + i)] = -acc / (n * theta_n);
    }
    ExpectationParams out{Eigen::VectorXd(upto)};
    for (int k = 1; k <= upto; ++k) out.eta[k - 1] = eta[static_cast<std::size_t>(k)];
    return out;
}

ExpectationParams moments_by_recursion(const ExpFamily& fam, const CanonicalParams& theta, int upto) {
    if (!fam.is_ep()) throw Error(ErrorKind::InvalidArgument, "moment recursion needs an EP(n) family");
    const auto n = static_cast<int>(fam.dimension());
    fam.check_admissible(theta);
    std::vector<double> base;
    if (n > 1) {
        const auto eta = expectation_params(fam, theta, n - 1);
        base.assign(eta.eta.data(), eta.eta.data() + eta.eta.size());
    }
    return moments_by_recursion(theta, base, upto);
}

CanonicalParams expectation_to_canonical(const ExpectationParams& eta_2n) {
    const auto len = eta_2n.eta.size();
    if (len < 2 || len % 2 != 0) throw Error(ErrorKind::InvalidArgument, "algebraic inversion needs η_1..η_{2n}");
    const auto n = len / 2;
    Eigen::MatrixXd m(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = eta_2n.eta[i + j + 1];  // η_{(i+1)+(j+1)}
        rhs[i] = -static_cast<double>(i + 2) * eta_2n.eta[i];
    }
    const Eigen::VectorXd scaled = linalg::solve_spd(m, rhs, ErrorKind::IllConditionedMoments, "moment matrix M(η)");
    Eigen::VectorXd theta(n);
    for (Eigen::Index k = 0; k < n; ++k) theta[k] = scaled[k] / static_cast<double>(k + 1);
    if (!(theta[n - 1] < 0.0)) {
        throw InadmissibleRecovery("recovered θ_n is not negative", theta);
    }
    return {theta};
}

CanonicalParams expectation_to_canonical(const ExpFamily& fam, const ExpectationParams& target,
                                         const std::optional<CanonicalParams>& guess, const NewtonOptions& options) {
    const auto n = static_cast<Eigen::Index>(fam.dimension());
    if (target.eta.size() != n) throw Error(ErrorKind::InvalidArgument, "target expectation has wrong length");
    if (!target.eta.allFinite()) throw Error(ErrorKind::InvalidArgument, "target expectation not finite");

    CanonicalParams theta = (guess && fam.is_admissible(*guess)) ? *guess : fam.default_guess();
    const double scale = std::max(1.0, target.eta.cwiseAbs().maxCoeff());
    const auto& table = fam.stat_table();

    auto evaluate = [&](const CanonicalParams& t, NodeDensity& nd, Eigen::VectorXd& resid) {
        nd = fam.node_density(t);
        resid = table.transpose() * nd.weighted - target.eta;
    };

    NodeDensity nd;
    Eigen::VectorXd resid;
    evaluate(theta, nd, resid);
    double err = resid.cwiseAbs().maxCoeff() / scale;

    for (int iter = 0; iter < options.max_iterations && err > options.tolerance; ++iter) {
        const Eigen::VectorXd eta = resid + target.eta;
        Eigen::MatrixXd g = centered_fisher(fam, nd, eta);
        g = 0.5 * (g + g.transpose());
        const Eigen::VectorXd step = linalg::solve_spd(g, -resid, ErrorKind::DegenerateFisher, fam.name() + " Fisher");
        const double objective = nd.log_partition - theta.theta.dot(target.eta);
        const double slope = resid.dot(step);

        bool accepted = false;
        double t = 1.0;
        for (int halving = 0; halving < 60 && !accepted; ++halving, t *= 0.5) {
            CanonicalParams trial{theta.theta + t * step};
            if (!fam.is_admissible(trial)) continue;
            NodeDensity nd_trial;
            Eigen::VectorXd resid_trial;
            try {
                evaluate(trial, nd_trial, resid_trial);
            } catch (const Error&) {
                continue;
            }
            const double obj_trial = nd_trial.log_partition - trial.theta.dot(target.eta);
            const bool armijo = obj_trial <= objective + 1e-4 * t * slope + 1e-15 * (1.0 + std::abs(objective));
            if (armijo || resid_trial.norm() < resid.norm()) {
                theta = std::move(trial);
                nd = std::move(nd_trial);
                resid = std::move(resid_trial);
                accepted = true;
            }
        }
        // Armijo on the convex objective decides acceptance; the residual
        // itself need not shrink monotonically in the max norm.
        err = resid.cwiseAbs().maxCoeff() / scale;
        if (!accepted) break;
    }
    if (err > options.accept) {
        throw InadmissibleRecovery(fam.name() + ": Newton inversion did not reach the target expectations", theta.theta);
    }
    return theta;
}

}  // namespace fpkproj
