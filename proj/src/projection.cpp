#include "fpkproj/projection.hpp"

#include <cmath>

#include "fpkproj/error.hpp"
#include "fpkproj/linalg.hpp"

namespace fpkproj {

namespace {

Eigen::VectorXd tabulate(const QuadratureRule& rule, const auto& fn) {
    const auto x = rule.nodes();
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = fn(x[i]);
        if (!std::isfinite(v[static_cast<Eigen::Index>(i)])) throw NonFiniteIntegrand(i, x[i]);
    }
    return v;
}

Eigen::Map<const Eigen::VectorXd> weights_of(const QuadratureRule& rule) {
    return {rule.weights().data(), static_cast<Eigen::Index>(rule.size())};
}

}  // namespace

EfProjector::EfProjector(ExpFamily family, SdeModel model) : family_(std::move(family)), model_(std::move(model)) {
    const auto& rule = family_.rule();
    model_.validate_on(rule);
    const auto n = static_cast<Eigen::Index>(family_.dimension());
    const auto rows = static_cast<Eigen::Index>(rule.size());
    generator_.resize(rows, n);
    stat_d1_.resize(rows, n);
    stat_d2_.resize(rows, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& c = family_.stats()[static_cast<std::size_t>(j)];
        if (!c.has_derivatives()) {
            throw Error(ErrorKind::DerivativeUnavailable, family_.name() + ": statistic lacks derivatives");
        }
        generator_.col(j) = tabulate(rule, [&](double x) { return generator_at(model_, c, x); });
        stat_d1_.col(j) = tabulate(rule, [&](double x) { return c.d1(x); });
        stat_d2_.col(j) = tabulate(rule, [&](double x) { return c.d2(x); });
    }
    const auto& f = model_.drift();
    const auto& a = model_.diffusion();
    f_ = tabulate(rule, [&](double x) { return f(x); });
    f1_ = tabulate(rule, [&](double x) { return f.d1(x); });
    a_ = tabulate(rule, [&](double x) { return a(x); });
    a1_ = tabulate(rule, [&](double x) { return a.d1(x); });
    a2_ = tabulate(rule, [&](double x) { return a.d2(x); });
}

Eigen::VectorXd EfProjector::generator_expectation(const NodeDensity& nd) const {
    return generator_.transpose() * nd.weighted;
}

Eigen::VectorXd EfProjector::theta_rhs(const CanonicalParams& theta) const {
    const auto nd = family_.node_density(theta);
    const auto g = fisher_matrix(family_, theta);
    return linalg::solve_spd(g.g, generator_expectation(nd), ErrorKind::DegenerateFisher, family_.name() + " Fisher");
}

Eigen::VectorXd EfProjector::eta_rhs(const ExpectationParams& eta, const std::optional<CanonicalParams>& guess,
                                     CanonicalParams* recovered) const {
    auto theta = expectation_to_canonical(family_, eta, guess);
    const auto nd = family_.node_density(theta);
    if (recovered) *recovered = std::move(theta);
    return generator_expectation(nd);
}

ResidualReport EfProjector::residual(const CanonicalParams& theta) const {
    const auto nd = family_.node_density(theta);
    const Eigen::VectorXd eta = family_.stat_table().transpose() * nd.weighted;
    const auto g = fisher_matrix(family_, theta);

    // h = L*p / p, so that w = ½ h √p and u_i = ½ √p (c_i - η_i).
    const Eigen::VectorXd s1 = stat_d1_ * theta.theta;
    const Eigen::VectorXd s2 = stat_d2_ * theta.theta;
    const Eigen::ArrayXd h = -f1_.array() - f_.array() * s1.array() +
                             0.5 * (a2_.array() + 2.0 * a1_.array() * s1.array() +
                                    a_.array() * (s2.array() + s1.array().square()));
    if (!h.allFinite()) throw Error(ErrorKind::NonFiniteIntegrand, "L*p / p is not finite on the nodes");

    const Eigen::MatrixXd centred = family_.stat_table().rowwise() - eta.transpose();
    const Eigen::ArrayXd pw = nd.weighted.array();

    ResidualReport r;
    r.w_norm_sq = 0.25 * (pw * h.square()).sum();
    const Eigen::VectorXd b = 0.25 * centred.transpose() * (pw * h).matrix();  // <w, u_i>
    const Eigen::VectorXd ginv_b = linalg::solve_spd(g.g, b, ErrorKind::DegenerateFisher, family_.name() + " Fisher");
    r.projected_norm_sq = 4.0 * b.dot(ginv_b);
    r.residual_sq = std::max(0.0, r.w_norm_sq - r.projected_norm_sq);

    const Eigen::VectorXd alpha = 4.0 * ginv_b;  // Π^g w = Σ α_i u_i
    const Eigen::ArrayXd remainder = h - (centred * alpha).array();
    r.direct_residual_sq = 0.25 * (pw * remainder.square()).sum();
    return r;
}

MixProjector::MixProjector(MixtureFamily family, SdeModel model) : family_(std::move(family)), model_(std::move(model)) {
    const auto& rule = family_.rule();
    model_.validate_on(rule);
    const auto n = static_cast<Eigen::Index>(family_.dimension());
    const auto rows = static_cast<Eigen::Index>(rule.size());
    const auto w = weights_of(rule);
    const auto& q = family_.component_table();

    tangent_generator_.resize(rows, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& phi = family_.tangents()[static_cast<std::size_t>(j)];
        if (!phi.has_derivatives()) {
            throw Error(ErrorKind::DerivativeUnavailable, family_.name() + ": component lacks derivatives");
        }
        tangent_generator_.col(j) = tabulate(rule, [&](double x) { return generator_at(model_, phi, x); });
    }
    drift_ = tangent_generator_.transpose() * w.asDiagonal() * q;

    // Galerkin basis φ_i = q_i - q_{n+1} (i ≤ n), φ_{n+1} = q_{n+1}.
    Eigen::MatrixXd basis(rows, n + 1);
    basis.leftCols(n) = q.leftCols(n).colwise() - q.col(n);
    basis.col(n) = q.col(n);
    Eigen::MatrixXd basis_generator(rows, n + 1);
    basis_generator.leftCols(n) = tangent_generator_;
    const auto& last = family_.components().back();
    basis_generator.col(n) = tabulate(rule, [&](double x) { return generator_at(model_, last, x); });
    mass_ = basis.transpose() * w.asDiagonal() * basis;
    stiffness_ = basis.transpose() * w.asDiagonal() * basis_generator;
}

Eigen::VectorXd MixProjector::theta_rhs(const MixtureWeights& w) const {
    family_.check_admissible(w);
    return theta_rate(w.theta);
}

Eigen::VectorXd MixProjector::theta_rate(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd rate = drift_ * MixtureFamily::full_weights(theta);
    return linalg::solve_spd(family_.gamma(), rate, ErrorKind::DegenerateMixtureMetric, "direct metric γ");
}

Eigen::VectorXd MixProjector::m_rhs(const MixtureExpectations& m) const {
    expectations_to_weights(family_, m);  // throws when m maps outside the simplex
    return m_rate(m.m);
}

Eigen::VectorXd MixProjector::m_rate(const Eigen::VectorXd& m) const {
    const Eigen::VectorXd theta = expectations_to_weights_unchecked(family_, {m});
    const Eigen::VectorXd p = family_.component_table() * MixtureFamily::full_weights(theta);
    const auto wts = weights_of(family_.rule());
    return tangent_generator_.transpose() * (wts.array() * p.array()).matrix();
}

Eigen::VectorXd MixProjector::galerkin_rhs(const Eigen::VectorXd& c) const {
    const auto n = static_cast<Eigen::Index>(family_.dimension());
    if (c.size() != n + 1) throw Error(ErrorKind::InvalidArgument, "Galerkin coefficients must have length n + 1");
    if (std::abs(c[n] - 1.0) > 1e-12) {
        throw Error(ErrorKind::InvalidArgument, "Galerkin constraint c_{n+1} = 1 violated");
    }
    // Σ_i <φ_i, φ_j> ċ_i = Σ_i <φ_i, L φ_j> c_i for j ≤ n, with ċ_{n+1} = 0:
    // the last row and column drop out of the mass system.
    const Eigen::VectorXd load = (stiffness_.transpose() * c).head(n);
    const Eigen::MatrixXd reduced = mass_.topLeftCorner(n, n).transpose();
    return linalg::solve_spd(reduced, load, ErrorKind::DegenerateBasis, "Galerkin mass matrix");
}

Eigen::VectorXd ef_theta_rhs(const ExpFamily& fam, const SdeModel& model, const CanonicalParams& theta) {
    return EfProjector(fam, model).theta_rhs(theta);
}

Eigen::VectorXd ef_eta_rhs(const ExpFamily& fam, const SdeModel& model, const ExpectationParams& eta,
                           const std::optional<CanonicalParams>& guess) {
    return EfProjector(fam, model).eta_rhs(eta, guess);
}

Eigen::VectorXd mixture_theta_rhs(const MixtureFamily& fam, const SdeModel& model, const MixtureWeights& w) {
    return MixProjector(fam, model).theta_rhs(w);
}

Eigen::VectorXd mixture_m_rhs(const MixtureFamily& fam, const SdeModel& model, const MixtureExpectations& m) {
    return MixProjector(fam, model).m_rhs(m);
}

ResidualReport residual(const ExpFamily& fam, const SdeModel& model, const CanonicalParams& theta) {
    return EfProjector(fam, model).residual(theta);
}

Eigen::VectorXd galerkin_rhs(const MixtureFamily& fam, const SdeModel& model, const Eigen::VectorXd& coefficients) {
    return MixProjector(fam, model).galerkin_rhs(coefficients);
}

}  // namespace fpkproj
