#include "fpkproj/ode.hpp"

#include <cmath>

#include "fpkproj/error.hpp"

namespace fpkproj {

std::string_view to_string(OdeKind kind) noexcept {
    switch (kind) {
        case OdeKind::EfTangent: return "tangent-ef";
        case OdeKind::EfAda: return "ada-ef";
        case OdeKind::MixTangent: return "tangent-mix";
        case OdeKind::MixAda: return "ada-mix";
        case OdeKind::Galerkin: return "galerkin";
    }
    return "unknown";
}

ProjectedOde ProjectedOde::ef(std::shared_ptr<const EfProjector> projector, OdeKind kind) {
    if (kind != OdeKind::EfTangent && kind != OdeKind::EfAda) {
        throw Error(ErrorKind::InvalidArgument, "exponential-family projector needs tangent-ef or ada-ef");
    }
    if (!projector) throw Error(ErrorKind::InvalidArgument, "null projector");
    ProjectedOde ode;
    ode.kind_ = kind;
    ode.ef_ = std::move(projector);
    return ode;
}

ProjectedOde ProjectedOde::mixture(std::shared_ptr<const MixProjector> projector, OdeKind kind) {
    if (kind != OdeKind::MixTangent && kind != OdeKind::MixAda && kind != OdeKind::Galerkin) {
        throw Error(ErrorKind::InvalidArgument, "mixture projector needs tangent-mix, ada-mix or galerkin");
    }
    if (!projector) throw Error(ErrorKind::InvalidArgument, "null projector");
    ProjectedOde ode;
    ode.kind_ = kind;
    ode.mix_ = std::move(projector);
    return ode;
}

std::size_t ProjectedOde::dimension() const {
    return ef_ ? ef_->family().dimension() : mix_->family().dimension();
}

Eigen::VectorXd ProjectedOde::rhs(const Eigen::VectorXd& y) const {
    switch (kind_) {
        case OdeKind::EfTangent: {
            const CanonicalParams theta{y};
            ef_->family().check_admissible(theta);
            return ef_->theta_rhs(theta);
        }
        case OdeKind::EfAda: {
            CanonicalParams recovered;
            auto rate = ef_->eta_rhs({y}, warm_, &recovered);
            warm_ = std::move(recovered);
            return rate;
        }
        case OdeKind::MixTangent: return mix_->theta_rate(y);
        case OdeKind::MixAda: return mix_->m_rate(y);
        case OdeKind::Galerkin: {
            Eigen::VectorXd c(y.size() + 1);
            c.head(y.size()) = y;
            c[y.size()] = 1.0;
            return mix_->galerkin_rhs(c);
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown ODE kind");
}

bool ProjectedOde::accept(Eigen::VectorXd& y) const {
    switch (kind_) {
        case OdeKind::EfTangent:
            ef_->family().check_admissible({y});
            return false;
        case OdeKind::EfAda: {
            auto theta = expectation_to_canonical(ef_->family(), {y}, warm_);
            warm_ = std::move(theta);
            return false;
        }
        case OdeKind::MixTangent: return mix_->family().clamp(y);
        case OdeKind::MixAda: {
            const auto& fam = mix_->family();
            Eigen::VectorXd theta = expectations_to_weights_unchecked(fam, {y});
            // A weight sitting exactly on a face comes back as ±1e-17 after the
            // affine round trip; do not count that as leaving the simplex.
            theta = (theta.array() < 0.0 && theta.array() > -1e-13).select(0.0, theta);
            if (!fam.clamp(theta)) return false;
            y = fam.gamma() * theta + fam.beta();
            return true;
        }
        case OdeKind::Galerkin: return false;
    }
    return false;
}

Eigen::VectorXd ProjectedOde::state_from_theta(const Eigen::VectorXd& theta) const {
    switch (kind_) {
        case OdeKind::EfTangent:
            ef_->family().check_admissible({theta});
            return theta;
        case OdeKind::EfAda: {
            warm_ = CanonicalParams{theta};
            return expectation_params(ef_->family(), {theta}).eta;
        }
        case OdeKind::MixTangent:
        case OdeKind::Galerkin:
            mix_->family().check_admissible({theta});
            return theta;
        case OdeKind::MixAda: return weights_to_expectations(mix_->family(), {theta}).m;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown ODE kind");
}

Eigen::VectorXd ProjectedOde::theta_of(const Eigen::VectorXd& y) const {
    switch (kind_) {
        case OdeKind::EfTangent:
        case OdeKind::MixTangent:
        case OdeKind::Galerkin: return y;
        case OdeKind::EfAda: {
            auto theta = expectation_to_canonical(ef_->family(), {y}, warm_);
            warm_ = theta;
            return theta.theta;
        }
        case OdeKind::MixAda: return expectations_to_weights_unchecked(mix_->family(), {y});
    }
    throw Error(ErrorKind::InvalidArgument, "unknown ODE kind");
}

TrajectorySample ProjectedOde::describe(double t, const Eigen::VectorXd& y, bool clamped, bool with_residual) const {
    TrajectorySample s;
    s.t = t;
    s.state = y;
    s.clamped = clamped;
    s.theta = theta_of(y);
    if (ef_) {
        s.eta = kind_ == OdeKind::EfAda ? y : expectation_params(ef_->family(), {s.theta}).eta;
        if (with_residual) s.residual = ef_->residual({s.theta}).residual();
    } else {
        const auto& fam = mix_->family();
        s.eta = kind_ == OdeKind::MixAda ? y : Eigen::VectorXd(fam.gamma() * s.theta + fam.beta());
    }
    return s;
}

std::vector<double> step_times(double t0, double t_end, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "step size must be positive");
    if (!(t_end >= t0)) throw Error(ErrorKind::InvalidArgument, "t_end must not precede t0");
    const double span = t_end - t0;
    const double ratio = span / dt;
    auto n = static_cast<long long>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
        n = static_cast<long long>(std::ceil(ratio));
    }
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(n) + 1);
    for (long long k = 0; k < n; ++k) times.push_back(t0 + static_cast<double>(k) * dt);
    times.push_back(t_end);
    return times;
}

Eigen::VectorXd rk4_step(const OdeRhs& f, double t, const Eigen::VectorXd& y, double h) {
    const Eigen::VectorXd k1 = f(t, y);
    const Eigen::VectorXd k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd integrate_rk4(const OdeRhs& f, const Eigen::VectorXd& y0, double t0, double t_end, double dt) {
    const auto times = step_times(t0, t_end, dt);
    Eigen::VectorXd y = y0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) y = rk4_step(f, times[k], y, times[k + 1] - times[k]);
    return y;
}

void integrate_ode_into(const ProjectedOde& ode, const Eigen::VectorXd& y0, const IntegrationOptions& options,
                        Trajectory& out) {
    if (options.sample_stride < 1) throw Error(ErrorKind::InvalidArgument, "sample stride must be >= 1");
    if (static_cast<std::size_t>(y0.size()) != ode.dimension()) {
        throw Error(ErrorKind::InvalidArgument, "initial state has the wrong dimension");
    }
    const auto times = step_times(0.0, options.t_end, options.dt);
    const auto steps = times.size() - 1;
    out.kind = ode.kind();
    out.samples.clear();
    out.steps = 0;
    out.clamp_events = 0;

    Eigen::VectorXd y = y0;
    try {
        out.samples.push_back(ode.describe(0.0, y, false, options.residual));
    } catch (const Error& e) {
        throw TrajectoryExit(0, e.what());
    }
    const OdeRhs f = [&ode](double, const Eigen::VectorXd& s) { return ode.rhs(s); };
    for (std::size_t k = 0; k < steps; ++k) {
        bool clamped = false;
        try {
            y = rk4_step(f, times[k], y, times[k + 1] - times[k]);
            if (!y.allFinite()) throw Error(ErrorKind::NonFiniteIntegrand, "state became non-finite");
            clamped = ode.accept(y);
            if (clamped) ++out.clamp_events;
            out.steps = k + 1;
            if ((k + 1) % static_cast<std::size_t>(options.sample_stride) == 0 || k + 1 == steps || clamped) {
                out.samples.push_back(ode.describe(times[k + 1], y, clamped, options.residual));
            }
        } catch (const TrajectoryExit&) {
            throw;
        } catch (const Error& e) {
            throw TrajectoryExit(k + 1, std::string(to_string(e.kind())) + ": " + e.what());
        }
    }
}

Trajectory integrate_ode(const ProjectedOde& ode, const Eigen::VectorXd& y0, const IntegrationOptions& options) {
    Trajectory out;
    integrate_ode_into(ode, y0, options, out);
    return out;
}

}  // namespace fpkproj
