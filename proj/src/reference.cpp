#include "fpkproj/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>

#include "fpkproj/error.hpp"
#include "fpkproj/ode.hpp"
#include "fpkproj/projection.hpp"

namespace fpkproj {

namespace {

constexpr double kNegativeTolerance = 1e-10;
constexpr double kKlDensityFloor = 1e-14;
constexpr double kKlSupportFloor = 1e-300;
constexpr double kKlSupportThreshold = 1e-12;
constexpr double kFitFloor = 1e-8;

// x / (e^x - 1), the Chang–Cooper / Scharfetter–Gummel weight.
double bernoulli(double x) {
    if (std::abs(x) < 1e-10) return 1.0 - 0.5 * x;
    const double d = std::expm1(x);
    if (std::isinf(d)) return 0.0;
    return x / d;
}

Eigen::VectorXd sample_on(const GridDensity& p, const ScalarFn& q) {
    Eigen::VectorXd v(p.values.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = p.x(static_cast<std::size_t>(i));
        v[i] = q(x);
        if (!std::isfinite(v[i])) throw NonFiniteIntegrand(static_cast<std::size_t>(i), x);
    }
    return v;
}

}  // namespace

Eigen::VectorXd trapezoid_weights(std::size_t nx, double dx) {
    if (nx < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least two nodes");
    Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(nx), dx);
    w[0] *= 0.5;
    w[w.size() - 1] *= 0.5;
    return w;
}

Eigen::VectorXd GridDensity::nodes() const {
    Eigen::VectorXd x(values.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = this->x(static_cast<std::size_t>(i));
    return x;
}

Eigen::VectorXd GridDensity::weights() const { return trapezoid_weights(nx(), dx()); }

double GridDensity::mass() const { return weights().dot(values); }

double GridDensity::expectation(const ScalarFn& fn) const {
    return weights().cwiseProduct(values).dot(sample_on(*this, fn));
}

Eigen::VectorXd GridDensity::expectations(const std::vector<DifferentiableFn>& fns) const {
    const Eigen::VectorXd pw = weights().cwiseProduct(values);
    Eigen::VectorXd out(static_cast<Eigen::Index>(fns.size()));
    for (std::size_t j = 0; j < fns.size(); ++j) {
        out[static_cast<Eigen::Index>(j)] = pw.dot(sample_on(*this, fns[j].value_fn()));
    }
    return out;
}

double GridDensity::mean() const {
    return weights().cwiseProduct(values).dot(nodes()) / mass();
}

double GridDensity::variance() const {
    const double m = mean();
    const Eigen::ArrayXd d = nodes().array() - m;
    return (weights().array() * values.array() * d.square()).sum() / mass();
}

GridDensity GridDensity::from_function(const Domain& domain, std::size_t nx, const ScalarFn& fn, double time,
                                       bool normalise) {
    if (nx < 3) throw Error(ErrorKind::InvalidArgument, "grid needs at least three nodes");
    if (!(domain.width() > 0.0)) throw Error(ErrorKind::InvalidArgument, "empty grid domain");
    GridDensity p{domain, Eigen::VectorXd(static_cast<Eigen::Index>(nx)), time};
    p.values = sample_on(p, fn);
    if ((p.values.array() < 0.0).any()) throw Error(ErrorKind::InvalidArgument, "initial density is negative");
    if (normalise) {
        const double m = p.mass();
        if (!(m > 0.0)) throw Error(ErrorKind::InvalidArgument, "initial density has zero mass on the grid");
        p.values /= m;
    }
    return p;
}

void write_density_csv(const GridDensity& p, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << "x,p\n";
    char buf[64];
    for (std::size_t i = 0; i < p.nx(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.x(i), p.values[static_cast<Eigen::Index>(i)]);
        out << buf;
    }
}

FpkSolver::FpkSolver(SdeModel model, Domain domain, std::size_t nx)
    : model_(std::move(model)), domain_(domain), nx_(nx) {
    if (nx_ < 3) throw Error(ErrorKind::InvalidArgument, "reference grid needs at least three nodes");
    dx_ = domain_.width() / static_cast<double>(nx_ - 1);
    volume_ = trapezoid_weights(nx_, dx_);
    const auto n = static_cast<Eigen::Index>(nx_);
    lower_ = Eigen::VectorXd::Zero(n);
    diag_ = Eigen::VectorXd::Zero(n);
    upper_ = Eigen::VectorXd::Zero(n);

    const auto& f = model_.drift();
    const auto& a = model_.diffusion();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double xm = domain_.lower + (static_cast<double>(i) + 0.5) * dx_;
        const double b = 0.5 * a.d1(xm) - f(xm);
        const double c = 0.5 * a(xm);
        if (!(c > 0.0) || !std::isfinite(b)) {
            throw Error(ErrorKind::InvalidArgument, "diffusion must be positive on the reference grid");
        }
        const double w = dx_ * b / c;
        // F_{i+½} = (C/dx) [Bern(-w) p_{i+1} - Bern(w) p_i]
        const double ahead = c / dx_ * bernoulli(-w);
        const double behind = c / dx_ * bernoulli(w);
        upper_[i] += ahead;
        diag_[i] -= behind;
        diag_[i + 1] -= ahead;
        lower_[i + 1] += behind;
    }
}

void FpkSolver::step(Eigen::VectorXd& p, double h) const {
    const auto n = static_cast<Eigen::Index>(nx_);
    if (p.size() != n) throw Error(ErrorKind::InvalidArgument, "density does not match the solver grid");
    const double k = 0.5 * h;

    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double ap = diag_[i] * p[i];
        if (i > 0) ap += lower_[i] * p[i - 1];
        if (i + 1 < n) ap += upper_[i] * p[i + 1];
        rhs[i] = volume_[i] * p[i] + k * ap;
    }
    // Thomas algorithm on (V - k A) p' = rhs. The matrix is an M-matrix with
    // dominant columns, so no pivoting is needed.
    Eigen::VectorXd c_prime(n);
    double denom = volume_[0] - k * diag_[0];
    c_prime[0] = -k * upper_[0] / denom;
    rhs[0] /= denom;
    for (Eigen::Index i = 1; i < n; ++i) {
        const double sub = -k * lower_[i];
        denom = volume_[i] - k * diag_[i] - sub * c_prime[i - 1];
        c_prime[i] = i + 1 < n ? -k * upper_[i] / denom : 0.0;
        rhs[i] = (rhs[i] - sub * rhs[i - 1]) / denom;
    }
    p[n - 1] = rhs[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) p[i] = rhs[i] - c_prime[i] * p[i + 1];
}

GridDensity FpkSolver::advance(const GridDensity& p, double t_target, double dt, double* max_mass_change,
                               std::size_t* steps) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "pde dt must be positive");
    if (p.nx() != nx_) throw Error(ErrorKind::InvalidArgument, "density does not match the solver grid");
    const double span = t_target - p.time;
    if (span < -1e-12) throw Error(ErrorKind::InvalidArgument, "cannot integrate backwards in time");
    GridDensity out = p;
    out.time = t_target;
    if (span <= 1e-12) return out;

    const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil(span / dt - 1e-9)));
    const double h = span / static_cast<double>(count);
    double mass = out.mass();
    for (std::size_t s = 0; s < count; ++s) {
        step(out.values, h);
        const double lowest = out.values.minCoeff();
        if (!std::isfinite(lowest) || lowest < -kNegativeTolerance) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "reference density reached %.3e at t = %.6g", lowest,
                          p.time + static_cast<double>(s + 1) * h);
            throw Error(ErrorKind::SchemeInstability, buf);
        }
        out.values = out.values.cwiseMax(0.0);
        const double next = out.mass();
        if (max_mass_change) *max_mass_change = std::max(*max_mass_change, std::abs(next - mass));
        mass = next;
    }
    if (steps) *steps += count;
    return out;
}

FpkSolution solve_fpk(const SdeModel& model, const GridDensity& p0, const std::vector<double>& times, double dt) {
    if (std::abs(p0.mass() - 1.0) > 1e-6) throw Error(ErrorKind::InvalidArgument, "initial density is not normalised");
    FpkSolver solver(model, p0.domain, p0.nx());
    FpkSolution sol;
    GridDensity current = p0;
    for (double t : times) {
        current = solver.advance(current, t, dt, &sol.max_step_mass_change, &sol.steps);
        sol.snapshots.push_back(current);
    }
    return sol;
}

FpkSolution solve_fpk(const SdeModel& model, const GridDensity& p0, double t_end, double dt, std::size_t stride) {
    if (stride == 0) throw Error(ErrorKind::InvalidArgument, "stride must be positive");
    const auto steps = step_times(p0.time, t_end, dt);
    std::vector<double> times;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        if (k % stride == 0 || k + 1 == steps.size()) times.push_back(steps[k]);
    }
    return solve_fpk(model, p0, times, dt);
}

double divergence_kl(const GridDensity& p, const ScalarFn& q) {
    const Eigen::VectorXd qv = sample_on(p, q);
    const Eigen::VectorXd w = p.weights();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < qv.size(); ++i) {
        const double pi = p.values[i];
        if (pi > kKlSupportThreshold && qv[i] < kKlSupportFloor) {
            throw Error(ErrorKind::SupportViolation,
                        "KL: q vanishes where p > 0 (x = " + std::to_string(p.x(static_cast<std::size_t>(i))) + ")");
        }
        if (pi < kKlDensityFloor) continue;
        sum += w[i] * pi * std::log(pi / std::max(qv[i], kKlSupportFloor));
    }
    return sum;
}

double divergence_hellinger(const GridDensity& p, const ScalarFn& q) {
    const Eigen::ArrayXd qv = sample_on(p, q).array().max(0.0);
    const Eigen::ArrayXd d = p.values.array().max(0.0).sqrt() - qv.sqrt();
    return (p.weights().array() * d.square()).sum();
}

double divergence_l2(const GridDensity& p, const ScalarFn& q) {
    const Eigen::ArrayXd d = p.values.array() - sample_on(p, q).array();
    return (p.weights().array() * d.square()).sum();
}

EfProjection metric_project_ef(const GridDensity& p, const ExpFamily& fam, const std::optional<CanonicalParams>& guess) {
    EfProjection out;
    out.target = {p.expectations(fam.stats())};

    std::optional<CanonicalParams> seed = guess;
    if (!seed && fam.is_ep()) {
        const int n = fam.ep_degree();
        Eigen::VectorXd raw(2 * n);
        for (int k = 1; k <= 2 * n; ++k) raw[k - 1] = p.expectation([k](double x) { return std::pow(x, k); });
        try {
            auto algebraic = expectation_to_canonical(ExpectationParams{raw});
            if (fam.is_admissible(algebraic)) seed = std::move(algebraic);
        } catch (const Error&) {
            // fall back to the default Newton start
        }
    }
    out.theta = expectation_to_canonical(fam, out.target, seed);
    const auto matched = expectation_params(fam, out.theta);
    out.moment_error = (matched.eta - out.target.eta).cwiseAbs().maxCoeff();
    out.kl = divergence_kl(p, density(fam, out.theta));

    for (Eigen::Index j = 0; j < out.theta.theta.size(); ++j) {
        const double h = 1e-4 * std::max(1.0, std::abs(out.theta.theta[j]));
        for (double sign : {-1.0, 1.0}) {
            CanonicalParams probe = out.theta;
            probe.theta[j] += sign * h;
            if (!fam.is_admissible(probe)) continue;
            if (divergence_kl(p, density(fam, probe)) < out.kl - 1e-12 * std::max(1.0, out.kl)) {
                out.consistent = false;
            }
        }
    }
    return out;
}

MixtureWeights metric_project_mix(const GridDensity& p, const MixtureFamily& fam) {
    return expectations_to_weights(fam, {p.expectations(fam.tangents())});
}

EigenCheck verify_eigenfunctions(const SdeModel& model, const std::vector<DifferentiableFn>& fns,
                                 const QuadratureRule& rule, double tolerance) {
    EigenCheck out;
    const auto count = static_cast<Eigen::Index>(fns.size());
    out.eigenvalues.resize(count);
    out.sup_residual.resize(count);
    const auto x = rule.nodes();
    for (Eigen::Index j = 0; j < count; ++j) {
        const auto& c = fns[static_cast<std::size_t>(j)];
        Eigen::VectorXd cv(static_cast<Eigen::Index>(x.size()));
        Eigen::VectorXd lv(cv.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            cv[static_cast<Eigen::Index>(i)] = c(x[i]);
            lv[static_cast<Eigen::Index>(i)] = generator_at(model, c, x[i]);
        }
        const double norm = cv.squaredNorm();
        if (!(norm > 0.0)) throw NotAnEigenfunction(static_cast<std::size_t>(j), 0.0);
        const double lambda = -lv.dot(cv) / norm;
        const double sup = (lv + lambda * cv).cwiseAbs().maxCoeff();
        out.eigenvalues[j] = lambda;
        out.sup_residual[j] = sup;
        if (!(sup <= tolerance)) throw NotAnEigenfunction(static_cast<std::size_t>(j), sup);
    }
    return out;
}

double fit_decay_rate(const std::vector<double>& times, const Eigen::VectorXd& eps, double t0, double t1) {
    const auto n = times.size();
    if (static_cast<std::size_t>(eps.size()) != n) throw Error(ErrorKind::InvalidArgument, "series length mismatch");
    auto sign = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = times[k];
        const double e = eps[static_cast<Eigen::Index>(k)];
        if (t < t0 - 1e-12 || t > t1 + 1e-12 || std::abs(e) <= kFitFloor) continue;
        if (k > 0 && sign(eps[static_cast<Eigen::Index>(k - 1)]) != sign(e)) continue;
        if (k + 1 < n && sign(eps[static_cast<Eigen::Index>(k + 1)]) != sign(e)) continue;
        const double y = std::log(std::abs(e));
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++used;
    }
    if (used < 3) return std::numeric_limits<double>::quiet_NaN();
    const double m = static_cast<double>(used);
    const double denom = m * stt - st * st;
    if (!(std::abs(denom) > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return -(m * sty - st * sy) / denom;
}

namespace {

template <class Expect>
DecayReport run_decay(const SdeModel& model, const ProjectedOde& ode, const Eigen::VectorXd& exact0,
                      const GridDensity& p0, const EigenCheck& eig, const DecayOptions& options, Expect expect) {
    const auto n = exact0.size();
    Eigen::VectorXd offset = options.offset.size() == 0 ? Eigen::VectorXd::Zero(n) : options.offset;
    if (offset.size() != n) throw Error(ErrorKind::InvalidArgument, "decay offset has the wrong dimension");

    IntegrationOptions io;
    io.dt = options.ode_dt;
    io.t_end = options.t_end;
    io.sample_stride = options.sample_stride;
    const auto traj = integrate_ode(ode, exact0 - offset, io);

    FpkSolver solver(model, p0.domain, p0.nx());
    DecayReport report;
    report.eigenvalues = eig.eigenvalues;
    report.initial_offset = offset;
    report.epsilon.resize(static_cast<Eigen::Index>(traj.samples.size()), n);
    GridDensity current = p0;
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const auto& s = traj.samples[k];
        current = solver.advance(current, s.t, options.pde_dt);
        report.times.push_back(s.t);
        report.epsilon.row(static_cast<Eigen::Index>(k)) = (expect(current) - s.state).transpose();
    }
    report.max_abs_epsilon = report.epsilon.size() ? report.epsilon.cwiseAbs().maxCoeff() : 0.0;
    report.fitted_rates.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        report.fitted_rates[j] = fit_decay_rate(report.times, report.epsilon.col(j), options.fit_start, options.fit_end);
    }
    return report;
}

}  // namespace

DecayReport decay_experiment(const SdeModel& model, const ExpFamily& fam, const GridDensity& p0,
                             const DecayOptions& options) {
    const auto eig = verify_eigenfunctions(model, fam.stats(), fam.rule());
    auto projector = std::make_shared<const EfProjector>(fam, model);
    const auto ode = ProjectedOde::ef(projector, OdeKind::EfAda);
    const auto& stats = fam.stats();
    return run_decay(model, ode, p0.expectations(stats), p0, eig, options,
                     [&stats](const GridDensity& p) { return p.expectations(stats); });
}

DecayReport decay_experiment(const SdeModel& model, const MixtureFamily& fam, const GridDensity& p0,
                             const DecayOptions& options) {
    const auto eig = verify_eigenfunctions(model, fam.tangents(), fam.rule());
    auto projector = std::make_shared<const MixProjector>(fam, model);
    const auto ode = ProjectedOde::mixture(projector, OdeKind::MixAda);
    const auto& tangents = fam.tangents();
    return run_decay(model, ode, p0.expectations(tangents), p0, eig, options,
                     [&tangents](const GridDensity& p) { return p.expectations(tangents); });
}

}  // namespace fpkproj
