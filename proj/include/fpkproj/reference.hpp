#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fpkproj/exp_family.hpp"
#include "fpkproj/mixture_family.hpp"
#include "fpkproj/quadrature.hpp"
#include "fpkproj/sde_model.hpp"

namespace fpkproj {

/// Density values on a uniform node grid over `domain`. Integrals use the
/// trapezoid rule, which is also the mass the solver conserves.
struct GridDensity {
    Domain domain;
    Eigen::VectorXd values;
    double time = 0.0;

    std::size_t nx() const noexcept { return static_cast<std::size_t>(values.size()); }
    double dx() const noexcept { return domain.width() / static_cast<double>(values.size() - 1); }
    double x(std::size_t i) const noexcept { return domain.lower + static_cast<double>(i) * dx(); }
    Eigen::VectorXd nodes() const;
    Eigen::VectorXd weights() const;

    double mass() const;
    double expectation(const ScalarFn& fn) const;
    Eigen::VectorXd expectations(const std::vector<DifferentiableFn>& fns) const;
    double mean() const;
    double variance() const;

    /// Samples `fn` at the nodes; optionally rescales to unit trapezoid mass.
    static GridDensity from_function(const Domain& domain, std::size_t nx, const ScalarFn& fn, double time = 0.0,
                                     bool normalise = true);
};

/// Trapezoid weights for nx uniform nodes with spacing dx.
Eigen::VectorXd trapezoid_weights(std::size_t nx, double dx);

/// Writes "x,p" rows with 17 significant digits.
void write_density_csv(const GridDensity& p, const std::filesystem::path& path);

/// Conservative finite-volume discretisation of ∂p/∂t = ∂/∂x(B p + C ∂p/∂x),
/// B = ½a' - f, C = ½a, with Chang–Cooper weighting of the drift flux,
/// zero flux at both ends, and Crank–Nicolson in time.
class FpkSolver {
public:
    FpkSolver(SdeModel model, Domain domain, std::size_t nx);

    std::size_t nx() const noexcept { return nx_; }
    const Domain& domain() const noexcept { return domain_; }

    /// One Crank–Nicolson step of length h, in place.
    void step(Eigen::VectorXd& p, double h) const;

    /// Advances p to t_target using equal steps no longer than dt. The
    /// largest per-step change in mass is accumulated into `max_mass_change`.
    GridDensity advance(const GridDensity& p, double t_target, double dt, double* max_mass_change = nullptr,
                        std::size_t* steps = nullptr) const;

private:
    SdeModel model_;
    Domain domain_;
    std::size_t nx_;
    double dx_;
    Eigen::VectorXd volume_;
    // Semi-discrete operator V dp/dt = A p, tridiagonal.
    Eigen::VectorXd lower_, diag_, upper_;
};

struct FpkSolution {
    std::vector<GridDensity> snapshots;
    std::size_t steps = 0;
    double max_step_mass_change = 0.0;
};

/// Snapshots at t = 0, every `stride` steps, and t_end.
FpkSolution solve_fpk(const SdeModel& model, const GridDensity& p0, double t_end, double dt, std::size_t stride = 1);

/// Snapshots at each of `times` (ascending, ≥ p0.time).
FpkSolution solve_fpk(const SdeModel& model, const GridDensity& p0, const std::vector<double>& times, double dt);

/// K(p, q) = ∫ p log(p / q). Nodes with p < 1e-14 contribute nothing to the
/// log term; q is floored at 1e-300.
double divergence_kl(const GridDensity& p, const ScalarFn& q);
/// d_H² = ∫ (√p - √q)².
double divergence_hellinger(const GridDensity& p, const ScalarFn& q);
/// d_D² = ∫ (p - q)².
double divergence_l2(const GridDensity& p, const ScalarFn& q);

struct EfProjection {
    CanonicalParams theta;
    ExpectationParams target;     // E_p[c] on the grid
    double moment_error = 0.0;    // max |η(θ*) - target|
    double kl = 0.0;              // K(p, p(·, θ*))
    bool consistent = true;       // no coordinate perturbation lowered K
};

/// KL projection by moment matching: solves η(θ) = E_p[c]. For EP(n) the
/// algebraic inversion from grid moments up to 2n seeds the Newton solve.
EfProjection metric_project_ef(const GridDensity& p, const ExpFamily& fam,
                               const std::optional<CanonicalParams>& guess = std::nullopt);

/// Direct-metric projection θ* = γ^{-1}(m̃ - β), m̃ = E_p[q - q_{n+1}].
/// Raises InadmissibleRecovery carrying θ* when it leaves the simplex.
MixtureWeights metric_project_mix(const GridDensity& p, const MixtureFamily& fam);

struct EigenCheck {
    Eigen::VectorXd eigenvalues;  // Λ_i with L c_i = -Λ_i c_i
    Eigen::VectorXd sup_residual;
};

/// Rayleigh-quotient eigenvalue per function, then sup_x |L c_i + Λ_i c_i| on
/// the rule's nodes. Throws NotAnEigenfunction above `tolerance`.
EigenCheck verify_eigenfunctions(const SdeModel& model, const std::vector<DifferentiableFn>& fns,
                                 const QuadratureRule& rule, double tolerance = 1e-8);

struct DecayOptions {
    double t_end = 1.0;
    double ode_dt = 1e-3;
    double pde_dt = 1e-3;  // the reference grid is the one p0 lives on
    int sample_stride = 10;
    Eigen::VectorXd offset;  // ε₀; empty means zero
    double fit_start = 0.0;
    double fit_end = 1.0;
};

struct DecayReport {
    std::vector<double> times;
    Eigen::MatrixXd epsilon;        // one row per time, one column per statistic
    Eigen::VectorXd fitted_rates;   // NaN where too few usable points
    Eigen::VectorXd eigenvalues;
    Eigen::VectorXd initial_offset;
    double max_abs_epsilon = 0.0;
};

/// Runs the reference solver and the ADA equation side by side from
/// η₀ = E_{p0}[c] - ε₀ and records ε(t) = E_{p_t}[c] - η(t).
DecayReport decay_experiment(const SdeModel& model, const ExpFamily& fam, const GridDensity& p0,
                             const DecayOptions& options);

/// Mixture version on m = E[q - q_{n+1}]; the tangents are the eigenfunctions.
DecayReport decay_experiment(const SdeModel& model, const MixtureFamily& fam, const GridDensity& p0,
                             const DecayOptions& options);

/// Least-squares decay rate -d log|ε|/dt over [t0, t1], using points with
/// |ε| > 1e-8 away from sign changes.
double fit_decay_rate(const std::vector<double>& times, const Eigen::VectorXd& eps, double t0, double t1);

}  // namespace fpkproj
