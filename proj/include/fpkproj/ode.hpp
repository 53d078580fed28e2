#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fpkproj/projection.hpp"

namespace fpkproj {

enum class OdeKind {
    EfTangent,   // θ̇ = g^{-1} E[Lc]
    EfAda,       // η̇ = E[Lc]
    MixTangent,  // θ̇ = γ^{-1} A θ̂
    MixAda,      // ṁ = E[L(q - q_{n+1})]
    Galerkin,    // mass-matrix system on {q_i - q_{n+1}, q_{n+1}}
};

std::string_view to_string(OdeKind kind) noexcept;

struct TrajectorySample {
    double t = 0.0;
    Eigen::VectorXd state;  // integrated coordinates
    Eigen::VectorXd theta;  // canonical parameters or mixture weights
    Eigen::VectorXd eta;    // η or m
    double residual = std::numeric_limits<double>::quiet_NaN();
    bool clamped = false;
};

struct Trajectory {
    OdeKind kind = OdeKind::EfTangent;
    std::vector<TrajectorySample> samples;
    std::size_t steps = 0;
    std::size_t clamp_events = 0;

    const TrajectorySample& final() const { return samples.back(); }
};

/// The right-hand side of one projected equation together with what the
/// integrator needs around it: admissibility after each step, clamping for
/// mixtures, and a θ warm start for η-coordinates.
class ProjectedOde {
public:
    static ProjectedOde ef(std::shared_ptr<const EfProjector> projector, OdeKind kind);
    static ProjectedOde mixture(std::shared_ptr<const MixProjector> projector, OdeKind kind);

    OdeKind kind() const noexcept { return kind_; }
    std::size_t dimension() const;

    Eigen::VectorXd rhs(const Eigen::VectorXd& y) const;

    /// Called once per completed step. EF states must stay admissible
    /// (throws otherwise); mixture states are pulled back into the simplex.
    /// Returns true when the state was clamped.
    bool accept(Eigen::VectorXd& y) const;

    /// Maps canonical parameters / weights into this equation's coordinates.
    Eigen::VectorXd state_from_theta(const Eigen::VectorXd& theta) const;

    TrajectorySample describe(double t, const Eigen::VectorXd& y, bool clamped, bool with_residual) const;

    const EfProjector* ef_projector() const noexcept { return ef_.get(); }
    const MixProjector* mix_projector() const noexcept { return mix_.get(); }

private:
    ProjectedOde() = default;
    Eigen::VectorXd theta_of(const Eigen::VectorXd& y) const;

    OdeKind kind_ = OdeKind::EfTangent;
    std::shared_ptr<const EfProjector> ef_;
    std::shared_ptr<const MixProjector> mix_;
    // Last θ recovered from η; seeds the next Newton solve.
    mutable std::optional<CanonicalParams> warm_;
};

struct IntegrationOptions {
    double dt = 1e-3;
    double t_end = 1.0;
    int sample_stride = 1;  // record every k-th step; the final step is always kept
    bool residual = false;
};

/// Classical fixed-step RK4 on ProjectedOde. Any failure inside a step is
/// rethrown as TrajectoryExit with the step index.
Trajectory integrate_ode(const ProjectedOde& ode, const Eigen::VectorXd& y0, const IntegrationOptions& options);

/// As integrate_ode, but fills `out` as it goes so the samples recorded
/// before a TrajectoryExit survive the exception.
void integrate_ode_into(const ProjectedOde& ode, const Eigen::VectorXd& y0, const IntegrationOptions& options,
                        Trajectory& out);

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

Eigen::VectorXd rk4_step(const OdeRhs& f, double t, const Eigen::VectorXd& y, double h);

/// Integrates y' = f(t, y) from t0 to t_end with step dt (the last step is
/// shortened if dt does not divide the interval).
Eigen::VectorXd integrate_rk4(const OdeRhs& f, const Eigen::VectorXd& y0, double t0, double t_end, double dt);

/// Number of steps and the step times used by both integrators.
std::vector<double> step_times(double t0, double t_end, double dt);

}  // namespace fpkproj
