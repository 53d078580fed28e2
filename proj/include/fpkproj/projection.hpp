#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "fpkproj/exp_family.hpp"
#include "fpkproj/mixture_family.hpp"
#include "fpkproj/sde_model.hpp"

namespace fpkproj {

/// Decomposition of w = L*p / (2√p) against the Fisher tangent space.
struct ResidualReport {
    double w_norm_sq = 0.0;          // ‖w‖²
    double projected_norm_sq = 0.0;  // ‖Π^g w‖²
    double residual_sq = 0.0;        // ‖w‖² - ‖Π^g w‖², clamped at 0
    double direct_residual_sq = 0.0; // ‖w - Π^g w‖² evaluated pointwise
    // R from the pointwise form, which avoids cancellation when R is tiny.
    double residual() const { return std::sqrt(direct_residual_sq); }
};

/// Hellinger / Fisher-Rao projection of the forward equation onto an
/// exponential family. Holds the family, the model, and L c_i and the
/// derivatives of c tabulated at the family's nodes.
class EfProjector {
public:
    EfProjector(ExpFamily family, SdeModel model);

    const ExpFamily& family() const noexcept { return family_; }
    const SdeModel& model() const noexcept { return model_; }

    /// (L c_i)(x) at the family nodes.
    const Eigen::MatrixXd& generator_table() const noexcept { return generator_; }

    /// E_θ[L c].
    Eigen::VectorXd generator_expectation(const NodeDensity& nd) const;

    /// θ̇ = g(θ)^{-1} E_θ[L c].
    Eigen::VectorXd theta_rhs(const CanonicalParams& theta) const;

    /// η̇ = E_{θ(η)}[L c]. θ(η) comes from Newton inversion started at `guess`;
    /// the recovered θ is written to `recovered` when given.
    Eigen::VectorXd eta_rhs(const ExpectationParams& eta, const std::optional<CanonicalParams>& guess = std::nullopt,
                            CanonicalParams* recovered = nullptr) const;

    ResidualReport residual(const CanonicalParams& theta) const;

private:
    ExpFamily family_;
    SdeModel model_;
    Eigen::MatrixXd generator_;
    Eigen::MatrixXd stat_d1_;
    Eigen::MatrixXd stat_d2_;
    Eigen::VectorXd f_, f1_, a_, a1_, a2_;
};

/// Direct-metric projection onto a simple mixture family, plus the Galerkin
/// system built on the basis {q_1 - q_{n+1}, ..., q_n - q_{n+1}, q_{n+1}}.
class MixProjector {
public:
    MixProjector(MixtureFamily family, SdeModel model);

    const MixtureFamily& family() const noexcept { return family_; }
    const SdeModel& model() const noexcept { return model_; }

    /// A_jk = <L(q_j - q_{n+1}), q_k>, j ≤ n, k ≤ n+1, so that
    /// E_θ[L(q_j - q_{n+1})] = (A θ̂)_j.
    const Eigen::MatrixXd& drift_matrix() const noexcept { return drift_; }

    /// θ̇ = γ^{-1} A θ̂(θ).
    Eigen::VectorXd theta_rhs(const MixtureWeights& w) const;

    /// ṁ_i = E_m[L(q_i - q_{n+1})], with the density p(·; m) summed at nodes.
    Eigen::VectorXd m_rhs(const MixtureExpectations& m) const;

    /// θ̇ and ṁ without the simplex check, for intermediate RK stages.
    Eigen::VectorXd theta_rate(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd m_rate(const Eigen::VectorXd& m) const;

    /// Galerkin coefficient rates ċ_1..ċ_n for c = (c_1..c_n, 1).
    Eigen::VectorXd galerkin_rhs(const Eigen::VectorXd& coefficients) const;

    const Eigen::MatrixXd& galerkin_mass() const noexcept { return mass_; }
    const Eigen::MatrixXd& galerkin_stiffness() const noexcept { return stiffness_; }

private:
    MixtureFamily family_;
    SdeModel model_;
    Eigen::MatrixXd tangent_generator_;  // L(q_j - q_{n+1}) at nodes
    Eigen::MatrixXd drift_;
    Eigen::MatrixXd mass_;       // <φ_i, φ_j>
    Eigen::MatrixXd stiffness_;  // <φ_i, L φ_j>
};

Eigen::VectorXd ef_theta_rhs(const ExpFamily& fam, const SdeModel& model, const CanonicalParams& theta);
Eigen::VectorXd ef_eta_rhs(const ExpFamily& fam, const SdeModel& model, const ExpectationParams& eta,
                           const std::optional<CanonicalParams>& guess = std::nullopt);
Eigen::VectorXd mixture_theta_rhs(const MixtureFamily& fam, const SdeModel& model, const MixtureWeights& w);
Eigen::VectorXd mixture_m_rhs(const MixtureFamily& fam, const SdeModel& model, const MixtureExpectations& m);
ResidualReport residual(const ExpFamily& fam, const SdeModel& model, const CanonicalParams& theta);
Eigen::VectorXd galerkin_rhs(const MixtureFamily& fam, const SdeModel& model, const Eigen::VectorXd& coefficients);

}  // namespace fpkproj
