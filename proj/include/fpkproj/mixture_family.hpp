#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpkproj/differentiable_fn.hpp"
#include "fpkproj/quadrature.hpp"

namespace fpkproj {

/// θ ∈ ℝⁿ with θ_i ∈ [0, 1] and 0 < Σθ_i < 1.
struct MixtureWeights {
    Eigen::VectorXd theta;
};

/// m = E_θ[q - q_{n+1} 1] = γθ + β.
struct MixtureExpectations {
    Eigen::VectorXd m;
};

/// Simple mixture family p(·, θ) = Σ_{i≤n} θ_i q_i + (1 - Σθ_i) q_{n+1}.
///
/// The direct-metric geometry is flat here: the tangent vectors q_i - q_{n+1}
/// do not depend on θ, so γ and β are computed once at construction.
class MixtureFamily {
public:
    MixtureFamily(std::string name, std::vector<DifferentiableFn> components, QuadratureRule rule);

    /// Gaussian components N(means[i], variances[i]); the last is q_{n+1}.
    static MixtureFamily gaussian(const std::vector<double>& means, const std::vector<double>& variances,
                                  QuadratureRule rule);
    /// q_i = (1 + cos(k_i x)) / 2π for each harmonic, q_{n+1} = 1 / 2π.
    static MixtureFamily cosine_circle(const std::vector<int>& harmonics, QuadratureRule rule);

    const std::string& name() const noexcept { return name_; }
    std::size_t dimension() const noexcept { return components_.size() - 1; }
    const std::vector<DifferentiableFn>& components() const noexcept { return components_; }
    const QuadratureRule& rule() const noexcept { return rule_; }
    const Domain& domain() const noexcept { return rule_.domain(); }

    /// q_i - q_{n+1}, i < n: the (constant) tangent vectors ∂p/∂θ_i.
    const std::vector<DifferentiableFn>& tangents() const noexcept { return tangents_; }

    const Eigen::MatrixXd& gamma() const noexcept { return gamma_; }
    const Eigen::VectorXd& beta() const noexcept { return beta_; }

    /// Components at nodes, one column per component (n + 1 columns).
    const Eigen::MatrixXd& component_table() const noexcept { return table_; }

    void check_admissible(const MixtureWeights& w) const;
    bool is_admissible(const MixtureWeights& w) const;

    /// Pulls θ back into the simplex interior with the admissibility margin.
    /// Returns true if anything changed.
    bool clamp(Eigen::VectorXd& theta) const;

    /// [θ_1, ..., θ_n, 1 - Σθ].
    static Eigen::VectorXd full_weights(const Eigen::VectorXd& theta);

private:
    std::string name_;
    std::vector<DifferentiableFn> components_;
    std::vector<DifferentiableFn> tangents_;
    QuadratureRule rule_;
    Eigen::MatrixXd table_;
    Eigen::MatrixXd gamma_;
    Eigen::VectorXd beta_;
};

inline constexpr double kSimplexMargin = 1e-12;

ScalarFn mixture_density(const MixtureFamily& fam, const MixtureWeights& w);

struct MetricOffset {
    Eigen::MatrixXd gamma;
    Eigen::VectorXd beta;
};

/// γ_ij = <q_i - q_{n+1}, q_j - q_{n+1}>, β_i = <q_i - q_{n+1}, q_{n+1}>.
MetricOffset gamma_and_beta(const MixtureFamily& fam);

MixtureExpectations weights_to_expectations(const MixtureFamily& fam, const MixtureWeights& w);

/// θ = γ^{-1}(m - β). Raises InadmissibleRecovery (carrying θ) if θ leaves
/// the simplex interior.
MixtureWeights expectations_to_weights(const MixtureFamily& fam, const MixtureExpectations& m);

/// The unconstrained inverse, without the simplex check.
Eigen::VectorXd expectations_to_weights_unchecked(const MixtureFamily& fam, const MixtureExpectations& m);

}  // namespace fpkproj
