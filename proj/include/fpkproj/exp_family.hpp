#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpkproj/differentiable_fn.hpp"
#include "fpkproj/quadrature.hpp"

namespace fpkproj {

struct CanonicalParams {
    Eigen::VectorXd theta;
};

/// Expectations of the statistics. For EP(n) the vector may be extended
/// beyond n with raw moments E[x^i], i > n.
struct ExpectationParams {
    Eigen::VectorXd eta;
};

struct FisherMatrix {
    Eigen::MatrixXd g;
};

/// How membership of θ in the admissible set is decided.
enum class Admissibility {
    /// EP(n): θ_n < 0.
    LeadingMonomialNegative,
    /// Polynomial statistics: θ'c must have even degree and negative leading
    /// coefficient.
    PolynomialIntegrable,
    /// Anything else: the normalising integral must be finite on the domain.
    DomainIntegrable,
};

/// Density values at the family's quadrature nodes, premultiplied by the
/// quadrature weights, plus the log-partition that normalises them.
struct NodeDensity {
    double log_partition = 0.0;
    Eigen::VectorXd weighted;  // w_i p(x_i)
};

/// Exponential family p(x, θ) = exp(θ'c(x) - ψ(θ)) on a truncated domain.
///
/// Statistics are tabulated once at the quadrature nodes; every expectation
/// below is a weighted sum over that table.
class ExpFamily {
public:
    ExpFamily(std::string name, std::vector<DifferentiableFn> stats, QuadratureRule rule, Admissibility admissibility,
              int ep_degree = 0);

    /// EP(n): statistics x, x², ..., xⁿ with θ_n < 0.
    static ExpFamily exponential_polynomial(int n, QuadratureRule rule);
    /// Statistics He_k(x / scale) for k in `indices`.
    static ExpFamily hermite(const std::vector<int>& indices, QuadratureRule rule, double scale = 1.0);
    /// Statistics x^e for e in `exponents`.
    static ExpFamily custom_polynomial(const std::vector<int>& exponents, QuadratureRule rule);

    const std::string& name() const noexcept { return name_; }
    std::size_t dimension() const noexcept { return stats_.size(); }
    const std::vector<DifferentiableFn>& stats() const noexcept { return stats_; }
    const QuadratureRule& rule() const noexcept { return rule_; }
    const Domain& domain() const noexcept { return rule_.domain(); }
    Admissibility admissibility() const noexcept { return admissibility_; }
    bool is_ep() const noexcept { return ep_degree_ > 0; }
    int ep_degree() const noexcept { return ep_degree_; }

    /// Statistics at nodes, one column per statistic.
    const Eigen::MatrixXd& stat_table() const noexcept { return table_; }

    /// Throws InadmissibleParameter when θ is outside the admissible set.
    void check_admissible(const CanonicalParams& theta) const;
    bool is_admissible(const CanonicalParams& theta) const;

    /// Initial point used when no better guess is known: zero except the
    /// last coordinate, which is -1/2.
    CanonicalParams default_guess() const;

    NodeDensity node_density(const CanonicalParams& theta) const;

    /// θ'c(x).
    double exponent(const CanonicalParams& theta, double x) const;

private:
    std::string name_;
    std::vector<DifferentiableFn> stats_;
    QuadratureRule rule_;
    Admissibility admissibility_;
    int ep_degree_;
    Eigen::MatrixXd table_;
};

double log_partition(const ExpFamily& fam, const CanonicalParams& theta);

/// x ↦ p(x, θ).
ScalarFn density(const ExpFamily& fam, const CanonicalParams& theta);

/// p(·, θ) with analytic derivatives, for use with the adjoint operator.
DifferentiableFn density_fn(const ExpFamily& fam, const CanonicalParams& theta);

/// η_i = E_θ[c_i] for i < count. For EP(n), count may exceed n; the extra
/// entries are raw moments E[x^i].
ExpectationParams expectation_params(const ExpFamily& fam, const CanonicalParams& theta, int count);
ExpectationParams expectation_params(const ExpFamily& fam, const CanonicalParams& theta);

/// g_ij = E_θ[c_i c_j] - η_i η_j. Raises DegenerateFisher if not positive
/// definite.
FisherMatrix fisher_matrix(const ExpFamily& fam, const CanonicalParams& theta);

/// Raw EP(n) moments η_1..η_upto where η_n onwards come from the integration
/// by parts recursion
///
///   η_{n+i} = -1/(n θ_n) [(i+1) η_i + θ_1 η_{i+1} + 2θ_2 η_{i+2} + ... + (n-1)θ_{n-1} η_{i+n-1}]
///
/// with η_0 = 1. `base` holds η_1..η_{n-1}.
ExpectationParams moments_by_recursion(const CanonicalParams& theta, std::span<const double> base, int upto);

/// As above, with the base moments taken from quadrature on an EP family.
ExpectationParams moments_by_recursion(const ExpFamily& fam, const CanonicalParams& theta, int upto);

/// Algebraic EP(n) inversion from the raw moments η_1..η_{2n}:
///   [θ_1, 2θ_2, ..., nθ_n]' = -M(η)^{-1} [2η_1, 3η_2, ..., (n+1)η_n]',  M_ij = η_{i+j}.
CanonicalParams expectation_to_canonical(const ExpectationParams& eta_2n);

struct NewtonOptions {
    double tolerance = 1e-13;  // on max |η(θ) - η*|, relative to max(1, |η*|)
    double accept = 1e-9;      // stagnation below this still counts as converged
    int max_iterations = 200;
};

/// Solves ∇ψ(θ) = η* by damped Newton with the Fisher matrix as Jacobian,
/// backtracking on the convex objective ψ(θ) - θ'η*.
CanonicalParams expectation_to_canonical(const ExpFamily& fam, const ExpectationParams& target,
                                         const std::optional<CanonicalParams>& guess = std::nullopt,
                                         const NewtonOptions& options = {});

}  // namespace fpkproj
