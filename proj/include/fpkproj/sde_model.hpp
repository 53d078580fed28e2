#pragma once

#include <string>
#include <vector>

#include "fpkproj/differentiable_fn.hpp"
#include "fpkproj/quadrature.hpp"

namespace fpkproj {

/// Scalar diffusion dX = f(X) dt + σ(X) dW with a = σ². Coefficients are
/// time-homogeneous.
class SdeModel {
public:
    SdeModel(std::string name, DifferentiableFn drift, DifferentiableFn diffusion, Domain domain);

    /// OU: f = -κx, a = σ².
    static SdeModel ornstein_uhlenbeck(double kappa, double sigma, Domain domain = Domain(-12.0, 12.0));
    /// f = 0, a constant, reflecting walls on [0, 2π].
    static SdeModel circle_diffusion(double a = 2.0);
    /// f = Σ coeffs[k] x^k, a constant.
    static SdeModel polynomial_drift(std::vector<double> drift_coeffs, double a,
                                     Domain domain = Domain(-12.0, 12.0));

    const std::string& name() const noexcept { return name_; }
    const DifferentiableFn& drift() const noexcept { return drift_; }
    const DifferentiableFn& diffusion() const noexcept { return diffusion_; }
    const Domain& domain() const noexcept { return domain_; }

    /// Checks a > 0 and finiteness of f, a and their derivatives on the nodes.
    void validate_on(const QuadratureRule& rule) const;

    SdeModel with_domain(const Domain& d) const;

private:
    std::string name_;
    DifferentiableFn drift_;
    DifferentiableFn diffusion_;
    Domain domain_;
};

/// Lφ = f φ' + ½ a φ''.
double generator_at(const SdeModel& model, const DifferentiableFn& phi, double x);
ScalarFn apply_generator(const SdeModel& model, const DifferentiableFn& phi);

/// L*p = -(f p)' + ½ (a p)''.
double adjoint_at(const SdeModel& model, const DifferentiableFn& p, double x);
ScalarFn apply_adjoint(const SdeModel& model, const DifferentiableFn& p);

struct ModelPresetInfo {
    std::string name;
    std::string parameters;
    std::string description;
};

const std::vector<ModelPresetInfo>& model_presets();

/// Builds a preset by name. Unbounded presets start on [-12, 12]; callers
/// narrow or widen that with `with_domain`.
SdeModel make_model_preset(const std::string& name, const std::vector<double>& params);

}  // namespace fpkproj
