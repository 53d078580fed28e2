#include "fpkproj/sde_model.hpp"

#include <cmath>
#include <numbers>

#include "fpkproj/error.hpp"

namespace fpkproj {

SdeModel::SdeModel(std::string name, DifferentiableFn drift, DifferentiableFn diffusion, Domain domain)
    : name_(std::move(name)), drift_(std::move(drift)), diffusion_(std::move(diffusion)), domain_(domain) {}

SdeModel SdeModel::ornstein_uhlenbeck(double kappa, double sigma, Domain domain) {
    if (!(kappa > 0.0) || !(sigma > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "OU requires kappa > 0 and sigma > 0");
    }
    return SdeModel("ou", DifferentiableFn::polynomial({0.0, -kappa}), DifferentiableFn::constant(sigma * sigma),
                    domain);
}

SdeModel SdeModel::circle_diffusion(double a) {
    if (!(a > 0.0)) throw Error(ErrorKind::InvalidArgument, "diffusion coefficient must be positive");
    return SdeModel("circle-diffusion", DifferentiableFn::constant(0.0), DifferentiableFn::constant(a),
                    Domain(0.0, 2.0 * std::numbers::pi, DomainKind::BoundedReflecting));
}

SdeModel SdeModel::polynomial_drift(std::vector<double> drift_coeffs, double a, Domain domain) {
    if (!(a > 0.0)) throw Error(ErrorKind::InvalidArgument, "diffusion coefficient must be positive");
    return SdeModel("polynomial-drift", DifferentiableFn::polynomial(std::move(drift_coeffs)),
                    DifferentiableFn::constant(a), domain);
}

SdeModel SdeModel::with_domain(const Domain& d) const { return SdeModel(name_, drift_, diffusion_, d); }

void SdeModel::validate_on(const QuadratureRule& rule) const {
    for (double x : rule.nodes()) {
        const double a = diffusion_(x);
        if (!(a > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "diffusion coefficient not positive at x = " + std::to_string(x));
        }
        const double vals[] = {drift_(x), drift_.d1(x), a, diffusion_.d1(x), diffusion_.d2(x)};
        for (double v : vals) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::InvalidArgument, "model coefficient not finite at x = " + std::to_string(x));
            }
        }
    }
}

double generator_at(const SdeModel& model, const DifferentiableFn& phi, double x) {
    return model.drift()(x) * phi.d1(x) + 0.5 * model.diffusion()(x) * phi.d2(x);
}

ScalarFn apply_generator(const SdeModel& model, const DifferentiableFn& phi) {
    if (!phi.has_derivatives()) {
        throw Error(ErrorKind::DerivativeUnavailable, "generator needs first and second derivatives");
    }
    return [model, phi](double x) { return generator_at(model, phi, x); };
}

double adjoint_at(const SdeModel& model, const DifferentiableFn& p, double x) {
    const auto& f = model.drift();
    const auto& a = model.diffusion();
    const double pv = p(x), p1 = p.d1(x), p2 = p.d2(x);
    return -(f.d1(x) * pv + f(x) * p1) + 0.5 * (a.d2(x) * pv + 2.0 * a.d1(x) * p1 + a(x) * p2);
}

ScalarFn apply_adjoint(const SdeModel& model, const DifferentiableFn& p) {
    if (!p.has_derivatives() || !model.drift().has_derivatives() || !model.diffusion().has_derivatives()) {
        throw Error(ErrorKind::DerivativeUnavailable, "adjoint needs derivatives of p, f and a");
    }
    return [model, p](double x) { return adjoint_at(model, p, x); };
}

const std::vector<ModelPresetInfo>& model_presets() {
    static const std::vector<ModelPresetInfo> presets{
        {"ou", "[kappa, sigma]", "Ornstein-Uhlenbeck, f = -kappa x, a = sigma^2"},
        {"circle-diffusion", "[a]", "pure diffusion on [0, 2pi] with reflecting walls, f = 0"},
        {"polynomial-drift", "[a, c0, c1, ...]", "f = c0 + c1 x + ..., constant a"},
        {"cubic", "[a]", "f = -x^3, constant a"},
    };
    return presets;
}

SdeModel make_model_preset(const std::string& name, const std::vector<double>& params) {
    auto need = [&](std::size_t count) {
        if (params.size() != count) {
            throw Error(ErrorKind::ValidationError,
                        "model preset '" + name + "' expects " + std::to_string(count) + " parameters");
        }
    };
    if (name == "ou") {
        need(2);
        return SdeModel::ornstein_uhlenbeck(params[0], params[1]);
    }
    if (name == "circle-diffusion") {
        need(1);
        return SdeModel::circle_diffusion(params[0]);
    }
    if (name == "polynomial-drift") {
        if (params.size() < 2) {
            throw Error(ErrorKind::ValidationError, "model preset 'polynomial-drift' expects [a, c0, ...]");
        }
        return SdeModel::polynomial_drift(std::vector<double>(params.begin() + 1, params.end()), params[0]);
    }
    if (name == "cubic") {
        need(1);
        auto m = SdeModel::polynomial_drift({0.0, 0.0, 0.0, -1.0}, params[0]);
        return SdeModel("cubic", m.drift(), m.diffusion(), m.domain());
    }
    throw Error(ErrorKind::ValidationError, "unknown model preset '" + name + "'");
}

}  // namespace fpkproj
