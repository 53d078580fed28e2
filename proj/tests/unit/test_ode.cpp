#include "helpers.hpp"

#include "fpkproj/ode.hpp"

using namespace fpkproj;
using Eigen::VectorXd;

namespace {

QuadratureRule line_rule() { return QuadratureRule::simpson_pow2(Domain(-12, 12)); }

const SdeModel kOu = SdeModel::ornstein_uhlenbeck(1.0, std::sqrt(2.0));

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

ProjectedOde ou_ada() {
    return ProjectedOde::ef(
        std::make_shared<EfProjector>(ExpFamily::exponential_polynomial(2, line_rule()), kOu), OdeKind::EfAda);
}

double eta1_exact(double t) { return 0.5 * std::exp(-t); }
double eta2_exact(double t) { return 1.0 + 0.25 * std::exp(-2 * t); }

}  // namespace

TEST_CASE("OU moment ODE matches the closed form") {
    const auto traj = integrate_ode(ou_ada(), vec({0.5, 1.25}), {1e-3, 1.0, 100, false});
    CHECK(traj.steps == 1000);
    CHECK(traj.samples.size() == 11);
    const auto& last = traj.final();
    CHECK(last.t == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(last.eta[0] - 0.1839397205857212) <= 1e-6);
    CHECK(std::abs(last.eta[1] - 1.0338338208091532) <= 1e-6);
    // θ for N(μ, σ²): (μ/σ², -1/(2σ²)), here σ² = η₂ - η₁² = 1.
    CHECK(std::abs(last.theta[0] - eta1_exact(1.0)) <= 1e-6);
    CHECK(std::abs(last.theta[1] + 0.5) <= 1e-6);
}

TEST_CASE("tangent and ADA trajectories coincide") {
    const auto proj = std::make_shared<EfProjector>(ExpFamily::exponential_polynomial(2, line_rule()),
                                                    make_model_preset("cubic", {1.0}));
    const auto tangent = ProjectedOde::ef(proj, OdeKind::EfTangent);
    const auto ada = ProjectedOde::ef(proj, OdeKind::EfAda);
    const VectorXd theta0 = vec({0.4, -0.8});
    const IntegrationOptions opts{1e-3, 0.5, 50, true};
    const auto a = integrate_ode(tangent, theta0, opts);
    const auto b = integrate_ode(ada, ada.state_from_theta(theta0), opts);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK((a.samples[i].eta - b.samples[i].eta).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(a.samples[i].residual == doctest::Approx(b.samples[i].residual).epsilon(1e-6));
        CHECK(a.samples[i].residual > 0.0);
    }
}

TEST_CASE("RK4 is fourth order on the OU moment ODE") {
    const auto ode = ou_ada();
    std::vector<double> errors;
    for (double dt : {0.2, 0.1, 0.05}) {
        const auto last = integrate_ode(ode, vec({0.5, 1.25}), {dt, 1.0, 1000, false}).final();
        errors.push_back(std::max(std::abs(last.eta[0] - eta1_exact(1.0)), std::abs(last.eta[1] - eta2_exact(1.0))));
    }
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const double ratio = errors[i] / errors[i + 1];
        CHECK(ratio >= 8.0);
        CHECK(ratio <= 32.0);
    }
}

TEST_CASE("generic RK4 and step grid") {
    const OdeRhs f = [](double t, const VectorXd& y) { return VectorXd::Constant(1, std::cos(t) * y[0]); };
    const VectorXd y = integrate_rk4(f, vec({1.0}), 0.0, 2.0, 1e-3);
    CHECK(y[0] == doctest::Approx(std::exp(std::sin(2.0))).epsilon(1e-10));

    const auto times = step_times(0.0, 1.0, 0.3);
    REQUIRE(times.size() == 5);
    CHECK(times.back() == 1.0);
    CHECK(times[3] == doctest::Approx(0.9));
    CHECK(step_times(0.0, 1.0, 0.25).size() == 5);
}

TEST_CASE("mixture states are clamped back into the simplex") {
    const auto fam = MixtureFamily::cosine_circle(
        {1, 2}, QuadratureRule::simpson_pow2(Domain(0, 2 * std::numbers::pi, DomainKind::BoundedReflecting)));
    const auto proj = std::make_shared<MixProjector>(fam, SdeModel::circle_diffusion(2.0));
    const auto tangent = ProjectedOde::mixture(proj, OdeKind::MixTangent);
    VectorXd out = vec({0.8, 0.4});
    CHECK(tangent.accept(out));
    CHECK(fam.is_admissible({out}));
    VectorXd inside = vec({0.2, 0.3});
    CHECK_FALSE(tangent.accept(inside));

    const auto ada = ProjectedOde::mixture(proj, OdeKind::MixAda);
    VectorXd m = fam.gamma() * vec({-0.1, 0.5}) + fam.beta();
    CHECK(ada.accept(m));
    const VectorXd back = expectations_to_weights_unchecked(fam, {m});
    CHECK(std::abs(back[0]) <= 1e-14);
    CHECK(back[1] == doctest::Approx(0.5));
    CHECK_FALSE(ada.accept(m));

    // θ̇_k = -k² θ_k on the circle.
    const auto traj = integrate_ode(tangent, vec({0.3, 0.2}), {1e-3, 1.0, 1000, false});
    CHECK(traj.clamp_events == 0);
    CHECK(traj.final().theta[0] == doctest::Approx(0.3 * std::exp(-1.0)).epsilon(1e-9));
    CHECK(traj.final().theta[1] == doctest::Approx(0.2 * std::exp(-4.0)).epsilon(1e-9));

    const auto gal = ProjectedOde::mixture(proj, OdeKind::Galerkin);
    const auto gtraj = integrate_ode(gal, vec({0.3, 0.2}), {1e-3, 1.0, 1000, false});
    CHECK((gtraj.final().theta - traj.final().theta).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("leaving the admissible set aborts with the step index") {
    // Unstable linear drift: θ₂ of a Gaussian flows towards zero and a large RK4
    // stage overshoots it.
    const auto proj = std::make_shared<EfProjector>(ExpFamily::exponential_polynomial(2, line_rule()),
                                                    make_model_preset("polynomial-drift", {2.0, 0.0, 1.0}));
    const auto ode = ProjectedOde::ef(proj, OdeKind::EfTangent);
    Trajectory partial;
    try {
        integrate_ode_into(ode, vec({0.0, -0.5}), {0.5, 2.0, 1, false}, partial);
        FAIL("expected TrajectoryExit");
    } catch (const TrajectoryExit& e) {
        CHECK(e.kind() == ErrorKind::TrajectoryExit);
        CHECK(e.step() == 1);
    }
    REQUIRE(partial.samples.size() == 1);
    CHECK(partial.samples[0].t == 0.0);

    CHECK_KIND(integrate_ode(ode, vec({0.0, 0.5}), {0.1, 1.0, 1, false}), ErrorKind::TrajectoryExit);
}
