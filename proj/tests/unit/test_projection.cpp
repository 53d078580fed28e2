#include "helpers.hpp"

#include "fpkproj/projection.hpp"

using namespace fpkproj;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

QuadratureRule line_rule() { return QuadratureRule::simpson_pow2(Domain(-12, 12)); }
QuadratureRule circle_rule() {
    return QuadratureRule::simpson_pow2(Domain(0, 2 * std::numbers::pi, DomainKind::BoundedReflecting));
}

const SdeModel kOu = SdeModel::ornstein_uhlenbeck(1.0, std::sqrt(2.0));

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

VectorXd random_weights(std::mt19937& g, int n) {
    VectorXd e(n + 1);
    for (int i = 0; i <= n; ++i) e[i] = -std::log(testing::uniform(g, 1e-3, 1.0));
    e /= e.sum();
    return e.head(n);
}

}  // namespace

TEST_CASE("EF tangent rhs on OU") {
    const auto ep2 = ExpFamily::exponential_polynomial(2, line_rule());
    CHECK(ef_theta_rhs(ep2, kOu, {vec({0, -0.5})}).cwiseAbs().maxCoeff() <= 1e-10);

    // N(0.5, 1): η = (0.5, 1.25), moment equations give η̇ = (-0.5, -0.5).
    const CanonicalParams t{vec({0.5, -0.5})};
    const VectorXd theta_dot = ef_theta_rhs(ep2, kOu, t);
    const MatrixXd g = fisher_matrix(ep2, t).g;
    CHECK(std::abs(g(1, 1) - 3.0) <= 1e-7);
    const VectorXd eta_dot = g * theta_dot;
    CHECK(std::abs(eta_dot[0] + 0.5) <= 1e-8);
    CHECK(std::abs(eta_dot[1] + 0.5) <= 1e-8);
    // Gaussian closed form: θ = (μ/σ², -1/(2σ²)) with μ̇ = -μ, σ² fixed at 1.
    CHECK(std::abs(theta_dot[0] + 0.5) <= 1e-8);
    CHECK(std::abs(theta_dot[1]) <= 1e-8);
}

TEST_CASE("Hermite statistics are OU eigenfunctions") {
    const auto herm = ExpFamily::hermite({1, 2}, line_rule());
    const EfProjector proj(herm, kOu);
    auto g = testing::rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const CanonicalParams t{vec({testing::uniform(g, -1, 1), testing::uniform(g, -1, -0.2)})};
        const VectorXd eta = expectation_params(herm, t).eta;
        const VectorXd lc = proj.generator_expectation(herm.node_density(t));
        CHECK(std::abs(lc[0] + eta[0]) <= 1e-7);
        CHECK(std::abs(lc[1] + 2 * eta[1]) <= 1e-7);
    }
}

TEST_CASE("EF ADA rhs") {
    const auto ep2 = ExpFamily::exponential_polynomial(2, line_rule());
    CHECK(ef_eta_rhs(ep2, kOu, {vec({0, 1})}).cwiseAbs().maxCoeff() <= 1e-9);
    const VectorXd r = ef_eta_rhs(ep2, kOu, {vec({0.5, 1.25})});
    CHECK(std::abs(r[0] + 0.5) <= 1e-8);
    CHECK(std::abs(r[1] + 0.5) <= 1e-8);
    ExpectationParams impossible{vec({0.0, -1.0})};
    CHECK_KIND(ef_eta_rhs(ep2, kOu, impossible), ErrorKind::InadmissibleRecovery);
}

TEST_CASE("ADA and tangent projections agree on exponential families") {
    auto g = testing::rng(32);
    const std::vector<SdeModel> models{kOu, make_model_preset("cubic", {1.0}),
                                       make_model_preset("polynomial-drift", {0.8, 0.3, -1.0, 0.0, -0.2})};
    const auto ep2 = ExpFamily::exponential_polynomial(2, line_rule());
    const auto ep4 = ExpFamily::exponential_polynomial(4, line_rule());
    double worst = 0.0;
    int count = 0;
    for (const auto& model : models) {
        const EfProjector p2(ep2, model), p4(ep4, model);
        for (int trial = 0; trial < 17; ++trial, count += 2) {
            const CanonicalParams a{vec({testing::uniform(g, -1, 1), testing::uniform(g, -1.5, -0.3)})};
            const CanonicalParams b{vec({testing::uniform(g, -0.5, 0.5), testing::uniform(g, -0.5, 0.5),
                                         testing::uniform(g, -0.2, 0.2), testing::uniform(g, -0.8, -0.2)})};
            for (const auto& [proj, t] : {std::pair{&p2, a}, std::pair{&p4, b}}) {
                const auto& fam = proj->family();
                const VectorXd lhs = proj->eta_rhs(expectation_params(fam, t), t);
                const VectorXd rhs = fisher_matrix(fam, t).g * proj->theta_rhs(t);
                worst = std::max(worst, ((lhs - rhs).array() / lhs.cwiseAbs().array().max(1.0)).abs().maxCoeff());
            }
        }
    }
    CHECK(count >= 100);
    CHECK(worst <= 1e-10);
}

TEST_CASE("mixture rhs on the circle") {
    const auto fam = MixtureFamily::cosine_circle({1}, circle_rule());
    const auto model = SdeModel::circle_diffusion(2.0);
    CHECK(std::abs(mixture_theta_rhs(fam, model, {vec({0.3})})[0] + 0.3) <= 1e-10);
    CHECK(std::abs(mixture_theta_rhs(fam, model, {vec({1e-9})})[0]) <= 1e-8);

    const auto m = weights_to_expectations(fam, {vec({0.3})});
    CHECK(std::abs(mixture_m_rhs(fam, model, m)[0] + 0.3 / (4 * std::numbers::pi)) <= 1e-10);
    const auto m0 = weights_to_expectations(fam, {vec({1e-9})});
    CHECK(std::abs(mixture_m_rhs(fam, model, m0)[0]) <= 1e-10);

    CHECK(std::abs(galerkin_rhs(fam, model, vec({0.3, 1.0}))[0] + 0.3) <= 1e-10);
    CHECK(galerkin_rhs(fam, model, vec({0.0, 1.0})).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_KIND(galerkin_rhs(fam, model, vec({0.3, 0.9})), ErrorKind::InvalidArgument);

    const auto several = MixtureFamily::cosine_circle({1, 2, 3}, circle_rule());
    const VectorXd r = mixture_theta_rhs(several, model, {vec({0.2, 0.1, 0.3})});
    CHECK(std::abs(r[0] + 0.2) <= 1e-10);
    CHECK(std::abs(r[1] + 4 * 0.1) <= 1e-10);
    CHECK(std::abs(r[2] + 9 * 0.3) <= 1e-10);
}

TEST_CASE("mixture rhs: linearity, ADA equivalence and Galerkin equivalence") {
    auto g = testing::rng(33);
    const auto circle = MixtureFamily::cosine_circle({1, 2}, circle_rule());
    const auto gauss = MixtureFamily::gaussian({-1.0, 0.0, 1.5}, {0.6, 1.0, 0.8}, line_rule());
    const MixProjector pc(circle, SdeModel::circle_diffusion(2.0));
    const MixProjector pg(gauss, kOu);
    for (const MixProjector* proj : {&pc, &pg}) {
        const auto& fam = proj->family();
        for (int trial = 0; trial < 20; ++trial) {
            const VectorXd a = random_weights(g, 2), b = random_weights(g, 2);
            const double lambda = testing::uniform(g, 0, 1);
            const VectorXd mixed = proj->theta_rhs({lambda * a + (1 - lambda) * b});
            const VectorXd blend = lambda * proj->theta_rhs({a}) + (1 - lambda) * proj->theta_rhs({b});
            CHECK((mixed - blend).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, blend.cwiseAbs().maxCoeff()));

            const VectorXd theta_dot = proj->theta_rhs({a});
            const VectorXd m_dot = proj->m_rhs(weights_to_expectations(fam, {a}));
            CHECK((m_dot - fam.gamma() * theta_dot).cwiseAbs().maxCoeff() <= 1e-10);

            VectorXd c(3);
            c << a, 1.0;
            CHECK((proj->galerkin_rhs(c) - theta_dot).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("mixture m rhs matches direct quadrature of E[L(q - q_{n+1})]") {
    const auto gauss = MixtureFamily::gaussian({-1.0, 0.0, 1.5}, {0.6, 1.0, 0.8}, line_rule());
    const VectorXd t = vec({0.2, 0.5});
    const VectorXd m_dot = mixture_m_rhs(gauss, kOu, weights_to_expectations(gauss, {t}));
    const auto p = mixture_density(gauss, {t});
    for (int i = 0; i < 2; ++i) {
        const auto lt = apply_generator(kOu, gauss.tangents()[static_cast<std::size_t>(i)]);
        CHECK(std::abs(inner_product(lt, p, gauss.rule()) - m_dot[i]) <= 1e-10);
    }
}

TEST_CASE("projection residual") {
    const auto ep2 = ExpFamily::exponential_polynomial(2, line_rule());
    auto g = testing::rng(34);
    for (int trial = 0; trial < 10; ++trial) {
        const CanonicalParams t{vec({testing::uniform(g, -2, 2), testing::uniform(g, -2, -0.2)})};
        CHECK(residual(ep2, kOu, t).residual_sq <= 1e-8);
    }

    // Cubic drift, a = 2, p = N(0,1): L*p/p = -x⁴ + 4x² - 1, so ‖w‖² = E[h²]/4 = 8,
    // ⟨w, u⟩ = (0, -1), ‖Πw‖² = 4 bᵀg⁻¹b = 2, R² = 6.
    const auto cubic = make_model_preset("cubic", {2.0});
    const auto r = residual(ep2, cubic, {vec({0, -0.5})});
    CHECK(std::abs(r.w_norm_sq - 8.0) <= 1e-8);
    CHECK(std::abs(r.projected_norm_sq - 2.0) <= 1e-8);
    CHECK(std::abs(r.residual_sq - 6.0) <= 1e-8);
    CHECK(std::abs(r.direct_residual_sq - 6.0) <= 1e-8);

    const auto ep4 = ExpFamily::exponential_polynomial(4, line_rule());
    for (int trial = 0; trial < 10; ++trial) {
        const CanonicalParams t{vec({testing::uniform(g, -0.5, 0.5), testing::uniform(g, -0.5, 0.5),
                                     testing::uniform(g, -0.2, 0.2), testing::uniform(g, -0.8, -0.2)})};
        const auto rep = residual(ep4, cubic, t);
        CHECK(rep.residual_sq >= 0.0);
        CHECK(std::abs(rep.w_norm_sq - rep.residual_sq - rep.projected_norm_sq) <= 1e-8 * std::max(1.0, rep.w_norm_sq));
        CHECK(std::abs(rep.direct_residual_sq - rep.residual_sq) <= 1e-8 * std::max(1.0, rep.w_norm_sq));
    }
}
