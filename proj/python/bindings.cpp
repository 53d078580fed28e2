#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fpkproj/ode.hpp"
#include "fpkproj/projection.hpp"
#include "fpkproj/reference.hpp"
#include "fpkproj/runner.hpp"
#include "fpkproj/scenario.hpp"

namespace py = pybind11;
using namespace fpkproj;
using Eigen::VectorXd;

namespace {

Domain make_domain(std::pair<double, double> d, bool reflecting) {
    return Domain(d.first, d.second, reflecting ? DomainKind::BoundedReflecting : DomainKind::UnboundedTruncated);
}

QuadratureRule make_rule(std::pair<double, double> d, int k, bool reflecting) {
    return QuadratureRule::simpson_pow2(make_domain(d, reflecting), k);
}

VectorXd evaluate(const ScalarFn& f, const VectorXd& xs) {
    VectorXd out(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
    return out;
}

GridDensity make_grid(std::pair<double, double> d, const VectorXd& values, double time, bool reflecting) {
    return GridDensity{make_domain(d, reflecting), values, time};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Finite-dimensional projections of the Fokker-Planck equation";

    static py::exception<Error> fpk_error(m, "FpkError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const std::string msg = std::string(to_string(e.kind())) + ": " + e.what();
            py::set_error(fpk_error, msg.c_str());
        }
    });

    py::class_<SdeModel>(m, "SdeModel")
        .def_static("preset", &make_model_preset, py::arg("name"), py::arg("params"))
        .def_static("ou", [](double kappa, double sigma) { return SdeModel::ornstein_uhlenbeck(kappa, sigma); },
                    py::arg("kappa"), py::arg("sigma"))
        .def_property_readonly("name", &SdeModel::name)
        .def_property_readonly("domain", [](const SdeModel& s) { return std::pair(s.domain().lower, s.domain().upper); })
        .def("with_domain", [](const SdeModel& s, std::pair<double, double> d, bool reflecting) {
            return s.with_domain(make_domain(d, reflecting));
        }, py::arg("domain"), py::arg("reflecting") = false)
        .def("drift", [](const SdeModel& s, const VectorXd& x) { return evaluate(s.drift().value_fn(), x); })
        .def("diffusion", [](const SdeModel& s, const VectorXd& x) { return evaluate(s.diffusion().value_fn(), x); });

    m.def("model_presets", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& p : model_presets()) out.emplace_back(p.name, p.parameters);
        return out;
    });

    py::class_<ExpFamily>(m, "ExpFamily")
        .def_static("ep", [](int n, std::pair<double, double> d, int k) {
            return ExpFamily::exponential_polynomial(n, make_rule(d, k, false));
        }, py::arg("n"), py::arg("domain") = std::pair(-12.0, 12.0), py::arg("k") = 12)
        .def_static("hermite", [](std::vector<int> idx, std::pair<double, double> d, int k, double scale) {
            return ExpFamily::hermite(idx, make_rule(d, k, false), scale);
        }, py::arg("indices"), py::arg("domain") = std::pair(-12.0, 12.0), py::arg("k") = 12, py::arg("scale") = 1.0)
        .def_static("custom_poly", [](std::vector<int> e, std::pair<double, double> d, int k) {
            return ExpFamily::custom_polynomial(e, make_rule(d, k, false));
        }, py::arg("exponents"), py::arg("domain") = std::pair(-12.0, 12.0), py::arg("k") = 12)
        .def_property_readonly("name", &ExpFamily::name)
        .def_property_readonly("dimension", &ExpFamily::dimension)
        .def("is_admissible", [](const ExpFamily& f, const VectorXd& t) { return f.is_admissible({t}); })
        .def("log_partition", [](const ExpFamily& f, const VectorXd& t) { return log_partition(f, {t}); })
        .def("density", [](const ExpFamily& f, const VectorXd& t, const VectorXd& x) {
            return evaluate(density(f, {t}), x);
        }, py::arg("theta"), py::arg("x"))
        .def("expectation", [](const ExpFamily& f, const VectorXd& t, std::optional<int> count) {
            return count ? expectation_params(f, {t}, *count).eta : expectation_params(f, {t}).eta;
        }, py::arg("theta"), py::arg("count") = py::none())
        .def("fisher", [](const ExpFamily& f, const VectorXd& t) { return fisher_matrix(f, {t}).g; })
        .def("moments_by_recursion", [](const ExpFamily& f, const VectorXd& t, int upto) {
            return moments_by_recursion(f, {t}, upto).eta;
        }, py::arg("theta"), py::arg("upto"))
        .def("to_canonical", [](const ExpFamily& f, const VectorXd& eta, std::optional<VectorXd> guess) {
            std::optional<CanonicalParams> g;
            if (guess) g = CanonicalParams{*guess};
            return expectation_to_canonical(f, {eta}, g).theta;
        }, py::arg("eta"), py::arg("guess") = py::none());

    m.def("ep_to_canonical", [](const VectorXd& eta) { return expectation_to_canonical({eta}).theta; },
          py::arg("eta_2n"), "Algebraic EP(n) inversion from the raw moments η_1..η_{2n}.");

    py::class_<MixtureFamily>(m, "MixtureFamily")
        .def_static("gaussian", [](std::vector<double> means, std::vector<double> vars, std::pair<double, double> d, int k) {
            return MixtureFamily::gaussian(means, vars, make_rule(d, k, false));
        }, py::arg("means"), py::arg("variances"), py::arg("domain") = std::pair(-12.0, 12.0), py::arg("k") = 12)
        .def_static("cosine_circle", [](std::vector<int> harmonics, int k) {
            return MixtureFamily::cosine_circle(harmonics, make_rule({0.0, 2 * std::numbers::pi}, k, true));
        }, py::arg("harmonics"), py::arg("k") = 12)
        .def_property_readonly("dimension", &MixtureFamily::dimension)
        .def_property_readonly("gamma", &MixtureFamily::gamma)
        .def_property_readonly("beta", &MixtureFamily::beta)
        .def("density", [](const MixtureFamily& f, const VectorXd& t, const VectorXd& x) {
            return evaluate(mixture_density(f, {t}), x);
        }, py::arg("theta"), py::arg("x"))
        .def("to_expectations", [](const MixtureFamily& f, const VectorXd& t) { return weights_to_expectations(f, {t}).m; })
        .def("to_weights", [](const MixtureFamily& f, const VectorXd& mm) { return expectations_to_weights(f, {mm}).theta; });

    m.def("ef_theta_rhs", [](const ExpFamily& f, const SdeModel& s, const VectorXd& t) {
        return ef_theta_rhs(f, s, {t});
    });
    m.def("ef_eta_rhs", [](const ExpFamily& f, const SdeModel& s, const VectorXd& eta) {
        return ef_eta_rhs(f, s, {eta});
    });
    m.def("mixture_theta_rhs", [](const MixtureFamily& f, const SdeModel& s, const VectorXd& t) {
        return mixture_theta_rhs(f, s, {t});
    });
    m.def("mixture_m_rhs", [](const MixtureFamily& f, const SdeModel& s, const VectorXd& mm) {
        return mixture_m_rhs(f, s, {mm});
    });
    m.def("galerkin_rhs", &galerkin_rhs, py::arg("family"), py::arg("model"), py::arg("coefficients"));
    m.def("residual", [](const ExpFamily& f, const SdeModel& s, const VectorXd& t) {
        const auto r = residual(f, s, {t});
        return py::dict(py::arg("w_norm_sq") = r.w_norm_sq, py::arg("projected_norm_sq") = r.projected_norm_sq,
                        py::arg("residual_sq") = r.residual_sq, py::arg("residual") = r.residual());
    });

    m.def("integrate_ef", [](const ExpFamily& f, const SdeModel& s, const VectorXd& y0, const std::string& coords,
                             double dt, double t_end) {
        const auto kind = coords == "eta" ? OdeKind::EfAda : OdeKind::EfTangent;
        const auto traj = integrate_ode(ProjectedOde::ef(std::make_shared<EfProjector>(f, s), kind), y0,
                                        {dt, t_end, 1, false});
        std::vector<double> t;
        Eigen::MatrixXd theta(static_cast<Eigen::Index>(traj.samples.size()), y0.size());
        Eigen::MatrixXd eta(theta.rows(), theta.cols());
        for (std::size_t i = 0; i < traj.samples.size(); ++i) {
            t.push_back(traj.samples[i].t);
            theta.row(static_cast<Eigen::Index>(i)) = traj.samples[i].theta;
            eta.row(static_cast<Eigen::Index>(i)) = traj.samples[i].eta;
        }
        return py::make_tuple(t, theta, eta);
    }, py::arg("family"), py::arg("model"), py::arg("y0"), py::arg("coordinates") = "eta", py::arg("dt") = 1e-3,
       py::arg("t_end") = 1.0);

    m.def("solve_fpk", [](const SdeModel& s, std::pair<double, double> d, const VectorXd& p0, double t_end, double dt,
                          bool reflecting) {
        const auto sol = solve_fpk(s.with_domain(make_domain(d, reflecting)), make_grid(d, p0, 0.0, reflecting), t_end,
                                   dt, static_cast<std::size_t>(-1));
        return sol.snapshots.back().values;
    }, py::arg("model"), py::arg("domain"), py::arg("p0"), py::arg("t_end"), py::arg("dt") = 1e-3,
       py::arg("reflecting") = false);

    m.def("divergences", [](std::pair<double, double> d, const VectorXd& p, const ExpFamily& f, const VectorXd& t) {
        const auto g = make_grid(d, p, 0.0, false);
        const auto q = density(f, {t});
        return py::dict(py::arg("kl") = divergence_kl(g, q), py::arg("hellinger") = divergence_hellinger(g, q),
                        py::arg("l2") = divergence_l2(g, q));
    }, py::arg("domain"), py::arg("p"), py::arg("family"), py::arg("theta"));

    m.def("metric_project_ef", [](std::pair<double, double> d, const VectorXd& p, const ExpFamily& f) {
        return metric_project_ef(make_grid(d, p, 0.0, false), f).theta.theta;
    }, py::arg("domain"), py::arg("p"), py::arg("family"));
    m.def("metric_project_mix", [](std::pair<double, double> d, const VectorXd& p, const MixtureFamily& f,
                                   bool reflecting) {
        return metric_project_mix(make_grid(d, p, 0.0, reflecting), f).theta;
    }, py::arg("domain"), py::arg("p"), py::arg("family"), py::arg("reflecting") = false);

    m.def("run_scenario", [](const std::filesystem::path& path, std::vector<std::string> overrides,
                             std::optional<std::filesystem::path> output_dir) {
        const auto s = load_scenario(path, overrides);
        const auto r = run_scenario(s, {output_dir, output_dir.has_value()});
        py::dict out;
        out["columns"] = r.table.columns;
        out["rows"] = r.table.rows;
        out["csv"] = r.table.to_csv();
        if (r.decay) {
            out["fitted_rates"] = r.decay->fitted_rates;
            out["eigenvalues"] = r.decay->eigenvalues;
        }
        return out;
    }, py::arg("path"), py::arg("overrides") = std::vector<std::string>{}, py::arg("output_dir") = py::none());
}
