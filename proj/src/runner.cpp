#include "fpkproj/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>

#include <json.hpp>

#include "fpkproj/exp_family.hpp"
#include "fpkproj/mixture_family.hpp"
#include "fpkproj/ode.hpp"
#include "fpkproj/projection.hpp"

namespace fpkproj {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Setup {
    SdeModel model;
    QuadratureRule rule;
    Domain domain;
};

Setup make_setup(const Scenario& s) {
    auto model = make_model_preset(s.model.preset, s.model.params);
    Domain domain = model.domain();
    if (s.numerics.domain) domain = Domain(s.numerics.domain->first, s.numerics.domain->second, domain.kind);
    model = model.with_domain(domain);
    auto rule = QuadratureRule::simpson_pow2(domain, s.numerics.quadrature_k);
    return {std::move(model), std::move(rule), domain};
}

ExpFamily make_ef(const FamilySpec& f, const QuadratureRule& rule) {
    if (f.type == "EP") return ExpFamily::exponential_polynomial(f.degree, rule);
    if (f.type == "hermite") return ExpFamily::hermite(f.indices, rule, f.scale);
    return ExpFamily::custom_polynomial(f.exponents, rule);
}

MixtureFamily make_mix(const FamilySpec& f, const QuadratureRule& rule) {
    if (f.type == "gaussian-mixture") return MixtureFamily::gaussian(f.means, f.variances, rule);
    return MixtureFamily::cosine_circle(f.harmonics, rule);
}

double gaussian(double x, double mean, double var) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Weighted sum of components without the simplex check; Galerkin states are
// not constrained to it.
ScalarFn mixture_values(const MixtureFamily& fam, const Eigen::VectorXd& theta) {
    return [comps = fam.components(), full = MixtureFamily::full_weights(theta)](double x) {
        double s = 0.0;
        for (std::size_t i = 0; i < comps.size(); ++i) s += full[static_cast<Eigen::Index>(i)] * comps[i](x);
        return s;
    };
}

ScalarFn explicit_density(const DensitySpec& d) {
    if (d.type == "gaussian") return [m = d.mean, v = d.variance](double x) { return gaussian(x, m, v); };
    if (d.type == "gaussian-mixture") {
        return [d](double x) {
            double s = 0.0;
            for (std::size_t i = 0; i < d.weights.size(); ++i) s += d.weights[i] * gaussian(x, d.means[i], d.variances[i]);
            return s;
        };
    }
    if (d.type == "cosine-series") {
        return [d](double x) {
            double s = d.constant;
            for (const auto& [k, a] : d.terms) s += a * std::cos(k * x);
            return s;
        };
    }
    throw Error(ErrorKind::InvalidArgument, "density type '" + d.type + "' has no explicit form");
}

std::filesystem::path output_dir(const Scenario& s, const RunOptions& options) {
    return options.output_dir ? *options.output_dir : std::filesystem::path(s.outputs.dir);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

std::vector<double> sample_times(const Scenario& s) {
    const auto steps = step_times(0.0, s.numerics.t_end, s.numerics.ode_dt);
    std::vector<double> times;
    const auto stride = static_cast<std::size_t>(s.numerics.sample_stride);
    for (std::size_t k = 0; k < steps.size(); ++k) {
        if (k % stride == 0 || k + 1 == steps.size()) times.push_back(steps[k]);
    }
    return times;
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

void check_density_times(const Scenario& s, const std::vector<double>& times) {
    for (double td : s.outputs.density_times) {
        bool found = false;
        for (double t : times) found = found || same_time(t, td);
        if (!found) {
            throw Error(ErrorKind::ValidationError,
                        "outputs.density_times: " + format_double(td) + " is not a sample time (spacing ode_dt * sample_stride)");
        }
    }
}

std::string density_filename(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "density_t%.6g.csv", t);
    return buf;
}

// Accumulates rows and density snapshots for one run.
class Recorder {
public:
    Recorder(const Scenario& s, const Domain& domain, std::size_t dim, bool mixture, std::filesystem::path dir,
             bool write)
        : s_(s), domain_(domain), nx_(static_cast<Eigen::Index>(s.numerics.pde_nx)), dir_(std::move(dir)), write_(write) {
        table_.columns = trajectory_columns(dim, mixture);
        if (write_) std::filesystem::create_directories(dir_);
    }

    void row(double t, const Eigen::VectorXd& theta, const Eigen::VectorXd& eta, double residual,
             const GridDensity* p, const ScalarFn* projected, bool clamped) {
        std::vector<double> r{t};
        for (Eigen::Index i = 0; i < theta.size(); ++i) r.push_back(theta[i]);
        for (Eigen::Index i = 0; i < eta.size(); ++i) r.push_back(eta[i]);
        r.push_back(residual);
        double kl = kNan, hel = kNan, l2 = kNan;
        if (p && projected) {
            try {
                kl = divergence_kl(*p, *projected);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::SupportViolation) throw;
            }
            hel = divergence_hellinger(*p, *projected);
            l2 = divergence_l2(*p, *projected);
        }
        r.insert(r.end(), {kl, hel, l2, clamped ? 1.0 : 0.0});
        table_.rows.push_back(std::move(r));
        snapshot(t, p, projected);
    }

    RunResult finish() {
        RunResult out;
        out.output_dir = dir_;
        if (write_) {
            const auto path = dir_ / "trajectory.csv";
            write_text(path, table_.to_csv());
            files_.push_back(path);
        }
        out.table = std::move(table_);
        out.files = std::move(files_);
        return out;
    }

private:
    void snapshot(double t, const GridDensity* p, const ScalarFn* projected) {
        if (!write_) return;
        for (double td : s_.outputs.density_times) {
            if (!same_time(t, td)) continue;
            std::string text = "x,reference,projected\n";
            const GridDensity grid = p ? *p : GridDensity{domain_, Eigen::VectorXd::Zero(nx_), t};
            for (std::size_t i = 0; i < grid.nx(); ++i) {
                const double x = grid.x(i);
                const double ref = p ? p->values[static_cast<Eigen::Index>(i)] : kNan;
                const double proj = projected ? (*projected)(x) : kNan;
                text += format_double(x) + "," + format_double(ref) + "," + format_double(proj) + "\n";
            }
            const auto path = dir_ / density_filename(td);
            write_text(path, text);
            files_.push_back(path);
        }
    }

    const Scenario& s_;
    Domain domain_;
    Eigen::Index nx_;
    std::filesystem::path dir_;
    bool write_;
    ResultTable table_;
    std::vector<std::filesystem::path> files_;
};

OdeKind ode_kind(Method m) {
    switch (m) {
        case Method::TangentEf: return OdeKind::EfTangent;
        case Method::AdaEf: return OdeKind::EfAda;
        case Method::TangentMix: return OdeKind::MixTangent;
        case Method::AdaMix: return OdeKind::MixAda;
        case Method::Galerkin: return OdeKind::Galerkin;
        default: break;
    }
    throw Error(ErrorKind::InvalidArgument, "method has no projected equation");
}

RunResult run_trajectory(const Scenario& s, const Setup& setup, const RunOptions& options) {
    const bool mixture = s.family.is_mixture();
    const auto kind = ode_kind(s.method);
    std::optional<ExpFamily> ef;
    std::optional<MixtureFamily> mix;
    std::optional<ProjectedOde> ode;
    if (mixture) {
        mix = make_mix(s.family, setup.rule);
        ode = ProjectedOde::mixture(std::make_shared<const MixProjector>(*mix, setup.model), kind);
    } else {
        ef = make_ef(s.family, setup.rule);
        ode = ProjectedOde::ef(std::make_shared<const EfProjector>(*ef, setup.model), kind);
    }
    const std::size_t dim = ode->dimension();

    const bool external_p0 = s.reference.initial_density.type != "family";
    std::optional<GridDensity> p0;
    if (external_p0) {
        p0 = GridDensity::from_function(setup.domain, s.numerics.pde_nx, explicit_density(s.reference.initial_density));
    }

    // Initial canonical parameters / weights, and the integration state.
    Eigen::VectorXd theta0;
    Eigen::VectorXd y0;
    const auto& coords = s.initial.coordinates;
    const Eigen::VectorXd values =
        Eigen::Map<const Eigen::VectorXd>(s.initial.values.data(), static_cast<Eigen::Index>(s.initial.values.size()));
    if (coords == "density") {
        theta0 = mixture ? metric_project_mix(*p0, *mix).theta : metric_project_ef(*p0, *ef).theta.theta;
        y0 = ode->state_from_theta(theta0);
    } else if (coords == "theta") {
        theta0 = values;
        y0 = ode->state_from_theta(theta0);
    } else if (coords == "eta") {
        theta0 = expectation_to_canonical(*ef, {values}).theta;
        y0 = kind == OdeKind::EfAda ? values : ode->state_from_theta(theta0);
    } else {
        theta0 = expectations_to_weights(*mix, {values}).theta;
        y0 = kind == OdeKind::MixAda ? values : ode->state_from_theta(theta0);
    }

    std::optional<FpkSolver> solver;
    std::optional<GridDensity> current;
    if (s.reference.attach) {
        if (!p0) {
            const ScalarFn q = mixture ? mixture_density(*mix, {theta0}) : density(*ef, {theta0});
            p0 = GridDensity::from_function(setup.domain, s.numerics.pde_nx, q);
        }
        solver.emplace(setup.model, p0->domain, p0->nx());
        current = *p0;
    }

    IntegrationOptions io;
    io.dt = s.numerics.ode_dt;
    io.t_end = s.numerics.t_end;
    io.sample_stride = s.numerics.sample_stride;
    io.residual = s.outputs.residual && !mixture;
    check_density_times(s, sample_times(s));

    Trajectory traj;
    std::optional<TrajectoryExit> exit;
    try {
        integrate_ode_into(*ode, y0, io, traj);
    } catch (const TrajectoryExit& e) {
        exit = e;
    }

    Recorder rec(s, setup.domain, dim, mixture, output_dir(s, options), options.write_files);
    for (const auto& sample : traj.samples) {
        const GridDensity* p = nullptr;
        if (solver) {
            *current = solver->advance(*current, sample.t, s.numerics.pde_dt);
            p = &*current;
        }
        const ScalarFn projected = mixture ? mixture_values(*mix, sample.theta) : density(*ef, {sample.theta});
        rec.row(sample.t, sample.theta, sample.eta, sample.residual, p, &projected, sample.clamped);
    }
    auto result = rec.finish();
    if (exit) throw *exit;
    return result;
}

RunResult run_metric_projection(const Scenario& s, const Setup& setup, const RunOptions& options) {
    const bool mixture = s.family.is_mixture();
    std::optional<ExpFamily> ef;
    std::optional<MixtureFamily> mix;
    if (mixture) {
        mix = make_mix(s.family, setup.rule);
    } else {
        ef = make_ef(s.family, setup.rule);
    }
    const std::size_t dim = mixture ? mix->dimension() : ef->dimension();
    const auto times = sample_times(s);
    check_density_times(s, times);

    GridDensity current =
        GridDensity::from_function(setup.domain, s.numerics.pde_nx, explicit_density(s.reference.initial_density));
    FpkSolver solver(setup.model, current.domain, current.nx());
    Recorder rec(s, setup.domain, dim, mixture, output_dir(s, options), options.write_files);
    std::optional<CanonicalParams> warm;
    for (double t : times) {
        current = solver.advance(current, t, s.numerics.pde_dt);
        if (mixture) {
            const Eigen::VectorXd m = current.expectations(mix->tangents());
            Eigen::VectorXd theta;
            bool clamped = false;
            try {
                theta = metric_project_mix(current, *mix).theta;
            } catch (const InadmissibleRecovery& e) {
                theta = e.unconstrained();
                clamped = mix->clamp(theta);
            }
            const ScalarFn q = mixture_values(*mix, theta);
            rec.row(t, theta, m, kNan, &current, &q, clamped);
        } else {
            const auto proj = metric_project_ef(current, *ef, warm);
            warm = proj.theta;
            const ScalarFn q = density(*ef, proj.theta);
            rec.row(t, proj.theta.theta, proj.target.eta, kNan, &current, &q, false);
        }
    }
    return rec.finish();
}

RunResult run_decay(const Scenario& s, const Setup& setup, const RunOptions& options) {
    if (!s.outputs.density_times.empty()) {
        throw Error(ErrorKind::ValidationError, "outputs.density_times: not supported by method decay-experiment");
    }
    const auto p0 =
        GridDensity::from_function(setup.domain, s.numerics.pde_nx, explicit_density(s.reference.initial_density));
    DecayOptions d;
    d.t_end = s.numerics.t_end;
    d.ode_dt = s.numerics.ode_dt;
    d.pde_dt = s.numerics.pde_dt;
    d.sample_stride = s.numerics.sample_stride;
    d.offset = Eigen::Map<const Eigen::VectorXd>(s.decay.offset.data(), static_cast<Eigen::Index>(s.decay.offset.size()));
    const auto window = s.decay.fit_window.value_or(std::make_pair(0.0, s.numerics.t_end));
    d.fit_start = window.first;
    d.fit_end = window.second;

    DecayReport report = s.family.is_mixture() ? decay_experiment(setup.model, make_mix(s.family, setup.rule), p0, d)
                                               : decay_experiment(setup.model, make_ef(s.family, setup.rule), p0, d);
    RunResult out;
    out.output_dir = output_dir(s, options);
    const auto n = report.epsilon.cols();
    out.table.columns.push_back("t");
    for (Eigen::Index j = 0; j < n; ++j) out.table.columns.push_back("epsilon_" + std::to_string(j + 1));
    for (std::size_t k = 0; k < report.times.size(); ++k) {
        std::vector<double> r{report.times[k]};
        for (Eigen::Index j = 0; j < n; ++j) r.push_back(report.epsilon(static_cast<Eigen::Index>(k), j));
        out.table.rows.push_back(std::move(r));
    }
    if (options.write_files) {
        std::filesystem::create_directories(out.output_dir);
        const auto path = out.output_dir / "decay.json";
        write_text(path, decay_report_json(report, window));
        out.files.push_back(path);
    }
    out.decay = std::move(report);
    return out;
}

}  // namespace

std::string ResultTable::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_double(r[i]);
        out += "\n";
    }
    return out;
}

std::size_t ResultTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw Error(ErrorKind::InvalidArgument, "no column named " + name);
}

std::vector<std::string> trajectory_columns(std::size_t dimension, bool mixture) {
    std::vector<std::string> cols{"t"};
    for (std::size_t i = 1; i <= dimension; ++i) cols.push_back("theta_" + std::to_string(i));
    for (std::size_t i = 1; i <= dimension; ++i) cols.push_back((mixture ? "m_" : "eta_") + std::to_string(i));
    for (const char* c : {"residual", "kl", "hellinger", "l2", "clamped"}) cols.emplace_back(c);
    return cols;
}

std::string decay_report_json(const DecayReport& report, const std::pair<double, double>& fit_window) {
    using nlohmann::json;
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json eps = json::array();
    for (Eigen::Index j = 0; j < report.epsilon.cols(); ++j) eps.push_back(vec(report.epsilon.col(j)));
    json j;
    j["times"] = report.times;
    j["epsilon"] = eps;
    j["fitted_rates"] = vec(report.fitted_rates);
    j["eigenvalues"] = vec(report.eigenvalues);
    j["initial_offset"] = vec(report.initial_offset);
    j["max_abs_epsilon"] = report.max_abs_epsilon;
    j["fit_window"] = {fit_window.first, fit_window.second};
    return j.dump(2) + "\n";
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ParseError:
        case ErrorKind::ValidationError:
        case ErrorKind::InvalidArgument: return 2;
        case ErrorKind::IoError: return 3;
        case ErrorKind::TrajectoryExit: return 4;
        default: return 5;
    }
}

RunResult run_scenario(const Scenario& s, const RunOptions& options) {
    const auto setup = make_setup(s);
    switch (s.method) {
        case Method::MetricProjection: return run_metric_projection(s, setup, options);
        case Method::DecayExperiment: return run_decay(s, setup, options);
        default: return run_trajectory(s, setup, options);
    }
}

}  // namespace fpkproj
