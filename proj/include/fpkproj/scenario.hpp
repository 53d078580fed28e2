#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fpkproj {

enum class Method { TangentEf, AdaEf, TangentMix, AdaMix, Galerkin, MetricProjection, DecayExperiment };

std::string_view to_string(Method m) noexcept;

struct ModelSpec {
    std::string preset;
    std::vector<double> params;
};

/// type is one of EP, hermite, custom-poly, gaussian-mixture, cosine-circle.
struct FamilySpec {
    std::string type;
    int degree = 2;                  // EP
    std::vector<int> indices;        // hermite
    double scale = 1.0;              // hermite
    std::vector<int> exponents;      // custom-poly
    std::vector<double> means;       // gaussian-mixture
    std::vector<double> variances;   // gaussian-mixture
    std::vector<int> harmonics;      // cosine-circle

    bool is_mixture() const noexcept { return type == "gaussian-mixture" || type == "cosine-circle"; }
};

/// type is one of family, gaussian, gaussian-mixture, cosine-series. Every
/// density is renormalised on the reference grid.
struct DensitySpec {
    std::string type = "family";
    double mean = 0.0;
    double variance = 1.0;
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> variances;
    double constant = 1.0;
    std::vector<std::pair<int, double>> terms;  // (k, a_k) for a_k cos(k x)
};

/// coordinates is one of theta, eta, m, density.
struct InitialSpec {
    std::string coordinates = "theta";
    std::vector<double> values;
};

struct ReferenceSpec {
    bool attach = false;
    DensitySpec initial_density;
};

struct DecaySpec {
    std::vector<double> offset;
    std::optional<std::pair<double, double>> fit_window;
};

struct NumericsSpec {
    std::optional<std::pair<double, double>> domain;  // defaults to the model preset's
    int quadrature_k = 12;
    double ode_dt = 1e-3;
    std::size_t pde_nx = 2001;
    double pde_dt = 1e-3;
    double t_end = 0.0;
    int sample_stride = 10;
};

struct OutputSpec {
    std::string dir = "results";
    bool residual = false;
    std::vector<double> density_times;
};

struct Scenario {
    std::string name;
    ModelSpec model;
    FamilySpec family;
    Method method = Method::TangentEf;
    InitialSpec initial;
    ReferenceSpec reference;
    DecaySpec decay;
    NumericsSpec numerics;
    OutputSpec outputs;
};

/// Reads a JSON scenario. `overrides` are "dot.path=value" strings applied
/// before validation; values parse as JSON where possible, else as strings.
Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// As load_scenario, from text. `name` is used when the document has none.
Scenario parse_scenario(const std::string& text, const std::string& name,
                        const std::vector<std::string>& overrides = {});

/// The scenario with defaults filled in, as pretty-printed JSON.
std::string scenario_to_json(const Scenario& s);

}  // namespace fpkproj
