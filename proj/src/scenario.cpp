#include "fpkproj/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fpkproj/error.hpp"
#include "fpkproj/sde_model.hpp"

namespace fpkproj {

using nlohmann::json;

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::TangentEf: return "tangent-ef";
        case Method::AdaEf: return "ada-ef";
        case Method::TangentMix: return "tangent-mix";
        case Method::AdaMix: return "ada-mix";
        case Method::Galerkin: return "galerkin";
        case Method::MetricProjection: return "metric-projection";
        case Method::DecayExperiment: return "decay-experiment";
    }
    return "unknown";
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::ValidationError, msg); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed access to one JSON object; remembers which keys were read so that
// leftovers can be reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) invalid((path_.empty() ? "scenario" : path_) + " must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    [[noreturn]] void required(const std::string& key) const { invalid(path(key) + " required"); }

    double number(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_number()) invalid(path(key) + " must be a number");
        return v.get<double>();
    }

    double positive(const std::string& key) {
        const double v = number(key);
        if (!(v > 0.0) || !std::isfinite(v)) invalid(path(key) + " must be positive");
        return v;
    }

    long long integer(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_number_integer()) invalid(path(key) + " must be an integer");
        return v.get<long long>();
    }

    std::string string(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_string()) invalid(path(key) + " must be a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_boolean()) invalid(path(key) + " must be true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_array()) invalid(path(key) + " must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) invalid(path(key) + " must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<int> integers(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_array()) invalid(path(key) + " must be an array of integers");
        std::vector<int> out;
        for (const auto& e : v) {
            if (!e.is_number_integer()) invalid(path(key) + " must be an array of integers");
            out.push_back(e.get<int>());
        }
        return out;
    }

    std::pair<double, double> interval(const std::string& key) {
        const auto v = numbers(key);
        if (v.size() != 2 || !(v[0] < v[1])) invalid(path(key) + " must be [lower, upper] with lower < upper");
        return {v[0], v[1]};
    }

    Section child(const std::string& key) { return Section(raw(key), path(key)); }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) invalid(path(item.key()) + ": unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

const std::set<std::string> kEfTypes{"EP", "hermite", "custom-poly"};
const std::set<std::string> kMixTypes{"gaussian-mixture", "cosine-circle"};

Method parse_method(const std::string& s) {
    for (auto m : {Method::TangentEf, Method::AdaEf, Method::TangentMix, Method::AdaMix, Method::Galerkin,
                   Method::MetricProjection, Method::DecayExperiment}) {
        if (to_string(m) == s) return m;
    }
    invalid("method: unknown method '" + s + "'");
}

std::size_t family_dimension(const FamilySpec& f) {
    if (f.type == "EP") return static_cast<std::size_t>(f.degree);
    if (f.type == "hermite") return f.indices.size();
    if (f.type == "custom-poly") return f.exponents.size();
    if (f.type == "gaussian-mixture") return f.means.size() - 1;
    return f.harmonics.size();
}

// Keys that belong to each family type besides "type".
const std::set<std::string>& family_keys(const std::string& type) {
    static const std::map<std::string, std::set<std::string>> keys{
        {"EP", {"degree"}},
        {"hermite", {"indices", "scale"}},
        {"custom-poly", {"exponents"}},
        {"gaussian-mixture", {"means", "variances"}},
        {"cosine-circle", {"harmonics"}},
    };
    return keys.at(type);
}

FamilySpec parse_family(Section sec) {
    FamilySpec f;
    if (!sec.has("type")) sec.required("type");
    f.type = sec.string("type");
    if (!kEfTypes.count(f.type) && !kMixTypes.count(f.type)) {
        invalid(sec.path("type") + ": unknown family type '" + f.type + "'");
    }
    const auto& allowed = family_keys(f.type);
    for (const char* key : {"degree", "indices", "scale", "exponents", "means", "variances", "harmonics"}) {
        if (sec.has(key) && !allowed.count(key)) {
            invalid(sec.path(key) + ": not used by family type " + f.type);
        }
    }
    if (f.type == "EP") {
        if (sec.has("degree")) f.degree = static_cast<int>(sec.integer("degree"));
        if (f.degree < 2 || f.degree % 2 != 0) invalid(sec.path("degree") + " must be even and >= 2");
    } else if (f.type == "hermite") {
        if (!sec.has("indices")) sec.required("indices");
        f.indices = sec.integers("indices");
        if (sec.has("scale")) f.scale = sec.positive("scale");
        if (f.indices.empty()) invalid(sec.path("indices") + " must not be empty");
        for (int k : f.indices) {
            if (k < 1) invalid(sec.path("indices") + " entries must be >= 1");
        }
    } else if (f.type == "custom-poly") {
        if (!sec.has("exponents")) sec.required("exponents");
        f.exponents = sec.integers("exponents");
        if (f.exponents.empty()) invalid(sec.path("exponents") + " must not be empty");
        for (int k : f.exponents) {
            if (k < 1) invalid(sec.path("exponents") + " entries must be >= 1");
        }
    } else if (f.type == "gaussian-mixture") {
        if (!sec.has("means")) sec.required("means");
        if (!sec.has("variances")) sec.required("variances");
        f.means = sec.numbers("means");
        f.variances = sec.numbers("variances");
        if (f.means.size() < 2) invalid(sec.path("means") + " needs at least two components");
        if (f.means.size() != f.variances.size()) invalid(sec.path("variances") + " must match means in length");
        for (double v : f.variances) {
            if (!(v > 0.0)) invalid(sec.path("variances") + " entries must be positive");
        }
    } else {
        if (!sec.has("harmonics")) sec.required("harmonics");
        f.harmonics = sec.integers("harmonics");
        if (f.harmonics.empty()) invalid(sec.path("harmonics") + " must not be empty");
        for (int k : f.harmonics) {
            if (k < 1) invalid(sec.path("harmonics") + " entries must be >= 1");
        }
    }
    sec.finish();
    return f;
}

DensitySpec parse_density(Section sec) {
    DensitySpec d;
    if (!sec.has("type")) sec.required("type");
    d.type = sec.string("type");
    static const std::map<std::string, std::set<std::string>> keys{
        {"family", {}},
        {"gaussian", {"mean", "variance"}},
        {"gaussian-mixture", {"weights", "means", "variances"}},
        {"cosine-series", {"constant", "terms"}},
    };
    const auto it = keys.find(d.type);
    if (it == keys.end()) invalid(sec.path("type") + ": unknown density type '" + d.type + "'");
    for (const char* key : {"mean", "variance", "weights", "means", "variances", "constant", "terms"}) {
        if (sec.has(key) && !it->second.count(key)) invalid(sec.path(key) + ": not used by density type " + d.type);
    }
    if (d.type == "gaussian") {
        if (sec.has("mean")) d.mean = sec.number("mean");
        if (sec.has("variance")) d.variance = sec.positive("variance");
    } else if (d.type == "gaussian-mixture") {
        for (const char* key : {"weights", "means", "variances"}) {
            if (!sec.has(key)) sec.required(key);
        }
        d.weights = sec.numbers("weights");
        d.means = sec.numbers("means");
        d.variances = sec.numbers("variances");
        if (d.weights.empty() || d.weights.size() != d.means.size() || d.means.size() != d.variances.size()) {
            invalid(sec.path("weights") + ", means and variances must have equal, nonzero length");
        }
        for (double w : d.weights) {
            if (!(w >= 0.0)) invalid(sec.path("weights") + " entries must be nonnegative");
        }
        for (double v : d.variances) {
            if (!(v > 0.0)) invalid(sec.path("variances") + " entries must be positive");
        }
    } else if (d.type == "cosine-series") {
        if (sec.has("constant")) d.constant = sec.positive("constant");
        if (sec.has("terms")) {
            const auto& t = sec.raw("terms");
            if (!t.is_array()) invalid(sec.path("terms") + " must be an array of [k, a_k] pairs");
            for (const auto& pair : t) {
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number() ||
                    pair[0].get<int>() < 1) {
                    invalid(sec.path("terms") + " must be an array of [k, a_k] pairs with k >= 1");
                }
                d.terms.emplace_back(pair[0].get<int>(), pair[1].get<double>());
            }
        }
    }
    sec.finish();
    return d;
}

bool is_trajectory_method(Method m) { return m != Method::MetricProjection && m != Method::DecayExperiment; }

bool wants_mixture(Method m) { return m == Method::TangentMix || m == Method::AdaMix || m == Method::Galerkin; }

bool wants_ef(Method m) { return m == Method::TangentEf || m == Method::AdaEf; }

Scenario from_json(const json& doc, const std::string& fallback_name) {
    Section top(doc, "");
    Scenario s;
    s.name = top.has("name") ? top.string("name") : fallback_name;

    if (!top.has("model")) top.required("model");
    {
        auto sec = top.child("model");
        if (!sec.has("preset")) sec.required("preset");
        s.model.preset = sec.string("preset");
        if (sec.has("params")) s.model.params = sec.numbers("params");
        sec.finish();
        try {
            make_model_preset(s.model.preset, s.model.params);
        } catch (const Error& e) {
            invalid(std::string("model: ") + e.what());
        }
    }

    if (!top.has("family")) top.required("family");
    s.family = parse_family(top.child("family"));

    if (!top.has("method")) top.required("method");
    s.method = parse_method(top.string("method"));
    if ((wants_mixture(s.method) && !s.family.is_mixture()) || (wants_ef(s.method) && s.family.is_mixture())) {
        invalid("method/family mismatch: method " + std::string(to_string(s.method)) + " cannot use family type " +
                s.family.type);
    }
    const std::size_t dim = family_dimension(s.family);

    if (!top.has("numerics")) top.required("numerics");
    {
        auto sec = top.child("numerics");
        if (!sec.has("t_end")) sec.required("t_end");
        s.numerics.t_end = sec.positive("t_end");
        if (sec.has("domain")) s.numerics.domain = sec.interval("domain");
        if (sec.has("quadrature_k")) {
            s.numerics.quadrature_k = static_cast<int>(sec.integer("quadrature_k"));
            if (s.numerics.quadrature_k < 4 || s.numerics.quadrature_k > 20) {
                invalid(sec.path("quadrature_k") + " must lie in [4, 20]");
            }
        }
        if (sec.has("ode_dt")) s.numerics.ode_dt = sec.positive("ode_dt");
        if (sec.has("pde_dt")) s.numerics.pde_dt = sec.positive("pde_dt");
        if (sec.has("pde_nx")) {
            const auto nx = sec.integer("pde_nx");
            if (nx < 3) invalid(sec.path("pde_nx") + " must be >= 3");
            s.numerics.pde_nx = static_cast<std::size_t>(nx);
        }
        if (sec.has("sample_stride")) {
            const auto k = sec.integer("sample_stride");
            if (k < 1) invalid(sec.path("sample_stride") + " must be >= 1");
            s.numerics.sample_stride = static_cast<int>(k);
        }
        sec.finish();
    }

    if (top.has("reference")) {
        auto sec = top.child("reference");
        if (sec.has("attach")) s.reference.attach = sec.boolean("attach");
        if (sec.has("initial_density")) s.reference.initial_density = parse_density(sec.child("initial_density"));
        sec.finish();
    }
    const bool external_p0 = s.reference.initial_density.type != "family";

    if (is_trajectory_method(s.method)) {
        if (!top.has("initial")) top.required("initial");
        auto sec = top.child("initial");
        if (sec.has("coordinates")) s.initial.coordinates = sec.string("coordinates");
        const auto& c = s.initial.coordinates;
        if (c != "theta" && c != "eta" && c != "m" && c != "density") {
            invalid(sec.path("coordinates") + " must be theta, eta, m or density");
        }
        if (c == "eta" && s.family.is_mixture()) invalid(sec.path("coordinates") + ": eta needs an exponential family");
        if (c == "m" && !s.family.is_mixture()) invalid(sec.path("coordinates") + ": m needs a mixture family");
        if (c == "density") {
            if (sec.has("values")) invalid(sec.path("values") + ": not used with density coordinates");
            if (!external_p0) invalid("reference.initial_density required for density coordinates");
        } else {
            if (!sec.has("values")) sec.required("values");
            s.initial.values = sec.numbers("values");
            if (s.initial.values.size() != dim) {
                invalid(sec.path("values") + " must have " + std::to_string(dim) + " entries");
            }
        }
        sec.finish();
    } else {
        if (top.has("initial")) invalid("initial: not used by method " + std::string(to_string(s.method)));
        if (!external_p0) invalid("reference.initial_density required for method " + std::string(to_string(s.method)));
    }

    if (top.has("decay")) {
        if (s.method != Method::DecayExperiment) invalid("decay: only used by method decay-experiment");
        auto sec = top.child("decay");
        if (sec.has("offset")) {
            s.decay.offset = sec.numbers("offset");
            if (s.decay.offset.size() != dim) {
                invalid(sec.path("offset") + " must have " + std::to_string(dim) + " entries");
            }
        }
        if (sec.has("fit_window")) {
            s.decay.fit_window = sec.interval("fit_window");
            if (s.decay.fit_window->first < 0.0) invalid(sec.path("fit_window") + " must start at t >= 0");
        }
        sec.finish();
    }

    if (top.has("outputs")) {
        auto sec = top.child("outputs");
        if (sec.has("dir")) s.outputs.dir = sec.string("dir");
        if (sec.has("residual")) s.outputs.residual = sec.boolean("residual");
        if (sec.has("density_times")) {
            s.outputs.density_times = sec.numbers("density_times");
            for (double t : s.outputs.density_times) {
                if (!(t >= 0.0) || t > s.numerics.t_end + 1e-12) {
                    invalid(sec.path("density_times") + " entries must lie in [0, t_end]");
                }
            }
        }
        if (s.outputs.residual && s.family.is_mixture()) {
            invalid(sec.path("residual") + ": only defined for exponential families");
        }
        sec.finish();
    }

    top.finish();
    return s;
}

void apply_override(json& doc, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) invalid("override '" + text + "' must look like key.path=value");
    const std::string path = text.substr(0, eq);
    const std::string value = text.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) invalid("override '" + text + "' has an empty path segment");
        if (!node->is_object()) invalid("override '" + text + "': " + path.substr(0, start) + " is not an object");
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

json parse_document(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(ErrorKind::ParseError,
                    "parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
}

json density_to_json(const DensitySpec& d) {
    json j{{"type", d.type}};
    if (d.type == "gaussian") {
        j["mean"] = d.mean;
        j["variance"] = d.variance;
    } else if (d.type == "gaussian-mixture") {
        j["weights"] = d.weights;
        j["means"] = d.means;
        j["variances"] = d.variances;
    } else if (d.type == "cosine-series") {
        j["constant"] = d.constant;
        json terms = json::array();
        for (const auto& [k, a] : d.terms) terms.push_back({k, a});
        j["terms"] = terms;
    }
    return j;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& name, const std::vector<std::string>& overrides) {
    json doc = parse_document(text);
    for (const auto& o : overrides) apply_override(doc, o);
    return from_json(doc, name);
}

Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read scenario " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.stem().string(), overrides);
}

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["model"] = {{"preset", s.model.preset}, {"params", s.model.params}};
    json fam{{"type", s.family.type}};
    if (s.family.type == "EP") fam["degree"] = s.family.degree;
    if (s.family.type == "hermite") {
        fam["indices"] = s.family.indices;
        fam["scale"] = s.family.scale;
    }
    if (s.family.type == "custom-poly") fam["exponents"] = s.family.exponents;
    if (s.family.type == "gaussian-mixture") {
        fam["means"] = s.family.means;
        fam["variances"] = s.family.variances;
    }
    if (s.family.type == "cosine-circle") fam["harmonics"] = s.family.harmonics;
    j["family"] = fam;
    j["method"] = std::string(to_string(s.method));
    if (is_trajectory_method(s.method)) {
        json init{{"coordinates", s.initial.coordinates}};
        if (s.initial.coordinates != "density") init["values"] = s.initial.values;
        j["initial"] = init;
    }
    j["reference"] = {{"attach", s.reference.attach}, {"initial_density", density_to_json(s.reference.initial_density)}};
    if (s.method == Method::DecayExperiment) {
        json d{{"offset", s.decay.offset}};
        if (s.decay.fit_window) d["fit_window"] = {s.decay.fit_window->first, s.decay.fit_window->second};
        j["decay"] = d;
    }
    json num{{"quadrature_k", s.numerics.quadrature_k}, {"ode_dt", s.numerics.ode_dt},
             {"pde_nx", s.numerics.pde_nx},             {"pde_dt", s.numerics.pde_dt},
             {"t_end", s.numerics.t_end},               {"sample_stride", s.numerics.sample_stride}};
    if (s.numerics.domain) num["domain"] = {s.numerics.domain->first, s.numerics.domain->second};
    j["numerics"] = num;
    j["outputs"] = {{"dir", s.outputs.dir}, {"residual", s.outputs.residual}, {"density_times", s.outputs.density_times}};
    return j.dump(2);
}

}  // namespace fpkproj
