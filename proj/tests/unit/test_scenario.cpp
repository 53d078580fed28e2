#include "helpers.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpkproj/runner.hpp"
#include "fpkproj/scenario.hpp"

using namespace fpkproj;

namespace {

const std::filesystem::path kScenarios = FPKPROJ_SCENARIO_DIR;

const char* kMinimal = R"({
  "model": {"preset": "ou", "params": [1.0, 1.4142135623730951]},
  "family": {"type": "EP", "degree": 2},
  "method": "ada-ef",
  "initial": {"coordinates": "eta", "values": [0.5, 1.25]},
  "numerics": {"t_end": 1.0}
})";

std::string message_of(const std::function<void()>& f, ErrorKind expected) {
    try {
        f();
    } catch (const Error& e) {
        CHECK(e.kind() == expected);
        return e.what();
    }
    FAIL("no error raised");
    return {};
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("minimal scenario gets defaults") {
    const auto s = parse_scenario(kMinimal, "minimal");
    CHECK(s.name == "minimal");
    CHECK(s.method == Method::AdaEf);
    CHECK(s.numerics.ode_dt == 1e-3);
    CHECK(s.numerics.pde_nx == 2001);
    CHECK(s.numerics.quadrature_k == 12);
    CHECK(s.numerics.sample_stride == 10);
    CHECK_FALSE(s.numerics.domain);
    CHECK(s.outputs.dir == "results");
    CHECK_FALSE(s.outputs.residual);
    CHECK_FALSE(s.reference.attach);
    CHECK(s.family.degree == 2);

    // The filled-in form parses back to the same thing.
    const auto again = parse_scenario(scenario_to_json(s), "other");
    CHECK(scenario_to_json(again) == scenario_to_json(s));
}

TEST_CASE("validation errors name the problem") {
    std::string text = kMinimal;
    text.replace(text.find("ada-ef"), 6, "tangent-mix");
    CHECK(contains(message_of([&] { parse_scenario(text, "x"); }, ErrorKind::ValidationError), "method/family mismatch"));

    CHECK(contains(message_of([&] { parse_scenario(kMinimal, "x", {"numerics.t_end=null"}); }, ErrorKind::ValidationError),
                   "numerics.t_end required"));

    CHECK(contains(message_of([&] { parse_scenario(kMinimal, "x", {"numerics.tend=2"}); }, ErrorKind::ValidationError),
                   "numerics.tend"));
    CHECK(contains(message_of([&] { parse_scenario(kMinimal, "x", {"colour=1"}); }, ErrorKind::ValidationError),
                   "colour"));
    CHECK(contains(message_of([&] { parse_scenario(kMinimal, "x", {"model.preset=nope"}); }, ErrorKind::ValidationError),
                   "nope"));
    CHECK(contains(message_of([&] { parse_scenario(kMinimal, "x", {"initial.values=[1]"}); }, ErrorKind::ValidationError),
                   "initial.values"));
    CHECK(contains(
        message_of([&] { parse_scenario(kMinimal, "x", {"numerics.ode_dt=-1"}); }, ErrorKind::ValidationError),
        "numerics.ode_dt"));
    CHECK(contains(message_of([&] { parse_scenario(kMinimal, "x", {"decay.offset=[0, 0]"}); }, ErrorKind::ValidationError),
                   "decay"));
    CHECK_KIND(parse_scenario(kMinimal, "x", {"no-equals"}), ErrorKind::ValidationError);
}

TEST_CASE("overrides") {
    const auto s = parse_scenario(kMinimal, "x", {"numerics.t_end=0.25", "family.degree=4", "initial.values=[0,1,0,3]",
                                                  "outputs.dir=elsewhere", "reference.attach=true"});
    CHECK(s.numerics.t_end == 0.25);
    CHECK(s.family.degree == 4);
    CHECK(s.initial.values.size() == 4);
    CHECK(s.outputs.dir == "elsewhere");
    CHECK(s.reference.attach);
}

TEST_CASE("parse errors report the line") {
    const std::string text = "{\n  \"model\": {\"preset\": \"ou\"},\n  \"family\": {\"type\": \"EP\",,}\n}\n";
    const auto msg = message_of([&] { parse_scenario(text, "x"); }, ErrorKind::ParseError);
    CHECK(contains(msg, "line 3"));
    CHECK_KIND(load_scenario(kScenarios / "does_not_exist.json"), ErrorKind::IoError);
}

TEST_CASE("every shipped scenario validates") {
    std::size_t count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_scenario(entry.path()));
        ++count;
    }
    CHECK(count >= 8);
}

TEST_CASE("trajectory header is stable") {
    const std::vector<std::string> ef{"t",        "theta_1", "theta_2",   "eta_1", "eta_2",
                                      "residual", "kl",      "hellinger", "l2",    "clamped"};
    CHECK(trajectory_columns(2, false) == ef);
    const std::vector<std::string> mix{"t", "theta_1", "m_1", "residual", "kl", "hellinger", "l2", "clamped"};
    CHECK(trajectory_columns(1, true) == mix);
}

TEST_CASE("ada-ef run reproduces the OU moments and is deterministic") {
    const auto s = load_scenario(kScenarios / "ou_ep2_ada.json");
    const auto a = run_scenario(s, {std::nullopt, false});
    const auto b = run_scenario(s, {std::nullopt, false});
    CHECK(a.table.to_csv() == b.table.to_csv());
    CHECK(a.table.columns == trajectory_columns(2, false));

    const auto& last = a.table.rows.back();
    CHECK(last[a.table.column("t")] == doctest::Approx(1.0));
    CHECK(std::abs(last[a.table.column("eta_1")] - 0.5 * std::exp(-1.0)) <= 1e-6);
    CHECK(std::abs(last[a.table.column("eta_2")] - (1.0 + 0.25 * std::exp(-2.0))) <= 1e-6);
    CHECK(last[a.table.column("residual")] <= 1e-4);
    CHECK(last[a.table.column("kl")] <= 1e-5);
    CHECK(last[a.table.column("clamped")] == 0.0);
    CHECK(a.table.rows.size() == 11);
}

TEST_CASE("files written by a run") {
    const auto dir = std::filesystem::temp_directory_path() / "fpkproj_test_scenario_files";
    std::filesystem::remove_all(dir);
    const auto s = load_scenario(kScenarios / "ou_ep2_ada.json");
    const auto r = run_scenario(s, {dir, true});
    CHECK(std::filesystem::exists(dir / "trajectory.csv"));
    CHECK(std::filesystem::exists(dir / "density_t0.5.csv"));
    CHECK(std::filesystem::exists(dir / "density_t1.csv"));
    const auto csv = read_file(dir / "trajectory.csv");
    CHECK(csv.rfind("t,theta_1,theta_2,eta_1,eta_2,residual,kl,hellinger,l2,clamped\n", 0) == 0);
    CHECK(csv == r.table.to_csv());
    CHECK(read_file(dir / "density_t1.csv").rfind("x,reference,projected\n", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("metric projection scenario") {
    const auto s = load_scenario(kScenarios / "ou_bimodal_metric.json");
    const auto r = run_scenario(s, {std::nullopt, false});
    REQUIRE(r.table.rows.size() == 11);
    const auto kl = r.table.column("kl");
    for (const auto& row : r.table.rows) CHECK(row[kl] >= 0.0);
    // The OU flow pulls the bimodal density towards N(0,1), which lies in EP(4).
    CHECK(r.table.rows.back()[kl] < r.table.rows.front()[kl]);
}

TEST_CASE("decay scenario") {
    const auto s = load_scenario(kScenarios / "ou_hermite_decay.json");
    const auto r = run_scenario(s, {std::nullopt, false});
    REQUIRE(r.decay);
    CHECK(r.decay->fitted_rates[0] == doctest::Approx(1.0).epsilon(0.03));
    CHECK(r.decay->fitted_rates[1] == doctest::Approx(2.0).epsilon(0.03));
    const auto json = decay_report_json(*r.decay, {0.05, 1.0});
    CHECK(contains(json, "fitted_rates"));
    CHECK(contains(json, "eigenvalues"));
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ErrorKind::ValidationError) == 2);
    CHECK(exit_code_for(ErrorKind::ParseError) == 2);
    CHECK(exit_code_for(ErrorKind::IoError) == 3);
    CHECK(exit_code_for(ErrorKind::TrajectoryExit) == 4);
    CHECK(exit_code_for(ErrorKind::DegenerateFisher) == 5);
}
