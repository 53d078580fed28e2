// Command-line front end: run, validate and list scenarios.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fpkproj/error.hpp"
#include "fpkproj/runner.hpp"
#include "fpkproj/scenario.hpp"
#include "fpkproj/sde_model.hpp"

namespace fs = std::filesystem;
using namespace fpkproj;

namespace {

int report(const std::string& context, const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        std::cerr << context << "error [" << to_string(err->kind()) << "]: " << err->what() << "\n";
        return exit_code_for(err->kind());
    }
    std::cerr << context << "error: " << e.what() << "\n";
    return 1;
}

void print_summary(const Scenario& s, const RunResult& r) {
    std::cout << s.name << ": " << to_string(s.method) << ", " << r.table.rows.size() << " rows";
    if (r.decay) {
        std::cout << ", fitted rates";
        for (Eigen::Index j = 0; j < r.decay->fitted_rates.size(); ++j) std::cout << " " << r.decay->fitted_rates[j];
        std::cout << " (eigenvalues";
        for (Eigen::Index j = 0; j < r.decay->eigenvalues.size(); ++j) std::cout << " " << r.decay->eigenvalues[j];
        std::cout << ")";
    }
    std::cout << "\n";
    for (const auto& f : r.files) std::cout << "  " << f.string() << "\n";
}

std::vector<fs::path> scenario_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::IoError, dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-dimensional projections of Fokker-Planck-Kolmogorov equations"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string output_dir;
    std::vector<std::string> overrides;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run one scenario and write its outputs");
    run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--output-dir", output_dir, "Directory for output files (overrides outputs.dir)");
    run->add_option("--override", overrides, "Set a scenario field, e.g. numerics.t_end=2")->take_all();
    run->add_flag("--quiet", quiet, "Print nothing on success");

    auto* validate = app.add_subcommand("validate", "Check a scenario and print it with defaults filled in");
    validate->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    validate->add_option("--override", overrides, "Set a scenario field")->take_all();
    validate->add_flag("--quiet", quiet, "Print nothing on success");

    auto* presets = app.add_subcommand("presets", "Show built-in model presets");
    presets->require_subcommand(1);
    presets->add_subcommand("list", "List presets");

    std::string dir;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* run_all = app.add_subcommand("run-all", "Run every *.json scenario in a directory");
    run_all->add_option("dir", dir, "Directory of scenarios")->required();
    run_all->add_option("--output-dir", output_dir, "Root for outputs; each scenario writes to <root>/<name>");
    run_all->add_option("--override", overrides, "Set a field in every scenario")->take_all();
    run_all->add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);
    run_all->add_flag("--quiet", quiet, "Print only failures");

    CLI11_PARSE(app, argc, argv);

    if (*presets) {
        std::cout << "models:\n";
        for (const auto& p : model_presets()) {
            std::printf("  %-18s %-20s %s\n", p.name.c_str(), p.parameters.c_str(), p.description.c_str());
        }
        std::cout << "families: EP, hermite, custom-poly, gaussian-mixture, cosine-circle\n"
                  << "methods: tangent-ef, ada-ef, tangent-mix, ada-mix, galerkin, metric-projection, decay-experiment\n";
        return 0;
    }

    if (*validate) {
        try {
            const auto s = load_scenario(scenario_path, overrides);
            if (!quiet) std::cout << scenario_to_json(s) << "\n";
            return 0;
        } catch (const std::exception& e) {
            return report(scenario_path + ": ", e);
        }
    }

    if (*run) {
        try {
            const auto s = load_scenario(scenario_path, overrides);
            RunOptions opts;
            if (!output_dir.empty()) opts.output_dir = output_dir;
            const auto result = run_scenario(s, opts);
            if (!quiet) print_summary(s, result);
            return 0;
        } catch (const std::exception& e) {
            return report(scenario_path + ": ", e);
        }
    }

    // run-all
    std::vector<fs::path> files;
    try {
        files = scenario_files(dir);
    } catch (const std::exception& e) {
        return report("", e);
    }
    std::vector<int> codes(files.size(), 0);
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
            try {
                const auto s = load_scenario(files[i], overrides);
                RunOptions opts;
                if (!output_dir.empty()) opts.output_dir = fs::path(output_dir) / s.name;
                const auto result = run_scenario(s, opts);
                if (!quiet) {
                    std::lock_guard lock(io);
                    print_summary(s, result);
                }
            } catch (const std::exception& e) {
                std::lock_guard lock(io);
                codes[i] = report(files[i].string() + ": ", e);
            }
        }
    };
    std::vector<std::thread> pool;
    const auto n = std::min<std::size_t>(jobs, files.size());
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (int c : codes) {
        if (c != 0) return c;
    }
    return 0;
}
