#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpkproj/error.hpp"
#include "fpkproj/reference.hpp"
#include "fpkproj/scenario.hpp"

namespace fpkproj {

/// Column names plus one row per sample time. Absent values are NaN and
/// print as "nan".
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_csv() const;
    std::size_t column(const std::string& name) const;
};

/// Fixed column set: t, theta_1..n, eta_1..n (m_1..n for mixtures),
/// residual, kl, hellinger, l2, clamped.
std::vector<std::string> trajectory_columns(std::size_t dimension, bool mixture);

struct RunOptions {
    std::optional<std::filesystem::path> output_dir;  // overrides outputs.dir
    bool write_files = true;
};

struct RunResult {
    ResultTable table;
    std::optional<DecayReport> decay;
    std::filesystem::path output_dir;
    std::vector<std::filesystem::path> files;
};

/// Runs one scenario. Deterministic for a fixed scenario. When a trajectory
/// leaves the admissible set the rows computed so far are still written
/// before the TrajectoryExit propagates.
RunResult run_scenario(const Scenario& s, const RunOptions& options = {});

std::string decay_report_json(const DecayReport& report, const std::pair<double, double>& fit_window);

/// Process exit status for an error category: 2 for input problems
/// (parse, validation, invalid argument), 3 for I/O, 4 for trajectory exits,
/// 5 for other numerical failures.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace fpkproj
