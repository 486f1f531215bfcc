#pragma once

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace blhomlab::experiments {

struct CriterionRow {
    std::string name;
    double value = 0;
    double threshold = 0;
    bool pass = false;
};

struct ExperimentResult {
    std::string experiment;
    bool pass = false;
    std::vector<CriterionRow> criteria;
    std::vector<std::string> artifacts; ///< paths relative to the output directory
    std::filesystem::path manifest;
};

/// Parse a config (strict: unknown keys are rejected with a path-anchored
/// message) and run the named experiment, writing CSV artifacts and a JSON
/// manifest with per-criterion pass/fail and content checksums.
/// Throws ConfigError for malformed configs; numerical failures propagate as
/// ConvergenceError.
ExperimentResult run_experiment(const nlohmann::json& config,
                                const std::filesystem::path& out_dir);

ExperimentResult run_experiment_file(const std::filesystem::path& config_path,
                                     const std::filesystem::path& out_dir_override = {});

} // namespace blhomlab::experiments
