// Experiment runner behind the command-line tool. Validates a JSON config,
// assembles the requested problem, runs the chosen method and writes the
// result files. Lives in the library so everything is testable without
// spawning processes; tools/main.cpp is only argument plumbing.

#ifndef GMVI_CLI_RUNNER_HPP
#define GMVI_CLI_RUNNER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gmvi {

/// Anything wrong with the config document or the files it references.
/// The command line maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Command-line flags layered on top of the config document.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool fast = false;  // forces the fast profile on; cannot turn it off
};

/// A validated experiment description. `effective` is the canonical config
/// document (defaults and overrides folded in) whose FNV-1a hash stamps
/// every output file.
struct ExperimentConfig {
    std::string problem;  // catalysis | diffusion-corners | diffusion-midpoints | linear-gaussian
    std::string method;   // vi | mala; empty if the config omitted it
    std::uint64_t seed = 0;
    std::filesystem::path out;
    bool fast = false;
    std::filesystem::path data;  // observations CSV; empty if the config omitted it
    nlohmann::json fit;          // overrides for the variational fit
    nlohmann::json mala;         // overrides for the sampler
    nlohmann::json truth;        // make-data ground-truth settings
    nlohmann::json effective;
    std::string config_hash;
};

/// Reads and parses a JSON config file. Throws ConfigError when the file is
/// unreadable or not valid JSON.
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Validates the document against the config schema (known keys, types,
/// enums, mandatory seed), folds in the overrides and computes the config
/// hash. Throws ConfigError on any violation.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const CliOverrides& overrides);

/// Runs the experiment and writes result files into cfg.out. Returns the
/// paths written. Throws ConfigError for semantic config problems (missing
/// data file, unsupported combination) and other exceptions for numerical
/// failures.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& cfg);

/// Generates a synthetic diffusion data set: truth-grid solve plus seeded
/// Gaussian noise, written as CSV with a provenance JSON next to it.
/// Diffusion problems only.
std::vector<std::filesystem::path> make_dataset(const ExperimentConfig& cfg);

}  // namespace gmvi

#endif
