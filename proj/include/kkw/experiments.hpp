#pragma once

// Named, seeded experiments that write CSV/JSON data files.
//
// A config is a flat "key = value" text file. The fixed keys are experiment,
// m, n, seed, steps, snapshot_every, output_dir and trials; any other key is
// kept verbatim in `extra` and read by the experiment that understands it.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kkw {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
    std::string experiment;
    std::size_t m = 0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;
    std::uint64_t snapshot_every = 0;
    std::string output_dir = ".";
    std::uint64_t trials = 1;
    std::map<std::string, std::string> extra;

    /// Registered defaults for `name`; throws ConfigError for unknown names.
    static ExperimentConfig defaults_for(std::string_view name);

    static ExperimentConfig parse(std::string_view text);
    static ExperimentConfig load(const std::string& path);
    std::string emit() const;

    /// Sets one key (fixed or extra) from its text form.
    void set(std::string_view key, std::string_view value);

    void validate() const;

    std::string extra_or(std::string_view key, std::string_view fallback) const;
    double extra_double(std::string_view key, double fallback) const;
    std::uint64_t extra_count(std::string_view key, std::uint64_t fallback) const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

std::vector<std::string> registered_experiments();

using ConfigPairs = std::vector<std::pair<std::string, std::string>>;

/// Key/value lines in file order; '#' starts a comment line.
ConfigPairs parse_config_pairs(std::string_view text);
ConfigPairs load_config_pairs(const std::string& path);

struct ExperimentOutput {
    std::vector<std::string> files;  // paths relative to output_dir
    std::string report_json;         // also written to report.json
};

/// Validates the config, creates output_dir and runs the named experiment.
/// Identical configs produce byte-identical files.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

}  // namespace kkw
