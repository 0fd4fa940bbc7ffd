// kkw: runs one named experiment and writes its CSV/JSON files.
//
//   kkw <experiment> --config <path> [--seed N --steps N --m N --n N --out DIR --trials N]
//
// Values are layered: experiment defaults, then the config file, then flags.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kkw/kkw.h"

namespace {

int report_failure(kkw_status status) {
    std::fprintf(stderr, "kkw: %s: %s\n", kkw_status_name(status), kkw_last_error());
    return 1;
}

std::string experiment_list() {
    std::string out;
    for (size_t k = 0; k < kkw_experiment_count(); ++k) {
        if (k) out += ", ";
        out += kkw_experiment_name(k);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kaczmarz Kac walk experiments"};
    app.set_version_flag("--version", kkw_version());

    std::string experiment;
    std::string config_path;
    std::optional<std::string> seed, steps, m, n, out_dir, trials, snapshot_every;
    std::vector<std::string> extras;
    bool list = false;

    app.add_option("experiment", experiment, "One of: " + experiment_list());
    app.add_option("--config", config_path, "Flat key = value config file");
    app.add_option("--seed", seed, "Base seed (trial t uses seed + t)");
    app.add_option("--steps", steps, "Walk or particle steps");
    app.add_option("--m", m, "Rows (particles for circle)");
    app.add_option("--n", n, "Columns");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--trials", trials, "Independent trials");
    app.add_option("--snapshot-every", snapshot_every, "Snapshot cadence in steps");
    app.add_option("--set", extras, "Extra experiment parameter key=value (repeatable)");
    app.add_flag("--list", list, "List experiments and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (list) {
        for (size_t k = 0; k < kkw_experiment_count(); ++k) std::printf("%s\n", kkw_experiment_name(k));
        return 0;
    }
    if (experiment.empty()) {
        std::fprintf(stderr, "kkw: missing experiment name (one of: %s)\n", experiment_list().c_str());
        return 2;
    }

    kkw_experiment* exp = nullptr;
    kkw_status st = kkw_experiment_create(experiment.c_str(), &exp);
    if (st != KKW_OK) return report_failure(st);

    auto apply = [&](const char* key, const std::optional<std::string>& value) {
        if (st == KKW_OK && value) st = kkw_experiment_set(exp, key, value->c_str());
    };
    if (!config_path.empty()) st = kkw_experiment_load_config(exp, config_path.c_str());
    apply("seed", seed);
    apply("steps", steps);
    apply("m", m);
    apply("n", n);
    apply("output_dir", out_dir);
    apply("trials", trials);
    apply("snapshot_every", snapshot_every);
    for (const auto& kv : extras) {
        if (st != KKW_OK) break;
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "kkw: --set expects key=value, got '%s'\n", kv.c_str());
            kkw_experiment_destroy(exp);
            return 2;
        }
        st = kkw_experiment_set(exp, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    }
    if (st == KKW_OK) st = kkw_experiment_run(exp);
    if (st != KKW_OK) {
        const int code = report_failure(st);
        kkw_experiment_destroy(exp);
        return code;
    }

    std::printf("%s: wrote %zu files\n", experiment.c_str(), kkw_experiment_file_count(exp));
    kkw_experiment_destroy(exp);
    return 0;
}
