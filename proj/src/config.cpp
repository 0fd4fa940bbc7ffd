#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "kkw/experiments.hpp"

namespace kkw {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("config: bad value '" + std::string(value) + "' for key '" +
                          std::string(key) + "'");
    }
    return out;
}

struct Defaults {
    std::size_t m, n;
    std::uint64_t steps, snapshot_every, trials;
};

const std::map<std::string, Defaults, std::less<>>& registry() {
    static const std::map<std::string, Defaults, std::less<>> table{
        {"square_walk", {100, 100, 20000, 100, 10}},
        {"overdetermined", {100, 25, 20000, 100, 10}},
        {"n_plus_one", {31, 30, 200000, 1000, 1}},
        {"circle", {200, 2, 100000, 1000, 20}},
        {"solver_compare", {100, 100, 40000, 100, 5}},
        {"theorem_audit", {4, 4, 0, 1, 200}},
    };
    return table;
}

}  // namespace

std::vector<std::string> registered_experiments() {
    std::vector<std::string> names;
    for (const auto& [name, _] : registry()) names.push_back(name);
    return names;
}

ExperimentConfig ExperimentConfig::defaults_for(std::string_view name) {
    const auto it = registry().find(name);
    if (it == registry().end()) {
        throw ConfigError("unknown experiment '" + std::string(name) + "'");
    }
    ExperimentConfig cfg;
    cfg.experiment = it->first;
    cfg.m = it->second.m;
    cfg.n = it->second.n;
    cfg.steps = it->second.steps;
    cfg.snapshot_every = it->second.snapshot_every;
    cfg.trials = it->second.trials;
    return cfg;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
    if (key.empty()) throw ConfigError("config: empty key");
    if (key == "experiment") {
        experiment = value;
    } else if (key == "m") {
        m = parse_number<std::size_t>(key, value);
    } else if (key == "n") {
        n = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
        seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "steps") {
        steps = parse_number<std::uint64_t>(key, value);
    } else if (key == "snapshot_every") {
        snapshot_every = parse_number<std::uint64_t>(key, value);
    } else if (key == "output_dir") {
        output_dir = value;
    } else if (key == "trials") {
        trials = parse_number<std::uint64_t>(key, value);
    } else {
        extra[std::string(key)] = value;
    }
}

ConfigPairs parse_config_pairs(std::string_view text) {
    ConfigPairs pairs;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        pairs.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return pairs;
}

ConfigPairs load_config_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_pairs(buf.str());
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
    ExperimentConfig cfg;
    for (const auto& [k, v] : parse_config_pairs(text)) cfg.set(k, v);
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    ExperimentConfig cfg;
    for (const auto& [k, v] : load_config_pairs(path)) cfg.set(k, v);
    return cfg;
}

std::string ExperimentConfig::emit() const {
    std::ostringstream out;
    out << "experiment = " << experiment << '\n'
        << "m = " << m << '\n'
        << "n = " << n << '\n'
        << "seed = " << seed << '\n'
        << "steps = " << steps << '\n'
        << "snapshot_every = " << snapshot_every << '\n'
        << "output_dir = " << output_dir << '\n'
        << "trials = " << trials << '\n';
    for (const auto& [k, v] : extra) out << k << " = " << v << '\n';
    return out.str();
}

void ExperimentConfig::validate() const {
    if (registry().find(experiment) == registry().end()) {
        throw ConfigError("unknown experiment '" + experiment + "'");
    }
    if (m == 0 || n == 0) throw ConfigError("config: m and n must be positive");
    if (snapshot_every == 0) throw ConfigError("config: snapshot_every must be positive");
    if (trials == 0) throw ConfigError("config: trials must be positive");
    if (output_dir.empty()) throw ConfigError("config: output_dir must not be empty");
}

std::string ExperimentConfig::extra_or(std::string_view key, std::string_view fallback) const {
    const auto it = extra.find(std::string(key));
    return it == extra.end() ? std::string(fallback) : it->second;
}

double ExperimentConfig::extra_double(std::string_view key, double fallback) const {
    const auto it = extra.find(std::string(key));
    return it == extra.end() ? fallback : parse_number<double>(key, it->second);
}

std::uint64_t ExperimentConfig::extra_count(std::string_view key, std::uint64_t fallback) const {
    const auto it = extra.find(std::string(key));
    return it == extra.end() ? fallback : parse_number<std::uint64_t>(key, it->second);
}

}  // namespace kkw
