#include "kkw/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kkw/csv.hpp"
#include "kkw/meanfield.hpp"
#include "kkw/solver.hpp"
#include "kkw/theory.hpp"
#include "kkw/walk.hpp"

namespace kkw {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Runs body(t) for t in [0, count) on up to hardware_concurrency threads.
// Each trial owns its output slot and files, so the result does not depend on
// scheduling.
void for_each_trial(std::uint64_t count, const std::function<void(std::uint64_t)>& body) {
    const auto workers = std::min<std::uint64_t>(
        count, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::uint64_t t = 0; t < count; ++t) body(t);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::uint64_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::uint64_t t = next++; t < count; t = next++) {
                try {
                    body(t);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

class OutputDir {
public:
    explicit OutputDir(const std::string& path) : root_(path) { fs::create_directories(root_); }

    std::ofstream open(const std::string& name) {
        std::ofstream out(root_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (root_ / name).string());
        return out;
    }

    const fs::path& root() const { return root_; }

private:
    fs::path root_;
};

std::string seeded(const char* stem, std::uint64_t seed, const char* suffix = "") {
    return std::string(stem) + "_" + std::to_string(seed) + suffix + ".csv";
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Consistent system with a Gaussian reference solution.
LinearSystem seeded_system(std::uint64_t trial_seed, std::size_t m, std::size_t n) {
    Rng rng(derive_seed(trial_seed, 0));
    Matrix a = random_row_normalized(rng, m, n);
    Vector x(n);
    for (double& v : x) v = rng.normal();
    return LinearSystem::consistent(a, std::move(x));
}

WalkConfig walk_config_for(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
    WalkConfig wc;
    wc.seed = derive_seed(trial_seed, 1);
    wc.steps = cfg.steps;
    wc.snapshot_every = cfg.snapshot_every;
    wc.degenerate_tol = cfg.extra_double("degenerate_tol", 1e-12);
    wc.renormalize = cfg.extra_count("renormalize", 1) != 0;
    return wc;
}

bool record_steps(const ExperimentConfig& cfg) {
    return cfg.extra_count("record_steps", cfg.steps <= 100000 ? 1 : 0) != 0;
}

struct TrialWalk {
    std::uint64_t seed = 0;
    WalkResult result;
};

// Shared walk driver: one seeded system per trial, trajectory and step files.
std::vector<TrialWalk> run_trial_walks(const ExperimentConfig& cfg, OutputDir& dir,
                                       std::vector<std::string>& files) {
    std::vector<TrialWalk> trials(cfg.trials);
    const bool keep = record_steps(cfg);
    for_each_trial(cfg.trials, [&](std::uint64_t t) {
        const std::uint64_t ts = cfg.seed + t;
        trials[t].seed = ts;
        trials[t].result = run_walk(seeded_system(ts, cfg.m, cfg.n), walk_config_for(cfg, ts), keep);
        auto traj = dir.open(seeded("sigma_traj", ts));
        write_snapshots_csv(traj, trials[t].result.snapshots);
        if (keep) {
            auto steps = dir.open(seeded("steps", ts));
            write_steps_csv(steps, trials[t].result.records);
        }
    });
    for (const auto& tr : trials) {
        files.push_back(seeded("sigma_traj", tr.seed));
        if (keep) files.push_back(seeded("steps", tr.seed));
    }
    return trials;
}

Json exp_square_walk(const ExperimentConfig& cfg, OutputDir& dir, std::vector<std::string>& files) {
    if (cfg.m != cfg.n) throw ConfigError("square_walk needs m == n");
    if (cfg.n < 2) throw ConfigError("square_walk needs n >= 2");
    const std::uint64_t ell = cfg.extra_count("ell", cfg.n);
    if (ell < 1 || ell > cfg.n) throw ConfigError("square_walk: ell must lie in [1, n]");

    const auto trials = run_trial_walks(cfg, dir, files);
    const std::size_t snaps = trials.front().result.snapshots.size();

    std::vector<double> medians(snaps);
    for (std::size_t s = 0; s < snaps; ++s) {
        std::vector<double> at;
        for (const auto& tr : trials) at.push_back(tr.result.snapshots[s].sigmas[ell - 1]);
        medians[s] = median(std::move(at));
    }
    const double sigma0 = std::min(medians.front(), 1.0);

    auto pred = dir.open("predictions.csv");
    pred << "k,median_sigma,predict_linear,predict_logistic\n";
    for (std::size_t s = 0; s < snaps; ++s) {
        const double k = static_cast<double>(trials.front().result.snapshots[s].k);
        const double row[] = {k, medians[s], predict_linear(cfg.n, sigma0, k),
                              predict_logistic(cfg.n, sigma0, k)};
        csv::write_row(pred, row);
    }
    files.push_back("predictions.csv");

    Json report;
    report["ell"] = ell;
    report["median_sigma_initial"] = medians.front();
    report["median_sigma_final"] = medians.back();
    Json per = Json::array();
    for (const auto& tr : trials) {
        const auto& sn = tr.result.snapshots;
        per.push_back({{"seed", tr.seed},
                       {"sigma_ell_initial", sn.front().sigmas[ell - 1]},
                       {"sigma_ell_final", sn.back().sigmas[ell - 1]},
                       {"sigma_min_initial", sn.front().sigmas.min()},
                       {"sigma_min_final", sn.back().sigmas.min()},
                       {"residual_at_reference", residual_at_reference(tr.result.final_system)}});
    }
    report["trials"] = per;
    return report;
}

void write_value_histogram(std::ostream& out, const std::vector<double>& values, std::size_t bins) {
    const double hi = *std::max_element(values.begin(), values.end());
    const double width = hi > 0.0 ? hi / static_cast<double>(bins) : 1.0;
    std::vector<std::uint64_t> counts(bins, 0);
    for (double v : values) {
        const auto b = static_cast<std::size_t>(v / width);
        counts[std::min(b, bins - 1)]++;
    }
    out << "bin_center,count\n";
    for (std::size_t b = 0; b < bins; ++b) {
        out << csv::format((static_cast<double>(b) + 0.5) * width) << ',' << counts[b] << '\n';
    }
}

Json exp_overdetermined(const ExperimentConfig& cfg, OutputDir& dir, std::vector<std::string>& files) {
    if (cfg.m <= cfg.n) throw ConfigError("overdetermined needs m > n");
    const std::uint64_t bins = cfg.extra_count("bins", 20);
    if (bins == 0) throw ConfigError("overdetermined: bins must be positive");

    const auto trials = run_trial_walks(cfg, dir, files);
    Json per = Json::array();
    std::size_t improved = 0;
    for (const auto& tr : trials) {
        const auto& sn = tr.result.snapshots;
        const std::string cond_name = seeded("condition", tr.seed);
        auto cond = dir.open(cond_name);
        cond << "k,condition_number,frob_sq\n";
        for (const auto& s : sn) {
            const double row[] = {static_cast<double>(s.k), s.sigmas.max() / s.sigmas.min(), s.frob_sq};
            csv::write_row(cond, row);
        }
        const std::string hist_name = seeded("histogram", tr.seed);
        auto hist = dir.open(hist_name);
        write_value_histogram(hist, sn.back().sigmas.values, bins);
        files.push_back(cond_name);
        files.push_back(hist_name);

        const double c0 = sn.front().sigmas.max() / sn.front().sigmas.min();
        const double c1 = sn.back().sigmas.max() / sn.back().sigmas.min();
        if (std::isfinite(c1) && c1 < c0) ++improved;
        per.push_back({{"seed", tr.seed},
                       {"condition_initial", c0},
                       {"condition_final", c1},
                       {"frob_sq_final", sn.back().frob_sq}});
    }
    Json report;
    report["trials"] = per;
    report["improved_fraction"] = static_cast<double>(improved) / static_cast<double>(trials.size());
    return report;
}

Json exp_n_plus_one(const ExperimentConfig& cfg, OutputDir& dir, std::vector<std::string>& files) {
    if (cfg.m != cfg.n + 1) throw ConfigError("n_plus_one needs m == n + 1");
    const auto trials = run_trial_walks(cfg, dir, files);
    Json per = Json::array();
    for (const auto& tr : trials) {
        const auto& sv = tr.result.snapshots.back().sigmas.values;
        double rest = 0.0;
        for (std::size_t l = 1; l < sv.size(); ++l) rest = std::max(rest, std::abs(sv[l] - 1.0));
        per.push_back({{"seed", tr.seed},
                       {"sigma_1_minus_sqrt2", sv.front() - std::numbers::sqrt2},
                       {"max_other_deviation_from_1", rest},
                       {"final_singular_values", sv}});
    }
    Json report;
    report["trials"] = per;
    return report;
}

std::string density_name(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "density_%g.csv", t);
    return buf;
}

Json exp_circle(const ExperimentConfig& cfg, OutputDir& dir, std::vector<std::string>& files) {
    if (cfg.n != 2) throw ConfigError("circle needs n == 2");
    if (cfg.m < 2) throw ConfigError("circle needs at least two particles");
    const double tol = cfg.extra_double("tol", 1e-9);
    const std::uint64_t bins = cfg.extra_count("bins", 72);

    struct Trial {
        std::uint64_t seed = 0;
        CircleEnsemble initial, final;
        CircleRunResult run;
    };
    std::vector<Trial> trials(cfg.trials);
    for_each_trial(cfg.trials, [&](std::uint64_t t) {
        auto& tr = trials[t];
        tr.seed = cfg.seed + t;
        Rng rng(derive_seed(tr.seed, 0));
        tr.initial = CircleEnsemble::uniform_random(rng, cfg.m);
        tr.final = tr.initial;
        tr.run = run_circle(tr.final, cfg.steps, derive_seed(tr.seed, 1), tol, cfg.snapshot_every);
        auto order = dir.open(seeded("order", tr.seed));
        order << "k,order_parameter_4\n";
        for (const auto& [k, r] : tr.run.order_trace) order << k << ',' << csv::format(r) << '\n';
        auto hist = dir.open(seeded("histogram", tr.seed));
        write_angle_histogram_csv(hist, tr.final, bins);
    });

    std::vector<double> start, end;
    Json per = Json::array();
    for (const auto& tr : trials) {
        files.push_back(seeded("order", tr.seed));
        files.push_back(seeded("histogram", tr.seed));
        start.push_back(tr.run.order_trace.front().second);
        end.push_back(tr.run.order_trace.back().second);
        per.push_back({{"seed", tr.seed},
                       {"order_initial", start.back()},
                       {"order_final", end.back()},
                       {"skipped_steps", tr.run.skipped}});
    }

    Json report;
    report["trials"] = per;
    report["median_order_initial"] = median(start);
    report["median_order_final"] = median(end);

    if (cfg.extra_count("meanfield", 0) != 0) {
        const std::uint64_t cells = cfg.extra_count("grid", 256);
        const double dt = cfg.extra_double("dt", 0.005);
        // One particle update per unit time and particle: t = k / n.
        const double t_end = cfg.extra_double(
            "t_end", std::min(10.0, static_cast<double>(cfg.steps) / static_cast<double>(cfg.m)));
        const std::uint64_t shots = std::max<std::uint64_t>(1, cfg.extra_count("density_snapshots", 5));
        DensityGrid grid = cfg.extra_or("meanfield_init", "ensemble") == "uniform"
                               ? DensityGrid::uniform(cells)
                               : DensityGrid::from_ensemble(trials.front().initial, cells);
        Json times = Json::array();
        for (std::uint64_t s = 0; s <= shots; ++s) {
            const double t = t_end * static_cast<double>(s) / static_cast<double>(shots);
            if (s > 0) grid = meanfield_integrate(std::move(grid), t, dt);
            const std::string name = density_name(t);
            auto out = dir.open(name);
            write_density_csv(out, grid);
            files.push_back(name);
            times.push_back(t);
        }
        report["meanfield_times"] = times;
        report["meanfield_final_mass"] = grid.mass();
        const auto [lo, hi] = std::minmax_element(grid.u.begin(), grid.u.end());
        report["meanfield_final_spread"] = *hi - *lo;
    }
    return report;
}

std::vector<std::uint64_t> parse_budgets(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        ExperimentConfig scratch;
        scratch.set("budget", item);
        out.push_back(scratch.extra_count("budget", 0));
    }
    if (out.empty()) throw ConfigError("solver_compare: empty budget list");
    return out;
}

Json exp_solver_compare(const ExperimentConfig& cfg, OutputDir& dir, std::vector<std::string>& files) {
    if (cfg.m < cfg.n) throw ConfigError("solver_compare needs m >= n");
    const auto budgets = parse_budgets(cfg.extra_or("budgets", "0," + std::to_string(cfg.steps)));
    SolveConfig sc;
    sc.max_iters = cfg.extra_count("max_iters", 200000);
    sc.target_residual = cfg.extra_double("target", 1e-6);
    sc.record_every = cfg.extra_count("record_every", 100);
    sc.validate();

    struct Trial {
        std::uint64_t seed = 0;
        std::vector<PreconditionComparison> runs;
    };
    std::vector<Trial> trials(cfg.trials);
    for_each_trial(cfg.trials, [&](std::uint64_t t) {
        auto& tr = trials[t];
        tr.seed = cfg.seed + t;
        const LinearSystem sys = seeded_system(tr.seed, cfg.m, cfg.n);
        SolveConfig local = sc;
        local.seed = derive_seed(tr.seed, 2);
        for (const auto b : budgets) tr.runs.push_back(precondition_then_solve(sys, b, local));

        auto raw = dir.open(seeded("solve_raw", tr.seed));
        write_trace_csv(raw, tr.runs.front().raw);
        auto pre = dir.open(seeded("solve_pre", tr.seed));
        write_trace_csv(pre, tr.runs.back().preconditioned);
        for (std::size_t k = 0; k < budgets.size(); ++k) {
            auto each = dir.open(seeded("solve_pre", tr.seed, ("_w" + std::to_string(budgets[k])).c_str()));
            write_trace_csv(each, tr.runs[k].preconditioned);
        }
    });

    Json per = Json::array();
    for (const auto& tr : trials) {
        files.push_back(seeded("solve_raw", tr.seed));
        files.push_back(seeded("solve_pre", tr.seed));
        Json sweep = Json::array();
        for (std::size_t k = 0; k < budgets.size(); ++k) {
            files.push_back(seeded("solve_pre", tr.seed, ("_w" + std::to_string(budgets[k])).c_str()));
            const auto& r = tr.runs[k];
            sweep.push_back({{"walk_steps", budgets[k]},
                             {"sigma_min_before", r.sigma_min_before},
                             {"sigma_min_after", r.sigma_min_after},
                             {"raw_iterations", r.raw.iterations},
                             {"raw_converged", r.raw.converged},
                             {"pre_iterations", r.preconditioned.iterations},
                             {"pre_converged", r.preconditioned.converged}});
        }
        per.push_back({{"seed", tr.seed}, {"sweep", sweep}});
    }
    Json report;
    report["target"] = sc.target_residual;
    report["max_iters"] = sc.max_iters;
    report["trials"] = per;
    return report;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_shapes(const std::string& text) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto x = item.find('x');
        if (x == std::string::npos) throw ConfigError("theorem_audit: shape '" + item + "' is not MxN");
        ExperimentConfig scratch;
        scratch.set("m", item.substr(0, x));
        scratch.set("n", item.substr(x + 1));
        if (scratch.m < 2 || scratch.n < 1 || scratch.m > 10) {
            throw ConfigError("theorem_audit: shapes need 2 <= m <= 10");
        }
        out.emplace_back(scratch.m, scratch.n);
    }
    if (out.empty()) throw ConfigError("theorem_audit: empty shape list");
    return out;
}

Json exp_theorem_audit(const ExperimentConfig& cfg, OutputDir&, std::vector<std::string>&) {
    const auto shapes = parse_shapes(cfg.extra_or("shapes", "4x4,6x6,5x4,8x3"));
    const std::uint64_t instances = cfg.extra_count("instances", cfg.trials);

    double min_gap = INFINITY;
    double min_refined_gap = INFINITY;
    Json per = Json::array();
    for (std::uint64_t t = 0; t < instances; ++t) {
        const auto [m, n] = shapes[t % shapes.size()];
        Rng rng(derive_seed(cfg.seed, t));
        const Matrix a = random_row_normalized(rng, m, n);
        Vector x(n);
        for (double& v : x) v = rng.normal();
        const GainReport r = expected_gain_exact(a, x);
        min_gap = std::min(min_gap, r.gap());
        min_refined_gap = std::min(min_refined_gap, r.expected_norm_sq - r.refined_rhs(m));
        per.push_back({{"m", m},
                       {"n", n},
                       {"expected_norm_sq", r.expected_norm_sq},
                       {"base_norm_sq", r.base_norm_sq},
                       {"bound_rhs", r.bound_rhs},
                       {"sigma_sum", r.sigma_sum},
                       {"sigma2_sum", r.sigma2_sum}});
    }
    Json report;
    report["instances"] = instances;
    report["min_gap"] = min_gap;
    report["min_refined_gap"] = min_refined_gap;
    report["pass"] = min_gap >= -1e-10 && min_refined_gap >= -1e-10;
    report["reports"] = per;
    return report;
}

using Runner = Json (*)(const ExperimentConfig&, OutputDir&, std::vector<std::string>&);

Runner runner_for(const std::string& name) {
    static const std::map<std::string, Runner> table{
        {"square_walk", exp_square_walk},       {"overdetermined", exp_overdetermined},
        {"n_plus_one", exp_n_plus_one},         {"circle", exp_circle},
        {"solver_compare", exp_solver_compare}, {"theorem_audit", exp_theorem_audit},
    };
    return table.at(name);
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    OutputDir dir(cfg.output_dir);
    ExperimentOutput out;
    Json report;
    report["experiment"] = cfg.experiment;
    report["m"] = cfg.m;
    report["n"] = cfg.n;
    report["seed"] = cfg.seed;
    report["steps"] = cfg.steps;
    report["trials"] = cfg.trials;
    report["result"] = runner_for(cfg.experiment)(cfg, dir, out.files);

    out.report_json = report.dump(2) + "\n";
    auto file = dir.open("report.json");
    file << out.report_json;
    out.files.push_back("report.json");
    return out;
}

}  // namespace kkw
