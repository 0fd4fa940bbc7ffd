#include "kkw/kkw.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "kkw/experiments.hpp"
#include "kkw/meanfield.hpp"
#include "kkw/solver.hpp"
#include "kkw/theory.hpp"
#include "kkw/walk.hpp"

struct kkw_system {
    kkw::LinearSystem sys;
};

struct kkw_walk_result {
    kkw::WalkResult result;
};

struct kkw_solve_trace {
    kkw::SolveTrace trace;
};

struct kkw_experiment {
    kkw::ExperimentConfig config;
    kkw::ExperimentOutput output;
    bool has_run = false;
};

namespace {

thread_local std::string g_last_error;

kkw_status fail(kkw_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

// Maps the C++ exception hierarchy onto status codes.
template <typename F>
kkw_status guarded(F&& body) {
    try {
        body();
        return KKW_OK;
    } catch (const kkw::ConfigError& e) {
        return fail(KKW_ERR_CONFIG, e.what());
    } catch (const kkw::TheoryError& e) {
        const std::string what = e.what();
        return fail(what.find("parallel") != std::string::npos ? KKW_ERR_DEGENERATE
                                                               : KKW_ERR_INVALID_ARGUMENT,
                    what);
    } catch (const kkw::MeanFieldError& e) {
        return fail(KKW_ERR_NUMERICAL, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(KKW_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(KKW_ERR_IO, e.what());
    } catch (const std::ios_base::failure& e) {
        return fail(KKW_ERR_IO, e.what());
    } catch (const std::out_of_range& e) {
        return fail(KKW_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(KKW_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(KKW_ERR_INTERNAL, "unknown error");
    }
}

#define KKW_REQUIRE(ptr) \
    if ((ptr) == nullptr) return fail(KKW_ERR_NULL_ARGUMENT, #ptr " is NULL")

kkw_status copy_out(const double* src, std::size_t count, double* out, std::size_t len) {
    if (len < count) {
        return fail(KKW_ERR_BUFFER_TOO_SMALL,
                    "buffer holds " + std::to_string(len) + ", need " + std::to_string(count));
    }
    std::memcpy(out, src, count * sizeof(double));
    return KKW_OK;
}

kkw_status copy_text(const std::string& text, char* buf, std::size_t len, std::size_t* needed) {
    if (needed) *needed = text.size() + 1;
    if (buf == nullptr || len < text.size() + 1) {
        return fail(KKW_ERR_BUFFER_TOO_SMALL, "text buffer too small");
    }
    std::memcpy(buf, text.c_str(), text.size() + 1);
    return KKW_OK;
}

kkw::WalkConfig to_cpp(const kkw_walk_config& c) {
    kkw::WalkConfig w;
    w.seed = c.seed;
    w.steps = c.steps;
    w.degenerate_tol = c.degenerate_tol;
    w.snapshot_every = c.snapshot_every;
    w.renormalize = c.renormalize != 0;
    return w;
}

kkw_step_record to_c(const kkw::StepRecord& r) {
    return {r.k, r.i, r.j, r.c, r.skipped ? 1 : 0};
}

kkw_status write_file(const char* path, const auto& writer) {
    KKW_REQUIRE(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) return fail(KKW_ERR_IO, std::string("cannot open ") + path);
    return guarded([&] {
        writer(out);
        if (!out) throw std::ios_base::failure(std::string("write failed: ") + path);
    });
}

}  // namespace

extern "C" {

const char* kkw_last_error(void) { return g_last_error.c_str(); }

const char* kkw_status_name(kkw_status status) {
    switch (status) {
        case KKW_OK: return "ok";
        case KKW_ERR_NULL_ARGUMENT: return "null argument";
        case KKW_ERR_INVALID_ARGUMENT: return "invalid argument";
        case KKW_ERR_DEGENERATE: return "degenerate rows";
        case KKW_ERR_NUMERICAL: return "numerical failure";
        case KKW_ERR_IO: return "i/o error";
        case KKW_ERR_CONFIG: return "config error";
        case KKW_ERR_BUFFER_TOO_SMALL: return "buffer too small";
        case KKW_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* kkw_version(void) { return "0.1.0"; }

kkw_status kkw_system_create(size_t m, size_t n, const double* a, const double* b,
                             const double* x_ref, int normalize, kkw_system** out) {
    KKW_REQUIRE(a);
    KKW_REQUIRE(b);
    KKW_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        kkw::Matrix mat(m, n, std::vector<double>(a, a + m * n));
        kkw::Vector rhs(b, b + m);
        if (normalize) {
            for (std::size_t i = 0; i < m; ++i) {
                const double len = kkw::norm2(mat.row(i));
                if (len == 0.0) throw kkw::LinalgError("row " + std::to_string(i) + " is zero");
                for (double& v : mat.row(i)) v /= len;
                rhs[i] /= len;
            }
        }
        kkw::LinearSystem sys{std::move(mat), std::move(rhs), std::nullopt};
        if (x_ref) sys.x_ref = kkw::Vector(x_ref, x_ref + n);
        sys.validate();
        *out = new kkw_system{std::move(sys)};
    });
}

kkw_status kkw_system_random(size_t m, size_t n, uint64_t seed, kkw_system** out) {
    KKW_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        kkw::Rng rng(seed);
        kkw::Matrix a = kkw::random_row_normalized(rng, m, n);
        kkw::Vector x(n);
        for (double& v : x) v = rng.normal();
        *out = new kkw_system{kkw::LinearSystem::consistent(a, std::move(x))};
    });
}

kkw_status kkw_system_clone(const kkw_system* sys, kkw_system** out) {
    KKW_REQUIRE(sys);
    KKW_REQUIRE(out);
    return guarded([&] { *out = new kkw_system{sys->sys}; });
}

void kkw_system_destroy(kkw_system* sys) { delete sys; }

size_t kkw_system_rows(const kkw_system* sys) { return sys ? sys->sys.rows() : 0; }
size_t kkw_system_cols(const kkw_system* sys) { return sys ? sys->sys.cols() : 0; }

kkw_status kkw_system_matrix(const kkw_system* sys, double* out, size_t len) {
    KKW_REQUIRE(sys);
    KKW_REQUIRE(out);
    const auto d = sys->sys.a.data();
    return copy_out(d.data(), d.size(), out, len);
}

kkw_status kkw_system_rhs(const kkw_system* sys, double* out, size_t len) {
    KKW_REQUIRE(sys);
    KKW_REQUIRE(out);
    return copy_out(sys->sys.b.data(), sys->sys.b.size(), out, len);
}

kkw_status kkw_system_singular_values(const kkw_system* sys, double* out, size_t len) {
    KKW_REQUIRE(sys);
    KKW_REQUIRE(out);
    kkw::SingularValues sv;
    const kkw_status st = guarded([&] { sv = kkw::singular_values(sys->sys.a); });
    if (st != KKW_OK) return st;
    return copy_out(sv.values.data(), sv.size(), out, len);
}

kkw_status kkw_system_frobenius_sq(const kkw_system* sys, double* out) {
    KKW_REQUIRE(sys);
    KKW_REQUIRE(out);
    return guarded([&] { *out = kkw::frobenius_sq(sys->sys.a); });
}

kkw_status kkw_system_residual_at_reference(const kkw_system* sys, double* out) {
    KKW_REQUIRE(sys);
    KKW_REQUIRE(out);
    return guarded([&] { *out = kkw::residual_at_reference(sys->sys); });
}

kkw_walk_config kkw_walk_config_default(void) {
    return {0, 0, 1e-12, 0, 1};
}

kkw_status kkw_walk_step(kkw_system* sys, size_t i, size_t j, const kkw_walk_config* cfg,
                         kkw_step_record* out) {
    KKW_REQUIRE(sys);
    KKW_REQUIRE(cfg);
    return guarded([&] {
        const kkw::WalkConfig wc = to_cpp(*cfg);
        wc.validate();
        const kkw::StepRecord rec = kkw::walk_step(sys->sys, i, j, wc);
        if (out) *out = to_c(rec);
    });
}

kkw_status kkw_run_walk(const kkw_system* sys, const kkw_walk_config* cfg, kkw_walk_result** out) {
    KKW_REQUIRE(sys);
    KKW_REQUIRE(cfg);
    KKW_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new kkw_walk_result{kkw::run_walk(sys->sys, to_cpp(*cfg))}; });
}

void kkw_walk_result_destroy(kkw_walk_result* res) { delete res; }

size_t kkw_walk_result_snapshot_count(const kkw_walk_result* res) {
    return res ? res->result.snapshots.size() : 0;
}

size_t kkw_walk_result_record_count(const kkw_walk_result* res) {
    return res ? res->result.records.size() : 0;
}

size_t kkw_walk_result_skipped_count(const kkw_walk_result* res) {
    return res ? res->result.skipped_count() : 0;
}

kkw_status kkw_walk_result_snapshot(const kkw_walk_result* res, size_t index, uint64_t* k,
                                    double* sigmas, size_t len, double* frob_sq) {
    KKW_REQUIRE(res);
    if (index >= res->result.snapshots.size()) {
        return fail(KKW_ERR_INVALID_ARGUMENT, "snapshot index out of range");
    }
    const auto& s = res->result.snapshots[index];
    if (k) *k = s.k;
    if (frob_sq) *frob_sq = s.frob_sq;
    if (sigmas) return copy_out(s.sigmas.values.data(), s.sigmas.size(), sigmas, len);
    return KKW_OK;
}

kkw_status kkw_walk_result_record(const kkw_walk_result* res, size_t index, kkw_step_record* out) {
    KKW_REQUIRE(res);
    KKW_REQUIRE(out);
    if (index >= res->result.records.size()) {
        return fail(KKW_ERR_INVALID_ARGUMENT, "record index out of range");
    }
    *out = to_c(res->result.records[index]);
    return KKW_OK;
}

kkw_status kkw_walk_result_final_system(const kkw_walk_result* res, kkw_system** out) {
    KKW_REQUIRE(res);
    KKW_REQUIRE(out);
    return guarded([&] { *out = new kkw_system{res->result.final_system}; });
}

kkw_status kkw_walk_result_write_snapshots_csv(const kkw_walk_result* res, const char* path) {
    KKW_REQUIRE(res);
    return write_file(path, [&](std::ostream& o) { kkw::write_snapshots_csv(o, res->result.snapshots); });
}

kkw_status kkw_walk_result_write_steps_csv(const kkw_walk_result* res, const char* path) {
    KKW_REQUIRE(res);
    return write_file(path, [&](std::ostream& o) { kkw::write_steps_csv(o, res->result.records); });
}

kkw_status kkw_expected_gain_exact(size_t m, size_t n, const double* a, const double* x,
                                   kkw_gain_report* out) {
    KKW_REQUIRE(a);
    KKW_REQUIRE(x);
    KKW_REQUIRE(out);
    return guarded([&] {
        const kkw::Matrix mat(m, n, std::vector<double>(a, a + m * n));
        const auto r = kkw::expected_gain_exact(mat, std::span<const double>(x, n));
        *out = {r.expected_norm_sq, r.base_norm_sq, r.bound_rhs,
                r.sigma_sum,        r.sigma2_sum,   r.sigma_exact};
    });
}

kkw_status kkw_gain_report_json(const kkw_gain_report* report, char* buf, size_t len,
                                size_t* needed) {
    KKW_REQUIRE(report);
    kkw::GainReport r;
    r.expected_norm_sq = report->expected_norm_sq;
    r.base_norm_sq = report->base_norm_sq;
    r.bound_rhs = report->bound_rhs;
    r.sigma_sum = report->sigma_sum;
    r.sigma2_sum = report->sigma2_sum;
    r.sigma_exact = report->sigma_exact;
    return copy_text(r.to_json(), buf, len, needed);
}

kkw_status kkw_predict_linear(size_t n, double sigma0, double k, double* out) {
    KKW_REQUIRE(out);
    return guarded([&] { *out = kkw::predict_linear(n, sigma0, k); });
}

kkw_status kkw_predict_logistic(size_t n, double sigma0, double k, double* out) {
    KKW_REQUIRE(out);
    return guarded([&] { *out = kkw::predict_logistic(n, sigma0, k); });
}

kkw_status kkw_logistic_ode_check(size_t n, double sigma0, double t_max, double* out) {
    KKW_REQUIRE(out);
    return guarded([&] { *out = kkw::logistic_ode_check(n, sigma0, t_max); });
}

kkw_solve_config kkw_solve_config_default(void) {
    const kkw::SolveConfig d;
    return {d.seed, d.max_iters, d.target_residual, d.record_every};
}

kkw_status kkw_kaczmarz_solve(const kkw_system* sys, const double* x0, const kkw_solve_config* cfg,
                              double* x_out, kkw_solve_trace** trace) {
    KKW_REQUIRE(sys);
    KKW_REQUIRE(x0);
    KKW_REQUIRE(cfg);
    KKW_REQUIRE(trace);
    *trace = nullptr;
    return guarded([&] {
        const kkw::SolveConfig sc{cfg->seed, cfg->max_iters, cfg->target_residual, cfg->record_every};
        auto res = kkw::kaczmarz_solve(sys->sys, std::span<const double>(x0, sys->sys.cols()), sc);
        if (x_out) std::memcpy(x_out, res.x.data(), res.x.size() * sizeof(double));
        *trace = new kkw_solve_trace{std::move(res.trace)};
    });
}

void kkw_solve_trace_destroy(kkw_solve_trace* trace) { delete trace; }

size_t kkw_solve_trace_length(const kkw_solve_trace* trace) {
    return trace ? trace->trace.points.size() : 0;
}

int kkw_solve_trace_converged(const kkw_solve_trace* trace) {
    return trace && trace->trace.converged ? 1 : 0;
}

kkw_status kkw_solve_trace_point(const kkw_solve_trace* trace, size_t index, uint64_t* iter,
                                 double* error_sq) {
    KKW_REQUIRE(trace);
    if (index >= trace->trace.points.size()) {
        return fail(KKW_ERR_INVALID_ARGUMENT, "trace index out of range");
    }
    if (iter) *iter = trace->trace.points[index].iter;
    if (error_sq) *error_sq = trace->trace.points[index].error_sq;
    return KKW_OK;
}

kkw_status kkw_solve_trace_write_csv(const kkw_solve_trace* trace, const char* path) {
    KKW_REQUIRE(trace);
    return write_file(path, [&](std::ostream& o) { kkw::write_trace_csv(o, trace->trace); });
}

kkw_status kkw_circle_step(double* angles, size_t n, size_t i, size_t j, double tol, int* moved) {
    KKW_REQUIRE(angles);
    return guarded([&] {
        kkw::CircleEnsemble ens{std::vector<double>(angles, angles + n)};
        const bool did = kkw::circle_step_in_place(ens, i, j, tol);
        angles[j] = ens.angles[j];
        if (moved) *moved = did ? 1 : 0;
    });
}

kkw_status kkw_order_parameter_4(const double* angles, size_t n, double* out) {
    KKW_REQUIRE(angles);
    KKW_REQUIRE(out);
    return guarded([&] {
        *out = kkw::order_parameter_4(kkw::CircleEnsemble{std::vector<double>(angles, angles + n)});
    });
}

kkw_status kkw_meanfield_integrate(double* density, size_t cells, double t_end, double dt) {
    KKW_REQUIRE(density);
    return guarded([&] {
        kkw::DensityGrid g{std::vector<double>(density, density + cells), 0.0};
        g = kkw::meanfield_integrate(std::move(g), t_end, dt);
        std::memcpy(density, g.u.data(), cells * sizeof(double));
    });
}

kkw_status kkw_meanfield_rhs(const double* density, size_t cells, double* rate) {
    KKW_REQUIRE(density);
    KKW_REQUIRE(rate);
    return guarded([&] {
        const auto r = kkw::meanfield_rhs(kkw::DensityGrid{std::vector<double>(density, density + cells), 0.0});
        std::memcpy(rate, r.data(), cells * sizeof(double));
    });
}

kkw_status kkw_fourier_decay_rate(size_t cells, int mode, double eps, double t_end, double dt,
                                  double* out) {
    KKW_REQUIRE(out);
    return guarded([&] {
        *out = kkw::fourier_decay_rate(kkw::DensityGrid::perturbed(cells, mode, eps), mode, t_end, dt);
    });
}

size_t kkw_experiment_count(void) { return kkw::registered_experiments().size(); }

const char* kkw_experiment_name(size_t index) {
    static const std::vector<std::string> names = kkw::registered_experiments();
    return index < names.size() ? names[index].c_str() : nullptr;
}

kkw_status kkw_experiment_create(const char* name, kkw_experiment** out) {
    KKW_REQUIRE(name);
    KKW_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new kkw_experiment{kkw::ExperimentConfig::defaults_for(name), {}, false}; });
}

void kkw_experiment_destroy(kkw_experiment* exp) { delete exp; }

kkw_status kkw_experiment_load_config(kkw_experiment* exp, const char* path) {
    KKW_REQUIRE(exp);
    KKW_REQUIRE(path);
    return guarded([&] {
        kkw::ExperimentConfig next = exp->config;
        for (const auto& [k, v] : kkw::load_config_pairs(path)) {
            if (k == "experiment" && v != exp->config.experiment) {
                throw kkw::ConfigError("config file names experiment '" + v + "' but '" +
                                       exp->config.experiment + "' was requested");
            }
            next.set(k, v);
        }
        exp->config = std::move(next);
    });
}

kkw_status kkw_experiment_set(kkw_experiment* exp, const char* key, const char* value) {
    KKW_REQUIRE(exp);
    KKW_REQUIRE(key);
    KKW_REQUIRE(value);
    if (std::string_view(key) == "experiment" && exp->config.experiment != value) {
        return fail(KKW_ERR_CONFIG, "the experiment name of a handle cannot change");
    }
    return guarded([&] { exp->config.set(key, value); });
}

kkw_status kkw_experiment_emit(const kkw_experiment* exp, char* buf, size_t len, size_t* needed) {
    KKW_REQUIRE(exp);
    return copy_text(exp->config.emit(), buf, len, needed);
}

kkw_status kkw_experiment_run(kkw_experiment* exp) {
    KKW_REQUIRE(exp);
    return guarded([&] {
        exp->output = kkw::run_experiment(exp->config);
        exp->has_run = true;
    });
}

kkw_status kkw_experiment_report(const kkw_experiment* exp, char* buf, size_t len, size_t* needed) {
    KKW_REQUIRE(exp);
    if (!exp->has_run) return fail(KKW_ERR_INVALID_ARGUMENT, "experiment has not run");
    return copy_text(exp->output.report_json, buf, len, needed);
}

size_t kkw_experiment_file_count(const kkw_experiment* exp) {
    return exp ? exp->output.files.size() : 0;
}

const char* kkw_experiment_file(const kkw_experiment* exp, size_t index) {
    if (!exp || index >= exp->output.files.size()) return nullptr;
    return exp->output.files[index].c_str();
}

}  // extern "C"
