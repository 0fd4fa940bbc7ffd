#include "kkw/theory.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "kkw/walk.hpp"

namespace kkw {

namespace {

double pair_rate(std::size_t n) {
    if (n < 2) throw TheoryError("predictions need n >= 2");
    const auto nd = static_cast<double>(n);
    return 2.0 / (nd * (nd - 1.0));
}

void check_logistic_args(std::size_t n, double sigma0) {
    if (n < 2) throw TheoryError("logistic prediction needs n >= 2");
    if (!(sigma0 > 0.0 && sigma0 <= 1.0)) {
        throw TheoryError("logistic prediction needs 0 < sigma0 <= 1");
    }
}

double logistic_closed_form(double rate, double y0, double t) {
    return 1.0 / (1.0 + (1.0 / y0 - 1.0) * std::exp(-rate * t));
}

}  // namespace

double GainReport::refined_rhs(std::size_t m) const noexcept {
    const auto md = static_cast<double>(m);
    return base_norm_sq + (sigma_sum + sigma2_sum) / (md * (md - 1.0));
}

std::string GainReport::to_json() const {
    nlohmann::ordered_json j;
    j["expected_norm_sq"] = expected_norm_sq;
    j["base_norm_sq"] = base_norm_sq;
    j["bound_rhs"] = bound_rhs;
    j["sigma_sum"] = sigma_sum;
    j["sigma2_sum"] = sigma2_sum;
    j["sigma_exact"] = sigma_exact;
    return j.dump();
}

GainReport GainReport::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GainReport r;
    r.expected_norm_sq = j.at("expected_norm_sq").get<double>();
    r.base_norm_sq = j.at("base_norm_sq").get<double>();
    r.bound_rhs = j.at("bound_rhs").get<double>();
    r.sigma_sum = j.at("sigma_sum").get<double>();
    r.sigma2_sum = j.at("sigma2_sum").get<double>();
    r.sigma_exact = j.value("sigma_exact", 0.0);
    return r;
}

GainReport expected_gain_exact(const Matrix& a, std::span<const double> x) {
    const std::size_t m = a.rows();
    if (m < 2) throw TheoryError("expected_gain_exact: need at least two rows");
    if (x.size() != a.cols()) throw TheoryError("expected_gain_exact: x has wrong length");
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(norm2(a.row(i)) - 1.0) > 1e-12) {
            throw TheoryError("expected_gain_exact: rows must be unit length");
        }
    }

    constexpr double kDegenerate = 1e-12;
    const Vector y = matvec(a, x);
    const Vector aty = matvec_transposed(a, y);

    GainReport r;
    r.base_norm_sq = dot(y, y);
    const double ata_x_sq = dot(aty, aty);
    const auto pairs = static_cast<double>(m * (m - 1));
    r.bound_rhs = r.base_norm_sq + (2.0 / pairs) * (r.base_norm_sq - ata_x_sq);

    WalkConfig exact;
    exact.degenerate_tol = kDegenerate;
    exact.renormalize = false;
    const LinearSystem base{a, Vector(m, 0.0), std::nullopt};

    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double c = gram_entry(a, i, j);
            if (1.0 - c * c < kDegenerate) {
                throw TheoryError("expected_gain_exact: rows " + std::to_string(i) + " and " +
                                  std::to_string(j) + " are parallel");
            }

            LinearSystem copy = base;
            walk_step(copy, i, j, exact);
            const Vector moved = matvec(copy.a, x);
            total += dot(moved, moved);

            // Pair sums written with the modified row first, as (i <- j).
            const double lin = y[i] - c * y[j];
            r.sigma_exact += -y[i] * y[i] + lin * lin / (1.0 - c * c);
            r.sigma_sum += -y[i] * y[i] + lin * lin;
            r.sigma2_sum += lin * lin * c * c;
        }
    }
    r.expected_norm_sq = total / pairs;
    return r;
}

double predict_linear(std::size_t n, double sigma0, double k) {
    const double rate = pair_rate(n);
    if (!(sigma0 > 0.0)) throw TheoryError("predict_linear: sigma0 must be positive");
    return std::exp(0.5 * k * std::log1p(rate)) * sigma0;
}

double predict_logistic(std::size_t n, double sigma0, double k) {
    check_logistic_args(n, sigma0);
    const double y = logistic_closed_form(pair_rate(n), sigma0 * sigma0, k);
    return std::sqrt(y);
}

double logistic_ode_check(std::size_t n, double sigma0, double t_max) {
    check_logistic_args(n, sigma0);
    if (!(t_max >= 0.0)) throw TheoryError("logistic_ode_check: t_max must be nonnegative");
    const double rate = pair_rate(n);
    const double y0 = sigma0 * sigma0;
    auto f = [rate](double y) { return rate * (y - y * y); };

    // rate*h <= 2e-3 keeps the RK4 local error far below 1e-12.
    const auto steps = std::max<std::size_t>(
        1000, static_cast<std::size_t>(std::ceil(rate * t_max / 2e-3)));
    const double h = t_max / static_cast<double>(steps);

    double y = y0;
    double worst = 0.0;
    for (std::size_t s = 1; s <= steps; ++s) {
        const double k1 = f(y);
        const double k2 = f(y + 0.5 * h * k1);
        const double k3 = f(y + 0.5 * h * k2);
        const double k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double t = h * static_cast<double>(s);
        worst = std::max(worst, std::abs(y - logistic_closed_form(rate, y0, t)));
    }
    return worst;
}

}  // namespace kkw
