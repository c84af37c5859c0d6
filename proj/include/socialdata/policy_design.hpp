#pragma once

// Information design: optimal noise injection, the profitability threshold,
// segmentation of the market into groups and the recommender aggregation rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "socialdata/core_model.hpp"
#include "socialdata/gaussian_engine.hpp"
#include "socialdata/intermediation.hpp"

namespace socialdata {

/// Revenue of anonymized intermediation when the reports carry common error
/// variance `sigma_eps2` and idiosyncratic error variance `sigma_epsi2`.
inline double noised_revenue(double sigma_theta2, double sigma_thetai2, double sigma_eps2,
                             double sigma_epsi2, std::size_t n) {
    if (n == 0) throw ValidationError("n", "must be at least 1");
    detail::require_nonnegative(sigma_theta2, "sigma_theta2");
    detail::require_nonnegative(sigma_thetai2, "sigma_thetai2");
    detail::require_nonnegative(sigma_eps2, "sigma_eps2");
    detail::require_nonnegative(sigma_epsi2, "sigma_epsi2");
    if (sigma_theta2 + sigma_thetai2 + sigma_eps2 + sigma_epsi2 == 0.0)
        throw ValidationError("sigma_theta2", "all variances are zero");
    const double nn = static_cast<double>(n);
    const double d1 = (nn - 1.0) * (sigma_eps2 + sigma_theta2) + sigma_epsi2 + sigma_thetai2;
    const double t1 = n > 1 && d1 > 0.0
                          ? 3.0 * (nn - 1.0) * nn * sigma_theta2 * sigma_theta2 / (8.0 * d1)
                          : 0.0;
    const double num = nn * sigma_theta2 + sigma_thetai2;
    const double d2 = nn * (sigma_eps2 + sigma_theta2) + sigma_epsi2 + sigma_thetai2;
    return t1 - num * num / (8.0 * d2);
}

enum class NoiseBoundary { Interior, AtZero, AtUpperLimit };

constexpr const char* to_string(NoiseBoundary b) noexcept {
    switch (b) {
        case NoiseBoundary::Interior: return "interior";
        case NoiseBoundary::AtZero: return "at_zero";
        case NoiseBoundary::AtUpperLimit: return "at_upper_limit";
    }
    return "?";
}

struct NoiseOptimum {
    double common_noise_var = 0.0;
    double idio_noise_var = 0.0;
    double revenue = 0.0;
    double revenue_at_zero = 0.0;
    NoiseBoundary boundary = NoiseBoundary::AtZero;
    /// Revenue change from adding idiosyncratic noise 1e-4 at the optimum.
    double idio_perturbation_delta = 0.0;
};

struct NoiseSearch {
    double upper = 1e6;
    double lower = 1e-6;
    int points_per_decade = 32;
    double tolerance = 1e-8;
    double idio_step = 1e-4;
};

/// Maximizes anonymized revenue over the added common noise σ_ξ² ∈ [0, upper]
/// by a logarithmic scan followed by golden-section refinement.
inline NoiseOptimum optimize_noise(const DataEnvironment& env, const NoiseSearch& opt = {}) {
    validate(env);
    const double st = env.var_common(), sti = env.var_idio();
    const double se = env.var_noise_common(), sei = env.var_noise_idio();
    const std::size_t n = env.n_consumers;
    auto rev = [&](double x) { return noised_revenue(st, sti, se + x, sei, n); };

    std::vector<double> grid{0.0};
    const int decades = static_cast<int>(std::lround(std::log10(opt.upper / opt.lower)));
    const int steps = decades * opt.points_per_decade;
    for (int k = 0; k <= steps; ++k)
        grid.push_back(opt.lower * std::pow(10.0, static_cast<double>(k) / opt.points_per_decade));
    grid.back() = opt.upper;

    std::size_t best = 0;
    double best_r = rev(0.0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double r = rev(grid[k]);
        if (r > best_r) {
            best_r = r;
            best = k;
        }
    }

    double lo = grid[best == 0 ? 0 : best - 1];
    double hi = grid[std::min(best + 1, grid.size() - 1)];
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
    double fa = rev(a), fb = rev(b);
    while (hi - lo > opt.tolerance) {
        if (fa < fb) {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = rev(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = rev(a);
        }
    }
    double x = 0.5 * (lo + hi);
    double rx = rev(x);
    if (best_r > rx) {
        x = grid[best];
        rx = best_r;
    }

    NoiseOptimum o;
    o.revenue_at_zero = rev(0.0);
    if (rx <= o.revenue_at_zero || x <= opt.tolerance) {
        x = 0.0;
        rx = o.revenue_at_zero;
    }
    o.common_noise_var = x;
    o.revenue = rx;
    if (x == 0.0)
        o.boundary = NoiseBoundary::AtZero;
    else if (x >= opt.upper - opt.tolerance || best + 1 == grid.size())
        o.boundary = NoiseBoundary::AtUpperLimit;
    else
        o.boundary = NoiseBoundary::Interior;

    o.idio_perturbation_delta = noised_revenue(st, sti, se + x, sei + opt.idio_step, n) - rx;
    o.idio_noise_var = 0.0;
    if (o.idio_perturbation_delta > 1e-15)
        throw NumericalError("idiosyncratic noise raises revenue at the reported optimum");
    return o;
}

/// Smallest α for which optimally noised anonymized intermediation earns a
/// strictly positive profit with N consumers.
inline double profitability_threshold(std::size_t n) {
    if (n == 0) throw ValidationError("n", "must be at least 1");
    const double nn = static_cast<double>(n);
    const double r3 = std::sqrt(3.0);
    const double t = (nn * (r3 + 1.0) - 1.0) / (2.0 * nn * (nn + 1.0) - 1.0);
    const double alt = 1.0 / (nn * (r3 - 1.0) + 1.0);
    if (std::abs(t - alt) > 1e-12)
        throw NumericalError("threshold forms disagree at N = " + std::to_string(n));
    return t;
}

enum class Segmentation { Pooled, Grouped };

constexpr const char* to_string(Segmentation s) noexcept {
    return s == Segmentation::Pooled ? "pooled" : "grouped";
}

struct SegmentationReport {
    double revenue_pooled = 0.0;
    double revenue_grouped = 0.0;
    Segmentation recommended = Segmentation::Pooled;
    std::optional<std::size_t> crossover_n;
};

namespace detail {

// Sum over group j of n_j signals: variance n²vθ + n(vθi + σ²).
inline double group_sum_var(const GroupedEnvironment& g, std::size_t j, std::size_t n) {
    const double nn = static_cast<double>(n);
    const double s2 = g.noise_scale[j] * g.noise_scale[j];
    return nn * nn * g.common_var[j] + nn * (g.idio_var[j] + s2);
}

inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline double grouped_revenue(const GroupedEnvironment& g) {
    double r = 0.0;
    for (std::size_t j = 0; j < g.groups(); ++j) {
        const std::size_t n = g.group_sizes[j];
        const double nn = static_cast<double>(n);
        const double c_full = nn * g.common_var[j] + g.idio_var[j];
        const double g_full = ratio_or_zero(c_full * c_full, group_sum_var(g, j, n));
        const double c_loo = (nn - 1.0) * g.common_var[j];
        const double g_loo = n > 1 ? ratio_or_zero(c_loo * c_loo, group_sum_var(g, j, n - 1)) : 0.0;
        r += nn * (3.0 * g_loo - g_full) / 8.0;
    }
    return r;
}

// One sum across all groups and one price. The on-path gain is that of the
// average willingness to pay; a deviator is priced from the remaining sum.
inline double pooled_revenue(const GroupedEnvironment& g) {
    const double total_n = static_cast<double>(g.total_consumers());
    double var_t = 0.0, cov_avg = 0.0;
    for (std::size_t j = 0; j < g.groups(); ++j) {
        const double nn = static_cast<double>(g.group_sizes[j]);
        var_t += group_sum_var(g, j, g.group_sizes[j]);
        cov_avg += nn * nn * g.common_var[j] + nn * g.idio_var[j];
    }
    cov_avg /= total_n;
    const double g_uniform = ratio_or_zero(cov_avg * cov_avg, var_t);

    double r = 0.0;
    for (std::size_t j = 0; j < g.groups(); ++j) {
        const std::size_t n = g.group_sizes[j];
        const double nn = static_cast<double>(n);
        const double var_rest =
            var_t - group_sum_var(g, j, n) + (n > 1 ? group_sum_var(g, j, n - 1) : 0.0);
        const double c_loo = (nn - 1.0) * g.common_var[j];
        const double g_loo = ratio_or_zero(c_loo * c_loo, var_rest);
        r += nn * (3.0 * g_loo - g_uniform) / 8.0;
    }
    return r;
}

inline GroupedEnvironment resized(const GroupedEnvironment& g, std::size_t n) {
    GroupedEnvironment out = g;
    std::fill(out.group_sizes.begin(), out.group_sizes.end(), n);
    return out;
}

}  // namespace detail

/// Pooled anonymization against anonymization within each group. With
/// `sweep_to` set, every group size is varied over 1..sweep_to and
/// `crossover_n` is the smallest size from which grouping wins throughout.
inline SegmentationReport segmentation_compare(const GroupedEnvironment& genv,
                                               std::optional<std::size_t> sweep_to = {}) {
    validate(genv);
    SegmentationReport rep;
    rep.revenue_pooled = detail::pooled_revenue(genv);
    rep.revenue_grouped = detail::grouped_revenue(genv);
    rep.recommended =
        rep.revenue_grouped > rep.revenue_pooled ? Segmentation::Grouped : Segmentation::Pooled;
    if (sweep_to) {
        if (*sweep_to == 0) throw ValidationError("n_list", "sweep bound must be positive");
        std::optional<std::size_t> start;
        for (std::size_t n = 1; n <= *sweep_to; ++n) {
            const auto g = detail::resized(genv, n);
            const bool grouped_wins = detail::grouped_revenue(g) > detail::pooled_revenue(g);
            if (!grouped_wins)
                start.reset();
            else if (!start)
                start = n;
        }
        rep.crossover_n = start;
    }
    return rep;
}

struct RecommenderOutcome {
    double delta_u = 0.0;
    double delta_pi = 0.0;
    double delta_w = 0.0;
    bool valid = false;
    /// Set when valid: transmit no vertical information, reveal the horizontal.
    bool aggregate_vertical = false;
    bool reveal_horizontal = false;
};

/// Surplus changes of a recommender policy that transmits posterior-mean
/// variances v_w (vertical) and v_loc (horizontal) to the producer.
inline RecommenderOutcome recommender_policy(const RecommenderEnvironment& renv, double v_w,
                                             double v_loc) {
    validate(renv);
    detail::require_nonnegative(v_w, "v_w");
    detail::require_nonnegative(v_loc, "v_loc");
    if (v_w > renv.var_w() + 1e-12) throw ValidationError("v_w", "exceeds the vertical variance");
    if (v_loc > renv.var_loc() + 1e-12)
        throw ValidationError("v_loc", "exceeds the horizontal variance");
    const double mu = renv.mu_w;
    const double tau2 = renv.var_loc();
    const double quad = v_loc * v_loc - 2.0 * v_loc * tau2;
    RecommenderOutcome o;
    o.delta_u = -0.375 * v_w + 0.25 * mu * v_loc + 1.125 * quad;
    o.delta_pi = 0.25 * v_w + 0.5 * mu * v_loc + 0.25 * quad;
    o.delta_w = -0.125 * v_w + 0.75 * mu * v_loc + 1.375 * quad;
    o.valid = 3.0 * mu > 11.0 * tau2;
    o.aggregate_vertical = o.valid;
    o.reveal_horizontal = o.valid;
    return o;
}

}  // namespace socialdata
