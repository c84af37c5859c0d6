#pragma once

// Covariance structures of each policy's observables and the gain
// G = var E[w_i | observables] by exact linear projection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "socialdata/core_model.hpp"
#include "socialdata/linalg.hpp"

namespace socialdata {

struct ObservationModel {
    std::vector<double> cross;  // cov(target, observables)
    Matrix cov;                 // cov(observables)
    double target_var = 0.0;

    std::size_t dim() const noexcept { return cross.size(); }
    bool empty() const noexcept { return cross.empty(); }
};

enum class Scope { Full, LeaveOneOut, IndividualOnly };

/// How Complete-policy gains are evaluated. Auto factors the N×N matrix for
/// N up to `kDenseLimit` and switches to the compound-symmetry closed form
/// above it.
enum class GainRoute { Auto, Dense, ClosedForm };

inline constexpr std::size_t kDenseLimit = 512;

namespace detail {

inline void require_shape(const ObservationModel& obs) {
    if (obs.cov.rows() != obs.cross.size() || obs.cov.cols() != obs.cross.size())
        throw ModelError("observation model: cross length " + std::to_string(obs.cross.size()) +
                         " does not match covariance dimension");
    if (!(obs.target_var >= 0.0) || !std::isfinite(obs.target_var))
        throw ModelError("observation model: target variance must be finite and nonnegative");
}

// Equicorrelated block: n observables with variance v and covariance c,
// each with covariance k with the target.
inline ObservationModel equicorrelated(std::size_t n, double v, double c, double k,
                                       double target_var) {
    ObservationModel o;
    o.target_var = target_var;
    o.cross.assign(n, k);
    o.cov = Matrix::square(n, c);
    for (std::size_t i = 0; i < n; ++i) o.cov(i, i) = v;
    return o;
}

inline ObservationModel scalar(double cross, double var, double target_var) {
    ObservationModel o;
    o.target_var = target_var;
    o.cross = {cross};
    o.cov = Matrix::square(1, var);
    return o;
}

// Variance of a sum of n reports x_j = s_j + ξ + ξ_j and its covariance with
// the target w_i, when i is (in_sum = true) or is not among the n.
struct SumMoments {
    double var;
    double cross;
};

inline SumMoments sum_moments(const DataEnvironment& e, const NoiseDesign& d, std::size_t n,
                              bool in_sum) {
    const double nn = static_cast<double>(n);
    const double var_x = e.signal_var() + d.common_noise_var + d.idio_noise_var;
    const double cov_x = e.signal_cov() + d.common_noise_var;
    SumMoments m;
    m.var = nn * var_x + nn * (nn - 1.0) * cov_x;
    m.cross = in_sum ? 1.0 + (nn - 1.0) * e.alpha : nn * e.alpha;
    return m;
}

inline NoiseDesign noise_of(const PolicySpec& p) {
    return p.kind == PolicyKind::Noised && p.noise ? *p.noise : NoiseDesign{};
}

}  // namespace detail

/// Observables of the producer for target w_1 (consumer index 0).
///
/// Complete exposes every signal; Anonymized exposes the sum of signals;
/// Noised exposes the sum of noised reports x_j = s_j + ξ + ξ_j.
/// LeaveOneOut drops consumer 0's contribution and IndividualOnly is s_1 alone.
inline ObservationModel build_observation(const DataEnvironment& env, const PolicySpec& policy,
                                          Scope scope) {
    validate(env);
    validate(policy);
    const std::size_t n = env.n_consumers;

    if (scope == Scope::IndividualOnly) return detail::scalar(1.0, env.signal_var(), 1.0);

    ObservationModel empty;
    empty.target_var = 1.0;
    empty.cov = Matrix::square(0);

    switch (policy.kind) {
        case PolicyKind::NoSharing:
            return empty;
        case PolicyKind::Complete: {
            if (scope == Scope::Full) {
                auto o = detail::equicorrelated(n, env.signal_var(), env.signal_cov(), env.alpha, 1.0);
                o.cross[0] = 1.0;
                return o;
            }
            return detail::equicorrelated(n - 1, env.signal_var(), env.signal_cov(), env.alpha, 1.0);
        }
        case PolicyKind::Anonymized:
        case PolicyKind::Noised: {
            const auto noise = detail::noise_of(policy);
            if (scope == Scope::LeaveOneOut) {
                if (n == 1) return empty;
                const auto m = detail::sum_moments(env, noise, n - 1, false);
                return detail::scalar(m.cross, m.var, 1.0);
            }
            const auto m = detail::sum_moments(env, noise, n, true);
            return detail::scalar(m.cross, m.var, 1.0);
        }
        case PolicyKind::Grouped:
            throw ValidationError("policy",
                                  "grouped observables are built from a GroupedEnvironment");
    }
    return empty;
}

/// The consumer's own information for target w_1: her signal s_1, her report
/// x_1 and the sum of the other reports. This nests the producer's
/// observables both when she shares and when she does not.
inline ObservationModel build_consumer_observation(const DataEnvironment& env,
                                                   const PolicySpec& policy) {
    validate(env);
    validate(policy);
    switch (policy.kind) {
        case PolicyKind::NoSharing:
            return build_observation(env, policy, Scope::IndividualOnly);
        case PolicyKind::Complete:
            return build_observation(env, policy, Scope::Full);
        case PolicyKind::Anonymized:
        case PolicyKind::Noised:
            break;
        case PolicyKind::Grouped:
            throw ValidationError("policy",
                                  "grouped observables are built from a GroupedEnvironment");
    }
    const auto d = detail::noise_of(policy);
    const std::size_t n = env.n_consumers;
    const double vs = env.signal_var();
    const double cs = env.signal_cov();
    const double vx = vs + d.common_noise_var + d.idio_noise_var;

    // Order: s_1, x_1, then T_{-1} when there are other consumers.
    const bool others = n > 1;
    ObservationModel o;
    o.target_var = 1.0;
    o.cross = {1.0, 1.0};
    o.cov = Matrix::square(others ? 3 : 2);
    o.cov(0, 0) = vs;
    o.cov(0, 1) = o.cov(1, 0) = vs;
    o.cov(1, 1) = vx;
    if (others) {
        const auto m = detail::sum_moments(env, d, n - 1, false);
        const double k = static_cast<double>(n - 1);
        o.cross.push_back(m.cross);
        o.cov(2, 2) = m.var;
        o.cov(0, 2) = o.cov(2, 0) = k * cs;
        o.cov(1, 2) = o.cov(2, 1) = k * (cs + d.common_noise_var);
    }
    return o;
}

/// crossᵀ Σ⁺ cross. Rank deficiency is resolved by the pivoted factorization;
/// a target correlated with a null direction of Σ is a model error.
inline double gain(const ObservationModel& obs) {
    detail::require_shape(obs);
    if (obs.empty()) return 0.0;
    const PivotedCholesky chol(obs.cov);
    double residual = 0.0;
    const auto y = chol.forward(obs.cross, residual);
    const double scale = std::sqrt(std::max(chol.max_diagonal(), 1.0) * std::max(obs.target_var, 1.0));
    if (residual > 1e-7 * scale)
        throw ModelError("target is correlated with a zero-variance combination of observables");
    const double g = dot(y, y);
    if (g > obs.target_var + 1e-12 * std::max(1.0, obs.target_var))
        throw ModelError("explained variance exceeds target variance: covariance is not jointly PSD");
    return std::min(g, obs.target_var);
}

/// Coefficients b with E[target | obs] = bᵀ obs (centered). Coordinates
/// outside the factorization's pivot set get zero weight.
inline std::vector<double> projection_coefficients(const ObservationModel& obs) {
    detail::require_shape(obs);
    if (obs.empty()) return {};
    const PivotedCholesky chol(obs.cov);
    double residual = 0.0;
    const auto y = chol.forward(obs.cross, residual);
    const double scale = std::sqrt(std::max(chol.max_diagonal(), 1.0) * std::max(obs.target_var, 1.0));
    if (residual > 1e-7 * scale)
        throw ModelError("target is correlated with a zero-variance combination of observables");
    return chol.backward(y);
}

namespace closed_form {

/// Complete sharing, all N signals: Σ = aI + b11ᵀ with a = var θ_i + σ²(1−β)
/// and b = α + σ²β; cross = (1, α, …, α).
inline double complete_full(const DataEnvironment& e) {
    const double n = static_cast<double>(e.n_consumers);
    const double a = e.var_idio() + e.var_noise_idio();
    const double b = e.signal_cov();
    if (a <= 0.0) return b > 0.0 ? 1.0 / b : 1.0;
    const double cc = 1.0 + (n - 1.0) * e.alpha * e.alpha;
    const double oc = 1.0 + (n - 1.0) * e.alpha;
    return (cc - b * oc * oc / (a + n * b)) / a;
}

inline double complete_loo(const DataEnvironment& e) {
    if (e.n_consumers <= 1) return 0.0;
    const double k = static_cast<double>(e.n_consumers - 1);
    const double a = e.var_idio() + e.var_noise_idio();
    const double b = e.signal_cov();
    const double den = a + k * b;
    return den > 0.0 ? e.alpha * e.alpha * k / den : 0.0;
}

/// Sum of noised reports with σ_θ² = α, σ_θᵢ² = 1−α, σ_ε² = σ²β + σ_ξ²,
/// σ_εᵢ² = σ²(1−β) + σ_ξᵢ².
inline double noised_full(const DataEnvironment& e, const NoiseDesign& d) {
    const double n = static_cast<double>(e.n_consumers);
    const double st = e.var_common(), sti = e.var_idio();
    const double se = e.var_noise_common() + d.common_noise_var;
    const double sei = e.var_noise_idio() + d.idio_noise_var;
    const double num = n * st + sti;
    return num * num / (n * n * (st + se) + n * (sei + sti));
}

inline double noised_loo(const DataEnvironment& e, const NoiseDesign& d) {
    if (e.n_consumers <= 1) return 0.0;
    const double k = static_cast<double>(e.n_consumers - 1);
    const double st = e.var_common(), sti = e.var_idio();
    const double se = e.var_noise_common() + d.common_noise_var;
    const double sei = e.var_noise_idio() + d.idio_noise_var;
    const double den = k * (st + se) + sei + sti;
    return den > 0.0 ? k * st * st / den : 0.0;
}

inline double anonymized_full(const DataEnvironment& e) { return noised_full(e, {}); }
inline double anonymized_loo(const DataEnvironment& e) { return noised_loo(e, {}); }

inline double individual(const DataEnvironment& e) { return 1.0 / e.signal_var(); }

/// lim_{N→∞} G of the anonymized (sum) statistic.
inline double anonymized_limit(const DataEnvironment& e, double common_noise_var = 0.0) {
    const double den = e.alpha + e.var_noise_common() + common_noise_var;
    return den > 0.0 ? e.alpha * e.alpha / den : 0.0;
}

/// lim_{N→∞} G of complete sharing: θ is learned up to the common error,
/// and θ_i from the residual signal.
inline double complete_limit(const DataEnvironment& e) {
    const double d1 = e.alpha + e.var_noise_common();
    const double d2 = e.var_idio() + e.var_noise_idio();
    const double t1 = d1 > 0.0 ? e.alpha * e.alpha / d1 : 0.0;
    const double t2 = d2 > 0.0 ? e.var_idio() * e.var_idio() / d2 : 0.0;
    return t1 + t2;
}

}  // namespace closed_form

struct GainProfile {
    double g_full = 0.0;
    double g_loo = 0.0;
    double g_individual = 0.0;
    double g_consumer = 0.0;  // G of the consumer's own information set
};

inline GainProfile gain_profile(const DataEnvironment& env, const PolicySpec& policy,
                                GainRoute route = GainRoute::Auto) {
    validate(env);
    validate(policy);
    GainProfile g;
    g.g_individual = gain(build_observation(env, policy, Scope::IndividualOnly));
    if (policy.kind == PolicyKind::NoSharing) {
        g.g_consumer = g.g_individual;
        return g;
    }
    const bool closed = policy.kind == PolicyKind::Complete &&
                        (route == GainRoute::ClosedForm ||
                         (route == GainRoute::Auto && env.n_consumers > kDenseLimit));
    if (closed) {
        g.g_full = closed_form::complete_full(env);
        g.g_loo = closed_form::complete_loo(env);
        g.g_consumer = g.g_full;
        return g;
    }
    g.g_full = gain(build_observation(env, policy, Scope::Full));
    g.g_loo = gain(build_observation(env, policy, Scope::LeaveOneOut));
    g.g_consumer = gain(build_consumer_observation(env, policy));
    return g;
}

}  // namespace socialdata
