#pragma once

// Equilibrium payments of the data intermediary, revenue, the
// divide-and-conquer schedule and large-market bounds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "socialdata/core_model.hpp"
#include "socialdata/gaussian_engine.hpp"
#include "socialdata/product_market.hpp"

namespace socialdata {

struct IntermediaryOutcome {
    double consumer_payment = 0.0;  // m_i*
    double producer_fee = 0.0;      // m_0*
    double revenue = 0.0;           // R
    double data_externality = 0.0;  // DE_i
    bool profitable = false;
    double margin = 0.0;            // 3 g_loo − g_full
};

inline IntermediaryOutcome equilibrium_outcome(const GainProfile& g, std::size_t n_consumers) {
    const double n = static_cast<double>(n_consumers);
    const auto d = sharing_deltas(g);
    IntermediaryOutcome o;
    o.data_externality = data_externality(g);
    o.consumer_payment = 0.375 * (g.g_full - g.g_loo);
    o.producer_fee = n * g.g_full / 4.0;
    o.margin = 3.0 * g.g_loo - g.g_full;
    o.revenue = n * o.margin / 8.0;

    const double net_externality = n * (d.delta_w - o.data_externality);
    if (std::abs(net_externality - o.revenue) > 1e-12 * std::max(1.0, n))
        throw NumericalError("revenue does not match the sum of welfare gains net of externalities");
    o.profitable = o.margin > 0.0;
    return o;
}

inline IntermediaryOutcome equilibrium_outcome(const DataEnvironment& env, const PolicySpec& policy) {
    if (policy.kind == PolicyKind::NoSharing) return {};
    return equilibrium_outcome(gain_profile(env, policy), env.n_consumers);
}

enum class Dominance { Equal, Strict };

struct DominanceReport {
    double revenue_complete = 0.0;
    double revenue_anonymized = 0.0;
    Dominance dominance = Dominance::Equal;
};

/// Revenue under complete and anonymized collection. Anonymized revenue is
/// never lower; the flag is Strict when anonymization loses information.
inline DominanceReport anonymization_dominance(const DataEnvironment& env) {
    const auto gs = gain_profile(env, PolicySpec::complete());
    const auto ga = gain_profile(env, PolicySpec::anonymized());
    DominanceReport r;
    r.revenue_complete = equilibrium_outcome(gs, env.n_consumers).revenue;
    r.revenue_anonymized = equilibrium_outcome(ga, env.n_consumers).revenue;
    const double tol = 1e-12 * std::max(1.0, static_cast<double>(env.n_consumers));
    if (r.revenue_anonymized < r.revenue_complete - tol)
        throw NumericalError("anonymized revenue below complete-sharing revenue");
    r.dominance = gs.g_full - ga.g_full > 1e-12 ? Dominance::Strict : Dominance::Equal;
    return r;
}

struct PaymentSchedule {
    std::vector<double> payments;
    double total = 0.0;
};

/// Payment to the k-th consumer is the largest marginal information loss
/// ⅜(G_j(S) − G_j(S_{-j})) among markets of size j ≥ k, where a market of
/// size j contains consumers 1..j.
inline PaymentSchedule divide_and_conquer(const DataEnvironment& env, const PolicySpec& policy) {
    validate(env);
    validate(policy);
    const std::size_t n = env.n_consumers;
    std::vector<double> inc(n, 0.0);
    if (policy.kind != PolicyKind::NoSharing) {
        for (std::size_t k = 1; k <= n; ++k) {
            DataEnvironment sub = env;
            sub.n_consumers = k;
            const auto g = gain_profile(sub, policy, GainRoute::ClosedForm);
            inc[k - 1] = 0.375 * (g.g_full - g.g_loo);
        }
    }
    PaymentSchedule s;
    s.payments.assign(n, 0.0);
    double tail = -INFINITY;
    for (std::size_t k = n; k-- > 0;) {
        tail = std::max(tail, inc[k]);
        s.payments[k] = tail;
    }
    for (double p : s.payments) s.total += p;
    return s;
}

enum class BoundStatus { Holds, Violated, Skipped };

constexpr const char* to_string(BoundStatus s) noexcept {
    switch (s) {
        case BoundStatus::Holds: return "holds";
        case BoundStatus::Violated: return "violated";
        case BoundStatus::Skipped: return "skipped";
    }
    return "?";
}

struct LargeMarketRow {
    std::size_t n = 0;
    double consumer_payment = 0.0;
    double total_payment = 0.0;
    double revenue_per_consumer = 0.0;
    double dnc_total = NAN;
    BoundStatus total_payment_bound = BoundStatus::Skipped;
    BoundStatus dnc_bound = BoundStatus::Skipped;
};

struct LargeMarketReport {
    std::vector<LargeMarketRow> rows;
    double total_payment_bound = 0.0;  // (9/8)(var θ_i + σ² var ε_i)
    double limit_gain = 0.0;           // lim G(X) as N → ∞
    double limit_revenue_per_consumer = 0.0;
    /// Complete sharing only: ⅜ var²θ_i/(1 + σ²) against m_i* at the largest N.
    double individual_payment_floor = NAN;
    BoundStatus individual_payment_bound = BoundStatus::Skipped;
};

/// Payments and revenue across market sizes with the asymptotic bounds.
/// The total-payment and divide-and-conquer bounds concern the anonymized
/// policy with independent errors; they are skipped otherwise.
inline LargeMarketReport large_market_report(const DataEnvironment& env, const PolicySpec& policy,
                                             const std::vector<std::size_t>& n_list) {
    validate(env);
    validate(policy);
    if (n_list.empty()) throw ValidationError("n_list", "must not be empty");
    if (policy.kind != PolicyKind::Complete && policy.kind != PolicyKind::Anonymized &&
        policy.kind != PolicyKind::Noised)
        throw ValidationError("policy", "large-market report needs complete, anonymized or noised");

    LargeMarketReport rep;
    const double idio = env.var_idio() + env.var_noise_idio();
    rep.total_payment_bound = 1.125 * idio;
    if (policy.kind == PolicyKind::Complete)
        rep.limit_gain = closed_form::complete_limit(env);
    else
        rep.limit_gain = closed_form::anonymized_limit(env, detail::noise_of(policy).common_noise_var);
    rep.limit_revenue_per_consumer = rep.limit_gain / 4.0;

    const bool anonymized = policy.kind == PolicyKind::Anonymized;
    const bool independent = env.beta == 0.0;
    std::size_t largest = 0;
    double payment_at_largest = 0.0;
    for (std::size_t n : n_list) {
        if (n == 0) throw ValidationError("n_list", "market sizes must be positive");
        DataEnvironment e = env;
        e.n_consumers = n;
        const auto out = equilibrium_outcome(e, policy);
        LargeMarketRow row;
        row.n = n;
        row.consumer_payment = out.consumer_payment;
        row.total_payment = static_cast<double>(n) * out.consumer_payment;
        row.revenue_per_consumer = out.revenue / static_cast<double>(n);
        if (anonymized && independent)
            row.total_payment_bound = row.total_payment <= rep.total_payment_bound + 1e-12
                                          ? BoundStatus::Holds
                                          : BoundStatus::Violated;
        if (anonymized) {
            row.dnc_total = divide_and_conquer(e, policy).total;
            const double b = 0.75 * (1.0 + std::log(static_cast<double>(n))) * idio;
            row.dnc_bound = row.dnc_total <= b + 1e-12 ? BoundStatus::Holds : BoundStatus::Violated;
        }
        if (n >= largest) {
            largest = n;
            payment_at_largest = out.consumer_payment;
        }
        rep.rows.push_back(row);
    }
    if (policy.kind == PolicyKind::Complete) {
        rep.individual_payment_floor =
            0.375 * env.var_idio() * env.var_idio() / (1.0 + env.sigma * env.sigma);
        rep.individual_payment_bound = payment_at_largest >= rep.individual_payment_floor
                                           ? BoundStatus::Holds
                                           : BoundStatus::Violated;
    }
    return rep;
}

}  // namespace socialdata
