#pragma once

// Linear-quadratic product market: personalized prices, quantities and
// expected surpluses as functions of the two information gains.

#include <stdexcept>
#include <string>

#include "socialdata/core_model.hpp"
#include "socialdata/gaussian_engine.hpp"

namespace socialdata {

struct MarketOutcome {
    double producer_surplus = 0.0;
    double consumer_surplus = 0.0;
    double total_surplus = 0.0;
    double g_consumer = 0.0;
    double g_producer = 0.0;
};

struct PriceQuantity {
    double price;
    double quantity;
};

/// Price (ŵ_p + c)/2 and the consumer's demand ŵ_c − p at that price.
constexpr PriceQuantity pointwise_equilibrium(double w_hat_producer, double w_hat_consumer,
                                              double cost) noexcept {
    const double p = (w_hat_producer + cost) / 2.0;
    return {p, w_hat_consumer - p};
}

/// Expected per-consumer surpluses when the producer's information is nested
/// in the consumer's.
inline MarketOutcome surpluses(double g_consumer, double g_producer, const DataEnvironment& env) {
    if (g_producer > g_consumer + 1e-12)
        throw std::logic_error("producer gain " + std::to_string(g_producer) +
                               " exceeds consumer gain " + std::to_string(g_consumer));
    const double m2 = env.margin() * env.margin();
    MarketOutcome o;
    o.g_consumer = g_consumer;
    o.g_producer = g_producer;
    o.producer_surplus = (g_producer + m2) / 4.0;
    o.consumer_surplus = 0.5 * (g_consumer + m2) - 0.375 * (g_producer + m2);
    o.total_surplus = o.producer_surplus + o.consumer_surplus;
    return o;
}

struct SharingDeltas {
    double delta_pi = 0.0;
    double delta_u = 0.0;
    double delta_w = 0.0;
};

inline SharingDeltas sharing_deltas(const GainProfile& g) {
    SharingDeltas d;
    d.delta_pi = g.g_full / 4.0;
    d.delta_u = 0.5 * (g.g_consumer - g.g_individual) - 0.375 * g.g_full;
    d.delta_w = 0.5 * (g.g_consumer - g.g_individual) - 0.125 * g.g_full;
    return d;
}

/// Changes in per-consumer surplus relative to no data sharing.
inline SharingDeltas sharing_deltas(const DataEnvironment& env, const PolicySpec& policy) {
    if (policy.kind == PolicyKind::NoSharing) return {};
    return sharing_deltas(gain_profile(env, policy));
}

inline double data_externality(const GainProfile& g) {
    return 0.5 * (g.g_consumer - g.g_individual) - 0.375 * g.g_loo;
}

/// Change in consumer 1's surplus when everyone but her shares.
inline double data_externality(const DataEnvironment& env, const PolicySpec& policy) {
    if (policy.kind == PolicyKind::NoSharing) return 0.0;
    return data_externality(gain_profile(env, policy));
}

}  // namespace socialdata
