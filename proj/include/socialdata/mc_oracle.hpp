#pragma once

// Monte Carlo game simulator. Draws the Gaussian components, plays the
// product-market stage and estimates gains and surpluses with standard
// errors, for comparison against the closed forms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "socialdata/core_model.hpp"
#include "socialdata/gaussian_engine.hpp"
#include "socialdata/intermediation.hpp"
#include "socialdata/product_market.hpp"
#include "socialdata/random.hpp"

namespace socialdata {

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    bool operator==(const Estimate&) const = default;
};

struct Comparison {
    double analytic = 0.0;
    double z = 0.0;
    bool operator==(const Comparison&) const = default;
};

struct SimReport {
    std::size_t draws = 0;
    std::uint64_t seed = 0;
    std::size_t shards = 0;
    std::map<std::string, Estimate> estimates;
    std::map<std::string, Comparison> comparisons;

    double max_abs_z() const {
        double z = 0.0;
        for (const auto& [k, c] : comparisons) z = std::max(z, std::abs(c.z));
        return z;
    }

    bool operator==(const SimReport&) const = default;
};

inline constexpr std::size_t kMinDraws = 1000;
inline constexpr std::size_t kShards = 16;
inline constexpr std::size_t kMaxSimulatedConsumers = 1000;

namespace detail {

// Welford accumulator; shards are merged in index order.
struct Moments {
    double n = 0.0, mean = 0.0, m2 = 0.0;

    void add(double x) noexcept {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }

    void merge(const Moments& o) noexcept {
        if (o.n == 0.0) return;
        const double tot = n + o.n;
        const double d = o.mean - mean;
        mean += d * o.n / tot;
        m2 += o.m2 + d * d * n * o.n / tot;
        n = tot;
    }

    double variance() const noexcept { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
    Estimate estimate() const noexcept { return {mean, std::sqrt(variance() / n)}; }
};

inline Comparison compare(const Estimate& e, double analytic) {
    const double diff = e.mean - analytic;
    if (e.se > 0.0) return {analytic, diff / e.se};
    if (std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(analytic))) return {analytic, 0.0};
    return {analytic, std::copysign(std::numeric_limits<double>::max(), diff)};
}

inline std::size_t shard_draws(std::size_t draws, std::size_t shard) {
    return draws / kShards + (shard < draws % kShards ? 1 : 0);
}

inline double apply(const std::vector<double>& b, const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) s += b[k] * x[k];
    return s;
}

}  // namespace detail

/// Simulates `draws` markets from `seed` and reports empirical gains and
/// surpluses of consumer 1 against their analytic values.
///
/// The seed feeds a SplitMix64 stream that seeds `kShards` xoshiro256**
/// generators in order; shard k plays ⌈draws/kShards⌉ or ⌊draws/kShards⌋
/// markets. The result depends only on (env, policy, draws, seed).
inline SimReport simulate(const DataEnvironment& env, const PolicySpec& policy, std::size_t draws,
                          std::uint64_t seed) {
    validate(env);
    validate(policy);
    if (draws < kMinDraws)
        throw ValidationError("draws", "at least " + std::to_string(kMinDraws) + " required");
    if (policy.kind == PolicyKind::Grouped)
        throw ValidationError("policy", "the simulator covers none, complete, anonymized, noised");
    if (env.n_consumers > kMaxSimulatedConsumers)
        throw ValidationError("n_consumers", "simulation supports at most " +
                                                 std::to_string(kMaxSimulatedConsumers));

    const std::size_t n = env.n_consumers;
    const bool complete = policy.kind == PolicyKind::Complete;
    const bool summed = policy.kind == PolicyKind::Anonymized || policy.kind == PolicyKind::Noised;
    const bool offpath_pair = n > 1 && (complete || policy.kind == PolicyKind::Anonymized);
    const auto noise = detail::noise_of(policy);

    const auto b_full = projection_coefficients(build_observation(env, policy, Scope::Full));
    const auto b_loo = projection_coefficients(build_observation(env, policy, Scope::LeaveOneOut));
    const auto b_cons = projection_coefficients(build_consumer_observation(env, policy));
    const double b_ind = 1.0 / env.signal_var();
    std::vector<double> b_off_s, b_off_a;
    if (offpath_pair) {
        b_off_s = projection_coefficients(
            build_observation(env, PolicySpec::complete(), Scope::LeaveOneOut));
        b_off_a = projection_coefficients(
            build_observation(env, PolicySpec::anonymized(), Scope::LeaveOneOut));
    }

    const auto g = gain_profile(env, policy, GainRoute::Dense);
    const auto d = sharing_deltas(g);
    const double de = data_externality(g);
    const double payment = 0.375 * (g.g_full - g.g_loo);
    const double mu = env.mu, c = env.cost, m2 = env.margin() * env.margin();

    enum Q {
        kGainFull, kGainLoo, kGainInd, kGainCons, kPs, kCs, kDpi, kDu, kDe, kPay,
        kOffS, kOffA, kOffS2, kOffA2, kCount
    };

    const double sa = std::sqrt(env.alpha), sai = std::sqrt(1.0 - env.alpha);
    const double sb = std::sqrt(env.beta), sbi = std::sqrt(1.0 - env.beta);
    const double sx = std::sqrt(noise.common_noise_var), sxi = std::sqrt(noise.idio_noise_var);
    const double sig = env.sigma;

    SplitMix64 seeder(seed);
    std::array<detail::Moments, kCount> total{};
    std::vector<double> s(n), xr(n), obs_full, obs_loo, obs_cons, obs_off_s, obs_off_a(1);

    for (std::size_t shard = 0; shard < kShards; ++shard) {
        Xoshiro256 rng(seeder);
        std::array<detail::Moments, kCount> acc{};
        const std::size_t m = detail::shard_draws(draws, shard);
        for (std::size_t it = 0; it < m; ++it) {
            const double theta = sa * rng.normal();
            const double eps = sb * rng.normal();
            const double xi = sx * rng.normal();
            double w1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double wj = theta + sai * rng.normal();
                const double ej = eps + sbi * rng.normal();
                const double xij = sxi * rng.normal();
                if (j == 0) w1 = wj;
                s[j] = wj + sig * ej;
                xr[j] = s[j] + xi + xij;
            }

            double rest_s = 0.0, rest_x = 0.0;
            for (std::size_t j = 1; j < n; ++j) {
                rest_s += s[j];
                rest_x += xr[j];
            }
            if (complete) {
                obs_full.assign(s.begin(), s.end());
                obs_loo.assign(s.begin() + 1, s.end());
                obs_cons = obs_full;
            } else if (summed) {
                obs_full = {xr[0] + rest_x};
                obs_loo = {rest_x};
                obs_cons = {s[0], xr[0]};
                if (n > 1) obs_cons.push_back(rest_x);
            } else {
                obs_full.clear();
                obs_loo.clear();
                obs_cons = {s[0]};
            }
            if (n == 1) obs_loo.clear();

            const double wp = mu + detail::apply(b_full, obs_full);
            const double wl = mu + detail::apply(b_loo, obs_loo);
            const double wc = mu + detail::apply(b_cons, obs_cons);
            const double wi = mu + b_ind * s[0];
            const double w = mu + w1;

            const auto on = pointwise_equilibrium(wp, wc, c);
            const auto off = pointwise_equilibrium(wl, wc, c);
            const auto base = pointwise_equilibrium(mu, wi, c);
            auto util = [w](const PriceQuantity& pq) {
                return w * pq.quantity - 0.5 * pq.quantity * pq.quantity - pq.price * pq.quantity;
            };
            const double pi_on = (on.price - c) * on.quantity;
            const double pi_base = (base.price - c) * base.quantity;
            const double u_on = util(on), u_off = util(off), u_base = util(base);

            acc[kGainFull].add((wp - mu) * (wp - mu));
            acc[kGainLoo].add((wl - mu) * (wl - mu));
            acc[kGainInd].add((wi - mu) * (wi - mu));
            acc[kGainCons].add((wc - mu) * (wc - mu));
            acc[kPs].add(pi_on);
            acc[kCs].add(u_on);
            acc[kDpi].add(pi_on - pi_base);
            acc[kDu].add(u_on - u_base);
            acc[kDe].add(u_off - u_base);
            acc[kPay].add(u_off - u_on);

            if (offpath_pair) {
                obs_off_s.assign(s.begin() + 1, s.end());
                obs_off_a[0] = rest_s;
                const double ps = (mu + detail::apply(b_off_s, obs_off_s) + c) / 2.0;
                const double pa = (mu + detail::apply(b_off_a, obs_off_a) + c) / 2.0;
                const double p_bar = (mu + c) / 2.0;
                acc[kOffS].add(ps);
                acc[kOffA].add(pa);
                acc[kOffS2].add((ps - p_bar) * (ps - p_bar));
                acc[kOffA2].add((pa - p_bar) * (pa - p_bar));
            }
        }
        for (std::size_t q = 0; q < kCount; ++q) total[q].merge(acc[q]);
    }

    SimReport rep;
    rep.draws = draws;
    rep.seed = seed;
    rep.shards = kShards;
    auto put = [&](const char* name, Q q, double analytic) {
        const auto e = total[q].estimate();
        rep.estimates[name] = e;
        rep.comparisons[name] = detail::compare(e, analytic);
    };
    put("gain_full", kGainFull, g.g_full);
    put("gain_loo", kGainLoo, g.g_loo);
    put("gain_individual", kGainInd, g.g_individual);
    put("gain_consumer", kGainCons, g.g_consumer);
    put("producer_surplus", kPs, (g.g_full + m2) / 4.0);
    put("consumer_surplus", kCs, 0.5 * (g.g_consumer + m2) - 0.375 * (g.g_full + m2));
    put("delta_pi", kDpi, d.delta_pi);
    put("delta_u", kDu, d.delta_u);
    put("de", kDe, de);
    put("consumer_payment", kPay, payment);

    if (offpath_pair) {
        auto gap = [&](const char* name, Q a, Q b) {
            const auto ea = total[a].estimate(), eb = total[b].estimate();
            const Estimate e{ea.mean - eb.mean, std::sqrt(ea.se * ea.se + eb.se * eb.se)};
            rep.estimates[name] = e;
            rep.comparisons[name] = detail::compare(e, 0.0);
        };
        rep.estimates["offpath_price_complete"] = total[kOffS].estimate();
        rep.estimates["offpath_price_anonymized"] = total[kOffA].estimate();
        gap("offpath_price_mean_gap", kOffS, kOffA);
        gap("offpath_price_var_gap", kOffS2, kOffA2);
    }
    return rep;
}

struct ProjectionCheck {
    double empirical = 0.0;
    double analytic = 0.0;
    double se = 0.0;
    double z = 0.0;
};

/// Samples (target, observables) from their Gaussian joint law, fits the
/// projection by least squares and compares the variance of the fitted
/// values with gain(obs). The standard error comes from 20 batch means.
inline ProjectionCheck projection_check(const ObservationModel& obs, std::size_t draws,
                                        std::uint64_t seed) {
    if (draws < kMinDraws)
        throw ValidationError("draws", "at least " + std::to_string(kMinDraws) + " required");
    ProjectionCheck out;
    out.analytic = gain(obs);
    const std::size_t k = obs.dim();
    if (k == 0 || obs.target_var == 0.0) return out;
    if (draws <= k) throw NumericalError("fewer draws than observables");

    const Eigen::Index dim = static_cast<Eigen::Index>(k + 1);
    Eigen::MatrixXd joint(dim, dim);
    joint(0, 0) = obs.target_var;
    for (std::size_t i = 0; i < k; ++i) {
        joint(0, i + 1) = joint(i + 1, 0) = obs.cross[i];
        for (std::size_t j = 0; j < k; ++j) joint(i + 1, j + 1) = obs.cov(i, j);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(joint);
    const Eigen::MatrixXd factor =
        eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    constexpr std::size_t batches = 20;
    std::vector<Eigen::MatrixXd> xtx(batches, Eigen::MatrixXd::Zero(dim - 1, dim - 1));
    std::vector<Eigen::VectorXd> xty(batches, Eigen::VectorXd::Zero(dim - 1));
    std::vector<std::size_t> counts(batches, 0);

    SplitMix64 seeder(seed);
    Xoshiro256 rng(seeder);
    Eigen::VectorXd z(dim);
    for (std::size_t it = 0; it < draws; ++it) {
        for (Eigen::Index i = 0; i < dim; ++i) z(i) = rng.normal();
        const Eigen::VectorXd v = factor * z;
        const Eigen::VectorXd x = v.tail(dim - 1);
        const std::size_t b = it * batches / draws;
        xtx[b].noalias() += x * x.transpose();
        xty[b] += v(0) * x;
        ++counts[b];
    }

    // explained variance c' S^+ c from raw cross-products
    const auto explained = [](const Eigen::MatrixXd& sxx, const Eigen::VectorXd& sxy, double n) {
        const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sxx);
        return sxy.dot(cod.solve(sxy)) / n;
    };
    Eigen::MatrixXd xtx_all = Eigen::MatrixXd::Zero(dim - 1, dim - 1);
    Eigen::VectorXd xty_all = Eigen::VectorXd::Zero(dim - 1);
    for (std::size_t b = 0; b < batches; ++b) {
        xtx_all += xtx[b];
        xty_all += xty[b];
    }
    out.empirical = explained(xtx_all, xty_all, static_cast<double>(draws));

    // batch means of the full statistic, so coefficient noise is included
    detail::Moments bm;
    for (std::size_t b = 0; b < batches; ++b)
        bm.add(explained(xtx[b], xty[b], static_cast<double>(counts[b])));
    out.se = std::sqrt(bm.variance() / static_cast<double>(batches));
    out.z = detail::compare({out.empirical, out.se}, out.analytic).z;
    return out;
}

}  // namespace socialdata
