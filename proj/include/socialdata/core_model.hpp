#pragma once

// Parameter types shared by every part of the library: the additive data
// environment, the data-policy taxonomy and the extension environments.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace socialdata {

/// Raised when an input violates a documented invariant. `field()` names the
/// offending parameter so command-line diagnostics can point at it.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A covariance structure that is not positive semidefinite, or a projection
/// whose target is correlated with a null direction of the observables.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed to produce a trustworthy answer.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Additive data structure: w_i = θ + θ_i, e_i = ε + ε_i, s_i = w_i + σ e_i.
///
/// var[w_i] and var[e_i] are normalised to one, so `alpha` is var[θ] (and the
/// correlation of any pair w_i, w_j) and `beta` is var[ε].
struct DataEnvironment {
    std::size_t n_consumers = 1;
    double alpha = 0.0;
    double beta = 0.0;
    double sigma = 0.0;
    double mu = 10.0;
    double cost = 0.0;

    double var_common() const noexcept { return alpha; }
    double var_idio() const noexcept { return 1.0 - alpha; }
    /// Common error variance in signal units, σ²β.
    double var_noise_common() const noexcept { return sigma * sigma * beta; }
    /// Idiosyncratic error variance in signal units, σ²(1−β).
    double var_noise_idio() const noexcept { return sigma * sigma * (1.0 - beta); }
    /// Demand shift μ − c; the cost enters every surplus only through it.
    double margin() const noexcept { return mu - cost; }

    /// var(s_i) = 1 + σ².
    double signal_var() const noexcept { return 1.0 + sigma * sigma; }
    /// cov(s_i, s_j), i ≠ j.
    double signal_cov() const noexcept { return alpha + sigma * sigma * beta; }

    bool operator==(const DataEnvironment&) const = default;
};

struct NoiseDesign {
    double common_noise_var = 0.0;  // σ_ξ²
    double idio_noise_var = 0.0;    // σ_ξᵢ²

    bool operator==(const NoiseDesign&) const = default;
};

/// J independent homogeneous groups; consumer i of group j has
/// w_ij = θ_j + θ_ij and observes s_ij = w_ij + σ_j e_ij with e_ij iid N(0, 1).
struct GroupedEnvironment {
    std::vector<std::size_t> group_sizes;
    std::vector<double> common_var;
    std::vector<double> idio_var;
    std::vector<double> noise_scale;

    std::size_t groups() const noexcept { return group_sizes.size(); }
    std::size_t total_consumers() const noexcept {
        std::size_t n = 0;
        for (auto s : group_sizes) n += s;
        return n;
    }

    /// `groups` identical groups of `size` consumers each.
    static GroupedEnvironment symmetric(std::size_t groups, std::size_t size, double common,
                                        double idio, double noise) {
        GroupedEnvironment g;
        g.group_sizes.assign(groups, size);
        g.common_var.assign(groups, common);
        g.idio_var.assign(groups, idio);
        g.noise_scale.assign(groups, noise);
        return g;
    }

    bool operator==(const GroupedEnvironment&) const = default;
};

/// Two-dimensional preferences: vertical willingness to pay w_i and a
/// horizontal ideal location ℓ_i, both Gaussian.
struct RecommenderEnvironment {
    double mu_w = 10.0;
    double var_w_common = 0.0;
    double var_w_idio = 0.0;
    double var_loc_common = 0.0;  // σ_τ²
    double var_loc_idio = 0.0;    // σ_τᵢ²
    double loc_mean = 0.0;        // μ_τ

    double var_w() const noexcept { return var_w_common + var_w_idio; }
    double var_loc() const noexcept { return var_loc_common + var_loc_idio; }
};

enum class PolicyKind { NoSharing, Complete, Anonymized, Grouped, Noised };

constexpr std::string_view to_string(PolicyKind k) noexcept {
    switch (k) {
        case PolicyKind::NoSharing: return "none";
        case PolicyKind::Complete: return "complete";
        case PolicyKind::Anonymized: return "anonymized";
        case PolicyKind::Grouped: return "grouped";
        case PolicyKind::Noised: return "noised";
    }
    return "?";
}

inline std::optional<PolicyKind> parse_policy_kind(std::string_view s) {
    for (auto k : {PolicyKind::NoSharing, PolicyKind::Complete, PolicyKind::Anonymized,
                   PolicyKind::Grouped, PolicyKind::Noised}) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

/// Data policy in force. Noised carries a NoiseDesign and Grouped carries the
/// group parameters; the other kinds carry nothing.
struct PolicySpec {
    PolicyKind kind = PolicyKind::Complete;
    std::optional<NoiseDesign> noise;
    std::optional<GroupedEnvironment> groups;

    static PolicySpec none() { return {PolicyKind::NoSharing, {}, {}}; }
    static PolicySpec complete() { return {PolicyKind::Complete, {}, {}}; }
    static PolicySpec anonymized() { return {PolicyKind::Anonymized, {}, {}}; }
    static PolicySpec noised(double common, double idio) {
        return {PolicyKind::Noised, NoiseDesign{common, idio}, {}};
    }
    static PolicySpec grouped(GroupedEnvironment g) {
        return {PolicyKind::Grouped, {}, std::move(g)};
    }

    bool operator==(const PolicySpec&) const = default;
};

namespace detail {

inline void require_unit_interval(double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw ValidationError(field, "must lie in [0, 1], got " + std::to_string(v));
}

inline void require_nonnegative(double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0)
        throw ValidationError(field, "must be a finite nonnegative number, got " +
                                         std::to_string(v));
}

inline void require_finite(double v, const char* field) {
    if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
}

}  // namespace detail

inline const DataEnvironment& validate(const DataEnvironment& env) {
    if (env.n_consumers == 0) throw ValidationError("n_consumers", "must be at least 1");
    detail::require_unit_interval(env.alpha, "alpha");
    detail::require_unit_interval(env.beta, "beta");
    detail::require_nonnegative(env.sigma, "sigma");
    detail::require_finite(env.mu, "mu");
    detail::require_nonnegative(env.cost, "cost");
    return env;
}

inline const NoiseDesign& validate(const NoiseDesign& d) {
    detail::require_nonnegative(d.common_noise_var, "common_noise_var");
    detail::require_nonnegative(d.idio_noise_var, "idio_noise_var");
    return d;
}

inline const GroupedEnvironment& validate(const GroupedEnvironment& g) {
    const auto j = g.group_sizes.size();
    if (j == 0) throw ValidationError("group_sizes", "at least one group is required");
    if (g.common_var.size() != j)
        throw ValidationError("group_common_var", "length must match group_sizes");
    if (g.idio_var.size() != j)
        throw ValidationError("group_idio_var", "length must match group_sizes");
    if (g.noise_scale.size() != j)
        throw ValidationError("group_noise", "length must match group_sizes");
    for (std::size_t k = 0; k < j; ++k) {
        if (g.group_sizes[k] == 0) throw ValidationError("group_sizes", "sizes must be positive");
        detail::require_nonnegative(g.common_var[k], "group_common_var");
        detail::require_nonnegative(g.idio_var[k], "group_idio_var");
        detail::require_nonnegative(g.noise_scale[k], "group_noise");
    }
    return g;
}

inline const RecommenderEnvironment& validate(const RecommenderEnvironment& r) {
    detail::require_finite(r.mu_w, "mu_w");
    detail::require_finite(r.loc_mean, "loc_mean");
    detail::require_nonnegative(r.var_w_common, "var_w_common");
    detail::require_nonnegative(r.var_w_idio, "var_w_idio");
    detail::require_nonnegative(r.var_loc_common, "var_loc_common");
    detail::require_nonnegative(r.var_loc_idio, "var_loc_idio");
    return r;
}

inline const PolicySpec& validate(const PolicySpec& p) {
    if (p.kind == PolicyKind::Noised) {
        if (!p.noise) throw ValidationError("policy", "noised policy requires a noise design");
        validate(*p.noise);
    } else if (p.noise) {
        throw ValidationError("policy", "only the noised policy carries a noise design");
    }
    if (p.kind == PolicyKind::Grouped) {
        if (!p.groups) throw ValidationError("policy", "grouped policy requires group parameters");
        validate(*p.groups);
    } else if (p.groups) {
        throw ValidationError("policy", "only the grouped policy carries group parameters");
    }
    return p;
}

}  // namespace socialdata
