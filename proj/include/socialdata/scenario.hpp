#pragma once

// Scenario files: flat `key = value` lines, `#` starts a comment, lists are
// comma separated. Numbers are read and written without locale, and doubles
// are written in shortest round-trip form.
//
//   n_consumers = 2          alpha = 0.5        beta = 0      sigma = 1
//   mu = 10                  cost = 0
//   policy = none | complete | anonymized | noised | grouped
//   common_noise_var = 0     idio_noise_var = 0            (noised only)
//   group_sizes = 3,3        group_common_var = 0.5,0.5    (grouped only)
//   group_idio_var = 0.5,0.5 group_noise = 1,1
//   draws = 1000000          seed = 42
//   n_list = 1,10,100        alpha_grid = 0.1,0.2

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "socialdata/core_model.hpp"

namespace socialdata {

struct RunBlock {
    std::optional<std::size_t> draws;
    std::optional<std::uint64_t> seed;
    std::vector<std::size_t> n_list;
    std::vector<double> alpha_grid;

    bool operator==(const RunBlock&) const = default;
};

struct Scenario {
    DataEnvironment env;
    PolicySpec policy;
    RunBlock run;

    bool operator==(const Scenario&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view text, const std::string& field) {
    const auto t = trim(text);
    double v = 0.0;
    const char* first = t.data();
    if (!t.empty() && *first == '+') ++first;
    const auto [p, ec] = std::from_chars(first, t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size())
        throw ValidationError(field, "expected a decimal number, got '" + std::string(t) + "'");
    return v;
}

template <class Int>
Int parse_integer(std::string_view text, const std::string& field) {
    const auto t = trim(text);
    Int v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size())
        throw ValidationError(field, "expected a nonnegative integer, got '" + std::string(t) + "'");
    return v;
}

inline std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto c = s.find(',');
        out.push_back(trim(s.substr(0, c)));
        if (c == std::string_view::npos) break;
        s.remove_prefix(c + 1);
    }
    return out;
}

inline std::vector<double> parse_double_list(std::string_view s, const std::string& field) {
    std::vector<double> out;
    for (auto item : split_list(s)) out.push_back(parse_double(item, field));
    return out;
}

inline std::vector<std::size_t> parse_size_list(std::string_view s, const std::string& field) {
    std::vector<std::size_t> out;
    for (auto item : split_list(s)) out.push_back(parse_integer<std::size_t>(item, field));
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(v[i]);
        else
            out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
    static const std::set<std::string, std::less<>> known = {
        "n_consumers", "alpha", "beta", "sigma", "mu", "cost", "policy",
        "common_noise_var", "idio_noise_var", "group_sizes", "group_common_var",
        "group_idio_var", "group_noise", "draws", "seed", "n_list", "alpha_grid"};

    std::map<std::string, std::string, std::less<>> kv;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ValidationError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (!known.count(key)) throw ValidationError(key, "unknown key");
        if (kv.count(key)) throw ValidationError(key, "given more than once");
        kv.emplace(key, value);
    }

    auto take = [&](const char* k) -> std::optional<std::string> {
        const auto it = kv.find(k);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };

    Scenario sc;
    const auto policy = take("policy");
    if (!policy) throw ValidationError("policy", "missing");
    const auto kind = parse_policy_kind(*policy);
    if (!kind) throw ValidationError("policy", "unknown policy '" + *policy + "'");
    sc.policy.kind = *kind;
    const bool grouped = *kind == PolicyKind::Grouped;

    auto env_required = [&](const char* k) {
        auto v = take(k);
        if (!v && !grouped) throw ValidationError(k, "missing");
        return v;
    };
    if (auto v = env_required("n_consumers"))
        sc.env.n_consumers = detail::parse_integer<std::size_t>(*v, "n_consumers");
    if (auto v = env_required("alpha")) sc.env.alpha = detail::parse_double(*v, "alpha");
    if (auto v = env_required("beta")) sc.env.beta = detail::parse_double(*v, "beta");
    if (auto v = env_required("sigma")) sc.env.sigma = detail::parse_double(*v, "sigma");
    if (auto v = take("mu")) sc.env.mu = detail::parse_double(*v, "mu");
    if (auto v = take("cost")) sc.env.cost = detail::parse_double(*v, "cost");

    const auto cn = take("common_noise_var"), in = take("idio_noise_var");
    if (*kind == PolicyKind::Noised) {
        NoiseDesign d;
        if (cn) d.common_noise_var = detail::parse_double(*cn, "common_noise_var");
        if (in) d.idio_noise_var = detail::parse_double(*in, "idio_noise_var");
        sc.policy.noise = d;
    } else if (cn || in) {
        throw ValidationError(cn ? "common_noise_var" : "idio_noise_var",
                              "only valid with policy = noised");
    }

    const char* group_keys[] = {"group_sizes", "group_common_var", "group_idio_var", "group_noise"};
    if (grouped) {
        GroupedEnvironment g;
        for (const char* k : group_keys)
            if (!kv.count(k)) throw ValidationError(k, "missing (required with policy = grouped)");
        g.group_sizes = detail::parse_size_list(*take("group_sizes"), "group_sizes");
        g.common_var = detail::parse_double_list(*take("group_common_var"), "group_common_var");
        g.idio_var = detail::parse_double_list(*take("group_idio_var"), "group_idio_var");
        g.noise_scale = detail::parse_double_list(*take("group_noise"), "group_noise");
        sc.policy.groups = g;
    } else {
        for (const char* k : group_keys)
            if (kv.count(k)) throw ValidationError(k, "only valid with policy = grouped");
    }

    if (auto v = take("draws")) sc.run.draws = detail::parse_integer<std::size_t>(*v, "draws");
    if (auto v = take("seed")) sc.run.seed = detail::parse_integer<std::uint64_t>(*v, "seed");
    if (auto v = take("n_list")) sc.run.n_list = detail::parse_size_list(*v, "n_list");
    if (auto v = take("alpha_grid")) sc.run.alpha_grid = detail::parse_double_list(*v, "alpha_grid");

    validate(sc.env);
    validate(sc.policy);
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("scenario", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

inline std::string serialize_scenario(const Scenario& sc) {
    using detail::format_double;
    std::ostringstream o;
    o << "n_consumers = " << sc.env.n_consumers << '\n'
      << "alpha = " << format_double(sc.env.alpha) << '\n'
      << "beta = " << format_double(sc.env.beta) << '\n'
      << "sigma = " << format_double(sc.env.sigma) << '\n'
      << "mu = " << format_double(sc.env.mu) << '\n'
      << "cost = " << format_double(sc.env.cost) << '\n'
      << "policy = " << to_string(sc.policy.kind) << '\n';
    if (sc.policy.noise) {
        o << "common_noise_var = " << format_double(sc.policy.noise->common_noise_var) << '\n'
          << "idio_noise_var = " << format_double(sc.policy.noise->idio_noise_var) << '\n';
    }
    if (sc.policy.groups) {
        const auto& g = *sc.policy.groups;
        o << "group_sizes = " << detail::join(g.group_sizes) << '\n'
          << "group_common_var = " << detail::join(g.common_var) << '\n'
          << "group_idio_var = " << detail::join(g.idio_var) << '\n'
          << "group_noise = " << detail::join(g.noise_scale) << '\n';
    }
    if (sc.run.draws) o << "draws = " << *sc.run.draws << '\n';
    if (sc.run.seed) o << "seed = " << *sc.run.seed << '\n';
    if (!sc.run.n_list.empty()) o << "n_list = " << detail::join(sc.run.n_list) << '\n';
    if (!sc.run.alpha_grid.empty()) o << "alpha_grid = " << detail::join(sc.run.alpha_grid) << '\n';
    return o.str();
}

}  // namespace socialdata
