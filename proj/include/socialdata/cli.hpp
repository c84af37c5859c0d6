#pragma once

// Command implementations behind the `socialdata` executable. They write to
// caller-supplied streams so tests can run them in-process.
//
// Exit codes: 0 success, 2 validation or usage error, 3 numerical failure,
// 4 Monte Carlo check failure.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "socialdata/core_model.hpp"
#include "socialdata/gaussian_engine.hpp"
#include "socialdata/intermediation.hpp"
#include "socialdata/mc_oracle.hpp"
#include "socialdata/policy_design.hpp"
#include "socialdata/product_market.hpp"
#include "socialdata/scenario.hpp"

namespace socialdata::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kNumerical = 3, kMcFailure = 4 };

/// Rounds to 12 significant digits.
inline double round12(double v) {
    if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    double out = 0.0;
    std::from_chars(buf, r.ptr, out);
    return out;
}

inline std::string fmt(double v) { return detail::format_double(round12(v)); }

struct Null {};
using Value = std::variant<Null, double, long long, bool, std::string>;
using Record = std::vector<std::pair<std::string, Value>>;

inline std::string csv_cell(const Value& v) {
    struct {
        std::string operator()(Null) const { return ""; }
        std::string operator()(double d) const { return fmt(d); }
        std::string operator()(long long i) const { return std::to_string(i); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const std::string& s) const { return s; }
    } visit;
    return std::visit(visit, v);
}

inline nlohmann::ordered_json json_value(const Value& v) {
    struct {
        nlohmann::ordered_json operator()(Null) const { return nullptr; }
        nlohmann::ordered_json operator()(double d) const { return round12(d); }
        nlohmann::ordered_json operator()(long long i) const { return i; }
        nlohmann::ordered_json operator()(bool b) const { return b; }
        nlohmann::ordered_json operator()(const std::string& s) const { return s; }
    } visit;
    return std::visit(visit, v);
}

inline void write_csv(std::ostream& out, const std::vector<Record>& rows) {
    if (rows.empty()) return;
    for (std::size_t k = 0; k < rows[0].size(); ++k) out << (k ? "," : "") << rows[0][k].first;
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << csv_cell(r[k].second);
        out << '\n';
    }
}

inline void write_json(std::ostream& out, const Record& r) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r) j[k] = json_value(v);
    out << j.dump(2) << '\n';
}

inline void write_json(std::ostream& out, const std::vector<Record>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& [k, v] : r) j[k] = json_value(v);
        arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
}

/// Comma list, or `start:stop:step` with stop included.
inline std::vector<double> parse_grid(const std::string& text) {
    if (detail::trim(text).empty()) throw ValidationError("grid", "empty grid");
    if (text.find(':') == std::string::npos) return detail::parse_double_list(text, "grid");
    std::vector<std::string_view> parts;
    std::string_view s = text;
    while (true) {
        const auto c = s.find(':');
        parts.push_back(s.substr(0, c));
        if (c == std::string_view::npos) break;
        s.remove_prefix(c + 1);
    }
    if (parts.size() != 3) throw ValidationError("grid", "range form is start:stop:step");
    const double a = detail::parse_double(parts[0], "grid");
    const double b = detail::parse_double(parts[1], "grid");
    const double h = detail::parse_double(parts[2], "grid");
    if (!(h > 0.0)) throw ValidationError("grid", "step must be positive");
    if (b < a) throw ValidationError("grid", "stop is below start");
    std::vector<double> out;
    for (long long k = 0;; ++k) {
        const double v = a + static_cast<double>(k) * h;
        if (v > b + 1e-9 * h) break;
        out.push_back(round12(v));
        if (out.size() > 10'000'000) throw ValidationError("grid", "too many points");
    }
    return out;
}

inline std::size_t as_count(double v, const char* field) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e12)
        throw ValidationError(field, "expected a positive integer, got " + fmt(v));
    return static_cast<std::size_t>(v);
}

inline Record environment_record(const Scenario& sc) {
    Record r{{"policy", std::string(to_string(sc.policy.kind))},
             {"n_consumers", static_cast<long long>(sc.env.n_consumers)},
             {"alpha", sc.env.alpha},
             {"beta", sc.env.beta},
             {"sigma", sc.env.sigma},
             {"mu", sc.env.mu},
             {"cost", sc.env.cost}};
    if (sc.policy.noise) {
        r.emplace_back("common_noise_var", sc.policy.noise->common_noise_var);
        r.emplace_back("idio_noise_var", sc.policy.noise->idio_noise_var);
    }
    return r;
}

/// Gains, surplus changes and intermediation outcome of one environment.
inline Record outcome_record(const DataEnvironment& env, const PolicySpec& policy) {
    const auto g = gain_profile(env, policy);
    const bool none = policy.kind == PolicyKind::NoSharing;
    const auto d = none ? SharingDeltas{} : sharing_deltas(g);
    const double de = none ? 0.0 : data_externality(g);
    const auto io = none ? IntermediaryOutcome{} : equilibrium_outcome(g, env.n_consumers);
    return {{"g_full", g.g_full},
            {"g_loo", g.g_loo},
            {"g_individual", g.g_individual},
            {"g_consumer", g.g_consumer},
            {"delta_pi", d.delta_pi},
            {"delta_u", d.delta_u},
            {"delta_w", d.delta_w},
            {"data_externality", de},
            {"consumer_payment", io.consumer_payment},
            {"producer_fee", io.producer_fee},
            {"revenue", io.revenue},
            {"profitable", io.profitable},
            {"margin", io.margin}};
}

inline Record segmentation_record(const GroupedEnvironment& g, std::optional<std::size_t> sweep) {
    const auto rep = segmentation_compare(g, sweep);
    Value cross = Null{};
    if (rep.crossover_n) cross = static_cast<long long>(*rep.crossover_n);
    return {{"policy", std::string("grouped")},
            {"groups", static_cast<long long>(g.groups())},
            {"total_consumers", static_cast<long long>(g.total_consumers())},
            {"revenue_pooled", rep.revenue_pooled},
            {"revenue_grouped", rep.revenue_grouped},
            {"recommended", std::string(to_string(rep.recommended))},
            {"crossover_n", cross}};
}

inline std::optional<std::size_t> sweep_bound(const Scenario& sc) {
    if (sc.run.n_list.empty()) return std::nullopt;
    return *std::max_element(sc.run.n_list.begin(), sc.run.n_list.end());
}

inline void emit(std::ostream& out, const std::string& format, const Record& r) {
    if (format == "csv")
        write_csv(out, {r});
    else
        write_json(out, r);
}

inline void emit(std::ostream& out, const std::string& format, const std::vector<Record>& rows) {
    if (format == "json")
        write_json(out, rows);
    else
        write_csv(out, rows);
}

inline int cmd_eval(const std::string& path, const std::string& format, std::ostream& out) {
    const auto sc = load_scenario(path);
    if (sc.policy.kind == PolicyKind::Grouped) {
        emit(out, format, segmentation_record(*sc.policy.groups, sweep_bound(sc)));
        return kOk;
    }
    auto r = environment_record(sc);
    for (auto& f : outcome_record(sc.env, sc.policy)) r.push_back(std::move(f));
    emit(out, format, r);
    return kOk;
}

inline int cmd_sweep(const std::string& path, std::string param, const std::string& grid_text,
                     const std::string& format, std::ostream& out) {
    const auto sc = load_scenario(path);
    if (sc.policy.kind == PolicyKind::Grouped)
        throw ValidationError("policy", "sweep needs a non-grouped policy; use segment");
    if (param == "N") param = "n_consumers";
    const std::vector<std::string> names = {"n_consumers", "alpha", "beta", "sigma", "mu", "cost",
                                            "common_noise_var", "idio_noise_var"};
    if (std::find(names.begin(), names.end(), param) == names.end())
        throw ValidationError("param", "unknown parameter '" + param + "'");
    if ((param == "common_noise_var" || param == "idio_noise_var") &&
        sc.policy.kind != PolicyKind::Noised)
        throw ValidationError("param", param + " can only be swept with policy = noised");
    const auto grid = parse_grid(grid_text);

    std::vector<Record> rows;
    for (double v : grid) {
        Scenario s = sc;
        if (param == "n_consumers") s.env.n_consumers = as_count(v, "grid");
        else if (param == "alpha") s.env.alpha = v;
        else if (param == "beta") s.env.beta = v;
        else if (param == "sigma") s.env.sigma = v;
        else if (param == "mu") s.env.mu = v;
        else if (param == "cost") s.env.cost = v;
        else if (param == "common_noise_var") s.policy.noise->common_noise_var = v;
        else s.policy.noise->idio_noise_var = v;
        validate(s.env);
        validate(s.policy);
        Record r;
        if (param == "n_consumers")
            r.emplace_back(param, static_cast<long long>(s.env.n_consumers));
        else
            r.emplace_back(param, v);
        for (auto& f : outcome_record(s.env, s.policy)) r.push_back(std::move(f));
        rows.push_back(std::move(r));
    }
    emit(out, format, rows);
    return kOk;
}

struct FigureOptions {
    std::optional<double> alpha;
    std::string grid;
    std::string format = "csv";
};

/// Total compensation N·m_i* of anonymized intermediation with noiseless
/// signals, over market sizes N.
inline std::vector<Record> figure_compensation(double alpha, const std::vector<double>& grid) {
    std::vector<Record> rows;
    for (double v : grid) {
        DataEnvironment e{as_count(v, "grid"), alpha, 0.0, 0.0};
        validate(e);
        const auto o = equilibrium_outcome(e, PolicySpec::anonymized());
        rows.push_back({{"N", static_cast<long long>(e.n_consumers)},
                        {"total_compensation", static_cast<double>(e.n_consumers) * o.consumer_payment}});
    }
    return rows;
}

/// Revenue gained from one more consumer per group, two symmetric groups
/// with var θ_j = var θ_ij = 0.5 and σ = 1; N is the group size.
inline std::vector<Record> figure_marginal(const std::vector<double>& grid) {
    auto revenues = [](std::size_t n) -> std::pair<double, double> {
        if (n == 0) return {0.0, 0.0};
        const auto r = segmentation_compare(GroupedEnvironment::symmetric(2, n, 0.5, 0.5, 1.0));
        return {r.revenue_pooled, r.revenue_grouped};
    };
    std::vector<Record> rows;
    for (double v : grid) {
        const std::size_t n = as_count(v, "grid");
        const auto [p1, g1] = revenues(n);
        const auto [p0, g0] = revenues(n - 1);
        rows.push_back({{"N", static_cast<long long>(n)},
                        {"marginal_pooled", p1 - p0},
                        {"marginal_grouped", g1 - g0}});
    }
    return rows;
}

/// Optimal added common noise against α at σ = 1, N = 2, β = 0.
inline std::vector<Record> figure_noise(const std::vector<double>& grid) {
    std::vector<Record> rows;
    for (double a : grid) {
        DataEnvironment e{2, a, 0.0, 1.0};
        validate(e);
        const auto o = optimize_noise(e);
        rows.push_back({{"alpha", a},
                        {"common_noise_var", o.common_noise_var},
                        {"revenue", o.revenue},
                        {"boundary", std::string(to_string(o.boundary))}});
    }
    return rows;
}

inline int cmd_figure(const std::string& name, const FigureOptions& opt, std::ostream& out) {
    std::vector<Record> rows;
    if (name == "compensation") {
        if (!opt.alpha) throw ValidationError("alpha", "the compensation figure requires --alpha");
        rows = figure_compensation(*opt.alpha, parse_grid(opt.grid.empty() ? "1:50:1" : opt.grid));
    } else if (name == "marginal") {
        rows = figure_marginal(parse_grid(opt.grid.empty() ? "1:30:1" : opt.grid));
    } else if (name == "noise") {
        rows = figure_noise(parse_grid(opt.grid.empty() ? "0.41:1:0.01" : opt.grid));
    } else {
        throw ValidationError("figure", "unknown figure '" + name +
                                            "' (expected compensation, marginal or noise)");
    }
    emit(out, opt.format, rows);
    return kOk;
}

inline int cmd_optimize_noise(const std::string& path, const std::string& format,
                              std::ostream& out) {
    const auto sc = load_scenario(path);
    if (sc.policy.kind == PolicyKind::Grouped)
        throw ValidationError("policy", "noise design needs a non-grouped environment");
    const auto o = optimize_noise(sc.env);
    Record r{{"n_consumers", static_cast<long long>(sc.env.n_consumers)},
             {"alpha", sc.env.alpha},
             {"beta", sc.env.beta},
             {"sigma", sc.env.sigma},
             {"common_noise_var", o.common_noise_var},
             {"idio_noise_var", o.idio_noise_var},
             {"revenue", o.revenue},
             {"revenue_at_zero", o.revenue_at_zero},
             {"boundary", std::string(to_string(o.boundary))},
             {"threshold", profitability_threshold(sc.env.n_consumers)}};
    emit(out, format, r);
    return kOk;
}

inline int cmd_segment(const std::string& path, const std::string& format, std::ostream& out) {
    const auto sc = load_scenario(path);
    if (sc.policy.kind != PolicyKind::Grouped)
        throw ValidationError("policy", "segment needs policy = grouped");
    emit(out, format, segmentation_record(*sc.policy.groups, sweep_bound(sc)));
    return kOk;
}

inline constexpr std::size_t kMinCheckDraws = 10'000;

inline int cmd_mc_check(const std::string& path, std::optional<std::size_t> draws_opt,
                        std::optional<std::uint64_t> seed_opt, std::ostream& out) {
    const auto sc = load_scenario(path);
    const std::size_t draws = draws_opt.value_or(sc.run.draws.value_or(1'000'000));
    const std::uint64_t seed = seed_opt.value_or(sc.run.seed.value_or(1));
    if (draws < kMinCheckDraws)
        throw ValidationError("draws", "mc-check needs at least " + std::to_string(kMinCheckDraws));

    const auto rep = simulate(sc.env, sc.policy, draws, seed);
    const auto pc = (sc.policy.kind == PolicyKind::NoSharing)
                        ? projection_check(build_observation(sc.env, sc.policy, Scope::IndividualOnly),
                                           draws, seed)
                        : projection_check(build_observation(sc.env, sc.policy, Scope::Full), draws,
                                           seed);

    bool ok = true;
    out << "quantity,estimate,se,analytic,z,status\n";
    for (const auto& [name, c] : rep.comparisons) {
        const auto& e = rep.estimates.at(name);
        const bool pass = std::abs(c.z) <= 4.0;
        ok = ok && pass;
        out << name << ',' << fmt(e.mean) << ',' << fmt(e.se) << ',' << fmt(c.analytic) << ','
            << fmt(c.z) << ',' << (pass ? "pass" : "fail") << '\n';
    }
    const bool pass = std::abs(pc.z) <= 4.0;
    ok = ok && pass;
    out << "projection_gain," << fmt(pc.empirical) << ',' << fmt(pc.se) << ',' << fmt(pc.analytic)
        << ',' << fmt(pc.z) << ',' << (pass ? "pass" : "fail") << '\n';
    out << "# draws=" << draws << " seed=" << seed << " shards=" << rep.shards
        << " result=" << (ok ? "pass" : "fail") << '\n';
    return ok ? kOk : kMcFailure;
}

/// Parses `args` (args[0] is the program name) and runs the chosen command.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Equilibrium outcomes of Gaussian data intermediation markets", "socialdata"};
    app.require_subcommand(1);

    std::string scenario, format, param, grid, figure_name;
    std::optional<std::size_t> draws;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;

    auto* eval = app.add_subcommand("eval", "Evaluate one scenario");
    eval->add_option("--scenario", scenario, "Scenario file")->required();
    eval->add_option("--out", format, "Output format (default json)")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* sweep = app.add_subcommand("sweep", "Sweep one environment parameter");
    sweep->add_option("--scenario", scenario, "Scenario file")->required();
    sweep->add_option("--param", param, "Parameter to sweep")->required();
    sweep->add_option("--grid", grid, "Comma list or start:stop:step")->required();
    sweep->add_option("--out", format, "Output format (default csv)")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* fig = app.add_subcommand("figure", "Emit a figure series");
    fig->add_option("name", figure_name, "compensation, marginal or noise")->required();
    fig->add_option("--alpha", alpha, "Correlation of fundamentals (compensation)");
    fig->add_option("--grid", grid, "Comma list or start:stop:step");
    fig->add_option("--out", format, "Output format (default csv)")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* opt = app.add_subcommand("optimize-noise", "Optimal added common noise");
    opt->add_option("--scenario", scenario, "Scenario file")->required();
    opt->add_option("--out", format, "Output format (default json)")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* seg = app.add_subcommand("segment", "Pooled against group-level anonymization");
    seg->add_option("--scenario", scenario, "Scenario file")->required();
    seg->add_option("--out", format, "Output format (default json)")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* mc = app.add_subcommand("mc-check", "Monte Carlo check of the closed forms");
    mc->add_option("--scenario", scenario, "Scenario file")->required();
    mc->add_option("--draws", draws, "Number of simulated markets");
    mc->add_option("--seed", seed, "64-bit seed");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    auto fmt_or = [&](const char* def) { return format.empty() ? std::string(def) : format; };
    try {
        if (eval->parsed()) return cmd_eval(scenario, fmt_or("json"), out);
        if (sweep->parsed()) return cmd_sweep(scenario, param, grid, fmt_or("csv"), out);
        if (fig->parsed()) return cmd_figure(figure_name, {alpha, grid, fmt_or("csv")}, out);
        if (opt->parsed()) return cmd_optimize_noise(scenario, fmt_or("json"), out);
        if (seg->parsed()) return cmd_segment(scenario, fmt_or("json"), out);
        if (mc->parsed()) return cmd_mc_check(scenario, draws, seed, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << '\n';
        return kNumerical;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::logic_error& e) {
        err << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kValidation;
}

}  // namespace socialdata::cli
