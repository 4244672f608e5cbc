#pragma once

// JSON experiment configuration. Absent keys take the defaults of the
// corresponding spec struct; unknown keys are rejected. `--set a.b=v` style
// overrides are applied to the JSON tree before conversion.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "hystlat/errors.hpp"
#include "hystlat/experiments.hpp"

namespace hystlat {

using json = nlohmann::ordered_json;

enum class ExperimentKind { single, sweep, fcr_curve, wavepacket, breather, ensemble, fcr_dist };

inline std::string_view to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::single: return "single";
        case ExperimentKind::sweep: return "sweep";
        case ExperimentKind::fcr_curve: return "fcr-curve";
        case ExperimentKind::wavepacket: return "wavepacket";
        case ExperimentKind::breather: return "breather";
        case ExperimentKind::ensemble: return "ensemble";
        case ExperimentKind::fcr_dist: return "fcr-dist";
    }
    return "?";
}

inline ExperimentKind experiment_kind_from_string(std::string_view s) {
    for (auto k : {ExperimentKind::single, ExperimentKind::sweep, ExperimentKind::fcr_curve,
                   ExperimentKind::wavepacket, ExperimentKind::breather, ExperimentKind::ensemble,
                   ExperimentKind::fcr_dist})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown experiment \"" + std::string(s) +
                          "\" (expected single, sweep, fcr-curve, wavepacket, breather, ensemble or fcr-dist)");
}

inline ExperimentKind kind_of(const ExperimentSpec& spec) {
    return static_cast<ExperimentKind>(spec.index());
}

namespace detail {

inline std::string join_path(std::string_view parent, std::string_view key) {
    return parent.empty() ? std::string(key) : std::string(parent) + "." + std::string(key);
}

inline void expect_object(const json& j, std::string_view where) {
    if (!j.is_object()) throw ValidationError((where.empty() ? std::string("config") : std::string(where)) +
                                              ": expected an object");
}

inline void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    expect_object(obj, where);
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ValidationError("unknown key \"" + join_path(where, item.key()) + "\"");
    }
}

inline void read(const json& obj, std::string_view where, const char* key, double& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ValidationError(join_path(where, key) + ": expected a number");
    out = v.get<double>();
}

// Programmatically built trees hold signed integers; parsed text holds unsigned ones.
inline bool is_non_negative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

template <class U>
    requires std::is_unsigned_v<U> && (!std::is_same_v<U, bool>)
void read(const json& obj, std::string_view where, const char* key, U& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!is_non_negative_integer(v)) throw ValidationError(join_path(where, key) + ": expected a non-negative integer");
    out = v.get<U>();
}

inline void read(const json& obj, std::string_view where, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw ValidationError(join_path(where, key) + ": expected true or false");
    out = v.get<bool>();
}

inline std::string read_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw ValidationError(where + ": expected a string");
    return v.get<std::string>();
}

inline void read(const json& obj, std::string_view where, const char* key, ModelKind& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    // A bare 1 or 2 is accepted as well as "I"/"II".
    if (is_non_negative_integer(v)) {
        out = model_from_string(std::to_string(v.get<std::uint64_t>()));
        return;
    }
    out = model_from_string(read_string(v, join_path(where, key)));
}

/// A grid is either an explicit list or {"start", "stop", "step"}.
inline void read_grid(const json& obj, std::string_view where, const char* key, std::vector<double>& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string path = join_path(where, key);
    if (v.is_array()) {
        std::vector<double> g;
        for (const auto& e : v) {
            if (!e.is_number()) throw ValidationError(path + ": grid entries must be numbers");
            g.push_back(e.get<double>());
        }
        out = std::move(g);
        return;
    }
    if (!v.is_object()) throw ValidationError(path + ": expected a list or {start, stop, step}");
    check_keys(v, path, {"start", "stop", "step"});
    for (const char* k : {"start", "stop", "step"})
        if (!v.contains(k)) throw ValidationError(join_path(path, k) + ": missing");
    double start = 0, stop = 0, step = 0;
    read(v, path, "start", start);
    read(v, path, "stop", stop);
    read(v, path, "step", step);
    out = make_grid(start, stop, step);
}

inline void read_times(const json& obj, std::string_view where, const char* key, std::vector<double>& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_array()) throw ValidationError(join_path(where, key) + ": expected a list of times");
    std::vector<double> t;
    for (const auto& e : v) {
        if (!e.is_number()) throw ValidationError(join_path(where, key) + ": entries must be numbers");
        t.push_back(e.get<double>());
    }
    out = std::move(t);
}

inline void read(const json& obj, std::string_view where, const char* key, LatticeParams& p) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string path = join_path(where, key);
    check_keys(v, path, {"n_sites", "mass", "c", "k", "epsilon", "tau"});
    read(v, path, "n_sites", p.n_sites);
    read(v, path, "mass", p.mass);
    read(v, path, "c", p.damping);
    read(v, path, "k", p.stiffness);
    read(v, path, "epsilon", p.nonlinearity);
    read(v, path, "tau", p.sign_sharpness);
}

inline void read(const json& obj, std::string_view where, const char* key, IntegratorConfig& c) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string path = join_path(where, key);
    check_keys(v, path, {"rel_tol", "abs_tol", "initial_step", "max_step", "sample_interval", "t_end"});
    read(v, path, "rel_tol", c.rel_tol);
    read(v, path, "abs_tol", c.abs_tol);
    read(v, path, "initial_step", c.initial_step);
    read(v, path, "max_step", c.max_step);
    read(v, path, "sample_interval", c.sample_interval);
    read(v, path, "t_end", c.t_end);
}

/// `with_seed` is false for ensembles, whose per-realization seeds come from seed_base.
inline void read(const json& obj, std::string_view where, const char* key, SdeConfig& c, bool with_seed) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string path = join_path(where, key);
    if (with_seed)
        check_keys(v, path, {"step", "t_end", "seed", "sample_interval", "noise_placement"});
    else
        check_keys(v, path, {"step", "t_end", "sample_interval", "noise_placement"});
    read(v, path, "step", c.step);
    read(v, path, "t_end", c.t_end);
    if (with_seed) read(v, path, "seed", c.seed);
    read(v, path, "sample_interval", c.sample_interval);
    if (v.contains("noise_placement"))
        c.noise_placement =
            noise_placement_from_string(read_string(v.at("noise_placement"), join_path(path, "noise_placement")));
}

inline void read(const json& obj, std::string_view where, const char* key, CriterionConfig& c) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string path = join_path(where, key);
    check_keys(v, path, {"delta_threshold", "transient_skip"});
    read(v, path, "delta_threshold", c.delta_threshold);
    read(v, path, "transient_skip", c.transient_skip);
}

inline BoundaryDrive read_drive(const json& v, const std::string& path) {
    expect_object(v, path);
    if (!v.contains("type")) throw ValidationError(path + ".type: missing");
    const std::string type = read_string(v.at("type"), path + ".type");
    if (type == "clamped") {
        check_keys(v, path, {"type"});
        return Clamped{};
    }
    if (type == "stochastic") {
        check_keys(v, path, {"type", "f", "omega", "sigma"});
        StochasticSinusoidal d;
        read(v, path, "f", d.amplitude);
        read(v, path, "omega", d.frequency);
        read(v, path, "sigma", d.noise_intensity);
        return d;
    }
    check_keys(v, path, {"type", "f", "omega"});
    double f = 0.0, w = 1.0;
    read(v, path, "f", f);
    read(v, path, "omega", w);
    if (type == "sinusoidal") return Sinusoidal{f, w};
    if (type == "impulsive") return Impulsive{f, w};
    throw ValidationError(path + ".type: expected sinusoidal, impulsive, stochastic or clamped");
}

inline json drive_to_json(const BoundaryDrive& drive) {
    return std::visit(
        [](const auto& d) -> json {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, Sinusoidal>)
                return {{"type", "sinusoidal"}, {"f", d.amplitude}, {"omega", d.frequency}};
            else if constexpr (std::is_same_v<D, Impulsive>)
                return {{"type", "impulsive"}, {"f", d.amplitude}, {"omega", d.frequency}};
            else if constexpr (std::is_same_v<D, StochasticSinusoidal>)
                return {{"type", "stochastic"}, {"f", d.amplitude}, {"omega", d.frequency}, {"sigma", d.noise_intensity}};
            else
                return {{"type", "clamped"}};
        },
        drive);
}

inline json to_json(const LatticeParams& p) {
    return {{"n_sites", p.n_sites}, {"mass", p.mass},         {"c", p.damping},
            {"k", p.stiffness},     {"epsilon", p.nonlinearity}, {"tau", p.sign_sharpness}};
}

inline json to_json(const IntegratorConfig& c) {
    return {{"rel_tol", c.rel_tol},   {"abs_tol", c.abs_tol},
            {"initial_step", c.initial_step}, {"max_step", c.max_step},
            {"sample_interval", c.sample_interval}, {"t_end", c.t_end}};
}

inline json to_json(const SdeConfig& c, bool with_seed) {
    json j = {{"step", c.step}, {"t_end", c.t_end}};
    if (with_seed) j["seed"] = c.seed;
    j["sample_interval"] = c.sample_interval;
    j["noise_placement"] = std::string(to_string(c.noise_placement));
    return j;
}

inline json to_json(const CriterionConfig& c) {
    return {{"delta_threshold", c.delta_threshold}, {"transient_skip", c.transient_skip}};
}

inline std::string line_context(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Parses JSON text; syntax errors are reported with line and column.
inline json parse_json_text(std::string_view text, std::string_view source = "config") {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character.
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        std::string msg = e.what();
        if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
        throw ValidationError(std::string(source) + ": " + detail::line_context(text, at) + ": " + msg);
    }
}

inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error reading config file " + path.string());
    return parse_json_text(ss.str(), path.string());
}

/// Applies one "dotted.key=value" override. The value is parsed as JSON when
/// possible (numbers, booleans, lists, objects) and taken as a string otherwise.
inline void apply_override(json& root, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ValidationError("override \"" + std::string(assignment) + "\" must have the form key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    if (!root.is_object()) root = json::object();
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ValidationError("override key \"" + key + "\" has an empty component");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        json& child = (*node)[part];
        if (child.is_null()) child = json::object();
        if (!child.is_object())
            throw ValidationError("override key \"" + key + "\": \"" + part + "\" is not an object");
        node = &child;
        start = dot + 1;
    }
}

/// Converts a configuration tree into a validated spec. The experiment kind
/// comes from the "experiment" key or from `kind`; when both are present
/// they must agree.
inline ExperimentSpec spec_from_json(const json& j, std::optional<ExperimentKind> kind = std::nullopt) {
    using namespace detail;
    expect_object(j, "");
    if (j.contains("experiment")) {
        const auto named = experiment_kind_from_string(read_string(j.at("experiment"), "experiment"));
        if (kind && *kind != named)
            throw ValidationError("config declares experiment \"" + std::string(to_string(named)) +
                                  "\" but \"" + std::string(to_string(*kind)) + "\" was requested");
        kind = named;
    }
    if (!kind) throw ValidationError("experiment: missing (set it in the config or pick a subcommand)");

    const std::string_view root;
    ExperimentSpec out;
    switch (*kind) {
        case ExperimentKind::single: {
            check_keys(j, root, {"experiment", "model", "params", "drive", "integrator", "sde", "snapshot_times"});
            SingleSpec s;
            read(j, root, "model", s.model);
            read(j, root, "params", s.params);
            if (j.contains("drive")) s.drive = read_drive(j.at("drive"), "drive");
            read(j, root, "integrator", s.integrator);
            read(j, root, "sde", s.sde, true);
            read_times(j, root, "snapshot_times", s.snapshot_times);
            out = s;
            break;
        }
        case ExperimentKind::sweep: {
            check_keys(j, root,
                       {"experiment", "model", "params", "omega", "f_grid", "criterion", "integrator", "stop_at_first"});
            SupraSweepSpec s;
            read(j, root, "model", s.model);
            read(j, root, "params", s.params);
            read(j, root, "omega", s.omega);
            read_grid(j, root, "f_grid", s.f_grid);
            read(j, root, "criterion", s.criterion);
            read(j, root, "integrator", s.integrator);
            read(j, root, "stop_at_first", s.stop_at_first);
            out = s;
            break;
        }
        case ExperimentKind::fcr_curve: {
            check_keys(j, root, {"experiment", "model", "params", "omega_grid", "f_grid", "criterion", "integrator"});
            FcrCurveSpec s;
            read(j, root, "model", s.model);
            read(j, root, "params", s.params);
            read_grid(j, root, "omega_grid", s.omega_grid);
            read_grid(j, root, "f_grid", s.f_grid);
            read(j, root, "criterion", s.criterion);
            read(j, root, "integrator", s.integrator);
            out = s;
            break;
        }
        case ExperimentKind::wavepacket: {
            check_keys(j, root, {"experiment", "model", "params", "drive", "packet_length", "packet_amplitude", "seed",
                                 "integrator", "snapshot_times"});
            WavePacketSpec s;
            read(j, root, "model", s.model);
            read(j, root, "params", s.params);
            if (j.contains("drive")) s.drive = read_drive(j.at("drive"), "drive");
            read(j, root, "packet_length", s.packet_length);
            read(j, root, "packet_amplitude", s.packet_amplitude);
            read(j, root, "seed", s.seed);
            read(j, root, "integrator", s.integrator);
            read_times(j, root, "snapshot_times", s.snapshot_times);
            out = s;
            break;
        }
        case ExperimentKind::breather: {
            check_keys(j, root, {"experiment", "model", "params", "drive", "observed_sites", "integrator"});
            BreatherSpec s;
            read(j, root, "model", s.model);
            read(j, root, "params", s.params);
            if (j.contains("drive")) {
                const auto d = read_drive(j.at("drive"), "drive");
                if (!std::holds_alternative<Impulsive>(d)) throw ValidationError("drive.type: breather requires impulsive");
                s.drive = std::get<Impulsive>(d);
            }
            if (j.contains("observed_sites")) {
                const auto& r = j.at("observed_sites");
                if (!r.is_array() || r.size() != 2 || !is_non_negative_integer(r[0]) || !is_non_negative_integer(r[1]))
                    throw ValidationError("observed_sites: expected [first, last] (1-based site indices)");
                s.observed_first = r[0].get<std::size_t>();
                s.observed_last = r[1].get<std::size_t>();
            }
            read(j, root, "integrator", s.integrator);
            out = s;
            break;
        }
        case ExperimentKind::ensemble: {
            check_keys(j, root, {"experiment", "model", "params", "f", "omega", "sigma", "realizations", "seed_base",
                                 "sde", "criterion", "log10_cutoff"});
            StochasticEnsembleSpec s;
            read(j, root, "model", s.model);
            read(j, root, "params", s.params);
            read(j, root, "f", s.amplitude);
            read(j, root, "omega", s.omega);
            read(j, root, "sigma", s.sigma);
            read(j, root, "realizations", s.realizations);
            read(j, root, "seed_base", s.seed_base);
            read(j, root, "sde", s.sde, false);
            read(j, root, "criterion", s.criterion);
            read(j, root, "log10_cutoff", s.log10_cutoff);
            out = s;
            break;
        }
        case ExperimentKind::fcr_dist: {
            check_keys(j, root, {"experiment", "model", "params", "omega", "sigma", "f_grid", "realizations",
                                 "seed_base", "sde", "criterion", "log10_cutoff"});
            FcrDistributionSpec s;
            read(j, root, "model", s.model);
            read(j, root, "params", s.params);
            read(j, root, "omega", s.omega);
            read(j, root, "sigma", s.sigma);
            read_grid(j, root, "f_grid", s.f_grid);
            read(j, root, "realizations", s.realizations);
            read(j, root, "seed_base", s.seed_base);
            read(j, root, "sde", s.sde, false);
            read(j, root, "criterion", s.criterion);
            read(j, root, "log10_cutoff", s.log10_cutoff);
            out = s;
            break;
        }
    }
    validate(out);
    return out;
}

/// Fully materialized configuration; spec_from_json(spec_to_json(s)) == s.
inline json spec_to_json(const ExperimentSpec& spec) {
    using namespace detail;
    json j;
    j["experiment"] = std::string(to_string(kind_of(spec)));
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            j["model"] = std::string(to_string(s.model));
            j["params"] = to_json(s.params);
            if constexpr (std::is_same_v<S, SingleSpec>) {
                j["drive"] = drive_to_json(s.drive);
                j["integrator"] = to_json(s.integrator);
                j["sde"] = to_json(s.sde, true);
                j["snapshot_times"] = s.snapshot_times;
            } else if constexpr (std::is_same_v<S, SupraSweepSpec>) {
                j["omega"] = s.omega;
                j["f_grid"] = s.f_grid;
                j["criterion"] = to_json(s.criterion);
                j["integrator"] = to_json(s.integrator);
                j["stop_at_first"] = s.stop_at_first;
            } else if constexpr (std::is_same_v<S, FcrCurveSpec>) {
                j["omega_grid"] = s.omega_grid;
                j["f_grid"] = s.f_grid;
                j["criterion"] = to_json(s.criterion);
                j["integrator"] = to_json(s.integrator);
            } else if constexpr (std::is_same_v<S, WavePacketSpec>) {
                j["drive"] = drive_to_json(s.drive);
                j["packet_length"] = s.packet_length;
                j["packet_amplitude"] = s.packet_amplitude;
                j["seed"] = s.seed;
                j["integrator"] = to_json(s.integrator);
                j["snapshot_times"] = s.snapshot_times;
            } else if constexpr (std::is_same_v<S, BreatherSpec>) {
                j["drive"] = drive_to_json(s.drive);
                j["observed_sites"] = {s.observed_first, s.observed_last};
                j["integrator"] = to_json(s.integrator);
            } else if constexpr (std::is_same_v<S, StochasticEnsembleSpec>) {
                j["f"] = s.amplitude;
                j["omega"] = s.omega;
                j["sigma"] = s.sigma;
                j["realizations"] = s.realizations;
                j["seed_base"] = s.seed_base;
                j["sde"] = to_json(s.sde, false);
                j["criterion"] = to_json(s.criterion);
                j["log10_cutoff"] = s.log10_cutoff;
            } else {
                j["omega"] = s.omega;
                j["sigma"] = s.sigma;
                j["f_grid"] = s.f_grid;
                j["realizations"] = s.realizations;
                j["seed_base"] = s.seed_base;
                j["sde"] = to_json(s.sde, false);
                j["criterion"] = to_json(s.criterion);
                j["log10_cutoff"] = s.log10_cutoff;
            }
        },
        spec);
    return j;
}

inline ExperimentSpec parse_config(const json& base, const std::vector<std::string>& overrides,
                                   std::optional<ExperimentKind> kind = std::nullopt) {
    json j = base.is_null() ? json::object() : base;
    for (const auto& o : overrides) apply_override(j, o);
    return spec_from_json(j, kind);
}

inline ExperimentSpec parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {},
                                   std::optional<ExperimentKind> kind = std::nullopt) {
    return parse_config(load_json_file(path), overrides, kind);
}

/// Seeds the experiment's random source. Returns false when the experiment
/// has none (deterministic drives).
inline bool apply_seed(ExperimentSpec& spec, std::uint64_t seed) {
    return std::visit(
        [&](auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, WavePacketSpec>) {
                s.seed = seed;
                return true;
            } else if constexpr (std::is_same_v<S, StochasticEnsembleSpec> || std::is_same_v<S, FcrDistributionSpec>) {
                s.seed_base = seed;
                return true;
            } else if constexpr (std::is_same_v<S, SingleSpec>) {
                if (!is_stochastic(s.drive)) return false;
                s.sde.seed = seed;
                return true;
            } else {
                return false;
            }
        },
        spec);
}

}  // namespace hystlat
