#pragma once

// Serialization of experiment results: comma-separated tables with a header
// row, JSON summaries, and a run manifest listing every file with its SHA-256
// digest. Floats are printed with 17 significant digits so that a table read
// back and rewritten is byte-identical.

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hystlat/analysis.hpp"
#include "hystlat/config.hpp"
#include "hystlat/errors.hpp"
#include "hystlat/experiments.hpp"
#include "hystlat/version.hpp"

namespace hystlat {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const Table&) const = default;
};

inline std::string render_table(const Table& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

inline Table parse_table(std::string_view text) {
    Table t;
    bool first = true;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::vector<std::string> cells;
        std::size_t c = 0;
        while (true) {
            const auto comma = line.find(',', c);
            cells.emplace_back(line.substr(c, comma == std::string_view::npos ? std::string_view::npos : comma - c));
            if (comma == std::string_view::npos) break;
            c = comma + 1;
        }
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Table read_table(const std::filesystem::path& path) { return parse_table(read_file(path)); }

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 digest failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

struct OutputFile {
    std::string name;  // relative to the output directory
    std::uintmax_t bytes = 0;
    std::string sha256;
};

struct RunManifest {
    json spec;
    std::string tool_version;
    double wall_clock_seconds = 0.0;
    std::vector<std::uint64_t> seeds;
    json integrator;
    std::vector<OutputFile> files;
    unsigned threads = 1;

    json to_json() const {
        json j;
        j["tool"] = kToolName;
        j["tool_version"] = tool_version;
        j["spec"] = spec;
        j["integrator"] = integrator;
        j["seeds"] = seeds;
        j["threads"] = threads;
        j["wall_clock_seconds"] = wall_clock_seconds;
        json files_json = json::array();
        for (const auto& f : files) files_json.push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
        j["files"] = files_json;
        return j;
    }
};

inline constexpr const char* kManifestName = "manifest.json";

/// Writes files into one directory. If anything fails, every file written so
/// far (and the directory, if this writer created it) is removed before the
/// IoError propagates.
class OutputWriter {
public:
    explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        if (!std::filesystem::exists(dir_, ec)) {
            if (!std::filesystem::create_directories(dir_, ec) || ec)
                throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
            created_dir_ = true;
        } else if (!std::filesystem::is_directory(dir_, ec)) {
            throw IoError(dir_.string() + " exists and is not a directory");
        }
    }

    OutputWriter(const OutputWriter&) = delete;
    OutputWriter& operator=(const OutputWriter&) = delete;

    ~OutputWriter() {
        if (!committed_) cleanup();
    }

    const OutputFile& write(const std::string& name, std::string_view content) {
        const auto path = dir_ / name;
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out) fail("cannot open " + path.string() + " for writing");
            written_.push_back(path);
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            out.close();
            if (!out) fail("error writing " + path.string());
        }
        files_.push_back({name, content.size(), sha256_hex(content)});
        return files_.back();
    }

    const std::vector<OutputFile>& files() const { return files_; }
    const std::filesystem::path& dir() const { return dir_; }

    void commit() { committed_ = true; }

    [[noreturn]] void fail(const std::string& what) {
        cleanup();
        throw IoError(what);
    }

private:
    void cleanup() noexcept {
        std::error_code ec;
        for (const auto& p : written_) std::filesystem::remove(p, ec);
        written_.clear();
        if (created_dir_) std::filesystem::remove(dir_, ec);  // only succeeds when empty
    }

    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
    std::vector<OutputFile> files_;
    bool created_dir_ = false;
    bool committed_ = false;
};

// ---------------------------------------------------------------------------
// Tables

/// `t, x_1..x_N` (or another column prefix) from a trajectory's displacements.
inline Table displacement_table(const Trajectory& traj, std::size_t first_site = 1, const char* prefix = "x_") {
    Table t;
    t.header.push_back("t");
    const std::size_t n = traj.empty() ? traj.metadata.params.n_sites : traj.states.front().size();
    for (std::size_t j = 0; j < n; ++j) t.header.push_back(prefix + std::to_string(first_site + j));
    for (std::size_t i = 0; i < traj.size(); ++i) {
        std::vector<std::string> row{format_double(traj.sample_times[i])};
        for (double x : traj.states[i].positions) row.push_back(format_double(x));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Table energy_table(const EnergyMap& map) {
    Table t;
    t.header.push_back("t");
    const std::size_t n = map.energies.empty() ? 0 : map.energies.front().size();
    for (std::size_t j = 0; j < n; ++j) t.header.push_back("e_" + std::to_string(j + 1));
    for (std::size_t i = 0; i < map.energies.size(); ++i) {
        std::vector<std::string> row{format_double(map.sample_times[i])};
        for (double e : map.energies[i]) row.push_back(format_double(e));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Table snapshot_table(const std::vector<LatticeState>& snaps) {
    Table t;
    t.header.push_back("t");
    const std::size_t n = snaps.empty() ? 0 : snaps.front().size();
    for (std::size_t j = 0; j < n; ++j) t.header.push_back("x_" + std::to_string(j + 1));
    for (const auto& s : snaps) {
        std::vector<std::string> row{format_double(s.time)};
        for (double x : s.positions) row.push_back(format_double(x));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Table sweep_table(const SweepResult& r) {
    Table t{{"f", "D_f"}, {}};
    for (std::size_t i = 0; i < r.amplitudes.size(); ++i)
        t.rows.push_back({format_double(r.amplitudes[i]), format_double(r.d_values[i])});
    return t;
}

inline json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

inline json sweep_summary(const SweepResult& r) {
    return {{"model", std::string(to_string(r.model))},
            {"omega", r.omega},
            {"points", r.amplitudes.size()},
            {"f_critical", optional_number(r.f_critical)}};
}

inline Table fcr_curve_table(const FcrCurveResult& r) {
    Table t{{"omega", "f_cr", "detected"}, {}};
    for (std::size_t i = 0; i < r.omegas.size(); ++i)
        t.rows.push_back({format_double(r.omegas[i]), format_double(r.f_critical[i].value_or(std::nan(""))),
                          r.f_critical[i] ? "1" : "0"});
    return t;
}

inline Table ensemble_table(const EnsembleResult& r, std::uint64_t seed_base) {
    Table t{{"realization", "seed", "log10_Df", "supra_flag"}, {}};
    for (const auto& x : r.realizations)
        t.rows.push_back({std::to_string(x.seed - seed_base), std::to_string(x.seed), format_double(std::log10(x.d_value)),
                          x.supratransmitting ? "1" : "0"});
    return t;
}

inline json ensemble_summary(const EnsembleResult& r) {
    std::size_t hits = 0;
    for (const auto& x : r.realizations) hits += x.supratransmitting ? 1 : 0;
    const auto [lo, hi] = wilson_interval(hits, r.realizations.size());
    return {{"probability", r.probability},
            {"supratransmitting", hits},
            {"realizations", r.realizations.size()},
            {"failed", r.failed},
            {"failed_seeds", r.failed_seeds},
            {"log10_cutoff", r.classify_cutoff},
            {"wilson95", {lo, hi}}};
}

inline Table ecdf_table(const EmpiricalCdf& cdf) {
    Table t{{"f_cr", "cum_fraction"}, {}};
    for (const auto& [x, p] : cdf.steps()) t.rows.push_back({format_double(x), format_double(p)});
    return t;
}

inline Table fcr_samples_table(const FcrDistributionResult& r, std::uint64_t seed_base) {
    Table t{{"realization", "seed", "f_cr", "censored"}, {}};
    for (const auto& s : r.samples)
        t.rows.push_back({std::to_string(s.seed - seed_base), std::to_string(s.seed), format_double(s.f_critical),
                          s.censored ? "1" : "0"});
    return t;
}

inline Table envelope_table(const std::vector<std::pair<double, double>>& env) {
    Table t{{"t_window", "max_abs_x"}, {}};
    for (const auto& [w, m] : env) t.rows.push_back({format_double(w), format_double(m)});
    return t;
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

/// Window length of the observed-site displacement envelope written for breather runs.
inline constexpr double kEnvelopeWindow = 5.0;

namespace detail {

inline std::vector<std::uint64_t> seeds_of(const ExperimentSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::vector<std::uint64_t> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, WavePacketSpec>) {
                return {s.seed};
            } else if constexpr (std::is_same_v<S, StochasticEnsembleSpec> || std::is_same_v<S, FcrDistributionSpec>) {
                std::vector<std::uint64_t> v;
                for (std::size_t r = 0; r < s.realizations; ++r) v.push_back(s.seed_base + r);
                return v;
            } else if constexpr (std::is_same_v<S, SingleSpec>) {
                if (is_stochastic(s.drive)) return {s.sde.seed};
                return {};
            } else {
                return {};
            }
        },
        spec);
}

inline json integrator_of(const ExperimentSpec& spec) {
    return std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, StochasticEnsembleSpec> || std::is_same_v<S, FcrDistributionSpec>)
                return {{"method", "stochastic-heun"}, {"config", to_json(s.sde, false)}};
            else if constexpr (std::is_same_v<S, SingleSpec>) {
                if (is_stochastic(s.drive)) return {{"method", "stochastic-heun"}, {"config", to_json(s.sde, true)}};
                return {{"method", "tsit5"}, {"config", to_json(s.integrator)}};
            } else
                return {{"method", "tsit5"}, {"config", to_json(s.integrator)}};
        },
        spec);
}

inline std::uint64_t seed_base_of(const ExperimentSpec& spec) {
    if (const auto* e = std::get_if<StochasticEnsembleSpec>(&spec)) return e->seed_base;
    if (const auto* d = std::get_if<FcrDistributionSpec>(&spec)) return d->seed_base;
    return 0;
}

inline void write_result_files(OutputWriter& w, const ExperimentSpec& spec, const ExperimentResult& result) {
    std::visit(
        [&](const auto& r) {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, SingleResult>) {
                w.write("trajectory.csv", render_table(displacement_table(r.trajectory)));
                w.write("energy.csv", render_table(energy_table(r.energy)));
                if (!r.energy.snapshots.empty()) w.write("snapshots.csv", render_table(snapshot_table(r.energy.snapshots)));
            } else if constexpr (std::is_same_v<R, SweepResult>) {
                w.write("sweep.csv", render_table(sweep_table(r)));
                w.write("summary.json", dump_json(sweep_summary(r)));
            } else if constexpr (std::is_same_v<R, FcrCurveResult>) {
                w.write("fcr_curve.csv", render_table(fcr_curve_table(r)));
                for (std::size_t i = 0; i < r.sweeps.size(); ++i) {
                    char name[32];
                    std::snprintf(name, sizeof name, "sweep_%02zu.csv", i + 1);
                    w.write(name, render_table(sweep_table(r.sweeps[i])));
                }
                json s;
                s["omegas"] = r.omegas;
                json fc = json::array();
                for (const auto& f : r.f_critical) fc.push_back(optional_number(f));
                s["f_critical"] = fc;
                s["fit"] = r.fit ? json{{"slope", r.fit->slope},
                                        {"intercept", r.fit->intercept},
                                        {"residual_rms", r.fit->residual_rms}}
                                 : json(nullptr);
                s["warnings"] = r.warnings;
                w.write("summary.json", dump_json(s));
            } else if constexpr (std::is_same_v<R, EnergyMap>) {
                w.write("energy.csv", render_table(energy_table(r)));
                if (!r.snapshots.empty()) w.write("snapshots.csv", render_table(snapshot_table(r.snapshots)));
            } else if constexpr (std::is_same_v<R, BreatherResult>) {
                w.write("trajectory.csv", render_table(displacement_table(r.trajectory)));
                w.write("observed.csv", render_table(displacement_table(r.observed, r.observed_first)));
                w.write("energy.csv", render_table(energy_table(r.energy)));
                const auto env = windowed_envelope(r.observed, kEnvelopeWindow);
                w.write("envelope.csv", render_table(envelope_table(env)));
                const auto es = summarize_envelope(env);
                json maxima = json::array();
                for (const auto& [t, m] : es.maxima) maxima.push_back({t, m});
                w.write("summary.json", dump_json({{"observed_sites", {r.observed_first,
                                                                      r.observed_first + (r.observed.empty() ? 0 : r.observed.states.front().size()) - 1}},
                                                   {"envelope_window", kEnvelopeWindow},
                                                   {"envelope_peak", es.peak},
                                                   {"envelope_peak_time", es.peak_time},
                                                   {"envelope_maxima", maxima},
                                                   {"maxima_above_half_peak", es.count_above(0.5)}}));
            } else if constexpr (std::is_same_v<R, EnsembleResult>) {
                w.write("ensemble.csv", render_table(ensemble_table(r, seed_base_of(spec))));
                w.write("summary.json", dump_json(ensemble_summary(r)));
            } else {
                w.write("fcr_samples.csv", render_table(fcr_samples_table(r, seed_base_of(spec))));
                w.write("ecdf.csv", render_table(ecdf_table(r.cdf)));
                std::size_t censored = 0;
                for (const auto& s : r.samples) censored += s.censored ? 1 : 0;
                w.write("summary.json", dump_json({{"realizations", r.samples.size()},
                                                   {"censored", censored},
                                                   {"support_width", r.cdf.support_width()}}));
            }
        },
        result);
}

}  // namespace detail

struct WriteOptions {
    double wall_clock_seconds = 0.0;
    unsigned threads = 1;
};

/// Writes the result tables and summaries into `out_dir`, then the manifest.
/// On I/O failure every file written by this call is removed and IoError is thrown.
inline RunManifest write_outputs(const ExperimentSpec& spec, const ExperimentResult& result,
                                 const std::filesystem::path& out_dir, const WriteOptions& opts = {}) {
    OutputWriter w(out_dir);
    RunManifest m;
    try {
        detail::write_result_files(w, spec, result);
        m.spec = spec_to_json(spec);
        m.tool_version = kVersion;
        m.wall_clock_seconds = opts.wall_clock_seconds;
        m.seeds = detail::seeds_of(spec);
        m.integrator = detail::integrator_of(spec);
        m.threads = opts.threads;
        m.files = w.files();
        w.write(kManifestName, dump_json(m.to_json()));
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        w.fail(std::string("writing outputs failed: ") + e.what());
    }
    w.commit();
    return m;
}

/// The spec echoed in a manifest, for re-running a previous run.
inline ExperimentSpec spec_from_manifest(const json& manifest) {
    if (!manifest.is_object() || !manifest.contains("spec")) throw ValidationError("manifest has no \"spec\" entry");
    return spec_from_json(manifest.at("spec"));
}

}  // namespace hystlat
