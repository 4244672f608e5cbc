// hystlat: run lattice experiments from a config file, overrides or a bundled figure.
//
//   hystlat sweep --config sweep.json --out results/
//   hystlat ensemble --set realizations=50 --set sigma=0.2 --seed 7 --threads 4
//   hystlat --figure 5 --out fig5/
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
// blow-up, 4 I/O failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hystlat/hystlat.hpp"

namespace fs = std::filesystem;
using namespace hystlat;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kInvalid = 2, kBlowUp = 3, kIo = 4 };

struct Options {
    std::optional<std::string> config;
    std::vector<std::string> overrides;
    std::string out = "hystlat_out";
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::optional<int> figure;
    bool dry_run = false;
};

void print_summary(const ExperimentResult& result) {
    std::visit(
        [](const auto& r) {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, SweepResult>) {
                if (r.f_critical)
                    std::printf("f_critical = %s\n", format_double(*r.f_critical).c_str());
                else
                    std::printf("f_critical not detected on the grid\n");
            } else if constexpr (std::is_same_v<R, FcrCurveResult>) {
                for (std::size_t i = 0; i < r.omegas.size(); ++i)
                    std::printf("omega = %g  f_cr = %s\n", r.omegas[i],
                                r.f_critical[i] ? format_double(*r.f_critical[i]).c_str() : "absent");
                if (r.fit) std::printf("slope = %.4f  intercept = %.4f\n", r.fit->slope, r.fit->intercept);
                for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
            } else if constexpr (std::is_same_v<R, EnsembleResult>) {
                std::printf("probability = %.4f  (%zu realizations, %zu failed)\n", r.probability,
                            r.realizations.size(), r.failed);
            } else if constexpr (std::is_same_v<R, FcrDistributionResult>) {
                std::size_t censored = 0;
                for (const auto& s : r.samples) censored += s.censored ? 1 : 0;
                std::printf("f_cr samples = %zu  censored = %zu  support width = %g\n", r.samples.size(), censored,
                            r.cdf.support_width());
            } else if constexpr (std::is_same_v<R, EnergyMap>) {
                std::printf("energy map: %zu samples, %zu snapshots\n", r.sample_times.size(), r.snapshots.size());
            } else {
                std::printf("trajectory: %zu samples\n", r.trajectory.size());
            }
        },
        result);
}

void run_one(ExperimentSpec spec, const Options& opts, const fs::path& out_dir) {
    if (opts.seed && !apply_seed(spec, *opts.seed))
        std::fprintf(stderr, "note: --seed ignored, %s has no random input\n", std::string(to_string(kind_of(spec))).c_str());
    if (opts.dry_run) {
        std::cout << spec_to_json(spec).dump(2) << "\n";
        return;
    }
    RunOptions run;
    run.threads = opts.threads == 0 ? default_thread_count() : opts.threads;
    const auto start = std::chrono::steady_clock::now();
    const ExperimentResult result = run_experiment(spec, run);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    print_summary(result);
    write_outputs(spec, result, out_dir, {seconds, run.threads});
    std::printf("wrote %s\n", (out_dir / kManifestName).string().c_str());
}

json load_base_config(const fs::path& path) {
    json j = load_json_file(path);
    // A run manifest carries the materialized spec of the run it describes.
    if (j.is_object() && j.contains("spec") && j.contains("files")) return j.at("spec");
    return j;
}

int run(const Options& opts, std::optional<ExperimentKind> kind) {
    if (opts.figure) {
        if (opts.config) throw ValidationError("--figure and --config cannot be combined");
        const auto runs = bundled_figure(*opts.figure);
        for (const auto& r : runs) {
            const fs::path dir = runs.size() == 1 ? fs::path(opts.out) : fs::path(opts.out) / r.name;
            std::fprintf(stderr, "figure %d: %s\n", *opts.figure, r.name.c_str());
            run_one(parse_config(r.config, opts.overrides, kind), opts, dir);
        }
        return kOk;
    }
    const json base = opts.config ? load_base_config(*opts.config) : json::object();
    run_one(parse_config(base, opts.overrides, kind), opts, opts.out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driven nonlinear lattices with hysteretic damping: supratransmission, wave packets, "
                 "stochastic forcing and breathers."};
    app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
    app.fallthrough();
    app.require_subcommand(0, 1);

    Options opts;
    app.add_option("--config", opts.config, "JSON config file (a run manifest is accepted too)");
    app.add_option("--set", opts.overrides, "Override a config key, e.g. --set params.c=0.1 (repeatable)")
        ->take_all()
        ->allow_extra_args(false);
    app.add_option("--out", opts.out, "Output directory")->capture_default_str();
    app.add_option("--seed", opts.seed, "Seed (wavepacket seed, ensemble seed_base, or single stochastic run)");
    app.add_option("--threads", opts.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    app.add_option("--figure", opts.figure, "Run the bundled configuration(s) for figure 1-14")
        ->check(CLI::Range(1, kFigureCount));
    app.add_flag("--dry-run", opts.dry_run, "Print the fully materialized spec and exit");

    const std::pair<const char*, const char*> commands[] = {
        {"single", "One trajectory with energy map"},
        {"sweep", "Amplitude sweep and f_cr detection"},
        {"fcr-curve", "f_cr over a frequency grid with a linear fit"},
        {"wavepacket", "Spreading of a random central packet"},
        {"breather", "Half-sine impulse at the driven end"},
        {"ensemble", "Stochastic forcing: supratransmission probability"},
        {"fcr-dist", "Per-realization f_cr under fixed noise paths"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalid;
    }

    std::optional<ExperimentKind> kind;
    if (!app.get_subcommands().empty()) kind = experiment_kind_from_string(app.get_subcommands().front()->get_name());
    if (!kind && !opts.figure && !opts.config) {
        std::cerr << app.help();
        return kInvalid;
    }

    try {
        return run(opts, kind);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInvalid;
    } catch (const ContractViolation& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInvalid;
    } catch (const BlowUpError& e) {
        std::fprintf(stderr, "numerical blow-up: %s\n", e.what());
        return kBlowUp;
    } catch (const StiffnessError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kBlowUp;
    } catch (const IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
}
