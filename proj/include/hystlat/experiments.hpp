#pragma once

// Experiment drivers: amplitude sweeps and f_cr(omega) curves, wave-packet
// spreading, impulsive (breather) excitation, stochastic ensembles and f_cr
// distributions. Independent simulations fan out over worker threads and are
// gathered by index, so results do not depend on the thread count.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hystlat/analysis.hpp"
#include "hystlat/errors.hpp"
#include "hystlat/integrators.hpp"
#include "hystlat/lattice.hpp"
#include "hystlat/parallel.hpp"

namespace hystlat {

struct RunOptions {
    unsigned threads = 1;
};

/// Classification cutoff on log10(D_f). Deterministic runs at N = 100..200
/// sit near 10^0 below threshold and near 10^4 above it.
inline constexpr double kDefaultLog10Cutoff = 2.0;

/// start, start + step, ... up to stop (inclusive within rounding). Points are
/// rounded to 12 significant digits so that 0.2 + 1 * 0.1 is the double 0.3.
inline std::vector<double> make_grid(double start, double stop, double step) {
    if (!(step > 0.0)) throw ValidationError("grid step must be > 0");
    if (!(stop >= start)) throw ValidationError("grid stop must be >= start");
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    g.reserve(n);
    char buf[40];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", start + static_cast<double>(i) * step);
        g.push_back(std::strtod(buf, nullptr));
    }
    return g;
}

namespace detail {
inline void validate_grid(const std::vector<double>& g, const char* name, std::size_t min_size = 1) {
    if (g.size() < min_size) throw ValidationError(std::string(name) + " needs at least " + std::to_string(min_size) + " points");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw ValidationError(std::string(name) + " must be strictly increasing");
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Specs

struct SingleSpec {
    ModelKind model = ModelKind::local_damping;
    LatticeParams params;
    BoundaryDrive drive = Sinusoidal{2.8, 2.5};
    IntegratorConfig integrator;
    SdeConfig sde;  // used only for stochastic drives
    std::vector<double> snapshot_times;

    bool operator==(const SingleSpec&) const = default;
};

struct SupraSweepSpec {
    ModelKind model = ModelKind::local_damping;
    LatticeParams params;
    double omega = 2.5;
    std::vector<double> f_grid = make_grid(0.2, 5.0, 0.1);
    CriterionConfig criterion;
    IntegratorConfig integrator;
    /// Stop at the first detected jump; the result then ends at f_cr.
    bool stop_at_first = false;

    bool operator==(const SupraSweepSpec&) const = default;
};

struct FcrCurveSpec {
    ModelKind model = ModelKind::local_damping;
    LatticeParams params;
    std::vector<double> omega_grid{2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
    std::vector<double> f_grid = make_grid(0.2, 20.0, 0.1);
    CriterionConfig criterion;
    IntegratorConfig integrator;

    bool operator==(const FcrCurveSpec&) const = default;
};

struct WavePacketSpec {
    ModelKind model = ModelKind::local_damping;
    LatticeParams params{200, 1.0, 0.01, 0.01, 0.1, 1000.0};
    BoundaryDrive drive = Clamped{};
    std::size_t packet_length = 11;
    double packet_amplitude = 1.0;
    std::uint64_t seed = 1;
    IntegratorConfig integrator{1e-6, 1e-8, 1e-3, 1.0, 10.0, 10000.0};
    std::vector<double> snapshot_times{0.0, 4000.0, 8000.0};

    bool operator==(const WavePacketSpec&) const = default;
};

struct BreatherSpec {
    ModelKind model = ModelKind::local_damping;
    LatticeParams params{200, 1.0, 0.01, 0.3, 0.1, 1000.0};
    Impulsive drive{3.5, 4.0};
    std::size_t observed_first = 12;  // 1-based, inclusive
    std::size_t observed_last = 15;
    IntegratorConfig integrator{1e-6, 1e-8, 1e-3, 1.0, 0.05, 500.0};

    bool operator==(const BreatherSpec&) const = default;
};

struct StochasticEnsembleSpec {
    ModelKind model = ModelKind::local_damping;
    LatticeParams params{200, 1.0, 0.1, 0.1, 0.1, 1000.0};
    double amplitude = 3.6;
    double omega = 3.0;
    double sigma = 0.1;
    std::size_t realizations = 250;
    std::uint64_t seed_base = 0;
    SdeConfig sde;
    CriterionConfig criterion;
    double log10_cutoff = kDefaultLog10Cutoff;

    bool operator==(const StochasticEnsembleSpec&) const = default;
};

struct FcrDistributionSpec {
    ModelKind model = ModelKind::local_damping;
    LatticeParams params{200, 1.0, 0.1, 0.1, 0.1, 1000.0};
    double omega = 3.0;
    double sigma = 0.1;
    std::vector<double> f_grid = make_grid(3.0, 4.0, 0.1);
    std::size_t realizations = 100;
    std::uint64_t seed_base = 0;
    SdeConfig sde;
    CriterionConfig criterion;
    double log10_cutoff = kDefaultLog10Cutoff;

    bool operator==(const FcrDistributionSpec&) const = default;
};

using ExperimentSpec = std::variant<SingleSpec, SupraSweepSpec, FcrCurveSpec, WavePacketSpec, BreatherSpec,
                                    StochasticEnsembleSpec, FcrDistributionSpec>;

inline void validate(const SingleSpec& s) {
    s.params.validate();
    if (is_stochastic(s.drive)) {
        s.sde.validate();
        if (!(std::get<StochasticSinusoidal>(s.drive).noise_intensity >= 0.0))
            throw ValidationError("drive.sigma must be >= 0");
    } else {
        s.integrator.validate();
    }
}

inline void validate(const SupraSweepSpec& s) {
    s.params.validate();
    s.integrator.validate();
    s.criterion.validate();
    detail::validate_grid(s.f_grid, "f_grid", 2);
}

inline void validate(const FcrCurveSpec& s) {
    s.params.validate();
    s.integrator.validate();
    s.criterion.validate();
    detail::validate_grid(s.f_grid, "f_grid", 2);
    detail::validate_grid(s.omega_grid, "omega_grid", 1);
}

inline void validate(const WavePacketSpec& s) {
    s.params.validate();
    s.integrator.validate();
    if (s.packet_length % 2 == 0) throw ValidationError("packet_length must be odd");
    if (s.packet_length > s.params.n_sites) throw ValidationError("packet_length must be <= n_sites");
    if (is_stochastic(s.drive)) throw ValidationError("wavepacket drive must be deterministic");
}

inline void validate(const BreatherSpec& s) {
    s.params.validate();
    s.integrator.validate();
    if (s.observed_first < 1 || s.observed_last < s.observed_first || s.observed_last > s.params.n_sites)
        throw ValidationError("observed site range must satisfy 1 <= first <= last <= n_sites");
}

inline void validate(const StochasticEnsembleSpec& s) {
    s.params.validate();
    s.sde.validate();
    s.criterion.validate();
    if (s.realizations < 1) throw ValidationError("realizations must be >= 1");
    if (!(s.sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
}

inline void validate(const FcrDistributionSpec& s) {
    s.params.validate();
    s.sde.validate();
    s.criterion.validate();
    if (s.realizations < 1) throw ValidationError("realizations must be >= 1");
    if (!(s.sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
    detail::validate_grid(s.f_grid, "f_grid", 1);
}

inline void validate(const ExperimentSpec& spec) {
    std::visit([](const auto& s) { validate(s); }, spec);
}

// ---------------------------------------------------------------------------
// Results

struct EnergyMap {
    std::vector<double> sample_times;
    std::vector<std::vector<double>> energies;  // [sample][site]
    std::vector<LatticeState> snapshots;
};

struct SingleResult {
    Trajectory trajectory;
    EnergyMap energy;
};

struct SweepResult {
    std::vector<double> amplitudes;
    std::vector<double> d_values;
    std::optional<double> f_critical;
    ModelKind model = ModelKind::local_damping;
    LatticeParams params;
    double omega = 0.0;
};

struct FcrCurveResult {
    std::vector<double> omegas;
    std::vector<std::optional<double>> f_critical;
    std::vector<SweepResult> sweeps;
    std::optional<LinearFit> fit;  // over the omegas with a detected f_cr
    std::vector<std::string> warnings;
};

struct BreatherResult {
    Trajectory trajectory;
    Trajectory observed;  // positions/velocities restricted to the observed sites
    EnergyMap energy;
    std::size_t observed_first = 1;
};

struct FcrSample {
    std::uint64_t seed = 0;
    double f_critical = 0.0;
    bool censored = false;  // never supratransmitted on the grid; recorded at grid max
};

struct FcrDistributionResult {
    std::vector<FcrSample> samples;
    EmpiricalCdf cdf;
};

using ExperimentResult = std::variant<SingleResult, SweepResult, FcrCurveResult, EnergyMap, BreatherResult,
                                      EnsembleResult, FcrDistributionResult>;

// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> deterministic_energies(std::span<const double> y, const LatticeParams& p, double x0) {
    const std::size_t n = p.n_sites;
    LatticeState s(0.0, std::vector<double>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)),
                   std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(n), y.begin() + static_cast<std::ptrdiff_t>(2 * n)));
    return site_energies(s, p, x0);
}

/// Sample indices closest to each requested snapshot time.
inline std::vector<std::size_t> snapshot_indices(const std::vector<double>& times, double t0, double dt,
                                                 std::size_t n_samples) {
    std::vector<std::size_t> idx;
    for (double t : times) {
        const double k = std::round((t - t0) / dt);
        if (k < 0.0 || k >= static_cast<double>(n_samples))
            throw ValidationError("snapshot time " + std::to_string(t) + " lies outside the integration window");
        idx.push_back(static_cast<std::size_t>(k));
    }
    return idx;
}

inline EnergyMap energy_map_from(const Trajectory& traj, const LatticeParams& p, const BoundaryDrive& drive,
                                 const std::vector<double>& snapshot_times) {
    EnergyMap map;
    map.sample_times = traj.sample_times;
    map.energies.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        // Stochastic paths do not keep the noise sample; the map uses the deterministic part.
        const double x0 = is_stochastic(drive)
                              ? boundary_value(drive, traj.sample_times[i], 0.0)
                              : boundary_value(drive, traj.sample_times[i]);
        map.energies.push_back(site_energies(traj.states[i], p, x0));
    }
    if (!traj.empty() && !snapshot_times.empty()) {
        const double dt = traj.size() > 1 ? traj.sample_times[1] - traj.sample_times[0] : 1.0;
        for (std::size_t k : snapshot_indices(snapshot_times, traj.sample_times.front(), dt, traj.size()))
            map.snapshots.push_back(traj.states[k]);
    }
    return map;
}

template <class F>
auto tag_failure(const std::string& tag, F&& f) {
    try {
        return f();
    } catch (const BlowUpError& e) {
        throw BlowUpError(tag + ": " + e.what(), e.time());
    } catch (const StiffnessError& e) {
        throw StiffnessError(tag + ": " + e.what(), e.time());
    }
}

inline std::string fmt_value(const char* name, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.6g", name, v);
    return buf;
}

}  // namespace detail

/// D_f of one deterministic run from rest under Sinusoidal{f, omega}.
inline double deterministic_df(ModelKind model, const LatticeParams& params, double amplitude, double omega,
                               const IntegratorConfig& integrator, const CriterionConfig& criterion) {
    DfAccumulator acc(criterion.transient_skip);
    const std::size_t n = params.n_sites;
    integrate_ode_observed(model, params, Sinusoidal{amplitude, omega}, LatticeState(n), integrator,
                           [&](double t, std::span<const double> y) { acc.add(t, y.first(n)); });
    return acc.value();
}

/// D_f of one stochastic run from rest.
inline double stochastic_df(ModelKind model, const LatticeParams& params, const StochasticSinusoidal& drive,
                            const SdeConfig& sde, const CriterionConfig& criterion) {
    DfAccumulator acc(criterion.transient_skip);
    const std::size_t n = params.n_sites;
    integrate_sde_observed(model, params, drive, LatticeState(n), sde,
                           [&](double t, std::span<const double> y) { acc.add(t, y.first(n)); });
    return acc.value();
}

inline SingleResult run_single(const SingleSpec& spec, const RunOptions& = {}) {
    validate(spec);
    SingleResult r;
    const LatticeState rest(spec.params.n_sites);
    if (const auto* sd = std::get_if<StochasticSinusoidal>(&spec.drive))
        r.trajectory = integrate_sde(spec.model, spec.params, *sd, rest, spec.sde);
    else
        r.trajectory = integrate_ode(spec.model, spec.params, spec.drive, rest, spec.integrator);
    r.energy = detail::energy_map_from(r.trajectory, spec.params, spec.drive, spec.snapshot_times);
    return r;
}

inline SweepResult run_supra_sweep(const SupraSweepSpec& spec, const RunOptions& opts = {}) {
    validate(spec);
    SweepResult r;
    r.model = spec.model;
    r.params = spec.params;
    r.omega = spec.omega;

    const auto& grid = spec.f_grid;
    std::vector<double> d(grid.size());
    const std::size_t batch = spec.stop_at_first ? std::max(1u, opts.threads) : grid.size();
    std::size_t done = 0;
    std::optional<std::size_t> hit;
    while (done < grid.size() && !hit) {
        const std::size_t count = std::min(batch, grid.size() - done);
        parallel_for(count, opts.threads, [&](std::size_t i) {
            const double f = grid[done + i];
            d[done + i] = detail::tag_failure(detail::fmt_value("f", f), [&] {
                return deterministic_df(spec.model, spec.params, f, spec.omega, spec.integrator, spec.criterion);
            });
        });
        for (std::size_t i = std::max<std::size_t>(done, 1); i < done + count; ++i) {
            if (d[i] - d[i - 1] > spec.criterion.delta_threshold) {
                hit = i;
                break;
            }
        }
        done += count;
        if (!spec.stop_at_first) break;
    }
    const std::size_t keep = spec.stop_at_first && hit ? *hit + 1 : done;
    r.amplitudes.assign(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(keep));
    r.d_values.assign(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(keep));
    if (r.amplitudes.size() >= 2) {
        std::vector<SweepPoint> pts;
        for (std::size_t i = 0; i < keep; ++i) pts.push_back({r.amplitudes[i], r.d_values[i]});
        r.f_critical = detect_fcr(pts, spec.criterion.delta_threshold);
    }
    return r;
}

inline FcrCurveResult run_fcr_curve(const FcrCurveSpec& spec, const RunOptions& opts = {}) {
    validate(spec);
    FcrCurveResult r;
    std::vector<double> xs, ys;
    for (double omega : spec.omega_grid) {
        if (omega <= 2.0)
            r.warnings.push_back(detail::fmt_value("omega", omega) + " lies inside the linear band 0 < omega < 2");
        SupraSweepSpec s{spec.model, spec.params, omega, spec.f_grid, spec.criterion, spec.integrator, true};
        SweepResult sweep = detail::tag_failure(detail::fmt_value("omega", omega), [&] { return run_supra_sweep(s, opts); });
        r.omegas.push_back(omega);
        r.f_critical.push_back(sweep.f_critical);
        if (sweep.f_critical) {
            xs.push_back(omega);
            ys.push_back(*sweep.f_critical);
        } else {
            r.warnings.push_back(detail::fmt_value("omega", omega) + ": no f_cr detected on the amplitude grid");
        }
        r.sweeps.push_back(std::move(sweep));
    }
    if (xs.size() >= 2) r.fit = linear_fit(xs, ys);
    return r;
}

/// Rest state with the central `length` sites set to +-amplitude by seeded fair coin flips.
inline LatticeState wavepacket_initial_state(std::size_t n_sites, std::size_t length, double amplitude,
                                             std::uint64_t seed) {
    LatticeState s(n_sites);
    std::mt19937_64 rng(seed);
    const std::size_t first = (n_sites - length) / 2;
    for (std::size_t j = first; j < first + length; ++j) s.positions[j] = (rng() >> 63) ? amplitude : -amplitude;
    return s;
}

inline EnergyMap run_wavepacket(const WavePacketSpec& spec, const RunOptions& = {}) {
    validate(spec);
    const LatticeState init =
        wavepacket_initial_state(spec.params.n_sites, spec.packet_length, spec.packet_amplitude, spec.seed);
    EnergyMap map;
    const auto snaps = detail::snapshot_indices(spec.snapshot_times, 0.0, spec.integrator.sample_interval,
                                                sample_count(0.0, spec.integrator.t_end, spec.integrator.sample_interval));
    std::size_t k = 0;
    const std::size_t n = spec.params.n_sites;
    integrate_ode_observed(spec.model, spec.params, spec.drive, init, spec.integrator,
                           [&](double t, std::span<const double> y) {
                               map.sample_times.push_back(t);
                               map.energies.push_back(
                                   detail::deterministic_energies(y, spec.params, boundary_value(spec.drive, t)));
                               for (std::size_t s : snaps)
                                   if (s == k) map.snapshots.push_back(detail::unpack(t, y.first(2 * n)));
                               ++k;
                           });
    return map;
}

inline Trajectory restrict_sites(const Trajectory& traj, std::size_t first, std::size_t last) {
    Trajectory out;
    out.sample_times = traj.sample_times;
    out.metadata = traj.metadata;
    out.states.reserve(traj.size());
    const auto b = static_cast<std::ptrdiff_t>(first - 1), e = static_cast<std::ptrdiff_t>(last);
    for (const auto& s : traj.states)
        out.states.emplace_back(s.time, std::vector<double>(s.positions.begin() + b, s.positions.begin() + e),
                                std::vector<double>(s.velocities.begin() + b, s.velocities.begin() + e));
    return out;
}

inline BreatherResult run_breather(const BreatherSpec& spec, const RunOptions& = {}) {
    validate(spec);
    BreatherResult r;
    r.trajectory = integrate_ode(spec.model, spec.params, spec.drive, LatticeState(spec.params.n_sites),
                                 spec.integrator);
    r.observed = restrict_sites(r.trajectory, spec.observed_first, spec.observed_last);
    r.observed_first = spec.observed_first;
    r.energy = detail::energy_map_from(r.trajectory, spec.params, spec.drive, {});
    return r;
}

inline EnsembleResult run_stochastic_ensemble(const StochasticEnsembleSpec& spec, const RunOptions& opts = {}) {
    validate(spec);
    const std::size_t R = spec.realizations;
    std::vector<std::optional<double>> d(R);
    const StochasticSinusoidal drive{spec.amplitude, spec.omega, spec.sigma};
    parallel_for(R, opts.threads, [&](std::size_t r) {
        SdeConfig sde = spec.sde;
        sde.seed = spec.seed_base + r;
        try {
            d[r] = stochastic_df(spec.model, spec.params, drive, sde, spec.criterion);
        } catch (const BlowUpError&) {
            d[r] = std::nullopt;
        }
    });
    std::vector<std::pair<std::uint64_t, double>> ok;
    std::vector<std::uint64_t> failed;
    for (std::size_t r = 0; r < R; ++r) {
        if (d[r])
            ok.emplace_back(spec.seed_base + r, *d[r]);
        else
            failed.push_back(spec.seed_base + r);
    }
    if (ok.empty()) throw BlowUpError("every realization of the ensemble blew up", 0.0);
    EnsembleResult res = classify_realizations(ok, spec.log10_cutoff);
    res.failed = failed.size();
    res.failed_seeds = std::move(failed);
    return res;
}

inline FcrDistributionResult run_fcr_distribution(const FcrDistributionSpec& spec, const RunOptions& opts = {}) {
    validate(spec);
    const std::size_t R = spec.realizations;
    std::vector<FcrSample> samples(R);
    parallel_for(R, opts.threads, [&](std::size_t r) {
        SdeConfig sde = spec.sde;
        sde.seed = spec.seed_base + r;
        FcrSample s{sde.seed, spec.f_grid.back(), true};
        for (double f : spec.f_grid) {
            const double d = detail::tag_failure(detail::fmt_value("f", f), [&] {
                return stochastic_df(spec.model, spec.params, StochasticSinusoidal{f, spec.omega, spec.sigma}, sde,
                                     spec.criterion);
            });
            if (is_supratransmitting(d, spec.log10_cutoff)) {
                s.f_critical = f;
                s.censored = false;
                break;
            }
        }
        samples[r] = s;
    });
    std::vector<double> values;
    for (const auto& s : samples) values.push_back(s.f_critical);
    return {std::move(samples), EmpiricalCdf(std::move(values))};
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {}) {
    return std::visit(
        [&](const auto& s) -> ExperimentResult {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, SingleSpec>) return run_single(s, opts);
            else if constexpr (std::is_same_v<S, SupraSweepSpec>) return run_supra_sweep(s, opts);
            else if constexpr (std::is_same_v<S, FcrCurveSpec>) return run_fcr_curve(s, opts);
            else if constexpr (std::is_same_v<S, WavePacketSpec>) return run_wavepacket(s, opts);
            else if constexpr (std::is_same_v<S, BreatherSpec>) return run_breather(s, opts);
            else if constexpr (std::is_same_v<S, StochasticEnsembleSpec>) return run_stochastic_ensemble(s, opts);
            else return run_fcr_distribution(s, opts);
        },
        spec);
}

}  // namespace hystlat
