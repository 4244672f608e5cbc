#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hystlat/errors.hpp"
#include "hystlat/lattice.hpp"
#include "hystlat/tsit5.hpp"

namespace hystlat {

/// Where the white-noise term of a stochastic drive enters the equations.
enum class NoisePlacement {
    /// Additive sigma dW on the first site's displacement equation.
    first_site,
    /// Inside the driven displacement, x_0 = f sin(wt) + sigma Z_n / sqrt(dt),
    /// frozen across both Heun stages of step n.
    boundary_displacement,
};

inline std::string_view to_string(NoisePlacement p) {
    return p == NoisePlacement::first_site ? "first_site" : "boundary_displacement";
}

inline NoisePlacement noise_placement_from_string(std::string_view s) {
    if (s == "first_site") return NoisePlacement::first_site;
    if (s == "boundary_displacement") return NoisePlacement::boundary_displacement;
    throw ValidationError("sde.noise_placement must be \"first_site\" or \"boundary_displacement\"");
}

struct SdeConfig {
    double step = 1e-3;
    double t_end = 200.0;
    std::uint64_t seed = 0;
    double sample_interval = 0.1;
    NoisePlacement noise_placement = NoisePlacement::first_site;

    /// Heun steps between stored samples; sample_interval must be a whole
    /// multiple of step.
    std::size_t steps_per_sample() const {
        const double ratio = sample_interval / step;
        const double r = std::round(ratio);
        if (r < 1.0 || std::abs(ratio - r) > 1e-9 * r)
            throw ValidationError("sde.sample_interval must be a whole multiple of sde.step");
        return static_cast<std::size_t>(r);
    }

    void validate() const {
        if (!(step > 0.0)) throw ValidationError("sde.step must be > 0");
        if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("sde.t_end must be > 0");
        if (!(sample_interval > 0.0) || sample_interval > t_end)
            throw ValidationError("sde.sample_interval must be in (0, t_end]");
        (void)steps_per_sample();
    }

    bool operator==(const SdeConfig&) const = default;
};

struct TrajectoryMetadata {
    ModelKind model = ModelKind::local_damping;
    LatticeParams params;
    BoundaryDrive drive = Clamped{};
    std::optional<IntegratorConfig> ode;
    std::optional<SdeConfig> sde;
    StepStats stats;
};

struct Trajectory {
    std::vector<double> sample_times;
    std::vector<LatticeState> states;
    TrajectoryMetadata metadata;

    std::size_t size() const { return states.size(); }
    bool empty() const { return states.empty(); }
};

namespace detail {

/// Packs a lattice state into the first-order vector [x_1..x_N, v_1..v_N].
inline std::vector<double> pack(const LatticeState& s) {
    std::vector<double> y(2 * s.size());
    std::copy(s.positions.begin(), s.positions.end(), y.begin());
    std::copy(s.velocities.begin(), s.velocities.end(), y.begin() + static_cast<std::ptrdiff_t>(s.size()));
    return y;
}

inline LatticeState unpack(double t, std::span<const double> y) {
    const std::size_t n = y.size() / 2;
    return LatticeState(t, std::vector<double>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)),
                        std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(n), y.end()));
}

inline void check_initial(const LatticeParams& p, const LatticeState& s) {
    p.validate();
    if (s.positions.size() != p.n_sites || s.velocities.size() != p.n_sites)
        throw ContractViolation("initial state dimension does not match n_sites");
    if (!s.is_finite()) throw ContractViolation("initial state is not finite");
}

/// First-order right-hand side of the lattice with a boundary supplied per call.
template <class BoundaryAt>
auto lattice_rhs(ModelKind model, const LatticeParams& p, BoundaryAt boundary_at) {
    return [model, &p, boundary_at](double t, std::span<const double> y, std::span<double> dy) {
        const std::size_t n = p.n_sites;
        auto x = y.first(n), v = y.subspan(n, n);
        for (std::size_t i = 0; i < n; ++i) dy[i] = v[i];
        accelerations(model, p, boundary_at(t), x, v, dy.subspan(n, n));
    };
}

}  // namespace detail

/// Deterministic integration with the adaptive 5(4) pair. `observe(t, y)`
/// receives the packed state at every grid point; returns step statistics.
template <class Observer>
StepStats integrate_ode_observed(ModelKind model, const LatticeParams& params, const BoundaryDrive& drive,
                                 const LatticeState& initial, const IntegratorConfig& config, Observer&& observe) {
    if (is_stochastic(drive)) throw ContractViolation("integrate_ode does not accept a stochastic drive");
    detail::check_initial(params, initial);
    std::vector<double> y = detail::pack(initial);
    auto rhs = detail::lattice_rhs(model, params, [&drive](double t) { return sample_boundary(drive, t); });
    return integrate_tsit5(rhs, initial.time, y, config, observe);
}

inline Trajectory integrate_ode(ModelKind model, const LatticeParams& params, const BoundaryDrive& drive,
                                const LatticeState& initial, const IntegratorConfig& config) {
    Trajectory traj;
    traj.metadata = {model, params, drive, config, std::nullopt, {}};
    traj.metadata.stats = integrate_ode_observed(model, params, drive, initial, config,
                                                 [&](double t, std::span<const double> y) {
                                                     traj.sample_times.push_back(t);
                                                     traj.states.push_back(detail::unpack(t, y));
                                                 });
    return traj;
}

/// Fixed-step stochastic Heun integration. Per step n the generator draws
/// Z_n ~ N(0, 1). With NoisePlacement::first_site the increment
/// sigma sqrt(dt) Z_n is added to x_1 in both the Euler predictor and the
/// trapezoidal corrector; with NoisePlacement::boundary_displacement both
/// stages see x_0 = f sin(w t_stage) + sigma Z_n / sqrt(dt).
template <class Observer>
StepStats integrate_sde_observed(ModelKind model, const LatticeParams& params, const StochasticSinusoidal& drive,
                                 const LatticeState& initial, const SdeConfig& config, Observer&& observe) {
    if (!(drive.noise_intensity >= 0.0)) throw ContractViolation("noise intensity must be >= 0");
    config.validate();
    detail::check_initial(params, initial);

    const std::size_t n = params.n_sites;
    const double dt = config.step;
    const double sqrt_dt = std::sqrt(dt);
    const std::size_t per_sample = config.steps_per_sample();
    const auto n_steps = static_cast<std::size_t>(std::floor((config.t_end - initial.time) / dt * (1.0 + 1e-12)));
    const bool in_boundary = config.noise_placement == NoisePlacement::boundary_displacement;
    const BoundaryDrive stochastic = drive;
    const BoundaryDrive deterministic = Sinusoidal{drive.amplitude, drive.frequency};

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> y = detail::pack(initial), pred(2 * n), f1(2 * n), f2(2 * n);
    double xi = 0.0;
    auto rhs = detail::lattice_rhs(model, params, [&](double t) {
        return in_boundary ? sample_boundary(stochastic, t, xi) : sample_boundary(deterministic, t);
    });

    StepStats stats;
    const double t0 = initial.time;
    observe(t0, std::as_const(y));
    for (std::size_t step = 0; step < n_steps; ++step) {
        const double t = t0 + static_cast<double>(step) * dt;
        const double t_next = t0 + static_cast<double>(step + 1) * dt;
        const double z = normal(rng);
        xi = z / sqrt_dt;
        const double kick = in_boundary ? 0.0 : drive.noise_intensity * sqrt_dt * z;
        rhs(t, y, f1);
        for (std::size_t i = 0; i < 2 * n; ++i) pred[i] = y[i] + dt * f1[i];
        pred[0] += kick;
        rhs(t_next, pred, f2);
        bool finite = true;
        for (std::size_t i = 0; i < 2 * n; ++i) {
            y[i] += 0.5 * dt * (f1[i] + f2[i]);
            finite = finite && std::isfinite(y[i]);
        }
        y[0] += kick;
        stats.rhs_evaluations += 2;
        ++stats.accepted;
        if (!finite || !std::isfinite(y[0]))
            throw BlowUpError("state became non-finite at t=" + std::to_string(t_next), t_next);
        if ((step + 1) % per_sample == 0)
            observe(t0 + static_cast<double>((step + 1) / per_sample) * config.sample_interval, std::as_const(y));
    }
    return stats;
}

inline Trajectory integrate_sde(ModelKind model, const LatticeParams& params, const StochasticSinusoidal& drive,
                                const LatticeState& initial, const SdeConfig& config) {
    Trajectory traj;
    traj.metadata = {model, params, drive, std::nullopt, config, {}};
    traj.metadata.stats = integrate_sde_observed(model, params, drive, initial, config,
                                                 [&](double t, std::span<const double> y) {
                                                     traj.sample_times.push_back(t);
                                                     traj.states.push_back(detail::unpack(t, y));
                                                 });
    return traj;
}

}  // namespace hystlat
