#pragma once

// Equations of motion for 1-D chains of nonlinearly coupled oscillators with
// Reid-type hysteretic damping, driven kinematically through site 0 and
// clamped at site N+1.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hystlat/errors.hpp"

namespace hystlat {

struct LatticeParams {
    std::size_t n_sites = 200;
    double mass = 1.0;
    double damping = 0.01;       // c
    double stiffness = 0.3;      // k
    double nonlinearity = 0.1;   // epsilon
    double sign_sharpness = 1000.0;  // tau

    /// Throws ValidationError naming the first violated field.
    void validate() const {
        if (n_sites < 1) throw ValidationError("n_sites must be >= 1");
        if (!(mass > 0.0) || !std::isfinite(mass)) throw ValidationError("mass must be > 0");
        if (!(damping >= 0.0) || !std::isfinite(damping)) throw ValidationError("damping (c) must be >= 0");
        if (!(stiffness > 0.0) || !std::isfinite(stiffness)) throw ValidationError("stiffness (k) must be > 0");
        if (!(nonlinearity >= 0.0) || !std::isfinite(nonlinearity))
            throw ValidationError("nonlinearity (epsilon) must be >= 0");
        if (!(sign_sharpness > 0.0) || !std::isfinite(sign_sharpness))
            throw ValidationError("sign_sharpness (tau) must be > 0");
    }

    bool operator==(const LatticeParams&) const = default;
};

enum class ModelKind {
    local_damping,     // Model I: damping depends on the site's own (x_j, v_j)
    neighbor_damping,  // Model II: damping depends on the bond differences
};

inline std::string_view to_string(ModelKind m) {
    return m == ModelKind::local_damping ? "I" : "II";
}

inline ModelKind model_from_string(std::string_view s) {
    if (s == "I" || s == "1" || s == "local") return ModelKind::local_damping;
    if (s == "II" || s == "2" || s == "neighbor") return ModelKind::neighbor_damping;
    throw ValidationError("model must be \"I\" or \"II\", got \"" + std::string(s) + "\"");
}

// ---------------------------------------------------------------------------
// Boundary drives

struct Sinusoidal {
    double amplitude = 0.0;
    double frequency = 1.0;
    bool operator==(const Sinusoidal&) const = default;
};

/// Half-sine pulse: f sin(wt) on [0, pi/w], zero afterwards.
struct Impulsive {
    double amplitude = 0.0;
    double frequency = 1.0;
    double pulse_end() const { return std::numbers::pi / frequency; }
    bool operator==(const Impulsive&) const = default;
};

/// f sin(wt) + sigma * xi(t), xi discretized white noise supplied per step.
struct StochasticSinusoidal {
    double amplitude = 0.0;
    double frequency = 1.0;
    double noise_intensity = 0.0;
    bool operator==(const StochasticSinusoidal&) const = default;
};

struct Clamped {
    bool operator==(const Clamped&) const = default;
};

using BoundaryDrive = std::variant<Sinusoidal, Impulsive, StochasticSinusoidal, Clamped>;

inline bool is_stochastic(const BoundaryDrive& d) {
    return std::holds_alternative<StochasticSinusoidal>(d);
}

/// Displacement of the driven site 0 at time t. `noise_increment` is the
/// discretized white-noise sample xi_n and must be present exactly when the
/// drive is stochastic.
inline double boundary_value(const BoundaryDrive& drive, double t,
                             std::optional<double> noise_increment = std::nullopt) {
    if (is_stochastic(drive) != noise_increment.has_value())
        throw ContractViolation(is_stochastic(drive)
                                    ? "stochastic drive requires a noise increment"
                                    : "noise increment supplied for a deterministic drive");
    return std::visit(
        [&](const auto& d) -> double {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, Sinusoidal>) {
                return d.amplitude * std::sin(d.frequency * t);
            } else if constexpr (std::is_same_v<D, Impulsive>) {
                if (t < 0.0 || t > d.pulse_end()) return 0.0;
                return d.amplitude * std::sin(d.frequency * t);
            } else if constexpr (std::is_same_v<D, StochasticSinusoidal>) {
                return d.amplitude * std::sin(d.frequency * t) + d.noise_intensity * *noise_increment;
            } else {
                return 0.0;
            }
        },
        drive);
}

/// Velocity of the driven site 0, from the deterministic part of the drive.
/// Only Model II's damping reads it (through the first bond's velocity difference).
inline double boundary_velocity(const BoundaryDrive& drive, double t) {
    return std::visit(
        [&](const auto& d) -> double {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, Clamped>) {
                return 0.0;
            } else if constexpr (std::is_same_v<D, Impulsive>) {
                if (t < 0.0 || t > d.pulse_end()) return 0.0;
                return d.amplitude * d.frequency * std::cos(d.frequency * t);
            } else {
                return d.amplitude * d.frequency * std::cos(d.frequency * t);
            }
        },
        drive);
}

/// Kinematic state of site 0 at one instant.
struct BoundarySample {
    double displacement = 0.0;
    double velocity = 0.0;
};

// ---------------------------------------------------------------------------

struct LatticeState {
    double time = 0.0;
    std::vector<double> positions;
    std::vector<double> velocities;

    LatticeState() = default;
    explicit LatticeState(std::size_t n, double t = 0.0) : time(t), positions(n, 0.0), velocities(n, 0.0) {}
    LatticeState(double t, std::vector<double> x, std::vector<double> v)
        : time(t), positions(std::move(x)), velocities(std::move(v)) {}

    std::size_t size() const { return positions.size(); }

    bool is_finite() const {
        if (!std::isfinite(time)) return false;
        for (double x : positions)
            if (!std::isfinite(x)) return false;
        for (double v : velocities)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const LatticeState&) const = default;
};

/// tanh(sharpness * u), the smooth stand-in for sgn(u).
inline double smooth_sign(double u, double sharpness) {
    const double a = sharpness * u;
    // tanh rounds to +-1 exactly beyond |a| ~ 19.06
    if (a > 20.0) return 1.0;
    if (a < -20.0) return -1.0;
    return std::tanh(a);
}

namespace detail {
inline void check_dims(std::size_t n, std::size_t nx, std::size_t nv, std::size_t nout) {
    if (n == 0 || nx != n || nv != n || nout != n)
        throw ContractViolation("lattice state dimension does not match n_sites");
}
}  // namespace detail

/// Accelerations of Model I into `acc`:
///   M a_j = -c|x_j| tanh(tau v_j) - k(-x_{j-1} + 2x_j - x_{j+1})
///           - eps(-(x_{j+1} - x_j)^3 + (x_j - x_{j-1})^3)
/// with x_0 = boundary.displacement and x_{N+1} = 0.
inline void accelerations_local(const LatticeParams& p, BoundarySample boundary,
                                std::span<const double> x, std::span<const double> v,
                                std::span<double> acc) {
    const std::size_t n = p.n_sites;
    detail::check_dims(n, x.size(), v.size(), acc.size());
    const double c = p.damping, k = p.stiffness, eps = p.nonlinearity, tau = p.sign_sharpness;
    const double inv_m = 1.0 / p.mass;
    double left = boundary.displacement;
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = x[j];
        const double right = j + 1 < n ? x[j + 1] : 0.0;
        const double dl = xj - left;   // x_j - x_{j-1}
        const double dr = right - xj;  // x_{j+1} - x_j
        double f = -k * (dl - dr) - eps * (dl * dl * dl - dr * dr * dr);
        if (c != 0.0) f -= c * std::abs(xj) * smooth_sign(v[j], tau);
        acc[j] = f * inv_m;
        left = xj;
    }
}

/// Accelerations of Model II into `acc`:
///   M a_j = -[c D-x sgn(D-x D-v) + c D+x sgn(D+x D+v) + k(D-x + D+x) + eps((D-x)^3 + (D+x)^3)]
/// with D-x = x_j - x_{j-1}, D+x = x_j - x_{j+1} (same for velocities) and sgn
/// smoothed as tanh(tau * product).
inline void accelerations_neighbor(const LatticeParams& p, BoundarySample boundary,
                                   std::span<const double> x, std::span<const double> v,
                                   std::span<double> acc) {
    const std::size_t n = p.n_sites;
    detail::check_dims(n, x.size(), v.size(), acc.size());
    const double c = p.damping, k = p.stiffness, eps = p.nonlinearity, tau = p.sign_sharpness;
    const double inv_m = 1.0 / p.mass;
    double left_x = boundary.displacement;
    double left_v = boundary.velocity;
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = x[j], vj = v[j];
        const double right_x = j + 1 < n ? x[j + 1] : 0.0;
        const double right_v = j + 1 < n ? v[j + 1] : 0.0;
        const double dmx = xj - left_x, dpx = xj - right_x;
        double f = k * (dmx + dpx) + eps * (dmx * dmx * dmx + dpx * dpx * dpx);
        if (c != 0.0) {
            const double dmv = vj - left_v, dpv = vj - right_v;
            f += c * (dmx * smooth_sign(dmx * dmv, tau) + dpx * smooth_sign(dpx * dpv, tau));
        }
        acc[j] = -f * inv_m;
        left_x = xj;
        left_v = vj;
    }
}

inline void accelerations(ModelKind model, const LatticeParams& p, BoundarySample boundary,
                          std::span<const double> x, std::span<const double> v, std::span<double> acc) {
    if (model == ModelKind::local_damping)
        accelerations_local(p, boundary, x, v, acc);
    else
        accelerations_neighbor(p, boundary, x, v, acc);
}

/// Boundary sample for a drive at the state's time; the noise increment is
/// forwarded for stochastic drives.
inline BoundarySample sample_boundary(const BoundaryDrive& drive, double t,
                                      std::optional<double> noise_increment = std::nullopt) {
    return {boundary_value(drive, t, noise_increment), boundary_velocity(drive, t)};
}

inline std::vector<double> rhs_model_I(const LatticeState& s, const LatticeParams& p, const BoundaryDrive& drive,
                                       double boundary_sample) {
    std::vector<double> acc(s.positions.size());
    if (s.positions.size() != p.n_sites) throw ContractViolation("lattice state dimension does not match n_sites");
    accelerations_local(p, {boundary_sample, boundary_velocity(drive, s.time)}, s.positions, s.velocities, acc);
    return acc;
}

inline std::vector<double> rhs_model_II(const LatticeState& s, const LatticeParams& p, const BoundaryDrive& drive,
                                        double boundary_sample) {
    std::vector<double> acc(s.positions.size());
    if (s.positions.size() != p.n_sites) throw ContractViolation("lattice state dimension does not match n_sites");
    accelerations_neighbor(p, {boundary_sample, boundary_velocity(drive, s.time)}, s.positions, s.velocities, acc);
    return acc;
}

/// Potential energy of one bond with extension d: k d^2/2 + eps d^4/4.
inline double bond_energy(const LatticeParams& p, double d) {
    const double d2 = d * d;
    return 0.5 * p.stiffness * d2 + 0.25 * p.nonlinearity * d2 * d2;
}

/// Per-site energy: kinetic energy plus half of each adjacent bond's
/// potential. The driven and clamped ends are not sites, so the outer half of
/// the two boundary bonds is not attributed to any site.
inline std::vector<double> site_energies(const LatticeState& s, const LatticeParams& p, double boundary_sample) {
    const std::size_t n = p.n_sites;
    detail::check_dims(n, s.positions.size(), s.velocities.size(), n);
    std::vector<double> e(n);
    double left = boundary_sample;
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = s.positions[j];
        const double right = j + 1 < n ? s.positions[j + 1] : 0.0;
        e[j] = 0.5 * p.mass * s.velocities[j] * s.velocities[j] +
               0.5 * (bond_energy(p, xj - left) + bond_energy(p, right - xj));
        left = xj;
    }
    return e;
}

/// Total mechanical energy: kinetic plus the full potential of all N+1 bonds.
inline double total_energy(const LatticeState& s, const LatticeParams& p, double boundary_sample) {
    const std::size_t n = p.n_sites;
    detail::check_dims(n, s.positions.size(), s.velocities.size(), n);
    double e = 0.0;
    double left = boundary_sample;
    for (std::size_t j = 0; j < n; ++j) {
        e += 0.5 * p.mass * s.velocities[j] * s.velocities[j] + bond_energy(p, s.positions[j] - left);
        left = s.positions[j];
    }
    return e + bond_energy(p, left);
}

}  // namespace hystlat
