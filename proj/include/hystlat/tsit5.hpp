#pragma once

// Embedded explicit Runge-Kutta 5(4) pair with Tsitouras' coefficients,
// FSAL, and a Hairer-style PI step-size controller acting on the max-norm
// error estimate. Output is emitted on a uniform sample grid by shortening
// steps so that they land on grid points.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hystlat/errors.hpp"

namespace hystlat {

struct IntegratorConfig {
    double rel_tol = 1e-6;
    double abs_tol = 1e-8;
    double initial_step = 1e-3;
    double max_step = 1.0;
    double sample_interval = 0.1;
    double t_end = 200.0;

    void validate() const {
        if (!(rel_tol > 0.0)) throw ValidationError("integrator.rel_tol must be > 0");
        if (!(abs_tol > 0.0)) throw ValidationError("integrator.abs_tol must be > 0");
        if (!(initial_step > 0.0)) throw ValidationError("integrator.initial_step must be > 0");
        if (!(max_step > 0.0)) throw ValidationError("integrator.max_step must be > 0");
        if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("integrator.t_end must be > 0");
        if (!(sample_interval > 0.0) || sample_interval > t_end)
            throw ValidationError("integrator.sample_interval must be in (0, t_end]");
    }

    bool operator==(const IntegratorConfig&) const = default;
};

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
};

namespace tsit5 {

// Butcher tableau. b equals the last row of a (FSAL); btilde = b - bhat.
inline constexpr double c2 = 0.161, c3 = 0.327, c4 = 0.9, c5 = 0.9800255409045097;

inline constexpr double a21 = 0.161;
inline constexpr double a31 = -0.008480655492356989, a32 = 0.335480655492357;
inline constexpr double a41 = 2.897153057105493, a42 = -6.359448489975075, a43 = 4.3622954328695815;
inline constexpr double a51 = 5.325864828439257, a52 = -11.748883564062828, a53 = 7.4955393428898365,
                        a54 = -0.09249506636175525;
inline constexpr double a61 = 5.86145544294642, a62 = -12.92096931784711, a63 = 8.159367898576159,
                        a64 = -0.071584973281401, a65 = -0.028269050394068383;
inline constexpr double a71 = 0.09646076681806523, a72 = 0.01, a73 = 0.4798896504144996,
                        a74 = 1.379008574103742, a75 = -3.290069515436081, a76 = 2.324710524099774;

inline constexpr double bt1 = -0.00178001105222577714, bt2 = -0.0008164344596567469,
                        bt3 = 0.007880878010261995, bt4 = -0.1447110071732629, bt5 = 0.5823571654525552,
                        bt6 = -0.45808210592918697, bt7 = 0.015151515151515152;

inline constexpr double order = 5.0;

}  // namespace tsit5

/// Number of grid samples in [t0, t_end] for spacing dt (always >= 1).
inline std::size_t sample_count(double t0, double t_end, double dt) {
    return static_cast<std::size_t>(std::floor((t_end - t0) / dt * (1.0 + 1e-12) + 1e-9)) + 1;
}

/// Integrates y' = rhs(t, y, dy) from t0 to cfg.t_end in place. `observe(t, y)`
/// is called at t0 + i * cfg.sample_interval for every grid point in range;
/// grid times are computed by multiplication so they are exact multiples.
template <class Rhs, class Observer>
StepStats integrate_tsit5(Rhs&& rhs, double t0, std::vector<double>& y, const IntegratorConfig& cfg,
                          Observer&& observe) {
    cfg.validate();
    const std::size_t n = y.size();
    for (double v : y)
        if (!std::isfinite(v)) throw ContractViolation("initial state is not finite");

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
    StepStats stats;

    const double min_step = 1e-12;
    const double safety = 0.9, fac_min = 0.2, fac_max = 10.0, beta = 0.04;
    const double expo1 = 1.0 / tsit5::order - 0.75 * beta;
    double err_old = 1e-4;

    const std::size_t n_samples = sample_count(t0, cfg.t_end, cfg.sample_interval);
    std::size_t next_sample = 0;
    auto sample_time = [&](std::size_t i) { return t0 + static_cast<double>(i) * cfg.sample_interval; };

    double t = t0;
    observe(t, std::as_const(y));
    ++next_sample;

    rhs(t, std::span<const double>(y), std::span<double>(k1));
    ++stats.rhs_evaluations;

    double h = std::min(cfg.initial_step, cfg.max_step);
    bool last_failure_nonfinite = false;

    while (true) {
        // Next landing target: the next sample point, or t_end.
        const bool has_sample = next_sample < n_samples;
        const double target = has_sample ? sample_time(next_sample) : cfg.t_end;
        const double remaining = target - t;
        if (remaining <= 1e-12 * std::max(1.0, std::abs(t))) {
            if (has_sample) {
                observe(target, std::as_const(y));
                ++next_sample;
                t = target;
                continue;
            }
            break;
        }

        bool lands = false;
        double step = std::min(h, cfg.max_step);
        if (step >= remaining * (1.0 - 1e-12)) {
            step = remaining;
            lands = true;
        }
        if (step < min_step) {
            if (last_failure_nonfinite)
                throw BlowUpError("state became non-finite at t=" + std::to_string(t), t);
            throw StiffnessError("step size underflow at t=" + std::to_string(t), t);
        }

        auto stage = [&](std::span<double> out, double tc, auto&&... terms) {
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (0.0 + ... + (terms.first * terms.second[i]));
            rhs(tc, std::span<const double>(tmp), out);
            ++stats.rhs_evaluations;
        };
        using P = std::pair<double, const std::vector<double>&>;
        stage(k2, t + tsit5::c2 * step, P{tsit5::a21, k1});
        stage(k3, t + tsit5::c3 * step, P{tsit5::a31, k1}, P{tsit5::a32, k2});
        stage(k4, t + tsit5::c4 * step, P{tsit5::a41, k1}, P{tsit5::a42, k2}, P{tsit5::a43, k3});
        stage(k5, t + tsit5::c5 * step, P{tsit5::a51, k1}, P{tsit5::a52, k2}, P{tsit5::a53, k3},
              P{tsit5::a54, k4});
        stage(k6, t + step, P{tsit5::a61, k1}, P{tsit5::a62, k2}, P{tsit5::a63, k3}, P{tsit5::a64, k4},
              P{tsit5::a65, k5});
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + step * (tsit5::a71 * k1[i] + tsit5::a72 * k2[i] + tsit5::a73 * k3[i] +
                                     tsit5::a74 * k4[i] + tsit5::a75 * k5[i] + tsit5::a76 * k6[i]);
        const double t_new = lands ? target : t + step;
        rhs(t_new, std::span<const double>(ynew), std::span<double>(k7));
        ++stats.rhs_evaluations;

        // Max norm: a localized excitation in a long, mostly resting chain
        // would be diluted by an RMS average over all components.
        double err = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = step * (tsit5::bt1 * k1[i] + tsit5::bt2 * k2[i] + tsit5::bt3 * k3[i] +
                                     tsit5::bt4 * k4[i] + tsit5::bt5 * k5[i] + tsit5::bt6 * k6[i] +
                                     tsit5::bt7 * k7[i]);
            const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(e) / scale);
            finite = finite && std::isfinite(e) && std::isfinite(ynew[i]);
        }

        if (!finite || !std::isfinite(err)) {
            ++stats.rejected;
            last_failure_nonfinite = true;
            h = step * fac_min;
            continue;
        }
        last_failure_nonfinite = false;

        const double fac11 = std::pow(std::max(err, 1e-300), expo1);
        if (err <= 1.0) {
            double fac = fac11 / std::pow(err_old, beta);
            fac = std::clamp(fac / safety, 1.0 / fac_max, 1.0 / fac_min);
            err_old = std::max(err, 1e-4);
            h = step / fac;
            y.swap(ynew);
            k1.swap(k7);
            t = t_new;
            ++stats.accepted;
            if (lands && has_sample) {
                observe(t, std::as_const(y));
                ++next_sample;
            }
            if (lands && !has_sample) break;
        } else {
            ++stats.rejected;
            h = step / std::min(1.0 / fac_min, fac11 / safety);
        }
    }
    return stats;
}

}  // namespace hystlat
