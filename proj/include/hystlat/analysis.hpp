#pragma once

// Supratransmission criterion, least-squares fits, ensemble classification
// and empirical distribution functions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hystlat/errors.hpp"
#include "hystlat/integrators.hpp"

namespace hystlat {

struct CriterionConfig {
    double delta_threshold = 1000.0;
    double transient_skip = 0.0;

    void validate() const {
        if (!(delta_threshold > 0.0)) throw ValidationError("criterion.delta_threshold must be > 0");
        if (!(transient_skip >= 0.0)) throw ValidationError("criterion.transient_skip must be >= 0");
    }

    bool operator==(const CriterionConfig&) const = default;
};

/// Streaming form of D_f: mean over retained samples of sum_i x_i(t_j)^2.
class DfAccumulator {
public:
    explicit DfAccumulator(double transient_skip = 0.0) : skip_(transient_skip) {}

    void add(double t, std::span<const double> positions) {
        if (t < skip_) return;
        double s = 0.0;
        for (double x : positions) s += x * x;
        sum_ += s;
        ++count_;
    }

    std::size_t count() const { return count_; }

    double value() const {
        if (count_ == 0) throw ContractViolation("D_f requires at least one sample after transient_skip");
        return sum_ / static_cast<double>(count_);
    }

private:
    double skip_;
    double sum_ = 0.0;
    std::size_t count_ = 0;
};

inline double compute_Df(const Trajectory& traj, const CriterionConfig& config = {}) {
    DfAccumulator acc(config.transient_skip);
    for (std::size_t j = 0; j < traj.states.size(); ++j) acc.add(traj.sample_times[j], traj.states[j].positions);
    return acc.value();
}

struct SweepPoint {
    double amplitude;
    double d_value;
};

/// First grid amplitude f_i (i >= 2) whose D_f exceeds its predecessor's by
/// more than `delta_threshold`.
inline std::optional<double> detect_fcr(std::span<const SweepPoint> sweep, double delta_threshold) {
    if (sweep.size() < 2) throw ContractViolation("detect_fcr requires at least two sweep points");
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        if (!(sweep[i].amplitude > sweep[i - 1].amplitude))
            throw ContractViolation("sweep amplitudes must be strictly increasing");
    }
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        if (sweep[i].d_value - sweep[i - 1].d_value > delta_threshold) return sweep[i].amplitude;
    }
    return std::nullopt;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ContractViolation("linear_fit: xs and ys differ in length");
    if (xs.size() < 2) throw DegenerateFitError("linear_fit needs at least two points");
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw DegenerateFitError("linear_fit: all x values are identical");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / n);
    return fit;
}

struct Realization {
    std::uint64_t seed = 0;
    double d_value = 0.0;
    bool supratransmitting = false;
};

struct EnsembleResult {
    std::vector<Realization> realizations;
    double probability = 0.0;
    double classify_cutoff = 0.0;
    std::size_t failed = 0;  // realizations that blew up, excluded above
    std::vector<std::uint64_t> failed_seeds;
};

/// A realization supratransmits iff log10(D_f) > cutoff.
inline bool is_supratransmitting(double d_value, double log10_cutoff) {
    return std::log10(d_value) > log10_cutoff;
}

inline EnsembleResult classify_realizations(std::span<const std::pair<std::uint64_t, double>> d_values,
                                            double log10_cutoff) {
    if (d_values.empty()) throw ContractViolation("classify_realizations requires at least one realization");
    EnsembleResult r;
    r.classify_cutoff = log10_cutoff;
    std::size_t hits = 0;
    for (const auto& [seed, d] : d_values) {
        const bool supra = is_supratransmitting(d, log10_cutoff);
        hits += supra ? 1 : 0;
        r.realizations.push_back({seed, d, supra});
    }
    r.probability = static_cast<double>(hits) / static_cast<double>(d_values.size());
    return r;
}

/// Right-continuous empirical distribution function.
class EmpiricalCdf {
public:
    EmpiricalCdf() = default;
    explicit EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
        if (sorted_.empty()) throw ContractViolation("empirical_cdf requires at least one sample");
        std::sort(sorted_.begin(), sorted_.end());
    }

    /// Fraction of samples <= x.
    double operator()(double x) const {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }

    const std::vector<double>& sorted_samples() const { return sorted_; }

    /// Jump points with the cumulative fraction reached at each distinct value.
    std::vector<std::pair<double, double>> steps() const {
        std::vector<std::pair<double, double>> out;
        const auto n = static_cast<double>(sorted_.size());
        for (std::size_t i = 0; i < sorted_.size(); ++i) {
            if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i]) continue;
            out.emplace_back(sorted_[i], static_cast<double>(i + 1) / n);
        }
        return out;
    }

    double support_width() const { return sorted_.back() - sorted_.front(); }

private:
    std::vector<double> sorted_;
};

inline EmpiricalCdf empirical_cdf(std::vector<double> samples) { return EmpiricalCdf(std::move(samples)); }

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F(x) - G(x)|.
inline double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b) {
    double d = 0.0;
    for (const auto* cdf : {&a, &b})
        for (double x : cdf->sorted_samples()) d = std::max(d, std::abs(a(x) - b(x)));
    return d;
}

/// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96) {
    if (trials == 0) throw ContractViolation("wilson_interval requires at least one trial");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// ---------------------------------------------------------------------------
// Breather diagnostics

/// Displacement envelope: max over sites and over consecutive windows of
/// `window` time units of |x_j(t)|. Returns (window start, max) pairs.
inline std::vector<std::pair<double, double>> windowed_envelope(const Trajectory& traj, double window) {
    if (!(window > 0.0)) throw ContractViolation("envelope window must be > 0");
    std::vector<std::pair<double, double>> out;
    if (traj.empty()) return out;
    const double t0 = traj.sample_times.front();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto w = static_cast<std::size_t>(std::floor((traj.sample_times[i] - t0) / window + 1e-9));
        double m = 0.0;
        for (double x : traj.states[i].positions) m = std::max(m, std::abs(x));
        while (out.size() <= w) out.emplace_back(t0 + static_cast<double>(out.size()) * window, 0.0);
        out[w].second = std::max(out[w].second, m);
    }
    return out;
}

/// Indices of strict interior local maxima (a plateau counts once, at its left end).
inline std::vector<std::size_t> local_maxima(std::span<const double> v) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const bool left_ok = i == 0 ? false : v[i] > v[i - 1];
        if (!left_ok) continue;
        std::size_t j = i;
        while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
        if (j + 1 < v.size() && v[j + 1] < v[i]) idx.push_back(i);
    }
    return idx;
}

struct EnvelopeSummary {
    double peak = 0.0;
    double peak_time = 0.0;
    std::vector<std::pair<double, double>> maxima;  // (time, value) of every local maximum
    /// Local maxima exceeding `fraction` of the peak (the peak itself included).
    std::size_t count_above(double fraction) const {
        std::size_t c = 0;
        for (const auto& m : maxima) c += m.second > fraction * peak ? 1 : 0;
        return c;
    }
    /// Largest local maximum after the peak, relative to the peak (0 if none).
    double largest_later_ratio() const {
        double r = 0.0;
        for (const auto& m : maxima)
            if (m.first > peak_time && peak > 0.0) r = std::max(r, m.second / peak);
        return r;
    }
};

inline EnvelopeSummary summarize_envelope(const std::vector<std::pair<double, double>>& env) {
    EnvelopeSummary s;
    std::vector<double> v;
    for (const auto& [t, m] : env) {
        v.push_back(m);
        if (m > s.peak) {
            s.peak = m;
            s.peak_time = t;
        }
    }
    for (std::size_t i : local_maxima(v)) s.maxima.push_back(env[i]);
    return s;
}

/// Energy-weighted mean site index (1-based) over the first `site_limit` sites.
inline double energy_centroid(std::span<const double> energies, std::size_t site_limit) {
    const std::size_t n = std::min(site_limit, energies.size());
    double w = 0.0, s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        w += energies[j];
        s += energies[j] * static_cast<double>(j + 1);
    }
    return w > 0.0 ? s / w : 0.0;
}

/// Time at which the excitation stops moving away from the driven end and
/// turns back: the first local maximum of the energy centroid series. Returns
/// nullopt when the centroid never turns.
inline std::optional<double> turning_time(std::span<const double> times, std::span<const double> centroid) {
    if (times.size() != centroid.size()) throw ContractViolation("turning_time: length mismatch");
    const auto idx = local_maxima(centroid);
    if (idx.empty()) return std::nullopt;
    return times[idx.front()];
}

}  // namespace hystlat
