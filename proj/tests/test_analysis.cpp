#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hystlat/analysis.hpp"

using namespace hystlat;
using Catch::Matchers::WithinAbs;

namespace {

Trajectory make_traj(const std::vector<double>& times, const std::vector<std::vector<double>>& positions) {
    Trajectory t;
    for (std::size_t i = 0; i < times.size(); ++i) {
        t.sample_times.push_back(times[i]);
        t.states.emplace_back(times[i], positions[i], std::vector<double>(positions[i].size(), 0.0));
    }
    return t;
}

Trajectory random_traj(std::mt19937_64& rng, std::size_t n, std::size_t samples) {
    std::normal_distribution<double> g(0.0, 2.0);
    std::vector<double> times;
    std::vector<std::vector<double>> pos;
    for (std::size_t i = 0; i < samples; ++i) {
        times.push_back(0.1 * static_cast<double>(i));
        std::vector<double> x(n);
        for (auto& v : x) v = g(rng);
        pos.push_back(x);
    }
    return make_traj(times, pos);
}

// Brute-force evaluation from the stored samples: the squared displacement
// sum of each retained sample, summed over samples and divided by n_T.
double brute_Df(const Trajectory& t, double skip) {
    double total = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        if (t.sample_times[j] < skip) continue;
        ++count;
        double s = 0.0;
        for (double x : t.states[j].positions) s += x * x;
        total += s;
    }
    return total / count;
}

// Same quantity summed site by site (outer sum over i).
double brute_Df_site_major(const Trajectory& t) {
    double total = 0.0;
    for (std::size_t i = 0; i < t.states.front().size(); ++i)
        for (const auto& s : t.states) total += s.positions[i] * s.positions[i];
    return total / static_cast<double>(t.size());
}

std::optional<double> brute_fcr(const std::vector<double>& f, const std::vector<double>& d, double th) {
    std::optional<double> best;
    for (std::size_t i = f.size(); i-- > 1;)
        if (d[i] - d[i - 1] > th) best = f[i];
    return best;
}

std::vector<SweepPoint> points(const std::vector<double>& f, const std::vector<double>& d) {
    std::vector<SweepPoint> p;
    for (std::size_t i = 0; i < f.size(); ++i) p.push_back({f[i], d[i]});
    return p;
}

}  // namespace

TEST_CASE("compute_Df examples") {
    CHECK(compute_Df(make_traj({0, 1, 2}, {{0, 0}, {0, 0}, {0, 0}})) == 0.0);
    CHECK(compute_Df(make_traj({0, 1, 2, 3}, {{1}, {1}, {1}, {1}})) == 1.0);
    CHECK(compute_Df(make_traj({0, 1}, {{1, 2}, {3, 0}})) == 7.0);
}

TEST_CASE("compute_Df transient skip") {
    const auto t = make_traj({0, 1, 2}, {{10}, {1}, {3}});
    CriterionConfig c;
    c.transient_skip = 1.0;
    CHECK(compute_Df(t, c) == 5.0);
    c.transient_skip = 5.0;
    CHECK_THROWS_AS(compute_Df(t, c), ContractViolation);
    CHECK_THROWS_AS(compute_Df(Trajectory{}), ContractViolation);
}

TEST_CASE("compute_Df matches brute force on random trajectories") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = random_traj(rng, 1 + trial % 7, 1 + trial * 3);
        CriterionConfig c;
        c.transient_skip = trial % 2 ? 0.0 : 0.05 * trial;
        if (c.transient_skip > t.sample_times.back()) c.transient_skip = 0.0;
        CHECK(compute_Df(t, c) == brute_Df(t, c.transient_skip));
        CHECK_THAT(compute_Df(t), Catch::Matchers::WithinRel(brute_Df_site_major(t), 1e-12));
    }
}

TEST_CASE("compute_Df is sign-invariant and monotone in |x|") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        auto t = random_traj(rng, 5, 40);
        auto flipped = t, bigger = t;
        for (auto& s : flipped.states)
            for (auto& x : s.positions) x = -x;
        for (auto& s : bigger.states)
            for (auto& x : s.positions) x *= 1.01;
        CHECK(compute_Df(flipped) == compute_Df(t));
        CHECK(compute_Df(bigger) >= compute_Df(t));
    }
}

TEST_CASE("detect_fcr examples") {
    const std::vector<double> f{2.5, 2.6, 2.7, 2.8, 2.9};
    CHECK(detect_fcr(points(f, {1, 2, 5, 2000, 3500}), 1000.0) == 2.8);
    CHECK_FALSE(detect_fcr(points({1, 2, 3, 4}, {1, 2, 3, 4}), 1000.0).has_value());
    CHECK_THROWS_AS(detect_fcr(points({1}, {1}), 1000.0), ContractViolation);
    CHECK_THROWS_AS(detect_fcr(points({1, 1}, {1, 5000}), 1000.0), ContractViolation);
    // A jump at the very first point has no predecessor and cannot count.
    CHECK_FALSE(detect_fcr(points({1, 2}, {5000, 5001}), 1000.0).has_value());
}

TEST_CASE("detect_fcr matches brute force and is stable under truncation") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + trial % 12;
        std::vector<double> f, d;
        for (std::size_t i = 0; i < k; ++i) {
            f.push_back(0.2 + 0.1 * static_cast<double>(i));
            d.push_back(u(rng) < 0.2 ? 3000.0 * u(rng) : 10.0 * u(rng));
        }
        const auto hit = detect_fcr(points(f, d), 1000.0);
        CHECK(hit == brute_fcr(f, d, 1000.0));
        if (hit) {
            const auto idx = static_cast<std::size_t>(std::find(f.begin(), f.end(), *hit) - f.begin());
            REQUIRE(idx >= 1);
            const std::vector<double> ft(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(idx + 1));
            const std::vector<double> dt(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(idx + 1));
            CHECK(detect_fcr(points(ft, dt), 1000.0) == hit);
        }
    }
}

TEST_CASE("linear_fit examples and properties") {
    const std::vector<double> xs{1, 2, 3, 4, 5};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(2 * x + 1);
    const auto fit = linear_fit(xs, ys);
    CHECK_THAT(fit.slope, WithinAbs(2.0, 1e-14));
    CHECK_THAT(fit.intercept, WithinAbs(1.0, 1e-13));
    CHECK_THAT(fit.residual_rms, WithinAbs(0.0, 1e-13));

    CHECK_THROWS_AS(linear_fit(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}), DegenerateFitError);
    CHECK_THROWS_AS(linear_fit(std::vector<double>{2}, std::vector<double>{1}), DegenerateFitError);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x, y, shifted;
        for (int i = 0; i < 8; ++i) {
            x.push_back(2.5 + 0.5 * i);
            y.push_back(1.3 * x.back() + g(rng));
            shifted.push_back(y.back() + 7.0);
        }
        const auto a = linear_fit(x, y), b = linear_fit(x, shifted);
        CHECK_THAT(b.slope, WithinAbs(a.slope, 1e-12));
        CHECK(a.residual_rms > 0.0);
        // Normal equations: residuals are orthogonal to 1 and x.
        double r0 = 0, r1 = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - (a.slope * x[i] + a.intercept);
            r0 += r;
            r1 += r * x[i];
        }
        CHECK_THAT(r0, WithinAbs(0.0, 1e-10));
        CHECK_THAT(r1, WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("classify_realizations examples") {
    std::vector<std::pair<std::uint64_t, double>> d{
        {0, std::pow(10.0, 0.5)}, {1, std::pow(10.0, 0.7)}, {2, std::pow(10.0, 4.2)}, {3, std::pow(10.0, 4.5)}};
    const auto r = classify_realizations(d, 2.0);
    CHECK(r.probability == 0.5);
    CHECK(r.classify_cutoff == 2.0);
    CHECK_FALSE(r.realizations[0].supratransmitting);
    CHECK(r.realizations[3].supratransmitting);
    CHECK(r.realizations[2].seed == 2);

    std::vector<std::pair<std::uint64_t, double>> low{{0, 1.0}, {1, 3.0}};
    CHECK(classify_realizations(low, 2.0).probability == 0.0);
    CHECK_THROWS_AS(classify_realizations({}, 2.0), ContractViolation);
}

TEST_CASE("classification probability is permutation invariant") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 5.0);
    std::vector<std::pair<std::uint64_t, double>> d;
    for (std::uint64_t i = 0; i < 100; ++i) d.emplace_back(i, std::pow(10.0, u(rng)));
    const double p = classify_realizations(d, 2.0).probability;
    for (int i = 0; i < 20; ++i) {
        std::shuffle(d.begin(), d.end(), rng);
        CHECK(classify_realizations(d, 2.0).probability == p);
    }
}

TEST_CASE("empirical cdf examples") {
    const auto single = empirical_cdf({3.0});
    CHECK(single(2.999) == 0.0);
    CHECK(single(3.0) == 1.0);
    const auto e = empirical_cdf({1, 2, 2, 4});
    CHECK(e(2.0) == 0.75);
    CHECK(e(0.0) == 0.0);
    CHECK(e(4.0) == 1.0);
    CHECK(e.support_width() == 3.0);
    const auto steps = e.steps();
    REQUIRE(steps.size() == 3);
    CHECK(steps[1] == std::pair<double, double>{2.0, 0.75});
    CHECK_THROWS_AS(empirical_cdf({}), ContractViolation);
}

TEST_CASE("empirical cdf is monotone from 0 to 1") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    std::vector<double> s(200);
    for (auto& x : s) x = g(rng);
    const auto e = empirical_cdf(s);
    double prev = 0.0;
    for (double x = -6.0; x <= 6.0; x += 0.01) {
        CHECK(e(x) >= prev);
        prev = e(x);
    }
    CHECK(e(-6.0) == 0.0);
    CHECK(e(6.0) == 1.0);
}

TEST_CASE("Kolmogorov-Smirnov distance") {
    const auto a = empirical_cdf({1, 2, 3, 4});
    CHECK(ks_distance(a, a) == 0.0);
    CHECK(ks_distance(a, empirical_cdf({5, 6})) == 1.0);
    CHECK(ks_distance(a, empirical_cdf({1, 2})) == 0.5);
    CHECK(ks_distance(empirical_cdf({1, 2}), a) == 0.5);
}

TEST_CASE("Wilson interval") {
    const auto [lo, hi] = wilson_interval(50, 100);
    CHECK_THAT(lo, WithinAbs(0.40383, 1e-4));
    CHECK_THAT(hi, WithinAbs(0.59617, 1e-4));
    const auto [l0, h0] = wilson_interval(0, 250);
    CHECK(l0 == 0.0);
    CHECK(h0 > 0.0);
    CHECK(h0 < 0.02);
}

TEST_CASE("envelope and turning-time helpers") {
    const auto t = make_traj({0, 1, 2, 3, 4, 5, 6, 7}, {{0.1}, {-0.9}, {0.2}, {0.1}, {0.5}, {-0.2}, {0.1}, {0.05}});
    const auto env = windowed_envelope(t, 2.0);
    REQUIRE(env.size() == 4);
    CHECK(env[0] == std::pair<double, double>{0.0, 0.9});
    CHECK(env[1] == std::pair<double, double>{2.0, 0.2});
    CHECK(env[2] == std::pair<double, double>{4.0, 0.5});
    CHECK(env[3] == std::pair<double, double>{6.0, 0.1});
    const auto s = summarize_envelope(env);
    CHECK(s.peak == 0.9);
    CHECK(s.maxima.size() == 1);  // the first window has no left neighbour
    CHECK(s.count_above(0.5) == 1);
    CHECK_THAT(s.largest_later_ratio(), WithinAbs(0.5 / 0.9, 1e-15));

    const std::vector<double> v{0, 1, 1, 0, 2, 3, 1};
    CHECK(local_maxima(v) == std::vector<std::size_t>{1, 5});

    CHECK(energy_centroid(std::vector<double>{0, 1, 0, 1}, 10) == 3.0);
    CHECK(energy_centroid(std::vector<double>{0, 1, 0, 1}, 3) == 2.0);
    const std::vector<double> times{0, 1, 2, 3, 4}, centroid{1, 2, 3, 2.5, 4};
    CHECK(turning_time(times, centroid) == 2.0);
    CHECK_FALSE(turning_time(times, std::vector<double>{1, 2, 3, 4, 5}).has_value());
}
