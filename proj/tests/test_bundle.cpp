#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cylweb/bundle.hpp"
#include "cylweb/closedform.hpp"
#include "cylweb/stats.hpp"

using namespace cylweb;
using namespace cylweb::web;

TEST_CASE("walkers started at the same point merge immediately") {
    const TimeGrid grid{0.0, 1e-3, 10};
    const auto b = sample_coalescing_bundle({0.3, 0.3, 0.7}, {0.0, 0.0, 0.0}, grid, 5);
    CHECK(b.root_at(1, 0.0) == b.root_at(0, 0.0));
    CHECK(b.root_at(2, 0.0) != b.root_at(0, 0.0));
    CHECK(b.pos[0][0] == b.pos[0][1]);
}

TEST_CASE("single walker increments are gaussian") {
    const double dt = 1e-3;
    const TimeGrid grid{0.0, dt, 20000};
    const auto b = sample_coalescing_bundle({0.5}, {0.0}, grid, 6);
    std::vector<double> incs;
    double prev = 0.5, unwrapped = 0.5;
    for (std::size_t i = 1; i < b.pos.size(); ++i) {
        const double raw = b.pos[i][0];
        double step = raw - prev;
        step -= std::round(step);  // increments are far below 1/2
        unwrapped += step;
        incs.push_back(step);
        prev = raw;
    }
    const double sd = std::sqrt(dt);
    const auto rep = stats::ks_test(
        incs, [&](double x) { return stats::normal_cdf(x / sd); });
    CHECK(rep.p_value > 1e-3);
}

TEST_CASE("two-walker system matches the gap process in law") {
    const double dt = 5e-4, gap0 = 0.3;
    const int N = 4000;
    std::vector<double> via_system(N), via_gap(N);
    for (int rep = 0; rep < N; ++rep) {
        Rng rng(derive_seed(111, static_cast<std::uint64_t>(rep)));
        CoalescingSystem sys({0.1, 0.1 + gap0}, {0.0, 0.0}, 0.0, true);
        while (!sys.fully_coalesced() && sys.time() < 20.0) sys.step(dt, rng);
        via_system[static_cast<std::size_t>(rep)] = sys.time();
        Rng rng2(derive_seed(222, static_cast<std::uint64_t>(rep)));
        via_gap[static_cast<std::size_t>(rep)] = pair_coalescence_time(gap0, dt, 20.0, rng2).time;
    }
    CHECK(stats::ks_test_two_sample(via_system, via_gap).p_value > 1e-3);
}

TEST_CASE("pair coalescence time matches the quadrature survival") {
    const double gap0 = 0.25, dt = 2e-4;
    const int N = 6000;
    std::vector<double> times(static_cast<std::size_t>(N));
    for (int rep = 0; rep < N; ++rep) {
        Rng rng(derive_seed(333, static_cast<std::uint64_t>(rep)));
        times[static_cast<std::size_t>(rep)] = pair_coalescence_time(gap0, dt, 10.0, rng).time;
    }
    stats::Ecdf ecdf(times);
    for (double t : {0.05, 0.15, 0.4}) {
        const double mc = ecdf.survival(t);
        const double quad = fulmek_survival({0.0, gap0}, t).value;
        const double se = std::sqrt(mc * (1 - mc) / N);
        CHECK(std::fabs(mc - quad) <= 4.0 * se + 2.0 * dt);
    }
}

TEST_CASE("partition only coarsens and eta is monotone") {
    const TimeGrid grid{0.0, 1e-3, 400};
    std::vector<double> xs(16), ts(16, 0.0);
    for (int i = 0; i < 16; ++i) xs[static_cast<std::size_t>(i)] = i / 16.0;
    const auto b = sample_coalescing_bundle(xs, ts, grid, 7);
    const Arc full{CirclePos(0.0), CirclePos(0.999999)};
    int prev = 1 << 30;
    for (double t : {0.0, 0.1, 0.2, 0.3, 0.4}) {
        const auto counts = eta_counts(b, 0.0, t, full);
        CHECK(counts.eta <= prev);
        prev = counts.eta;
        if (t > 0.0) CHECK(counts.eta_hat >= 1);
    }
}

TEST_CASE("eta on a degenerate arc sees one class") {
    const TimeGrid grid{0.0, 1e-3, 100};
    std::vector<double> xs{0.2, 0.6};
    const auto b = sample_coalescing_bundle(xs, {0.0, 0.0}, grid, 8);
    const Arc point{CirclePos(0.2), CirclePos(0.2)};
    const auto counts = eta_counts(b, 0.0, 0.1, point);
    CHECK(counts.eta == 1);
    CHECK_THROWS(eta_counts(b, 0.0, 5.0, point));
}

TEST_CASE("reflected pair keeps its gap in range and marginals uniform") {
    const TimeGrid grid{0.0, 1e-3, 700};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto pair = sample_reflected_pair(grid, 1000 + seed);
        for (std::size_t i = 0; i < pair.gap.size(); ++i) {
            CHECK(pair.gap[i] >= 0.0);
            CHECK(pair.gap[i] <= 1.0);
            const double ccw = reduce_unit(pair.y_down[i] - pair.y_up[i]);
            CHECK(std::fabs(ccw - pair.gap[i]) < 1e-9);
        }
    }
    const int N = 20000;
    std::vector<double> yup(N), gap(N);
    Rng rng(1234);
    for (int i = 0; i < N; ++i) {
        const auto m = reflected_pair_at(0.7, rng);
        yup[static_cast<std::size_t>(i)] = m.y_up;
        gap[static_cast<std::size_t>(i)] = m.gap;
    }
    auto unif = [](double x) { return std::clamp(x, 0.0, 1.0); };
    CHECK(stats::ks_test(yup, unif).p_value > 1e-3);
    CHECK(stats::ks_test(gap, unif).p_value > 1e-3);
}

TEST_CASE("reflected pair is jointly uniform on the torus") {
    const int N = 40000, cells = 6;
    std::vector<std::int64_t> counts(cells * cells, 0);
    Rng rng(777);
    for (int i = 0; i < N; ++i) {
        const auto m = reflected_pair_at(0.5, rng);
        const int a = std::min(cells - 1, static_cast<int>(m.y_up * cells));
        const int b = std::min(cells - 1, static_cast<int>(m.y_down * cells));
        ++counts[static_cast<std::size_t>(a * cells + b)];
    }
    const auto rep =
        stats::chi2_test(counts, std::vector<double>(cells * cells, 1.0 / (cells * cells)));
    CHECK(rep.p_value > 1e-3);
}

TEST_CASE("ladder sample never crosses and has a consistent gap") {
    LadderOptions opt;
    opt.window = 0.5;
    opt.dt = 1e-3;
    opt.mesh = 16;
    int censored = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto lad = biinfinite_ladder(opt, 4000 + seed);
        if (lad.censored) {
            ++censored;
            continue;
        }
        for (std::size_t i = 0; i < lad.gap.size(); ++i) {
            CHECK(lad.gap[i] >= 0.0);
            CHECK(lad.gap[i] <= 1.0);
            const double ccw = reduce_unit(lad.c_down[i] - lad.c_up[i]);
            CHECK(std::fabs(ccw - lad.gap[i]) < 1e-9);
        }
    }
    CHECK(censored <= 2);
}

TEST_CASE("ladder gap law matches the reflected pair law") {
    LadderOptions opt;
    opt.window = 0.6;
    opt.dt = 1e-3;
    opt.mesh = 16;
    const int N = 700;
    std::vector<double> gaps;
    for (int rep = 0; rep < N; ++rep) {
        const auto lad = biinfinite_ladder(opt, derive_seed(888, static_cast<std::uint64_t>(rep)));
        if (!lad.censored)
            gaps.push_back(lad.gap[static_cast<std::size_t>(lad.grid.steps / 2)]);
    }
    auto unif = [](double x) { return std::clamp(x, 0.0, 1.0); };
    CHECK(stats::ks_test(gaps, unif).p_value > 1e-3);
}

TEST_CASE("three-walker chaining through the closed-form transform") {
    // E[e^{theta T_3}] two ways: directly, and via the conditional transform
    // of the remaining pair at the first merge time
    const double theta = -1.0, dt = 2e-4;
    const int N = 5000;
    std::vector<double> direct(N), chained(N);
    for (int rep = 0; rep < N; ++rep) {
        Rng rng(derive_seed(999, static_cast<std::uint64_t>(rep)));
        CoalescingSystem sys({0.1, 0.45, 0.8}, {0.0, 0.0, 0.0}, 0.0, true);
        double t_first = -1.0;
        double gap_at_first = 0.0;
        while (!sys.fully_coalesced() && sys.time() < 40.0) {
            sys.step(dt, rng);
            if (t_first < 0.0 && sys.live_count() == 2) {
                t_first = sys.time();
                // circular gap between the two survivors
                std::vector<double> pos;
                for (int w = 0; w < 3; ++w) pos.push_back(sys.position_of(w));
                std::sort(pos.begin(), pos.end());
                pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
                REQUIRE(pos.size() == 2);
                const double g = reduce_unit(pos[1] - pos[0]);
                gap_at_first = std::min(g, 1.0 - g);
            }
        }
        direct[static_cast<std::size_t>(rep)] = std::exp(theta * sys.time());
        if (t_first < 0.0 || gap_at_first <= 0.0) {
            // everything merged in one step: no pair stage remains
            chained[static_cast<std::size_t>(rep)] = std::exp(theta * sys.time());
        } else {
            chained[static_cast<std::size_t>(rep)] =
                std::exp(theta * t_first) * laplace_T2to1(theta, 0.0, gap_at_first);
        }
    }
    const double m1 = stats::mean(direct), m2 = stats::mean(chained);
    const double se = std::sqrt(stats::variance(direct) / N + stats::variance(chained) / N);
    CHECK(std::fabs(m1 - m2) <= 3.0 * se);
}

TEST_CASE("staggered starts activate on time") {
    const TimeGrid grid{0.0, 1e-3, 300};
    const auto b = sample_coalescing_bundle({0.2, 0.21}, {0.0, 0.2}, grid, 9);
    // before activation the late walker sits at its start
    const auto idx_early = static_cast<std::size_t>(100);
    CHECK(b.pos[idx_early][1] == 0.21);
    // after activation it moves
    bool moved = false;
    for (std::size_t i = 210; i < b.pos.size(); ++i)
        if (b.pos[i][1] != 0.21) moved = true;
    CHECK(moved);
}
