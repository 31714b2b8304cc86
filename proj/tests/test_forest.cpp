#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cylweb/circle.hpp"
#include "cylweb/forest.hpp"
#include "cylweb/stats.hpp"

using namespace cylweb;
using namespace cylweb::forest;

TEST_CASE("increment variance formula") {
    CHECK(increment_sigma2(1.0) == doctest::Approx(0.5 - 5.0 / (4.0 * std::exp(1.0))).epsilon(1e-12));
    CHECK(increment_sigma2(1.0) == doctest::Approx(0.040151).epsilon(2e-5));
    // large-intensity equivalent
    CHECK(2.0 * 100.0 * 100.0 * increment_sigma2(100.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("schedule basics") {
    const auto s = build_schedule("const:2", 50);
    const double s2 = increment_sigma2(2.0);
    CHECK(s.V[9] == doctest::Approx(10 * s2).epsilon(1e-12));
    // R(t) = ceil(t / sigma^2) for a constant intensity
    for (double t : {0.01, 0.05, 0.11}) {
        CHECK(s.R(t) == static_cast<std::size_t>(std::ceil(t / s2)));
    }
    CHECK_THROWS(s.R(1e9));
    CHECK_THROWS(build_schedule("const:-1", 5));
    CHECK_THROWS(build_schedule("sqrt:2", 5));
}

TEST_CASE("schedule hypothesis audit") {
    const auto s = build_schedule("pow:0.3", 2000, "pow:-0.2");
    const auto h = s.audit();
    CHECK(h.last_f < 0.25);
    CHECK(h.f_decreasing_tail);
    CHECK(h.sum_inv_n2 > 20.0);        // divergence surrogate: large partial sum
    CHECK(h.last_term < h.first_term);  // summand decay
    CHECK_THROWS(build_schedule("pow:0.3", 10).audit());
}

TEST_CASE("increment law: atom, moments, tail") {
    Rng rng(61);
    const double n = 2.0;
    const int N = 200000;
    int zeros = 0, tail = 0;
    std::vector<double> sample(N);
    for (int i = 0; i < N; ++i) {
        const double v = sample_increment(n, rng);
        CHECK(v >= -0.5);
        CHECK(v <= 0.5);
        sample[static_cast<std::size_t>(i)] = v;
        if (v == 0.0) ++zeros;
        if (std::fabs(v) >= 0.2) ++tail;
    }
    const double p0 = std::exp(-n);
    CHECK(std::fabs(static_cast<double>(zeros) / N - p0) <= 3.0 * std::sqrt(p0 * (1 - p0) / N));
    const double pt = std::exp(-2.0 * n * 0.2) - std::exp(-n);
    CHECK(std::fabs(static_cast<double>(tail) / N - pt) <= 3.0 * std::sqrt(pt * (1 - pt) / N));
    const double m = stats::mean(sample);
    CHECK(std::fabs(m) <= 3.0 * std::sqrt(increment_sigma2(n) / N));
    CHECK(stats::variance(sample) == doctest::Approx(increment_sigma2(n)).epsilon(0.01));
}

TEST_CASE("homogeneous tree jump law") {
    Rng rng(62);
    std::vector<double> heights, angles;
    for (int rep = 0; rep < 300; ++rep) {
        const auto jumps = cpt_single_path(1.0, 0.5, 400.0, rng);
        for (const auto& j : jumps) {
            heights.push_back(j.dt);
            angles.push_back(j.dx);
        }
    }
    // gap law Exp(2 r lambda) = Exp(1) at lambda = 1, r = 1/2
    CHECK(stats::ks_test(heights, [](double x) {
              return x <= 0 ? 0.0 : 1.0 - std::exp(-x);
          }).p_value > 1e-3);
    CHECK(stats::ks_test(angles, [](double x) {
              return std::clamp((x + 0.5), 0.0, 1.0);
          }).p_value > 1e-3);
}

TEST_CASE("window tree agrees with the renewal fast path") {
    // follow the ancestor line of the lowest point in a window sample
    std::vector<double> heights;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto s = sample_cpt(2.0, 0.25, 0.0, 40.0, 7000 + seed);
        if (s.points.empty()) continue;
        int i = 0;
        while (s.parent[static_cast<std::size_t>(i)] >= 0) {
            const int p = s.parent[static_cast<std::size_t>(i)];
            heights.push_back(s.points[static_cast<std::size_t>(p)].t -
                              s.points[static_cast<std::size_t>(i)].t);
            i = p;
        }
    }
    // Exp(2 r lambda) = Exp(1)
    CHECK(stats::ks_test(heights, [](double x) {
              return x <= 0 ? 0.0 : 1.0 - std::exp(-x);
          }).p_value > 1e-3);
}

namespace {

/// interpolated position of the ancestor line of point i at the probe
/// height, or false when the line leaves the sampled window first
bool line_position_at(const CptSample& s, std::size_t i, double probe, double& out) {
    std::size_t cur = i;
    while (s.points[cur].t < probe) {
        const int p = s.parent[cur];
        if (p < 0) return false;
        if (s.points[static_cast<std::size_t>(p)].t >= probe) {
            const auto& a = s.points[cur];
            const auto& b = s.points[static_cast<std::size_t>(p)];
            const double w = (probe - a.t) / (b.t - a.t);
            double dx = b.x - a.x;
            dx -= std::round(dx);  // shortest representative
            out = reduce_unit(a.x + w * dx);
            return true;
        }
        cur = static_cast<std::size_t>(p);
    }
    out = reduce_unit(s.points[cur].x);
    return true;
}

}  // namespace

TEST_CASE("tree navigation preserves circular order") {
    // the circular order of the ancestor lines at one height must persist at
    // every later height (merges collapse entries but never swap them)
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto s = sample_cpt(5.0, 0.2, 0.0, 10.0, 331 + seed);
        if (s.points.size() < 6) continue;
        const double probe1 = 2.0, probe2 = 7.0;
        std::vector<std::pair<double, double>> lines;  // (pos at probe1, pos at probe2)
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            if (s.points[i].t > probe1) continue;
            double p1, p2;
            if (line_position_at(s, i, probe1, p1) && line_position_at(s, i, probe2, p2))
                lines.emplace_back(p1, p2);
        }
        if (lines.size() < 3) continue;
        std::sort(lines.begin(), lines.end());
        int wraps = 0;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const double a = lines[i].second;
            const double b = lines[(i + 1) % lines.size()].second;
            if (b < a) ++wraps;
        }
        CHECK(wraps <= 1);
    }
}

TEST_CASE("sliced forest: vertical rule, void probability, order") {
    const auto schedule = build_schedule("const:1.5", 400);
    int empty_slices = 0;
    const auto f = sample_sliced_forest(schedule, 0, 400, 17);
    for (std::size_t k = 0; k + 1 < f.angles.size(); ++k) {
        if (f.angles[k + 1].empty()) {
            ++empty_slices;
            for (const int a : f.ancestor[k]) CHECK(a == -1);
        } else {
            for (const int a : f.ancestor[k]) CHECK(a >= 0);
        }
    }
    const double p = std::exp(-1.5);
    const double hat = empty_slices / 399.0;
    CHECK(std::fabs(hat - p) <= 3.0 * std::sqrt(p * (1 - p) / 399.0));

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto g = sample_sliced_forest(schedule, 0, 50, 100 + seed);
        CHECK(forest_order_preserved(g));
    }
}

TEST_CASE("planar nearest-point law") {
    Rng rng(63);
    const double d = 1.0;
    const int N = 200000;
    int atoms = 0;
    std::vector<double> sample(N);
    for (int i = 0; i < N; ++i) {
        sample[static_cast<std::size_t>(i)] = planar_delta(d, rng);
        if (sample[static_cast<std::size_t>(i)] == -d) ++atoms;
    }
    const double m_d = 2.0 * std::exp(-2.0);
    CHECK(std::fabs(static_cast<double>(atoms) / N - m_d) <=
          3.0 * std::sqrt(m_d * (1 - m_d) / N));
    const auto law = mu_eval(d, Law::Mu);
    CHECK(std::fabs(stats::mean(sample)) <= 3.0 * std::sqrt(law.variance / N));
    CHECK(stats::variance(sample) == doctest::Approx(law.variance).epsilon(0.01));
}

TEST_CASE("planar law ks at a second distance") {
    Rng rng(64);
    const double d = 0.5;
    const int N = 20000;
    std::vector<double> sample(N);
    for (int i = 0; i < N; ++i) sample[static_cast<std::size_t>(i)] = planar_delta(d, rng);
    const auto law = mu_eval(d, Law::Mu);
    CHECK(stats::ks_test(sample, [&](double u) { return law.cdf(u); }, law.atoms).p_value > 1e-3);
}

namespace {

/// quadrature of u^k against the density pieces, tails included
void law_moments(const LawSpec& law, double& mass, double& mean, double& var) {
    static const double gx[16] = {-0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
                                  -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
                                  -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
                                  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
                                  0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
                                  0.9894009349916499};
    static const double gw[16] = {0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
                                  0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
                                  0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
                                  0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
                                  0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
                                  0.0271524594117541};
    mass = 0.0;
    mean = 0.0;
    var = 0.0;
    for (const auto& a : law.atoms) {
        mass += a.mass;
        mean += a.location * a.mass;
        var += a.location * a.location * a.mass;
    }
    const double d = law.d;
    auto piece = [&](double lo, double hi, int panels) {
        for (int p = 0; p < panels; ++p) {
            const double a = lo + (hi - lo) * p / panels;
            const double b = lo + (hi - lo) * (p + 1) / panels;
            for (int q = 0; q < 16; ++q) {
                const double u = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
                const double w = 0.5 * (b - a) * gw[q];
                const double f = law.pdf(u);
                mass += w * f;
                mean += w * u * f;
                var += w * u * u * f;
            }
        }
    };
    piece(-d, 0.0, 8);
    piece(0.0, d, 8);
    piece(d, d + 2.0, 16);
    piece(d + 2.0, d + 90.0, 220);
}

}  // namespace

TEST_CASE("law mass, mean and variance identities") {
    for (double d : {0.1, 0.5, 1.0, 2.0, 5.0}) {
        for (auto which : {Law::Mu, Law::MuBar}) {
            const auto law = mu_eval(d, which);
            double mass, mean, var;
            law_moments(law, mass, mean, var);
            CHECK(std::fabs(mass - 1.0) < 1e-12);
            CHECK(std::fabs(mean) < 1e-12);
            CHECK(std::fabs(var - law.variance) < 1e-8);
            CHECK(law.cdf(d + 200.0) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(law.cdf(-1e9) == 0.0);
        }
    }
}

TEST_CASE("central density and small-d constants") {
    // f_1(0) = 1/2 - e^{-2}/2
    const auto law = mu_eval(1.0, Law::Mu);
    CHECK(law.pdf(0.0) == doctest::Approx(0.5 - 0.5 * std::exp(-2.0)).epsilon(1e-12));
    CHECK(law.pdf(0.0) == doctest::Approx(0.432332).epsilon(1e-5));
    // the auxiliary atom and upper tail coefficient at vanishing d
    const auto aux = mu_eval(1e-9, Law::MuBar);
    CHECK(aux.atoms[0].mass == doctest::Approx(0.75).epsilon(1e-6));
    // past d+2 the density is (d + beta) e^{-u-d}; at d -> 0 only beta remains
    const double expected = std::exp(2.0) / 4.0 * std::exp(-2.5);
    CHECK(aux.pdf(2.5) == doctest::Approx(expected).epsilon(1e-4));
    // the auxiliary atom never exceeds the original one
    for (double d : {0.1, 0.5, 1.0, 3.0}) {
        CHECK(mu_eval(d, Law::MuBar).atoms[0].mass <= (d + 1.0) * std::exp(-2.0 * d));
    }
}

TEST_CASE("skorokhod exit probability and martingale identity") {
    CHECK(exit_upper_prob(-1.0, 3.0) == doctest::Approx(0.25));
    Rng rng(65);
    const int N = 100000;
    std::vector<double> exits(N);
    for (int i = 0; i < N; ++i) exits[static_cast<std::size_t>(i)] = skorokhod_step(1.0, rng).exit_value;
    const auto law = mu_eval(1.0, Law::MuBar);
    CHECK(std::fabs(stats::mean(exits)) <= 3.0 * std::sqrt(law.variance / N));
    CHECK(stats::ks_test(exits, [&](double u) { return law.cdf(u); }, law.atoms).p_value > 1e-3);
}

TEST_CASE("distance scaling identity") {
    Rng rng(66);
    const int N = 30000;
    for (const auto& [lambda, d] : std::vector<std::pair<double, double>>{{2.0, 0.5}, {5.0, 0.2}}) {
        std::vector<double> a(N), b(N);
        for (int i = 0; i < N; ++i) {
            a[static_cast<std::size_t>(i)] = planar_delta(d, rng, lambda);
            b[static_cast<std::size_t>(i)] = planar_delta(lambda * d, rng) / lambda;
        }
        CHECK(stats::ks_test_two_sample(a, b).p_value > 1e-3);
    }
}

TEST_CASE("distance process is a martingale step by step") {
    Rng rng(67);
    const int N = 100000;
    const double D_prev = 0.3, nk = 2.0;
    std::vector<double> inc(N);
    for (int i = 0; i < N; ++i)
        inc[static_cast<std::size_t>(i)] = planar_delta(D_prev * nk, rng) / nk;
    const double se = std::sqrt(stats::variance(inc) / N);
    CHECK(std::fabs(stats::mean(inc)) <= 3.0 * se);
}

TEST_CASE("coalescence tail: coupled monotonicity and shape") {
    auto schedule = build_schedule("pow:0.3", 3000);
    const auto k_max = schedule.R(2.0);
    const std::size_t N = 2000;
    const auto s_small =
        coalescence_tail(TailModel::Cylinder, schedule, 0.1, k_max, N, 4242);
    const auto s_large =
        coalescence_tail(TailModel::Cylinder, schedule, 0.2, k_max, N, 4242);
    for (std::size_t k = 0; k < k_max; ++k) {
        CHECK(s_small.survival[k] <= s_large.survival[k] + 1e-12);  // pathwise coupling
        CHECK(s_small.normalized[k] ==
              doctest::Approx(s_small.survival[k] * std::sqrt(s_small.h[k]) / 0.1));
    }
    CHECK_THROWS(coalescence_tail(TailModel::Cylinder, schedule, 0.7, k_max, N, 1));
}

TEST_CASE("shifted path displacement variance") {
    auto schedule = build_schedule("pow:0.3", 600);
    Rng rng(68);
    const int N = 4000;
    const double t = 0.5;
    std::vector<double> disp(N);
    for (int i = 0; i < N; ++i)
        disp[static_cast<std::size_t>(i)] = sliced_path_displacement(schedule, 100, t, rng);
    stats::MomentTargets targets;
    targets.has_mean = true;
    targets.mean = 0.0;
    targets.has_variance = true;
    targets.variance = t;
    CHECK(stats::moment_report(disp, targets).verdict);
}
