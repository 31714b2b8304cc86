#include <doctest.h>

#include <cmath>
#include <vector>

#include "cylweb/rng.hpp"
#include "cylweb/stats.hpp"

using namespace cylweb;
using namespace cylweb::stats;

TEST_CASE("gamma_q reference values") {
    // frozen against scipy.special.gammaincc
    CHECK(gamma_q(0.5, 1.0) == doctest::Approx(0.15729920705028105).epsilon(1e-10));
    CHECK(gamma_q(2.5, 0.5) == doctest::Approx(0.9625657732472964).epsilon(1e-10));
    CHECK(gamma_q(9.5, 12.0) == doctest::Approx(0.19615235720749558).epsilon(1e-8));
}

TEST_CASE("kolmogorov tail reference values") {
    // frozen against scipy.special.kolmogorov
    CHECK(kolmogorov_q(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-9));
    CHECK(kolmogorov_q(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-9));
    CHECK(kolmogorov_q(2.0) == doctest::Approx(0.0006709252557796953).epsilon(1e-6));
}

TEST_CASE("ks uniform calibration") {
    Rng rng(100);
    int reject_05 = 0, reject_001 = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> sample(2000);
        for (auto& v : sample) v = rng.u01();
        const auto rep = ks_test(sample, [](double x) { return std::clamp(x, 0.0, 1.0); });
        if (rep.p_value < 0.05) ++reject_05;
        if (rep.p_value < 0.001) ++reject_001;
    }
    // binomial 3-sigma bands around the nominal levels
    CHECK(reject_05 <= 0.05 * trials + 3 * std::sqrt(0.05 * 0.95 * trials));
    CHECK(reject_05 >= 0.05 * trials - 3 * std::sqrt(0.05 * 0.95 * trials));
    CHECK(reject_001 <= 3);
}

TEST_CASE("ks detects a wrong law") {
    std::vector<double> constant(200, 0.3);
    const auto rep = ks_test(constant, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(rep.p_value < 1e-6);
    CHECK_FALSE(rep.verdict);
}

TEST_CASE("ks with an atom splits the sample") {
    Rng rng(101);
    const double atom_mass = 0.3;
    std::vector<double> sample;
    for (int i = 0; i < 20000; ++i) {
        sample.push_back(rng.u01() < atom_mass ? -1.0 : rng.u01());
    }
    // mixed law: atom at -1 with mass .3, uniform on [0,1] with mass .7
    auto cdf = [&](double x) {
        double c = x >= -1.0 ? atom_mass : 0.0;
        if (x > 0.0) c += 0.7 * std::min(x, 1.0);
        return c;
    };
    const auto rep = ks_test(sample, cdf, {{-1.0, atom_mass}});
    CHECK(rep.verdict);

    const auto bad = ks_test(sample, cdf, {{-1.0, 0.5}});
    CHECK_FALSE(bad.verdict);
}

TEST_CASE("two-sample ks calibration") {
    Rng rng(102);
    std::vector<double> a(5000), b(5000);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    CHECK(ks_test_two_sample(a, b).verdict);
    for (auto& v : b) v += 0.2;
    CHECK_FALSE(ks_test_two_sample(a, b).verdict);
}

TEST_CASE("chi2 calibration and power") {
    Rng rng(103);
    std::vector<std::int64_t> counts(10, 0);
    for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(rng.below(10))];
    std::vector<double> probs(10, 0.1);
    CHECK(chi2_test(counts, probs).verdict);
    counts[0] += 500;
    CHECK_FALSE(chi2_test(counts, probs).verdict);
}

TEST_CASE("dominance detector") {
    Rng rng(104);
    std::vector<double> a(4000), b(4000);
    for (auto& v : a) v = rng.normal();
    b = a;
    std::vector<double> thresholds{-1.0, 0.0, 1.0};
    CHECK(ecdf_dominance(a, b, thresholds).verdict);
    for (auto& v : b) v += 1.0;
    CHECK(ecdf_dominance(a, b, thresholds).verdict);  // a <=_S b holds
    CHECK_FALSE(ecdf_dominance(b, a, thresholds).verdict);
}

TEST_CASE("laplace_mc on exponential sample") {
    Rng rng(105);
    std::vector<double> sample(200000);
    for (auto& v : sample) v = rng.expo(1.0);
    const auto est = laplace_mc(sample, -1.0);
    CHECK(std::fabs(est.estimate - 0.5) <= 3.0 * est.stderr_);
    CHECK_FALSE(est.censored_bias);

    std::vector<double> zeros(100, 0.0);
    const auto z = laplace_mc(zeros, -2.0);
    CHECK(z.estimate == 1.0);
    CHECK(z.stderr_ == 0.0);
}

TEST_CASE("exp tail fit") {
    std::vector<std::pair<double, double>> curve;
    for (int i = 1; i <= 200; ++i) {
        const double t = 0.05 * i;
        curve.emplace_back(t, std::exp(-2.0 * t));
    }
    const auto fit = exp_tail_fit(curve, 0.3);
    CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));

    curve.clear();
    for (int i = 1; i <= 200; ++i) {
        const double t = 0.05 * i;
        curve.emplace_back(t, 1.0 / std::sqrt(t));
    }
    const auto bad = exp_tail_fit(curve, 0.9);
    CHECK(bad.r_squared < 0.995);  // visibly poorer than the exponential case
}

TEST_CASE("moment report") {
    Rng rng(106);
    std::vector<double> sample(50000);
    for (auto& v : sample) v = rng.normal();
    MomentTargets t;
    t.has_mean = true;
    t.mean = 0.0;
    t.has_variance = true;
    t.variance = 1.0;
    CHECK(moment_report(sample, t).verdict);
    for (auto& v : sample) v += 0.1;
    CHECK_FALSE(moment_report(sample, t).verdict);
}

TEST_CASE("reports serialize with fixed fields") {
    Rng rng(107);
    std::vector<double> sample(500);
    for (auto& v : sample) v = rng.u01();
    const auto rep = ks_test(sample, [](double x) { return std::clamp(x, 0.0, 1.0); });
    const auto j = rep.to_json();
    for (const char* key : {"test", "statistic", "p_value", "n", "verdict", "params"}) {
        CHECK(j.contains(key));
    }
}
