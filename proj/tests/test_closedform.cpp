#include <doctest.h>

#include <cmath>
#include <vector>

#include "cylweb/bundle.hpp"
#include "cylweb/closedform.hpp"
#include "cylweb/rng.hpp"
#include "cylweb/stats.hpp"

using namespace cylweb;
using namespace cylweb::web;

namespace {

/// independent oracle for the two-path survival: reflection images of the
/// variance-2 gap walk absorbed at 0 and 1
double images_pair_survival(double gap, double t) {
    const double s = std::sqrt(2.0 * 2.0 * t);
    double tot = 0.0;
    for (int m = -12; m <= 12; ++m) {
        const double a = 0.5 * (std::erf((1.0 - gap + 2.0 * m) / s) -
                                std::erf((-gap + 2.0 * m) / s));
        const double b = 0.5 * (std::erf((1.0 + gap + 2.0 * m) / s) -
                                std::erf((gap + 2.0 * m) / s));
        tot += a - b;
    }
    return tot;
}

}  // namespace

TEST_CASE("theta kernel symmetry, periodicity, normalization") {
    Rng rng(21);
    for (int i = 0; i < 50; ++i) {
        const double x = 3.0 * (rng.u01() - 0.5);
        const double t = 0.02 + rng.u01();
        CHECK(theta_kernel(x, t) == doctest::Approx(theta_kernel(-x, t)).epsilon(1e-9));
        CHECK(theta_kernel(x, t) == doctest::Approx(theta_kernel(x + 1.0, t)).epsilon(1e-9));
        CHECK(theta_kernel(x, t) >= 0.0);
    }
    for (double t : {0.05, 0.3, 2.0}) {
        CHECK(theta_cdf(1.0, t) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(theta_kernel(0.0, 0.1) == doctest::Approx(1.27857).epsilon(1e-4));
    CHECK_THROWS(theta_kernel(0.0, 0.0));
}

TEST_CASE("antiperiodic kernel flips sign across a period") {
    Rng rng(22);
    for (int i = 0; i < 50; ++i) {
        const double x = 2.0 * (rng.u01() - 0.5);
        const double t = 0.05 + rng.u01();
        CHECK(theta_kernel_anti(x + 1.0, t) ==
              doctest::Approx(-theta_kernel_anti(x, t)).epsilon(1e-9));
    }
}

TEST_CASE("pair survival quadrature equals the images oracle") {
    for (double t : {0.02, 0.05, 0.2, 0.7, 1.5}) {
        for (double gap : {0.1, 0.25, 0.5, 0.8}) {
            const double q = fulmek_survival({0.1, 0.1 + gap}, t).value;
            const double o = images_pair_survival(gap, t);
            CHECK(q == doctest::Approx(o).epsilon(5e-6));
        }
    }
}

TEST_CASE("pair survival tends to one as t vanishes") {
    CHECK(fulmek_survival({0.0, 0.5}, 1e-4).value > 0.999);
}

TEST_CASE("pair survival is rotation invariant") {
    const double a = fulmek_survival({0.0, 0.25}, 0.1).value;
    const double b = fulmek_survival({0.3, 0.55}, 0.1).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-7));
}

TEST_CASE("laplace closed form") {
    CHECK(laplace_T2to1(-1.0, 0.0, 0.25) == doctest::Approx(0.914677).epsilon(2e-6));
    CHECK(laplace_T2to1(-1.0, 0.0, 0.5) == doctest::Approx(0.886819).epsilon(2e-6));
    CHECK(laplace_T2to1(-1e-8, 0.1, 0.7) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(laplace_T2to1(-2.0, 0.0, 0.5) ==
          doctest::Approx(1.0 / std::cosh(std::sqrt(2.0) / 2.0)).epsilon(1e-12));
    CHECK_THROWS(laplace_T2to1(1.0, 0.0, 0.5));
    CHECK_THROWS(laplace_T2to1(-1.0, 0.5, 0.25));
}

TEST_CASE("fulmek input validation") {
    CHECK_THROWS(fulmek_survival({0.5, 0.25}, 0.1));
    CHECK_THROWS(fulmek_survival({0.2, 0.2}, 0.1));
    CHECK_THROWS(fulmek_survival({0.2}, 0.1));
    CHECK_THROWS(fulmek_survival({0.0, 0.5}, 0.0));
}

TEST_CASE("three-path survival quadrature matches bridge-corrected MC") {
    const std::vector<double> xs{0.1, 0.4, 0.75};
    const double t = 0.05;
    const auto quad = fulmek_survival(xs, t, 1e-9, 14);

    Rng rng(23);
    const int N = 20000;
    const double dt = 5e-5;
    int alive_count = 0;
    for (int rep = 0; rep < N; ++rep) {
        double x1 = xs[0], x2 = xs[1], x3 = xs[2];
        bool alive = true;
        for (double s = 0.0; s < t && alive; s += dt) {
            const double d1 = std::sqrt(dt) * rng.normal();
            const double d2 = std::sqrt(dt) * rng.normal();
            const double d3 = std::sqrt(dt) * rng.normal();
            const double g1 = x2 - x1, g2 = x3 - x2, g3 = 1.0 - g1 - g2;
            x1 += d1;
            x2 += d2;
            x3 += d3;
            const double h1 = x2 - x1, h2 = x3 - x2, h3 = 1.0 - h1 - h2;
            if (h1 <= 0 || h2 <= 0 || h3 <= 0) {
                alive = false;
                break;
            }
            if (g1 * h1 < 30 * dt && rng.u01() < std::exp(-g1 * h1 / dt)) alive = false;
            else if (g2 * h2 < 30 * dt && rng.u01() < std::exp(-g2 * h2 / dt)) alive = false;
            else if (g3 * h3 < 30 * dt && rng.u01() < std::exp(-g3 * h3 / dt)) alive = false;
        }
        if (alive) ++alive_count;
    }
    const double mc = static_cast<double>(alive_count) / N;
    const double se_mc = std::sqrt(mc * (1 - mc) / N);
    const double tol = 3.0 * std::sqrt(se_mc * se_mc + quad.std_error * quad.std_error);
    CHECK(std::fabs(mc - quad.value) <= tol);
}

TEST_CASE("numerical laplace of the survival matches the closed form") {
    for (double gap : {0.25, 0.5}) {
        const double num = laplace_of_pair_survival(-1.0, gap);
        const double closed = laplace_T2to1(-1.0, 0.0, gap);
        CHECK(num == doctest::Approx(closed).epsilon(1e-3));
    }
}
