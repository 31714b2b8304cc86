#include "cylweb/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "cylweb/bundle.hpp"
#include "cylweb/circle.hpp"
#include "cylweb/closedform.hpp"
#include "cylweb/forest.hpp"
#include "cylweb/lattice.hpp"
#include "cylweb/stats.hpp"

namespace cylweb::verify {

namespace {

using nlohmann::ordered_json;

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

std::size_t scaled(std::size_t full, std::size_t quick, const SuiteOptions& opt) {
    if (opt.n_override) return opt.n_override;
    return opt.quick ? quick : full;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// ---------------------------------------------------------------------------
// 1. Exact pair-law equivalence
// ---------------------------------------------------------------------------

CriterionResult criterion1(const SuiteOptions& opt) {
    (void)opt;
    CriterionResult res{1, "exact pair law (brute force == closed form)", true, 0, {}};
    int tables = 0;
    for (int n : {1, 2}) {
        for (std::int64_t dh : {1, 2, 3}) {
            for (std::int64_t x1 = 0; x1 < 2 * n; ++x1) {
                if (!lattice::is_primal(x1, 0)) continue;
                for (std::int64_t x2 = 0; x2 < 2 * n; ++x2) {
                    if (lattice::is_primal(x2, dh)) continue;
                    const auto law = lattice::enumerate_pair_law(n, x1, x2, 0, dh);
                    if (!law.exact_match() || !law.sums_to_one()) res.pass = false;
                    ++tables;
                }
            }
        }
    }
    res.details["tables_checked"] = tables;
    return res;
}

// ---------------------------------------------------------------------------
// 2. Kernel consistency from the exact pair law
// ---------------------------------------------------------------------------

CriterionResult criterion2(const SuiteOptions& opt) {
    (void)opt;
    CriterionResult res{2, "kernel rows match enumeration exactly", true, 0, {}};
    const int n = 2;
    const std::int64_t dh = 3;

    // joint step weights over the common denominator n^2 * 2^{sites}
    using State = std::pair<std::int64_t, std::int64_t>;
    std::map<std::pair<State, State>, unsigned long long> joint[3];
    std::map<State, unsigned long long> marginal[3];
    int sites_log2 = 0;
    for (std::int64_t x1 = 0; x1 < 2 * n; ++x1) {
        if (!lattice::is_primal(x1, 0)) continue;
        for (std::int64_t x2 = 0; x2 < 2 * n; ++x2) {
            if (lattice::is_primal(x2, dh)) continue;
            const auto law = lattice::enumerate_pair_law(n, x1, x2, 0, dh);
            sites_log2 = law.sites_log2;
            for (const auto& e : law.entries) {
                for (int i = 0; i < static_cast<int>(dh); ++i) {
                    const State s{e.path_up[static_cast<std::size_t>(i)],
                                  e.path_down[static_cast<std::size_t>(i)]};
                    const State s2{e.path_up[static_cast<std::size_t>(i) + 1],
                                   e.path_down[static_cast<std::size_t>(i) + 1]};
                    joint[i][{s, s2}] += e.count;
                    marginal[i][s] += e.count;
                }
            }
        }
    }

    // conditional transition = joint/marginal must equal the kernel row
    bool rows_ok = true;
    for (int i = 0; i < static_cast<int>(dh); ++i) {
        for (const auto& [key, j_count] : joint[i]) {
            const auto& [s, s2] = key;
            const auto m_count = marginal[i][s];
            const auto row = lattice::kernel_row(n, s.first, s.second);
            bool found = false;
            for (const auto& mv : row) {
                if (mv.a == s2.first && mv.b == s2.second) {
                    found = true;
                    // j/m == num/den exactly
                    if (j_count * mv.prob_den != m_count * mv.prob_num) rows_ok = false;
                }
            }
            if (!found) rows_ok = false;
        }
    }

    // symbolic row sums over representative states
    bool sums_ok = true;
    for (std::int64_t a = 0; a < 2 * n; a += 2) {
        for (std::int64_t ad = 1; ad < 2 * n; ad += 2) {
            unsigned num4 = 0;
            for (const auto& mv : lattice::kernel_row(n, a, ad)) num4 += 4 * mv.prob_num / mv.prob_den;
            if (num4 != 4) sums_ok = false;
        }
    }

    res.pass = rows_ok && sums_ok;
    res.details["rows_exact"] = rows_ok;
    res.details["row_sums_one"] = sums_ok;
    res.details["sites_log2"] = sites_log2;
    return res;
}

// ---------------------------------------------------------------------------
// 3. Reflected-walk representation
// ---------------------------------------------------------------------------

namespace c3 {

/// exact distribution of the kernel chain (M1, M2), encoded over 2n x 2n
std::vector<double> kernel_angle_marginal(int n, std::int64_t a0, std::int64_t m0, int steps) {
    const int c = 2 * n;
    std::map<std::pair<std::int64_t, std::int64_t>, double> dist;
    dist[{m0, (m0 + a0) % c}] = 1.0;
    for (int s = 0; s < steps; ++s) {
        std::map<std::pair<std::int64_t, std::int64_t>, double> next;
        for (const auto& [state, p] : dist) {
            for (const auto& mv : lattice::kernel_row(n, state.first, state.second)) {
                next[{mv.a, mv.b}] += p * mv.prob_num / mv.prob_den;
            }
        }
        dist = std::move(next);
    }
    std::vector<double> ang(static_cast<std::size_t>(c) + 1, 0.0);
    for (const auto& [state, p] : dist) {
        const auto a = ((state.second - state.first) % c + c) % c;
        ang[static_cast<std::size_t>(a)] += p;
    }
    return ang;
}

std::vector<double> reflected_angle_marginal(int n, std::int64_t a0, int steps) {
    const int c = 2 * n;
    std::vector<double> dist(static_cast<std::size_t>(c) + 1, 0.0);
    dist[static_cast<std::size_t>(a0)] = 1.0;
    for (int half = 0; half < 2 * steps; ++half) {
        std::vector<double> next(dist.size(), 0.0);
        for (int z = 0; z <= c; ++z) {
            const double p = dist[static_cast<std::size_t>(z)];
            if (p == 0.0) continue;
            if (z == 0) next[1] += p;
            else if (z == c) next[static_cast<std::size_t>(c) - 1] += p;
            else {
                next[static_cast<std::size_t>(z) - 1] += p / 2;
                next[static_cast<std::size_t>(z) + 1] += p / 2;
            }
        }
        dist = std::move(next);
    }
    return dist;
}

std::vector<double> folded_free_angle_marginal(int n, std::int64_t a0, int steps) {
    const int c = 2 * n;
    // free +/-1 walk over [a0 - 2 steps, a0 + 2 steps]
    const int span = 2 * steps;
    std::vector<double> dist(static_cast<std::size_t>(2 * span) + 1, 0.0);
    dist[static_cast<std::size_t>(span)] = 1.0;  // offset representation
    for (int half = 0; half < 2 * steps; ++half) {
        std::vector<double> next(dist.size(), 0.0);
        for (std::size_t i = 0; i < dist.size(); ++i) {
            const double p = dist[i];
            if (p == 0.0) continue;
            if (i > 0) next[i - 1] += p / 2;
            if (i + 1 < dist.size()) next[i + 1] += p / 2;
        }
        dist = std::move(next);
    }
    std::vector<double> folded(static_cast<std::size_t>(c) + 1, 0.0);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double z = static_cast<double>(a0) + (static_cast<double>(i) - span);
        const auto f = static_cast<std::size_t>(std::llround(fold_reflect(z, c)));
        folded[f] += dist[i];
    }
    return folded;
}

}  // namespace c3

CriterionResult criterion3(const SuiteOptions& opt) {
    CriterionResult res{3, "reflected-walk representation (exact + MC)", true, 0, {}};

    // exact three-way equality at 2n = 4
    bool exact_ok = true;
    for (std::int64_t a0 : {1, 3}) {
        for (int steps : {1, 2, 3, 4, 5, 6}) {
            const auto ka = c3::kernel_angle_marginal(2, a0, 0, steps);
            const auto ra = c3::reflected_angle_marginal(2, a0, steps);
            const auto fa = c3::folded_free_angle_marginal(2, a0, steps);
            for (std::size_t i = 0; i < ka.size(); ++i) {
                if (ka[i] != ra[i] || ra[i] != fa[i]) exact_ok = false;
            }
        }
    }
    res.details["exact_equal_2n4"] = exact_ok;

    // Monte Carlo agreement at 2n = 16
    const int n = 8;
    const std::size_t N = scaled(100000, 10000, opt);
    const int target_i = 32;
    std::vector<double> a_kernel(N), a_reflected(N), a_folded(N);
    parallel_for(N, opt.threads, [&](std::size_t rep) {
        Rng rng(derive_seed(opt.seed, 3000 + rep));
        std::int64_t m1 = 0, m2 = 7;  // A(0) = 7
        for (int i = 0; i < target_i; ++i) {
            auto [b1, b2] = lattice::kernel_step(n, m1, m2, rng);
            m1 = b1;
            m2 = b2;
        }
        a_kernel[rep] = static_cast<double>(((m2 - m1) % 16 + 16) % 16);
        const auto rw = lattice::reflected_walk(n, 7, 0, target_i, rng);
        a_reflected[rep] = static_cast<double>(rw.angle[target_i]);
        std::int64_t z = 7;
        for (int i = 0; i < 2 * target_i; ++i) z += rng.rademacher();
        a_folded[rep] = fold_reflect(static_cast<double>(z), 16.0);
    });
    const auto ks1 = stats::ks_test_two_sample(a_kernel, a_reflected);
    const auto ks2 = stats::ks_test_two_sample(a_reflected, a_folded);
    res.details["ks_kernel_vs_reflected_p"] = ks1.p_value;
    res.details["ks_reflected_vs_folded_p"] = ks2.p_value;
    res.pass = exact_ok && ks1.verdict && ks2.verdict;
    return res;
}

// ---------------------------------------------------------------------------
// 4. mu_d suite
// ---------------------------------------------------------------------------

CriterionResult criterion4(const SuiteOptions& opt) {
    CriterionResult res{4, "mu_d: atom, KS, mean, variance", true, 0, {}};
    const std::size_t N = scaled(100000, 20000, opt);
    auto d_values = ordered_json::array();
    for (double d : {0.5, 1.0, 2.0}) {
        const auto law = forest::mu_eval(d, forest::Law::Mu);
        std::vector<double> sample(N);
        parallel_for(N, opt.threads, [&](std::size_t i) {
            Rng rng(derive_seed(opt.seed, 4000 + i + static_cast<std::size_t>(d * 1e4)));
            sample[i] = forest::planar_delta(d, rng);
        });
        const auto ks = stats::ks_test(sample, [&](double u) { return law.cdf(u); }, law.atoms);
        std::size_t hits = 0;
        for (double v : sample)
            if (v == -d) ++hits;
        const double m_d = law.atoms[0].mass;
        const double z_atom = (static_cast<double>(hits) / N - m_d) /
                              std::sqrt(m_d * (1 - m_d) / static_cast<double>(N));
        const double mean_hat = stats::mean(sample);
        const double z_mean = mean_hat / std::sqrt(stats::variance(sample) / static_cast<double>(N));
        const double var_hat = stats::variance(sample);
        const bool ok = ks.verdict && std::fabs(z_atom) <= 3.0 && std::fabs(z_mean) <= 3.0 &&
                        std::fabs(var_hat - law.variance) <= 0.02 * law.variance;
        if (!ok) res.pass = false;
        d_values.push_back({{"d", d},
                            {"ks_p", ks.p_value},
                            {"atom_z", z_atom},
                            {"mean_z", z_mean},
                            {"var_hat", var_hat},
                            {"var_target", law.variance}});
    }
    res.details["cases"] = d_values;
    return res;
}

// ---------------------------------------------------------------------------
// 5. mu_bar / Skorokhod suite
// ---------------------------------------------------------------------------

CriterionResult criterion5(const SuiteOptions& opt) {
    CriterionResult res{5, "skorokhod exit law == mu_bar", true, 0, {}};
    const std::size_t N = scaled(1000000, 50000, opt);
    auto cases = ordered_json::array();
    for (double d : {0.5, 1.0}) {
        const auto law = forest::mu_eval(d, forest::Law::MuBar);
        std::vector<double> exits(N);
        std::vector<char> on_ad(N, 0);
        parallel_for(N, opt.threads, [&](std::size_t i) {
            Rng rng(derive_seed(opt.seed, 5000 + i + static_cast<std::size_t>(d * 1e4)));
            const auto draw = forest::skorokhod_step(d, rng);
            exits[i] = draw.exit_value;
            // the symmetric-interval branch has U != -(d+1)
            on_ad[i] = draw.U != -(d + 1.0);
        });
        std::size_t a_d_count = 0;
        for (char c : on_ad) a_d_count += static_cast<std::size_t>(c);
        const auto ks = stats::ks_test(exits, [&](double u) { return law.cdf(u); }, law.atoms);
        const double pa_target = 1.0 - (1.0 + 2.0 * d) * std::exp(-2.0 * d);
        const double pa_hat = static_cast<double>(a_d_count) / static_cast<double>(N);
        const double z_pa =
            (pa_hat - pa_target) / std::sqrt(pa_target * (1 - pa_target) / static_cast<double>(N));

        // mass/mean identities by quadrature (Gauss-Legendre per smooth piece)
        double mass = law.atoms[0].mass, mean_q = law.atoms[0].location * law.atoms[0].mass;
        {
            static const double gx[16] = {
                -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
                -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
                -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
                0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
                0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
                0.9894009349916499};
            static const double gw[16] = {
                0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
                0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
                0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
                0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
            auto integrate = [&](double lo, double hi, int panels) {
                double acc_m = 0, acc_u = 0;
                for (int p = 0; p < panels; ++p) {
                    const double a = lo + (hi - lo) * p / panels;
                    const double b = lo + (hi - lo) * (p + 1) / panels;
                    for (int q = 0; q < 16; ++q) {
                        const double u = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
                        const double w = 0.5 * (b - a) * gw[q];
                        const double f = law.pdf(u);
                        acc_m += w * f;
                        acc_u += w * u * f;
                    }
                }
                mass += acc_m;
                mean_q += acc_u;
            };
            integrate(-d, 0.0, 8);
            integrate(0.0, d, 8);
            integrate(d, d + 2.0, 16);
            integrate(d + 2.0, d + 80.0, 160);
        }
        const bool ok = ks.verdict && std::fabs(z_pa) <= 3.0 && std::fabs(mass - 1.0) < 1e-12 &&
                        std::fabs(mean_q) < 1e-12;
        if (!ok) res.pass = false;
        cases.push_back({{"d", d},
                         {"ks_p", ks.p_value},
                         {"p_Ad_hat", pa_hat},
                         {"p_Ad_z", z_pa},
                         {"mass_err", mass - 1.0},
                         {"mean_err", mean_q}});
    }
    res.details["cases"] = cases;
    return res;
}

// ---------------------------------------------------------------------------
// 6. Laplace transform of the pair coalescence time
// ---------------------------------------------------------------------------

CriterionResult criterion6(const SuiteOptions& opt) {
    CriterionResult res{6, "pair E[e^{-T}] matches cosh closed form", true, 0, {}};
    const std::size_t N = scaled(100000, 4000, opt);
    const double dt = opt.quick ? 1e-4 : 1e-5;
    auto cases = ordered_json::array();
    for (double gap : {0.25, 0.5}) {
        std::vector<double> times(N);
        std::vector<bool> censored(N, false);
        parallel_for(N, opt.threads, [&](std::size_t i) {
            Rng rng(derive_seed(opt.seed, 6000 + i + static_cast<std::size_t>(gap * 1e3)));
            const auto pc = web::pair_coalescence_time(gap, dt, 40.0, rng);
            times[i] = pc.time;
            if (pc.censored) censored[i] = true;
        });
        const auto est = stats::laplace_mc(times, -1.0, &censored);
        const double target = web::laplace_T2to1(-1.0, 0.0, gap);
        const bool ok = std::fabs(est.estimate - target) <= 0.02 * target;
        if (!ok) res.pass = false;
        cases.push_back({{"gap", gap},
                         {"estimate", est.estimate},
                         {"stderr", est.stderr_},
                         {"target", target},
                         {"rel_err", est.estimate / target - 1.0}});
    }
    res.details["cases"] = cases;
    res.details["dt"] = dt;
    return res;
}

// ---------------------------------------------------------------------------
// 7. Fulmek quadrature vs MC and vs the Laplace closed form
// ---------------------------------------------------------------------------

CriterionResult criterion7(const SuiteOptions& opt) {
    CriterionResult res{7, "pair survival quadrature vs MC + Laplace", true, 0, {}};
    const std::size_t N = scaled(20000, 3000, opt);
    const double dt = 1e-4;
    auto cases = ordered_json::array();
    for (double gap : {0.25, 0.5}) {
        std::vector<double> times(N);
        parallel_for(N, opt.threads, [&](std::size_t i) {
            Rng rng(derive_seed(opt.seed, 7000 + i + static_cast<std::size_t>(gap * 1e3)));
            times[i] = web::pair_coalescence_time(gap, dt, 1.5, rng).time;  // cap >> max t
        });
        stats::Ecdf ecdf(times);
        for (double t : {0.05, 0.2, 1.0}) {
            const double mc = ecdf.survival(t);
            const double quad = web::fulmek_survival({0.0, gap}, t).value;
            // standard error under the quadrature null
            const double se =
                std::sqrt(std::max(quad * (1 - quad), 1.0 / static_cast<double>(N)) /
                          static_cast<double>(N));
            const double z = (mc - quad) / se;
            if (std::fabs(z) > 3.0) res.pass = false;
            cases.push_back({{"gap", gap}, {"t", t}, {"mc", mc}, {"quad", quad}, {"z", z}});
        }
        const double lap_num = web::laplace_of_pair_survival(-1.0, gap);
        const double lap_closed = web::laplace_T2to1(-1.0, 0.0, gap);
        if (std::fabs(lap_num - lap_closed) > 0.01 * lap_closed) res.pass = false;
        cases.push_back(
            {{"gap", gap}, {"laplace_numeric", lap_num}, {"laplace_closed", lap_closed}});
    }
    res.details["cases"] = cases;
    return res;
}

// ---------------------------------------------------------------------------
// 8. Reflected pair law + ladder
// ---------------------------------------------------------------------------

CriterionResult criterion8(const SuiteOptions& opt) {
    CriterionResult res{8, "reflected pair marginals + ladder gap uniform", true, 0, {}};
    const std::size_t N = scaled(100000, 20000, opt);
    auto uniform_cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
    auto cases = ordered_json::array();
    for (double t : {0.1, 1.0, 5.0}) {
        std::vector<double> yup(N), gap(N);
        parallel_for(N, opt.threads, [&](std::size_t i) {
            Rng rng(derive_seed(opt.seed, 8000 + i + static_cast<std::size_t>(t * 100)));
            const auto m = web::reflected_pair_at(t, rng);
            yup[i] = m.y_up;
            gap[i] = m.gap;
        });
        const auto ks_y = stats::ks_test(yup, uniform_cdf);
        const auto ks_g = stats::ks_test(gap, uniform_cdf);
        if (!ks_y.verdict || !ks_g.verdict) res.pass = false;
        cases.push_back({{"t", t}, {"ks_yup_p", ks_y.p_value}, {"ks_gap_p", ks_g.p_value}});
    }

    const std::size_t NL = scaled(10000, 400, opt);
    std::vector<double> ladder_gap(NL, -1.0);
    std::vector<double> ladder_up(NL, -1.0);
    std::size_t censored = 0;
    web::LadderOptions lo;
    lo.window = 1.0;
    lo.dt = 5e-4;
    parallel_for(NL, opt.threads, [&](std::size_t i) {
        const auto lad = web::biinfinite_ladder(lo, derive_seed(opt.seed, 8800 + i));
        if (lad.censored) return;
        const auto mid = static_cast<std::size_t>(lad.grid.steps / 2);
        ladder_gap[i] = lad.gap[mid];
        ladder_up[i] = lad.c_up[mid];
    });
    std::vector<double> lg, lu;
    for (std::size_t i = 0; i < NL; ++i) {
        if (ladder_gap[i] >= 0.0) {
            lg.push_back(ladder_gap[i]);
            lu.push_back(ladder_up[i]);
        } else {
            ++censored;
        }
    }
    const auto ks_lg = stats::ks_test(lg, uniform_cdf);
    const auto ks_lu = stats::ks_test(lu, uniform_cdf);
    if (!ks_lg.verdict || !ks_lu.verdict) res.pass = false;
    res.details["marginals"] = cases;
    res.details["ladder_gap_ks_p"] = ks_lg.p_value;
    res.details["ladder_up_ks_p"] = ks_lu.p_value;
    res.details["ladder_censored"] = censored;
    return res;
}

// ---------------------------------------------------------------------------
// 9. Exponential coalescence tail of T(0) with a 32-walker mesh
// ---------------------------------------------------------------------------

CriterionResult criterion9(const SuiteOptions& opt) {
    CriterionResult res{9, "slice coalescence time has an exponential tail", true, 0, {}};
    const std::size_t N = scaled(100000, 4000, opt);
    const double dt = 1e-4;
    const int k = 32;
    std::vector<double> times(N);
    parallel_for(N, opt.threads, [&](std::size_t i) {
        Rng rng(derive_seed(opt.seed, 9000 + i));
        std::vector<double> xs(k), ts(k, 0.0);
        const double rot = rng.u01();
        for (int w = 0; w < k; ++w) xs[static_cast<std::size_t>(w)] = rot + static_cast<double>(w) / k;
        web::CoalescingSystem sys(xs, ts, 0.0, true);
        while (!sys.fully_coalesced() && sys.time() < 30.0) sys.step(dt, rng);
        times[i] = sys.time();
    });
    std::sort(times.begin(), times.end());
    // the top 30% of the observed times, excluding the sparsely populated
    // extreme order statistics where the empirical log-survival is noise
    std::vector<std::pair<double, double>> curve;
    const auto lo = static_cast<std::size_t>(0.70 * static_cast<double>(N));
    const double min_survivors = 40.0;
    const std::size_t stride = std::max<std::size_t>(1, N / 20000);
    for (std::size_t i = lo; i < N; i += stride) {
        const double s = 1.0 - static_cast<double>(i + 1) / static_cast<double>(N);
        if (s * static_cast<double>(N) >= min_survivors) curve.emplace_back(times[i], s);
    }
    const auto fit = stats::exp_tail_fit(curve, 1.0);
    res.pass = fit.slope < 0.0 && fit.r_squared > 0.98;
    res.details["slope"] = fit.slope;
    res.details["r_squared"] = fit.r_squared;
    res.details["tail_points"] = fit.points_used;
    res.details["median_T"] = times[N / 2];
    return res;
}

// ---------------------------------------------------------------------------
// 10. Sliced-forest tail bound and cylinder/planar domination
// ---------------------------------------------------------------------------

CriterionResult criterion10(const SuiteOptions& opt) {
    CriterionResult res{10, "tail bound stability + cylinder <= planar", true, 0, {}};
    const std::size_t N = scaled(10000, 1000, opt);
    // run on the shifted forest: the tail estimates concern the asymptotic
    // regime where slices are rarely empty
    const std::size_t j_shift = 500;
    auto schedule = forest::build_schedule("pow:0.3", 8000);
    const double v0 = schedule.V[j_shift - 1];
    const std::size_t k_max = schedule.R(v0 + 4.0) - j_shift;

    std::map<std::string, forest::SurvivalCurve> curves;
    for (double d : {0.1, 0.2}) {
        curves["cyl" + std::to_string(d)] =
            forest::coalescence_tail(forest::TailModel::Cylinder, schedule, d, k_max, N,
                                     derive_seed(opt.seed, 1001), j_shift);
        curves["pla" + std::to_string(d)] =
            forest::coalescence_tail(forest::TailModel::Planar, schedule, d, k_max, N,
                                     derive_seed(opt.seed, 1001), j_shift);
    }

    // normalized statistic of the planar model (the sqrt-h tail bound is a
    // planar statement; the cylinder tail decays exponentially instead):
    // bounded, and stable across d within a factor 2
    auto max_norm = [&](const forest::SurvivalCurve& c) {
        double m = 0.0;
        for (std::size_t i = 0; i < c.h.size(); ++i)
            if (c.h[i] >= 1.0) m = std::max(m, c.normalized[i]);
        return m;
    };
    const double m1 = max_norm(curves["pla" + std::to_string(0.1)]);
    const double m2 = max_norm(curves["pla" + std::to_string(0.2)]);
    const double ratio = m1 / m2;
    const bool stable = ratio > 0.5 && ratio < 2.0 && m1 > 0.0 && m1 < 10.0 && m2 < 10.0;

    // pointwise domination within 3 sigma, cylinder vs planar, both d
    bool dominated = true;
    for (double d : {0.1, 0.2}) {
        const auto& cyl = curves["cyl" + std::to_string(d)];
        const auto& pla = curves["pla" + std::to_string(d)];
        for (std::size_t i = 0; i < cyl.survival.size(); ++i) {
            const double se = std::sqrt(cyl.std_error[i] * cyl.std_error[i] +
                                        pla.std_error[i] * pla.std_error[i]);
            if (cyl.survival[i] - pla.survival[i] > 3.0 * std::max(se, 1e-12)) dominated = false;
        }
    }

    // monotonicity in d for the planar model
    bool monotone = true;
    {
        const auto& s1 = curves["pla" + std::to_string(0.1)];
        const auto& s2 = curves["pla" + std::to_string(0.2)];
        for (std::size_t i = 0; i < s1.survival.size(); ++i) {
            const double se = std::sqrt(s1.std_error[i] * s1.std_error[i] +
                                        s2.std_error[i] * s2.std_error[i]);
            if (s1.survival[i] - s2.survival[i] > 3.0 * std::max(se, 1e-12)) monotone = false;
        }
    }

    res.pass = stable && dominated && monotone;
    res.details["k_max"] = k_max;
    res.details["j_shift"] = j_shift;
    res.details["h_K"] = curves["cyl" + std::to_string(0.1)].h.back();
    res.details["norm_stat_d01"] = m1;
    res.details["norm_stat_d02"] = m2;
    res.details["ratio"] = ratio;
    res.details["cyl_le_planar"] = dominated;
    res.details["planar_monotone_in_d"] = monotone;
    return res;
}

// ---------------------------------------------------------------------------
// 11. Dominance of the planar count over the cylinder count
// ---------------------------------------------------------------------------

CriterionResult criterion11(const SuiteOptions& opt) {
    CriterionResult res{11, "eta dominance: cylinder merges earlier", true, 0, {}};
    const std::size_t N = scaled(10000, 1000, opt);
    const double t = 0.5, dt = 1e-3, arc_len = 0.25;
    const int k = 64;
    std::vector<double> eta_cyl(N), eta_pla(N), eta_hat_cyl(N);
    parallel_for(N, opt.threads, [&](std::size_t i) {
        const auto sd = derive_seed(opt.seed, 11000 + i);
        double rot;
        {
            Rng r0(sd);
            rot = r0.u01();
        }
        std::vector<double> xs(k), ts(k, 0.0);
        for (int w = 0; w < k; ++w)
            xs[static_cast<std::size_t>(w)] = rot + static_cast<double>(w) / k;
        const Arc arc{CirclePos(0.0), CirclePos(arc_len)};
        for (int which = 0; which < 2; ++which) {
            Rng rng(sd);
            (void)rng.u01();  // rotation draw, shared by both models
            web::CoalescingSystem sys(xs, ts, 0.0, which == 0);
            const auto steps = static_cast<std::int64_t>(std::llround(t / dt));
            for (std::int64_t s = 0; s < steps; ++s) sys.step(dt, rng);
            // the same walker subset in both models: wrapped start in the arc
            std::vector<int> roots;
            std::vector<int> roots_hat;
            for (int w = 0; w < k; ++w) {
                const double wrapped = reduce_unit(xs[static_cast<std::size_t>(w)]);
                if (arc.contains(CirclePos(wrapped))) roots.push_back(sys.root_of(w));
                if (which == 0 && arc.contains(CirclePos(sys.position_of(w))))
                    roots_hat.push_back(sys.root_of(w));
            }
            std::sort(roots.begin(), roots.end());
            const auto cnt = std::unique(roots.begin(), roots.end()) - roots.begin();
            if (which == 0) {
                eta_cyl[i] = static_cast<double>(cnt);
                std::sort(roots_hat.begin(), roots_hat.end());
                eta_hat_cyl[i] = static_cast<double>(
                    std::unique(roots_hat.begin(), roots_hat.end()) - roots_hat.begin());
            } else {
                eta_pla[i] = static_cast<double>(cnt);
            }
        }
    });
    std::vector<double> thresholds;
    for (double thr = 0.5; thr < 12.0; thr += 1.0) thresholds.push_back(thr);
    const auto dom = stats::ecdf_dominance(eta_cyl, eta_pla, thresholds);
    const double mean_hat = stats::mean(eta_hat_cyl);
    const double se_hat = std::sqrt(stats::variance(eta_hat_cyl) / static_cast<double>(N));
    const bool mean_ok = mean_hat >= arc_len - 3.0 * se_hat;
    res.pass = dom.verdict && mean_ok;
    res.details["dominance_worst_z"] = dom.statistic;
    res.details["eta_hat_mean"] = mean_hat;
    res.details["eta_hat_se"] = se_hat;
    res.details["arc_length"] = arc_len;
    return res;
}

// ---------------------------------------------------------------------------
// 12. Lattice-to-continuum coalescence-time convergence
// ---------------------------------------------------------------------------

CriterionResult criterion12(const SuiteOptions& opt) {
    CriterionResult res{12, "rescaled lattice pair time matches continuum cdf", true, 0, {}};
    const std::size_t N = scaled(10000, 2000, opt);
    const int n = 64;  // circumference 128
    const double scale = 1.0 / (4.0 * n * n);
    std::vector<double> times(N);
    parallel_for(N, opt.threads, [&](std::size_t i) {
        lattice::RademacherField field(n, -8, 1 << 22, derive_seed(opt.seed, 12000 + i));
        const auto r = lattice::pair_meet_steps(field, 0, n, 0, 1 << 21);
        times[i] = static_cast<double>(r.duration) * scale;
    });
    std::sort(times.begin(), times.end());
    double ks = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, N / 800);
    for (std::size_t i = 0; i < N; i += stride) {
        const double f_cont = 1.0 - web::fulmek_survival({0.0, 0.5}, times[i]).value;
        const double lo = static_cast<double>(i) / static_cast<double>(N);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(N);
        ks = std::max(ks, std::max(std::fabs(f_cont - lo), std::fabs(f_cont - hi)));
    }
    res.pass = ks < 0.05;
    res.details["ks_distance"] = ks;
    res.details["n"] = 2 * n;
    return res;
}

// ---------------------------------------------------------------------------
// 13. CPT diffusivity measurement
// ---------------------------------------------------------------------------

CriterionResult criterion13(const SuiteOptions& opt) {
    CriterionResult res{13, "cpt diffusivity measured and reproducible", true, 0, {}};
    auto cases = ordered_json::array();
    for (double n : {50.0, 100.0}) {
        const double r = 0.5 / n;  // pre-scaling parameter 1/2
        const double horizon = opt.quick ? 4000.0 : 20000.0;
        double est[2], se[2];
        for (int group = 0; group < 2; ++group) {
            double sum_sq = 0.0, sum_quad = 0.0;
            double jumps = 0.0;
            for (int repl = 0; repl < 4; ++repl) {
                Rng rng(derive_seed(opt.seed, 13000 + static_cast<std::size_t>(group) * 100 +
                                                  static_cast<std::size_t>(repl) +
                                                  static_cast<std::size_t>(n) * 7));
                const auto path = forest::cpt_single_path(n, r, horizon, rng);
                for (const auto& jump : path) {
                    const double x2 = jump.dx * jump.dx;
                    sum_sq += x2;
                    sum_quad += x2 * x2;
                    jumps += 1.0;
                }
            }
            // variance per unit rescaled time: heights scale by n^2
            const double total_resc_time = 4.0 * horizon / (n * n);
            est[group] = sum_sq / total_resc_time;
            const double var_sq = (sum_quad / jumps - (sum_sq / jumps) * (sum_sq / jumps)) * jumps;
            se[group] = std::sqrt(var_sq) / total_resc_time;
        }
        const double pooled = 0.5 * (est[0] + est[1]);
        const double se_pool = 0.5 * std::sqrt(se[0] * se[0] + se[1] * se[1]);
        const double z_repro = (est[0] - est[1]) / std::sqrt(se[0] * se[0] + se[1] * se[1]);
        const bool precise = se_pool <= 0.01 * pooled || opt.quick;
        const bool repro = std::fabs(z_repro) <= 3.0;
        if (!(precise && repro)) res.pass = false;
        cases.push_back({{"lambda", n},
                         {"diffusivity", pooled},
                         {"stderr", se_pool},
                         {"z_reproducibility", z_repro},
                         {"dist_to_1_over_12", std::fabs(pooled - 1.0 / 12.0)},
                         {"dist_to_1", std::fabs(pooled - 1.0)}});
    }
    res.details["cases"] = cases;
    res.details["note"] = "measurement documented against candidate normalizations 1 and 1/12";
    return res;
}

// ---------------------------------------------------------------------------
// 14. Sliced-forest single-path invariance check
// ---------------------------------------------------------------------------

CriterionResult criterion14(const SuiteOptions& opt) {
    CriterionResult res{14, "shifted path displacement is wrapped-normal", true, 0, {}};
    const std::size_t N = scaled(10000, 2000, opt);
    const std::size_t j = 500;
    auto schedule = forest::build_schedule("pow:0.3", 1200);
    std::vector<double> disp(N);
    parallel_for(N, opt.threads, [&](std::size_t i) {
        Rng rng(derive_seed(opt.seed, 14000 + i));
        disp[i] = reduce_unit(forest::sliced_path_displacement(schedule, j, 1.0, rng));
    });
    const int bins = 20;
    std::vector<std::int64_t> counts(bins, 0);
    for (double v : disp) {
        auto b = static_cast<int>(v * bins);
        if (b == bins) b = 0;
        ++counts[static_cast<std::size_t>(b)];
    }
    std::vector<double> probs(bins);
    for (int b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) / bins, hi = static_cast<double>(b + 1) / bins;
        probs[static_cast<std::size_t>(b)] =
            web::theta_cdf(hi, 1.0) - web::theta_cdf(lo, 1.0);
    }
    const auto chi2 = stats::chi2_test(counts, probs);
    res.pass = chi2.verdict;
    res.details["chi2_p"] = chi2.p_value;
    res.details["chi2_stat"] = chi2.statistic;
    res.details["bins"] = bins;
    return res;
}

}  // namespace

std::vector<int> suite_criteria(const std::string& suite) {
    static const std::map<std::string, std::vector<int>> suites = {
        {"enumeration", {1}},     {"kernel", {2, 3}},   {"mu", {4}},
        {"skorokhod", {5}},       {"laplace", {6}},     {"fulmek", {7, 12}},
        {"reflected", {8}},       {"tails", {9, 10}},   {"dominance", {11}},
        {"donsker", {13, 14}},    {"all", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14}}};
    const auto it = suites.find(suite);
    if (it == suites.end()) throw std::invalid_argument("unknown suite: " + suite);
    return it->second;
}

CriterionResult run_criterion(int id, const SuiteOptions& opt) {
    Timer timer;
    CriterionResult res;
    switch (id) {
        case 1: res = criterion1(opt); break;
        case 2: res = criterion2(opt); break;
        case 3: res = criterion3(opt); break;
        case 4: res = criterion4(opt); break;
        case 5: res = criterion5(opt); break;
        case 6: res = criterion6(opt); break;
        case 7: res = criterion7(opt); break;
        case 8: res = criterion8(opt); break;
        case 9: res = criterion9(opt); break;
        case 10: res = criterion10(opt); break;
        case 11: res = criterion11(opt); break;
        case 12: res = criterion12(opt); break;
        case 13: res = criterion13(opt); break;
        case 14: res = criterion14(opt); break;
        default: throw std::invalid_argument("unknown criterion id");
    }
    res.seconds = timer.seconds();
    return res;
}

std::vector<CriterionResult> run_suite(const std::string& suite, const SuiteOptions& opt) {
    std::vector<CriterionResult> out;
    for (int id : suite_criteria(suite)) {
        auto res = run_criterion(id, opt);
        std::printf("criterion %2d [%s]  %s  (%.1fs)\n", res.id, res.pass ? "PASS" : "FAIL",
                    res.name.c_str(), res.seconds);
        std::fflush(stdout);
        out.push_back(std::move(res));
    }
    return out;
}

nlohmann::ordered_json results_to_json(const std::vector<CriterionResult>& results) {
    auto arr = nlohmann::ordered_json::array();
    bool all = true;
    for (const auto& r : results) {
        arr.push_back({{"id", r.id},
                       {"name", r.name},
                       {"pass", r.pass},
                       {"seconds", r.seconds},
                       {"details", r.details}});
        all = all && r.pass;
    }
    return nlohmann::ordered_json{{"all_pass", all}, {"criteria", arr}};
}

}  // namespace cylweb::verify
