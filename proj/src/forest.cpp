#include "cylweb/forest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cylweb/circle.hpp"

namespace cylweb::forest {

double increment_sigma2(double n) {
    if (!(n > 0.0)) throw std::invalid_argument("increment_sigma2: n > 0 required");
    return 1.0 / (2.0 * n * n) - std::exp(-n) * (n * n + 2.0 * n + 2.0) / (4.0 * n * n);
}

double sample_increment(double n, Rng& rng) {
    if (!(n > 0.0)) throw std::invalid_argument("sample_increment: n > 0 required");
    const double en = std::exp(-n);
    const double u = rng.u01();
    const double lo = 0.5 * (1.0 - en);
    if (u < lo) return std::log(2.0 * u + en) / (2.0 * n);
    if (u < lo + en) return 0.0;
    const double w = u - lo - en;  // in [0, (1-e^{-n})/2)
    return -std::log(1.0 - 2.0 * w) / (2.0 * n);
}

std::size_t SliceSchedule::R(double t) const {
    auto it = std::lower_bound(V.begin(), V.end(), t);
    if (it == V.end()) throw std::out_of_range("SliceSchedule::R: t beyond the horizon");
    return static_cast<std::size_t>(it - V.begin()) + 1;
}

SliceSchedule::Hypothesis SliceSchedule::audit() const {
    if (f.empty()) throw std::logic_error("SliceSchedule::audit: no f sequence");
    Hypothesis h;
    h.last_f = f.back();
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double term = std::exp(-n[k] * f[k]);
        h.sum_exp_nf += term;
        h.sum_inv_n2 += 1.0 / (n[k] * n[k]);
    }
    h.first_term = std::exp(-n.front() * f.front());
    h.last_term = std::exp(-n.back() * f.back());
    h.f_decreasing_tail = f.size() < 2 || f.back() <= f[f.size() / 2];
    return h;
}

namespace {

double eval_spec(const std::string& spec, std::size_t k) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("sequence spec: missing ':'");
    const std::string kind = spec.substr(0, colon);
    const double par = std::stod(spec.substr(colon + 1));
    if (kind == "pow") return std::pow(static_cast<double>(k), par);
    if (kind == "const") return par;
    throw std::invalid_argument("sequence spec: unknown kind " + kind);
}

}  // namespace

SliceSchedule build_schedule(const std::string& n_spec, std::size_t K, const std::string& f_spec) {
    std::vector<double> n(K), f;
    for (std::size_t k = 1; k <= K; ++k) n[k - 1] = eval_spec(n_spec, k);
    if (!f_spec.empty()) {
        f.resize(K);
        for (std::size_t k = 1; k <= K; ++k) f[k - 1] = eval_spec(f_spec, k);
    }
    return build_schedule(std::move(n), std::move(f));
}

SliceSchedule build_schedule(std::vector<double> n, std::vector<double> f) {
    SliceSchedule s;
    s.n = std::move(n);
    s.f = std::move(f);
    s.sigma2.resize(s.n.size());
    s.V.resize(s.n.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < s.n.size(); ++k) {
        if (!(s.n[k] > 0.0)) throw std::invalid_argument("build_schedule: nonpositive intensity");
        s.sigma2[k] = increment_sigma2(s.n[k]);
        acc += s.sigma2[k];
        s.V[k] = acc;
    }
    return s;
}

namespace {

/// Points of a unit-rate Poisson process on [0, len), generated by the gap
/// walk; multiplying the rate stretches gaps accordingly.
void ppp_on_interval(double rate, double len, Rng& rng, std::vector<double>& out) {
    out.clear();
    double x = rng.expo(rate);
    while (x < len) {
        out.push_back(x);
        x += rng.expo(rate);
    }
}

/// Nearest point of a sorted angle list to x on the circle; lower angle wins
/// exact ties. Returns -1 on empty.
int nearest_on_circle(const std::vector<double>& pts, double x) {
    if (pts.empty()) return -1;
    const auto m = pts.size();
    auto it = std::lower_bound(pts.begin(), pts.end(), x);
    const int right = static_cast<int>(it - pts.begin()) % static_cast<int>(m);
    const int left = (right + static_cast<int>(m) - 1) % static_cast<int>(m);
    const double dr = circle_dist(CirclePos(pts[static_cast<std::size_t>(right)]), CirclePos(x));
    const double dl = circle_dist(CirclePos(pts[static_cast<std::size_t>(left)]), CirclePos(x));
    if (dl < dr) return left;
    if (dr < dl) return right;
    return pts[static_cast<std::size_t>(left)] <= pts[static_cast<std::size_t>(right)] ? left
                                                                                       : right;
}

/// Nearest point of a sorted list on the line.
int nearest_on_line(const std::vector<double>& pts, double x) {
    if (pts.empty()) return -1;
    auto it = std::lower_bound(pts.begin(), pts.end(), x);
    if (it == pts.begin()) return 0;
    if (it == pts.end()) return static_cast<int>(pts.size()) - 1;
    const auto right = static_cast<int>(it - pts.begin());
    const int left = right - 1;
    return (x - pts[static_cast<std::size_t>(left)] <= pts[static_cast<std::size_t>(right)] - x)
               ? left
               : right;
}

}  // namespace

CptSample sample_cpt(double lambda, double r, double t_lo, double t_hi, std::uint64_t seed) {
    if (!(lambda > 0.0)) throw std::invalid_argument("sample_cpt: lambda > 0");
    if (!(r > 0.0 && r <= 0.5)) throw std::invalid_argument("sample_cpt: r in (0, 1/2]");
    if (!(t_hi > t_lo)) throw std::invalid_argument("sample_cpt: empty window");
    Rng rng(seed);
    CptSample s;
    s.lambda = lambda;
    s.r = r;
    s.t_lo = t_lo;
    s.t_hi = t_hi;
    double t = t_lo + rng.expo(lambda);
    while (t < t_hi) {
        s.points.push_back({rng.u01(), t});
        t += rng.expo(lambda);
    }
    s.parent.assign(s.points.size(), -1);
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        for (std::size_t j = i + 1; j < s.points.size(); ++j) {
            if (circle_dist(CirclePos(s.points[i].x), CirclePos(s.points[j].x)) <= r) {
                s.parent[i] = static_cast<int>(j);
                break;
            }
        }
    }
    return s;
}

int cpt_ancestor_of(const CptSample& sample, double x, double t) {
    for (std::size_t j = 0; j < sample.points.size(); ++j) {
        if (sample.points[j].t <= t) continue;
        if (circle_dist(CirclePos(sample.points[j].x), CirclePos(x)) <= sample.r)
            return static_cast<int>(j);
    }
    return -1;
}

std::vector<CptJump> cpt_single_path(double lambda, double r, double t_horizon, Rng& rng) {
    std::vector<CptJump> jumps;
    const double rate = 2.0 * r * lambda;
    double t = 0.0;
    while (true) {
        const double dt = rng.expo(rate);
        if (t + dt > t_horizon) break;
        t += dt;
        jumps.push_back({rng.uniform(-r, r), dt});
    }
    return jumps;
}

SliceForest sample_sliced_forest(const SliceSchedule& schedule, std::size_t j_shift,
                                 std::size_t k_count, std::uint64_t seed) {
    if (j_shift + k_count > schedule.K())
        throw std::invalid_argument("sample_sliced_forest: window beyond schedule");
    Rng rng(seed);
    SliceForest f;
    f.schedule = &schedule;
    f.j_shift = j_shift;
    f.k_lo = j_shift;
    f.angles.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        ppp_on_interval(schedule.n[j_shift + k], 1.0, rng, f.angles[k]);
    }
    f.ancestor.resize(k_count);
    for (std::size_t k = 0; k + 1 < k_count; ++k) {
        f.ancestor[k].resize(f.angles[k].size());
        for (std::size_t i = 0; i < f.angles[k].size(); ++i) {
            f.ancestor[k][i] = nearest_on_circle(f.angles[k + 1], f.angles[k][i]);
        }
    }
    return f;
}

bool forest_order_preserved(const SliceForest& forest) {
    for (std::size_t k = 0; k + 1 < forest.angles.size(); ++k) {
        const auto& anc = forest.ancestor[k];
        const std::size_t m = anc.size();
        if (m < 2) continue;
        if (forest.angles[k + 1].empty()) continue;  // vertical moves keep order
        // ancestors of circularly sorted children must be circularly
        // monotone (equal allowed)
        int wraps = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const int a = anc[i], b = anc[(i + 1) % m];
            if (b < a) ++wraps;
        }
        if (wraps > 1) return false;
    }
    return true;
}

double planar_delta(double d, Rng& rng, double lambda, double margin) {
    if (!(d > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("planar_delta: d, lambda > 0");
    const double pad = margin / lambda;
    std::vector<double> pts;
    ppp_on_interval(lambda, d + 2.0 * pad, rng, pts);
    for (auto& p : pts) p -= pad;
    const int i0 = nearest_on_line(pts, 0.0);
    const int i1 = nearest_on_line(pts, d);
    if (i0 < 0 || i1 < 0) return 0.0;  // void window, probability e^{-2 margin}
    return (pts[static_cast<std::size_t>(i1)] - pts[static_cast<std::size_t>(i0)]) - d;
}

namespace {

/// integral of the symmetric density piece from 0 to u, u in [0,d]
double fd_integral(double u, double d) {
    return 0.5 * (1.0 - std::exp(-2.0 * u) * (u + 1.0)) - 0.5 * std::exp(-2.0 * d) * u;
}

double fd_density(double u, double d) {
    const double a = std::fabs(u);
    if (a > d) return 0.0;
    return -0.5 * std::exp(-2.0 * d) + std::exp(-2.0 * a) * (a + 0.5);
}

}  // namespace

double LawSpec::pdf(double u) const {
    double v = 0.0;
    if (std::fabs(u) <= d) v = fd_density(u, d);
    if (u >= d) v += d * std::exp(-u - d);
    if (which == Law::MuBar && u >= d + 2.0) {
        const double beta = std::exp(2.0) * (d + 1.0) / (2.0 * (d + 2.0));
        v += beta * std::exp(-u - d);
    }
    return v;
}

double LawSpec::cdf(double u) const {
    const double ed = std::exp(-2.0 * d);
    const double p_half = 0.5 * (1.0 - (2.0 * d + 1.0) * ed);
    double c = 0.0;
    if (which == Law::Mu) {
        const double atom = (d + 1.0) * ed;
        if (u < -d) return 0.0;
        c = atom;
        if (u <= 0.0) return c + p_half - fd_integral(-u, d);
        if (u <= d) return c + p_half + fd_integral(u, d);
        return c + 2.0 * p_half + d * (ed - std::exp(-u - d));
    }
    const double alpha = ed * (2.0 * d * d + 5.0 * d + 3.0) / (2.0 * (d + 2.0));
    const double beta = std::exp(2.0) * (d + 1.0) / (2.0 * (d + 2.0));
    if (u < -(1.0 + d)) return 0.0;
    c = alpha;
    if (u < -d) return c;
    if (u <= 0.0) return c + p_half - fd_integral(-u, d);
    if (u <= d) return c + p_half + fd_integral(u, d);
    c += 2.0 * p_half + d * (ed - std::exp(-u - d));
    if (u > d + 2.0) c += beta * (std::exp(-2.0 * d - 2.0) - std::exp(-u - d));
    return c;
}

LawSpec mu_eval(double d, Law which) {
    if (!(d > 0.0)) throw std::invalid_argument("mu_eval: d > 0 required");
    LawSpec law;
    law.d = d;
    law.which = which;
    const double ed = std::exp(-2.0 * d);
    law.mean = 0.0;
    if (which == Law::Mu) {
        law.atoms = {{-d, (d + 1.0) * ed}};
        law.variance = 1.0 - ed + (2.0 / 3.0) * ed * d * d * d + ed * d * d;
    } else {
        const double alpha = ed * (2.0 * d * d + 5.0 * d + 3.0) / (2.0 * (d + 2.0));
        law.atoms = {{-(1.0 + d), alpha}};
        law.variance =
            1.0 + (4.0 * std::pow(d, 4) + 26.0 * d * d * d + 66.0 * d * d + 75.0 * d + 27.0) *
                      ed / (6.0 * d + 12.0);
    }
    return law;
}

SkorokhodDraw skorokhod_step(double d, Rng& rng) {
    if (!(d > 0.0)) throw std::invalid_argument("skorokhod_step: d > 0 required");
    SkorokhodDraw out;
    const double ed = std::exp(-2.0 * d);
    const double two_p = 1.0 - (1.0 + 2.0 * d) * ed;
    if (rng.u01() < two_p) {
        // symmetric exit interval with density proportional to the central
        // density piece; rejection against its value at 0
        const double fmax = fd_density(0.0, d);
        double v;
        do {
            v = d * rng.u01();
        } while (rng.u01() * fmax > fd_density(v, d));
        out.U = -v;
        out.V = v;
        out.exit_value = (rng.u01() < 0.5) ? v : -v;
        return out;
    }
    out.U = -d - 1.0;
    const double q = 2.0 * d / (1.0 + 2.0 * d);
    double y;
    if (rng.u01() < q) {
        // density (y + 2d + 1) e^{-y} / (2d + 2) on [0, inf)
        y = (rng.u01() < (2.0 * d + 1.0) / (2.0 * d + 2.0)) ? rng.expo(1.0)
                                                            : rng.expo(1.0) + rng.expo(1.0);
        out.V = d + y;
    } else {
        // density (y + 2d + 3) e^{-y} / (2d + 4) on [0, inf)
        y = (rng.u01() < (2.0 * d + 3.0) / (2.0 * d + 4.0)) ? rng.expo(1.0)
                                                            : rng.expo(1.0) + rng.expo(1.0);
        out.V = d + 2.0 + y;
    }
    out.exit_value = (rng.u01() < exit_upper_prob(out.U, out.V)) ? out.V : out.U;
    return out;
}

SurvivalCurve coalescence_tail(TailModel model, const SliceSchedule& schedule, double d,
                               std::size_t k_max, std::size_t n_replicas, std::uint64_t seed,
                               std::size_t j_shift) {
    if (model == TailModel::Cylinder && !(d > 0.0 && d <= 0.5))
        throw std::invalid_argument("coalescence_tail: cylinder needs d in (0, 1/2]");
    if (!(d > 0.0)) throw std::invalid_argument("coalescence_tail: d > 0");
    if (j_shift + k_max > schedule.K())
        throw std::invalid_argument("coalescence_tail: window beyond schedule");

    std::vector<std::size_t> alive_at(k_max, 0);  // replicas with tau > K
    std::vector<double> pts;
    for (std::size_t rep = 0; rep < n_replicas; ++rep) {
        Rng rng(derive_seed(seed, rep));
        double a = 0.0, b = d;
        bool merged = false;
        for (std::size_t k = 0; k < k_max; ++k) {
            if (!merged) {
                const double nk = schedule.n[j_shift + k];
                if (model == TailModel::Cylinder) {
                    ppp_on_interval(nk, 1.0, rng, pts);
                    const int ia = nearest_on_circle(pts, a);
                    const int ib = nearest_on_circle(pts, b);
                    if (ia >= 0) {
                        merged = (ia == ib);
                        a = pts[static_cast<std::size_t>(ia)];
                        b = pts[static_cast<std::size_t>(ib)];
                    }
                    // empty slice: vertical move, positions unchanged
                } else {
                    const double margin = 20.0 / nk;
                    const double lo = std::min(a, b) - margin;
                    const double len = std::fabs(b - a) + 2.0 * margin;
                    ppp_on_interval(nk, len, rng, pts);
                    for (auto& p : pts) p += lo;
                    const int ia = nearest_on_line(pts, a);
                    const int ib = nearest_on_line(pts, b);
                    // margin makes an empty window impossible in practice
                    if (ia >= 0) {
                        merged = (ia == ib);
                        a = pts[static_cast<std::size_t>(ia)];
                        b = pts[static_cast<std::size_t>(ib)];
                    }
                }
            }
            if (!merged) ++alive_at[k];
        }
    }

    SurvivalCurve curve;
    curve.n_replicas = n_replicas;
    curve.h.resize(k_max);
    curve.survival.resize(k_max);
    curve.std_error.resize(k_max);
    curve.normalized.resize(k_max);
    const double v0 = (j_shift == 0) ? 0.0 : schedule.V[j_shift - 1];
    for (std::size_t k = 0; k < k_max; ++k) {
        const double p = static_cast<double>(alive_at[k]) / static_cast<double>(n_replicas);
        const double h = schedule.V[j_shift + k] - v0;
        curve.h[k] = h;
        curve.survival[k] = p;
        curve.std_error[k] = std::sqrt(p * (1.0 - p) / static_cast<double>(n_replicas));
        curve.normalized[k] = p * std::sqrt(h) / d;
    }
    return curve;
}

double sliced_path_displacement(const SliceSchedule& schedule, std::size_t j_shift, double t,
                                Rng& rng) {
    if (j_shift >= schedule.K())
        throw std::invalid_argument("sliced_path_displacement: shift beyond schedule");
    const double v0 = (j_shift == 0) ? 0.0 : schedule.V[j_shift - 1];
    double acc = 0.0;
    double v_prev = 0.0;
    for (std::size_t k = j_shift + 1; k <= schedule.K(); ++k) {
        const double v_here = schedule.V[k - 1] - v0;
        const double inc = sample_increment(schedule.n[k - 1], rng);
        if (v_here <= t) {
            acc += inc;
            if (v_here == t) return acc;
        } else {
            acc += inc * (t - v_prev) / (v_here - v_prev);
            return acc;
        }
        v_prev = v_here;
    }
    throw std::out_of_range("sliced_path_displacement: horizon beyond schedule");
}

}  // namespace cylweb::forest
