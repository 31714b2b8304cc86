#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cylweb/rng.hpp"
#include "cylweb/stats.hpp"

namespace cylweb::forest {

/// Exact per-slice increment variance for the angular displacement law.
double increment_sigma2(double n);

/// One draw of the single-path angular increment at intensity n: an atom
/// e^{-n} at zero (empty slice, vertical move) plus the two-sided
/// exponential density n e^{-2n|x|} on [-1/2, 1/2]. Inverse-cdf sampling.
double sample_increment(double n, Rng& rng);

struct SliceSchedule {
    std::vector<double> n;       // n[k-1] = intensity of slice k, k = 1..K
    std::vector<double> sigma2;  // per-slice increment variance
    std::vector<double> V;       // cumulative variance; heights h_k = V_k
    std::vector<double> f;       // optional audit sequence, empty if unset

    double h(std::size_t k) const { return k == 0 ? 0.0 : V[k - 1]; }
    std::size_t K() const { return n.size(); }
    /// R(t) = smallest k with V_k >= t; throws past the horizon.
    std::size_t R(double t) const;

    struct Hypothesis {
        double last_f = 0.0;
        double first_term = 0.0;     // e^{-n_1 f_1}
        double last_term = 0.0;      // e^{-n_K f_K}
        double sum_exp_nf = 0.0;     // partial sum of e^{-n_k f_k}
        double sum_inv_n2 = 0.0;     // partial sum of 1/n_k^2
        bool f_decreasing_tail = false;
    };
    /// Finite-horizon diagnostics of the growth conditions; partial sums
    /// only, no limit claims. Requires an f sequence.
    Hypothesis audit() const;
};

/// Sequence specs: "pow:a" for n_k = k^a, "const:c" for n_k = c.
SliceSchedule build_schedule(const std::string& n_spec, std::size_t K,
                             const std::string& f_spec = "");
SliceSchedule build_schedule(std::vector<double> n, std::vector<double> f = {});

struct CptPoint {
    double x;  // angle in [0,1)
    double t;
};

struct CptSample {
    double lambda = 0.0;
    double r = 0.0;
    double t_lo = 0.0, t_hi = 0.0;
    std::vector<CptPoint> points;  // sorted by t
    std::vector<int> parent;       // index into points, -1 if none in window
};

/// Homogeneous tree on the cylinder: each point connects to the first point
/// above it whose angle lies within distance r. Requires 0 < r <= 1/2.
CptSample sample_cpt(double lambda, double r, double t_lo, double t_hi, std::uint64_t seed);

/// Ancestor of an arbitrary location, by the same rule (the start need not
/// be an atom of the process).
int cpt_ancestor_of(const CptSample& sample, double x, double t);

struct CptJump {
    double dx;  // angular displacement, unwrapped
    double dt;
};

/// Renewal fast path for a single line of descent: the angular offset is
/// uniform on [-r, r] and the height gap exponential with rate 2 r lambda,
/// independently at every jump.
std::vector<CptJump> cpt_single_path(double lambda, double r, double t_horizon, Rng& rng);

struct SliceForest {
    std::size_t j_shift = 0;
    std::size_t k_lo = 0;                          // first sampled slice index
    std::vector<std::vector<double>> angles;       // per slice, sorted
    std::vector<std::vector<int>> ancestor;        // index into next slice, -1 = vertical
    const SliceSchedule* schedule = nullptr;
};

/// Per-slice Poisson points with the closest-point / vertical-move ancestry.
SliceForest sample_sliced_forest(const SliceSchedule& schedule, std::size_t j_shift,
                                 std::size_t k_count, std::uint64_t seed);

/// True when ancestor lines preserve circular order at every slice.
bool forest_order_preserved(const SliceForest& forest);

/// One draw of the planar nearest-point distance change at intensity lambda:
/// points realized on [-margin/lambda, d+margin/lambda].
double planar_delta(double d, Rng& rng, double lambda = 1.0, double margin = 20.0);

enum class Law { Mu, MuBar };

/// Exactly evaluable law: mu_d (nearest-point displacement change) or the
/// auxiliary mu_bar_d with c_d = 1, nu_d = 2.
struct LawSpec {
    double d = 0.0;
    Law which = Law::Mu;
    std::vector<stats::Atom> atoms;
    double mean = 0.0;
    double variance = 0.0;

    double pdf(double u) const;
    double cdf(double u) const;
};

LawSpec mu_eval(double d, Law which);

struct SkorokhodDraw {
    double U = 0.0;  // <= 0
    double V = 0.0;  // >= 0
    double exit_value = 0.0;
};

/// Exit-interval representation of mu_bar_d: draws (U, V) and the martingale
/// exit value, whose law is exactly mu_bar_d.
SkorokhodDraw skorokhod_step(double d, Rng& rng);

/// P(exit through V) for a martingale exiting [U, V] from 0.
inline double exit_upper_prob(double U, double V) { return -U / (V - U); }

enum class TailModel { Planar, Cylinder };

struct SurvivalCurve {
    std::vector<double> h;           // h_K per index
    std::vector<double> survival;    // P(tau > K)
    std::vector<double> std_error;   // binomial
    std::vector<double> normalized;  // survival * sqrt(h_K) / d
    std::size_t n_replicas = 0;
};

/// Tail of the coalescence slice index of two ancestor lines started at
/// distance d on slice j_shift; slices j_shift+1 .. j_shift+k_max are
/// navigated and heights are reported relative to the start slice.
SurvivalCurve coalescence_tail(TailModel model, const SliceSchedule& schedule, double d,
                               std::size_t k_max, std::size_t n_replicas, std::uint64_t seed,
                               std::size_t j_shift = 0);

/// Displacement of a single shifted ancestor line over horizon t (linear
/// interpolation inside the final slice gap). Real-valued; callers wrap.
double sliced_path_displacement(const SliceSchedule& schedule, std::size_t j_shift, double t,
                                Rng& rng);

}  // namespace cylweb::forest
