#include "cylweb/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cylweb/rng.hpp"

namespace cylweb::web {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;

int truncation_order(double t, double tol) {
    // tail of the image sum past |m| = M is below ~2 exp(-(M-1)^2/(2t))/sqrt(2 pi t)
    int m = static_cast<int>(std::ceil(6.0 * std::sqrt(t))) + 2;
    while (2.0 * std::exp(-(m - 1.0) * (m - 1.0) / (2.0 * t)) / std::sqrt(6.2831853 * t) > tol &&
           m < 2048) {
        ++m;
    }
    return m;
}

double theta_sum(double x, double t, double tol, bool anti) {
    if (!(t > 0.0)) throw std::invalid_argument("theta kernel: t must be > 0");
    const int M = truncation_order(t, tol);
    // reduce x near 0 so the dominant images sit at small |m|
    const double xr = x - std::round(x);
    const int base = static_cast<int>(std::round(x - xr));  // x = xr + base
    double s = 0.0;
    for (int m = -M; m <= M; ++m) {
        const double d = xr - m;
        double term = std::exp(-d * d / (2.0 * t));
        if (anti && ((m + base) & 1)) term = -term;
        s += term;
    }
    return s / (kSqrt2Pi * std::sqrt(t));
}

double theta_cdf_sum(double x, double t, double tol, bool anti) {
    if (!(t > 0.0)) throw std::invalid_argument("theta cdf: t must be > 0");
    const int M = truncation_order(t, tol) + static_cast<int>(std::ceil(std::fabs(x)));
    const double inv = 1.0 / std::sqrt(2.0 * t);
    double s = 0.0;
    for (int m = -M; m <= M; ++m) {
        double term = 0.5 * (std::erf((x - m) * inv) - std::erf((-static_cast<double>(m)) * inv));
        if (anti && (m & 1)) term = -term;
        s += term;
    }
    return s;
}

struct DetWorkspace {
    int j;
    std::vector<double> mat;
    std::vector<int> perm;
};

double det_small(std::vector<double>& a, int n) {
    // Gaussian elimination with partial pivoting; n <= ~8
    double det = 1.0;
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(a[r * n + c]) > std::fabs(a[p * n + c])) p = r;
        if (a[p * n + c] == 0.0) return 0.0;
        if (p != c) {
            for (int k = 0; k < n; ++k) std::swap(a[p * n + k], a[c * n + k]);
            det = -det;
        }
        det *= a[c * n + c];
        for (int r = c + 1; r < n; ++r) {
            const double f = a[r * n + c] / a[c * n + c];
            for (int k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
        }
    }
    return det;
}

double kernel_det(const std::vector<double>& xs, const std::vector<double>& ys, double t,
                  double tol, bool anti, std::vector<double>& mat) {
    const int j = static_cast<int>(xs.size());
    for (int k = 0; k < j; ++k)
        for (int l = 0; l < j; ++l) mat[k * j + l] = theta_sum(ys[k] - xs[l], t, tol, anti);
    return det_small(mat, j);
}

/// Halton sequence in the given base (1-based index), for QMC points.
double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

}  // namespace

double theta_kernel(double x, double t, double tol) { return theta_sum(x, t, tol, false); }
double theta_kernel_anti(double x, double t, double tol) { return theta_sum(x, t, tol, true); }
double theta_cdf(double x, double t, double tol) { return theta_cdf_sum(x, t, tol, false); }
double theta_cdf_anti(double x, double t, double tol) { return theta_cdf_sum(x, t, tol, true); }

namespace {

/// j = 2 reduction: the inner ordered integral is an antiperiodic cdf
/// difference, leaving a smooth 1-d integrand handled by panelled
/// Gauss-Legendre.
double fulmek_two(double x1, double x2, double t, double tol) {
    static const double gl_x[8] = {-0.9602898564975363, -0.7966664774136267,
                                   -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975363};
    static const double gl_w[8] = {0.1012285362903763, 0.2223810344533745,
                                   0.3137066458778873, 0.3626837833783620,
                                   0.3626837833783620, 0.3137066458778873,
                                   0.2223810344533745, 0.1012285362903763};
    const int panels = std::clamp(static_cast<int>(std::ceil(6.0 / std::sqrt(t))), 16, 1024);
    const double g1_full = theta_cdf_anti(1.0 - x2, t, tol);
    const double g2_full = theta_cdf_anti(1.0 - x1, t, tol);
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = static_cast<double>(p) / panels;
        const double b = static_cast<double>(p + 1) / panels;
        const double h2 = 0.5 * (b - a), mid = 0.5 * (a + b);
        double acc = 0.0;
        for (int q = 0; q < 8; ++q) {
            const double y1 = mid + h2 * gl_x[q];
            const double f = theta_kernel_anti(y1 - x1, t, tol) *
                                 (g1_full - theta_cdf_anti(y1 - x2, t, tol)) -
                             theta_kernel_anti(y1 - x2, t, tol) *
                                 (g2_full - theta_cdf_anti(y1 - x1, t, tol));
            acc += gl_w[q] * f;
        }
        total += acc * h2;
    }
    return total;
}

}  // namespace

FulmekResult fulmek_survival(const std::vector<double>& xs, double t, double tol,
                             unsigned qmc_points_log2) {
    const int j = static_cast<int>(xs.size());
    if (j < 2) throw std::invalid_argument("fulmek_survival: need at least 2 angles");
    if (!(t > 0.0)) throw std::invalid_argument("fulmek_survival: t must be > 0");
    for (int i = 0; i < j; ++i) {
        if (xs[i] < 0.0 || xs[i] >= 1.0) throw std::invalid_argument("fulmek_survival: angles in [0,1)");
        if (i > 0 && !(xs[i] > xs[i - 1]))
            throw std::invalid_argument("fulmek_survival: angles must be strictly increasing");
    }

    FulmekResult res;
    if (j == 2) {
        res.value = std::clamp(fulmek_two(xs[0], xs[1], t, tol), 0.0, 1.0);
        return res;
    }

    const bool anti = (j % 2 == 0);
    static const int primes[8] = {2, 3, 5, 7, 11, 13, 17, 19};
    if (j > 8) throw std::invalid_argument("fulmek_survival: j too large for QMC bases");

    const std::uint64_t n_total = 1ULL << qmc_points_log2;
    const int shifts = 8;
    const std::uint64_t n_per = n_total / shifts;
    std::vector<double> mat(static_cast<std::size_t>(j) * j);
    std::vector<double> ys(j);
    std::vector<double> shift(j);
    Rng shift_rng(0x8d3c5a2fb7e19c4dULL);
    double inv_jfact = 1.0;
    for (int i = 2; i <= j; ++i) inv_jfact /= i;

    std::vector<double> block_means;
    block_means.reserve(shifts);
    for (int sft = 0; sft < shifts; ++sft) {
        for (int d = 0; d < j; ++d) shift[d] = shift_rng.u01();
        double acc = 0.0;
        for (std::uint64_t i = 0; i < n_per; ++i) {
            for (int d = 0; d < j; ++d) {
                double u = halton(i + 1, primes[d]) + shift[d];
                ys[d] = u - std::floor(u);
            }
            std::sort(ys.begin(), ys.end());
            acc += kernel_det(xs, ys, t, tol, anti, mat);
        }
        block_means.push_back(acc / static_cast<double>(n_per) * inv_jfact);
    }
    double m = std::accumulate(block_means.begin(), block_means.end(), 0.0) / shifts;
    double v = 0.0;
    for (double b : block_means) v += (b - m) * (b - m);
    res.value = m;
    res.std_error = std::sqrt(v / (shifts * (shifts - 1.0)));
    return res;
}

double laplace_T2to1(double theta, double x1, double x2) {
    if (!(theta < 0.0)) throw std::invalid_argument("laplace_T2to1: theta must be < 0");
    if (!(0.0 <= x1 && x1 < x2 && x2 < 1.0))
        throw std::invalid_argument("laplace_T2to1: need 0 <= x1 < x2 < 1");
    const double s = std::sqrt(-theta);
    return std::cosh(s * (1.0 + 2.0 * x1 - 2.0 * x2) / 2.0) / std::cosh(s / 2.0);
}

double laplace_of_pair_survival(double theta, double gap) {
    if (!(theta < 0.0)) throw std::invalid_argument("laplace_of_pair_survival: theta < 0 required");
    static const double gl_x[8] = {-0.9602898564975363, -0.7966664774136267,
                                   -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975363};
    static const double gl_w[8] = {0.1012285362903763, 0.2223810344533745,
                                   0.3137066458778873, 0.3626837833783620,
                                   0.3626837833783620, 0.3137066458778873,
                                   0.2223810344533745, 0.1012285362903763};
    const std::vector<double> xs{0.0, gap};
    // e^{theta t} is below 1e-14 past this horizon; survival is <= 1
    const double t_max = 32.0 / -theta;
    const int panels = 160;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = t_max * p / panels, b = t_max * (p + 1) / panels;
        const double h2 = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (int q = 0; q < 8; ++q) {
            const double tt = mid + h2 * gl_x[q];
            acc += h2 * gl_w[q] * theta * std::exp(theta * tt) *
                   fulmek_survival(xs, tt).value;
        }
    }
    return 1.0 + acc;
}

}  // namespace cylweb::web
