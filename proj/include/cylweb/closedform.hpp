#pragma once

#include <vector>

namespace cylweb::web {

/// Wrapped heat kernel Phi_t(x) = (2 pi t)^{-1/2} sum_m exp(-(x-m)^2/(2t)),
/// truncated so the neglected tail is below tol.
double theta_kernel(double x, double t, double tol = 1e-10);

/// Antiperiodic variant: the image at shift m carries weight (-1)^m.
double theta_kernel_anti(double x, double t, double tol = 1e-10);

/// Integral of the (anti)periodic kernel from 0 to x.
double theta_cdf(double x, double t, double tol = 1e-12);
double theta_cdf_anti(double x, double t, double tol = 1e-12);

struct FulmekResult {
    double value = 0.0;
    double std_error = 0.0;  // 0 for deterministic quadrature (j == 2)
};

/// Survival probability P(T^{j->j-1} > t) of j coalescing Brownian motions
/// modulo 1 started at the sorted angles xs: the ordered integral of
/// det[K_t(y_k - x_l)], with K_t the wrapped heat kernel for odd j and its
/// antiperiodic variant for even j. j = 2 uses deterministic panel
/// quadrature; j >= 3 uses quasi-Monte Carlo over the ordered simplex with
/// a reported standard error.
FulmekResult fulmek_survival(const std::vector<double>& xs, double t, double tol = 1e-9,
                             unsigned qmc_points_log2 = 16);

/// Closed form E[e^{theta T}] for two paths started at angles x1 < x2,
/// theta < 0: cosh(sqrt(|theta|)(1+2x1-2x2)/2) / cosh(sqrt(|theta|)/2).
double laplace_T2to1(double theta, double x1, double x2);

/// Numerical Laplace transform 1 + theta * int_0^inf e^{theta t} S(t) dt of
/// the two-path survival at the given gap (theta < 0).
double laplace_of_pair_survival(double theta, double gap);

}  // namespace cylweb::web
