#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cylweb::stats {

/// Default significance level for every verdict (CI budget: false positives
/// must stay rare across the whole suite).
inline constexpr double kDefaultLevel = 1e-3;

double normal_cdf(double z);
/// Regularized upper incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a).
double gamma_q(double a, double x);
/// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);  // unbiased

class Ecdf {
public:
    explicit Ecdf(std::vector<double> values);
    double cdf(double x) const;       // P(X <= x)
    double survival(double x) const;  // P(X > x)
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& sorted() const { return values_; }

private:
    std::vector<double> values_;
};

struct TestReport {
    std::string test;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    bool verdict = false;
    nlohmann::json params;

    nlohmann::json to_json() const;
};

struct Atom {
    double location;
    double mass;
};

/// One-sample Kolmogorov-Smirnov test against a cdf, with optional atoms.
/// Atom hits are split off and tested binomially; the remainder is tested
/// against the renormalized continuous part. The reported p-value is the
/// smallest of the component p-values.
TestReport ks_test(const std::vector<double>& sample,
                   const std::function<double(double)>& cdf,
                   const std::vector<Atom>& atoms = {},
                   double level = kDefaultLevel);

TestReport ks_test_two_sample(const std::vector<double>& a,
                              const std::vector<double>& b,
                              double level = kDefaultLevel);

/// Pearson chi-squared test of observed counts against cell probabilities.
TestReport chi2_test(const std::vector<std::int64_t>& counts,
                     const std::vector<double>& probs,
                     double level = kDefaultLevel);

/// Checks the stochastic dominance a <=_S b: the survival function of a must
/// not exceed the survival function of b beyond pooled 3-sigma bands at any
/// threshold.
TestReport ecdf_dominance(const std::vector<double>& sample_a,
                          const std::vector<double>& sample_b,
                          const std::vector<double>& thresholds,
                          double z_band = 3.0);

struct LaplaceEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    bool censored_bias = false;  // some observations entered at their cap
};

/// Monte Carlo estimate of E[e^{theta T}]; censored observations contribute
/// e^{theta * cap}, which upper-bounds their true contribution for theta < 0.
LaplaceEstimate laplace_mc(const std::vector<double>& sample, double theta,
                           const std::vector<bool>* censored = nullptr);

struct TailFit {
    double slope = 0.0;
    double r_squared = 0.0;
    std::size_t points_used = 0;
};

/// Least-squares line on (t, log survival) over the top tail_fraction of the
/// time range restricted to strictly positive survival values.
TailFit exp_tail_fit(const std::vector<std::pair<double, double>>& survival_curve,
                     double tail_fraction);

struct MomentTargets {
    bool has_mean = false;
    double mean = 0.0;
    bool has_variance = false;
    double variance = 0.0;
};

TestReport moment_report(const std::vector<double>& sample, const MomentTargets& targets,
                         double level = kDefaultLevel);

}  // namespace cylweb::stats
