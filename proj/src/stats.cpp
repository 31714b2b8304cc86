#include "cylweb/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cylweb::stats {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730950488016887242097); }

namespace {

double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum;
    for (int k = 1; k < 500; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    // Lentz's method for the continued fraction of Gamma(a,x)/Gamma(a)
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // complementary series, accurate for small lambda
        const double y = std::exp(-1.2337005501361697 / (lambda * lambda));  // exp(-pi^2/(8 l^2))
        const double series = std::sqrt(6.283185307179586) / lambda *
                              (y + std::pow(y, 9) + std::pow(y, 25) + std::pow(y, 49));
        return std::clamp(1.0 - series, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
        if (k % 2 == 0) term = -term;
        sum += term;
        if (std::fabs(term) < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

Ecdf::Ecdf(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("Ecdf: empty sample");
    std::sort(values_.begin(), values_.end());
}

double Ecdf::cdf(double x) const {
    auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double Ecdf::survival(double x) const { return 1.0 - cdf(x); }

nlohmann::json TestReport::to_json() const {
    return nlohmann::json{{"test", test},         {"statistic", statistic}, {"p_value", p_value},
                          {"n", n},               {"verdict", verdict},     {"params", params}};
}

namespace {

double ks_p_from_stat(double d, double n_eff) {
    const double rn = std::sqrt(n_eff);
    return kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
}

/// Two-sided binomial z-test via normal approximation.
double binom_p(std::int64_t hits, std::size_t n, double prob) {
    const double se = std::sqrt(prob * (1.0 - prob) / static_cast<double>(n));
    if (se == 0.0) return (static_cast<double>(hits) == prob * static_cast<double>(n)) ? 1.0 : 0.0;
    const double z = (static_cast<double>(hits) / static_cast<double>(n) - prob) / se;
    return 2.0 * (1.0 - normal_cdf(std::fabs(z)));
}

}  // namespace

TestReport ks_test(const std::vector<double>& sample,
                   const std::function<double(double)>& cdf,
                   const std::vector<Atom>& atoms, double level) {
    if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
    TestReport rep;
    rep.test = "ks";
    rep.n = sample.size();

    double atom_mass = 0.0;
    for (const auto& a : atoms) atom_mass += a.mass;
    if (atom_mass >= 1.0) throw std::invalid_argument("ks_test: atom mass must be < 1");

    // split exact atom hits from the continuous remainder
    std::vector<double> cont;
    cont.reserve(sample.size());
    std::vector<std::int64_t> hits(atoms.size(), 0);
    for (double x : sample) {
        bool is_atom = false;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (x == atoms[i].location) {
                ++hits[i];
                is_atom = true;
                break;
            }
        }
        if (!is_atom) cont.push_back(x);
    }

    double p_min = 1.0;
    nlohmann::json atom_report = nlohmann::json::array();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const double p = binom_p(hits[i], sample.size(), atoms[i].mass);
        atom_report.push_back({{"location", atoms[i].location},
                               {"expected_mass", atoms[i].mass},
                               {"hits", hits[i]},
                               {"p_value", p}});
        p_min = std::min(p_min, p);
    }

    double dstat = 0.0;
    if (!cont.empty()) {
        std::sort(cont.begin(), cont.end());
        const double n = static_cast<double>(cont.size());
        for (std::size_t i = 0; i < cont.size(); ++i) {
            // renormalized continuous cdf: remove atom jumps below x
            double jumped = 0.0;
            for (const auto& a : atoms)
                if (a.location <= cont[i]) jumped += a.mass;
            const double fc = (cdf(cont[i]) - jumped) / (1.0 - atom_mass);
            dstat = std::max(dstat, std::fabs(static_cast<double>(i + 1) / n - fc));
            dstat = std::max(dstat, std::fabs(fc - static_cast<double>(i) / n));
        }
        p_min = std::min(p_min, ks_p_from_stat(dstat, n));
    }

    rep.statistic = dstat;
    rep.p_value = p_min;
    rep.verdict = p_min > level;
    rep.params = {{"atoms", atom_report}, {"continuous_n", cont.size()}, {"level", level}};
    return rep;
}

TestReport ks_test_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                              double level) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_test_two_sample: empty sample");
    Ecdf ea(a), eb(b);
    double d = 0.0;
    for (double x : ea.sorted()) d = std::max(d, std::fabs(ea.cdf(x) - eb.cdf(x)));
    for (double x : eb.sorted()) d = std::max(d, std::fabs(ea.cdf(x) - eb.cdf(x)));
    const double n_eff = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                         static_cast<double>(a.size() + b.size());
    TestReport rep;
    rep.test = "ks2";
    rep.statistic = d;
    rep.p_value = ks_p_from_stat(d, n_eff);
    rep.n = a.size() + b.size();
    rep.verdict = rep.p_value > level;
    rep.params = {{"n_a", a.size()}, {"n_b", b.size()}, {"level", level}};
    return rep;
}

TestReport chi2_test(const std::vector<std::int64_t>& counts, const std::vector<double>& probs,
                     double level) {
    if (counts.size() != probs.size() || counts.size() < 2) {
        throw std::invalid_argument("chi2_test: need matching cells");
    }
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    double stat = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double expected = probs[i] * static_cast<double>(total);
        if (expected <= 0.0) throw std::invalid_argument("chi2_test: zero expected cell");
        const double diff = static_cast<double>(counts[i]) - expected;
        stat += diff * diff / expected;
    }
    const double df = static_cast<double>(counts.size() - 1);
    TestReport rep;
    rep.test = "chi2";
    rep.statistic = stat;
    rep.p_value = gamma_q(df / 2.0, stat / 2.0);
    rep.n = static_cast<std::size_t>(total);
    rep.verdict = rep.p_value > level;
    rep.params = {{"df", df}, {"level", level}};
    return rep;
}

TestReport ecdf_dominance(const std::vector<double>& sample_a, const std::vector<double>& sample_b,
                          const std::vector<double>& thresholds, double z_band) {
    if (sample_a.empty() || sample_b.empty()) {
        throw std::invalid_argument("ecdf_dominance: empty sample");
    }
    Ecdf ea(sample_a), eb(sample_b);
    const double na = static_cast<double>(sample_a.size());
    const double nb = static_cast<double>(sample_b.size());
    double worst_z = -1e300;
    double worst_thr = 0.0;
    for (double t : thresholds) {
        const double sa = ea.survival(t), sb = eb.survival(t);
        const double se = std::sqrt(sa * (1.0 - sa) / na + sb * (1.0 - sb) / nb);
        const double z = (se == 0.0) ? ((sa > sb) ? 1e300 : 0.0) : (sa - sb) / se;
        if (z > worst_z) {
            worst_z = z;
            worst_thr = t;
        }
    }
    TestReport rep;
    rep.test = "dominance";
    rep.statistic = worst_z;
    rep.p_value = std::min(1.0, static_cast<double>(thresholds.size()) *
                                    (1.0 - normal_cdf(worst_z)));
    rep.n = sample_a.size() + sample_b.size();
    rep.verdict = worst_z <= z_band;
    rep.params = {{"worst_threshold", worst_thr}, {"z_band", z_band},
                  {"thresholds", thresholds.size()}};
    return rep;
}

LaplaceEstimate laplace_mc(const std::vector<double>& sample, double theta,
                           const std::vector<bool>* censored) {
    if (sample.empty()) throw std::invalid_argument("laplace_mc: empty sample");
    LaplaceEstimate est;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double v = std::exp(theta * sample[i]);
        s += v;
        s2 += v * v;
        if (censored && (*censored)[i]) est.censored_bias = true;
    }
    const double n = static_cast<double>(sample.size());
    est.estimate = s / n;
    est.stderr_ = std::sqrt(std::max(0.0, s2 / n - est.estimate * est.estimate) / n);
    return est;
}

TailFit exp_tail_fit(const std::vector<std::pair<double, double>>& survival_curve,
                     double tail_fraction) {
    std::vector<std::pair<double, double>> pos;
    for (const auto& [t, s] : survival_curve)
        if (s > 0.0) pos.emplace_back(t, s);
    if (pos.size() < 3) throw std::invalid_argument("exp_tail_fit: insufficient points");
    double tmin = pos.front().first, tmax = pos.back().first;
    for (const auto& [t, s] : pos) {
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
    }
    const double cut = tmax - tail_fraction * (tmax - tmin);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    std::size_t m = 0;
    for (const auto& [t, s] : pos) {
        if (t < cut) continue;
        const double y = std::log(s);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        syy += y * y;
        ++m;
    }
    if (m < 3) throw std::invalid_argument("exp_tail_fit: insufficient tail points");
    const double dm = static_cast<double>(m);
    const double cov = sxy - sx * sy / dm;
    const double vx = sxx - sx * sx / dm;
    const double vy = syy - sy * sy / dm;
    TailFit fit;
    fit.slope = cov / vx;
    fit.r_squared = (vy == 0.0) ? 1.0 : (cov * cov) / (vx * vy);
    fit.points_used = m;
    return fit;
}

TestReport moment_report(const std::vector<double>& sample, const MomentTargets& targets,
                         double level) {
    if (sample.size() < 100) throw std::invalid_argument("moment_report: need >= 100 samples");
    const double n = static_cast<double>(sample.size());
    const double m = mean(sample);
    double m2 = 0.0, m4 = 0.0;
    for (double x : sample) {
        const double d = x - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    const double s2 = m2 * n / (n - 1.0);

    TestReport rep;
    rep.test = "moments";
    rep.n = sample.size();
    double p_min = 1.0;
    nlohmann::json params;
    if (targets.has_mean) {
        const double z = (m - targets.mean) / std::sqrt(m2 / n);
        const double p = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
        params["mean_z"] = z;
        params["mean_hat"] = m;
        p_min = std::min(p_min, p);
        rep.statistic = std::fabs(z);
    }
    if (targets.has_variance) {
        const double se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
        const double z = (s2 - targets.variance) / se;
        const double p = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
        params["variance_z"] = z;
        params["variance_hat"] = s2;
        p_min = std::min(p_min, p);
        rep.statistic = std::max(rep.statistic, std::fabs(z));
    }
    params["level"] = level;
    rep.p_value = p_min;
    rep.verdict = p_min > level;
    rep.params = params;
    return rep;
}

}  // namespace cylweb::stats
