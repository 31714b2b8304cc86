#include "cylweb/lattice.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace cylweb::lattice {

RademacherField::RademacherField(int n, std::int64_t h_lo, std::int64_t h_hi, std::uint64_t seed,
                                 bool planar)
    : n_(n), h_lo_(h_lo), h_hi_(h_hi), seed_(seed), planar_(planar) {
    if (n < 1) throw std::invalid_argument("RademacherField: n >= 1 required");
    if (h_lo >= h_hi) throw std::invalid_argument("RademacherField: empty window");
}

std::int64_t RademacherField::reduce(std::int64_t x) const {
    if (planar_) return x;
    const std::int64_t c = 2 * n_;
    std::int64_t r = x % c;
    return r < 0 ? r + c : r;
}

int RademacherField::sign(std::int64_t x, std::int64_t t) const {
    const std::int64_t xr = reduce(x);
    if (!is_primal(xr, t)) throw std::invalid_argument("RademacherField::sign: dual-parity site");
    return rademacher_at(seed_, xr, t);
}

RademacherField sample_field(int n, std::int64_t h_lo, std::int64_t h_hi, std::uint64_t seed) {
    return RademacherField(n, h_lo, h_hi, seed);
}

LatticePath trace_path(const RademacherField& field, std::int64_t start_x, std::int64_t start_t,
                       Direction direction, std::int64_t stop_height) {
    const std::int64_t x0 = field.reduce(start_x);
    LatticePath path;
    path.start_x = x0;
    path.start_t = start_t;
    path.direction = direction;
    if (direction == Direction::Up) {
        if (!is_primal(x0, start_t))
            throw std::invalid_argument("trace_path: up walk needs a primal start");
        if (stop_height < start_t) throw std::invalid_argument("trace_path: stop below start");
        path.positions.reserve(static_cast<std::size_t>(stop_height - start_t) + 1);
        std::int64_t x = x0;
        path.positions.push_back(x);
        for (std::int64_t s = start_t; s < stop_height; ++s) {
            x = field.reduce(x + field.sign(x, s));
            path.positions.push_back(x);
        }
    } else {
        if (is_primal(x0, start_t))
            throw std::invalid_argument("trace_path: down walk needs a dual start");
        if (stop_height > start_t) throw std::invalid_argument("trace_path: stop above start");
        path.positions.reserve(static_cast<std::size_t>(start_t - stop_height) + 1);
        std::int64_t x = x0;
        path.positions.push_back(x);
        for (std::int64_t s = start_t - 1; s >= stop_height; --s) {
            // (x, s) is a primal site whenever (x, s+1) is dual
            x = field.reduce(x - field.sign(x, s));
            path.positions.push_back(x);
        }
    }
    return path;
}

CoalesceResult coalesce_all(const RademacherField& field, std::int64_t h, std::int64_t step_cap) {
    if (field.planar()) throw std::invalid_argument("coalesce_all: cylinder field required");
    const std::int64_t c = field.circumference();
    std::vector<std::int64_t> live;
    for (std::int64_t x = 0; x < c; ++x)
        if (is_primal(x, h)) live.push_back(x);
    CoalesceResult res;
    std::int64_t t = h;
    while (live.size() > 1) {
        if (res.duration >= step_cap) {
            res.censored = true;
            return res;
        }
        for (auto& x : live) x = field.reduce(x + field.sign(x, t));
        std::sort(live.begin(), live.end());
        live.erase(std::unique(live.begin(), live.end()), live.end());
        ++t;
        ++res.duration;
    }
    return res;
}

RescaledPath rescale_path(const LatticePath& path, int n) {
    RescaledPath out;
    const double space = 2.0 * n;
    const double time = 4.0 * static_cast<double>(n) * n;
    out.dt = 1.0 / time;
    out.t0 = static_cast<double>(path.start_t) / time;
    out.x.reserve(path.positions.size());
    for (auto p : path.positions) out.x.push_back(static_cast<double>(p) / space);
    if (path.direction == Direction::Down) out.dt = -out.dt;
    return out;
}

namespace {

/// Field backed by an explicit bit assignment on the enumeration window.
class WindowField {
public:
    WindowField(int n, std::int64_t h1, std::int64_t h2) : n_(n), h1_(h1), h2_(h2) {
        per_slice_ = n_;
        sites_ = static_cast<int>(h2 - h1) * per_slice_;
    }
    int sites() const { return sites_; }

    void set_assignment(std::uint64_t bits) { bits_ = bits; }

    std::int64_t reduce(std::int64_t x) const {
        const std::int64_t c = 2 * n_;
        std::int64_t r = x % c;
        return r < 0 ? r + c : r;
    }

    int sign(std::int64_t x, std::int64_t t) const {
        // primal sites on slice t are x = parity(t), parity(t)+2, ...
        const int slice = static_cast<int>(t - h1_);
        const int offset = static_cast<int>(reduce(x) / 2);
        const int idx = slice * per_slice_ + offset;
        return (bits_ >> idx) & 1u ? 1 : -1;
    }

private:
    int n_;
    std::int64_t h1_, h2_;
    int per_slice_ = 0;
    int sites_ = 0;
    std::uint64_t bits_ = 0;
};

}  // namespace

bool PairLaw::exact_match() const {
    for (const auto& e : entries) {
        // exact comparison of count / 2^sites with 2^{-closed_exponent}
        if (e.closed_exponent > sites_log2) return false;
        if (e.count != (1ULL << (sites_log2 - e.closed_exponent))) return false;
    }
    return true;
}

bool PairLaw::sums_to_one() const {
    // exact integer arithmetic: counts must add to 2^{sites_log2}
    std::uint64_t total = 0;
    for (const auto& e : entries) total += e.count;
    return total == (1ULL << sites_log2);
}

PairLaw enumerate_pair_law(int n, std::int64_t x1, std::int64_t x2, std::int64_t h1,
                           std::int64_t h2, int max_sites) {
    if (n < 1) throw std::invalid_argument("enumerate_pair_law: n >= 1");
    if (h2 <= h1) throw std::invalid_argument("enumerate_pair_law: need h1 < h2");
    WindowField wf(n, h1, h2);
    if (wf.sites() > max_sites)
        throw std::invalid_argument("enumerate_pair_law: window exceeds enumeration cap");
    const std::int64_t c = 2 * n;
    x1 = ((x1 % c) + c) % c;
    x2 = ((x2 % c) + c) % c;
    if (!is_primal(x1, h1)) throw std::invalid_argument("enumerate_pair_law: x1 must be primal at h1");
    if (is_primal(x2, h2)) throw std::invalid_argument("enumerate_pair_law: x2 must be dual at h2");

    const int steps = static_cast<int>(h2 - h1);
    std::map<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>, std::uint64_t> tally;

    std::vector<std::int64_t> up(steps + 1), down(steps + 1);
    for (std::uint64_t bits = 0; bits < (1ULL << wf.sites()); ++bits) {
        wf.set_assignment(bits);
        up[0] = x1;
        for (int i = 0; i < steps; ++i) {
            up[i + 1] = wf.reduce(up[i] + wf.sign(up[i], h1 + i));
        }
        down[steps] = x2;
        for (int i = steps - 1; i >= 0; --i) {
            down[i] = wf.reduce(down[i + 1] - wf.sign(down[i + 1], h1 + i));
        }
        ++tally[{up, down}];
    }

    PairLaw law;
    law.n = n;
    law.h1 = h1;
    law.h2 = h2;
    law.sites_log2 = wf.sites();
    const bool degenerate = (n == 1);  // +1 == -1 mod 2: steps pin nothing
    for (auto& [paths, count] : tally) {
        PairEntry e;
        e.path_up = paths.first;
        e.path_down = paths.second;
        e.count = count;
        e.contacts = 0;
        for (int i = 0; i < steps; ++i)
            if (e.path_up[i] == e.path_down[i + 1]) ++e.contacts;
        e.closed_exponent = degenerate ? 0 : 2 * steps - e.contacts;
        law.entries.push_back(std::move(e));
    }
    return law;
}

std::vector<KernelMove> kernel_row(int n, std::int64_t a, std::int64_t a_dual) {
    if (n < 2) throw std::invalid_argument("kernel_row: circumference >= 4 required");
    const std::int64_t c = 2 * n;
    auto red = [c](std::int64_t x) { return ((x % c) + c) % c; };
    a = red(a);
    a_dual = red(a_dual);
    const std::int64_t diff = red(a_dual - a);
    if (diff % 2 == 0) throw std::invalid_argument("kernel_row: components must have opposite parity");

    std::vector<KernelMove> row;
    const std::int64_t dist = std::min(diff, c - diff);
    if (dist > 1) {
        for (std::int64_t e1 : {-1, 1})
            for (std::int64_t e2 : {-1, 1})
                row.push_back({red(a + e1), red(a_dual + e2), 1, 4});
    } else if (diff == 1) {  // down branch one step ccw of the up branch
        // the half-weight move is the shared-value contact: both components
        // step together and adjacency persists
        row.push_back({red(a - 1), red(a), 1, 2});
        row.push_back({red(a + 1), red(a + 2), 1, 4});
        row.push_back({red(a - 1), red(a + 2), 1, 4});
    } else {  // down branch one step cw
        row.push_back({red(a + 1), red(a), 1, 2});
        row.push_back({red(a - 1), red(a - 2), 1, 4});
        row.push_back({red(a + 1), red(a - 2), 1, 4});
    }
    return row;
}

std::pair<std::int64_t, std::int64_t> kernel_step(int n, std::int64_t a, std::int64_t a_dual,
                                                  Rng& rng) {
    const auto row = kernel_row(n, a, a_dual);
    const double u = rng.u01();
    double acc = 0.0;
    for (const auto& m : row) {
        acc += static_cast<double>(m.prob_num) / m.prob_den;
        if (u < acc) return {m.a, m.b};
    }
    return {row.back().a, row.back().b};
}

ReflectedWalk reflected_walk(int n, std::int64_t a0, std::int64_t m0, std::int64_t steps,
                             Rng& rng) {
    const std::int64_t c = 2 * n;
    if (a0 < 1 || a0 > c - 1 || a0 % 2 == 0)
        throw std::invalid_argument("reflected_walk: a0 must be odd in [1, 2n-1]");
    if (m0 < 0 || m0 >= c || m0 % 2 != 0)
        throw std::invalid_argument("reflected_walk: m0 must be even in [0, 2n-1]");
    ReflectedWalk out;
    out.angle.reserve(steps + 1);
    out.m1.reserve(steps + 1);
    std::int64_t z = a0;
    std::int64_t m1 = m0;
    out.angle.push_back(z);
    out.m1.push_back(m1);
    for (std::int64_t i = 0; i < steps; ++i) {
        // odd half-step: its increment, negated, drives the companion walk
        std::int64_t dz;
        if (z == 0) dz = 1;
        else if (z == c) dz = -1;
        else dz = rng.rademacher();
        z += dz;
        m1 = ((m1 - dz) % c + c) % c;
        // even half-step
        if (z == 0) z = 1;
        else if (z == c) z = c - 1;
        else z += rng.rademacher();
        out.angle.push_back(z);
        out.m1.push_back(m1);
    }
    return out;
}

namespace {

/// Advances the full primal slice at height h upward until it occupies a
/// single site; returns that height, or -1 on cap.
std::int64_t slice_merge_height_up(const RademacherField& field, std::int64_t h,
                                   std::int64_t step_cap) {
    const std::int64_t c = field.circumference();
    std::vector<std::int64_t> live;
    for (std::int64_t x = 0; x < c; ++x)
        if (is_primal(x, h)) live.push_back(x);
    std::int64_t t = h;
    std::int64_t steps = 0;
    while (live.size() > 1) {
        if (steps++ >= step_cap) return -1;
        for (auto& x : live) x = field.reduce(x + field.sign(x, t));
        std::sort(live.begin(), live.end());
        live.erase(std::unique(live.begin(), live.end()), live.end());
        ++t;
    }
    return t;
}

/// Advances the full dual slice at height h downward until single; returns
/// the merge height (<= h), or max int on cap.
std::int64_t slice_merge_height_down(const RademacherField& field, std::int64_t h,
                                     std::int64_t step_cap) {
    const std::int64_t c = field.circumference();
    std::vector<std::int64_t> live;
    for (std::int64_t x = 0; x < c; ++x)
        if (!is_primal(x, h)) live.push_back(x);
    std::int64_t t = h;
    std::int64_t steps = 0;
    while (live.size() > 1) {
        if (steps++ >= step_cap) return std::numeric_limits<std::int64_t>::max();
        for (auto& x : live) x = field.reduce(x - field.sign(x, t - 1));
        std::sort(live.begin(), live.end());
        live.erase(std::unique(live.begin(), live.end()), live.end());
        --t;
    }
    return t;
}

}  // namespace

BiInfiniteSample extract_biinfinite(int n, std::uint64_t seed, std::int64_t h1, std::int64_t h2,
                                    std::int64_t step_cap, int retries) {
    if (h2 < h1) throw std::invalid_argument("extract_biinfinite: need h1 <= h2");
    if (step_cap <= 0) step_cap = 100LL * (2 * n) * (2 * n);
    RademacherField field(n, h1 - step_cap, h2 + step_cap, seed);
    BiInfiniteSample out;
    out.h1 = h1;
    out.h2 = h2;

    for (int attempt = 0; attempt <= retries; ++attempt, step_cap *= 2) {
        // down branch: everything above merge_up has coalesced, so the dual
        // slice there collapses to the unique two-sided dual path before h2
        const std::int64_t merge_up = slice_merge_height_up(field, h2, step_cap);
        if (merge_up < 0) continue;
        // up branch mirror image below h1
        const std::int64_t merge_dn = slice_merge_height_down(field, h1, step_cap);
        if (merge_dn == std::numeric_limits<std::int64_t>::max()) continue;

        const std::int64_t c = field.circumference();
        // trace the dual slice at merge_up downward, deduplicating; it must
        // be a single path on [h1, h2]
        bool ok = true;
        {
            std::vector<std::int64_t> live;
            for (std::int64_t x = 0; x < c; ++x)
                if (!is_primal(x, merge_up)) live.push_back(x);
            std::vector<std::int64_t> rev;
            for (std::int64_t t = merge_up; t >= h1 && ok; --t) {
                if (t <= h2) {
                    if (live.size() != 1) {
                        ok = false;
                        break;
                    }
                    rev.push_back(live.front());
                }
                if (t > h1) {
                    for (auto& x : live) x = field.reduce(x - field.sign(x, t - 1));
                    std::sort(live.begin(), live.end());
                    live.erase(std::unique(live.begin(), live.end()), live.end());
                }
            }
            if (!ok) continue;
            out.c_down.assign(rev.rbegin(), rev.rend());
        }
        // trace the primal slice at merge_dn upward
        {
            std::vector<std::int64_t> live;
            for (std::int64_t x = 0; x < c; ++x)
                if (is_primal(x, merge_dn)) live.push_back(x);
            out.c_up.clear();
            for (std::int64_t t = merge_dn; t <= h2 && ok; ++t) {
                if (t >= h1) {
                    if (live.size() != 1) {
                        ok = false;
                        break;
                    }
                    out.c_up.push_back(live.front());
                }
                if (t < h2) {
                    for (auto& x : live) x = field.reduce(x + field.sign(x, t));
                    std::sort(live.begin(), live.end());
                    live.erase(std::unique(live.begin(), live.end()), live.end());
                }
            }
            if (!ok) continue;
        }
        return out;
    }
    out.censored = true;
    return out;
}

CoalesceResult pair_meet_steps(const RademacherField& field, std::int64_t x1, std::int64_t x2,
                               std::int64_t h, std::int64_t step_cap) {
    std::int64_t a = field.reduce(x1), b = field.reduce(x2);
    CoalesceResult res;
    std::int64_t t = h;
    while (a != b) {
        if (res.duration >= step_cap) {
            res.censored = true;
            return res;
        }
        a = field.reduce(a + field.sign(a, t));
        b = field.reduce(b + field.sign(b, t));
        ++t;
        ++res.duration;
    }
    return res;
}

}  // namespace cylweb::lattice
