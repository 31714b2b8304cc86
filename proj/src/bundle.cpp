#include "cylweb/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cylweb::web {

namespace {
inline double wrap1(double x) { return x - std::floor(x); }
}  // namespace

CoalescingSystem::CoalescingSystem(const std::vector<double>& start_x,
                                   const std::vector<double>& start_t, double t0, bool circle)
    : circle_(circle), time_(t0), start_x_(start_x), start_t_(start_t) {
    if (start_x.size() != start_t.size() || start_x.empty())
        throw std::invalid_argument("CoalescingSystem: bad starts");
    const int k = static_cast<int>(start_x.size());
    parent_.resize(k);
    std::iota(parent_.begin(), parent_.end(), 0);
    attach_t_.assign(k, 0.0);
    for (int w = 0; w < k; ++w) pending_.push_back(w);
    std::stable_sort(pending_.begin(), pending_.end(),
                     [&](int a, int b) { return start_t_[a] < start_t_[b]; });
    Rng dummy(0);
    activate_due(dummy);
}

int CoalescingSystem::root_of(int walker) const {
    int r = walker;
    while (parent_[r] != r) r = parent_[r];
    return r;
}

int CoalescingSystem::root_at(int walker, double when) const {
    int r = walker;
    while (parent_[r] != r && attach_t_[r] <= when) r = parent_[r];
    return r;
}

double CoalescingSystem::position_of(int walker) const {
    const int r = root_of(walker);
    for (const auto& s : slots_)
        if (s.root == r) return s.pos;
    return circle_ ? wrap1(start_x_[walker]) : start_x_[walker];  // not yet active
}

void CoalescingSystem::merge(int surviving_slot, int dying_slot) {
    const int rs = root_of(slots_[surviving_slot].root);
    const int rd = root_of(slots_[dying_slot].root);
    if (rs == rd) return;
    parent_[rd] = rs;
    attach_t_[rd] = time_;
    events_.push_back({rd, rs, time_});
    slots_[surviving_slot].root = rs;
}

void CoalescingSystem::activate_due(Rng&) {
    while (!pending_.empty() && start_t_[pending_.front()] <= time_) {
        const int w = pending_.front();
        pending_.erase(pending_.begin());
        double x = circle_ ? wrap1(start_x_[w]) : start_x_[w];
        // exact duplicate of a live class merges on the spot
        bool merged = false;
        for (auto& s : slots_) {
            if (s.pos == x) {
                const int rs = root_of(s.root);
                parent_[w] = rs;
                attach_t_[w] = time_;
                events_.push_back({w, rs, time_});
                merged = true;
                break;
            }
        }
        if (merged) continue;
        // insert preserving (circular) spatial order
        if (slots_.empty()) {
            slots_.push_back({x, w});
            continue;
        }
        if (!circle_) {
            auto it = std::lower_bound(slots_.begin(), slots_.end(), x,
                                       [](const Slot& s, double v) { return s.pos < v; });
            slots_.insert(it, {x, w});
        } else {
            std::size_t at = slots_.size();
            for (std::size_t i = 0; i + 1 < slots_.size(); ++i) {
                const double span = wrap1(slots_[i + 1].pos - slots_[i].pos);
                const double off = wrap1(x - slots_[i].pos);
                if (off < span) {
                    at = i + 1;
                    break;
                }
            }
            slots_.insert(slots_.begin() + static_cast<std::ptrdiff_t>(at), {x, w});
        }
    }
}

void CoalescingSystem::step(double dt, Rng& rng) {
    const std::size_t n = slots_.size();
    delta_.resize(n);
    const double sd = std::sqrt(dt);
    for (std::size_t i = 0; i < n; ++i) delta_[i] = sd * rng.normal();

    // bridge-corrected crossing test per adjacent gap
    std::vector<char> merge_next(n, 0);
    if (n >= 2) {
        const std::size_t pairs = circle_ ? n : n - 1;
        for (std::size_t i = 0; i < pairs; ++i) {
            const std::size_t j = (i + 1) % n;
            const double g0 = circle_ ? wrap1(slots_[j].pos - slots_[i].pos)
                                      : slots_[j].pos - slots_[i].pos;
            const double g1 = g0 + delta_[j] - delta_[i];
            bool hit = g1 <= 0.0;
            if (!hit && g0 * g1 < 40.0 * dt) hit = rng.u01() < std::exp(-g0 * g1 / dt);
            if (hit) merge_next[i] = 1;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        slots_[i].pos += delta_[i];
        if (circle_) slots_[i].pos = wrap1(slots_[i].pos);
    }
    time_ += dt;

    if (n >= 2) {
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) any |= (merge_next[i] != 0);
        if (any) {
            for (std::size_t i = 0; i < n; ++i) {
                if (merge_next[i]) merge(static_cast<int>(i), static_cast<int>((i + 1) % n));
            }
            std::vector<Slot> kept;
            kept.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                const int r = root_of(slots_[i].root);
                bool seen = false;
                for (const auto& s : kept)
                    if (s.root == r) {
                        seen = true;
                        break;
                    }
                if (!seen) kept.push_back({slots_[i].pos, r});
            }
            slots_ = std::move(kept);
        }
    }
    activate_due(rng);
}

int PathBundle::root_at(int walker, double when) const {
    // replay parent links recorded at sampling time
    int r = walker;
    bool moved = true;
    while (moved) {
        moved = false;
        for (const auto& e : events) {
            if (e.child_root == r && e.time <= when) {
                r = e.parent_root;
                moved = true;
                break;
            }
        }
    }
    return r;
}

PathBundle sample_coalescing_bundle(const std::vector<double>& start_x,
                                    const std::vector<double>& start_t, const TimeGrid& grid,
                                    std::uint64_t seed, bool circle) {
    Rng rng(seed);
    CoalescingSystem sys(start_x, start_t, grid.t0, circle);
    PathBundle out;
    out.grid = grid;
    out.circle = circle;
    out.start_x = start_x;
    out.start_t = start_t;
    const int k = static_cast<int>(start_x.size());
    out.pos.reserve(static_cast<std::size_t>(grid.steps) + 1);
    auto capture = [&]() {
        std::vector<double> row(k);
        for (int w = 0; w < k; ++w) row[w] = sys.position_of(w);
        out.pos.push_back(std::move(row));
    };
    capture();
    for (std::int64_t i = 0; i < grid.steps; ++i) {
        sys.step(grid.dt, rng);
        capture();
    }
    out.events = sys.events();
    out.final_root.resize(k);
    for (int w = 0; w < k; ++w) out.final_root[w] = sys.root_of(w);
    return out;
}

EtaCounts eta_counts(const PathBundle& bundle, double t0, double t, const Arc& arc) {
    const auto& g = bundle.grid;
    auto index_of = [&](double when) {
        const double fi = (when - g.t0) / g.dt;
        const auto i = static_cast<std::int64_t>(std::llround(fi));
        if (i < 0 || i > g.steps || std::fabs(fi - static_cast<double>(i)) > 1e-6)
            throw std::invalid_argument("eta_counts: time off the grid");
        return i;
    };
    const auto i0 = index_of(t0);
    const auto i1 = index_of(t0 + t);
    const double t1_time = g.time_at(i1);

    EtaCounts counts;
    std::vector<int> roots;
    const int k = static_cast<int>(bundle.start_x.size());
    for (int w = 0; w < k; ++w) {
        if (bundle.start_t[w] > t0) continue;
        if (!arc.contains(CirclePos(bundle.pos[static_cast<std::size_t>(i0)][w]))) continue;
        roots.push_back(bundle.root_at(w, t1_time));
    }
    std::sort(roots.begin(), roots.end());
    counts.eta = static_cast<int>(std::unique(roots.begin(), roots.end()) - roots.begin());

    roots.clear();
    for (int w = 0; w < k; ++w) {
        if (bundle.start_t[w] > t0) continue;
        if (!arc.contains(CirclePos(bundle.pos[static_cast<std::size_t>(i1)][w]))) continue;
        roots.push_back(bundle.root_at(w, t1_time));
    }
    std::sort(roots.begin(), roots.end());
    counts.eta_hat = static_cast<int>(std::unique(roots.begin(), roots.end()) - roots.begin());
    return counts;
}

ReflectedPair sample_reflected_pair(const TimeGrid& grid, std::uint64_t seed) {
    Rng rng(seed);
    const double u1 = rng.u01();
    const double u2 = rng.u01();
    ReflectedPair out;
    out.grid = grid;
    const auto m = static_cast<std::size_t>(grid.steps) + 1;
    out.y_up.resize(m);
    out.y_down.resize(m);
    out.gap.resize(m);
    double b = 0.0, bp = 0.0;  // B and B'
    const double sd = std::sqrt(grid.dt);
    const double inv_sqrt2 = 0.70710678118654752440;
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0) {
            b += sd * rng.normal();
            bp += sd * rng.normal();
        }
        const double h = fold_reflect(u2 + 1.4142135623730951 * b, 1.0) / 2.0;
        const double mid = u1 + bp * inv_sqrt2;
        out.y_up[i] = wrap1(mid - h);
        out.y_down[i] = wrap1(mid + h);
        out.gap[i] = 2.0 * h;
    }
    return out;
}

PairMarginal reflected_pair_at(double t, Rng& rng) {
    const double u1 = rng.u01();
    const double u2 = rng.u01();
    const double b = std::sqrt(t) * rng.normal();
    const double bp = std::sqrt(t) * rng.normal();
    const double h = fold_reflect(u2 + 1.4142135623730951 * b, 1.0) / 2.0;
    const double mid = u1 + bp * 0.70710678118654752440;
    return {wrap1(mid - h), wrap1(mid + h), 2.0 * h};
}

LadderSample biinfinite_ladder(const LadderOptions& opt, std::uint64_t seed) {
    Rng rng(seed);
    LadderSample out;
    const double T = opt.window;
    const double dt = opt.dt;
    const auto n_out = static_cast<std::int64_t>(std::llround(T / dt));
    out.grid = TimeGrid{0.0, dt, n_out};

    double buffer = opt.buffer;
    for (int attempt = 0; attempt < opt.retries; ++attempt, buffer *= 2.0) {
        ++out.attempts;
        const auto m_steps = static_cast<std::int64_t>(std::llround(buffer / dt));

        // dual mesh collapse from height T+buffer down to T
        std::vector<double> mesh(static_cast<std::size_t>(opt.mesh));
        for (int i = 0; i < opt.mesh; ++i)
            mesh[static_cast<std::size_t>(i)] = (i + 0.5) / opt.mesh;
        CoalescingSystem dual(mesh, std::vector<double>(mesh.size(), 0.0), 0.0, true);
        for (std::int64_t s = 0; s < m_steps; ++s) dual.step(dt, rng);
        if (!dual.fully_coalesced()) continue;

        // single dual branch from T down to -buffer, unwrapped; index i is
        // height T - i*dt
        const auto total = static_cast<std::size_t>(m_steps + n_out) + 1;
        std::vector<double> dual_pos(total);
        dual_pos[0] = dual.position_of(0);
        const double sd = std::sqrt(dt);
        for (std::size_t i = 1; i < total; ++i) dual_pos[i] = dual_pos[i - 1] + sd * rng.normal();

        // up mesh in coordinates relative to the dual branch, heights from
        // -buffer upward; reflecting walls at 0 and 1
        std::vector<double> rel(static_cast<std::size_t>(opt.mesh));
        for (int i = 0; i < opt.mesh; ++i) rel[static_cast<std::size_t>(i)] = (i + 0.5) / opt.mesh;
        std::vector<double> rel_new;
        std::vector<double> survivor_rel(static_cast<std::size_t>(n_out) + 1, 0.0);
        bool ok = true;
        for (std::int64_t s = 0; s < m_steps + n_out; ++s) {
            // height moves from -buffer + s*dt; dual index runs backward
            const std::size_t di = total - 1 - static_cast<std::size_t>(s);
            const double d_inc = dual_pos[di - 1] - dual_pos[di];
            rel_new.resize(rel.size());
            for (std::size_t i = 0; i < rel.size(); ++i)
                rel_new[i] = rel[i] + sd * rng.normal() - d_inc;
            // coalesce neighbours (bridge on pre-fold gaps), then fold into
            // the corridor
            std::vector<char> merge_next(rel.size(), 0);
            for (std::size_t i = 0; i + 1 < rel.size(); ++i) {
                const double g0 = rel[i + 1] - rel[i];
                const double g1 = rel_new[i + 1] - rel_new[i];
                bool hit = g1 <= 0.0;
                if (!hit && g0 * g1 < 40.0 * dt) hit = rng.u01() < std::exp(-g0 * g1 / dt);
                if (hit) merge_next[i] = 1;
            }
            std::vector<double> next;
            next.reserve(rel.size());
            for (std::size_t i = 0; i < rel.size(); ++i) {
                double v = fold_reflect(rel_new[i], 1.0);
                if (!next.empty() && (merge_next[i - 1] || v <= next.back())) {
                    continue;  // merged into the left neighbour
                }
                next.push_back(v);
            }
            rel = std::move(next);
            const std::int64_t h_idx = s + 1 - m_steps;  // height = h_idx * dt
            if (h_idx >= 0) {
                if (rel.size() != 1) {
                    ok = false;
                    break;
                }
                survivor_rel[static_cast<std::size_t>(h_idx)] = rel[0];
            }
        }
        if (!ok) continue;

        out.c_up.resize(static_cast<std::size_t>(n_out) + 1);
        out.c_down.resize(static_cast<std::size_t>(n_out) + 1);
        out.gap.resize(static_cast<std::size_t>(n_out) + 1);
        for (std::int64_t i = 0; i <= n_out; ++i) {
            const std::size_t di = static_cast<std::size_t>(n_out - i);
            const double d = wrap1(dual_pos[di]);
            const double g = survivor_rel[static_cast<std::size_t>(i)];
            out.c_down[static_cast<std::size_t>(i)] = d;
            out.c_up[static_cast<std::size_t>(i)] = wrap1(d + g);
            out.gap[static_cast<std::size_t>(i)] = wrap1(1.0 - g);
        }
        return out;
    }
    out.censored = true;
    return out;
}

PairCoalescence pair_coalescence_time(double gap0, double dt, double t_cap, Rng& rng) {
    if (!(gap0 > 0.0 && gap0 < 1.0)) throw std::invalid_argument("pair gap must be in (0,1)");
    double g = gap0;
    const double sd = std::sqrt(2.0 * dt);
    PairCoalescence out;
    while (out.time < t_cap) {
        const double gn = g + sd * rng.normal();
        out.time += dt;
        if (gn <= 0.0) {
            out.no_back_coal = true;
            return out;
        }
        if (gn >= 1.0) return out;
        const double a0 = g * gn, a1 = (1.0 - g) * (1.0 - gn);
        if (a0 < 20.0 * dt && rng.u01() < std::exp(-a0 / dt)) {
            out.no_back_coal = true;
            return out;
        }
        if (a1 < 20.0 * dt && rng.u01() < std::exp(-a1 / dt)) return out;
        g = gn;
    }
    out.censored = true;
    return out;
}

}  // namespace cylweb::web
