#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "cylweb/rng.hpp"

namespace cylweb::lattice {

enum class Direction { Up, Down };

/// The +/-1 environment attached to the primal lattice. Values are derived
/// lazily from (seed, site), so paths can be extended without storing a
/// window; h_lo/h_hi and the cap only document the intended region.
class RademacherField {
public:
    RademacherField(int n, std::int64_t h_lo, std::int64_t h_hi, std::uint64_t seed,
                    bool planar = false);

    int n() const { return n_; }
    int circumference() const { return 2 * n_; }
    bool planar() const { return planar_; }
    std::uint64_t seed() const { return seed_; }
    std::int64_t h_lo() const { return h_lo_; }
    std::int64_t h_hi() const { return h_hi_; }

    /// Rademacher value at the primal site (x, t). Throws on dual parity.
    int sign(std::int64_t x, std::int64_t t) const;

    std::int64_t reduce(std::int64_t x) const;

private:
    int n_;
    std::int64_t h_lo_, h_hi_;
    std::uint64_t seed_;
    bool planar_;
};

RademacherField sample_field(int n, std::int64_t h_lo, std::int64_t h_hi, std::uint64_t seed);

inline bool is_primal(std::int64_t x, std::int64_t t) { return (((x - t) % 2) + 2) % 2 == 0; }

struct LatticePath {
    std::int64_t start_x = 0;
    std::int64_t start_t = 0;
    Direction direction = Direction::Up;
    /// positions[i] is the walker position at height start_t + i (Up) or
    /// start_t - i (Down).
    std::vector<std::int64_t> positions;

    std::int64_t height_at(std::size_t i) const {
        return direction == Direction::Up ? start_t + static_cast<std::int64_t>(i)
                                          : start_t - static_cast<std::int64_t>(i);
    }
};

/// Follows the walk recursion through the shared field. Up walks read the
/// sign at their current site; down walks read the sign at the primal site
/// directly below their next position, which keeps them from ever crossing
/// an up walk.
LatticePath trace_path(const RademacherField& field, std::int64_t start_x, std::int64_t start_t,
                       Direction direction, std::int64_t stop_height);

struct CoalesceResult {
    std::int64_t duration = 0;
    bool censored = false;
};

/// Duration until all walkers started on the primal slice at height h occupy
/// a single site. Censored (not thrown) when the step cap is reached.
CoalesceResult coalesce_all(const RademacherField& field, std::int64_t h, std::int64_t step_cap);

struct RescaledPath {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> x;  // positions in [0,1)
};

/// Diffusive rescaling: positions divided by 2n, heights by 4n^2.
RescaledPath rescale_path(const LatticePath& path, int n);

struct PairEntry {
    std::vector<std::int64_t> path_up;    // heights h1..h2
    std::vector<std::int64_t> path_down;  // heights h1..h2 (index i = height h1+i)
    int contacts = 0;                     // Nb
    std::uint64_t count = 0;              // brute-force numerator over 2^{#sites}
    int closed_exponent = 0;              // closed-form probability = 2^{-closed_exponent}
};

struct PairLaw {
    int n = 0;
    std::int64_t h1 = 0, h2 = 0;
    int sites_log2 = 0;  // brute-force denominator = 2^{sites_log2}
    std::vector<PairEntry> entries;

    /// exact total variation x 2^{sites_log2}: zero iff brute force equals
    /// the closed form on every pair
    bool exact_match() const;
    bool sums_to_one() const;
};

/// Exhausts every Rademacher assignment on the window and tallies the joint
/// law of (up path from (x1,h1), down path from (x2,h2)) on [h1,h2].
/// The closed-form exponent counts the field values actually pinned by a
/// pair: 2(h2-h1) - Nb in general; at circumference 2 both signs give the
/// same step, so no value is pinned and every admissible pair has
/// probability 1.
PairLaw enumerate_pair_law(int n, std::int64_t x1, std::int64_t x2, std::int64_t h1,
                           std::int64_t h2, int max_sites = 24);

struct KernelMove {
    std::int64_t a = 0, b = 0;
    std::uint32_t prob_num = 0, prob_den = 0;
};

/// Exact transition row of the paired-walk kernel from state (a, a').
/// Requires circumference >= 4; positions are taken mod 2n.
std::vector<KernelMove> kernel_row(int n, std::int64_t a, std::int64_t a_dual);

/// One draw from the kernel row.
std::pair<std::int64_t, std::int64_t> kernel_step(int n, std::int64_t a, std::int64_t a_dual,
                                                  Rng& rng);

struct ReflectedWalk {
    std::vector<std::int64_t> angle;  // A(i), odd values in [1, 2n-1]
    std::vector<std::int64_t> m1;     // companion walk
};

/// Simple walk reflected at 0 and 2n; the angle process reads the walk at
/// even indices and the companion's increments are the negated odd-index
/// increments.
ReflectedWalk reflected_walk(int n, std::int64_t a0, std::int64_t m0, std::int64_t steps,
                             Rng& rng);

struct BiInfiniteSample {
    std::int64_t h1 = 0, h2 = 0;
    std::vector<std::int64_t> c_up;    // positions at heights h1..h2
    std::vector<std::int64_t> c_down;  // positions at heights h1..h2
    bool censored = false;
};

/// Extracts the unique two-sided branch of the web and of its dual on
/// [h1,h2] from a shared field. Up walkers from the slice at h2 locate the
/// height where everything above has merged; down walkers seeded there
/// collapse into the dual branch before h2 (and symmetrically below h1 for
/// the up branch). Retries with a doubled step cap before censoring.
BiInfiniteSample extract_biinfinite(int n, std::uint64_t seed, std::int64_t h1, std::int64_t h2,
                                    std::int64_t step_cap = 0, int retries = 3);

/// Steps until two up walkers started at (x1,h) and (x2,h) meet.
CoalesceResult pair_meet_steps(const RademacherField& field, std::int64_t x1, std::int64_t x2,
                               std::int64_t h, std::int64_t step_cap);

}  // namespace cylweb::lattice
