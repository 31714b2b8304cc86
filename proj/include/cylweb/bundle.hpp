#pragma once

#include <cstdint>
#include <vector>

#include "cylweb/circle.hpp"
#include "cylweb/rng.hpp"

namespace cylweb::web {

struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    std::int64_t steps = 0;

    double time_at(std::int64_t i) const { return t0 + dt * static_cast<double>(i); }
    double t_end() const { return time_at(steps); }
};

struct MergeEvent {
    int child_root = -1;   // root that got absorbed
    int parent_root = -1;  // surviving root
    double time = 0.0;
};

/// Coalescing walkers on the circle (or the line in planar mode). Euler
/// steps with a Brownian-bridge first-crossing test on every adjacent gap,
/// so pair coalescence times are O(dt)-accurate in distribution. Walkers
/// with a later start time activate when the clock reaches them.
class CoalescingSystem {
public:
    CoalescingSystem(const std::vector<double>& start_x, const std::vector<double>& start_t,
                     double t0, bool circle);

    void step(double dt, Rng& rng);

    double time() const { return time_; }
    int walker_count() const { return static_cast<int>(parent_.size()); }
    int live_count() const { return static_cast<int>(slots_.size()); }
    bool fully_coalesced() const { return pending_.empty() && slots_.size() <= 1; }

    /// Current root of a walker (ancestry at the current time).
    int root_of(int walker) const;
    /// Root of a walker at a past time.
    int root_at(int walker, double when) const;
    /// Current position of the walker's class. Walkers not yet active sit at
    /// their start position.
    double position_of(int walker) const;

    const std::vector<MergeEvent>& events() const { return events_; }

private:
    struct Slot {
        double pos;
        int root;
    };
    void activate_due(Rng& rng);
    void merge(int surviving_slot, int dying_slot);

    bool circle_;
    double time_;
    std::vector<double> start_x_, start_t_;
    std::vector<int> parent_;        // union-find with attach times
    std::vector<double> attach_t_;
    std::vector<MergeEvent> events_;
    std::vector<Slot> slots_;        // live classes in (circular) spatial order
    std::vector<int> pending_;       // walker ids not yet active, sorted by start time
    std::vector<double> delta_;      // scratch
};

struct PathBundle {
    TimeGrid grid;
    bool circle = true;
    std::vector<double> start_x;
    std::vector<double> start_t;
    /// pos[i][w]: position of walker w's class at grid time i.
    std::vector<std::vector<double>> pos;
    std::vector<MergeEvent> events;
    std::vector<int> final_root;

    int root_at(int walker, double when) const;
};

/// Samples the whole bundle and captures every grid time.
PathBundle sample_coalescing_bundle(const std::vector<double>& start_x,
                                    const std::vector<double>& start_t, const TimeGrid& grid,
                                    std::uint64_t seed, bool circle = true);

struct EtaCounts {
    int eta = 0;
    int eta_hat = 0;
};

/// eta: distinct classes at t0+t among walkers whose class position at t0
/// lies in the arc. eta_hat: distinct classes with position inside the arc
/// at t0+t among walkers born at or before t0.
EtaCounts eta_counts(const PathBundle& bundle, double t0, double t, const Arc& arc);

struct ReflectedPair {
    TimeGrid grid;
    std::vector<double> y_up;
    std::vector<double> y_down;
    std::vector<double> gap;  // ccw arc y_up -> y_down, equals the folded walk
};

/// The two-sided pair: Y_up = U1 + B'/sqrt(2) - H, Y_down = U1 + B'/sqrt(2) + H
/// (mod 1), H = fold(U2 + sqrt(2) B)/2. Exact in law at the grid times.
ReflectedPair sample_reflected_pair(const TimeGrid& grid, std::uint64_t seed);

struct PairMarginal {
    double y_up;
    double y_down;
    double gap;
};
/// Single-time marginal of the pair law (same construction, one step).
PairMarginal reflected_pair_at(double t, Rng& rng);

struct LadderSample {
    TimeGrid grid;
    std::vector<double> c_up;
    std::vector<double> c_down;
    std::vector<double> gap;  // ccw arc c_up -> c_down
    bool censored = false;
    int attempts = 0;
};

struct LadderOptions {
    double window = 1.0;    // reported interval [0, window]
    double dt = 5e-4;
    double buffer = 2.0;    // initial equilibration margin above/below
    int mesh = 32;          // walkers seeding each slice mesh
    int retries = 3;
};

/// Approximates the two-sided branch pair on [0, window]: the dual branch is
/// the collapse of a mesh started above the window, the up branch is the
/// survivor of a mesh started below it, kept on the correct side of the dual
/// branch by per-step folding (exact reflection for a frozen barrier).
LadderSample biinfinite_ladder(const LadderOptions& opt, std::uint64_t seed);

/// Coalescence time of a two-walker bundle at the given starting gap,
/// simulated with the bridge-corrected gap process; censored at t_cap.
/// no_back_coal records whether the merge happened without the gap wrapping
/// (absorption at 0 rather than 1); logged only, never asserted.
struct PairCoalescence {
    double time = 0.0;
    bool censored = false;
    bool no_back_coal = false;
};
PairCoalescence pair_coalescence_time(double gap0, double dt, double t_cap, Rng& rng);

}  // namespace cylweb::web
