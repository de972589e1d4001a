#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "reidesort/moves.hpp"

// Generators and independent oracles for exercising the diagram and move
// layers: seeded random diagrams and traces, a polyline turning-number
// oracle, a backtracking isomorphism search, and bounded breadth-first
// search through move space.

namespace reidesort::testkit {

// Reproducible: equal configs give bit-identical outputs. Up moves are
// skipped while they would push the crossing count past max_crossings;
// kinds with zero weight are never picked.
struct GenConfig {
    std::uint64_t seed = 1;
    int circles = 1;  // crossingless loops the generator starts from
    int max_crossings = 6;
    int moves_lo = 0, moves_hi = 12;  // applications drawn uniformly in range
    double w_r1up = 1, w_r2up = 1, w_r3 = 1;
    double w_r1down = 0.5, w_r2down = 0.5;
};

// REIDESORT_SEED environment override for property runs
std::uint64_t seed_from_env(std::uint64_t fallback);

Diagram gen_diagram(const GenConfig& cfg);

// random legal trace on d; omega23_only restricts the mix to R2Up, R2Down
// and R3. Stops early only when no weighted kind has a legal site.
MoveTrace gen_trace(const Diagram& d, const GenConfig& cfg, bool omega23_only);

// net anticlockwise turning of a closed polyline, in full turns; throws
// DiagramError on degenerate input or a total off a whole number of turns
// by more than 1e-6
int geometric_winding(const std::vector<std::array<double, 2>>& poly);

// dart-bijection search preserving rotation, edge orientation, over
// passages, external faces, and the placement forest; decides the same
// relation as canonical-code equality by an independent route
bool brute_isomorphic(const Diagram& a, const Diagram& b);

// shortest trace of R2Up/R2Down/R3 moves turning a into a diagram
// isomorphic to b, exploring only diagrams with at most `budget` crossings
// (the endpoints are exempt); nullopt when the bounded space holds no
// bridge. Per-component winding and framing must agree up to reordering
// (MoveError otherwise).
std::optional<MoveTrace> search_bridge(const Diagram& a, const Diagram& b, int budget);

// length of a shortest path from a to b over the given kinds within the
// crossing budget
std::optional<int> min_moves(const Diagram& a, const Diagram& b,
                             const std::set<MoveKind>& kinds, int budget);

}  // namespace reidesort::testkit
