#pragma once

#include <array>
#include <compare>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

// Oriented link diagrams as embedded signed 4-valent planar multigraphs.
//
// Darts are half-edge ids. Each crossing lists its four darts in
// counterclockwise rotation order; each edge pairs a tail dart (where the
// strand leaves a crossing) with a head dart (where it arrives). Faces are
// orbits of d -> sigma_inv(alpha(d)); the face of a dart lies on the left
// of the ray the dart points along. Crossingless components are explicit
// free-loop records. A placement forest assigns every connected piece and
// free loop to a face of the composite arrangement, with a distinguished
// unbounded outer face.

namespace reidesort {

using DartId = int;
using CrossingId = int;
using EdgeId = int;
using LoopId = int;

struct DiagramError : std::runtime_error {
    explicit DiagramError(const std::string& w) : std::runtime_error(w) {}
};
struct MoveError : std::runtime_error {
    explicit MoveError(const std::string& w) : std::runtime_error(w) {}
};
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& w) : std::runtime_error(w) {}
};
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& w) : std::runtime_error(w) {}
};

// over == 0: the passage through slots (0,2) runs on top; over == 1: (1,3).
struct Crossing {
    CrossingId id = 0;
    std::array<DartId, 4> rot{0, 0, 0, 0};
    int over = 0;
};

struct Edge {
    EdgeId id = 0;
    DartId tail = 0;
    DartId head = 0;
};

// A face used as a container: the outer face, a local face of a piece
// (named by a dart of its boundary orbit), or a free loop's interior.
struct FaceRef {
    enum Kind { Outer = 0, Dart = 1, LoopInside = 2 };
    Kind kind = Outer;
    int id = 0;

    static FaceRef outer() { return {}; }
    static FaceRef dart(DartId d) { return {Dart, d}; }
    static FaceRef loop_inside(LoopId l) { return {LoopInside, l}; }

    friend auto operator<=>(const FaceRef&, const FaceRef&) = default;
};

std::string to_string(const FaceRef& f);

struct FreeLoop {
    LoopId id = 0;
    bool ccw = true;
    FaceRef container = FaceRef::outer();
};

// One per connected piece: `external` is a dart on the local face orbit
// bordering the region around the piece; `container` is the face of the
// rest of the diagram the piece sits in. Containers always point at the
// owning face of a region: a bounded local face of the parent piece, a
// loop interior, or the outer face - never another piece's external orbit.
struct Placement {
    DartId external = 0;
    FaceRef container = FaceRef::outer();

    friend auto operator<=>(const Placement&, const Placement&) = default;
};

struct Diagram {
    std::map<CrossingId, Crossing> crossings;
    std::map<EdgeId, Edge> edges;
    std::map<LoopId, FreeLoop> loops;
    std::vector<Placement> placements;

    DartId next_dart = 1;
    CrossingId next_crossing = 1;
    EdgeId next_edge = 1;
    LoopId next_loop = 1;

    DartId fresh_dart() { return next_dart++; }
    CrossingId fresh_crossing() { return next_crossing++; }
    EdgeId fresh_edge() { return next_edge++; }
    LoopId fresh_loop() { return next_loop++; }

    bool empty() const { return crossings.empty() && loops.empty(); }
    void bump_counters();  // raise next_* past every id in use
};

// A link component: a closed strand through crossings keyed by its minimal
// dart, or a free loop keyed by loop id.
struct CompKey {
    bool is_loop = false;
    int id = 0;

    static CompKey strand(DartId d) { return {false, d}; }
    static CompKey loop(LoopId l) { return {true, l}; }

    friend auto operator<=>(const CompKey&, const CompKey&) = default;
};

std::string to_string(const CompKey& c);

struct DartRec {
    CrossingId crossing = 0;
    int slot = 0;
    EdgeId edge = 0;
    bool is_tail = false;
};

// Derived combinatorial structure. Build from a valid diagram, query only;
// stale after any mutation.
struct Topo {
    const Diagram* dia = nullptr;
    std::map<DartId, DartRec> darts;

    std::map<DartId, DartId> face_key;                  // dart -> min dart of its face orbit
    std::map<DartId, std::vector<DartId>> face_orbits;  // key -> boundary walk starting at key

    std::map<CrossingId, DartId> piece_key;             // crossing -> min dart of its piece
    std::map<DartId, std::vector<CrossingId>> pieces;   // piece key -> member crossings (sorted)
    std::map<DartId, DartId> piece_external;            // piece key -> external face key
    std::map<DartId, FaceRef> piece_container;          // piece key -> container

    std::map<DartId, CompKey> comp_of;                  // dart -> component
    std::vector<CompKey> components;                    // sorted

    // Composite regions: every face node (outer, local orbits, loop
    // interiors) mapped to its region representative (minimal member).
    std::map<FaceRef, FaceRef> region;
    std::map<FaceRef, std::vector<DartId>> region_pieces;  // region rep -> piece keys
    std::map<FaceRef, std::vector<LoopId>> region_loops;   // region rep -> loop ids

    explicit Topo(const Diagram& d);

    const DartRec& rec(DartId d) const;
    DartId alpha(DartId d) const;
    DartId sigma(DartId d) const;
    DartId sigma_inv(DartId d) const;
    DartId opposite(DartId d) const;
    DartId face_next(DartId d) const { return sigma_inv(alpha(d)); }
    bool over(DartId d) const;

    FaceRef face_node(DartId d) const { return FaceRef::dart(face_key.at(d)); }
    FaceRef region_of(FaceRef node) const;
    bool same_region(FaceRef a, FaceRef b) const { return region_of(a) == region_of(b); }
    bool region_is_outer(FaceRef node) const { return region_of(node) == FaceRef::outer(); }
};

struct Issue {
    std::string code;
    std::string message;
};

struct Validation {
    bool ok = true;
    std::vector<Issue> issues;
    void fail(const std::string& code, const std::string& message);
    std::string summary() const;
};

Validation validate(const Diagram& d);
void require_valid(const Diagram& d);  // throws DiagramError on first failure

std::vector<CompKey> components(const Diagram& d);
int winding_number(const Diagram& d, CompKey c);
int crossing_sign(const Topo& t, const Crossing& cr);
int framing(const Diagram& d, CompKey c);
int writhe(const Diagram& d);
Diagram mirror(const Diagram& d);

// Closed-walk side classification. The walk visits crossings via
// (entry, exit) dart pairs: entry is the head dart where the walk arrives,
// exit the tail dart where it leaves; consecutive steps satisfy
// alpha(exit_i) == entry_{i+1}. Every edge off the walk and every free
// loop is treated as crossable when merging regions, so exactly two
// classes remain: the walk's left side and its right side.
struct WalkStep {
    DartId entry = 0;
    DartId exit = 0;
};

struct SideSplit {
    FaceRef left, right;        // class representatives
    FaceRef outer_side;         // class containing the outer face
    std::map<FaceRef, FaceRef> cls;
    bool ccw() const { return outer_side != left; }
    FaceRef side_of(FaceRef node) const;
};

SideSplit side_split(const Diagram& d, const Topo& t, const std::vector<WalkStep>& walk);

// True iff the closed strand walk (given in traversal order) bounds its
// left side away from the outer face.
bool walk_is_ccw(const Diagram& d, const Topo& t, const std::vector<WalkStep>& walk);

struct Canonical {
    Diagram diagram;
    std::map<DartId, DartId> dart_map;  // old -> new
    std::map<CrossingId, CrossingId> crossing_map;
    std::map<EdgeId, EdgeId> edge_map;
    std::map<LoopId, LoopId> loop_map;
};

Canonical canonicalize(const Diagram& d);
std::string canonical_code(const Diagram& d);
bool isomorphic(const Diagram& a, const Diagram& b);

}  // namespace reidesort
