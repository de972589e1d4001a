#pragma once

#include "reidesort/moves.hpp"

#include <cstddef>
#include <set>

// Tails and lollipops: auxiliary fingers grown onto a diagram with type-two
// moves, tracked in a ledger so later passes can transport, audit, and tear
// them down again.
//
// A core path starts on one side of an edge and crosses a sequence of edges,
// ending inside a face. Realizing it as a tail doubles the path into a thin
// finger: one push per crossed edge, two new crossings each. A lollipop
// additionally wraps the finger tip around a chosen crossing: two corner
// pushes and one slide, leaving a small circle through all four strands at
// that crossing.
//
// Serialized form, one request per line:
//
//   tail start=d4:left cross=e2:u,e7:u face=d9
//   lollipop start=d8:right face=d2 v=c3
//
// `start` names an edge by one of its darts plus the flank the finger grows
// from (left = the face left of the strand direction). `cross` lists the
// edges the path crosses in order, each under (:u) or over (:o); it is
// omitted when the path stays in its starting face. `face` is the face key
// of the destination in the diagram the request addresses, and `v` the
// encircled crossing.

namespace reidesort {

struct CorePath {
    struct Hop {
        EdgeId edge = 0;
        bool over = false;
    };

    DartId start_dart = 0;    // names the root edge
    bool start_left = true;   // flank the finger grows from
    std::vector<Hop> hops;    // edges crossed, in order
    DartId terminal = 0;      // face key of the destination face
};

struct DecorationRequest {
    bool lollipop = false;
    CorePath path;
    CrossingId vertex = 0;  // lollipop only
};

std::string serialize_decoration(const DecorationRequest& r);
DecorationRequest parse_decoration(const std::string& line);

struct Decoration {
    enum class Kind { Tail, Lollipop };

    Kind kind = Kind::Tail;
    int order = 0;              // position in the ledger at creation
    CrossingId vertex = 0;      // lollipop: the encircled crossing

    // Live ids in the current diagram, transported across later moves.
    std::set<CrossingId> crossings;         // all crossings this decoration added
    std::set<EdgeId> tail_edges;            // finger strand and cap pieces
    std::set<EdgeId> circle_edges;          // lollipop: the circle through v's strands
    std::set<CrossingId> circle_crossings;  // lollipop: the four circle crossings

    std::vector<Move> moves;  // realization, replayable from the base diagram
};

// Creation-ordered record of the decorations living in a diagram. Every move
// applied after a decoration is created must be reported to transport() so
// edge splits and merges keep the tracked id sets current.
struct DecorationLedger {
    std::vector<Decoration> decorations;

    void transport(const ApplyResult& ar);
    std::map<CrossingId, std::vector<std::size_t>> circles_by_vertex() const;
    std::set<EdgeId> circle_edges_except(CrossingId v) const;
};

struct DecorateResult {
    Diagram diagram;
    std::vector<Move> moves;
    Decoration decoration;  // also appended to the ledger
};

// Realizes p as a tail: one type-two push per hop, under or over as the hop
// says. The path must be walkable in d's region graph and end in the face
// keyed p.terminal; otherwise MoveError. k hops cost k moves and 2k
// crossings; an empty path costs nothing.
DecorateResult add_tail(const Diagram& d, const CorePath& p, DecorationLedger& ledger);

// Tail plus a circle around v: the destination face must touch v, and the
// path may not cross circle edges of lollipops at other crossings. Costs
// k + 3 moves (two corner pushes and one slide beyond the tail) and
// 2k + 4 crossings.
DecorateResult add_lollipop(const Diagram& d, const CorePath& p, CrossingId v,
                            DecorationLedger& ledger);

// Shortest route from one edge flank to the face keyed to_face, crossing no
// edge in avoid. Ties break toward the lexicographically smallest edge id
// sequence. Hops default to under; MoveError when no route exists.
CorePath route_path(const Diagram& d, DartId from_dart, bool from_left, DartId to_face,
                    const std::set<EdgeId>& avoid = {});

struct TeardownResult {
    Diagram diagram;
    std::vector<Move> moves;  // the type-two removals, in order
};

// Removes the most recent decoration using only type-two removals, popping
// bigons both of whose crossings belong to it. Requires the decoration's
// strands to be clear: a freshly built lollipop is not (its circle is held
// by the slide), but a plain tail always is. Throws MoveError when the
// ledger is empty or no clearing bigon remains; the ledger is untouched on
// failure.
TeardownResult teardown_last(const Diagram& d, DecorationLedger& ledger);

}  // namespace reidesort
