#pragma once

#include "reidesort/diagram.hpp"

// Reidemeister moves as local surgeries with legality checks, inversion,
// trace replay, enumeration, and a line-based move-script format.
//
//   r1up d=d4 at=head side=left sign=+     kink an edge
//   r1up loop=L3 side=left sign=+          kink a free loop
//   r1down f=d7                            remove the monogon keyed d7
//   r2up a=d3 b=d11 over=a                 push a's edge over/under b's
//   r2up a=L2 b=d11 over=b                 anchors may be free loops
//   r2up a=L2 b=L2 over=a side=in          a loop pushed over itself
//   r2down f=d5                            pull apart the bigon keyed d5
//   r3 f=d9                                slide across the triangle keyed d9
//
// R2Up anchor darts select an edge side: a tail dart names its edge's left
// side (the face left of the strand direction), a head dart the right side.
// The two anchors must face a common region. For loop anchors the side
// facing the common region is inferred. A trace file is a KDF block, a line
// `---`, then move lines.

namespace reidesort {

enum class MoveKind { R1Up, R1Down, R2Up, R2Down, R3 };

std::string to_string(MoveKind k);

struct Move {
    MoveKind kind = MoveKind::R1Up;

    // R1Up: edge anchor (any dart of the edge) or free-loop anchor
    DartId dart = 0;
    LoopId loop = 0;
    bool at_head = true;  // position along the edge; combinatorially inert
    bool left = true;     // kink side relative to the strand direction
    int sign = 1;         // +1 or -1: framing delta

    // R2Up: each anchor is a dart (edge side) or a free loop
    DartId a = 0, b = 0;
    LoopId a_loop = 0, b_loop = 0;
    bool over_a = true;
    bool push_inside = false;  // loop self push only: poke into the interior

    // R1Down / R2Down / R3: face key of the monogon / bigon / triangle
    DartId face = 0;

    static Move r1up(DartId edge_dart, bool left, int sign) {
        Move m;
        m.kind = MoveKind::R1Up;
        m.dart = edge_dart;
        m.left = left;
        m.sign = sign;
        return m;
    }
    static Move r1up_loop(LoopId l, bool left, int sign) {
        Move m;
        m.kind = MoveKind::R1Up;
        m.loop = l;
        m.left = left;
        m.sign = sign;
        return m;
    }
    static Move r1down(DartId face) {
        Move m;
        m.kind = MoveKind::R1Down;
        m.face = face;
        return m;
    }
    static Move r2up(DartId a, DartId b, bool over_a) {
        Move m;
        m.kind = MoveKind::R2Up;
        m.a = a;
        m.b = b;
        m.over_a = over_a;
        return m;
    }
    static Move r2up_loops(LoopId a_loop, LoopId b_loop, bool over_a) {
        Move m;
        m.kind = MoveKind::R2Up;
        m.a_loop = a_loop;
        m.b_loop = b_loop;
        m.over_a = over_a;
        return m;
    }
    static Move r2up_self(LoopId l, bool inside, bool over_a) {
        Move m;
        m.kind = MoveKind::R2Up;
        m.a_loop = l;
        m.b_loop = l;
        m.push_inside = inside;
        m.over_a = over_a;
        return m;
    }
    static Move r2down(DartId face) {
        Move m;
        m.kind = MoveKind::R2Down;
        m.face = face;
        return m;
    }
    static Move r3(DartId face) {
        Move m;
        m.kind = MoveKind::R3;
        m.face = face;
        return m;
    }
};

struct LegalCheck {
    bool ok = true;
    std::string reason;
};

// Everything apply() did, for decoration bookkeeping and transport.
struct ApplyResult {
    Diagram diagram;
    std::vector<DartId> new_darts;          // allocation order
    std::vector<CrossingId> new_crossings;  // allocation order
    std::vector<EdgeId> new_edges;
    std::vector<LoopId> new_loops;
    std::vector<EdgeId> removed_edges;
    std::vector<CrossingId> removed_crossings;
    std::vector<LoopId> removed_loops;
    std::map<EdgeId, std::vector<EdgeId>> edge_splits;  // old -> pieces, tail to head
    std::map<EdgeId, std::vector<EdgeId>> edge_merges;  // new -> consumed, tail to head
    std::map<LoopId, std::vector<EdgeId>> loop_births;  // new loop -> consumed edges
    DartId created_face = 0;  // monogon, bigon, or image triangle key
    FaceRef vacated_region;   // down moves: post owner of the dissolved region
    std::map<CompKey, CompKey> comp_map;  // every pre component -> post key
};

LegalCheck legal(const Diagram& d, const Move& m);

// throws MoveError when illegal; validates its output unless check == false
ApplyResult apply(const Diagram& d, const Move& m, bool check = true);

// the move that undoes m, anchored in apply(d, m).diagram
Move invert(const Diagram& d, const Move& m);

struct MoveTrace {
    Diagram initial;
    std::vector<Move> moves;
};

struct ReplayReport {
    bool ok = true;
    size_t fail_index = 0;  // 1-based index of the first illegal move
    std::string reason;
    std::vector<Diagram> stages;  // initial plus one per applied move
};

ReplayReport replay(const MoveTrace& t);
ReplayReport validate_trace(const MoveTrace& t);  // same, without keeping stages

// complete, duplicate-free list of legal moves of the requested kinds;
// R2Up is bounded to distinct (edge side or loop, edge side or loop, over)
// triples with both anchors on a common region
std::vector<Move> enumerate_moves(const Diagram& d, const std::set<MoveKind>& kinds);

std::string serialize_move(const Move& m);
Move parse_move(const std::string& line);

std::string serialize_trace(const MoveTrace& t);
MoveTrace parse_trace(const std::string& text);

}  // namespace reidesort
