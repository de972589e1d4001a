#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "reidesort/diagram.hpp"
#include "reidesort/kdf.hpp"
#include "reidesort/moves.hpp"

using namespace reidesort;

namespace {

Diagram trefoil() {
    // frozen output of tests/oracles/trefoil_from_immersion.py
    Diagram d;
    d.crossings[1] = {1, {1, 7, 2, 8}, 0};
    d.crossings[2] = {2, {3, 10, 4, 9}, 1};
    d.crossings[3] = {3, {5, 11, 6, 12}, 0};
    d.edges[1] = {1, 2, 3};
    d.edges[2] = {2, 4, 5};
    d.edges[3] = {3, 6, 7};
    d.edges[4] = {4, 8, 9};
    d.edges[5] = {5, 10, 11};
    d.edges[6] = {6, 12, 1};
    d.placements.push_back({3, FaceRef::outer()});
    d.bump_counters();
    return d;
}

// one positive kink; faces are the lobes {1} and {3} and the middle {2,4}
Diagram kink(DartId external) {
    Diagram d;
    d.crossings[1] = {1, {3, 4, 1, 2}, 1};
    d.edges[1] = {1, 2, 1};
    d.edges[2] = {2, 3, 4};
    d.placements.push_back({external, FaceRef::outer()});
    d.bump_counters();
    return d;
}

Diagram circle(bool ccw) {
    Diagram d;
    d.loops[1] = {1, ccw, FaceRef::outer()};
    d.bump_counters();
    return d;
}

bool iso(const Diagram& a, const Diagram& b) {
    return canonical_kdf(a) == canonical_kdf(b);
}

// apply m, then its inverse, and land back on an isomorphic diagram
void roundtrip(const Diagram& d, const Move& m) {
    CAPTURE(serialize_move(m));
    Move inv = invert(d, m);
    CAPTURE(serialize_move(inv));
    ApplyResult ar = apply(d, m);
    REQUIRE(validate(ar.diagram).ok);
    ApplyResult back = apply(ar.diagram, inv);
    REQUIRE(validate(back.diagram).ok);
    REQUIRE(iso(back.diagram, d));
}

}  // namespace

TEST_CASE("r1up kinks a circle four ways") {
    Diagram c = circle(true);
    auto moves = enumerate_moves(c, {MoveKind::R1Up});
    REQUIRE(moves.size() == 4);
    for (const Move& m : moves) {
        ApplyResult ar = apply(c, m);
        CHECK(validate(ar.diagram).ok);
        CHECK(ar.diagram.loops.empty());
        CHECK(ar.new_crossings.size() == 1);
        CHECK(writhe(ar.diagram) == m.sign);
        roundtrip(c, m);
    }
    Diagram cw = circle(false);
    for (const Move& m : enumerate_moves(cw, {MoveKind::R1Up})) roundtrip(cw, m);
}

TEST_CASE("r2up pushes a circle over itself four ways") {
    Diagram c = circle(true);
    auto moves = enumerate_moves(c, {MoveKind::R2Up});
    REQUIRE(moves.size() == 4);
    for (const Move& m : moves) {
        ApplyResult ar = apply(c, m);
        CHECK(validate(ar.diagram).ok);
        CHECK(ar.diagram.crossings.size() == 2);
        CHECK(writhe(ar.diagram) == 0);
        roundtrip(c, m);
    }
    Diagram cw = circle(false);
    for (const Move& m : enumerate_moves(cw, {MoveKind::R2Up})) roundtrip(cw, m);
}

TEST_CASE("r1down unwinds a kink to a circle") {
    for (DartId ext : {1, 2, 3}) {
        CAPTURE(ext);
        Diagram k = kink(ext);
        auto moves = enumerate_moves(k, {MoveKind::R1Down});
        // the lobe showing to the outer face cannot be swept
        size_t want = ext == 2 ? 2 : 1;
        REQUIRE(moves.size() == want);
        for (const Move& m : moves) {
            CHECK(m.face != ext);
            ApplyResult ar = apply(k, m);
            CHECK(validate(ar.diagram).ok);
            CHECK(ar.diagram.crossings.empty());
            CHECK(ar.new_loops.size() == 1);
            roundtrip(k, m);
        }
    }
}

TEST_CASE("r1down refuses external and occupied lobes") {
    Diagram k = kink(1);
    LegalCheck c = legal(k, Move::r1down(1));
    CHECK(!c.ok);
    CHECK(c.reason == "face is the piece's external face");
    CHECK_THROWS_AS(apply(k, Move::r1down(1)), MoveError);

    LoopId l = k.fresh_loop();
    k.loops[l] = {l, true, FaceRef::dart(3)};
    c = legal(k, Move::r1down(3));
    CHECK(!c.ok);
    CHECK(c.reason == "a free loop floats inside the face");

    c = legal(k, Move::r1down(2));
    CHECK(!c.ok);
    CHECK(c.reason == "face is not a monogon");
}

TEST_CASE("r1up writes one crossing of the requested sign onto each trefoil edge") {
    Diagram t = trefoil();
    CompKey c0 = components(t).front();
    int w0 = winding_number(t, c0), f0 = framing(t, c0);
    int n = 0;
    for (const Move& m : enumerate_moves(t, {MoveKind::R1Up})) {
        ApplyResult ar = apply(t, m);
        CHECK(validate(ar.diagram).ok);
        CHECK(writhe(ar.diagram) == writhe(t) + m.sign);
        CompKey c1 = ar.comp_map.at(c0);
        CHECK(framing(ar.diagram, c1) - f0 == m.sign);
        CHECK(winding_number(ar.diagram, c1) - w0 == (m.left ? 1 : -1));
        roundtrip(t, m);
        ++n;
    }
    CHECK(n == 24);  // 6 edges x side x sign
}

TEST_CASE("r2up leaves writhe, framing and winding alone") {
    Diagram t = trefoil();
    auto moves = enumerate_moves(t, {MoveKind::R2Up});
    REQUIRE(moves.size() == 42);
    CompKey c0 = components(t).front();
    int w0 = winding_number(t, c0), f0 = framing(t, c0);
    for (const Move& m : moves) {
        ApplyResult ar = apply(t, m);
        CHECK(validate(ar.diagram).ok);
        CHECK(writhe(ar.diagram) == writhe(t));
        CompKey c1 = ar.comp_map.at(c0);
        CHECK(framing(ar.diagram, c1) == f0);
        CHECK(winding_number(ar.diagram, c1) == w0);
        roundtrip(t, m);
    }
}

TEST_CASE("r3 slides a strand across a crossing and undoes itself") {
    // the alternating trefoil has no coherent triangle; pushing a strand
    // over a neighbor first always makes some
    Diagram t = trefoil();
    REQUIRE(enumerate_moves(t, {MoveKind::R3}).empty());
    int sites = 0;
    for (const Move& up : enumerate_moves(t, {MoveKind::R2Up})) {
        ApplyResult ar = apply(t, up);
        CompKey c0 = components(ar.diagram).front();
        int w0 = winding_number(ar.diagram, c0), f0 = framing(ar.diagram, c0);
        for (const Move& m : enumerate_moves(ar.diagram, {MoveKind::R3})) {
            ++sites;
            ApplyResult a1 = apply(ar.diagram, m);
            CHECK(validate(a1.diagram).ok);
            CHECK(writhe(a1.diagram) == writhe(ar.diagram));
            CompKey c1 = a1.comp_map.at(c0);
            CHECK(framing(a1.diagram, c1) == f0);
            CHECK(winding_number(a1.diagram, c1) == w0);
            ApplyResult back = apply(a1.diagram, Move::r3(a1.created_face));
            CHECK(iso(back.diagram, ar.diagram));
            roundtrip(ar.diagram, m);
        }
    }
    CHECK(sites == 10);
}

TEST_CASE("r1down splices a kinked trefoil strand back together") {
    Diagram t = trefoil();
    for (const Move& up : enumerate_moves(t, {MoveKind::R1Up})) {
        ApplyResult ar = apply(t, up);
        auto downs = enumerate_moves(ar.diagram, {MoveKind::R1Down});
        REQUIRE(downs.size() == 1);
        roundtrip(ar.diagram, downs.front());
    }
}

TEST_CASE("r2down needs a coherent bigon in an empty face") {
    Diagram t = trefoil();
    CHECK(enumerate_moves(t, {MoveKind::R2Down}).empty());  // alternating bigons
    LegalCheck c = legal(t, Move::r2down(2));
    CHECK(!c.ok);
    CHECK(c.reason == "no strand is over at both corners");
}

TEST_CASE("r2up anchors a strand to a free loop from either side") {
    Diagram t = trefoil();
    LoopId l = t.fresh_loop();
    t.loops[l] = {l, true, FaceRef::outer()};
    REQUIRE(validate(t).ok);
    int n = 0;
    for (const Move& m : enumerate_moves(t, {MoveKind::R2Up})) {
        if (!m.a_loop && !m.b_loop) continue;
        ApplyResult ar = apply(t, m);
        CHECK(validate(ar.diagram).ok);
        CHECK(ar.diagram.loops.empty());
        roundtrip(t, m);
        ++n;
    }
    CHECK(n == 10);
}

TEST_CASE("r2up reaches a circle nested inside a monogon") {
    Diagram k = kink(1);
    LoopId l = k.fresh_loop();
    k.loops[l] = {l, true, FaceRef::dart(3)};
    REQUIRE(validate(k).ok);
    int n = 0;
    for (const Move& m : enumerate_moves(k, {MoveKind::R2Up})) {
        if (!m.a_loop && !m.b_loop) continue;
        ApplyResult ar = apply(k, m);
        CHECK(validate(ar.diagram).ok);
        roundtrip(k, m);
        ++n;
    }
    CHECK(n == 6);
}

TEST_CASE("two circles clasp and pull apart") {
    Diagram d;
    d.loops[1] = {1, true, FaceRef::outer()};
    d.loops[2] = {2, true, FaceRef::outer()};
    d.bump_counters();
    REQUIRE(validate(d).ok);
    for (bool over_a : {true, false}) {
        Move m = Move::r2up_loops(1, 2, over_a);
        ApplyResult ar = apply(d, m);
        CHECK(validate(ar.diagram).ok);
        CHECK(ar.diagram.loops.empty());
        CHECK(ar.diagram.crossings.size() == 2);
        roundtrip(d, m);
        ApplyResult ar2 = apply(ar.diagram, Move::r2down(ar.created_face));
        CHECK(validate(ar2.diagram).ok);
        CHECK(ar2.diagram.loops.size() == 2);
        CHECK(ar2.diagram.crossings.empty());
        CHECK(iso(ar2.diagram, d));
    }
}

TEST_CASE("nested circles clasp through the ring") {
    Diagram d;
    d.loops[1] = {1, true, FaceRef::outer()};
    d.loops[2] = {2, true, FaceRef::loop_inside(1)};
    d.bump_counters();
    REQUIRE(validate(d).ok);
    for (bool over_a : {true, false}) {
        Move m = Move::r2up_loops(1, 2, over_a);
        ApplyResult ar = apply(d, m);
        CHECK(validate(ar.diagram).ok);
        roundtrip(d, m);
    }
}

TEST_CASE("moves print and parse back to the same text") {
    for (const char* s : {
             "r1up d=d3 at=head side=left sign=+",
             "r1up loop=L2 side=right sign=-",
             "r1down f=d7",
             "r2up a=d3 b=d12 over=a",
             "r2up a=L1 b=L1 over=b side=in",
             "r2up a=d4 b=L2 over=b",
             "r2down f=d9",
             "r3 f=d5",
         }) {
        CAPTURE(s);
        CHECK(serialize_move(parse_move(s)) == s);
    }
    CHECK_THROWS_AS(parse_move("r4 f=d1"), ParseError);
    CHECK_THROWS_AS(parse_move("r1down face=d1"), ParseError);
    CHECK_THROWS_AS(parse_move("r1up d=d1 side=up sign=+"), ParseError);
}

TEST_CASE("traces survive a print and parse cycle byte for byte") {
    Diagram t = trefoil();
    MoveTrace tr;
    tr.initial = t;
    for (const Move& m : enumerate_moves(t, {MoveKind::R1Up})) tr.moves.push_back(m);
    for (const Move& m : enumerate_moves(t, {MoveKind::R2Up})) tr.moves.push_back(m);
    std::string s1 = serialize_trace(tr);
    std::string s2 = serialize_trace(parse_trace(s1));
    CHECK(s1 == s2);
}

TEST_CASE("replay keeps the legal prefix and reports the failing move") {
    Diagram c = circle(true);
    MoveTrace tr;
    tr.initial = c;
    tr.moves.push_back(Move::r1up_loop(1, true, 1));
    tr.moves.push_back(Move::r1down(999));
    ReplayReport r = replay(tr);
    CHECK(!r.ok);
    CHECK(r.fail_index == 2);
    CHECK(r.stages.size() == 2);

    tr.moves.pop_back();
    r = replay(tr);
    CHECK(r.ok);
    CHECK(r.stages.size() == 2);
}
