#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>

#include "reidesort/kdf.hpp"
#include "reidesort/testkit.hpp"

using namespace reidesort;
namespace tk = reidesort::testkit;

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

// the trefoil with darts shifted by 5, rotation arrays cycled, and edge
// ids renumbered; the same embedded diagram in different clothes
Diagram trefoil_relabeled() {
    Diagram d;
    d.crossings[1] = {1, {12, 7, 13, 6}, 1};
    d.crossings[2] = {2, {8, 15, 9, 14}, 1};
    d.crossings[3] = {3, {11, 17, 10, 16}, 0};
    d.edges[4] = {4, 7, 8};
    d.edges[5] = {5, 9, 10};
    d.edges[6] = {6, 11, 12};
    d.edges[7] = {7, 13, 14};
    d.edges[8] = {8, 15, 16};
    d.edges[9] = {9, 17, 6};
    d.placements.push_back({8, FaceRef::outer()});
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

Diagram kink2_relabeled() {
    Diagram d;
    d.crossings[1] = {1, {11, 12, 13, 14}, 1};
    d.edges[1] = {1, 12, 11};
    d.edges[2] = {2, 13, 14};
    d.placements.push_back({12, FaceRef::outer()});
    d.bump_counters();
    return d;
}

Diagram circle(bool ccw) {
    Diagram d;
    d.loops[1] = {1, ccw, FaceRef::outer()};
    d.bump_counters();
    return d;
}

std::vector<std::array<double, 2>> limacon(bool reversed) {
    // r = 0.5 + cos(theta): one inner loop, turning number two
    std::vector<std::array<double, 2>> p;
    const double pi = std::acos(-1.0);
    for (int k = 0; k < 720; ++k) {
        double t = 2 * pi * k / 720;
        double r = 0.5 + std::cos(t);
        p.push_back({r * std::cos(t), r * std::sin(t)});
    }
    if (reversed) std::reverse(p.begin(), p.end());
    return p;
}

}  // namespace

TEST_CASE("generated diagrams validate and reproduce bit for bit") {
    tk::GenConfig cfg;
    cfg.seed = 11;
    cfg.circles = 2;
    cfg.max_crossings = 6;
    cfg.moves_lo = cfg.moves_hi = 10;
    Diagram d1 = tk::gen_diagram(cfg);
    Diagram d2 = tk::gen_diagram(cfg);
    CHECK(serialize_kdf(d1) == serialize_kdf(d2));
    CHECK(validate(d1).ok);

    for (std::uint64_t s = 1; s <= 150; ++s) {
        tk::GenConfig c;
        c.seed = s;
        c.circles = 1 + static_cast<int>(s % 2);
        c.max_crossings = 8;
        c.moves_lo = 4;
        c.moves_hi = 12;
        CHECK(validate(tk::gen_diagram(c)).ok);
    }
}

TEST_CASE("a zero crossing cap leaves the starting circles alone") {
    tk::GenConfig cfg;
    cfg.seed = 5;
    cfg.circles = 2;
    cfg.max_crossings = 0;
    cfg.moves_lo = cfg.moves_hi = 9;
    Diagram d = tk::gen_diagram(cfg);
    CHECK(d.crossings.empty());
    CHECK(d.loops.size() == 2);
    CHECK(validate(d).ok);
}

TEST_CASE("generated traces replay with the declared crossing deltas") {
    tk::GenConfig cfg;
    cfg.seed = 23;
    cfg.max_crossings = 8;
    cfg.moves_lo = cfg.moves_hi = 5;
    MoveTrace tr = tk::gen_trace(circle(true), cfg, false);
    REQUIRE(tr.moves.size() == 5);
    CHECK(serialize_trace(tr) == serialize_trace(tk::gen_trace(circle(true), cfg, false)));

    ReplayReport rep = replay(tr);
    REQUIRE(rep.ok);
    REQUIRE(rep.stages.size() == 6);
    for (size_t i = 0; i < tr.moves.size(); ++i) {
        int delta = 0;
        switch (tr.moves[i].kind) {
            case MoveKind::R1Up: delta = 1; break;
            case MoveKind::R2Up: delta = 2; break;
            case MoveKind::R3: delta = 0; break;
            case MoveKind::R1Down: delta = -1; break;
            case MoveKind::R2Down: delta = -2; break;
        }
        CHECK(static_cast<int>(rep.stages[i + 1].crossings.size()) ==
              static_cast<int>(rep.stages[i].crossings.size()) + delta);
    }

    tk::GenConfig none = cfg;
    none.moves_lo = none.moves_hi = 0;
    CHECK(tk::gen_trace(circle(true), none, false).moves.empty());
}

TEST_CASE("restricted traces stay within kinds two and three") {
    tk::GenConfig cfg;
    cfg.seed = 31;
    cfg.max_crossings = 8;
    cfg.moves_lo = cfg.moves_hi = 4;
    MoveTrace tr = tk::gen_trace(circle(false), cfg, true);
    REQUIRE(tr.moves.size() == 4);
    for (const Move& m : tr.moves)
        CHECK((m.kind == MoveKind::R2Up || m.kind == MoveKind::R2Down || m.kind == MoveKind::R3));
    CHECK(validate_trace(tr).ok);
}

TEST_CASE("turning numbers of closed polylines") {
    // frozen output of tests/oracles/polyline_turning.py
    std::vector<std::array<double, 2>> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(tk::geometric_winding(sq) == 1);
    std::vector<std::array<double, 2>> wq(sq.rbegin(), sq.rend());
    CHECK(tk::geometric_winding(wq) == -1);

    std::vector<std::array<double, 2>> gon;
    const double pi = std::acos(-1.0);
    for (int k = 0; k < 12; ++k)
        gon.push_back({std::cos(2 * pi * k / 12), std::sin(2 * pi * k / 12)});
    CHECK(tk::geometric_winding(gon) == 1);

    CHECK(tk::geometric_winding(limacon(false)) == 2);
    CHECK(tk::geometric_winding(limacon(true)) == -2);

    std::vector<std::array<double, 2>> closed = sq;
    closed.push_back(sq.front());
    CHECK(tk::geometric_winding(closed) == 1);

    CHECK_THROWS_AS(tk::geometric_winding({{0, 0}, {1, 0}}), DiagramError);
    CHECK_THROWS_AS(tk::geometric_winding({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), DiagramError);
    CHECK_THROWS_AS(tk::geometric_winding({{0, 0}, {1, 0}, {0, 0}, {0, 1}}), DiagramError);
}

TEST_CASE("backtracking isomorphism respects relabeling and chirality") {
    CHECK(tk::brute_isomorphic(trefoil(), trefoil()));
    CHECK(tk::brute_isomorphic(trefoil(), trefoil_relabeled()));
    CHECK(tk::brute_isomorphic(trefoil_relabeled(), trefoil()));
    CHECK_FALSE(tk::brute_isomorphic(trefoil(), mirror(trefoil())));

    CHECK(tk::brute_isomorphic(kink(2), kink2_relabeled()));
    CHECK_FALSE(tk::brute_isomorphic(kink(1), kink(2)));
    // a map sending lobe {1} to lobe {3} would have to send the tail dart
    // 2 to the head dart 4
    CHECK_FALSE(tk::brute_isomorphic(kink(1), kink(3)));

    CHECK(tk::brute_isomorphic(circle(true), circle(true)));
    CHECK_FALSE(tk::brute_isomorphic(circle(true), circle(false)));

    Diagram nested;
    nested.loops[1] = {1, true, FaceRef::outer()};
    nested.loops[2] = {2, false, FaceRef::loop_inside(1)};
    nested.bump_counters();
    Diagram nested2;
    nested2.loops[3] = {3, false, FaceRef::loop_inside(7)};
    nested2.loops[7] = {7, true, FaceRef::outer()};
    nested2.bump_counters();
    Diagram side;
    side.loops[1] = {1, true, FaceRef::outer()};
    side.loops[2] = {2, false, FaceRef::outer()};
    side.bump_counters();
    Diagram nested_ccw;
    nested_ccw.loops[1] = {1, true, FaceRef::outer()};
    nested_ccw.loops[2] = {2, true, FaceRef::loop_inside(1)};
    nested_ccw.bump_counters();
    CHECK(tk::brute_isomorphic(nested, nested2));
    CHECK_FALSE(tk::brute_isomorphic(nested, side));
    CHECK_FALSE(tk::brute_isomorphic(nested, nested_ccw));
    CHECK(tk::brute_isomorphic(Diagram{}, Diagram{}));
}

TEST_CASE("backtracking isomorphism agrees with canonical codes") {
    std::vector<Diagram> pool;
    for (std::uint64_t s = 1; s <= 24; ++s) {
        tk::GenConfig cfg;
        cfg.seed = s;
        cfg.circles = 1 + static_cast<int>(s % 2);
        cfg.max_crossings = 4;
        cfg.moves_lo = cfg.moves_hi = 6;
        pool.push_back(tk::gen_diagram(cfg));
    }
    for (const Diagram& d : pool) {
        Diagram relabeled = parse_kdf(canonical_kdf(d));
        CHECK(tk::brute_isomorphic(d, relabeled));
    }
    for (size_t i = 0; i + 1 < pool.size(); ++i)
        CHECK(tk::brute_isomorphic(pool[i], pool[i + 1]) == isomorphic(pool[i], pool[i + 1]));
}

TEST_CASE("bridge search finds one move bridges and checks its precondition") {
    Diagram a = circle(true);
    auto pushes = enumerate_moves(a, {MoveKind::R2Up});
    REQUIRE(pushes.size() == 4);
    Diagram b = apply(a, pushes[0]).diagram;

    auto br = tk::search_bridge(a, b, 2);
    REQUIRE(br.has_value());
    REQUIRE(br->moves.size() == 1);
    ReplayReport rep = replay(*br);
    REQUIRE(rep.ok);
    CHECK(canonical_kdf(rep.stages.back()) == canonical_kdf(b));

    auto back = tk::search_bridge(b, a, 2);
    REQUIRE(back.has_value());
    CHECK(back->moves.size() == 1);

    Diagram a2;
    a2.loops[5] = {5, true, FaceRef::outer()};
    a2.bump_counters();
    auto same = tk::search_bridge(a, a2, 1);
    REQUIRE(same.has_value());
    CHECK(same->moves.empty());

    Diagram kinked = apply(a, Move::r1up_loop(1, true, 1)).diagram;
    CHECK_THROWS_AS(tk::search_bridge(kinked, a, 2), MoveError);
}

TEST_CASE("minimum move counts are symmetric and respect move direction") {
    Diagram a = circle(true);
    std::set<MoveKind> two_three{MoveKind::R2Up, MoveKind::R2Down, MoveKind::R3};
    auto pushes = enumerate_moves(a, {MoveKind::R2Up});
    Diagram b = apply(a, pushes[0]).diagram;

    CHECK(tk::min_moves(a, b, two_three, 2) == 1);
    CHECK(tk::min_moves(b, a, two_three, 2) == 1);
    CHECK(tk::min_moves(a, a, two_three, 2) == 0);

    auto again = enumerate_moves(b, {MoveKind::R2Up});
    REQUIRE(!again.empty());
    Diagram c = apply(b, again[0]).diagram;
    CHECK(tk::min_moves(a, c, two_three, 4) == 2);

    CHECK(tk::min_moves(b, a, {MoveKind::R2Down}, 2) == 1);
    CHECK(tk::min_moves(a, b, {MoveKind::R2Down}, 2) == std::nullopt);

    CHECK(tk::min_moves(trefoil(), a, two_three, 3) == std::nullopt);
}

TEST_CASE("seed override comes from the environment") {
    unsetenv("REIDESORT_SEED");
    CHECK(tk::seed_from_env(7) == 7);
    setenv("REIDESORT_SEED", "123", 1);
    CHECK(tk::seed_from_env(7) == 123);
    setenv("REIDESORT_SEED", "abc", 1);
    CHECK(tk::seed_from_env(7) == 7);
    unsetenv("REIDESORT_SEED");
}
