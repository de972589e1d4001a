#include "reidesort/moves.hpp"

#include "reidesort/kdf.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>
#include <utility>

namespace reidesort {

std::string to_string(MoveKind k) {
    switch (k) {
        case MoveKind::R1Up: return "r1up";
        case MoveKind::R1Down: return "r1down";
        case MoveKind::R2Up: return "r2up";
        case MoveKind::R2Down: return "r2down";
        case MoveKind::R3: return "r3";
    }
    return "?";
}

namespace {

[[noreturn]] void internal_error(const std::string& what) {
    throw DiagramError("move surgery: " + what);
}

struct RefUF {
    std::map<FaceRef, FaceRef> parent;

    FaceRef find(FaceRef x) {
        auto it = parent.find(x);
        if (it == parent.end()) {
            parent.emplace(x, x);
            return x;
        }
        if (it->second == x) return x;
        FaceRef r = find(it->second);
        parent[x] = r;
        return r;
    }
    void unite(FaceRef a, FaceRef b) {
        a = find(a);
        b = find(b);
        if (b < a) std::swap(a, b);
        if (a != b) parent[b] = a;
    }
};

// Face orbits straight from crossings and edges. Works on a diagram whose
// placements are still stale mid-surgery, which Topo would reject.
struct RawFaces {
    std::map<DartId, DartId> key;
    std::map<DartId, std::vector<DartId>> orbits;
};

RawFaces raw_faces(const Diagram& d) {
    std::map<DartId, DartId> alpha, sigma_inv;
    for (const auto& [eid, e] : d.edges) {
        (void)eid;
        alpha[e.tail] = e.head;
        alpha[e.head] = e.tail;
    }
    for (const auto& [cid, c] : d.crossings) {
        (void)cid;
        for (int i = 0; i < 4; ++i) sigma_inv[c.rot[(i + 1) % 4]] = c.rot[i];
    }
    RawFaces rf;
    for (const auto& [start, mate] : alpha) {
        (void)mate;
        if (rf.key.count(start)) continue;
        std::vector<DartId> orbit;
        DartId x = start;
        do {
            orbit.push_back(x);
            x = sigma_inv.at(alpha.at(x));
        } while (x != start);
        DartId k = *std::min_element(orbit.begin(), orbit.end());
        std::rotate(orbit.begin(), std::find(orbit.begin(), orbit.end(), k), orbit.end());
        for (DartId w : orbit) rf.key[w] = k;
        rf.orbits[k] = std::move(orbit);
    }
    return rf;
}

std::map<CrossingId, CrossingId> raw_piece_of(const Diagram& d) {
    std::map<CrossingId, CrossingId> parent;
    for (const auto& [cid, c] : d.crossings) {
        (void)c;
        parent[cid] = cid;
    }
    auto find = [&parent](CrossingId x) {
        while (parent.at(x) != x) {
            parent[x] = parent.at(parent.at(x));
            x = parent.at(x);
        }
        return x;
    };
    std::map<DartId, CrossingId> at;
    for (const auto& [cid, c] : d.crossings)
        for (DartId w : c.rot) at[w] = cid;
    for (const auto& [eid, e] : d.edges) {
        (void)eid;
        CrossingId a = find(at.at(e.tail)), b = find(at.at(e.head));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<CrossingId, CrossingId> out;
    for (const auto& [cid, c] : d.crossings) {
        (void)c;
        out[cid] = find(cid);
    }
    return out;
}

void rewrite_dart_refs(Diagram& nd, const std::set<DartId>& from, DartId to) {
    for (auto& p : nd.placements)
        if (p.container.kind == FaceRef::Dart && from.count(p.container.id))
            p.container = FaceRef::dart(to);
    for (auto& [lid, l] : nd.loops) {
        (void)lid;
        if (l.container.kind == FaceRef::Dart && from.count(l.container.id))
            l.container = FaceRef::dart(to);
    }
}

void rewrite_loop_refs(Diagram& nd, LoopId from, FaceRef to) {
    for (auto& p : nd.placements)
        if (p.container.kind == FaceRef::LoopInside && p.container.id == from)
            p.container = to;
    for (auto& [lid, l] : nd.loops) {
        (void)lid;
        if (l.container.kind == FaceRef::LoopInside && l.container.id == from) l.container = to;
    }
}

// A down move sweeps a strand across the disk its dying face bounds, so
// the face must be an internal face of its piece (sweeping the external
// face would drag the strand across the piece's whole surroundings) and
// the disk must hold nothing else.
bool sweepable_face(const Topo& t, DartId face, std::string& why) {
    DartId pk = t.piece_key.at(t.rec(face).crossing);
    if (t.piece_external.at(pk) == face) {
        why = "face is the piece's external face";
        return false;
    }
    FaceRef r = t.region_of(FaceRef::dart(face));
    auto ip = t.region_pieces.find(r);
    if (ip != t.region_pieces.end() && !ip->second.empty()) {
        why = "a piece floats inside the face";
        return false;
    }
    auto il = t.region_loops.find(r);
    if (il != t.region_loops.end() && !il->second.empty()) {
        why = "a free loop floats inside the face";
        return false;
    }
    return true;
}

struct Surgery {
    const Diagram& pre;
    const Topo& t;
    ApplyResult res;
    std::map<CompKey, CompKey> forced;

    Surgery(const Diagram& d, const Topo& tt) : pre(d), t(tt) { res.diagram = d; }

    Diagram& nd() { return res.diagram; }

    DartId dart() {
        DartId x = nd().fresh_dart();
        res.new_darts.push_back(x);
        return x;
    }
    CrossingId crossing() {
        CrossingId c = nd().fresh_crossing();
        res.new_crossings.push_back(c);
        return c;
    }
    EdgeId edge(DartId tail, DartId head) {
        EdgeId e = nd().fresh_edge();
        nd().edges[e] = {e, tail, head};
        res.new_edges.push_back(e);
        return e;
    }
    LoopId loop(bool ccw) {
        LoopId l = nd().fresh_loop();
        nd().loops[l] = {l, ccw, FaceRef::outer()};
        res.new_loops.push_back(l);
        return l;
    }
    void drop_edge(EdgeId e) {
        nd().edges.erase(e);
        res.removed_edges.push_back(e);
    }
    void drop_crossing(CrossingId c) {
        nd().crossings.erase(c);
        res.removed_crossings.push_back(c);
    }
    void drop_loop(LoopId l) {
        nd().loops.erase(l);
        res.removed_loops.push_back(l);
    }
    void set_crossing(CrossingId id, std::array<DartId, 4> rot, int over) {
        Crossing c;
        c.id = id;
        c.rot = rot;
        c.over = over;
        nd().crossings[id] = c;
    }
};

struct LoopMark {
    FaceRef interior;  // pre face node on the born loop's inside
    FaceRef exterior;
};

// Down moves leave correct crossings, edges and loop records in nd but stale
// placements and containers. Pre regions that met across the dissolved
// corners merge; rebuild every row and container against one owner per
// merged class. Returns the owner of the dissolved (aisle) region.
FaceRef finish_down(const Topo& pt, const std::vector<std::pair<FaceRef, FaceRef>>& merges,
                    const std::map<LoopId, LoopMark>& marks, FaceRef aisle_node, Diagram& nd) {
    RefUF uf;
    for (const auto& [a, b] : merges) uf.unite(pt.region_of(a), pt.region_of(b));
    auto cls = [&](FaceRef node) { return uf.find(pt.region_of(node)); };

    RawFaces rf = raw_faces(nd);
    std::map<CrossingId, CrossingId> rpiece = raw_piece_of(nd);
    std::map<DartId, CrossingId> dart_cr;
    for (const auto& [cid, c] : nd.crossings)
        for (DartId w : c.rot) dart_cr[w] = cid;

    // every post orbit sits inside one merged pre class
    std::map<DartId, FaceRef> orbit_cls;
    std::map<CrossingId, std::vector<DartId>> piece_orbits;
    for (const auto& [key, orbit] : rf.orbits) {
        FaceRef c0 = cls(pt.face_node(orbit.front()));
        for (DartId w : orbit)
            if (cls(pt.face_node(w)) != c0) internal_error("post face straddles regions");
        orbit_cls[key] = c0;
        piece_orbits[rpiece.at(dart_cr.at(key))].push_back(key);
    }
    FaceRef aisle_cls = cls(aisle_node);

    // one row per descendant piece; external orbit keeps the pre external
    // class when it survived, otherwise the piece floats in the aisle
    struct Row {
        DartId anchor = 0;
        bool via_old = true;
        FaceRef pre_container;
    };
    std::vector<Row> rows;
    std::set<DartId> externals;
    for (const Placement& p : nd.placements) {
        DartId pk = pt.piece_key.at(pt.rec(p.external).crossing);
        FaceRef k1 = cls(FaceRef::dart(pt.piece_external.at(pk)));
        std::set<CrossingId> reps;
        for (CrossingId c : pt.pieces.at(pk))
            if (nd.crossings.count(c)) reps.insert(rpiece.at(c));
        if (reps.empty()) internal_error("placement row for a dead piece");
        for (CrossingId rep : reps) {
            DartId ext = 0;
            bool via_old = true;
            for (DartId key : piece_orbits.at(rep))
                if (orbit_cls.at(key) == k1) {
                    ext = key;
                    break;
                }
            if (!ext) {
                via_old = false;
                for (DartId key : piece_orbits.at(rep))
                    if (orbit_cls.at(key) == aisle_cls) {
                        ext = key;
                        break;
                    }
            }
            if (!ext) internal_error("piece lost its external region");
            DartId anchor = ext;
            auto old = rf.key.find(p.external);
            if (old != rf.key.end() && old->second == ext) anchor = p.external;
            rows.push_back({anchor, via_old, p.container});
            externals.insert(ext);
        }
    }

    std::map<FaceRef, FaceRef> owner;
    auto add_owner = [&](FaceRef c, FaceRef o) {
        auto [it, fresh] = owner.emplace(c, o);
        if (!fresh && it->second != o) internal_error("two owners for one region");
    };
    add_owner(cls(FaceRef::outer()), FaceRef::outer());
    for (const auto& [lid, l] : nd.loops) {
        (void)l;
        auto mk = marks.find(lid);
        if (mk != marks.end())
            add_owner(cls(mk->second.interior), FaceRef::loop_inside(lid));
        else
            add_owner(cls(FaceRef::loop_inside(lid)), FaceRef::loop_inside(lid));
    }
    for (const auto& [rep, keys] : piece_orbits) {
        (void)rep;
        for (DartId key : keys)
            if (!externals.count(key)) add_owner(orbit_cls.at(key), FaceRef::dart(key));
    }

    auto resolve = [&](FaceRef ref) {
        FaceRef node = ref;
        if (ref.kind == FaceRef::Dart) node = pt.face_node(ref.id);
        auto it = owner.find(cls(node));
        if (it == owner.end()) internal_error("container region has no owner");
        return it->second;
    };
    auto aisle_owner = owner.find(aisle_cls);
    if (aisle_owner == owner.end()) internal_error("dissolved region has no owner");

    nd.placements.clear();
    for (const Row& r : rows)
        nd.placements.push_back(
            {r.anchor, r.via_old ? resolve(r.pre_container) : aisle_owner->second});
    for (auto& [lid, l] : nd.loops) {
        auto mk = marks.find(lid);
        if (mk != marks.end()) {
            auto ow = owner.find(cls(mk->second.exterior));
            if (ow == owner.end()) internal_error("born loop exterior has no owner");
            l.container = ow->second;
        } else {
            l.container = resolve(l.container);
        }
    }
    return aisle_owner->second;
}

std::map<CompKey, CompKey> match_components(const Topo& pt, const Topo& tn,
                                            const std::map<CompKey, CompKey>& forced) {
    std::map<CompKey, std::vector<DartId>> pre_darts;
    for (const auto& [w, c] : pt.comp_of) pre_darts[c].push_back(w);
    std::map<CompKey, CompKey> out;
    for (const CompKey& c : pt.components) {
        auto f = forced.find(c);
        if (f != forced.end()) {
            out[c] = f->second;
            continue;
        }
        if (c.is_loop) {
            if (!tn.dia->loops.count(c.id)) internal_error("free loop lost without record");
            out[c] = c;
            continue;
        }
        CompKey nk;
        bool found = false;
        for (DartId w : pre_darts[c]) {
            auto it = tn.comp_of.find(w);
            if (it != tn.comp_of.end()) {
                nk = it->second;
                found = true;
                break;
            }
        }
        if (!found) internal_error("strand lost without record");
        out[c] = nk;
    }
    return out;
}

// One R2Up anchor: a side of an edge (named by its tail or head dart) or a
// side of a free loop. vleft: the finger leaves from the strand's left.
struct R2Side {
    bool is_loop = false;
    DartId dart = 0;
    EdgeId eid = 0;
    Edge e;
    LoopId lid = 0;
    FreeLoop L;
    bool push_inside = false;
    bool vleft = false;
};

struct R2Plan {
    bool self_dart = false;
    bool self_loop = false;
    R2Side A, B;
};

LegalCheck no(std::string reason) { return {false, std::move(reason)}; }
LegalCheck yes() { return {true, ""}; }

LegalCheck fill_dart_side(const Diagram& d, const Topo& t, DartId w, R2Side& s) {
    if (!t.darts.count(w)) return no("no dart d" + std::to_string(w));
    s.is_loop = false;
    s.dart = w;
    s.eid = t.rec(w).edge;
    s.e = d.edges.at(s.eid);
    s.vleft = (w == s.e.tail);
    return yes();
}

LegalCheck fill_loop_side(const Diagram& d, LoopId l, R2Side& s) {
    auto it = d.loops.find(l);
    if (it == d.loops.end()) return no("no loop L" + std::to_string(l));
    s.is_loop = true;
    s.lid = l;
    s.L = it->second;
    return yes();
}

LegalCheck legal_impl(const Diagram& d, const Topo& t, const Move& m, R2Plan& plan) {
    switch (m.kind) {
        case MoveKind::R1Up: {
            if ((m.dart == 0) == (m.loop == 0)) return no("need a dart or a loop anchor");
            if (m.dart && !t.darts.count(m.dart)) return no("no dart d" + std::to_string(m.dart));
            if (m.loop && !d.loops.count(m.loop)) return no("no loop L" + std::to_string(m.loop));
            if (m.sign != 1 && m.sign != -1) return no("sign must be +1 or -1");
            return yes();
        }
        case MoveKind::R1Down: {
            auto it = t.face_orbits.find(m.face);
            if (it == t.face_orbits.end())
                return no("d" + std::to_string(m.face) + " keys no face");
            if (it->second.size() != 1) return no("face is not a monogon");
            std::string why;
            if (!sweepable_face(t, m.face, why)) return no(why);
            return yes();
        }
        case MoveKind::R2Down: {
            auto it = t.face_orbits.find(m.face);
            if (it == t.face_orbits.end())
                return no("d" + std::to_string(m.face) + " keys no face");
            if (it->second.size() != 2) return no("face is not a bigon");
            DartId u = it->second[0], v = it->second[1];
            if (t.rec(u).crossing == t.rec(v).crossing)
                return no("bigon visits one crossing twice");
            if (t.over(u) != t.over(t.sigma(v))) return no("no strand is over at both corners");
            std::string why;
            if (!sweepable_face(t, m.face, why)) return no(why);
            return yes();
        }
        case MoveKind::R3: {
            auto it = t.face_orbits.find(m.face);
            if (it == t.face_orbits.end())
                return no("d" + std::to_string(m.face) + " keys no face");
            if (it->second.size() != 3) return no("face is not a triangle");
            DartId x = it->second[0], y = it->second[1], z = it->second[2];
            CrossingId q = t.rec(x).crossing, p = t.rec(y).crossing, r = t.rec(z).crossing;
            if (q == p || p == r || q == r) return no("triangle visits one crossing twice");
            int cx = (t.over(x) ? 1 : 0) + (t.over(t.sigma(y)) ? 1 : 0);
            int cy = (t.over(y) ? 1 : 0) + (t.over(t.sigma(z)) ? 1 : 0);
            int cz = (t.over(z) ? 1 : 0) + (t.over(t.sigma(x)) ? 1 : 0);
            if (std::min({cx, cy, cz}) != 0 || std::max({cx, cy, cz}) != 2)
                return no("no strand crosses over both others");
            std::string why;
            if (!sweepable_face(t, m.face, why)) return no(why);
            return yes();
        }
        case MoveKind::R2Up: {
            if ((m.a == 0) == (m.a_loop == 0)) return no("anchor a needs a dart or a loop");
            if ((m.b == 0) == (m.b_loop == 0)) return no("anchor b needs a dart or a loop");
            if (m.a_loop && m.a_loop == m.b_loop) {
                LegalCheck c = fill_loop_side(d, m.a_loop, plan.A);
                if (!c.ok) return c;
                plan.self_loop = true;
                plan.A.push_inside = m.push_inside;
                plan.A.vleft = (m.push_inside == plan.A.L.ccw);
                return yes();
            }
            if (m.a && m.a == m.b) {
                LegalCheck c = fill_dart_side(d, t, m.a, plan.A);
                if (!c.ok) return c;
                plan.self_dart = true;
                return yes();
            }
            LegalCheck ca =
                m.a ? fill_dart_side(d, t, m.a, plan.A) : fill_loop_side(d, m.a_loop, plan.A);
            if (!ca.ok) return ca;
            LegalCheck cb =
                m.b ? fill_dart_side(d, t, m.b, plan.B) : fill_loop_side(d, m.b_loop, plan.B);
            if (!cb.ok) return cb;
            if (!plan.A.is_loop && !plan.B.is_loop && plan.A.eid == plan.B.eid)
                return no("the two sides of an edge never share a region");
            auto sides = [&](const R2Side& s) {
                std::vector<std::pair<FaceRef, bool>> out;
                if (!s.is_loop) {
                    out.push_back({t.region_of(t.face_node(s.dart)), false});
                } else {
                    out.push_back({t.region_of(s.L.container), false});
                    out.push_back({t.region_of(FaceRef::loop_inside(s.lid)), true});
                }
                return out;
            };
            for (const auto& [ra, ia] : sides(plan.A))
                for (const auto& [rb, ib] : sides(plan.B))
                    if (ra == rb) {
                        plan.A.push_inside = ia;
                        plan.B.push_inside = ib;
                        if (plan.A.is_loop) plan.A.vleft = (ia == plan.A.L.ccw);
                        if (plan.B.is_loop) plan.B.vleft = (ib == plan.B.L.ccw);
                        return yes();
                    }
            return no("anchors do not face a common region");
        }
    }
    return no("unknown move kind");
}

Surgery r1up_edge(const Diagram& d, const Topo& t, const Move& m) {
    Surgery s(d, t);
    EdgeId eid = t.rec(m.dart).edge;
    Edge e = d.edges.at(eid);
    DartId p_in = s.dart(), q_out = s.dart(), l_out = s.dart(), l_in = s.dart();
    CrossingId x = s.crossing();
    std::array<DartId, 4> rot = m.left ? std::array<DartId, 4>{l_out, l_in, p_in, q_out}
                                       : std::array<DartId, 4>{l_out, q_out, p_in, l_in};
    s.set_crossing(x, rot, (m.left == (m.sign > 0)) ? 1 : 0);
    s.drop_edge(eid);
    EdgeId e1 = s.edge(e.tail, p_in);
    EdgeId e2 = s.edge(q_out, e.head);
    s.edge(l_out, l_in);
    s.res.edge_splits[eid] = {e1, e2};
    s.res.created_face = m.left ? l_out : l_in;
    return s;
}

Surgery r1up_loop(const Diagram& d, const Topo& t, const Move& m) {
    Surgery s(d, t);
    FreeLoop L = d.loops.at(m.loop);
    s.drop_loop(L.id);
    DartId p_in = s.dart(), q_out = s.dart(), l_out = s.dart(), l_in = s.dart();
    CrossingId x = s.crossing();
    std::array<DartId, 4> rot = m.left ? std::array<DartId, 4>{l_out, l_in, p_in, q_out}
                                       : std::array<DartId, 4>{l_out, q_out, p_in, l_in};
    s.set_crossing(x, rot, (m.left == (m.sign > 0)) ? 1 : 0);
    s.edge(q_out, p_in);
    s.edge(l_out, l_in);
    DartId ext = L.ccw ? p_in : q_out;
    DartId disk = L.ccw ? q_out : p_in;
    rewrite_loop_refs(s.nd(), L.id, FaceRef::dart(disk));
    s.nd().placements.push_back({ext, L.container});
    s.forced[CompKey::loop(L.id)] = CompKey::strand(p_in);
    s.res.created_face = m.left ? l_out : l_in;
    return s;
}

Surgery r1down_move(const Diagram& d, const Topo& t, const Move& m) {
    Surgery s(d, t);
    DartId x = m.face;
    CrossingId cx = t.rec(x).crossing;
    EdgeId ell = t.rec(x).edge;
    DartId inc = t.opposite(x), out = t.sigma_inv(x);
    if (t.rec(inc).is_tail) std::swap(inc, out);
    EdgeId ep = t.rec(inc).edge, eq = t.rec(out).edge;
    s.drop_crossing(cx);
    std::map<LoopId, LoopMark> marks;
    if (ep != eq) {
        Edge a = d.edges.at(ep), b = d.edges.at(eq);
        s.drop_edge(ell);
        s.drop_edge(ep);
        s.drop_edge(eq);
        EdgeId em = s.edge(a.tail, b.head);
        s.res.edge_merges[em] = {ep, eq};
    } else {
        // one crossing piece unwinds to a bare circle
        s.drop_edge(ell);
        s.drop_edge(ep);
        std::vector<WalkStep> walk = {{inc, out}};
        SideSplit ss = side_split(d, t, walk);
        LoopId born = s.loop(ss.ccw());
        FaceRef lnode = t.face_node(out), rnode = t.face_node(t.sigma_inv(out));
        bool left_outer = ss.side_of(lnode) == ss.outer_side;
        marks[born] = left_outer ? LoopMark{rnode, lnode} : LoopMark{lnode, rnode};
        s.res.loop_births[born] = {ep};
        s.forced[t.comp_of.at(x)] = CompKey::loop(born);
        DartId pk = t.piece_key.at(cx);
        auto& pls = s.nd().placements;
        pls.erase(std::remove_if(pls.begin(), pls.end(),
                                 [&](const Placement& p) {
                                     return t.piece_key.at(t.rec(p.external).crossing) == pk;
                                 }),
                  pls.end());
    }
    s.res.vacated_region = finish_down(t, {{t.face_node(x), t.face_node(t.sigma(x))}}, marks,
                                       t.face_node(x), s.nd());
    return s;
}

Surgery r2up_generic(const Diagram& d, const Topo& t, const Move& m, const R2Plan& plan) {
    Surgery s(d, t);
    const R2Side& A = plan.A;
    const R2Side& B = plan.B;
    // strand a passes k1 then k2; b meets k1 first iff the sides disagree
    DartId i1 = s.dart(), o1 = s.dart(), i2 = s.dart(), o2 = s.dart();
    DartId j1 = s.dart(), p1 = s.dart(), j2 = s.dart(), p2 = s.dart();
    CrossingId k1 = s.crossing(), k2 = s.crossing();
    bool k1_first_b = (A.vleft != B.vleft);
    DartId bin1 = k1_first_b ? j1 : j2, bout1 = k1_first_b ? p1 : p2;
    DartId bin2 = k1_first_b ? j2 : j1, bout2 = k1_first_b ? p2 : p1;
    DartId bf1 = B.vleft ? bout1 : bin1, bb1 = B.vleft ? bin1 : bout1;
    DartId bf2 = B.vleft ? bout2 : bin2, bb2 = B.vleft ? bin2 : bout2;
    int over = m.over_a ? 0 : 1;
    s.set_crossing(k1, {o1, bf1, i1, bb1}, over);
    s.set_crossing(k2, {i2, bf2, o2, bb2}, over);

    // returns the (interior, exterior) flank markers for a loop anchor
    auto build = [&](const R2Side& S, DartId in1, DartId out1, DartId in2,
                     DartId out2) -> std::pair<DartId, DartId> {
        if (!S.is_loop) {
            s.drop_edge(S.eid);
            EdgeId x1 = s.edge(S.e.tail, in1);
            EdgeId x2 = s.edge(out1, in2);
            EdgeId x3 = s.edge(out2, S.e.head);
            s.res.edge_splits[S.eid] = {x1, x2, x3};
            return {0, 0};
        }
        s.drop_loop(S.lid);
        s.edge(out1, in2);
        s.edge(out2, in1);
        DartId imark = S.L.ccw ? out2 : in1;
        DartId emark = S.L.ccw ? in1 : out2;
        rewrite_loop_refs(s.nd(), S.lid, FaceRef::dart(imark));
        s.forced[CompKey::loop(S.lid)] = CompKey::strand(in1);
        return {imark, emark};
    };
    auto [ia, ea] = build(A, i1, o1, i2, o2);
    auto [ib, eb] = build(B, j1, p1, j2, p2);
    (void)ia;
    (void)ib;

    // stale refs into the fused corner faces follow the anchor dart
    std::set<DartId> oab;
    DartId marker = 0;
    if (!A.is_loop) {
        const auto& orb = t.face_orbits.at(t.face_key.at(A.dart));
        oab.insert(orb.begin(), orb.end());
        marker = A.dart;
    }
    if (!B.is_loop) {
        const auto& orb = t.face_orbits.at(t.face_key.at(B.dart));
        oab.insert(orb.begin(), orb.end());
        if (!marker) marker = B.dart;
    }
    if (!oab.empty()) rewrite_dart_refs(s.nd(), oab, marker);

    auto pk_of = [&](DartId w) { return t.piece_key.at(t.rec(w).crossing); };
    auto erase_rows = [&](DartId pk) {
        auto& pls = s.nd().placements;
        pls.erase(std::remove_if(pls.begin(), pls.end(),
                                 [&](const Placement& p) { return pk_of(p.external) == pk; }),
                  pls.end());
    };
    auto row_container = [&](DartId pk) -> FaceRef {
        for (const Placement& p : s.nd().placements)
            if (pk_of(p.external) == pk) return p.container;
        internal_error("piece without a placement row");
    };

    if (!A.is_loop && !B.is_loop && pk_of(A.dart) == pk_of(B.dart)) {
        DartId pk = pk_of(A.dart);
        if (t.piece_external.at(pk) == t.face_key.at(A.dart))
            for (auto& p : s.nd().placements)
                if (pk_of(p.external) == pk) p.external = A.dart;
    } else {
        bool a_floats = A.is_loop ? !A.push_inside
                                  : (t.piece_external.at(pk_of(A.dart)) == t.face_key.at(A.dart));
        bool b_floats = B.is_loop ? !B.push_inside
                                  : (t.piece_external.at(pk_of(B.dart)) == t.face_key.at(B.dart));
        FaceRef cont_a = A.is_loop ? A.L.container : row_container(pk_of(A.dart));
        FaceRef cont_b = B.is_loop ? B.L.container : row_container(pk_of(B.dart));
        if (a_floats && b_floats) {
            if (!A.is_loop) erase_rows(pk_of(A.dart));
            if (!B.is_loop) erase_rows(pk_of(B.dart));
            s.nd().placements.push_back({A.is_loop ? ea : A.dart, cont_a});
        } else if (a_floats) {
            if (!A.is_loop) erase_rows(pk_of(A.dart));
            if (B.is_loop) s.nd().placements.push_back({eb, cont_b});
        } else if (b_floats) {
            if (!B.is_loop) erase_rows(pk_of(B.dart));
            if (A.is_loop) s.nd().placements.push_back({ea, cont_a});
        } else {
            internal_error("anchors are mutually nested");
        }
    }

    RawFaces rf = raw_faces(s.nd());
    DartId g1 = A.vleft ? bb1 : o1, g2 = A.vleft ? i2 : bb2;
    if (rf.key.at(g1) != rf.key.at(g2) || rf.orbits.at(rf.key.at(g1)).size() != 2)
        internal_error("bigon not where expected");
    s.res.created_face = rf.key.at(g1);
    return s;
}

// Shared by the self push surgeries. The finger's passages nest: the strand
// meets k1, then k2 twice (tip, then the long way round), then k1 again.
// f darts are the tip-side passage pair, s darts the return pair.
struct SelfPush {
    DartId f1, f2, f3, f4, s1, s2, s3, s4;
    CrossingId k1, k2;
};

SelfPush self_push_skeleton(Surgery& s, bool vleft, bool over_a) {
    SelfPush p;
    p.f1 = s.dart();
    p.f2 = s.dart();
    p.f3 = s.dart();
    p.f4 = s.dart();
    p.s1 = s.dart();
    p.s2 = s.dart();
    p.s3 = s.dart();
    p.s4 = s.dart();
    p.k1 = s.crossing();
    p.k2 = s.crossing();
    int over = (vleft == over_a) ? 1 : 0;  // tip darts over iff over_a
    if (vleft) {
        s.set_crossing(p.k1, {p.s2, p.f1, p.s1, p.f2}, over);
        s.set_crossing(p.k2, {p.s4, p.f4, p.s3, p.f3}, over);
    } else {
        s.set_crossing(p.k1, {p.f2, p.s1, p.f1, p.s2}, over);
        s.set_crossing(p.k2, {p.f3, p.s3, p.f4, p.s4}, over);
    }
    return p;
}

DartId self_push_bigon(Surgery& s, const SelfPush& p) {
    RawFaces rf = raw_faces(s.nd());
    DartId key = 0;
    for (const auto& [k, orbit] : rf.orbits) {
        if (orbit.size() != 2) continue;
        bool tip = false, ret = false;
        for (DartId w : orbit) {
            tip = tip || w == p.f2 || w == p.f3;
            ret = ret || w == p.s4 || w == p.s1;
        }
        if (tip && ret) {
            if (key) internal_error("two bigon candidates");
            key = k;
        }
    }
    if (!key) internal_error("self push bigon not found");
    return key;
}

Surgery r2up_self_dart(const Diagram& d, const Topo& t, const Move& m, const R2Plan& plan) {
    Surgery s(d, t);
    const R2Side& A = plan.A;
    SelfPush p = self_push_skeleton(s, A.vleft, m.over_a);
    s.drop_edge(A.eid);
    EdgeId e1 = s.edge(A.e.tail, p.f1);
    EdgeId e2 = s.edge(p.f2, p.f3);
    EdgeId e3 = s.edge(p.f4, p.s3);
    EdgeId e4 = s.edge(p.s4, p.s1);
    EdgeId e5 = s.edge(p.s2, A.e.head);
    s.res.edge_splits[A.eid] = {e1, e2, e3, e4, e5};
    // every pre face keeps its boundary darts (fresh ids are larger, so
    // keys survive too); no references need rewriting
    s.res.created_face = self_push_bigon(s, p);
    return s;
}

Surgery r2up_self_loop(const Diagram& d, const Topo& t, const Move& m, const R2Plan& plan) {
    Surgery s(d, t);
    const R2Side& A = plan.A;
    s.drop_loop(A.lid);
    SelfPush p = self_push_skeleton(s, A.vleft, m.over_a);
    s.edge(p.s2, p.f1);
    s.edge(p.f2, p.f3);
    s.edge(p.f4, p.s3);
    s.edge(p.s4, p.s1);
    DartId imark = A.L.ccw ? p.s2 : p.f1;
    DartId emark = A.L.ccw ? p.f1 : p.s2;
    rewrite_loop_refs(s.nd(), A.lid, FaceRef::dart(imark));
    s.nd().placements.push_back({emark, A.L.container});
    s.forced[CompKey::loop(A.lid)] = CompKey::strand(p.f1);
    s.res.created_face = self_push_bigon(s, p);
    return s;
}

Surgery r2down_move(const Diagram& d, const Topo& t, const Move& m) {
    Surgery s(d, t);
    const auto& orb = t.face_orbits.at(m.face);
    DartId u = orb[0], v = orb[1];
    CrossingId cx = t.rec(u).crossing, cy = t.rec(v).crossing;
    s.drop_crossing(cx);
    s.drop_crossing(cy);

    // splice the four passages, carrying each merged edge's constituent
    // list and junction walk so born circles keep their history
    struct Prov {
        std::vector<EdgeId> edges;
        std::vector<WalkStep> junctions;
    };
    std::map<EdgeId, Prov> prov;
    auto prov_of = [&](EdgeId e) {
        auto it = prov.find(e);
        if (it == prov.end()) return Prov{{e}, {}};
        Prov p = std::move(it->second);
        prov.erase(it);
        return p;
    };
    std::map<DartId, std::pair<EdgeId, bool>> at;
    for (const auto& [eid, e] : s.nd().edges) {
        at[e.tail] = {eid, true};
        at[e.head] = {eid, false};
    }
    auto erase_edge = [&](EdgeId e) {
        s.nd().edges.erase(e);
        if (d.edges.count(e)) s.res.removed_edges.push_back(e);
    };
    std::vector<std::pair<LoopId, Prov>> born;
    auto splice = [&](DartId h, DartId tl) {
        auto [ein, tin] = at.at(h);
        auto [eout, tout] = at.at(tl);
        if (tin || !tout) internal_error("splice ends misclassified");
        if (ein == eout) {
            Prov pv = prov_of(ein);
            pv.junctions.push_back({h, tl});
            erase_edge(ein);
            LoopId lid = s.loop(true);  // orientation fixed below
            born.push_back({lid, std::move(pv)});
            return;
        }
        Prov pin = prov_of(ein);
        pin.junctions.push_back({h, tl});
        Prov pout = prov_of(eout);
        DartId new_tail = s.nd().edges.at(ein).tail;
        DartId new_head = s.nd().edges.at(eout).head;
        erase_edge(ein);
        erase_edge(eout);
        EdgeId em = s.nd().fresh_edge();
        s.nd().edges[em] = {em, new_tail, new_head};
        pin.edges.insert(pin.edges.end(), pout.edges.begin(), pout.edges.end());
        pin.junctions.insert(pin.junctions.end(), pout.junctions.begin(), pout.junctions.end());
        prov[em] = std::move(pin);
        at[new_tail] = {em, true};
        at[new_head] = {em, false};
    };
    auto passage = [&](DartId w) {
        DartId w2 = t.opposite(w);
        return t.rec(w).is_tail ? std::pair<DartId, DartId>{w2, w}
                                : std::pair<DartId, DartId>{w, w2};
    };
    for (DartId w : {u, t.sigma(u), v, t.sigma(v)}) {
        auto [h, tl] = passage(w);
        splice(h, tl);
    }

    // A born circle's orientation survives the move: pulling the bigon
    // apart is a regular homotopy, so the strand's turning number is
    // unchanged, and an embedded circle turns once. Its flanks then follow
    // from any surviving edge off the bigon.
    std::map<LoopId, LoopMark> marks;
    EdgeId eu = t.rec(u).edge, ev = t.rec(v).edge;
    for (auto& [lid, pv] : born) {
        EdgeId wmark = 0;
        for (EdgeId e : pv.edges)
            if (e != eu && e != ev) {
                wmark = e;
                break;
            }
        if (!wmark) internal_error("born loop without an outer edge");
        CompKey comp = t.comp_of.at(d.edges.at(wmark).tail);
        bool ccw = winding_number(d, comp) == 1;
        s.nd().loops.at(lid).ccw = ccw;
        FaceRef lnode = t.face_node(d.edges.at(wmark).tail);
        FaceRef rnode = t.face_node(d.edges.at(wmark).head);
        marks[lid] = ccw ? LoopMark{lnode, rnode} : LoopMark{rnode, lnode};
        s.forced[comp] = CompKey::loop(lid);
        s.res.loop_births[lid] = pv.edges;
    }
    for (const auto& [em, pv] : prov) {
        s.res.new_edges.push_back(em);
        s.res.edge_merges[em] = pv.edges;
    }

    DartId pk = t.piece_key.at(cx);
    bool dead = true;
    for (CrossingId c : t.pieces.at(pk))
        if (s.nd().crossings.count(c)) {
            dead = false;
            break;
        }
    if (dead) {
        auto& pls = s.nd().placements;
        pls.erase(std::remove_if(pls.begin(), pls.end(),
                                 [&](const Placement& q) {
                                     return t.piece_key.at(t.rec(q.external).crossing) == pk;
                                 }),
                  pls.end());
    }

    FaceRef bigon = t.face_node(u);
    s.res.vacated_region =
        finish_down(t,
                    {{bigon, t.face_node(t.opposite(u))}, {bigon, t.face_node(t.opposite(v))}},
                    marks, bigon, s.nd());
    return s;
}

Surgery r3_move(const Diagram& d, const Topo& t, const Move& m) {
    Surgery s(d, t);
    const auto& orb = t.face_orbits.at(m.face);
    DartId x = orb[0], y = orb[1], z = orb[2];
    DartId sx = t.sigma(x), sy = t.sigma(y), sz = t.sigma(z);
    DartId s2x = t.opposite(x), s2y = t.opposite(y), s2z = t.opposite(z);
    DartId s3x = t.sigma_inv(x), s3y = t.sigma_inv(y), s3z = t.sigma_inv(z);
    EdgeId ex = t.rec(x).edge, ey = t.rec(y).edge, ez = t.rec(z).edge;

    // pure alpha rewiring: the two crossings off the stationary strand swap
    // sides, reversing strand direction through them
    std::set<DartId> flip = {x, sx, s2x, s3x, y, sy, s2y, s3y};
    auto post_tail = [&](DartId w) {
        bool r = t.rec(w).is_tail;
        return flip.count(w) ? !r : r;
    };
    auto mk = [&](EdgeId id, DartId a, DartId b) {
        bool ta = post_tail(a), tb = post_tail(b);
        if (ta == tb) internal_error("edge role clash");
        s.nd().edges[id] = {id, ta ? a : b, ta ? b : a};
    };
    std::map<DartId, DartId> endmove = {{s3y, s2x}, {s2x, s3y}, {s3x, z},
                                        {s2z, s3x}, {s2y, sz},  {s3z, s2y}};
    std::set<EdgeId> ext_edges;
    for (const auto& [w, tgt] : endmove) {
        (void)tgt;
        ext_edges.insert(t.rec(w).edge);
    }
    mk(ex, x, sy);
    mk(ez, sx, s2z);
    mk(ey, y, s3z);
    for (EdgeId eid : ext_edges) {
        Edge e = d.edges.at(eid);
        DartId a = endmove.count(e.tail) ? endmove.at(e.tail) : e.tail;
        DartId b = endmove.count(e.head) ? endmove.at(e.head) : e.head;
        mk(eid, a, b);
    }

    // faces persist one to one; refs into the pattern re-anchor on a
    // surviving orbit dart, or ride an external edge end across the move
    std::set<DartId> pattern = {x, y, z, sx, sy, sz, s2x, s2y, s2z, s3x, s3y, s3z};
    auto reanchor = [&](DartId w) -> DartId {
        const auto& g = t.face_orbits.at(t.face_key.at(w));
        DartId best = 0;
        for (DartId q : g)
            if (!pattern.count(q) && (!best || q < best)) best = q;
        if (best) return best;
        for (DartId q : g) {
            EdgeId eq = t.rec(q).edge;
            if (eq == ex || eq == ey || eq == ez) continue;
            const Edge& peq = d.edges.at(eq);
            const Edge& neq = s.nd().edges.at(eq);
            return q == peq.tail ? neq.tail : neq.head;
        }
        internal_error("reference cannot be re-anchored");
    };
    for (auto& q : s.nd().placements) {
        if (pattern.count(q.external)) q.external = reanchor(q.external);
        if (q.container.kind == FaceRef::Dart && pattern.count(q.container.id))
            q.container = FaceRef::dart(reanchor(q.container.id));
    }
    for (auto& [lid, l] : s.nd().loops) {
        (void)lid;
        if (l.container.kind == FaceRef::Dart && pattern.count(l.container.id))
            l.container = FaceRef::dart(reanchor(l.container.id));
    }

    RawFaces rf = raw_faces(s.nd());
    DartId tri = std::min({x, y, s2z});
    if (rf.key.at(x) != tri || rf.key.at(y) != tri || rf.key.at(s2z) != tri ||
        rf.orbits.at(tri).size() != 3)
        internal_error("image triangle not where expected");
    s.res.created_face = tri;
    return s;
}

}  // namespace

LegalCheck legal(const Diagram& d, const Move& m) {
    std::optional<Topo> t;
    try {
        t.emplace(d);
    } catch (const DiagramError& e) {
        return {false, std::string("diagram unusable: ") + e.what()};
    }
    R2Plan plan;
    return legal_impl(d, *t, m, plan);
}

ApplyResult apply(const Diagram& d, const Move& m, bool check) {
    std::optional<Topo> to;
    try {
        to.emplace(d);
    } catch (const DiagramError& e) {
        throw MoveError(std::string("diagram unusable: ") + e.what());
    }
    const Topo& t = *to;
    R2Plan plan;
    LegalCheck lc = legal_impl(d, t, m, plan);
    if (!lc.ok) throw MoveError(to_string(m.kind) + ": " + lc.reason);

    auto run = [&]() -> Surgery {
        switch (m.kind) {
            case MoveKind::R1Up: return m.dart ? r1up_edge(d, t, m) : r1up_loop(d, t, m);
            case MoveKind::R1Down: return r1down_move(d, t, m);
            case MoveKind::R2Up:
                if (plan.self_loop) return r2up_self_loop(d, t, m, plan);
                if (plan.self_dart) return r2up_self_dart(d, t, m, plan);
                return r2up_generic(d, t, m, plan);
            case MoveKind::R2Down: return r2down_move(d, t, m);
            case MoveKind::R3: return r3_move(d, t, m);
        }
        internal_error("unknown move kind");
    };
    Surgery s = run();
    std::sort(s.nd().placements.begin(), s.nd().placements.end());
    if (check) {
        Validation v = validate(s.res.diagram);
        if (!v.ok) internal_error("apply built an invalid diagram\n" + v.summary());
    }
    Topo tn(s.res.diagram);
    for (auto& [c, k] : s.forced) {
        (void)c;
        if (!k.is_loop) k = tn.comp_of.at(k.id);
    }
    s.res.comp_map = match_components(t, tn, s.forced);
    return std::move(s.res);
}

Move invert(const Diagram& d, const Move& m) {
    ApplyResult ar = apply(d, m, false);
    switch (m.kind) {
        case MoveKind::R1Up: return Move::r1down(ar.created_face);
        case MoveKind::R2Up: return Move::r2down(ar.created_face);
        case MoveKind::R3: return Move::r3(ar.created_face);
        case MoveKind::R1Down: {
            Topo t(d);
            DartId x = m.face;
            CrossingId cx = t.rec(x).crossing;
            int sign = crossing_sign(t, d.crossings.at(cx));
            if (!ar.new_loops.empty()) {
                // A one crossing piece unwound to a circle. Rebuilding with
                // the kink on the left reroots the piece at a monogon when
                // the circle runs ccw and at the two dart face when it runs
                // cw, so the side is fixed by the circle's orientation and
                // the shape of the face the piece showed to its container.
                LoopId born = ar.new_loops.front();
                bool ccw = ar.diagram.loops.at(born).ccw;
                DartId ext = t.piece_external.at(t.piece_key.at(cx));
                bool ext_mono = t.face_orbits.at(ext).size() == 1;
                return Move::r1up_loop(born, ccw == ext_mono, sign);
            }
            const Edge& ell = d.edges.at(t.rec(x).edge);
            bool left = (x == ell.tail);
            return Move::r1up(ar.diagram.edges.at(ar.new_edges.front()).tail, left, sign);
        }
        case MoveKind::R2Down: {
            Topo t(d);
            Topo tn(ar.diagram);
            const auto& orb = t.face_orbits.at(m.face);
            DartId u = orb[0], v = orb[1];
            FaceRef vac = tn.region_of(ar.vacated_region);
            auto anchor = [&](EdgeId mid, DartId& dart, LoopId& loop) {
                for (const auto& [em, olds] : ar.edge_merges)
                    if (std::find(olds.begin(), olds.end(), mid) != olds.end()) {
                        const Edge& e = ar.diagram.edges.at(em);
                        if (tn.region_of(tn.face_node(e.tail)) == vac) {
                            dart = e.tail;
                            return;
                        }
                        if (tn.region_of(tn.face_node(e.head)) == vac) {
                            dart = e.head;
                            return;
                        }
                        internal_error("vacated region not beside the spliced strand");
                    }
                for (const auto& [lid, olds] : ar.loop_births)
                    if (std::find(olds.begin(), olds.end(), mid) != olds.end()) {
                        loop = lid;
                        return;
                    }
                internal_error("spliced strand not found");
            };
            Move r;
            r.kind = MoveKind::R2Up;
            anchor(t.rec(u).edge, r.a, r.a_loop);
            anchor(t.rec(v).edge, r.b, r.b_loop);
            r.over_a = t.over(u);
            if (r.a_loop && r.a_loop == r.b_loop)
                r.push_inside = (ar.vacated_region == FaceRef::loop_inside(r.a_loop));
            return r;
        }
    }
    throw MoveError("unknown move kind");
}

static ReplayReport run_trace(const MoveTrace& t, bool keep) {
    ReplayReport r;
    Validation v0 = validate(t.initial);
    if (!v0.ok) {
        r.ok = false;
        r.fail_index = 0;
        r.reason = "initial diagram invalid\n" + v0.summary();
        return r;
    }
    Diagram cur = t.initial;
    if (keep) r.stages.push_back(cur);
    for (size_t i = 0; i < t.moves.size(); ++i) {
        try {
            cur = apply(cur, t.moves[i]).diagram;
        } catch (const MoveError& e) {
            r.ok = false;
            r.fail_index = i + 1;
            r.reason = e.what();
            return r;
        }
        if (keep) r.stages.push_back(cur);
    }
    return r;
}

ReplayReport replay(const MoveTrace& t) { return run_trace(t, true); }
ReplayReport validate_trace(const MoveTrace& t) { return run_trace(t, false); }

std::vector<Move> enumerate_moves(const Diagram& d, const std::set<MoveKind>& kinds) {
    Topo t(d);
    std::vector<Move> out;
    if (kinds.count(MoveKind::R1Up)) {
        for (const auto& [eid, e] : d.edges) {
            (void)eid;
            for (bool left : {true, false})
                for (int sign : {1, -1}) out.push_back(Move::r1up(e.tail, left, sign));
        }
        for (const auto& [lid, l] : d.loops) {
            (void)l;
            for (bool left : {true, false})
                for (int sign : {1, -1}) out.push_back(Move::r1up_loop(lid, left, sign));
        }
    }
    auto face_kind = [&](MoveKind k, size_t n) {
        if (!kinds.count(k)) return;
        for (const auto& [key, orbit] : t.face_orbits) {
            if (orbit.size() != n) continue;
            Move m;
            m.kind = k;
            m.face = key;
            R2Plan plan;
            if (legal_impl(d, t, m, plan).ok) out.push_back(m);
        }
    };
    face_kind(MoveKind::R1Down, 1);
    face_kind(MoveKind::R2Down, 2);
    face_kind(MoveKind::R3, 3);
    if (kinds.count(MoveKind::R2Up)) {
        struct Cand {
            DartId dart = 0;
            LoopId loop = 0;
            bool inside = false;
        };
        std::map<FaceRef, std::vector<Cand>> by_region;
        for (const auto& [w, rec] : t.darts) {
            (void)rec;
            by_region[t.region_of(t.face_node(w))].push_back({w, 0, false});
        }
        for (const auto& [lid, l] : d.loops) {
            by_region[t.region_of(l.container)].push_back({0, lid, false});
            by_region[t.region_of(FaceRef::loop_inside(lid))].push_back({0, lid, true});
        }
        for (auto& [region, cands] : by_region) {
            (void)region;
            std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
                if ((a.dart != 0) != (b.dart != 0)) return a.dart != 0;
                return a.dart ? a.dart < b.dart : a.loop < b.loop;
            });
            for (size_t i = 0; i < cands.size(); ++i)
                for (size_t j = i; j < cands.size(); ++j)
                    for (bool over_a : {true, false}) {
                        Move m;
                        m.kind = MoveKind::R2Up;
                        m.over_a = over_a;
                        m.a = cands[i].dart;
                        m.a_loop = cands[i].loop;
                        m.b = cands[j].dart;
                        m.b_loop = cands[j].loop;
                        if (i == j && cands[i].loop) m.push_inside = cands[i].inside;
                        out.push_back(m);
                    }
        }
    }
    return out;
}

namespace {

std::string anchor_token(DartId dart, LoopId loop) {
    return dart ? "d" + std::to_string(dart) : "L" + std::to_string(loop);
}

[[noreturn]] void parse_fail(const std::string& w) { throw ParseError(w); }

int id_of(const std::string& v, char prefix) {
    if (v.size() < 2 || v[0] != prefix) return 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(v[i]))) return 0;
    try {
        return std::stoi(v.substr(1));
    } catch (const std::exception&) {
        return 0;
    }
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string serialize_move(const Move& m) {
    std::ostringstream os;
    switch (m.kind) {
        case MoveKind::R1Up:
            os << "r1up ";
            if (m.dart)
                os << "d=d" << m.dart << " at=" << (m.at_head ? "head" : "tail");
            else
                os << "loop=L" << m.loop;
            os << " side=" << (m.left ? "left" : "right") << " sign=" << (m.sign > 0 ? "+" : "-");
            break;
        case MoveKind::R1Down: os << "r1down f=d" << m.face; break;
        case MoveKind::R2Up:
            os << "r2up a=" << anchor_token(m.a, m.a_loop) << " b=" << anchor_token(m.b, m.b_loop)
               << " over=" << (m.over_a ? "a" : "b");
            if (m.a_loop && m.a_loop == m.b_loop)
                os << " side=" << (m.push_inside ? "in" : "out");
            break;
        case MoveKind::R2Down: os << "r2down f=d" << m.face; break;
        case MoveKind::R3: os << "r3 f=d" << m.face; break;
    }
    return os.str();
}

Move parse_move(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> toks;
    std::string tok;
    while (is >> tok) toks.push_back(tok);
    if (toks.empty()) parse_fail("empty move line");
    std::map<std::string, std::string> kv;
    for (size_t i = 1; i < toks.size(); ++i) {
        size_t eq = toks[i].find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == toks[i].size())
            parse_fail("malformed token '" + toks[i] + "'");
        std::string k = toks[i].substr(0, eq);
        if (kv.count(k)) parse_fail("duplicate key '" + k + "'");
        kv[k] = toks[i].substr(eq + 1);
    }
    auto take = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) parse_fail("missing key '" + k + "'");
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_opt = [&](const std::string& k, const std::string& dflt) {
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto done = [&]() {
        if (!kv.empty()) parse_fail("unknown key '" + kv.begin()->first + "'");
    };
    Move m;
    const std::string& kind = toks[0];
    if (kind == "r1up") {
        m.kind = MoveKind::R1Up;
        if (kv.count("d")) {
            std::string v = take("d");
            m.dart = id_of(v, 'd');
            if (!m.dart) parse_fail("bad dart '" + v + "'");
            std::string at = take_opt("at", "head");
            if (at != "head" && at != "tail") parse_fail("at must be head or tail");
            m.at_head = (at == "head");
        } else {
            std::string v = take("loop");
            m.loop = id_of(v, 'L');
            if (!m.loop) parse_fail("bad loop '" + v + "'");
        }
        std::string side = take("side");
        if (side != "left" && side != "right") parse_fail("side must be left or right");
        m.left = (side == "left");
        std::string sign = take("sign");
        if (sign != "+" && sign != "-") parse_fail("sign must be + or -");
        m.sign = (sign == "+") ? 1 : -1;
        done();
        return m;
    }
    if (kind == "r1down" || kind == "r2down" || kind == "r3") {
        m.kind = (kind == "r1down")   ? MoveKind::R1Down
                 : (kind == "r2down") ? MoveKind::R2Down
                                      : MoveKind::R3;
        std::string v = take("f");
        m.face = id_of(v, 'd');
        if (!m.face) parse_fail("bad face key '" + v + "'");
        done();
        return m;
    }
    if (kind == "r2up") {
        m.kind = MoveKind::R2Up;
        std::string va = take("a"), vb = take("b");
        m.a = id_of(va, 'd');
        m.a_loop = id_of(va, 'L');
        if (!m.a && !m.a_loop) parse_fail("bad anchor '" + va + "'");
        m.b = id_of(vb, 'd');
        m.b_loop = id_of(vb, 'L');
        if (!m.b && !m.b_loop) parse_fail("bad anchor '" + vb + "'");
        std::string ov = take("over");
        if (ov != "a" && ov != "b") parse_fail("over must be a or b");
        m.over_a = (ov == "a");
        std::string side = take_opt("side", "out");
        if (side != "in" && side != "out") parse_fail("side must be in or out");
        m.push_inside = (side == "in");
        done();
        return m;
    }
    parse_fail("unknown move '" + kind + "'");
}

std::string serialize_trace(const MoveTrace& t) {
    std::ostringstream os;
    os << serialize_kdf(t.initial) << "---\n";
    for (const Move& m : t.moves) os << serialize_move(m) << "\n";
    return os.str();
}

MoveTrace parse_trace(const std::string& text) {
    std::istringstream is(text);
    std::string line, kdf;
    bool found = false;
    size_t lineno = 0;
    std::vector<std::pair<size_t, std::string>> mlines;
    while (std::getline(is, line)) {
        ++lineno;
        std::string tl = trim(line);
        if (!found && tl == "---") {
            found = true;
            continue;
        }
        if (!found)
            kdf += line + "\n";
        else if (!tl.empty() && tl[0] != '#')
            mlines.push_back({lineno, tl});
    }
    if (!found) throw ParseError("trace has no --- separator");
    MoveTrace t;
    t.initial = parse_kdf(kdf);
    for (const auto& [n, sline] : mlines) {
        try {
            t.moves.push_back(parse_move(sline));
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return t;
}

}  // namespace reidesort
