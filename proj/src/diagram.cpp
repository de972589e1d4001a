#include "reidesort/diagram.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

namespace reidesort {

std::string to_string(const FaceRef& f) {
    switch (f.kind) {
        case FaceRef::Outer: return "outer";
        case FaceRef::Dart: return "d" + std::to_string(f.id);
        case FaceRef::LoopInside: return "L" + std::to_string(f.id);
    }
    return "?";
}

std::string to_string(const CompKey& c) {
    return c.is_loop ? "loop:" + std::to_string(c.id) : "strand:d" + std::to_string(c.id);
}

void Diagram::bump_counters() {
    for (const auto& [cid, cr] : crossings) {
        next_crossing = std::max(next_crossing, cid + 1);
        for (DartId d : cr.rot) next_dart = std::max(next_dart, d + 1);
    }
    for (const auto& [eid, e] : edges) {
        next_edge = std::max(next_edge, eid + 1);
        next_dart = std::max(next_dart, std::max(e.tail, e.head) + 1);
    }
    for (const auto& [lid, l] : loops) {
        (void)l;
        next_loop = std::max(next_loop, lid + 1);
    }
}

namespace {

struct FaceUF {
    std::map<FaceRef, FaceRef> parent;

    FaceRef find(FaceRef x) {
        auto it = parent.find(x);
        if (it == parent.end() || it->second == x) return x;
        FaceRef r = find(it->second);
        parent[x] = r;
        return r;
    }
    // keeps the minimal representative as root
    void unite(FaceRef a, FaceRef b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace

Topo::Topo(const Diagram& d) : dia(&d) {
    for (const auto& [cid, cr] : d.crossings) {
        for (int s = 0; s < 4; ++s) {
            DartId dt = cr.rot[s];
            if (dt <= 0) throw DiagramError("crossing c" + std::to_string(cid) + " has a null dart");
            auto [it, fresh] = darts.try_emplace(dt);
            if (!fresh) throw DiagramError("dart d" + std::to_string(dt) + " appears in two rotation slots");
            it->second.crossing = cid;
            it->second.slot = s;
        }
    }
    for (const auto& [eid, e] : d.edges) {
        for (int side = 0; side < 2; ++side) {
            DartId dt = side == 0 ? e.tail : e.head;
            auto it = darts.find(dt);
            if (it == darts.end())
                throw DiagramError("edge e" + std::to_string(eid) + " references dart d" + std::to_string(dt) +
                                   " not present at any crossing");
            if (it->second.edge != 0)
                throw DiagramError("dart d" + std::to_string(dt) + " belongs to two edges");
            it->second.edge = eid;
            it->second.is_tail = side == 0;
        }
    }
    for (const auto& [dt, r] : darts)
        if (r.edge == 0) throw DiagramError("dart d" + std::to_string(dt) + " belongs to no edge");

    // face orbits of d -> sigma_inv(alpha(d))
    for (const auto& [dt, r] : darts) {
        (void)r;
        if (face_key.count(dt)) continue;
        std::vector<DartId> orbit;
        DartId cur = dt;
        do {
            orbit.push_back(cur);
            cur = face_next(cur);
            if (orbit.size() > darts.size()) throw DiagramError("face walk does not close");
        } while (cur != dt);
        auto mn = std::min_element(orbit.begin(), orbit.end());
        std::rotate(orbit.begin(), mn, orbit.end());
        for (DartId x : orbit) face_key[x] = orbit.front();
        face_orbits[orbit.front()] = std::move(orbit);
    }

    // connected pieces of the crossing graph
    for (const auto& [cid, cr] : d.crossings) {
        (void)cr;
        if (piece_key.count(cid)) continue;
        std::vector<CrossingId> stack{cid}, members;
        std::set<CrossingId> seen{cid};
        while (!stack.empty()) {
            CrossingId c = stack.back();
            stack.pop_back();
            members.push_back(c);
            for (DartId dt : d.crossings.at(c).rot) {
                CrossingId nb = darts.at(alpha(dt)).crossing;
                if (seen.insert(nb).second) stack.push_back(nb);
            }
        }
        DartId key = 0;
        for (CrossingId c : members)
            for (DartId dt : d.crossings.at(c).rot) key = key == 0 ? dt : std::min(key, dt);
        std::sort(members.begin(), members.end());
        for (CrossingId c : members) piece_key[c] = key;
        pieces[key] = std::move(members);
    }

    // placements -> per-piece external face and container
    for (const auto& pl : d.placements) {
        auto it = darts.find(pl.external);
        if (it == darts.end())
            throw DiagramError("placement references missing dart d" + std::to_string(pl.external));
        DartId pk = piece_key.at(it->second.crossing);
        if (piece_external.count(pk))
            throw DiagramError("piece d" + std::to_string(pk) + " has two placements");
        piece_external[pk] = face_key.at(pl.external);
        FaceRef cont = pl.container;
        if (cont.kind == FaceRef::Dart) {
            if (!darts.count(cont.id))
                throw DiagramError("placement container references missing dart d" + std::to_string(cont.id));
            cont = FaceRef::dart(face_key.at(cont.id));
        } else if (cont.kind == FaceRef::LoopInside && !d.loops.count(cont.id)) {
            throw DiagramError("placement container references missing loop L" + std::to_string(cont.id));
        }
        piece_container[pk] = cont;
    }
    for (const auto& [key, members] : pieces) {
        (void)members;
        if (!piece_external.count(key))
            throw DiagramError("piece d" + std::to_string(key) + " has no placement");
    }

    // components: orbits under {alpha, opposite}
    for (const auto& [dt, r] : darts) {
        (void)r;
        if (comp_of.count(dt)) continue;
        std::vector<DartId> stack{dt}, members;
        std::set<DartId> seen{dt};
        while (!stack.empty()) {
            DartId x = stack.back();
            stack.pop_back();
            members.push_back(x);
            for (DartId nb : {alpha(x), opposite(x)})
                if (seen.insert(nb).second) stack.push_back(nb);
        }
        CompKey ck = CompKey::strand(*std::min_element(members.begin(), members.end()));
        for (DartId x : members) comp_of[x] = ck;
    }
    {
        std::set<CompKey> cs;
        for (const auto& [dt, ck] : comp_of) {
            (void)dt;
            cs.insert(ck);
        }
        for (const auto& [lid, l] : d.loops) {
            (void)l;
            cs.insert(CompKey::loop(lid));
        }
        components.assign(cs.begin(), cs.end());
    }

    // composite regions: placement links merge a piece's external orbit
    // with the face containing the piece
    {
        FaceUF uf;
        for (const auto& [pk, ext] : piece_external)
            uf.unite(FaceRef::dart(ext), piece_container.at(pk));
        auto norm = [&](FaceRef n) { return uf.find(n); };
        region[FaceRef::outer()] = norm(FaceRef::outer());
        for (const auto& [key, orbit] : face_orbits) {
            (void)orbit;
            region[FaceRef::dart(key)] = norm(FaceRef::dart(key));
        }
        for (const auto& [lid, l] : d.loops) {
            (void)l;
            region[FaceRef::loop_inside(lid)] = norm(FaceRef::loop_inside(lid));
        }
    }
    for (const auto& [pk, cont] : piece_container) region_pieces[region_of(cont)].push_back(pk);
    for (const auto& [lid, l] : d.loops) {
        FaceRef cont = l.container;
        if (cont.kind == FaceRef::Dart) {
            if (!darts.count(cont.id))
                throw DiagramError("loop L" + std::to_string(lid) + " container references missing dart");
            cont = FaceRef::dart(face_key.at(cont.id));
        } else if (cont.kind == FaceRef::LoopInside && !d.loops.count(cont.id)) {
            throw DiagramError("loop L" + std::to_string(lid) + " container references missing loop");
        }
        region_loops[region_of(cont)].push_back(lid);
    }
}

const DartRec& Topo::rec(DartId d) const {
    auto it = darts.find(d);
    if (it == darts.end()) throw DiagramError("unknown dart d" + std::to_string(d));
    return it->second;
}

DartId Topo::alpha(DartId d) const {
    const Edge& e = dia->edges.at(rec(d).edge);
    return e.tail == d ? e.head : e.tail;
}

DartId Topo::sigma(DartId d) const {
    const DartRec& r = rec(d);
    return dia->crossings.at(r.crossing).rot[(r.slot + 1) % 4];
}

DartId Topo::sigma_inv(DartId d) const {
    const DartRec& r = rec(d);
    return dia->crossings.at(r.crossing).rot[(r.slot + 3) % 4];
}

DartId Topo::opposite(DartId d) const {
    const DartRec& r = rec(d);
    return dia->crossings.at(r.crossing).rot[(r.slot + 2) % 4];
}

bool Topo::over(DartId d) const {
    const DartRec& r = rec(d);
    return (r.slot % 2) == dia->crossings.at(r.crossing).over;
}

FaceRef Topo::region_of(FaceRef node) const {
    if (node.kind == FaceRef::Dart) node = FaceRef::dart(face_key.at(node.id));
    return region.at(node);
}

void Validation::fail(const std::string& code, const std::string& message) {
    ok = false;
    issues.push_back({code, message});
}

std::string Validation::summary() const {
    std::ostringstream os;
    for (const auto& i : issues) os << "[" << i.code << "] " << i.message << "\n";
    return os.str();
}

Validation validate(const Diagram& d) {
    Validation v;

    std::map<DartId, CrossingId> dart_site;
    for (const auto& [cid, cr] : d.crossings) {
        if (cr.id != cid) v.fail("id-mismatch", "crossing map key c" + std::to_string(cid) + " != record id");
        if (cr.over != 0 && cr.over != 1)
            v.fail("over-range", "crossing c" + std::to_string(cid) + " over flag out of range");
        if (cid >= d.next_crossing) v.fail("counters", "crossing id c" + std::to_string(cid) + " >= next_crossing");
        for (DartId dt : cr.rot) {
            if (dt <= 0) {
                v.fail("dart-range", "crossing c" + std::to_string(cid) + " has dart id <= 0");
                continue;
            }
            if (dt >= d.next_dart) v.fail("counters", "dart d" + std::to_string(dt) + " >= next_dart");
            if (!dart_site.emplace(dt, cid).second)
                v.fail("dart-dup", "dart d" + std::to_string(dt) + " appears twice");
        }
    }
    std::map<DartId, std::pair<EdgeId, bool>> dart_edge;
    for (const auto& [eid, e] : d.edges) {
        if (e.id != eid) v.fail("id-mismatch", "edge map key e" + std::to_string(eid) + " != record id");
        if (eid >= d.next_edge) v.fail("counters", "edge id e" + std::to_string(eid) + " >= next_edge");
        if (e.tail == e.head) v.fail("edge-degenerate", "edge e" + std::to_string(eid) + " has tail == head");
        for (int side = 0; side < 2; ++side) {
            DartId dt = side == 0 ? e.tail : e.head;
            if (!dart_site.count(dt)) {
                v.fail("edge-dangling", "edge e" + std::to_string(eid) + " references dart d" +
                                            std::to_string(dt) + " absent from all crossings");
                continue;
            }
            if (!dart_edge.emplace(dt, std::make_pair(eid, side == 0)).second)
                v.fail("edge-dup", "dart d" + std::to_string(dt) + " belongs to two edge ends");
        }
    }
    for (const auto& [dt, cid] : dart_site) {
        (void)cid;
        if (!dart_edge.count(dt)) v.fail("dart-no-edge", "dart d" + std::to_string(dt) + " belongs to no edge");
    }
    for (const auto& [lid, l] : d.loops) {
        if (l.id != lid) v.fail("id-mismatch", "loop map key L" + std::to_string(lid) + " != record id");
        if (lid >= d.next_loop) v.fail("counters", "loop id L" + std::to_string(lid) + " >= next_loop");
    }
    // each passage carries the strand through: one dart in, one out
    for (const auto& [cid, cr] : d.crossings) {
        for (int p = 0; p < 2 && v.ok; ++p) {
            auto a = dart_edge.find(cr.rot[p]);
            auto b = dart_edge.find(cr.rot[p + 2]);
            if (a == dart_edge.end() || b == dart_edge.end()) continue;
            if (a->second.second == b->second.second)
                v.fail("orientation", "crossing c" + std::to_string(cid) + " passage " + std::to_string(p) +
                                          " is not one-in-one-out");
        }
    }
    if (!v.ok) return v;

    std::optional<Topo> topo;
    try {
        topo.emplace(d);
    } catch (const DiagramError& err) {
        v.fail("structure", err.what());
        return v;
    }
    const Topo& t = *topo;

    if (d.placements.size() != t.pieces.size())
        v.fail("placement-count", "diagram has " + std::to_string(t.pieces.size()) + " pieces but " +
                                      std::to_string(d.placements.size()) + " placements");

    // containers must point at owning faces, and the containment forest
    // must be acyclic with every node reaching the outer face
    auto container_owner_ok = [&](FaceRef cont, DartId self_piece, const std::string& what) {
        if (cont.kind != FaceRef::Dart) return;
        DartId fk = t.face_key.at(cont.id);
        DartId host = t.piece_key.at(t.rec(cont.id).crossing);
        if (self_piece != 0 && host == self_piece)
            v.fail("container-self", what + " is placed inside a face of its own piece");
        if (t.piece_external.at(host) == fk)
            v.fail("container-not-owner",
                   what + " container " + to_string(cont) + " is the external orbit of its piece");
    };
    for (const auto& [pk, cont] : t.piece_container)
        container_owner_ok(cont, pk, "piece d" + std::to_string(pk));
    for (const auto& [lid, l] : d.loops) container_owner_ok(l.container, 0, "loop L" + std::to_string(lid));
    if (!v.ok) return v;

    // forest walk: node -> parent node
    using Node = std::pair<int, int>;  // (0 piece, 1 loop), id
    auto parent_of = [&](Node n) -> std::pair<bool, Node> {
        FaceRef cont =
            n.first == 0 ? t.piece_container.at(n.second) : [&] {
                FaceRef c = d.loops.at(n.second).container;
                if (c.kind == FaceRef::Dart) c = FaceRef::dart(t.face_key.at(c.id));
                return c;
            }();
        if (cont.kind == FaceRef::Outer) return {false, {}};
        if (cont.kind == FaceRef::Dart)
            return {true, {0, t.piece_key.at(t.rec(cont.id).crossing)}};
        return {true, {1, cont.id}};
    };
    std::vector<Node> nodes;
    for (const auto& [pk, m] : t.pieces) {
        (void)m;
        nodes.push_back({0, pk});
    }
    for (const auto& [lid, l] : d.loops) {
        (void)l;
        nodes.push_back({1, lid});
    }
    for (Node n : nodes) {
        std::set<Node> seen{n};
        Node cur = n;
        for (;;) {
            auto [has, p] = parent_of(cur);
            if (!has) break;
            if (!seen.insert(p).second) {
                v.fail("containment-cycle", "placement forest has a cycle");
                break;
            }
            cur = p;
        }
        if (!v.ok) break;
    }
    if (!v.ok) return v;

    // per-piece Euler characteristic (sphere): V - E + F == 2
    for (const auto& [pk, members] : t.pieces) {
        int V = (int)members.size();
        std::set<EdgeId> es;
        int F = 0;
        for (CrossingId c : members)
            for (DartId dt : d.crossings.at(c).rot) es.insert(t.rec(dt).edge);
        for (const auto& [fk, orbit] : t.face_orbits) {
            (void)orbit;
            if (t.piece_key.at(t.rec(fk).crossing) == pk) ++F;
        }
        if (V - (int)es.size() + F != 2)
            v.fail("euler", "piece d" + std::to_string(pk) + " violates V-E+F=2 (not a planar rotation)");
    }
    return v;
}

void require_valid(const Diagram& d) {
    Validation v = validate(d);
    if (!v.ok) throw DiagramError("invalid diagram:\n" + v.summary());
}

std::vector<CompKey> components(const Diagram& d) {
    return Topo(d).components;
}

namespace {

SideSplit side_split_ex(const Diagram& d, const Topo& t, const std::vector<WalkStep>& walk,
                        const std::vector<std::pair<FaceRef, FaceRef>>& extra,
                        const std::set<EdgeId>& extra_uncrossable) {
    if (walk.empty()) throw DiagramError("side_split: empty walk");
    FaceUF uf;
    for (const auto& [pk, ext] : t.piece_external) uf.unite(FaceRef::dart(ext), t.piece_container.at(pk));
    for (const auto& [lid, l] : d.loops) {
        FaceRef cont = l.container;
        if (cont.kind == FaceRef::Dart) cont = FaceRef::dart(t.face_key.at(cont.id));
        uf.unite(FaceRef::loop_inside(lid), cont);
    }
    for (const auto& [a, b] : extra) uf.unite(a, b);

    std::set<EdgeId> walk_edges;
    for (size_t i = 0; i < walk.size(); ++i) {
        const WalkStep& s = walk[i];
        if (t.rec(s.exit).is_tail == false) throw DiagramError("side_split: walk exit is not a tail dart");
        walk_edges.insert(t.rec(s.exit).edge);
        DartId nxt = walk[(i + 1) % walk.size()].entry;
        if (t.alpha(s.exit) != nxt) throw DiagramError("side_split: walk is not alpha-chained");
    }
    for (const auto& [eid, e] : d.edges) {
        if (walk_edges.count(eid) || extra_uncrossable.count(eid)) continue;
        uf.unite(t.face_node(e.tail), t.face_node(e.head));
    }

    SideSplit out;
    out.left = uf.find(t.face_node(walk.front().exit));
    out.right = uf.find(t.face_node(t.sigma_inv(walk.front().exit)));
    for (const WalkStep& s : walk) {
        if (uf.find(t.face_node(s.exit)) != out.left ||
            uf.find(t.face_node(t.sigma_inv(s.entry))) != out.left)
            throw DiagramError("side_split: left side of walk is not a single class");
        if (uf.find(t.face_node(t.sigma_inv(s.exit))) != out.right ||
            uf.find(t.face_node(s.entry)) != out.right)
            throw DiagramError("side_split: right side of walk is not a single class");
    }
    if (out.left == out.right) throw DiagramError("side_split: walk does not separate the plane");
    out.outer_side = uf.find(FaceRef::outer());
    if (out.outer_side != out.left && out.outer_side != out.right)
        throw DiagramError("side_split: outer face class is neither side");
    for (const auto& [node, rep] : t.region) {
        (void)rep;
        out.cls[node] = uf.find(node);
    }
    return out;
}

}  // namespace

FaceRef SideSplit::side_of(FaceRef node) const {
    return cls.at(node);
}

SideSplit side_split(const Diagram& d, const Topo& t, const std::vector<WalkStep>& walk) {
    return side_split_ex(d, t, walk, {}, {});
}

bool walk_is_ccw(const Diagram& d, const Topo& t, const std::vector<WalkStep>& walk) {
    return side_split(d, t, walk).ccw();
}

namespace {

// strand walk for a smoothed circle: at self-crossings of the component we
// turn to the orientation-respecting rotation neighbor, elsewhere we pass
// straight through
struct Smoothing {
    std::set<CrossingId> self_crossings;
    std::map<DartId, DartId> turn;  // entry dart -> exit dart at self-crossings

    Smoothing(const Diagram& d, const Topo& t, CompKey c) {
        for (const auto& [cid, cr] : d.crossings) {
            bool all = true;
            for (DartId dt : cr.rot) all = all && t.comp_of.at(dt) == c;
            if (!all) continue;
            self_crossings.insert(cid);
            for (DartId dt : cr.rot) {
                if (t.rec(dt).is_tail) continue;
                DartId a = t.sigma(dt), b = t.sigma_inv(dt);
                bool at = t.rec(a).is_tail, bt = t.rec(b).is_tail;
                if (at == bt) throw DiagramError("smoothing: crossing passage orientation broken");
                turn[dt] = at ? a : b;
            }
        }
    }
};

}  // namespace

int winding_number(const Diagram& d, CompKey c) {
    if (c.is_loop) return d.loops.at(c.id).ccw ? 1 : -1;
    Topo t(d);
    if (!t.comp_of.count(c.id) || t.comp_of.at(c.id) != c)
        throw DiagramError("winding_number: unknown component " + to_string(c));
    Smoothing sm(d, t, c);

    // mid-corner unions let region classes flow around each smoothed
    // crossing between its two arcs
    std::vector<std::pair<FaceRef, FaceRef>> base;
    std::map<DartId, DartId> arc_cut;  // entry dart -> cut corner dart of its arc
    for (CrossingId cid : sm.self_crossings) {
        const Crossing& cr = d.crossings.at(cid);
        std::set<DartId> cut;
        for (DartId dt : cr.rot) {
            if (t.rec(dt).is_tail) continue;
            DartId w = sm.turn.at(dt);
            DartId cd = (w == t.sigma(dt)) ? dt : w;
            cut.insert(cd);
            arc_cut[dt] = cd;
        }
        std::vector<FaceRef> mids;
        for (DartId dt : cr.rot)
            if (!cut.count(dt)) mids.push_back(t.face_node(dt));
        if (mids.size() != 2) throw DiagramError("smoothing: expected two mid corners");
        base.emplace_back(mids[0], mids[1]);
    }

    // split the component's directed edges into smoothed circles
    std::map<EdgeId, int> circle_of;
    std::vector<std::vector<WalkStep>> circles;
    for (const auto& [eid, e] : d.edges) {
        if (t.comp_of.at(e.tail) != c || circle_of.count(eid)) continue;
        std::vector<WalkStep> steps;
        EdgeId cur = eid;
        do {
            circle_of[cur] = (int)circles.size();
            DartId h = d.edges.at(cur).head;
            DartId exit = sm.turn.count(h) ? sm.turn.at(h) : t.opposite(h);
            steps.push_back({h, exit});
            cur = t.rec(exit).edge;
        } while (cur != eid);
        circles.push_back(std::move(steps));
    }

    int winding = 0;
    for (size_t ci = 0; ci < circles.size(); ++ci) {
        const auto& walk = circles[ci];
        std::set<EdgeId> walk_edges;
        for (const WalkStep& s : walk) walk_edges.insert(t.rec(s.exit).edge);
        // arcs of other circles at smoothed crossings are crossable: merge
        // each such arc's cut corner into the mid band
        std::vector<std::pair<FaceRef, FaceRef>> extra = base;
        for (const auto& [entry, cd] : arc_cut) {
            if (walk_edges.count(t.rec(entry).edge)) continue;
            const Crossing& cr = d.crossings.at(t.rec(entry).crossing);
            for (DartId dt : cr.rot) {
                bool is_cut = false;
                for (DartId e2 : cr.rot)
                    if (!t.rec(e2).is_tail && arc_cut.at(e2) == dt) is_cut = true;
                if (!is_cut) {
                    extra.emplace_back(t.face_node(cd), t.face_node(dt));
                    break;
                }
            }
        }
        SideSplit ss = side_split_ex(d, t, walk, extra, {});
        winding += ss.ccw() ? 1 : -1;
    }
    return winding;
}

int crossing_sign(const Topo& t, const Crossing& cr) {
    DartId over_out = 0, under_out = 0;
    for (DartId dt : cr.rot)
        if (t.rec(dt).is_tail) (t.over(dt) ? over_out : under_out) = dt;
    if (!over_out || !under_out) throw DiagramError("crossing without two outgoing darts");
    return t.sigma(over_out) == under_out ? 1 : -1;
}

int framing(const Diagram& d, CompKey c) {
    if (c.is_loop) return 0;
    Topo t(d);
    if (!t.comp_of.count(c.id) || t.comp_of.at(c.id) != c)
        throw DiagramError("framing: unknown component " + to_string(c));
    int sum = 0;
    for (const auto& [cid, cr] : d.crossings) {
        (void)cid;
        bool all = true;
        for (DartId dt : cr.rot) all = all && t.comp_of.at(dt) == c;
        if (all) sum += crossing_sign(t, cr);
    }
    return sum;
}

int writhe(const Diagram& d) {
    Topo t(d);
    int sum = 0;
    for (const auto& [cid, cr] : d.crossings) {
        (void)cid;
        sum += crossing_sign(t, cr);
    }
    return sum;
}

Diagram mirror(const Diagram& d) {
    Topo t(d);
    Diagram m = d;
    for (auto& [cid, cr] : m.crossings) {
        (void)cid;
        cr.rot = {cr.rot[0], cr.rot[3], cr.rot[2], cr.rot[1]};
        // the same dart set stays on top; reflection does not lift strands
    }
    // reflection renames corners: the region between rays d and sigma(d)
    // is bordered by sigma(d) once the rotation is reversed
    auto flip_ref = [&](FaceRef r) {
        return r.kind == FaceRef::Dart ? FaceRef::dart(t.sigma(r.id)) : r;
    };
    for (auto& [lid, l] : m.loops) {
        (void)lid;
        l.ccw = !l.ccw;
        l.container = flip_ref(l.container);
    }
    for (auto& pl : m.placements) {
        pl.external = t.sigma(pl.external);
        pl.container = flip_ref(pl.container);
    }
    return m;
}

namespace {

// containment forest node
struct FNode {
    int kind = 0;  // 0 piece (id = piece key dart), 1 loop (id = loop id)
    int id = 0;
    friend auto operator<=>(const FNode&, const FNode&) = default;
};

struct Labeling {
    std::map<DartId, int> label;       // dart -> 1..n
    std::vector<DartId> by_label;      // [0] unused
};

Labeling bfs_label(const Topo& t, DartId root) {
    Labeling lb;
    lb.by_label.push_back(0);
    std::vector<DartId> queue{root};
    lb.label[root] = 1;
    lb.by_label.push_back(root);
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        DartId d = queue[qi];
        for (DartId nb : {t.alpha(d), t.sigma(d)}) {
            if (lb.label.count(nb)) continue;
            lb.label[nb] = (int)lb.by_label.size();
            lb.by_label.push_back(nb);
            queue.push_back(nb);
        }
    }
    return lb;
}

struct CanonCtx {
    const Diagram* d;
    const Topo* t;
    std::map<FNode, std::vector<FNode>> children;       // parent -> children (any order)
    std::map<FNode, FaceRef> child_container;           // child -> normalized container
    std::map<FNode, std::string> code;                  // node -> canonical code
    std::map<FNode, Labeling> best;                     // piece node -> winning labeling
    std::map<FNode, std::vector<FNode>> order;          // node -> children in canonical order
};

std::string piece_code_for(CanonCtx& cx, FNode n, DartId root, Labeling* keep) {
    const Topo& t = *cx.t;
    Labeling lb = bfs_label(t, root);
    std::ostringstream os;
    int ndarts = (int)lb.by_label.size() - 1;
    os << "P" << ndarts << ":";
    for (int L = 1; L <= ndarts; ++L) {
        DartId dt = lb.by_label[L];
        os << lb.label.at(t.alpha(dt)) << "," << lb.label.at(t.sigma(dt)) << ","
           << (t.rec(dt).is_tail ? 1 : 0) << (t.over(dt) ? 1 : 0) << ";";
    }
    // group children by the minimal label of their container orbit
    std::map<int, std::vector<std::string>> blocks;
    std::map<int, std::vector<FNode>> block_nodes;
    for (FNode ch : cx.children[n]) {
        FaceRef cont = cx.child_container.at(ch);
        const auto& orbit = t.face_orbits.at(cont.id);
        int ml = lb.label.at(orbit.front());
        for (DartId x : orbit) ml = std::min(ml, lb.label.at(x));
        blocks[ml].push_back(cx.code.at(ch));
        block_nodes[ml].push_back(ch);
    }
    for (auto& [ml, codes] : blocks) {
        auto& ns = block_nodes[ml];
        std::vector<size_t> idx(codes.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return codes[a] != codes[b] ? codes[a] < codes[b] : ns[a] < ns[b];
        });
        os << "[" << ml << ":";
        std::vector<FNode> ordered;
        for (size_t i : idx) {
            os << codes[i] << "|";
            ordered.push_back(ns[i]);
        }
        os << "]";
        block_nodes[ml] = ordered;
    }
    if (keep) {
        *keep = lb;
        std::vector<FNode> ord;
        for (auto& [ml, ns] : block_nodes)
            for (FNode ch : ns) ord.push_back(ch);
        cx.order[n] = ord;
    }
    return os.str();
}

void compute_code(CanonCtx& cx, FNode n) {
    for (FNode ch : cx.children[n]) compute_code(cx, ch);
    if (n.kind == 1) {
        std::vector<std::pair<std::string, FNode>> kid;
        for (FNode ch : cx.children[n]) kid.emplace_back(cx.code.at(ch), ch);
        std::sort(kid.begin(), kid.end());
        std::ostringstream os;
        os << "(L" << (cx.d->loops.at(n.id).ccw ? "+" : "-");
        for (auto& [c, ch] : kid) {
            (void)ch;
            os << c << "|";
        }
        os << ")";
        cx.code[n] = os.str();
        std::vector<FNode> ord;
        for (auto& [c, ch] : kid) {
            (void)c;
            ord.push_back(ch);
        }
        cx.order[n] = ord;
        return;
    }
    const Topo& t = *cx.t;
    DartId ext = t.piece_external.at(n.id);
    std::string bestcode;
    DartId bestroot = 0;
    for (DartId r : t.face_orbits.at(ext)) {
        std::string c = piece_code_for(cx, n, r, nullptr);
        if (bestroot == 0 || c < bestcode || (c == bestcode && r < bestroot)) {
            bestcode = std::move(c);
            bestroot = r;
        }
    }
    // recompute with the winning root to keep its labeling and child order
    Labeling lb;
    std::string final_code = piece_code_for(cx, n, bestroot, &lb);
    cx.code[n] = final_code;
    cx.best[n] = std::move(lb);
}

CanonCtx build_canon_ctx(const Diagram& d, const Topo& t) {
    CanonCtx cx;
    cx.d = &d;
    cx.t = &t;
    auto parent_node = [&](FaceRef cont) -> std::pair<bool, FNode> {
        if (cont.kind == FaceRef::Outer) return {false, {}};
        if (cont.kind == FaceRef::Dart) return {true, {0, t.piece_key.at(t.rec(cont.id).crossing)}};
        return {true, {1, cont.id}};
    };
    for (const auto& [pk, cont] : t.piece_container) {
        FNode n{0, pk};
        FaceRef c = cont;
        auto [has, p] = parent_node(c);
        cx.child_container[n] = c;
        cx.children[has ? p : FNode{2, 0}].push_back(n);
    }
    for (const auto& [lid, l] : d.loops) {
        FNode n{1, lid};
        FaceRef c = l.container;
        if (c.kind == FaceRef::Dart) c = FaceRef::dart(t.face_key.at(c.id));
        auto [has, p] = parent_node(c);
        cx.child_container[n] = c;
        cx.children[has ? p : FNode{2, 0}].push_back(n);
    }
    return cx;
}

}  // namespace

std::string canonical_code(const Diagram& d) {
    if (d.empty()) return "empty";
    Topo t(d);
    CanonCtx cx = build_canon_ctx(d, t);
    std::vector<std::pair<std::string, FNode>> roots;
    for (FNode r : cx.children[FNode{2, 0}]) {
        compute_code(cx, r);
        roots.emplace_back(cx.code.at(r), r);
    }
    std::sort(roots.begin(), roots.end());
    std::string out = "v1:";
    for (auto& [c, n] : roots) {
        (void)n;
        out += c;
        out += "/";
    }
    return out;
}

Canonical canonicalize(const Diagram& d) {
    Canonical out;
    if (d.empty()) {
        out.diagram = Diagram{};
        return out;
    }
    Topo t(d);
    CanonCtx cx = build_canon_ctx(d, t);
    std::vector<std::pair<std::string, FNode>> roots;
    for (FNode r : cx.children[FNode{2, 0}]) {
        compute_code(cx, r);
        roots.emplace_back(cx.code.at(r), r);
    }
    std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second < b.second;
    });

    Diagram nd;
    // forest traversal in canonical order assigning fresh ids
    std::vector<FNode> stack;
    for (auto it = roots.rbegin(); it != roots.rend(); ++it) stack.push_back(it->second);
    std::map<FNode, LoopId> new_loop;
    std::vector<FNode> visit;
    while (!stack.empty()) {
        FNode n = stack.back();
        stack.pop_back();
        visit.push_back(n);
        const auto& ord = cx.order[n];
        for (auto it = ord.rbegin(); it != ord.rend(); ++it) stack.push_back(*it);
    }
    for (FNode n : visit) {
        if (n.kind == 0) {
            const Labeling& lb = cx.best.at(n);
            int base = nd.next_dart - 1;
            for (int L = 1; L < (int)lb.by_label.size(); ++L) {
                DartId old = lb.by_label[L];
                out.dart_map[old] = base + L;
            }
            nd.next_dart += (int)lb.by_label.size() - 1;
            // crossings ordered by their minimal new dart
            std::vector<std::pair<DartId, CrossingId>> crs;
            for (CrossingId c : t.pieces.at(n.id)) {
                DartId mn = 0;
                for (DartId dt : d.crossings.at(c).rot) {
                    DartId nw = out.dart_map.at(dt);
                    mn = mn == 0 ? nw : std::min(mn, nw);
                }
                crs.emplace_back(mn, c);
            }
            std::sort(crs.begin(), crs.end());
            for (auto& [mn, c] : crs) {
                (void)mn;
                const Crossing& cr = d.crossings.at(c);
                Crossing nc;
                nc.id = nd.fresh_crossing();
                out.crossing_map[c] = nc.id;
                // rotate so the minimal new dart sits in slot 0; an odd
                // rotation moves the over pair to the other slot parity
                std::array<DartId, 4> rot;
                for (int s = 0; s < 4; ++s) rot[s] = out.dart_map.at(cr.rot[s]);
                int ms = 0;
                for (int s = 1; s < 4; ++s)
                    if (rot[s] < rot[ms]) ms = s;
                nc.rot = {rot[ms], rot[(ms + 1) % 4], rot[(ms + 2) % 4], rot[(ms + 3) % 4]};
                nc.over = (cr.over + ms) % 2;
                nd.crossings[nc.id] = nc;
            }
            // edges of this piece ordered by minimal new dart
            std::vector<std::pair<DartId, EdgeId>> evs;
            for (CrossingId c : t.pieces.at(n.id))
                for (DartId dt : d.crossings.at(c).rot)
                    if (t.rec(dt).is_tail)
                        evs.emplace_back(std::min(out.dart_map.at(dt), out.dart_map.at(t.alpha(dt))),
                                         t.rec(dt).edge);
            std::sort(evs.begin(), evs.end());
            for (auto& [mn, e] : evs) {
                (void)mn;
                const Edge& oe = d.edges.at(e);
                Edge ne;
                ne.id = nd.fresh_edge();
                out.edge_map[e] = ne.id;
                ne.tail = out.dart_map.at(oe.tail);
                ne.head = out.dart_map.at(oe.head);
                nd.edges[ne.id] = ne;
            }
        } else {
            FreeLoop nl;
            nl.id = nd.fresh_loop();
            out.loop_map[n.id] = nl.id;
            nl.ccw = d.loops.at(n.id).ccw;
            new_loop[n] = nl.id;
            nd.loops[nl.id] = nl;
        }
    }
    // containers and placements after all ids exist
    auto map_ref = [&](FaceRef c) -> FaceRef {
        if (c.kind == FaceRef::Outer) return c;
        if (c.kind == FaceRef::LoopInside) return FaceRef::loop_inside(out.loop_map.at(c.id));
        const auto& orbit = t.face_orbits.at(t.face_key.at(c.id));
        DartId mn = 0;
        for (DartId x : orbit) {
            DartId nw = out.dart_map.at(x);
            mn = mn == 0 ? nw : std::min(mn, nw);
        }
        return FaceRef::dart(mn);
    };
    for (const auto& [pk, cont] : t.piece_container) {
        Placement pl;
        const auto& orbit = t.face_orbits.at(t.piece_external.at(pk));
        DartId mn = 0;
        for (DartId x : orbit) {
            DartId nw = out.dart_map.at(x);
            mn = mn == 0 ? nw : std::min(mn, nw);
        }
        pl.external = mn;
        pl.container = map_ref(cont);
        nd.placements.push_back(pl);
    }
    for (const auto& [lid, l] : d.loops) nd.loops.at(out.loop_map.at(lid)).container = map_ref(l.container);
    std::sort(nd.placements.begin(), nd.placements.end());
    out.diagram = std::move(nd);
    return out;
}

bool isomorphic(const Diagram& a, const Diagram& b) {
    return canonical_code(a) == canonical_code(b);
}

}  // namespace reidesort
