#include "reidesort/decorations.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace reidesort {

namespace {

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

DartId anchor_dart(const Diagram& d, const Topo& t, DartId start, bool left) {
    if (!t.darts.count(start)) throw MoveError("no dart d" + std::to_string(start));
    const Edge& e = d.edges.at(t.rec(start).edge);
    return left ? e.tail : e.head;
}

// Walks the path through the region graph of d, verifying every hop crosses
// a reachable edge and the walk ends in the terminal face's region.
void check_walkable(const Diagram& d, const Topo& t, const CorePath& p) {
    FaceRef r = t.region_of(t.face_node(anchor_dart(d, t, p.start_dart, p.start_left)));
    for (const CorePath::Hop& h : p.hops) {
        auto it = d.edges.find(h.edge);
        if (it == d.edges.end()) throw MoveError("no edge e" + std::to_string(h.edge));
        FaceRef L = t.region_of(t.face_node(it->second.tail));
        FaceRef R = t.region_of(t.face_node(it->second.head));
        if (r == L)
            r = R;
        else if (r == R)
            r = L;
        else
            throw MoveError("path cannot reach edge e" + std::to_string(h.edge));
    }
    if (!t.face_orbits.count(p.terminal))
        throw MoveError("no face keyed d" + std::to_string(p.terminal));
    if (t.region_of(FaceRef::dart(p.terminal)) != r)
        throw MoveError("path does not end in face d" + std::to_string(p.terminal));
}

// Growth state of one finger. anchor is the dart whose face the tip pokes
// into: the root flank before the first push, the cap's forward dart after.
struct Finger {
    Diagram cur;
    std::map<EdgeId, EdgeId> orig;  // current edge -> edge of the base diagram
    EdgeId cap = 0;
    DartId anchor = 0;
    std::set<DartId> root_ends;
    std::set<EdgeId> strand;  // finger pieces other than the cap
    Decoration dec;
};

Finger start_finger(const Diagram& d, const Topo& t, const CorePath& p, DecorationLedger& led) {
    Finger f;
    f.cur = d;
    for (const auto& [eid, e] : d.edges) {
        (void)e;
        f.orig[eid] = eid;
    }
    f.anchor = anchor_dart(d, t, p.start_dart, p.start_left);
    const Edge& root = d.edges.at(t.rec(p.start_dart).edge);
    f.root_ends = {root.tail, root.head};
    f.dec.order = static_cast<int>(led.decorations.size());
    return f;
}

// One type-two push of the finger tip across b's edge, under unless over.
ApplyResult push_finger(Finger& f, DecorationLedger& led, DartId b, bool over) {
    Topo t(f.cur);
    EdgeId pushed = t.rec(f.anchor).edge;
    bool first = (f.cap == 0);
    Move m = Move::r2up(f.anchor, b, over);
    ApplyResult ar = apply(f.cur, m);
    for (const auto& [old, pieces] : ar.edge_splits) {
        EdgeId o = f.orig.at(old);
        f.orig.erase(old);
        for (EdgeId pc : pieces) f.orig[pc] = o;
    }
    const std::vector<EdgeId>& pieces = ar.edge_splits.at(pushed);
    f.cap = pieces[pieces.size() / 2];
    for (EdgeId pc : pieces) {
        if (pc == f.cap) continue;
        if (first) {
            const Edge& pe = ar.diagram.edges.at(pc);
            if (f.root_ends.count(pe.tail) || f.root_ends.count(pe.head)) continue;
        }
        f.strand.insert(pc);
    }
    Topo t2(ar.diagram);
    const Edge& ce = ar.diagram.edges.at(f.cap);
    f.anchor = (t2.face_key.at(ce.tail) == ar.created_face) ? ce.head : ce.tail;
    f.dec.crossings.insert(ar.new_crossings.begin(), ar.new_crossings.end());
    f.dec.moves.push_back(m);
    led.transport(ar);
    f.cur = ar.diagram;
    return ar;
}

// Picks the dart the next hop crosses: the smallest dart on the tip's region
// whose edge descends from want and is not part of the finger itself.
DartId resolve_hop(const Finger& f, const Topo& t, EdgeId want) {
    FaceRef region = t.region_of(t.face_node(f.anchor));
    for (const auto& [did, rec] : t.darts) {
        EdgeId e = rec.edge;
        if (f.orig.at(e) != want || e == f.cap || f.strand.count(e)) continue;
        if (t.region_of(t.face_node(did)) == region) return did;
    }
    throw MoveError("path cannot cross edge e" + std::to_string(want));
}

Finger realize_tail(const Diagram& d, const CorePath& p, DecorationLedger& led) {
    require_valid(d);
    Topo t0(d);
    check_walkable(d, t0, p);
    Finger f = start_finger(d, t0, p, led);
    for (const CorePath::Hop& h : p.hops) {
        Topo t(f.cur);
        push_finger(f, led, resolve_hop(f, t, h.edge), h.over);
    }
    return f;
}

std::string hop_list(const std::vector<CorePath::Hop>& hops) {
    std::ostringstream os;
    for (size_t i = 0; i < hops.size(); ++i) {
        if (i) os << ',';
        os << 'e' << hops[i].edge << ':' << (hops[i].over ? 'o' : 'u');
    }
    return os.str();
}

}  // namespace

std::string serialize_decoration(const DecorationRequest& r) {
    std::ostringstream os;
    os << (r.lollipop ? "lollipop" : "tail");
    os << " start=d" << r.path.start_dart << ':' << (r.path.start_left ? "left" : "right");
    if (!r.path.hops.empty()) os << " cross=" << hop_list(r.path.hops);
    os << " face=d" << r.path.terminal;
    if (r.lollipop) os << " v=c" << r.vertex;
    return os.str();
}

DecorationRequest parse_decoration(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> toks;
    std::string tok;
    while (is >> tok) toks.push_back(tok);
    if (toks.empty()) parse_fail("empty decoration line");
    DecorationRequest r;
    if (toks[0] == "lollipop")
        r.lollipop = true;
    else if (toks[0] != "tail")
        parse_fail("unknown decoration '" + toks[0] + "'");
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
    std::string start = take("start");
    size_t colon = start.find(':');
    if (colon == std::string::npos) parse_fail("start needs a side");
    r.path.start_dart = id_of(start.substr(0, colon), 'd');
    if (!r.path.start_dart) parse_fail("bad start '" + start + "'");
    std::string side = start.substr(colon + 1);
    if (side != "left" && side != "right") parse_fail("side must be left or right");
    r.path.start_left = (side == "left");
    if (kv.count("cross")) {
        std::string cross = take("cross");
        std::istringstream cs(cross);
        std::string item;
        while (std::getline(cs, item, ',')) {
            size_t c = item.find(':');
            if (c == std::string::npos) parse_fail("crossing needs u or o");
            CorePath::Hop h;
            h.edge = id_of(item.substr(0, c), 'e');
            if (!h.edge) parse_fail("bad edge '" + item + "'");
            std::string uo = item.substr(c + 1);
            if (uo != "u" && uo != "o") parse_fail("crossing must be :u or :o");
            h.over = (uo == "o");
            r.path.hops.push_back(h);
        }
        if (r.path.hops.empty()) parse_fail("empty cross list");
    }
    std::string face = take("face");
    r.path.terminal = id_of(face, 'd');
    if (!r.path.terminal) parse_fail("bad face key '" + face + "'");
    if (r.lollipop) {
        std::string v = take("v");
        r.vertex = id_of(v, 'c');
        if (!r.vertex) parse_fail("bad crossing '" + v + "'");
    }
    if (!kv.empty()) parse_fail("unknown key '" + kv.begin()->first + "'");
    return r;
}

void DecorationLedger::transport(const ApplyResult& ar) {
    for (Decoration& dec : decorations) {
        auto rewrite = [&](std::set<EdgeId>& s) {
            for (const auto& [old, pieces] : ar.edge_splits)
                if (s.erase(old)) s.insert(pieces.begin(), pieces.end());
            for (const auto& [merged, consumed] : ar.edge_merges) {
                bool hit = false;
                for (EdgeId c : consumed) hit = s.erase(c) || hit;
                if (hit) s.insert(merged);
            }
            for (const auto& [lid, consumed] : ar.loop_births) {
                (void)lid;
                for (EdgeId c : consumed) s.erase(c);
            }
        };
        rewrite(dec.tail_edges);
        rewrite(dec.circle_edges);
        for (CrossingId c : ar.removed_crossings) {
            dec.crossings.erase(c);
            dec.circle_crossings.erase(c);
        }
    }
}

std::map<CrossingId, std::vector<std::size_t>> DecorationLedger::circles_by_vertex() const {
    std::map<CrossingId, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < decorations.size(); ++i)
        if (decorations[i].kind == Decoration::Kind::Lollipop)
            out[decorations[i].vertex].push_back(i);
    return out;
}

std::set<EdgeId> DecorationLedger::circle_edges_except(CrossingId v) const {
    std::set<EdgeId> out;
    for (const Decoration& dec : decorations)
        if (dec.kind == Decoration::Kind::Lollipop && dec.vertex != v)
            out.insert(dec.circle_edges.begin(), dec.circle_edges.end());
    return out;
}

DecorateResult add_tail(const Diagram& d, const CorePath& p, DecorationLedger& ledger) {
    Finger f = realize_tail(d, p, ledger);
    f.dec.kind = Decoration::Kind::Tail;
    f.dec.tail_edges = f.strand;
    if (f.cap) f.dec.tail_edges.insert(f.cap);
    ledger.decorations.push_back(f.dec);
    return {std::move(f.cur), f.dec.moves, ledger.decorations.back()};
}

DecorateResult add_lollipop(const Diagram& d, const CorePath& p, CrossingId v,
                            DecorationLedger& ledger) {
    if (!d.crossings.count(v)) throw MoveError("no crossing c" + std::to_string(v));
    std::set<EdgeId> shield = ledger.circle_edges_except(v);
    for (const CorePath::Hop& h : p.hops)
        if (shield.count(h.edge))
            throw MoveError("path crosses a protected circle part on e" + std::to_string(h.edge));
    Finger f = realize_tail(d, p, ledger);

    Topo t(f.cur);
    FaceRef region = t.region_of(t.face_node(f.anchor));
    std::array<DartId, 4> germs = f.cur.crossings.at(v).rot;
    std::sort(germs.begin(), germs.end());
    DartId g = 0;
    for (DartId x : germs)
        if (t.region_of(t.face_node(x)) == region) {
            g = x;
            break;
        }
    if (!g) throw MoveError("face does not touch crossing c" + std::to_string(v));

    ApplyResult pa = push_finger(f, ledger, g, false);
    EdgeId armed = f.cap;
    Topo t2(f.cur);
    DartId g2 = t2.sigma_inv(g);
    if (t2.region_of(t2.face_node(g2)) != t2.region_of(t2.face_node(f.anchor)))
        throw MoveError("corner is not clear for the second push");
    ApplyResult pb = push_finger(f, ledger, g2, false);

    const std::vector<EdgeId>& arc = pb.edge_splits.at(armed);
    for (EdgeId pc : arc) f.strand.erase(pc);
    f.dec.circle_edges.insert(arc.begin(), arc.end());
    f.dec.circle_crossings.insert(pa.new_crossings.begin(), pa.new_crossings.end());
    f.dec.circle_crossings.insert(pb.new_crossings.begin(), pb.new_crossings.end());

    Topo t3(f.cur);
    DartId tri = 0;
    for (const auto& [key, orbit] : t3.face_orbits) {
        if (orbit.size() != 3) continue;
        std::set<CrossingId> cs;
        for (DartId x : orbit) cs.insert(t3.rec(x).crossing);
        if (cs.size() != 3 || !cs.count(v)) continue;
        int na = 0, nb = 0;
        for (CrossingId c : pa.new_crossings) na += cs.count(c);
        for (CrossingId c : pb.new_crossings) nb += cs.count(c);
        if (na == 1 && nb == 1) {
            tri = key;
            break;
        }
    }
    if (!tri) throw MoveError("no slide triangle after the corner pushes");
    Move slide = Move::r3(tri);
    ApplyResult ar = apply(f.cur, slide);
    ledger.transport(ar);
    f.cur = ar.diagram;
    f.dec.moves.push_back(slide);

    f.dec.kind = Decoration::Kind::Lollipop;
    f.dec.vertex = v;
    f.dec.tail_edges = f.strand;
    ledger.decorations.push_back(f.dec);
    return {std::move(f.cur), f.dec.moves, ledger.decorations.back()};
}

CorePath route_path(const Diagram& d, DartId from_dart, bool from_left, DartId to_face,
                    const std::set<EdgeId>& avoid) {
    require_valid(d);
    Topo t(d);
    DartId anchor = anchor_dart(d, t, from_dart, from_left);
    if (!t.face_orbits.count(to_face))
        throw MoveError("no face keyed d" + std::to_string(to_face));
    FaceRef src = t.region_of(t.face_node(anchor));
    FaceRef dst = t.region_of(FaceRef::dart(to_face));

    // Relax to the fixpoint of (fewest crossings, then smallest edge id
    // sequence); strict improvement bounds the iteration.
    std::map<FaceRef, std::vector<EdgeId>> best;
    best[src] = {};
    auto better = [](const std::vector<EdgeId>& a, const std::vector<EdgeId>& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [eid, e] : d.edges) {
            if (avoid.count(eid)) continue;
            FaceRef u = t.region_of(t.face_node(e.tail));
            FaceRef v = t.region_of(t.face_node(e.head));
            for (const auto& [from, to] : {std::pair{u, v}, std::pair{v, u}}) {
                auto it = best.find(from);
                if (it == best.end()) continue;
                std::vector<EdgeId> cand = it->second;
                cand.push_back(eid);
                auto jt = best.find(to);
                if (jt == best.end() || better(cand, jt->second)) {
                    best[to] = std::move(cand);
                    changed = true;
                }
            }
        }
    }
    auto it = best.find(dst);
    if (it == best.end())
        throw MoveError("no route to face d" + std::to_string(to_face) +
                        " avoiding the given edges");
    CorePath p;
    p.start_dart = from_dart;
    p.start_left = from_left;
    p.terminal = to_face;
    for (EdgeId eid : it->second) p.hops.push_back({eid, false});
    return p;
}

TeardownResult teardown_last(const Diagram& d, DecorationLedger& ledger) {
    if (ledger.decorations.empty()) throw MoveError("decoration ledger is empty");
    require_valid(d);
    DecorationLedger work = ledger;
    Diagram cur = d;
    std::vector<Move> moves;
    while (!work.decorations.back().crossings.empty()) {
        const Decoration& dec = work.decorations.back();
        Topo t(cur);
        DartId pick = 0;
        for (const auto& [key, orbit] : t.face_orbits) {
            if (orbit.size() != 2) continue;
            if (!dec.crossings.count(t.rec(orbit[0]).crossing) ||
                !dec.crossings.count(t.rec(orbit[1]).crossing))
                continue;
            if (!legal(cur, Move::r2down(key)).ok) continue;
            pick = key;
            break;
        }
        if (!pick) throw MoveError("decoration is not clear of the diagram");
        Move m = Move::r2down(pick);
        ApplyResult ar = apply(cur, m);
        work.transport(ar);
        cur = std::move(ar.diagram);
        moves.push_back(m);
    }
    work.decorations.pop_back();
    ledger = std::move(work);
    return {std::move(cur), std::move(moves)};
}

}  // namespace reidesort
