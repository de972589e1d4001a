#include "reidesort/kdf.hpp"

#include <algorithm>
#include <sstream>

namespace reidesort {

namespace {

struct Scanner {
    std::vector<std::string> toks;
    size_t pos = 0;
    int line = 0;

    bool done() const { return pos >= toks.size(); }
    std::string next(const char* what) {
        if (done()) throw ParseError("line " + std::to_string(line) + ": expected " + what);
        return toks[pos++];
    }
    void expect(const std::string& lit) {
        std::string t = next(lit.c_str());
        if (t != lit)
            throw ParseError("line " + std::to_string(line) + ": expected '" + lit + "', got '" + t + "'");
    }
};

int parse_id(Scanner& sc, char prefix, const char* what) {
    std::string t = sc.next(what);
    size_t off = 0;
    if (!t.empty() && (t[0] == prefix || (prefix == 'L' && t[0] == 'L'))) off = 1;
    if (off == 0 && prefix != 0)
        throw ParseError("line " + std::to_string(sc.line) + ": expected " + what + ", got '" + t + "'");
    try {
        size_t used = 0;
        int v = std::stoi(t.substr(off), &used);
        if (used != t.size() - off || v <= 0) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ParseError("line " + std::to_string(sc.line) + ": bad " + what + " '" + t + "'");
    }
}

FaceRef parse_ref(Scanner& sc) {
    std::string t = sc.next("face reference");
    if (t == "outer") return FaceRef::outer();
    try {
        if (t.size() > 1 && t[0] == 'd') {
            size_t used = 0;
            int v = std::stoi(t.substr(1), &used);
            if (used == t.size() - 1 && v > 0) return FaceRef::dart(v);
        }
        if (t.size() > 1 && t[0] == 'L') {
            size_t used = 0;
            int v = std::stoi(t.substr(1), &used);
            if (used == t.size() - 1 && v > 0) return FaceRef::loop_inside(v);
        }
    } catch (...) {
    }
    throw ParseError("line " + std::to_string(sc.line) + ": bad face reference '" + t + "'");
}

int parse_kv(Scanner& sc, const std::string& key) {
    std::string t = sc.next(key.c_str());
    if (t.rfind(key + "=", 0) != 0)
        throw ParseError("line " + std::to_string(sc.line) + ": expected " + key + "=N, got '" + t + "'");
    try {
        size_t used = 0;
        int v = std::stoi(t.substr(key.size() + 1), &used);
        if (used != t.size() - key.size() - 1 || v <= 0) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ParseError("line " + std::to_string(sc.line) + ": bad counter '" + t + "'");
    }
}

}  // namespace

Diagram parse_kdf(const std::string& text) {
    Diagram d;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool saw_header = false;
    struct Pending {
        DartId external;
        FaceRef container;
        int line;
    };
    std::vector<Pending> places;
    int alloc_dart = 0, alloc_crossing = 0, alloc_edge = 0, alloc_loop = 0;

    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        Scanner sc;
        sc.line = lineno;
        std::istringstream ls(raw);
        for (std::string t; ls >> t;) sc.toks.push_back(t);
        if (sc.toks.empty()) continue;

        std::string kw = sc.next("keyword");
        if (!saw_header) {
            if (kw != "kdf" || sc.next("version") != "1")
                throw ParseError("line " + std::to_string(lineno) + ": expected 'kdf 1' header");
            saw_header = true;
            continue;
        }
        if (kw == "crossing") {
            Crossing cr;
            cr.id = parse_id(sc, 'c', "crossing id");
            sc.expect("rot");
            for (int i = 0; i < 4; ++i) cr.rot[i] = parse_id(sc, 'd', "dart id");
            sc.expect("over");
            DartId ov = parse_id(sc, 'd', "over dart");
            int slot = -1;
            for (int i = 0; i < 4; ++i)
                if (cr.rot[i] == ov) slot = i;
            if (slot < 0)
                throw ParseError("line " + std::to_string(lineno) + ": over dart d" + std::to_string(ov) +
                                 " is not in the rotation");
            cr.over = slot % 2;
            if (!d.crossings.emplace(cr.id, cr).second)
                throw ParseError("line " + std::to_string(lineno) + ": duplicate crossing c" +
                                 std::to_string(cr.id));
        } else if (kw == "edge") {
            Edge e;
            e.id = parse_id(sc, 'e', "edge id");
            e.tail = parse_id(sc, 'd', "tail dart");
            e.head = parse_id(sc, 'd', "head dart");
            if (!d.edges.emplace(e.id, e).second)
                throw ParseError("line " + std::to_string(lineno) + ": duplicate edge e" + std::to_string(e.id));
        } else if (kw == "loop") {
            FreeLoop l;
            l.id = parse_id(sc, 'L', "loop id");
            sc.expect("face");
            l.container = parse_ref(sc);
            std::string o = sc.next("orientation");
            if (o == "ccw")
                l.ccw = true;
            else if (o == "cw")
                l.ccw = false;
            else
                throw ParseError("line " + std::to_string(lineno) + ": expected ccw or cw, got '" + o + "'");
            if (!d.loops.emplace(l.id, l).second)
                throw ParseError("line " + std::to_string(lineno) + ": duplicate loop L" + std::to_string(l.id));
        } else if (kw == "outer") {
            places.push_back({parse_id(sc, 'd', "dart id"), FaceRef::outer(), lineno});
        } else if (kw == "place") {
            std::string t = sc.next("piece:dart");
            if (t.rfind("piece:", 0) != 0)
                throw ParseError("line " + std::to_string(lineno) + ": expected piece:<dart>, got '" + t + "'");
            std::string id = t.substr(6);
            if (id.empty())
                throw ParseError("line " + std::to_string(lineno) + ": empty piece dart");
            Scanner sub;
            sub.line = lineno;
            sub.toks = {id[0] == 'd' ? id : "d" + id};
            DartId ext = parse_id(sub, 'd', "piece dart");
            sc.expect("face");
            places.push_back({ext, parse_ref(sc), lineno});
        } else if (kw == "alloc") {
            alloc_dart = parse_kv(sc, "dart");
            alloc_crossing = parse_kv(sc, "crossing");
            alloc_edge = parse_kv(sc, "edge");
            alloc_loop = parse_kv(sc, "loop");
        } else {
            throw ParseError("line " + std::to_string(lineno) + ": unknown keyword '" + kw + "'");
        }
        if (!sc.done())
            throw ParseError("line " + std::to_string(lineno) + ": trailing tokens after '" + kw + "' line");
    }
    if (!saw_header) throw ParseError("missing 'kdf 1' header");

    for (const Pending& p : places) d.placements.push_back({p.external, p.container});
    std::sort(d.placements.begin(), d.placements.end());
    d.bump_counters();
    d.next_dart = std::max(d.next_dart, alloc_dart);
    d.next_crossing = std::max(d.next_crossing, alloc_crossing);
    d.next_edge = std::max(d.next_edge, alloc_edge);
    d.next_loop = std::max(d.next_loop, alloc_loop);
    return d;
}

std::string serialize_kdf(const Diagram& d) {
    std::ostringstream os;
    os << "kdf 1\n";
    for (const auto& [cid, cr] : d.crossings) {
        DartId ov = std::min(cr.rot[cr.over], cr.rot[cr.over + 2]);
        os << "crossing c" << cid << " rot";
        for (DartId dt : cr.rot) os << " d" << dt;
        os << " over d" << ov << "\n";
    }
    for (const auto& [eid, e] : d.edges) os << "edge e" << eid << " d" << e.tail << " d" << e.head << "\n";
    for (const auto& [lid, l] : d.loops)
        os << "loop L" << lid << " face " << to_string(l.container) << (l.ccw ? " ccw" : " cw") << "\n";

    if (!d.crossings.empty()) {
        Topo t(d);
        std::vector<std::pair<DartId, FaceRef>> rows;
        for (const auto& [pk, ext] : t.piece_external) {
            DartId anchor = t.face_orbits.at(ext).front();  // min dart of the orbit
            rows.emplace_back(anchor, t.piece_container.at(pk));
        }
        std::sort(rows.begin(), rows.end());
        for (const auto& [anchor, cont] : rows)
            if (cont.kind == FaceRef::Outer) os << "outer d" << anchor << "\n";
        for (const auto& [anchor, cont] : rows)
            if (cont.kind != FaceRef::Outer)
                os << "place piece:d" << anchor << " face " << to_string(cont) << "\n";
    }

    DartId md = 0;
    CrossingId mc = 0;
    EdgeId me = 0;
    LoopId ml = 0;
    for (const auto& [cid, cr] : d.crossings) {
        mc = std::max(mc, cid);
        for (DartId dt : cr.rot) md = std::max(md, dt);
    }
    for (const auto& [eid, e] : d.edges) {
        (void)e;
        me = std::max(me, eid);
    }
    for (const auto& [lid, l] : d.loops) {
        (void)l;
        ml = std::max(ml, lid);
    }
    if (d.next_dart > md + 1 || d.next_crossing > mc + 1 || d.next_edge > me + 1 || d.next_loop > ml + 1)
        os << "alloc dart=" << d.next_dart << " crossing=" << d.next_crossing << " edge=" << d.next_edge
           << " loop=" << d.next_loop << "\n";
    return os.str();
}

std::string canonical_kdf(const Diagram& d) {
    return serialize_kdf(canonicalize(d).diagram);
}

}  // namespace reidesort
