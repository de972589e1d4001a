#include "reidesort/testkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>

#include "reidesort/kdf.hpp"

namespace reidesort::testkit {

namespace {

// modulo and cumulative-sum draws: biased by a negligible amount, but
// identical on every platform, which the reproducibility contract needs
std::size_t pick_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

std::size_t pick_weighted(std::mt19937_64& rng, const std::vector<double>& w) {
    double total = 0;
    for (double x : w) total += x;
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        u -= w[i];
        if (u < 0) return i;
    }
    return w.size() - 1;
}

struct KindMix {
    std::vector<MoveKind> kinds;
    std::vector<double> weights;
};

KindMix mix_of(const GenConfig& cfg, bool omega23_only) {
    KindMix m;
    auto add = [&](MoveKind k, double w) {
        if (w > 0) {
            m.kinds.push_back(k);
            m.weights.push_back(w);
        }
    };
    if (!omega23_only) add(MoveKind::R1Up, cfg.w_r1up);
    add(MoveKind::R2Up, cfg.w_r2up);
    add(MoveKind::R3, cfg.w_r3);
    if (!omega23_only) add(MoveKind::R1Down, cfg.w_r1down);
    add(MoveKind::R2Down, cfg.w_r2down);
    return m;
}

std::optional<Move> random_step(std::mt19937_64& rng, const Diagram& d, const GenConfig& cfg,
                                const KindMix& mix) {
    int n = static_cast<int>(d.crossings.size());
    std::vector<std::vector<Move>> sites;
    std::vector<double> weights;
    for (std::size_t i = 0; i < mix.kinds.size(); ++i) {
        MoveKind k = mix.kinds[i];
        int grow = k == MoveKind::R1Up ? 1 : k == MoveKind::R2Up ? 2 : 0;
        if (grow && n + grow > cfg.max_crossings) continue;
        auto s = enumerate_moves(d, {k});
        if (s.empty()) continue;
        sites.push_back(std::move(s));
        weights.push_back(mix.weights[i]);
    }
    if (sites.empty()) return std::nullopt;
    const auto& chosen = sites[pick_weighted(rng, weights)];
    return chosen[pick_index(rng, chosen.size())];
}

int draw_length(std::mt19937_64& rng, const GenConfig& cfg) {
    int lo = std::min(cfg.moves_lo, cfg.moves_hi);
    int hi = std::max(cfg.moves_lo, cfg.moves_hi);
    return lo + static_cast<int>(pick_index(rng, static_cast<std::size_t>(hi - lo) + 1));
}

}  // namespace

std::uint64_t seed_from_env(std::uint64_t fallback) {
    const char* s = std::getenv("REIDESORT_SEED");
    if (!s || !*s) return fallback;
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    return (end && *end == '\0') ? v : fallback;
}

Diagram gen_diagram(const GenConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    Diagram d;
    for (int i = 0; i < cfg.circles; ++i) {
        FreeLoop l;
        l.id = d.fresh_loop();
        l.ccw = i % 2 == 0;
        d.loops.emplace(l.id, l);
    }
    KindMix mix = mix_of(cfg, false);
    int steps = draw_length(rng, cfg);
    for (int i = 0; i < steps; ++i) {
        auto m = random_step(rng, d, cfg, mix);
        if (!m) break;
        d = apply(d, *m).diagram;
    }
    return d;
}

MoveTrace gen_trace(const Diagram& d, const GenConfig& cfg, bool omega23_only) {
    std::mt19937_64 rng(cfg.seed);
    MoveTrace tr;
    tr.initial = d;
    Diagram cur = d;
    KindMix mix = mix_of(cfg, omega23_only);
    int steps = draw_length(rng, cfg);
    for (int i = 0; i < steps; ++i) {
        auto m = random_step(rng, cur, cfg, mix);
        if (!m) break;
        cur = apply(cur, *m).diagram;
        tr.moves.push_back(*m);
    }
    return tr;
}

int geometric_winding(const std::vector<std::array<double, 2>>& poly) {
    std::vector<std::array<double, 2>> p = poly;
    if (p.size() > 1 && p.front() == p.back()) p.pop_back();
    if (p.size() < 3) throw DiagramError("polyline: need at least three points");
    const double pi = std::acos(-1.0);
    double total = 0;
    std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = p[i];
        const auto& b = p[(i + 1) % n];
        const auto& c = p[(i + 2) % n];
        double ux = b[0] - a[0], uy = b[1] - a[1];
        double vx = c[0] - b[0], vy = c[1] - b[1];
        if ((ux == 0 && uy == 0) || (vx == 0 && vy == 0))
            throw DiagramError("polyline: zero length segment");
        double turn = std::atan2(ux * vy - uy * vx, ux * vx + uy * vy);
        if (pi - std::abs(turn) < 1e-9) throw DiagramError("polyline: strand reverses");
        total += turn;
    }
    double turns = total / (2 * pi);
    double r = std::round(turns);
    if (std::abs(turns - r) > 1e-6) throw DiagramError("polyline: turning is not whole");
    return static_cast<int>(r);
}

namespace {

// Recursive matching over the containment forest. A piece map is pinned
// down by the image of one dart, so each piece pair costs one propagation
// per dart of the candidate external orbit.
struct IsoSearch {
    const Topo& ta;
    const Topo& tb;

    bool grow_map(DartId d0, DartId e0, std::map<DartId, DartId>& f) const {
        f.clear();
        f.emplace(d0, e0);
        std::vector<DartId> stack{d0};
        while (!stack.empty()) {
            DartId x = stack.back();
            stack.pop_back();
            DartId y = f.at(x);
            if (ta.over(x) != tb.over(y)) return false;
            if (ta.rec(x).is_tail != tb.rec(y).is_tail) return false;
            std::array<std::array<DartId, 2>, 2> next{
                {{ta.sigma(x), tb.sigma(y)}, {ta.alpha(x), tb.alpha(y)}}};
            for (const auto& [nx, ny] : next) {
                auto it = f.find(nx);
                if (it == f.end()) {
                    f.emplace(nx, ny);
                    stack.push_back(nx);
                } else if (it->second != ny) {
                    return false;
                }
            }
        }
        std::set<DartId> image;
        for (const auto& [x, y] : f) image.insert(y);
        return image.size() == f.size();
    }

    bool try_piece(DartId pa, DartId pb) const {
        if (ta.pieces.at(pa).size() != tb.pieces.at(pb).size()) return false;
        DartId ext_a = ta.piece_external.at(pa);
        DartId ext_b = tb.piece_external.at(pb);
        if (ta.face_orbits.at(ext_a).size() != tb.face_orbits.at(ext_b).size()) return false;
        for (DartId e0 : tb.face_orbits.at(ext_b)) {
            std::map<DartId, DartId> f;
            if (!grow_map(ext_a, e0, f)) continue;
            if (contents_match(pa, f)) return true;
        }
        return false;
    }

    bool contents_match(DartId pa, const std::map<DartId, DartId>& f) const {
        for (const auto& [key, orbit] : ta.face_orbits) {
            (void)orbit;
            if (ta.piece_key.at(ta.rec(key).crossing) != pa) continue;
            if (key == ta.piece_external.at(pa)) continue;
            DartId img = tb.face_key.at(f.at(key));
            if (!region_match(ta.region_of(FaceRef::dart(key)),
                              tb.region_of(FaceRef::dart(img))))
                return false;
        }
        return true;
    }

    bool region_match(FaceRef ra, FaceRef rb) const {
        static const std::vector<DartId> no_pieces;
        static const std::vector<LoopId> no_loops;
        auto pick = [](const auto& table, FaceRef r, const auto& none) -> const auto& {
            auto it = table.find(r);
            return it == table.end() ? none : it->second;
        };
        const auto& pas = pick(ta.region_pieces, ra, no_pieces);
        const auto& pbs = pick(tb.region_pieces, rb, no_pieces);
        const auto& las = pick(ta.region_loops, ra, no_loops);
        const auto& lbs = pick(tb.region_loops, rb, no_loops);
        if (pas.size() != pbs.size() || las.size() != lbs.size()) return false;
        std::vector<bool> used(pbs.size(), false);
        if (!match_pieces(pas, pbs, 0, used)) return false;
        std::vector<bool> lused(lbs.size(), false);
        return match_loops(las, lbs, 0, lused);
    }

    bool match_pieces(const std::vector<DartId>& as, const std::vector<DartId>& bs,
                      std::size_t i, std::vector<bool>& used) const {
        if (i == as.size()) return true;
        for (std::size_t j = 0; j < bs.size(); ++j) {
            if (used[j] || !try_piece(as[i], bs[j])) continue;
            used[j] = true;
            if (match_pieces(as, bs, i + 1, used)) return true;
            used[j] = false;
        }
        return false;
    }

    bool match_loops(const std::vector<LoopId>& as, const std::vector<LoopId>& bs,
                     std::size_t i, std::vector<bool>& used) const {
        if (i == as.size()) return true;
        for (std::size_t j = 0; j < bs.size(); ++j) {
            if (used[j]) continue;
            if (ta.dia->loops.at(as[i]).ccw != tb.dia->loops.at(bs[j]).ccw) continue;
            if (!region_match(ta.region_of(FaceRef::loop_inside(as[i])),
                              tb.region_of(FaceRef::loop_inside(bs[j]))))
                continue;
            used[j] = true;
            if (match_loops(as, bs, i + 1, used)) return true;
            used[j] = false;
        }
        return false;
    }
};

}  // namespace

bool brute_isomorphic(const Diagram& a, const Diagram& b) {
    if (a.crossings.size() != b.crossings.size() || a.edges.size() != b.edges.size() ||
        a.loops.size() != b.loops.size())
        return false;
    Topo ta(a), tb(b);
    IsoSearch s{ta, tb};
    return s.region_match(ta.region_of(FaceRef::outer()), tb.region_of(FaceRef::outer()));
}

namespace {

struct SearchNode {
    Diagram rep;
    std::string parent;
    int depth = 0;
};

using Seen = std::map<std::string, SearchNode>;

MoveKind kind_inverse(MoveKind k) {
    switch (k) {
        case MoveKind::R1Up: return MoveKind::R1Down;
        case MoveKind::R1Down: return MoveKind::R1Up;
        case MoveKind::R2Up: return MoveKind::R2Down;
        case MoveKind::R2Down: return MoveKind::R2Up;
        case MoveKind::R3: return MoveKind::R3;
    }
    return k;
}

struct Corridor {
    std::vector<std::string> keys;  // canonical forms, a first
    int length = 0;
};

// Bidirectional level-by-level search over canonical forms. The backward
// side expands with the inverse kinds, so a meet witnesses a forward path;
// the search stops once no undiscovered path can beat the best meet.
std::optional<Corridor> find_corridor(const Diagram& a, const Diagram& b,
                                      const std::set<MoveKind>& kinds, int budget) {
    std::string ka = canonical_kdf(a), kb = canonical_kdf(b);
    if (ka == kb) return Corridor{{ka}, 0};
    std::set<MoveKind> back_kinds;
    for (MoveKind k : kinds) back_kinds.insert(kind_inverse(k));

    Seen va, vb;
    va.emplace(ka, SearchNode{a, "", 0});
    vb.emplace(kb, SearchNode{b, "", 0});
    std::vector<std::string> fa{ka}, fb{kb};
    int da = 0, db = 0;
    int best = std::numeric_limits<int>::max();
    std::string meet;

    auto expand = [&](Seen& vis, const Seen& other, const std::vector<std::string>& frontier,
                      const std::set<MoveKind>& use, int depth) {
        std::vector<std::string> next;
        for (const std::string& key : frontier) {
            Diagram cur = vis.at(key).rep;
            for (const Move& m : enumerate_moves(cur, use)) {
                ApplyResult ar;
                try {
                    ar = apply(cur, m, false);
                } catch (const MoveError&) {
                    continue;
                }
                if (static_cast<int>(ar.diagram.crossings.size()) > budget) continue;
                std::string k2 = canonical_kdf(ar.diagram);
                if (vis.count(k2)) continue;
                vis.emplace(k2, SearchNode{std::move(ar.diagram), key, depth});
                auto hit = other.find(k2);
                if (hit != other.end() && depth + hit->second.depth < best) {
                    best = depth + hit->second.depth;
                    meet = k2;
                }
                next.push_back(std::move(k2));
            }
        }
        return next;
    };

    while (best > da + db && !fa.empty() && !fb.empty()) {
        if (fa.size() <= fb.size()) {
            fa = expand(va, vb, fa, kinds, da + 1);
            ++da;
        } else {
            fb = expand(vb, va, fb, back_kinds, db + 1);
            ++db;
        }
    }
    if (best == std::numeric_limits<int>::max()) return std::nullopt;

    Corridor c;
    c.length = best;
    for (std::string k = meet; !k.empty(); k = va.at(k).parent) c.keys.push_back(k);
    std::reverse(c.keys.begin(), c.keys.end());
    for (std::string k = vb.at(meet).parent; !k.empty(); k = vb.at(k).parent) c.keys.push_back(k);
    return c;
}

// walk the corridor from a concrete start: moves transport along
// isomorphisms, so every step has a realization on the current labeling
MoveTrace realize(const Diagram& a, const std::vector<std::string>& keys,
                  const std::set<MoveKind>& kinds) {
    MoveTrace tr;
    tr.initial = a;
    Diagram cur = a;
    for (std::size_t i = 1; i < keys.size(); ++i) {
        bool stepped = false;
        for (const Move& m : enumerate_moves(cur, kinds)) {
            ApplyResult ar;
            try {
                ar = apply(cur, m, false);
            } catch (const MoveError&) {
                continue;
            }
            if (canonical_kdf(ar.diagram) != keys[i]) continue;
            tr.moves.push_back(m);
            cur = std::move(ar.diagram);
            stepped = true;
            break;
        }
        if (!stepped) throw MoveError("search: corridor step has no realization");
    }
    return tr;
}

}  // namespace

std::optional<MoveTrace> search_bridge(const Diagram& a, const Diagram& b, int budget) {
    auto profile = [](const Diagram& d) {
        std::vector<std::pair<int, int>> v;
        for (CompKey c : components(d)) v.push_back({winding_number(d, c), framing(d, c)});
        std::sort(v.begin(), v.end());
        return v;
    };
    if (profile(a) != profile(b))
        throw MoveError("search: per component winding and framing differ");
    std::set<MoveKind> kinds{MoveKind::R2Up, MoveKind::R2Down, MoveKind::R3};
    auto c = find_corridor(a, b, kinds, budget);
    if (!c) return std::nullopt;
    return realize(a, c->keys, kinds);
}

std::optional<int> min_moves(const Diagram& a, const Diagram& b,
                             const std::set<MoveKind>& kinds, int budget) {
    auto c = find_corridor(a, b, kinds, budget);
    if (!c) return std::nullopt;
    return c->length;
}

}  // namespace reidesort::testkit
