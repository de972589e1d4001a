#!/usr/bin/env python3
"""Independent geometric oracle for the trefoil fixture.

Traces the immersed curve
    x(t) = sin t + 2 sin 2t
    y(t) = cos t - 2 cos 2t
locates its three double points, builds the dart/rotation tables the way the
library defines them (ccw rotation order, tail = outgoing dart, head =
incoming dart, over passage assigned alternately along the traversal), and
prints frozen expectations:

  * per-crossing rotation tables and over flags
  * edge list in traversal order
  * face orbits of sigma_inv(alpha(.)) with a geometric cross-check that
    each orbit's sample points agree on the plane region, and which orbit
    is the unbounded one (winding number 0 around its samples)
  * turning number of the curve (the winding_number invariant)
  * writhe computed geometrically (sign of cross(under_dir, over_dir)),
    cross-checked against the combinatorial rule sigma(over_out)==under_out

Run from anywhere: python3 tests/oracles/trefoil_from_immersion.py
"""

import math


def curve(t):
    return (math.sin(t) + 2 * math.sin(2 * t), math.cos(t) - 2 * math.cos(2 * t))


def dcurve(t):
    return (math.cos(t) + 4 * math.cos(2 * t), -math.sin(t) + 4 * math.sin(2 * t))


def seg_intersect(p, q, r, s):
    d1 = (q[0] - p[0], q[1] - p[1])
    d2 = (s[0] - r[0], s[1] - r[1])
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(den) < 1e-14:
        return None
    u = ((r[0] - p[0]) * d2[1] - (r[1] - p[1]) * d2[0]) / den
    v = ((r[0] - p[0]) * d1[1] - (r[1] - p[1]) * d1[0]) / den
    if 0 <= u <= 1 and 0 <= v <= 1:
        return u, v
    return None


def find_double_points(n=4000):
    ts = [2 * math.pi * i / n for i in range(n + 1)]
    pts = [curve(t) for t in ts]
    raw = []
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            hit = seg_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1])
            if hit:
                raw.append((ts[i] + hit[0] * (ts[i + 1] - ts[i]),
                            ts[j] + hit[1] * (ts[j + 1] - ts[j])))
    refined = [newton_refine(a, b) for a, b in raw]
    return refined


def newton_refine(t1, t2, iters=40):
    for _ in range(iters):
        f = (curve(t1)[0] - curve(t2)[0], curve(t1)[1] - curve(t2)[1])
        j11, j21 = dcurve(t1)
        j12, j22 = (-dcurve(t2)[0], -dcurve(t2)[1])
        den = j11 * j22 - j12 * j21
        dt1 = (f[0] * j22 - f[1] * j12) / den
        dt2 = (j11 * f[1] - j21 * f[0]) / den
        t1, t2 = t1 - dt1, t2 - dt2
    return t1, t2


def winding_around(pt, n=6000):
    total = 0.0
    prev = None
    for i in range(n + 1):
        t = 2 * math.pi * i / n
        x, y = curve(t)
        ang = math.atan2(y - pt[1], x - pt[0])
        if prev is not None:
            d = ang - prev
            while d > math.pi:
                d -= 2 * math.pi
            while d < -math.pi:
                d += 2 * math.pi
            total += d
        prev = ang
    return round(total / (2 * math.pi))


def turning_number(n=20000):
    total = 0.0
    prev = None
    for i in range(n + 1):
        t = 2 * math.pi * i / n
        dx, dy = dcurve(t)
        ang = math.atan2(dy, dx)
        if prev is not None:
            d = ang - prev
            while d > math.pi:
                d -= 2 * math.pi
            while d < -math.pi:
                d += 2 * math.pi
            total += d
        prev = ang
    return round(total / (2 * math.pi))


def main():
    pairs = find_double_points()
    assert len(pairs) == 3, f"expected 3 double points, found {len(pairs)}"

    visits = sorted(t for pair in pairs for t in pair)
    assert len(visits) == 6
    cross_of_visit = {}
    for ci, (a, b) in enumerate(pairs):
        for t in (a, b):
            k = min(range(6), key=lambda i: abs(visits[i] - t))
            cross_of_visit[k] = ci

    # darts: visit k arrives on head dart 2k+1 and leaves on tail dart 2k+2
    # edges: arc k runs from visit k to visit k+1
    edges = [(2 * k + 2, 2 * ((k + 1) % 6) + 1) for k in range(6)]

    # over passages alternate along the traversal starting over
    over_visit = {k: (k % 2 == 0) for k in range(6)}
    for ci in range(3):
        vs = [k for k in range(6) if cross_of_visit[k] == ci]
        assert over_visit[vs[0]] != over_visit[vs[1]], "alternation broken"

    crossings = []
    for ci in range(3):
        vs = [k for k in range(6) if cross_of_visit[k] == ci]
        rays = []
        for k in vs:
            dx, dy = dcurve(visits[k])
            rays.append((math.atan2(dy, dx), 2 * k + 2))        # tail along direction
            rays.append((math.atan2(-dy, -dx), 2 * k + 1))      # head points back
        rays.sort()
        rot = [d for _, d in rays]
        mi = rot.index(min(rot))
        rot = rot[mi:] + rot[:mi]
        over_out = 2 * [k for k in vs if over_visit[k]][0] + 2
        over_flag = rot.index(over_out) % 2
        crossings.append((rot, over_flag, vs))

    # sanity: passages must sit at opposite rotation slots
    for rot, _, vs in crossings:
        for k in vs:
            i, o = rot.index(2 * k + 1), rot.index(2 * k + 2)
            assert (i - o) % 2 == 0, "passage darts not at opposite slots"

    # face orbits of sigma_inv(alpha(.))
    slot = {}
    for rot, _, _ in crossings:
        for s, d in enumerate(rot):
            slot[d] = (rot, s)
    alpha = {}
    for t_, h in edges:
        alpha[t_] = h
        alpha[h] = t_

    def sigma_inv(d):
        rot, s = slot[d]
        return rot[(s + 3) % 4]

    seen, faces = set(), []
    for d0 in sorted(slot):
        if d0 in seen:
            continue
        orbit, d = [], d0
        while d not in seen:
            seen.add(d)
            orbit.append(d)
            d = sigma_inv(alpha[d])
        faces.append(orbit)

    # geometric region of each face via sample points left of each dart ray
    pos_of_visit = {k: curve(visits[k]) for k in range(6)}
    dir_of_visit = {k: dcurve(visits[k]) for k in range(6)}

    def sample_left(d):
        k = (d - 1) // 2
        px, py = pos_of_visit[k]
        dx, dy = dir_of_visit[k]
        nrm = math.hypot(dx, dy)
        dx, dy = dx / nrm, dy / nrm
        if d % 2 == 1:                       # head dart points backwards
            dx, dy = -dx, -dy
        return (px + 0.45 * dx - 0.18 * dy, py + 0.45 * dy + 0.18 * dx)

    face_wind = []
    for orbit in faces:
        ws = {winding_around(sample_left(d)) for d in orbit}
        assert len(ws) == 1, f"face {orbit} samples disagree: {ws}"
        face_wind.append(ws.pop())
    outer = [faces[i] for i, w in enumerate(face_wind) if w == 0]
    assert len(outer) == 1, f"expected one unbounded face, got {outer}"

    # writhe: geometric sign vs combinatorial rule
    writhe = 0
    for rot, over_flag, vs in crossings:
        ko = [k for k in vs if over_visit[k]][0]
        ku = [k for k in vs if not over_visit[k]][0]
        o, u = dir_of_visit[ko], dir_of_visit[ku]
        geo = 1 if (u[0] * o[1] - u[1] * o[0]) < 0 else -1
        over_out, under_out = 2 * ko + 2, 2 * ku + 2
        s = rot.index(over_out)
        comb = 1 if rot[(s + 1) % 4] == under_out else -1
        assert geo == comb, f"sign rule mismatch at crossing {rot}"
        writhe += geo

    print("// generated by tests/oracles/trefoil_from_immersion.py")
    for ci, (rot, over_flag, vs) in enumerate(crossings):
        print(f"crossing c{ci+1} rot {rot} over_flag {over_flag} visits {vs}")
    for ei, (t_, h) in enumerate(edges):
        print(f"edge e{ei+1} tail d{t_} head d{h}")
    print("faces:")
    for orbit, w in zip(faces, face_wind):
        tag = " (outer)" if w == 0 else ""
        print(f"  key d{min(orbit)} orbit {orbit} winding {w}{tag}")
    print(f"face count {len(faces)} lengths {sorted(len(f) for f in faces)}")
    print(f"outer face key d{min(outer[0])}")
    print(f"turning number {turning_number()}")
    print(f"writhe {writhe}")


if __name__ == "__main__":
    main()
