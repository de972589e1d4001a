#!/usr/bin/env python3
"""Independent oracle for closed-polyline turning numbers.

Sums exterior angles around a closed vertex cycle and prints the total in
full turns. Run once; the printed integers are frozen into the turning
number tests:

  * ccw / cw unit square        -> +1 / -1
  * regular 12-gon              -> +1
  * inner-loop limacon r = 0.5 + cos(theta), 720 samples -> +2
  * the same polyline reversed  -> -2

The limacon also reports its shortest segment, confirming no degenerate
segments sneak into the fixture.
"""

import math


def turning(pts):
    n = len(pts)
    tot = 0.0
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n]
        cx, cy = pts[(i + 2) % n]
        ux, uy = bx - ax, by - ay
        vx, vy = cx - bx, cy - by
        tot += math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)
    return tot / (2 * math.pi)


def main():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    print("ccw square:", turning(sq))
    print("cw square:", turning(list(reversed(sq))))

    gon = [(math.cos(2 * math.pi * k / 12), math.sin(2 * math.pi * k / 12)) for k in range(12)]
    print("12-gon:", turning(gon))

    lim = []
    n = 720
    for k in range(n):
        t = 2 * math.pi * k / n
        r = 0.5 + math.cos(t)
        lim.append((r * math.cos(t), r * math.sin(t)))
    print("limacon:", turning(lim))
    print("limacon reversed:", turning(list(reversed(lim))))
    print("limacon min segment:", min(math.dist(lim[i], lim[(i + 1) % n]) for i in range(n)))


if __name__ == "__main__":
    main()
