"""Regenerates the shipped track files: python3 tracks/generate.py"""

import json
import math
import re
from pathlib import Path

HALF = 1.1  # half track width
OUT = Path(__file__).parent


def rounded(v, nd=4):
    return [round(v[0], nd), round(v[1], nd)]


def arc(cx, cy, r, a0, a1, step=math.radians(5)):
    n = max(2, int(math.ceil(abs(a1 - a0) / step)))
    return [(cx + r * math.cos(a0 + (a1 - a0) * k / n), cy + r * math.sin(a0 + (a1 - a0) * k / n)) for k in range(n + 1)]


def dedup(poly):
    out = []
    for p in poly:
        if not out or math.dist(out[-1], p) > 1e-6:
            out.append(p)
    if math.dist(out[0], out[-1]) < 1e-6:
        out.pop()
    return out


def stadium(length, radius, offset):
    """Counter-clockwise stadium centered at the origin, straights along x."""
    r = radius + offset
    h = length / 2
    pts = arc(h, 0, r, -math.pi / 2, math.pi / 2) + arc(-h, 0, r, math.pi / 2, 3 * math.pi / 2)
    return dedup(pts)


def write(name, track):
    track = {"name": name, **track}
    for key in ("outer", "inner"):
        track[key] = [rounded(p) for p in track[key]]
    track["obstacles"] = [[rounded(p) for p in o] for o in track.get("obstacles", [])]
    track["trap_regions"] = [[rounded(p) for p in o] for o in track.get("trap_regions", [])]
    text = json.dumps(track, indent=1)
    # One [x, y] pair per line.
    text = re.sub(r"\[\s+(-?[\d.e-]+),\s+(-?[\d.e-]+)\s+\]", r"[\1, \2]", text)
    (OUT / f"{name}.json").write_text(text + "\n")


def corridor():
    write("corridor", {
        "outer": [(-2.0, -1.0), (100.0, -1.0), (100.0, 1.0), (-2.0, 1.0)],
        "inner": [],
        "start_pose": {"x": 0.0, "y": 0.0, "theta": 0.0},
        "finish_line": {"a": [50.0, 1.0], "b": [50.0, -1.0]},
    })


def oval():
    length, radius = 10.0, 4.0
    write("oval", {
        "outer": stadium(length, radius, HALF),
        "inner": stadium(length, radius, -HALF),
        "start_pose": {"x": -3.0, "y": -radius, "theta": 0.0},
        "finish_line": {"a": [0.0, -radius + HALF], "b": [0.0, -radius - HALF]},
    })


def trap():
    # Centerline rectangle [0, w] x [0, h], counter-clockwise, rounded corners
    # except the bottom-right one, where the outer wall runs on into a dead end
    # and only the inner wall is rounded.
    w, h, rc, depth, junction, lead = 16.0, 4.6, 2.2, 5.5, 1.0, 3.0
    ro, ri = rc + HALF, rc - HALF
    mouth = w + HALF
    outer = (
        [(mouth + depth, -HALF), (mouth + depth, HALF), (mouth, HALF)]
        + arc(w - rc, h - rc, ro, 0, math.pi / 2)
        + arc(rc, h - rc, ro, math.pi / 2, math.pi)
        + arc(rc, rc, ro, math.pi, 3 * math.pi / 2)
    )
    outer = dedup(outer)
    inner = (
        arc(w - HALF - junction, HALF + junction, junction, -math.pi / 2, 0)
        + arc(w - rc, h - rc, ri, 0, math.pi / 2)
        + arc(rc, h - rc, ri, math.pi / 2, math.pi)
        + arc(rc, rc, ri, math.pi, 3 * math.pi / 2)
    )
    write("trap", {
        "outer": outer,
        "inner": dedup(inner),
        "start_pose": {"x": w - lead, "y": 0.0, "theta": 0.0},
        "finish_line": {"a": [w - lead + 0.5, HALF], "b": [w - lead + 0.5, -HALF]},
        "trap_regions": [[(mouth, -HALF), (mouth + depth, -HALF), (mouth + depth, HALF), (mouth, HALF)]],
    })


def gp():
    # Closed centerline in polar form with mixed curvature.
    def center(phi):
        r = 10.0 + 2.2 * math.cos(2 * phi) + 1.0 * math.sin(3 * phi) + 0.35 * math.cos(5 * phi + 0.4)
        return (r * math.cos(phi), r * math.sin(phi))

    n = 720
    pts = [center(2 * math.pi * k / n) for k in range(n)]
    outer, inner = [], []
    min_radius = math.inf
    for k in range(n):
        p0, p1, p2 = pts[k - 1], pts[k], pts[(k + 1) % n]
        tx, ty = p2[0] - p0[0], p2[1] - p0[1]
        norm = math.hypot(tx, ty)
        nx, ny = -ty / norm, tx / norm  # left normal
        outer.append((p1[0] - HALF * nx, p1[1] - HALF * ny))
        inner.append((p1[0] + HALF * nx, p1[1] + HALF * ny))
        a, b, c = math.dist(p0, p1), math.dist(p1, p2), math.dist(p0, p2)
        cross = (p1[0] - p0[0]) * (p2[1] - p1[1]) - (p1[1] - p0[1]) * (p2[0] - p1[0])
        if abs(cross) > 1e-12:
            min_radius = min(min_radius, a * b * c / (2 * abs(cross)))
    # Keep every 4th vertex: about 0.35 m spacing along the walls.
    outer, inner = outer[::4], inner[::4]
    s = center(0.0)
    ahead = center(0.01)
    theta = math.atan2(ahead[1] - s[1], ahead[0] - s[0])
    start = center(-0.12)
    st_theta = math.atan2(s[1] - start[1], s[0] - start[0])
    nx, ny = -math.sin(theta), math.cos(theta)
    write("gp", {
        "outer": outer,
        "inner": inner,
        "start_pose": {"x": round(start[0], 4), "y": round(start[1], 4), "theta": round(st_theta, 4)},
        "finish_line": {"a": rounded((s[0] + HALF * nx, s[1] + HALF * ny)), "b": rounded((s[0] - HALF * nx, s[1] - HALF * ny))},
    })
    print(f"gp: minimum centerline radius {min_radius:.2f} m")


if __name__ == "__main__":
    corridor()
    oval()
    trap()
    gp()
