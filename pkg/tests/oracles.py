"""Independent reference implementations used only by the test suite.

Everything in this file favors brute force over cleverness: dense point
sampling, polygon clipping, exhaustive vertex enumeration, plain Dijkstra.
None of it shares code with the package under test beyond numpy, so each
check compares two genuinely different routes to the same value.
"""

import heapq
import itertools
import math

import numpy as np

TOL = 1e-9


def box_rows(bounds):
    """The four bounding halfplanes of an (xmin, ymin, xmax, ymax) rectangle."""
    xmin, ymin, xmax, ymax = bounds
    A = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
    b = np.array([-xmin, xmax, -ymin, ymax])
    return A, b


def grid_points(bounds, n):
    xmin, ymin, xmax, ymax = bounds
    xs = xmin + (np.arange(n) + 0.5) * (xmax - xmin) / n
    ys = ymin + (np.arange(n) + 0.5) * (ymax - ymin) / n
    px, py = np.meshgrid(xs, ys)
    return np.column_stack([px.ravel(), py.ravel()])


def line_intersections(A, b, bounds, margin=1.0):
    """Pairwise intersection points of all lines (including the box edges).

    Points farther than `margin` outside the box are dropped; everything else
    is kept so rings around them can reach every cell wedge.
    """
    Ab, bb = box_rows(bounds)
    Af = np.vstack([A, Ab])
    bf = np.concatenate([b, bb])
    xmin, ymin, xmax, ymax = bounds
    pts = []
    for i, j in itertools.combinations(range(len(Af)), 2):
        det = Af[i, 0] * Af[j, 1] - Af[i, 1] * Af[j, 0]
        if abs(det) < 1e-12:
            continue
        x = (bf[i] * Af[j, 1] - bf[j] * Af[i, 1]) / det
        y = (Af[i, 0] * bf[j] - Af[j, 0] * bf[i]) / det
        if xmin - margin <= x <= xmax + margin and ymin - margin <= y <= ymax + margin:
            pts.append((x, y))
    return np.array(pts) if pts else np.empty((0, 2))


def ring_points(centers, radius=1e-3, spokes=256):
    # small phase keeps spokes off axis-aligned lines through the center
    ang = np.arange(spokes) * (2.0 * math.pi / spokes) + 0.00731
    offs = np.column_stack([np.cos(ang), np.sin(ang)]) * radius
    return (centers[:, None, :] + offs[None, :, :]).reshape(-1, 2)


def sample_sign_set(A, b, bounds, grid_n=60, spokes=256, radius=1e-3):
    """All sign tuples over the obstacle rows realized by a dense point family.

    The family is a coarse grid plus rings around every arrangement vertex.
    Every bounded cell has a vertex, and when vertices are pairwise separated
    by more than ~16*radius and line crossing angles stay above the spoke
    spacing, some ring point lands inside each cell wedge, so the family
    witnesses every cell.
    """
    fams = [grid_points(bounds, grid_n)]
    centers = line_intersections(A, b, bounds)
    if len(centers):
        fams.append(ring_points(centers, radius, spokes))
    P = np.vstack(fams)
    xmin, ymin, xmax, ymax = bounds
    keep = (
        (P[:, 0] > xmin + 1e-8) & (P[:, 0] < xmax - 1e-8)
        & (P[:, 1] > ymin + 1e-8) & (P[:, 1] < ymax - 1e-8)
    )
    P = P[keep]
    G = P @ A.T - b
    off = np.abs(G).min(axis=1) > 1e-8
    P = P[off]
    signs = np.where(G[off] > 0, 1, -1).astype(np.int8)
    uniq = {}
    for k in range(len(P)):
        uniq.setdefault(tuple(int(s) for s in signs[k]), P[k])
    return uniq


# ---------------------------------------------------------------------------
# polygon clipping route (essential constraints by literal removal test)

def clip_poly(poly, nx, ny, c):
    """Sutherland-Hodgman clip of a convex polygon by nx*x + ny*y <= c."""
    out = []
    k = len(poly)
    for i in range(k):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % k]
        dp = nx * px + ny * py - c
        dq = nx * qx + ny * qy - c
        if dp <= 0.0:
            out.append((px, py))
            if dq > 0.0:
                t = dp / (dp - dq)
                out.append((px + t * (qx - px), py + t * (qy - py)))
        elif dq <= 0.0:
            t = dp / (dp - dq)
            out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def poly_area(poly):
    if len(poly) < 3:
        return 0.0
    s = 0.0
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def signed_region_polygon(A_all, b_all, signs_all, bounds, skip=None):
    """Clip an inflated box down to the signed region, optionally dropping one row.

    A_all/b_all/signs_all cover obstacle rows and the 4 bound rows; the seed
    polygon is the box inflated by 5 units so dropped bound rows matter.
    """
    xmin, ymin, xmax, ymax = bounds
    g = 5.0
    poly = [(xmin - g, ymin - g), (xmax + g, ymin - g), (xmax + g, ymax + g), (xmin - g, ymax + g)]
    for i in range(len(A_all)):
        if i == skip:
            continue
        s = signs_all[i]
        poly = clip_poly(poly, -s * A_all[i, 0], -s * A_all[i, 1], -s * b_all[i])
        if not poly:
            return []
    return poly


def essential_by_removal(A_all, b_all, signs_all, bounds):
    """Row indices whose removal grows the signed region.

    Fast path: a row is essential iff it carries a positive-length facet of
    the full region polygon (for a full-dimensional convex region these are
    equivalent: pushing past a facet midpoint grows the set, and any growth
    chunk connects to the region through a positive-length crossing on the
    line). Rows with a borderline vertex pattern fall back to the literal
    area-comparison removal test.
    """
    poly = signed_region_polygon(A_all, b_all, signs_all, bounds)
    if not poly:
        return []
    V = np.array(poly)
    base = poly_area(poly)
    out = []
    for k in range(len(A_all)):
        d = np.abs(V @ A_all[k] - b_all[k])
        on = int(np.sum(d < 1e-7))
        if on >= 2:
            # a short doubled vertex is not a real facet; re-check those
            pts = V[d < 1e-7]
            span = 0.0
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    span = max(span, float(np.hypot(*(pts[i] - pts[j]))))
            if span > 1e-6:
                out.append(k)
                continue
        if on == 0:
            continue
        relaxed = poly_area(signed_region_polygon(A_all, b_all, signs_all, bounds, skip=k))
        if relaxed > base + 1e-8:
            out.append(k)
    return out


# ---------------------------------------------------------------------------
# LP by exhaustive vertex enumeration

def lp_by_enumeration(c, A, b, feas_tol=1e-7):
    """Maximize c.x over {Ax <= b} by checking every constraint-pair vertex.

    Only valid for bounded feasible regions (callers include box rows).
    Returns (value, point) or (None, None) when no feasible vertex exists.
    """
    best_v, best_p = None, None
    for i, j in itertools.combinations(range(len(A)), 2):
        det = A[i, 0] * A[j, 1] - A[i, 1] * A[j, 0]
        if abs(det) < 1e-12:
            continue
        x = (b[i] * A[j, 1] - b[j] * A[i, 1]) / det
        y = (A[i, 0] * b[j] - A[j, 0] * b[i]) / det
        p = np.array([x, y])
        if np.all(A @ p - b <= feas_tol):
            v = float(c[0] * x + c[1] * y)
            if best_v is None or v > best_v:
                best_v, best_p = v, p
    return best_v, best_p


# ---------------------------------------------------------------------------
# plain Dijkstra with a transition filter (A* reference)

STEPS = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def dijkstra_grid(free, start, allowed=None):
    """Exact distances from start over the 8-connected free cells.

    free: set of (i, j); allowed: optional predicate on (cell, next_cell).
    """
    dist = {start: 0.0}
    pq = [(0.0, start)]
    while pq:
        d, s = heapq.heappop(pq)
        if d > dist.get(s, math.inf):
            continue
        for dx, dy in STEPS:
            t = (s[0] + dx, s[1] + dy)
            if t not in free:
                continue
            if allowed is not None and not allowed(s, t):
                continue
            nd = d + math.hypot(dx, dy)
            if nd < dist.get(t, math.inf) - 1e-12:
                dist[t] = nd
                heapq.heappush(pq, (nd, t))
    return dist


# ---------------------------------------------------------------------------
# random arrangement instances with separation guarantees

def random_map(rng, n_min=1, n_max=5, bounds=(0.0, 0.0, 10.0, 10.0)):
    """Random non-overlapping convex obstacles in general position.

    Guarantees (by construction plus rejection): pairwise line directions
    differ by >= ~3.5 degrees, arrangement vertices are pairwise >= 0.02
    apart, obstacles keep >= 0.15 clearance from each other and >= 0.3 from
    the bounds. These margins make the ring-sampling oracle exhaustive.
    """
    while True:
        n_obs = int(rng.integers(n_min, n_max + 1))
        sizes = [int(rng.integers(3, 7)) for _ in range(n_obs)]
        total = sum(sizes)
        base = rng.uniform(0.0, math.pi)
        slot = math.pi / total
        dirs = (base + np.arange(total) * slot + rng.uniform(-0.2, 0.2, total) * slot) % math.pi
        rng.shuffle(dirs)
        obstacles = _place_obstacles(rng, sizes, dirs, bounds)
        if obstacles is None:
            continue
        A = np.vstack([o[0] for o in obstacles])
        b = np.concatenate([o[1] for o in obstacles])
        pts = line_intersections(A, b, bounds)
        if len(pts) > 1:
            d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
            d2[np.arange(len(pts)), np.arange(len(pts))] = np.inf
            if d2.min() < 0.02 ** 2:
                continue
        return obstacles


def _place_obstacles(rng, sizes, dirs, bounds):
    xmin, ymin, xmax, ymax = bounds
    used = 0
    polys = []
    out = []
    for k in sizes:
        got = None
        for _ in range(40):
            c = np.array([rng.uniform(xmin + 2.0, xmax - 2.0), rng.uniform(ymin + 2.0, ymax - 2.0)])
            rho = rng.uniform(0.7, 1.4)
            g = np.sort(dirs[used:used + k])
            # alternate half-turns so the outward normals positively span the plane
            ang = np.array([g[i] + (math.pi if i % 2 else 0.0) for i in range(k)])
            A = np.column_stack([np.cos(ang), np.sin(ang)])
            b = A @ c + rho * rng.uniform(0.55, 1.0, k)
            poly = signed_region_polygon(A, b, -np.ones(k, dtype=int), (xmin - 3, ymin - 3, xmax + 3, ymax + 3))
            if poly_area(poly) < 0.3:
                continue
            V = np.array(poly)
            if (V[:, 0].min() < xmin + 0.3 or V[:, 0].max() > xmax - 0.3
                    or V[:, 1].min() < ymin + 0.3 or V[:, 1].max() > ymax - 0.3):
                continue
            if any(_convex_gap(V, W) < 0.15 for W in polys):
                continue
            got = (A, b, V)
            break
        if got is None:
            return None
        polys.append(got[2])
        out.append((got[0], got[1]))
        used += k
    return out


def _convex_gap(V, W):
    """Separation of two convex polygons by directional support gaps (0 if overlapping)."""
    gap = -math.inf
    for P, Q in ((V, W), (W, V)):
        for i in range(len(P)):
            e = P[(i + 1) % len(P)] - P[i]
            n = np.array([e[1], -e[0]])
            ln = np.hypot(*n)
            if ln < 1e-12:
                continue
            n = n / ln
            g = (Q @ n).min() - (P @ n).max()
            gap = max(gap, g)
    return gap
