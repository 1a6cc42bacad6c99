"""Hyperplane arrangements of polytopic obstacle maps.

Obstacles are convex polytopes {x : Ax <= b}. Stacking every obstacle row
into one global list splits the bounded environment into sign-constant
cells: cell j is the set of points with sign(Ax - b) equal to a fixed
vector over {-1, +1}. Each cell keeps only its essential (non-redundant)
constraints, which are exactly its facets and drive both adjacency in the
polytope graph and point-location.

Row indexing convention: rows 0..n-1 are obstacle rows in obstacle order.
Four environment-bound rows are tracked internally after them, in the order
n+0 xmin, n+1 xmax, n+2 ymin, n+3 ymax; they always carry sign -1 inside
the environment and may appear in essential sets, but sign vectors exposed
on cells cover the obstacle rows only.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

TIE_TOL = 1e-9      # points closer than this to a hyperplane have no sign
ESS_TOL = 1e-7      # minimum LP violation for a constraint to count as essential
FEAS_SHRINK = 1e-8  # interior margin when probing a flipped sign vector
_LP_BOX = 1e7       # implicit bounding box of the LP kernel
_SHORT_FACET = 1e-5


class MapValidationError(ValueError):
    """Bad obstacle geometry or map input."""


class BoundaryPointError(ValueError):
    """Point within tie tolerance of a hyperplane, so its sign is undefined."""


class ArrangementIncompleteError(RuntimeError):
    """A located sign vector has no enumerated cell; signals an enumeration bug."""


class LPFailureError(RuntimeError):
    """The LP kernel produced an inconsistent result."""


class HalfPlane:
    """The set {x : normal . x <= offset}, stored with max(|n1|, |n2|) = 1."""

    __slots__ = ("normal", "offset")

    def __init__(self, normal, offset):
        n = np.asarray(normal, dtype=float)
        s = float(np.max(np.abs(n)))
        if not s > 1e-12:
            raise MapValidationError("halfplane normal must be nonzero")
        self.normal = n / s
        self.offset = float(offset) / s

    def __repr__(self):
        return "HalfPlane((%g, %g), %g)" % (self.normal[0], self.normal[1], self.offset)


class ObstaclePolytope:
    """Convex obstacle given as an ordered list of halfplanes."""

    __slots__ = ("id", "halfplanes")

    def __init__(self, id, halfplanes):
        self.id = int(id)
        self.halfplanes = list(halfplanes)
        if len(self.halfplanes) < 3:
            raise MapValidationError("obstacle %d: needs at least 3 halfplanes" % self.id)

    def rows(self):
        A = np.array([h.normal for h in self.halfplanes])
        b = np.array([h.offset for h in self.halfplanes])
        return A, b


@dataclass
class Cell:
    id: int
    key: str                  # canonical hash of the sign vector, stable across builds
    sign_vector: np.ndarray   # int8 over the obstacle rows
    essential: list           # (row index, side) pairs, indices >= n are bound rows
    is_obstacle: bool
    obstacle_id: int | None
    polygon: np.ndarray       # CCW vertex loop
    interior_point: np.ndarray


class Arrangement:
    def __init__(self, hyperplanes, A, b, bounds, obstacle_slices, obstacle_ids, cells, key_to_id):
        self.hyperplanes = hyperplanes
        self.A = A
        self.b = b
        self.bounds = bounds
        self.obstacle_slices = obstacle_slices
        self.obstacle_ids = obstacle_ids
        self.cells = cells
        self._key_to_id = key_to_id
        self._A_ext, self._b_ext = _with_bound_rows(A, b, bounds)

    @property
    def n(self):
        return len(self.b)

    @property
    def free_cells(self):
        return [c for c in self.cells if not c.is_obstacle]

    def cell_by_key(self, key):
        cid = self._key_to_id.get(key)
        return self.cells[cid] if cid is not None else None

    def cell_system(self, cell):
        """The cell as rows C x <= D over obstacle plus bound rows."""
        s = np.concatenate([cell.sign_vector.astype(float), -np.ones(4)])
        return -s[:, None] * self._A_ext, -s * self._b_ext


def _with_bound_rows(A, b, bounds):
    xmin, ymin, xmax, ymax = bounds
    Ab = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
    bb = np.array([-xmin, xmax, -ymin, ymax])
    return np.vstack([A, Ab]), np.concatenate([b, bb])


def _key_of(signs):
    return hashlib.blake2b(signs.tobytes(), digest_size=8).hexdigest()


# ---------------------------------------------------------------------------
# LP kernel

def _lp_max(c, C, D, rng, box=_LP_BOX):
    """Maximize c.x over {Cx <= D} within an implicit square box.

    Randomized-incremental: constraints are processed in shuffled order and
    whenever the running optimum violates one, the new optimum is found on
    that constraint's line by a 1D interval intersection against everything
    processed so far. Returns (status, point, value).
    """
    cx, cy = float(c[0]), float(c[1])
    m = len(D)
    boxC = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    boxD = np.array([box, box, box, box])
    if m:
        perm = rng.permutation(m)
        W = np.vstack([boxC, C[perm]])
        V = np.concatenate([boxD, D[perm]])
    else:
        W, V = boxC, boxD
    x0 = box if cx > 0 else (-box if cx < 0 else box)
    y0 = box if cy > 0 else (-box if cy < 0 else box)
    x = np.array([x0, y0])
    for i in range(4, len(V)):
        if W[i, 0] * x[0] + W[i, 1] * x[1] <= V[i] + TIE_TOL:
            continue
        n0, n1 = W[i]
        nn = n0 * n0 + n1 * n1
        p0 = np.array([n0 * V[i] / nn, n1 * V[i] / nn])
        dvec = np.array([-n1, n0])
        R = W[:i]
        adv = R @ dvec
        rhs = V[:i] - R @ p0
        pos = adv > 1e-14
        neg = adv < -1e-14
        thi = np.min(rhs[pos] / adv[pos]) if np.any(pos) else np.inf
        tlo = np.max(rhs[neg] / adv[neg]) if np.any(neg) else -np.inf
        flat = ~(pos | neg)
        if np.any(rhs[flat] < -TIE_TOL) or tlo > thi + TIE_TOL:
            return "infeasible", None, -np.inf
        s = cx * dvec[0] + cy * dvec[1]
        if s > 1e-14:
            t = thi
        elif s < -1e-14:
            t = tlo
        else:
            t = min(max(0.0, tlo), thi)
        x = p0 + t * dvec
    return "optimal", x, cx * x[0] + cy * x[1]


def solve_lp2d(objective, constraints, seed=0):
    """Maximize objective . x subject to a list of HalfPlane constraints.

    Returns (status, point, value) with status in {"optimal", "infeasible",
    "unbounded"}. Intended for map-scale inputs; coordinates beyond 1e6 hit
    the kernel's implicit box.
    """
    C = np.array([h.normal for h in constraints]).reshape(-1, 2)
    D = np.array([h.offset for h in constraints])
    rng = np.random.default_rng(seed)
    status, x, v = _lp_max(objective, C, D, rng)
    if status != "optimal":
        return status, None, -math.inf
    if np.max(np.abs(x)) >= _LP_BOX * (1.0 - 1e-6):
        status2, x2, v2 = _lp_max(objective, C, D, np.random.default_rng(seed), box=_LP_BOX * 64)
        if status2 != "optimal" or v2 > v + 1e-6 * (1.0 + abs(v)):
            return "unbounded", None, math.inf
        x, v = x2, v2
    if len(D) and np.max(C @ x - D) > 1e-6:
        raise LPFailureError("optimal point violates a constraint beyond tolerance")
    return "optimal", x, v


# ---------------------------------------------------------------------------
# per-cell essential sets and polygons

def _hull_indices(pts):
    """Andrew monotone chain; CCW hull vertex indices of a point array."""
    order = sorted(range(len(pts)), key=lambda k: (pts[k][0], pts[k][1]))

    def half(seq):
        out = []
        for k in seq:
            while len(out) >= 2:
                ox, oy = pts[out[-2]]
                ax, ay = pts[out[-1]]
                if (ax - ox) * (pts[k][1] - oy) - (ay - oy) * (pts[k][0] - ox) <= 0.0:
                    out.pop()
                else:
                    break
            out.append(k)
        return out

    lower = half(order)
    upper = half(order[::-1])
    return lower[:-1] + upper[:-1]


def _essential_probe(C, D, k, rng):
    """The defining LP test: can constraint k be violated subject to the rest?"""
    keep = np.arange(len(D)) != k
    Ck = np.vstack([C[keep], C[k][None, :]])
    Dk = np.concatenate([D[keep], [D[k] + 1.0]])
    status, _, v = _lp_max(C[k], Ck, Dk, rng)
    if status != "optimal":
        raise LPFailureError("essential probe returned %s on row %d" % (status, k))
    return v > D[k] + ESS_TOL


def _cell_geometry(C, D, witness, rng):
    """Essential rows (by polarity in the dual, LP-confirmed at the margins)
    and the cell polygon. Returns (essential row indices, polygon CCW array).

    With the cell translated so `witness` is the origin, constraint k maps to
    the dual point C_k / slack_k; essential constraints are exactly the
    vertices of the dual convex hull. Hull vertices with clearly positive
    facets are accepted outright, short-facet and near-boundary rows are
    settled by the LP probe.
    """
    slack = D - C @ witness
    if np.min(slack) <= 0:
        raise LPFailureError("witness point is not strictly interior")
    duals = C / slack[:, None]
    cand = _hull_indices(duals)
    hull_pts = [duals[i] for i in cand]

    # interior dual points sitting close to the hull boundary get the LP probe
    for k in range(len(D)):
        if k in cand:
            continue
        margin = math.inf
        for i in range(len(hull_pts)):
            ux, uy = hull_pts[i]
            vx, vy = hull_pts[(i + 1) % len(hull_pts)]
            ex, ey = vx - ux, vy - uy
            ln = math.hypot(ex, ey)
            if ln < 1e-300:
                continue
            margin = min(margin, ((duals[k][0] - ux) * ey - (duals[k][1] - uy) * ex) / ln)
        if margin < 1e-5 * (1.0 + float(np.hypot(*duals[k]))):
            if _essential_probe(C, D, k, rng):
                cand.append(k)

    cand = sorted(cand, key=lambda k: math.atan2(C[k, 1], C[k, 0]))
    for _ in range(len(D) + 8):
        poly, short, bad_row = _polygon_from_rows(C, D, cand)
        if bad_row is not None:
            cand = sorted(set(cand) | {bad_row}, key=lambda k: math.atan2(C[k, 1], C[k, 0]))
            continue
        drop = [k for k in short if not _essential_probe(C, D, k, rng)]
        if not drop:
            return cand, poly
        cand = [k for k in cand if k not in drop]
        if len(cand) < 3:
            raise LPFailureError("degenerate cell: fewer than 3 facets")
    raise LPFailureError("essential set failed to stabilize")


def _polygon_from_rows(C, D, rows):
    """Vertices of consecutive angle-sorted rows. Also reports rows whose
    facet is suspiciously short and any row violated by a vertex."""
    k = len(rows)
    verts = []
    for i in range(k):
        a, bb = rows[i], rows[(i + 1) % k]
        det = C[a, 0] * C[bb, 1] - C[a, 1] * C[bb, 0]
        if abs(det) < 1e-12:
            return None, [], rows[i]  # forces a re-probe via the caller loop
        x = (D[a] * C[bb, 1] - D[bb] * C[a, 1]) / det
        y = (C[a, 0] * D[bb] - C[bb, 0] * D[a]) / det
        verts.append((x, y))
    V = np.array(verts)
    g = C @ V.T - D[:, None]
    worst = g.max(axis=1)
    bad = np.where(worst > 1e-6)[0]
    for j in bad:
        if j not in rows:
            return None, [], int(j)
    short = []
    for i in range(k):
        prev = verts[i - 1]
        cur = verts[i]
        if math.hypot(cur[0] - prev[0], cur[1] - prev[1]) < _SHORT_FACET:
            short.append(rows[i])
    area = 0.0
    for i in range(k):
        x1, y1 = verts[i - 1]
        x2, y2 = verts[i]
        area += x1 * y2 - x2 * y1
    if area < 0:
        V = V[::-1]
    return V, short, None


# ---------------------------------------------------------------------------
# arrangement construction

def _validate_obstacles(obstacles, bounds, rng):
    xmin, ymin, xmax, ymax = bounds
    if not (xmax > xmin + 1e-9 and ymax > ymin + 1e-9):
        raise MapValidationError("degenerate bounds rectangle")
    seen = set()
    for obs in obstacles:
        if obs.id in seen:
            raise MapValidationError("duplicate obstacle id %d" % obs.id)
        seen.add(obs.id)
        A, b = obs.rows()
        pts = []
        for c in ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)):
            status, x, v = _lp_max(c, A, b, rng)
            if status != "optimal":
                raise MapValidationError("obstacle %d: empty intersection" % obs.id)
            if abs(v) >= _LP_BOX * 0.5:
                raise MapValidationError("obstacle %d: unbounded intersection" % obs.id)
            pts.append(x)
        status, _, _ = _lp_max((0.0, 0.0), A, b - 1e-7, rng)
        if status != "optimal":
            raise MapValidationError("obstacle %d: degenerate (no interior)" % obs.id)
        xs = [q[0] for q in pts]
        ys = [q[1] for q in pts]
        if min(xs) < xmin + 1e-7 or max(xs) > xmax - 1e-7 or min(ys) < ymin + 1e-7 or max(ys) > ymax - 1e-7:
            raise MapValidationError("obstacle %d: not strictly inside bounds" % obs.id)


def _reject_coincident(A_ext, b_ext):
    m = len(b_ext)
    for i in range(m):
        for j in range(i + 1, m):
            cr = A_ext[i, 0] * A_ext[j, 1] - A_ext[i, 1] * A_ext[j, 0]
            if abs(cr) > 1e-9:
                continue
            dot = A_ext[i] @ A_ext[j]
            same = dot > 0 and abs(b_ext[i] - b_ext[j]) < 1e-9
            same = same or (dot < 0 and abs(b_ext[i] + b_ext[j]) < 1e-9)
            if same:
                raise MapValidationError("coincident hyperplanes (rows %d and %d)" % (i, j))


def _default_seeds(bounds, per_axis=32):
    xmin, ymin, xmax, ymax = bounds
    xs = xmin + (np.arange(per_axis) + 0.5) * (xmax - xmin) / per_axis
    ys = ymin + (np.arange(per_axis) + 0.5) * (ymax - ymin) / per_axis
    px, py = np.meshgrid(xs, ys)
    return np.column_stack([px.ravel(), py.ravel()])


def build_arrangement(obstacles, bounds, seed_points=None, lp_seed=0):
    """Enumerate every arrangement cell inside the bounds rectangle.

    Discovery seeds come from a point lattice (grid-cell centers when called
    through map loading); the cell set is then closed under single-row sign
    flips of essential obstacle constraints. That closure reaches every cell:
    any two interior points are joined by a segment inside the box, and the
    segment only ever crosses obstacle-row facets.
    """
    obstacles = list(obstacles)
    if not obstacles:
        raise MapValidationError("at least one obstacle is required")
    bounds = tuple(float(v) for v in bounds)
    rng = np.random.default_rng(lp_seed)
    _validate_obstacles(obstacles, bounds, rng)

    rows = []
    slices = []
    obstacle_ids = []
    for obs in obstacles:
        lo = len(rows)
        rows.extend(obs.halfplanes)
        slices.append((lo, len(rows)))
        obstacle_ids.append(obs.id)
    A = np.array([h.normal for h in rows])
    b = np.array([h.offset for h in rows])
    n = len(rows)
    A_ext, b_ext = _with_bound_rows(A, b, bounds)
    _reject_coincident(A_ext, b_ext)

    if seed_points is None:
        seed_points = _default_seeds(bounds)
    xmin, ymin, xmax, ymax = bounds

    visited = {}
    pending = deque()
    cells = []

    def try_enqueue(signs, witness):
        kb = signs.tobytes()
        if kb in visited:
            return
        visited[kb] = len(cells)
        cells.append(None)
        pending.append((signs, witness))

    for p in np.asarray(seed_points, dtype=float):
        if not (xmin + TIE_TOL < p[0] < xmax - TIE_TOL and ymin + TIE_TOL < p[1] < ymax - TIE_TOL):
            continue
        g = A @ p - b
        if np.abs(g).min() <= TIE_TOL:
            continue
        try_enqueue(np.where(g > 0, 1, -1).astype(np.int8), p.copy())
    if not pending:
        raise MapValidationError("no usable seed points inside bounds")

    while pending:
        signs, witness = pending.popleft()
        cid = visited[signs.tobytes()]
        s_ext = np.concatenate([signs.astype(float), -np.ones(4)])
        C = -s_ext[:, None] * A_ext
        D = -s_ext * b_ext
        ess_rows, poly = _cell_geometry(C, D, witness, rng)
        essential = sorted((int(k), int(signs[k]) if k < n else -1) for k in ess_rows)
        interior = poly.mean(axis=0)
        is_obs = False
        obs_id = None
        for oi, (lo, hi) in enumerate(slices):
            if np.all(signs[lo:hi] == -1):
                is_obs = True
                obs_id = obstacle_ids[oi]
                break
        cells[cid] = Cell(
            id=cid, key=_key_of(signs), sign_vector=signs, essential=essential,
            is_obstacle=is_obs, obstacle_id=obs_id, polygon=poly, interior_point=interior,
        )
        for k, _side in essential:
            if k >= n:
                continue
            flipped = signs.copy()
            flipped[k] = -signs[k]
            if flipped.tobytes() in visited:
                continue
            w = _flip_witness(A_ext, b_ext, cells[cid].polygon, flipped, k, n, bounds, rng)
            if w is not None:
                try_enqueue(flipped, w)

    key_to_id = {c.key: c.id for c in cells}
    return Arrangement(rows, A, b, bounds, slices, obstacle_ids, cells, key_to_id)


def _flip_witness(A_ext, b_ext, polygon, flipped, k, n, bounds, rng):
    """A strictly interior point of the region with sign vector `flipped`,
    or None when that region is empty.

    Fast path: push the midpoint of the source cell's facet on row k across
    the line. Falls back to a margin-shrunk feasibility LP when the facet is
    degenerate or the push lands dirty.
    """
    side = float(flipped[k])
    d = np.abs(polygon @ A_ext[k] - b_ext[k])
    onk = polygon[d < 1e-7]
    if len(onk) >= 2:
        mid = onk.mean(axis=0)
        others = np.abs(A_ext @ mid - b_ext)
        others[k] = np.inf
        clear = float(others.min())
        delta = min(1e-4, clear / 4.0)
        if delta > 10 * TIE_TOL:
            q = mid + side * delta * A_ext[k]
            if _clean_signs_match(A_ext, b_ext, q, flipped, n, bounds):
                return q
    s_ext = np.concatenate([flipped.astype(float), -np.ones(4)])
    C = -s_ext[:, None] * A_ext
    D = -s_ext * b_ext - FEAS_SHRINK
    status, x, _ = _lp_max((0.0, 0.0), C, D, rng)
    if status != "optimal":
        return None
    if not _clean_signs_match(A_ext, b_ext, x, flipped, n, bounds):
        return None
    return x


def _clean_signs_match(A_ext, b_ext, p, signs, n, bounds):
    xmin, ymin, xmax, ymax = bounds
    if not (xmin + TIE_TOL < p[0] < xmax - TIE_TOL and ymin + TIE_TOL < p[1] < ymax - TIE_TOL):
        return False
    g = A_ext @ p - b_ext
    if np.abs(g).min() <= TIE_TOL:
        return False
    got = np.where(g[:n] > 0, 1, -1).astype(np.int8)
    return bool(np.all(got == signs) and np.all(g[n:] < 0))


# ---------------------------------------------------------------------------
# public point and cell operations

def sign_vector(arrangement, point):
    """Signs of A.point - b over the obstacle rows, entries in {-1, +1}."""
    p = np.asarray(point, dtype=float)
    xmin, ymin, xmax, ymax = arrangement.bounds
    if not (xmin + TIE_TOL < p[0] < xmax - TIE_TOL and ymin + TIE_TOL < p[1] < ymax - TIE_TOL):
        raise BoundaryPointError("point (%g, %g) is not strictly inside bounds" % (p[0], p[1]))
    g = arrangement.A @ p - arrangement.b
    worst = int(np.abs(g).argmin())
    if abs(g[worst]) <= TIE_TOL:
        raise BoundaryPointError("point (%g, %g) lies on hyperplane %d" % (p[0], p[1], worst))
    return np.where(g > 0, 1, -1).astype(np.int8)


def locate_cell(arrangement, point):
    """Id of the unique cell containing the point."""
    signs = sign_vector(arrangement, point)
    cid = arrangement._key_to_id.get(_key_of(signs))
    if cid is None:
        raise ArrangementIncompleteError(
            "no enumerated cell for sign vector at (%g, %g)" % (point[0], point[1]))
    return cid


def essential_constraints(arrangement, cell):
    """Recompute the cell's non-redundant constraints, one LP probe per row."""
    C, D = arrangement.cell_system(cell)
    rng = np.random.default_rng(0)
    n = arrangement.n
    out = []
    for k in range(len(D)):
        if _essential_probe(C, D, k, rng):
            side = int(cell.sign_vector[k]) if k < n else -1
            out.append((k, side))
    return out
