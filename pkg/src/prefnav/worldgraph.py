"""Grid world on top of the hyperplane arrangement.

The robot moves on a uniform grid of square cells; the arrangement of the
obstacle hyperplanes partitions the workspace into convex polytopes, and each
free grid cell belongs to exactly one free polytope.  The polytope graph has
one vertex per free polytope and one undirected edge per shared facet, labeled
by the hyperplane that facet lies on.  A single grid step either stays inside
a polytope, crosses exactly one facet (an EdgeRef), or cuts a corner where two
or more hyperplanes meet (INVALID_TRANSITION).
"""

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import NamedTuple

import numpy as np

from .geometry import (
    Arrangement,
    HalfPlane,
    MapValidationError,
    ObstaclePolytope,
    _key_of,
    build_arrangement,
    locate_cell,
)

# Canonical action order; index k points at angle k * 45 degrees.
ACTIONS = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]

_STEP_COST = [1.0, math.sqrt(2.0), 1.0, math.sqrt(2.0),
              1.0, math.sqrt(2.0), 1.0, math.sqrt(2.0)]


class InvalidActionError(ValueError):
    pass


class EdgeRef(NamedTuple):
    from_vertex: int
    to_vertex: int

    def reverse(self):
        return EdgeRef(self.to_vertex, self.from_vertex)


class _InvalidTransition:
    """Marker for a step that changes polytope without crossing a graph edge."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INVALID_TRANSITION"


INVALID_TRANSITION = _InvalidTransition()


class PolytopeGraph:
    def __init__(self, vertices, adjacency, labels):
        self.vertices = list(vertices)
        self.adjacency = adjacency            # vertex -> sorted list of EdgeRef out of it
        self.labels = labels                  # (min id, max id) -> hyperplane row index

    def __repr__(self):
        return "PolytopeGraph(%d vertices, %d edges)" % (len(self.vertices), len(self.labels))


@dataclass
class GridMap:
    width: int
    height: int
    cell_size: float
    obstacles: list
    start: tuple
    goal_candidates: list
    true_goal_index: int
    preference_spec: dict
    T_max: int
    delta_T: int
    gamma_h: float
    blocked: frozenset = field(repr=False, default=frozenset())
    cell_to_polytope: dict = field(repr=False, default_factory=dict)
    arrangement: Arrangement = field(repr=False, default=None)
    graph: PolytopeGraph = field(repr=False, default=None)

    def center(self, cell):
        return ((cell[0] + 0.5) * self.cell_size, (cell[1] + 0.5) * self.cell_size)

    def in_range(self, cell):
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_free(self, cell):
        return self.in_range(cell) and cell not in self.blocked


# ---------------------------------------------------------------------------
# graph construction

def build_graph(arrangement):
    """Free polytopes, joined wherever one essential obstacle row flips sign."""
    vertices = [c.id for c in arrangement.cells if not c.is_obstacle]
    vset = set(vertices)
    adjacency = {v: [] for v in vertices}
    labels = {}
    n = arrangement.n
    for u in vertices:
        cu = arrangement.cells[u]
        for row, _ in cu.essential:
            if row >= n:
                continue
            tgt = cu.sign_vector.copy()
            tgt[row] = -tgt[row]
            vid = arrangement._key_to_id.get(_key_of(tgt))
            if vid is None or vid == u or vid not in vset:
                continue
            pair = (min(u, vid), max(u, vid))
            if pair in labels:
                continue
            labels[pair] = row
            adjacency[u].append(EdgeRef(u, vid))
            adjacency[vid].append(EdgeRef(vid, u))
    for v in vertices:
        adjacency[v].sort(key=lambda e: e.to_vertex)
    return PolytopeGraph(vertices, adjacency, labels)


def neighbors(graph, v):
    """Outgoing edges of v, sorted by destination id.  KeyError if v unknown."""
    return list(graph.adjacency[v])


# ---------------------------------------------------------------------------
# movement

def apply_action(grid, cell, action):
    if action not in _ACTION_SET:
        raise InvalidActionError("not an action: %r" % (action,))
    t = (cell[0] + action[0], cell[1] + action[1])
    if not grid.in_range(t):
        raise InvalidActionError("action %r leaves the grid from %r" % (action, cell))
    if t in grid.blocked:
        raise InvalidActionError("action %r from %r enters an obstacle" % (action, cell))
    return t


_ACTION_SET = set(ACTIONS)


def admissible_actions(grid, cell):
    out = []
    for a in ACTIONS:
        t = (cell[0] + a[0], cell[1] + a[1])
        if grid.is_free(t):
            out.append(a)
    return out


def step_cost(action):
    return _STEP_COST[ACTIONS.index(action)]


def edge_crossed(grid, cell, action):
    """None inside a polytope, an EdgeRef across one facet, INVALID_TRANSITION else."""
    t = apply_action(grid, cell, action)
    u = grid.cell_to_polytope[cell]
    v = grid.cell_to_polytope[t]
    if u == v:
        return None
    if (min(u, v), max(u, v)) in grid.graph.labels:
        return EdgeRef(u, v)
    return INVALID_TRANSITION


# ---------------------------------------------------------------------------
# map loading

_TOP_KEYS = {"width", "height", "cell_size", "obstacles", "start", "goal_candidates",
             "true_goal_index", "preference", "T_max", "delta_T", "gamma_h"}


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x):
    return _is_int(x) or (isinstance(x, float) and math.isfinite(x))


def _cell_pair(x, what):
    if not (isinstance(x, list) and len(x) == 2 and all(_is_int(v) for v in x)):
        raise MapValidationError("%s must be a pair of integers, got %r" % (what, x))
    return (x[0], x[1])


def _parse_obstacles(raw):
    if not (isinstance(raw, list) and raw):
        raise MapValidationError("obstacles must be a non-empty list")
    out = []
    for i, entry in enumerate(raw):
        if not (isinstance(entry, dict) and set(entry) == {"halfplanes"}):
            raise MapValidationError("obstacle %d must be {\"halfplanes\": [...]}" % i)
        hps = entry["halfplanes"]
        if not (isinstance(hps, list) and len(hps) >= 3):
            raise MapValidationError("obstacle %d needs at least 3 halfplanes" % i)
        planes = []
        for h in hps:
            if not (isinstance(h, dict) and set(h) == {"n", "c"}):
                raise MapValidationError("obstacle %d: halfplane must be {\"n\": [a, b], \"c\": d}" % i)
            n = h["n"]
            if not (isinstance(n, list) and len(n) == 2 and all(_is_num(v) for v in n)
                    and _is_num(h["c"])):
                raise MapValidationError("obstacle %d: malformed halfplane %r" % (i, h))
            planes.append(HalfPlane((float(n[0]), float(n[1])), float(h["c"])))
        out.append(ObstaclePolytope(i, planes))
    return out


def load_map(document):
    """Parse, validate, and build a map document into (GridMap, Arrangement, PolytopeGraph).

    The document is a JSON object (bytes, str, or an already-parsed dict).
    Every structural defect raises MapValidationError naming the offending
    field; nothing is silently defaulted or dropped.
    """
    if isinstance(document, (bytes, bytearray)):
        document = document.decode("utf-8", errors="replace")
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise MapValidationError("invalid JSON: %s" % e) from None
    if not isinstance(document, dict):
        raise MapValidationError("map document must be a JSON object")

    unknown = set(document) - _TOP_KEYS
    if unknown:
        raise MapValidationError("unknown keys: %s" % ", ".join(sorted(unknown)))
    missing = _TOP_KEYS - set(document)
    if missing:
        raise MapValidationError("missing keys: %s" % ", ".join(sorted(missing)))

    width, height = document["width"], document["height"]
    if not (_is_int(width) and width > 0):
        raise MapValidationError("width must be a positive integer")
    if not (_is_int(height) and height > 0):
        raise MapValidationError("height must be a positive integer")
    cs = document["cell_size"]
    if not (_is_num(cs) and cs > 0):
        raise MapValidationError("cell_size must be a positive number")
    cs = float(cs)
    for key in ("T_max", "delta_T"):
        if not (_is_int(document[key]) and document[key] >= 1):
            raise MapValidationError("%s must be a positive integer" % key)
    if not (_is_num(document["gamma_h"]) and document["gamma_h"] > 0):
        raise MapValidationError("gamma_h must be a positive number")

    obstacles = _parse_obstacles(document["obstacles"])
    bounds = (0.0, 0.0, width * cs, height * cs)

    # Centers must sit clear of every hyperplane or cell membership is ill posed.
    A = np.vstack([o.rows()[0] for o in obstacles])
    b = np.concatenate([o.rows()[1] for o in obstacles])
    norms = np.linalg.norm(A, axis=1)
    centers = np.array([[(i + 0.5) * cs, (j + 0.5) * cs]
                        for i in range(width) for j in range(height)])
    dist = np.abs(centers @ A.T - b) / norms
    if dist.min() < 1e-6:
        ci, row = np.unravel_index(int(dist.argmin()), dist.shape)
        raise MapValidationError(
            "cell center (%g, %g) lies within 1e-6 of hyperplane %d"
            % (centers[ci][0], centers[ci][1], row))

    arrangement = build_arrangement(obstacles, bounds, seed_points=centers)

    blocked = set()
    cell_to_polytope = {}
    idx = 0
    for i in range(width):
        for j in range(height):
            cid = locate_cell(arrangement, centers[idx])
            idx += 1
            if arrangement.cells[cid].is_obstacle:
                blocked.add((i, j))
            else:
                cell_to_polytope[(i, j)] = cid

    start = _cell_pair(document["start"], "start")
    if not (0 <= start[0] < width and 0 <= start[1] < height):
        raise MapValidationError("start %r out of range" % (start,))
    if start in blocked:
        raise MapValidationError("start %r is inside an obstacle" % (start,))

    raw_goals = document["goal_candidates"]
    if not (isinstance(raw_goals, list) and raw_goals):
        raise MapValidationError("goal_candidates must be a non-empty list")
    goals = []
    for g in raw_goals:
        gc = _cell_pair(g, "goal candidate")
        if not (0 <= gc[0] < width and 0 <= gc[1] < height):
            raise MapValidationError("goal candidate %r out of range" % (gc,))
        if gc in blocked:
            raise MapValidationError("goal candidate %r is inside an obstacle" % (gc,))
        if gc in goals:
            raise MapValidationError("duplicate goal candidate %r" % (gc,))
        goals.append(gc)
    tgi = document["true_goal_index"]
    if not (_is_int(tgi) and 0 <= tgi < len(goals)):
        raise MapValidationError("true_goal_index %r out of range" % (tgi,))

    graph = build_graph(arrangement)

    pref = document["preference"]
    _validate_preference(pref, obstacles, arrangement, graph)

    grid = GridMap(
        width=width, height=height, cell_size=cs, obstacles=obstacles,
        start=start, goal_candidates=goals, true_goal_index=tgi,
        preference_spec=pref, T_max=document["T_max"], delta_T=document["delta_T"],
        gamma_h=float(document["gamma_h"]), blocked=frozenset(blocked),
        cell_to_polytope=cell_to_polytope, arrangement=arrangement, graph=graph)
    return grid, arrangement, graph


def _validate_preference(pref, obstacles, arrangement, graph):
    if not isinstance(pref, dict):
        raise MapValidationError("preference must be an object")
    if "mode" in pref:
        if set(pref) != {"mode", "obstacle"} or pref["mode"] != "auto_ccw":
            raise MapValidationError("preference mode form is {\"mode\": \"auto_ccw\", \"obstacle\": k}")
        k = pref["obstacle"]
        if not (_is_int(k) and 0 <= k < len(obstacles)):
            raise MapValidationError("preference obstacle index %r out of range" % (k,))
        return
    key_to_vertex = {arrangement.cells[v].key: v for v in graph.vertices}
    need = {arrangement.cells[v].key for v in graph.vertices if graph.adjacency[v]}
    have = set(pref)
    if have != need:
        raise MapValidationError(
            "explicit preference must cover every polytope with a neighbor "
            "(missing %d, unknown %d)" % (len(need - have), len(have - need)))
    for key, edge in pref.items():
        if not (isinstance(edge, str) and edge.count("-") == 1):
            raise MapValidationError("preference edge %r must be \"uKey-vKey\"" % (edge,))
        ukey, vkey = edge.split("-")
        u, v = key_to_vertex.get(ukey), key_to_vertex.get(vkey)
        if u is None or v is None or u != key_to_vertex[key]:
            raise MapValidationError("preference edge %r does not leave polytope %s" % (edge, key))
        if (min(u, v), max(u, v)) not in graph.labels:
            raise MapValidationError("preference edge %r is not a graph edge" % (edge,))


def resolve_preference(grid, arrangement, graph):
    """Preferred exit edge per polytope, from the map's preference spec."""
    pref = grid.preference_spec
    if "mode" in pref:
        return _auto_ccw(arrangement, graph, pref["obstacle"])
    key_to_vertex = {arrangement.cells[v].key: v for v in graph.vertices}
    out = {}
    for key, edge in pref.items():
        ukey, vkey = edge.split("-")
        out[key_to_vertex[key]] = EdgeRef(key_to_vertex[ukey], key_to_vertex[vkey])
    return out


def _auto_ccw(arrangement, graph, obstacle):
    """Exit edges that advance counterclockwise around one obstacle.

    Each polytope prefers the neighbor whose interior point has the largest
    wrapped angular advance around the obstacle centroid; ties break toward
    the smaller destination id.
    """
    lo, hi = arrangement.obstacle_slices[arrangement.obstacle_ids.index(obstacle)]
    inside = [c for c in arrangement.cells if np.all(c.sign_vector[lo:hi] == -1)]
    centroid = np.mean([c.polygon.mean(axis=0) for c in inside], axis=0)

    def ang(v):
        p = arrangement.cells[v].interior_point
        return math.atan2(p[1] - centroid[1], p[0] - centroid[0])

    out = {}
    for v in graph.vertices:
        es = neighbors(graph, v)
        if not es:
            continue
        av = ang(v)
        best, best_adv = None, -math.inf
        for e in es:
            adv = (ang(e.to_vertex) - av + math.pi) % (2 * math.pi) - math.pi
            if adv > best_adv or (adv == best_adv and e.to_vertex < best.to_vertex):
                best, best_adv = e, adv
        out[v] = best
    return out


# ---------------------------------------------------------------------------
# bundled maps

def bundled_map_names():
    root = resources.files("prefnav").joinpath("maps")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name):
    res = resources.files("prefnav").joinpath("maps").joinpath(name + ".json")
    try:
        data = res.read_bytes()
    except (FileNotFoundError, OSError):
        raise MapValidationError("unknown bundled map %r (have: %s)"
                                 % (name, ", ".join(bundled_map_names()))) from None
    return load_map(data)
