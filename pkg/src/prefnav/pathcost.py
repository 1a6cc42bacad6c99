"""Shortest-path costs on the grid under polytope-exit constraints.

Plain A* over the 8-connected free cells with octile step costs.  Transitions
that flip two or more hyperplane signs at once are never expanded, and when a
query pins a constrained polytope, every exit from that polytope must use the
preferred edge (re-entries included).  Costs consumed by belief updates are
produced in batches: one reverse search per (goal, preferred-exit) hypothesis
serves every observation candidate around the current location, which is what
keeps the per-update cost count at |O(s)|*|N(v)|*m_g regardless of how many
polytopes the map has.
"""

import heapq
import math
from dataclasses import dataclass

from .worldgraph import ACTIONS, INVALID_TRANSITION, EdgeRef, InvalidActionError, apply_action

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PathQuery:
    start: tuple
    goal: tuple
    via: tuple = None
    preferred_exit: EdgeRef = None
    constrained_vertex: int = None

    def __post_init__(self):
        if self.preferred_exit is not None:
            if self.constrained_vertex is None:
                raise ValueError("preferred_exit requires constrained_vertex")
            if self.preferred_exit.from_vertex != self.constrained_vertex:
                raise ValueError("preferred_exit must leave the constrained vertex")


@dataclass
class PathResult:
    length: float
    path: list
    edge_sequence: list


def octile(a, b):
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy)


def _canonical_length(path):
    n1 = sum(1 for a, b in zip(path, path[1:]) if abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1)
    return n1 + SQRT2 * (len(path) - 1 - n1)


def _check_cell(grid, cell, what):
    if not (isinstance(cell, tuple) and len(cell) == 2):
        cell = tuple(cell)
    if not grid.in_range(cell):
        raise ValueError("%s %r out of range" % (what, cell))
    if cell in grid.blocked:
        raise ValueError("%s %r is inside an obstacle" % (what, cell))
    return cell


def _astar(grid, start, goal, vertex, preferred_exit):
    """Forward search; returns the cell path or None if unreachable."""
    poly = grid.cell_to_polytope
    labels = grid.graph.labels
    exit_pair = None
    if preferred_exit is not None:
        exit_pair = (preferred_exit.from_vertex, preferred_exit.to_vertex)
    H = grid.height
    dist = {start: 0.0}
    parent = {start: None}
    h0 = octile(start, goal)
    heap = [(h0, h0, start[0] * H + start[1], start)]
    while heap:
        f, h, _, c = heapq.heappop(heap)
        d = dist[c]
        if f - h > d + 1e-12:
            continue
        if c == goal:
            path = [c]
            while parent[c] is not None:
                c = parent[c]
                path.append(c)
            path.reverse()
            return path
        u = poly[c]
        for a in ACTIONS:
            t = (c[0] + a[0], c[1] + a[1])
            w = poly.get(t)
            if w is None:
                continue
            if u != w:
                pair = (u, w) if u < w else (w, u)
                if pair not in labels:
                    continue
                if exit_pair is not None and u == vertex and (u, w) != exit_pair:
                    continue
            nd = d + (1.0 if a[0] == 0 or a[1] == 0 else SQRT2)
            if nd < dist.get(t, math.inf) - 1e-12:
                dist[t] = nd
                parent[t] = c
                ht = octile(t, goal)
                heapq.heappush(heap, (nd + ht, ht, t[0] * H + t[1], t))
    return None


def shortest_path(grid, graph, query):
    """Optimal constrained path; infinite-length empty result when cut off."""
    start = _check_cell(grid, query.start, "start")
    goal = _check_cell(grid, query.goal, "goal")
    legs = [(start, goal)]
    if query.via is not None:
        via = _check_cell(grid, query.via, "via")
        legs = [(start, via), (via, goal)]
    full = None
    for a, b in legs:
        part = _astar(grid, a, b, query.constrained_vertex, query.preferred_exit)
        if part is None:
            return PathResult(math.inf, [], [])
        full = part if full is None else full + part[1:]
    return PathResult(_canonical_length(full), full, edge_sequence_of(grid, full))


def edge_sequence_of(grid, path):
    """Polytope edges crossed along the path, in order, repeats kept."""
    seq = []
    poly = grid.cell_to_polytope
    labels = grid.graph.labels
    for c, t in zip(path, path[1:]):
        a = (t[0] - c[0], t[1] - c[1])
        if a not in _ACTION_INDEX:
            raise InvalidActionError("path jumps from %r to %r" % (c, t))
        apply_action(grid, c, a)
        u, w = poly[c], poly[t]
        if u == w:
            continue
        pair = (u, w) if u < w else (w, u)
        if pair not in labels:
            raise InvalidActionError("path step %r -> %r crosses two hyperplanes" % (c, t))
        seq.append(EdgeRef(u, w))
    return seq


_ACTION_INDEX = {a: i for i, a in enumerate(ACTIONS)}


def cost_C(grid, graph, s, o, g, p_v=None, v=None):
    """delta(s, g | o, p_v): first step s->o, then constrained rest to g."""
    a = (o[0] - s[0], o[1] - s[1])
    if a not in _ACTION_INDEX:
        raise InvalidActionError("observation %r is not one step from %r" % (o, s))
    apply_action(grid, s, a)
    step = 1.0 if a[0] == 0 or a[1] == 0 else SQRT2
    poly = grid.cell_to_polytope
    u, w = poly[s], poly[o]
    if u != w:
        pair = (u, w) if u < w else (w, u)
        if pair not in grid.graph.labels:
            return math.inf
        if v is not None and u == v and (u, w) != (p_v.from_vertex, p_v.to_vertex):
            return math.inf
    rest = _astar(grid, o, g, v, p_v)
    if rest is None:
        return math.inf
    return step + _canonical_length(rest)


class _Field:
    """Resumable reverse search from one goal under one exit hypothesis."""

    __slots__ = ("dist", "settled", "heap", "hub", "exhausted", "runs")

    def __init__(self, goal, hub, H):
        self.dist = {goal: 0.0}
        self.settled = set()
        self.hub = hub
        h0 = max(0.0, octile(goal, hub) - SQRT2)
        self.heap = [(h0, h0, goal[0] * H + goal[1], goal)]
        self.exhausted = False
        self.runs = 0


class CostCache:
    """Batched constrained costs for belief updates.

    One field per (goal, preferred-exit) hypothesis holds a reverse search
    that is extended lazily until every requested observation cell is
    settled.  All fields are dropped when the robot changes polytope; motion
    within a polytope only resumes existing searches.
    """

    def __init__(self, grid, graph):
        self.grid = grid
        self.graph = graph
        self._fields = {}
        self._vertex = None
        self.evals = 0
        self.batches = 0
        self.resumes = 0

    def note_vertex(self, v):
        if v != self._vertex:
            self._fields.clear()
            self._vertex = v

    def cost_C_many(self, s, observations, g, p_v, v):
        """Costs delta(s, g | o, p_v) for every o in observations."""
        self.note_vertex(v)
        exit_pair = None if p_v is None else (p_v.from_vertex, p_v.to_vertex)
        key = (g, exit_pair)
        field = self._fields.get(key)
        if field is None:
            field = _Field(g, s, self.grid.height)
            self._fields[key] = field
            self.batches += 1
        missing = {t for t in observations if t not in field.settled}
        if missing and not field.exhausted:
            if field.runs > 0:
                self.resumes += 1
            field.runs += 1
            self._run(field, missing, v, exit_pair)
        poly = self.grid.cell_to_polytope
        labels = self.grid.graph.labels
        u = poly[s]
        out = {}
        for o in observations:
            self.evals += 1
            a = (o[0] - s[0], o[1] - s[1])
            step = 1.0 if a[0] == 0 or a[1] == 0 else SQRT2
            w = poly[o]
            bad = False
            if u != w:
                pair = (u, w) if u < w else (w, u)
                if pair not in labels:
                    bad = True
                elif v is not None and u == v and exit_pair is not None and (u, w) != exit_pair:
                    bad = True
            rest = field.dist.get(o, math.inf) if o in field.settled else math.inf
            out[o] = math.inf if bad else step + rest
        return out

    def _run(self, field, need, vertex, exit_pair):
        """Extend the reverse search until the needed cells are settled."""
        grid = self.grid
        poly = grid.cell_to_polytope
        labels = grid.graph.labels
        H = grid.height
        dist, settled, heap = field.dist, field.settled, field.heap
        pending = set(need)
        while heap and pending:
            f, h, _, x = heapq.heappop(heap)
            if x in settled:
                continue
            settled.add(x)
            pending.discard(x)
            d = dist[x]
            w = poly[x]
            for a in ACTIONS:
                c = (x[0] + a[0], x[1] + a[1])
                u = poly.get(c)
                if u is None:
                    continue
                if u != w:
                    pair = (u, w) if u < w else (w, u)
                    if pair not in labels:
                        continue
                    if vertex is not None and u == vertex and exit_pair is not None \
                            and (u, w) != exit_pair:
                        continue
                nd = d + (1.0 if a[0] == 0 or a[1] == 0 else SQRT2)
                if nd < dist.get(c, math.inf) - 1e-12:
                    dist[c] = nd
                    hc = max(0.0, octile(c, field.hub) - SQRT2)
                    heapq.heappush(heap, (nd + hc, hc, c[0] * H + c[1], c))
        if not heap:
            field.exhausted = True
        for t in pending:
            field.settled.add(t)
            field.dist.setdefault(t, math.inf)
