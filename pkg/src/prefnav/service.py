"""Session-oriented HTTP service for live steering.

A session wraps one episode whose observations come from a person
instead of the simulated human: clients post heading angles whenever
they like and step the robot explicitly, so the simulation's observation
cadence does not apply. Every mutation appends an event; replaying the
event log through a fresh session with the same seed reproduces the
final state.

Endpoints (JSON over HTTP, schemas in api_schema.json):
    GET    /api/maps
    POST   /api/sessions                 {map_id, method, overrides}
    GET    /api/sessions/{sid}
    DELETE /api/sessions/{sid}
    POST   /api/sessions/{sid}/heading   {angle}
    POST   /api/sessions/{sid}/step
    GET    /api/sessions/{sid}/events    (server-sent events)
"""

import math
import queue
import secrets
import threading
import time

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .experiments import (
    METHODS,
    canonical_instance,
    goal_marginal_update,
    instance_world,
    load_world,
)
from .intent import (
    ACTION_OF_HEADING,
    HumanParams,
    InadmissibleHeadingError,
    belief_update,
    entropy,
    heading_to_cell,
    initial_belief,
    reanchor_belief,
)
from .pathcost import CostCache
from .planning import (
    PlannerConfig,
    RewardParams,
    blended_policy,
    compliant_action,
    goal_only_plan,
    pomcp_plan,
)
from .worldgraph import (
    INVALID_TRANSITION,
    EdgeRef,
    apply_action,
    bundled_map_names,
    edge_crossed,
    neighbors,
)

_CREATE_KEYS = {"seed", "t_max", "gamma_h", "iterations", "delta_t"}


# ---------------------------------------------------------------------------
# map geometry for rendering

def _polytope_loops(grid):
    """Outline of each polytope's cell union as closed vertex loops.

    Cell (i, j) covers the unit square [i, i+1] x [j, j+1]. Boundary
    segments are oriented with the interior on the left, chained into
    loops preferring the leftmost turn, and collinear runs merged.
    """
    members = {}
    for c, v in grid.cell_to_polytope.items():
        members.setdefault(v, set()).add(c)
    loops_of = {}
    for v, cells in sorted(members.items()):
        segs = {}
        for (i, j) in cells:
            if (i, j - 1) not in cells:
                segs.setdefault((i, j), []).append((i + 1, j))
            if (i + 1, j) not in cells:
                segs.setdefault((i + 1, j), []).append((i + 1, j + 1))
            if (i, j + 1) not in cells:
                segs.setdefault((i + 1, j + 1), []).append((i, j + 1))
            if (i - 1, j) not in cells:
                segs.setdefault((i, j + 1), []).append((i, j))
        loops = []
        while segs:
            start = min(segs)
            loop = [start]
            prev = None
            cur = start
            while True:
                outs = segs[cur]
                if len(outs) == 1 or prev is None:
                    nxt = outs[0]
                else:
                    # pinch point: keep the tightest left turn
                    dx, dy = cur[0] - prev[0], cur[1] - prev[1]
                    nxt = max(outs, key=lambda p: math.atan2(
                        dx * (p[1] - cur[1]) - dy * (p[0] - cur[0]),
                        dx * (p[0] - cur[0]) + dy * (p[1] - cur[1])))
                outs.remove(nxt)
                if not outs:
                    del segs[cur]
                if nxt == start:
                    break
                loop.append(nxt)
                prev, cur = cur, nxt
            simple = []
            n = len(loop)
            for k in range(n):
                a, b, c = loop[k - 1], loop[k], loop[(k + 1) % n]
                cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
                if cross != 0:
                    simple.append(list(b))
            loops.append(simple)
        loops.sort(key=len, reverse=True)
        loops_of[v] = loops
    return loops_of


def _facet_midpoints(grid, graph):
    """Midpoint of every labeled facet, for drawing preference arrows."""
    pairs = {}
    poly = grid.cell_to_polytope
    for (i, j), u in poly.items():
        for di, dj in ((1, 0), (0, 1)):
            w = poly.get((i + di, j + dj))
            if w is None or w == u:
                continue
            key = (u, w) if u < w else (w, u)
            if key in graph.labels:
                pairs.setdefault(key, []).append((i + 0.5 + di * 0.5,
                                                  j + 0.5 + dj * 0.5))
    return {k: [sum(x for x, _ in pts) / len(pts), sum(y for _, y in pts) / len(pts)]
            for k, pts in pairs.items()}


def map_info(name):
    grid = load_world(name)
    graph = grid.graph
    loops = _polytope_loops(grid)
    mids = _facet_midpoints(grid, graph)
    members = {}
    for c, v in grid.cell_to_polytope.items():
        members.setdefault(v, []).append(c)
    polys = []
    for v in sorted(loops):
        cs = members[v]
        polys.append({
            "vertex": v,
            "loops": loops[v],
            "center": [sum(i for i, _ in cs) / len(cs) + 0.5,
                       sum(j for _, j in cs) / len(cs) + 0.5],
        })
    edges = [{"u": u, "w": w, "midpoint": mids[(u, w)]}
             for (u, w) in sorted(mids)]
    return {
        "id": name,
        "width": grid.width,
        "height": grid.height,
        "blocked": sorted(list(c) for c in grid.blocked),
        "polytopes": polys,
        "edges": edges,
        "start": list(grid.start),
        "goal_candidates": [list(g) for g in grid.goal_candidates],
        "true_goal_index": grid.true_goal_index,
        "t_max": grid.T_max,
        "gamma_h": grid.gamma_h,
    }


# ---------------------------------------------------------------------------
# sessions

class Session:
    def __init__(self, sid, instance, method, config):
        self.id = sid
        self.instance = instance
        self.method = method
        self.config = config
        self.grid = instance_world(instance)
        self.graph = self.grid.graph
        self.theta = instance.theta
        self.params = RewardParams()
        self.hparams = HumanParams(gamma_h=instance.gamma_h)
        self.rng = np.random.default_rng(instance.seed)
        self.cache = CostCache(self.grid, self.graph)
        self.goals = [tuple(g) for g in instance.goal_candidates]
        self.true_goal = tuple(instance.true_goal)
        self.s = tuple(instance.start)
        self.trajectory = [self.s]
        self.t = 0
        self.status = "running"
        self.violations = 0
        self.belief = None
        self.log_marg = None
        if method in ("path_pref", "blended"):
            self.belief = initial_belief(self.grid, self.graph,
                                         self.grid.cell_to_polytope[self.s])
        elif method == "goal_only":
            self.log_marg = np.full(len(self.goals), -math.log(len(self.goals)))
        self.last_obs = None
        self.obs_age = 0
        self.pending = None          # heading arrived since the last step
        self.last_solve_ms = None
        self.last_update_ms = None
        self.lock = threading.Lock()
        self.events = []
        self.subs = []

    # -- state ------------------------------------------------------------

    def belief_summary(self):
        if self.belief is not None:
            p = self.belief.probs()
            gm = p.sum(axis=1)
            em = p.sum(axis=0)
            return {
                "goals": [list(g) for g in self.belief.goals],
                "goal_marginal": [float(x) for x in gm],
                "edges": [[e.from_vertex, e.to_vertex] for e in self.belief.exits],
                "edge_posterior": [float(x) for x in em],
                "entropy": float(entropy(self.belief)),
            }
        if self.log_marg is not None:
            m = np.exp(self.log_marg)
            m = m / m.sum()
            pos = m[m > 0.0]
            return {
                "goals": [list(g) for g in self.goals],
                "goal_marginal": [float(x) for x in m],
                "edges": [],
                "edge_posterior": [],
                "entropy": float(-(pos * np.log(pos)).sum()),
            }
        return None

    def snapshot(self):
        return {
            "id": self.id,
            "map": self.instance.map,
            "method": self.method,
            "seed": self.instance.seed,
            "status": self.status,
            "step": self.t,
            "t_max": self.instance.T_max,
            "location": list(self.s),
            "trajectory": [list(c) for c in self.trajectory],
            "violations": self.violations,
            "belief": self.belief_summary(),
            "last_solve_ms": self.last_solve_ms,
            "last_update_ms": self.last_update_ms,
        }

    def _emit(self, event):
        event["seq"] = len(self.events)
        self.events.append(event)
        for q in list(self.subs):
            q.put(event)

    # -- mutations (caller holds the lock) ---------------------------------

    def heading(self, angle):
        if self.status != "running":
            raise HTTPException(409, "session is %s" % self.status)
        try:
            obs = heading_to_cell(self.grid, self.s, angle)
        except InadmissibleHeadingError as exc:
            raise HTTPException(422, str(exc)) from exc
        t0 = time.perf_counter()
        if self.belief is not None:
            self.belief = belief_update(self.belief, self.grid, self.graph,
                                        self.s, obs, self.hparams, self.cache)
        elif self.log_marg is not None:
            self.log_marg = goal_marginal_update(
                self.log_marg, self.grid, self.s, obs,
                self.instance.gamma_h, self.cache, self.goals)
        if self.belief is not None or self.log_marg is not None:
            self.last_update_ms = (time.perf_counter() - t0) * 1000.0
        self.last_obs = obs
        self.obs_age = 0
        self.pending = obs
        summary = self.belief_summary()
        self._emit({"type": "heading", "t": self.t, "angle": float(angle),
                    "heading": obs.heading, "belief": summary})
        return {"heading": obs.heading, "intended_cell": list(obs.intended_cell),
                "belief": summary}

    def step(self):
        if self.status != "running":
            raise HTTPException(409, "session is %s" % self.status)
        self.obs_age += 1
        t0 = time.perf_counter()
        if self.method == "path_pref":
            a = pomcp_plan(self.belief, self.grid, self.graph, self.s,
                           self.params, self.config, self.rng)
        elif self.method == "goal_only":
            a = goal_only_plan(np.exp(self.log_marg), self.goals, self.grid,
                               self.graph, self.s, self.params, self.config,
                               self.rng)
        elif self.method == "compliant":
            a = compliant_action(self.grid, self.s, self.last_obs, self.obs_age)
        else:
            planned = pomcp_plan(self.belief, self.grid, self.graph, self.s,
                                 self.params, self.config, self.rng)
            user = (ACTION_OF_HEADING[self.pending.heading]
                    if self.pending is not None else None)
            a = blended_policy(self.grid, self.s, self.belief, planned, user)
        self.last_solve_ms = (time.perf_counter() - t0) * 1000.0
        self.pending = None

        edge = None
        violation = False
        support = None
        if a is not None:
            e = edge_crossed(self.grid, self.s, a)
            self.s = apply_action(self.grid, self.s, a)
            if e is INVALID_TRANSITION:
                edge = "invalid"
                violation = True
                if self.belief is not None:
                    self.belief = initial_belief(
                        self.grid, self.graph, self.grid.cell_to_polytope[self.s])
                    support = [[x.from_vertex, x.to_vertex]
                               for x in self.belief.exits]
            elif isinstance(e, EdgeRef):
                edge = [e.from_vertex, e.to_vertex]
                violation = self.theta.get(e.from_vertex) != e
                if self.belief is not None:
                    self.belief = reanchor_belief(self.belief, self.graph,
                                                  e.to_vertex, e)
                    support = [[x.from_vertex, x.to_vertex]
                               for x in self.belief.exits]
            if violation:
                self.violations += 1
        self.t += 1
        self.trajectory.append(self.s)
        if self.s == self.true_goal:
            self.status = "succeeded"
        elif self.t >= self.instance.T_max:
            self.status = "failed"
        event = {"type": "step", "t": self.t,
                 "action": None if a is None else list(a),
                 "location": list(self.s), "edge": edge,
                 "violation": violation, "support": support,
                 "status": self.status, "belief": self.belief_summary()}
        self._emit(event)
        if self.status != "running":
            for q in list(self.subs):
                q.put(None)
        return event


class SessionStore:
    def __init__(self):
        self._lock = threading.Lock()
        self._sessions = {}

    def create(self, map_id, method, overrides):
        if map_id not in bundled_map_names():
            raise HTTPException(404, "unknown map %r" % (map_id,))
        if method not in METHODS:
            raise HTTPException(422, "unknown method %r" % (method,))
        overrides = dict(overrides or {})
        unknown = set(overrides) - _CREATE_KEYS
        if unknown:
            raise HTTPException(422, "unknown overrides: %s" % sorted(unknown))
        seed = overrides.get("seed")
        if seed is None:
            seed = secrets.randbits(31)
        try:
            inst = canonical_instance(map_id, seed=int(seed),
                                      T_max=overrides.get("t_max"),
                                      gamma_h=overrides.get("gamma_h"))
            config = PlannerConfig(iterations=int(overrides["iterations"])) \
                if overrides.get("iterations") is not None else PlannerConfig()
        except (ValueError, TypeError) as exc:
            raise HTTPException(422, "invalid overrides: %s" % exc) from exc
        sid = secrets.token_hex(8)
        sess = Session(sid, inst, method, config)
        with self._lock:
            self._sessions[sid] = sess
        return sess

    def get(self, sid):
        with self._lock:
            sess = self._sessions.get(sid)
        if sess is None:
            raise HTTPException(404, "no session %r" % (sid,))
        return sess

    def delete(self, sid):
        with self._lock:
            sess = self._sessions.pop(sid, None)
        if sess is None:
            raise HTTPException(404, "no session %r" % (sid,))
        with sess.lock:
            for q in list(sess.subs):
                q.put(None)
            sess.subs.clear()


STORE = SessionStore()

app = FastAPI(title="prefnav", version="0.1.0")
# the browser client is served from its own origin
app.add_middleware(CORSMiddleware, allow_origins=["*"],
                   allow_methods=["*"], allow_headers=["*"])


class CreateBody(BaseModel):
    map_id: str
    method: str
    overrides: dict = {}


class HeadingBody(BaseModel):
    angle: float


@app.get("/api/maps")
def api_maps():
    return {"maps": [map_info(name) for name in bundled_map_names()]}


@app.post("/api/sessions", status_code=201)
def api_create(body: CreateBody):
    sess = STORE.create(body.map_id, body.method, body.overrides)
    with sess.lock:
        return {"session": sess.snapshot(), "map": map_info(body.map_id)}


@app.get("/api/sessions/{sid}")
def api_state(sid: str):
    sess = STORE.get(sid)
    with sess.lock:
        return sess.snapshot()


@app.delete("/api/sessions/{sid}", status_code=204)
def api_delete(sid: str):
    STORE.delete(sid)


@app.post("/api/sessions/{sid}/heading")
def api_heading(sid: str, body: HeadingBody):
    sess = STORE.get(sid)
    with sess.lock:
        return sess.heading(body.angle)


@app.post("/api/sessions/{sid}/step")
def api_step(sid: str):
    sess = STORE.get(sid)
    with sess.lock:
        return sess.step()


@app.get("/api/sessions/{sid}/events")
def api_events(sid: str):
    import json as _json
    sess = STORE.get(sid)
    q = queue.Queue()
    with sess.lock:
        backlog = list(sess.events)
        done = sess.status != "running"
        sess.subs.append(q)

    def stream():
        try:
            for ev in backlog:
                yield "id: %d\ndata: %s\n\n" % (ev["seq"], _json.dumps(ev))
            if done:
                return
            while True:
                try:
                    ev = q.get(timeout=0.5)
                except queue.Empty:
                    yield ": keepalive\n\n"
                    continue
                if ev is None:
                    return
                yield "id: %d\ndata: %s\n\n" % (ev["seq"], _json.dumps(ev))
        finally:
            with sess.lock:
                if q in sess.subs:
                    sess.subs.remove(q)

    return StreamingResponse(stream(), media_type="text/event-stream")
