"""Reward model, POMCP planner over (location, goal, preference), and baselines.

The planner searches a tree of actions only: simulated futures collect no
human input, so there is no observation branching to expand. Each simulation
draws a root hypothesis from the belief, completes unknown vertex
preferences lazily (uniform over that vertex's exits, memoized within the
simulation), descends by UCB1, expands one node, and rolls out toward the
sampled goal on a precomputed distance field. The default rollout scores
each step's crossing under the simulation's preferences before falling back
to distance; a pure distance descent is available as rollout="greedy".

value_iteration_oracle solves the fully-observed (goal, preference) MDP
exactly and exists for tests and calibration, not for the robot.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .intent import ACTION_OF_HEADING, entropy
from .worldgraph import (
    ACTIONS,
    INVALID_TRANSITION,
    InvalidActionError,
    admissible_actions,
    apply_action,
    edge_crossed,
    neighbors,
)

SQRT2 = math.sqrt(2.0)

ENTROPY_THRESHOLD = 1.6
MOMENTUM_STEPS = 5


@dataclass(frozen=True)
class RewardParams:
    R_g: float = 50.0
    R_p: float = 15.5
    R_n: float = -18.0
    discount: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie in (0, 1), got %r" % (self.discount,))


@dataclass
class Particle:
    """One sampled world: a location, a goal, and a partial preference map.

    pref maps vertex -> preferred EdgeRef; the planner fills entries lazily
    and never rewrites one within a simulation.
    """

    location: tuple
    goal: tuple
    pref: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PlannerConfig:
    iterations: int = 2000
    depth: int = 30
    ucb_c: float = 50.0
    epsilon: float = 0.1
    rollout: str = "lookahead"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.ucb_c < 0:
            raise ValueError("ucb_c must be >= 0")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.rollout not in _ROLLOUT_IDS:
            raise ValueError("unknown rollout policy %r" % (self.rollout,))


# greedy descends the unconstrained distance field; lookahead additionally
# scores the immediate crossing under the simulation's sampled preferences
_ROLLOUT_IDS = {"greedy": 0, "lookahead": 1}


def reward(grid, graph, s, a, particle, params):
    """R(s, a) under one particle: goal bonus + preference term - step length."""
    s2 = apply_action(grid, s, a)
    r = -1.0 if a[0] == 0 or a[1] == 0 else -SQRT2
    e = edge_crossed(grid, s, a)
    if e is INVALID_TRANSITION:
        r += params.R_n
    elif e is not None:
        r += params.R_p if e == particle.pref[e.from_vertex] else params.R_n
    if s2 == particle.goal:
        r += params.R_g
    return r


def _distance_field(grid, goal):
    """Unconstrained cost-to-go to goal over valid transitions, flat-indexed."""
    H = grid.height
    d = np.full(grid.width * H, np.inf)
    gidx = goal[0] * H + goal[1]
    d[gidx] = 0.0
    heap = [(0.0, gidx)]
    while heap:
        dv, ci = heapq.heappop(heap)
        if dv > d[ci] + 1e-12:
            continue
        cell = (ci // H, ci % H)
        for a in admissible_actions(grid, cell):
            if edge_crossed(grid, cell, a) is INVALID_TRANSITION:
                continue
            ti = (cell[0] + a[0]) * H + (cell[1] + a[1])
            nd = dv + (1.0 if a[0] == 0 or a[1] == 0 else SQRT2)
            if nd < d[ti] - 1e-12:
                d[ti] = nd
                heapq.heappush(heap, (nd, ti))
    return d


def _grid_arrays(grid, graph):
    H = grid.height
    n = grid.width * H
    free = np.zeros(n, dtype=np.bool_)
    poly = np.full(n, -1, dtype=np.int64)
    for (i, j), v in grid.cell_to_polytope.items():
        free[i * H + j] = True
        poly[i * H + j] = v
    nv = max(graph.vertices) + 1
    edge_ok = np.zeros((nv, nv), dtype=np.bool_)
    nbr_ptr = np.zeros(nv + 1, dtype=np.int64)
    targets = []
    vertex_set = set(graph.vertices)
    for v in range(nv):
        outs = [e.to_vertex for e in neighbors(graph, v)] if v in vertex_set else []
        for w in outs:
            edge_ok[v, w] = True
        nbr_ptr[v + 1] = nbr_ptr[v] + len(outs)
        targets.extend(outs)
    nbr_val = np.array(targets, dtype=np.int64) if targets else np.zeros(0, dtype=np.int64)
    return free, poly, edge_ok, nbr_ptr, nbr_val, nv


def _run_kernel(grid, graph, s, goals, hyp_probs, hyp_goal, hyp_pref, use_pref,
                params, config, rng, return_info):
    H = grid.height
    if not admissible_actions(grid, s):
        raise ValueError("no valid action from %r; cannot plan" % (s,))
    free, poly, edge_ok, nbr_ptr, nbr_val, nv = _grid_arrays(grid, graph)
    goal_cells = np.array([g[0] * H + g[1] for g in goals], dtype=np.int64)
    dist = np.stack([_distance_field(grid, g) for g in goals])
    cum = np.cumsum(hyp_probs)
    cum[-1] = 2.0
    cap = config.iterations + 1
    N = np.zeros(cap, dtype=np.int64)
    Na = np.zeros((cap, 8), dtype=np.int64)
    Q = np.zeros((cap, 8), dtype=np.float64)
    child = np.full((cap, 8), -1, dtype=np.int64)
    pref_val = np.full(nv, -1, dtype=np.int64)
    pref_stamp = np.zeros(nv, dtype=np.int64)
    seed = int(rng.integers(1, 2 ** 31 - 1))
    v0 = grid.cell_to_polytope[s]
    n_nodes = _kernels.pomcp_run(
        seed, config.iterations, config.depth, config.ucb_c, config.epsilon,
        params.discount, params.R_g, params.R_p, params.R_n,
        grid.width, H, free, poly, edge_ok, nbr_ptr, nbr_val,
        cum, hyp_goal, hyp_pref, goal_cells, dist,
        s[0] * H + s[1], v0, 1 if use_pref else 0, _ROLLOUT_IDS[config.rollout],
        N, Na, Q, child, pref_val, pref_stamp)
    action = _best_root_action(grid, s, Q[0], Na[0])
    if return_info:
        return action, {"root_Q": Q[0].copy(), "root_Na": Na[0].copy(),
                        "nodes": int(n_nodes)}
    return action


def _best_root_action(grid, s, q_row, na_row):
    best = None
    best_q = -math.inf
    for k, a in enumerate(ACTIONS):
        if na_row[k] == 0:
            continue
        if q_row[k] > best_q:
            best_q = q_row[k]
            best = a
    if best is None:
        return admissible_actions(grid, s)[0]
    return best


def pomcp_plan(belief, grid, graph, s, params, config, rng, return_info=False):
    """Plan one action from s under the joint (goal, preference) belief."""
    s = tuple(s)
    v0 = grid.cell_to_polytope.get(s)
    if v0 is None:
        raise ValueError("state %r is blocked or out of range" % (s,))
    if belief.current_vertex != v0:
        raise ValueError("belief anchored at polytope %r but s sits in %r"
                         % (belief.current_vertex, v0))
    probs = belief.probs().ravel()
    ne = len(belief.exits)
    nh = probs.size
    hyp_goal = np.array([k // ne for k in range(nh)], dtype=np.int64)
    hyp_pref = np.array([belief.exits[k % ne].to_vertex for k in range(nh)],
                        dtype=np.int64)
    return _run_kernel(grid, graph, s, list(belief.goals), probs, hyp_goal,
                       hyp_pref, True, params, config, rng, return_info)


def goal_only_plan(goal_marginal, goals, grid, graph, s, params, config, rng,
                   return_info=False):
    """Preference-blind baseline: same search over goal-only particles."""
    s = tuple(s)
    if grid.cell_to_polytope.get(s) is None:
        raise ValueError("state %r is blocked or out of range" % (s,))
    marg = np.asarray(goal_marginal, dtype=float)
    if marg.ndim != 1 or marg.size != len(goals) or (marg < 0).any():
        raise ValueError("goal marginal must be non-negative, one entry per goal")
    total = marg.sum()
    if not total > 0:
        raise ValueError("goal marginal has no mass")
    marg = marg / total
    nh = marg.size
    hyp_goal = np.arange(nh, dtype=np.int64)
    hyp_pref = np.zeros(nh, dtype=np.int64)
    return _run_kernel(grid, graph, s, [tuple(g) for g in goals], marg,
                       hyp_goal, hyp_pref, False, params, config, rng, return_info)


def compliant_action(grid, s, last_obs, age):
    """Follow the last heading for MOMENTUM_STEPS steps, then stop.

    Returns None for "stop": never instructed, momentum expired, or the
    indicated direction is blocked from the current cell.
    """
    if last_obs is None or age > MOMENTUM_STEPS:
        return None
    a = ACTION_OF_HEADING[last_obs.heading]
    try:
        apply_action(grid, s, a)
    except InvalidActionError:
        return None
    return a


def blended_policy(grid, s, belief, planned, user, h=ENTROPY_THRESHOLD):
    """Step arbitration: the planner drives while the belief is confident.

    Hands control to the user's action only when the joint entropy exceeds
    h and the user actually gave a valid action this step.
    """
    if user is None or entropy(belief) <= h:
        return planned
    try:
        apply_action(grid, s, user)
    except InvalidActionError:
        return planned
    return user


def value_iteration_oracle(grid, graph, g, theta, params, T):
    """Exact finite-horizon values/policy for a known (goal, preference).

    Returns (values, policy) as width x height arrays; blocked cells hold
    nan / -1. Matching the planner's model, the goal is not absorbing:
    re-entering it pays R_g again. Test oracle only: O(T * cells * 8).
    """
    g = tuple(g)
    if T < 1:
        raise ValueError("horizon must be >= 1")
    if g not in grid.cell_to_polytope:
        raise ValueError("goal %r is blocked or out of range" % (g,))
    cells = sorted(grid.cell_to_polytope)
    part = Particle(location=g, goal=g, pref=dict(theta))
    trans = {}
    for c in cells:
        entries = []
        for k, a in enumerate(ACTIONS):
            try:
                s2 = apply_action(grid, c, a)
            except InvalidActionError:
                continue
            entries.append((k, s2, reward(grid, graph, c, a, part, params)))
        trans[c] = entries
    V = {c: 0.0 for c in cells}
    for _ in range(T):
        newV = {}
        for c in cells:
            best = -math.inf
            for k, s2, r in trans[c]:
                val = r + params.discount * V[s2]
                if val > best:
                    best = val
            newV[c] = best if trans[c] else 0.0
        V = newV
    values = np.full((grid.width, grid.height), np.nan)
    policy = np.full((grid.width, grid.height), -1, dtype=np.int64)
    for c in cells:
        values[c] = V[c]
        best = -math.inf
        for k, s2, r in trans[c]:
            val = r + params.discount * V[s2]
            if val > best:
                best = val
                policy[c] = k
    return values, policy
