"""Observation model and Bayesian intent tracking.

The human steers with short heading bursts. Each burst snaps to one of the
eight compass directions and is read as "I would like the robot to move into
that cell next". Under a hypothesis (g, p_v), where g is a candidate goal
and p_v the preferred exit edge of the robot's current polytope, the burst
is scored with a softmax over the admissible intended cells:

    P(o | s, g, p_v) = exp(-gamma_h * C(s, o)) / sum over O(s)

with C the constrained remaining-cost from pathcost. The belief is a joint
distribution over (goal, preferred exit of the current polytope), held in
log space. Crossing into a new polytope invalidates the preference axis, so
the belief is re-anchored there: the goal marginal carries over unchanged
and the preference axis restarts from a near-uniform prior that only
down-weights the edge we just came through.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .pathcost import CostCache, cost_C
from .worldgraph import ACTIONS, InvalidActionError, admissible_actions, apply_action, neighbors

log = logging.getLogger(__name__)

HEADING_NAMES = ("E", "NE", "N", "NW", "W", "SW", "S", "SE")
_NAME_OF_ACTION = dict(zip(ACTIONS, HEADING_NAMES))
ACTION_OF_HEADING = dict(zip(HEADING_NAMES, ACTIONS))

# posterior mass below this means every hypothesis scored zero
MASS_FLOOR = 1e-300

DEFAULT_BACK_EDGE_WEIGHT = 0.2


class InadmissibleHeadingError(ValueError):
    """The heading snaps to a cell the robot cannot step into."""


@dataclass(frozen=True)
class HumanParams:
    """Rationality of the simulated or modeled human; 0 means uniform."""

    gamma_h: float = 1.5

    def __post_init__(self):
        g = self.gamma_h
        if isinstance(g, bool) or not isinstance(g, (int, float)):
            raise ValueError("gamma_h must be a number, got %r" % (g,))
        if not (math.isfinite(g) and g >= 0.0):
            raise ValueError("gamma_h must be finite and >= 0, got %r" % (g,))


@dataclass(frozen=True)
class Observation:
    heading: str
    intended_cell: tuple

    def __post_init__(self):
        if self.heading not in HEADING_NAMES:
            raise ValueError("unknown heading %r" % (self.heading,))

    @classmethod
    def from_action(cls, s, action):
        if action not in _NAME_OF_ACTION:
            raise ValueError("not one of the eight actions: %r" % (action,))
        return cls(_NAME_OF_ACTION[action],
                   (s[0] + action[0], s[1] + action[1]))


@dataclass(frozen=True)
class GroundTruthIntent:
    """What the simulated human actually wants: a goal plus the full per-vertex preference."""

    goal: tuple
    preference: dict


def heading_to_cell(grid, s, angle):
    """Snap a continuous heading (radians, CCW from east) to an Observation.

    Sector boundaries sit at odd multiples of pi/8; an angle exactly on a
    boundary goes to the sector on its smaller-angle side.
    """
    if not (isinstance(angle, (int, float)) and math.isfinite(angle)):
        raise InadmissibleHeadingError("heading angle must be finite, got %r" % (angle,))
    x = (float(angle) % (2.0 * math.pi)) / (math.pi / 4.0)
    k = math.floor(x + 0.5)
    if x + 0.5 == k:
        k -= 1
    k %= 8
    try:
        cell = apply_action(grid, s, ACTIONS[k])
    except InvalidActionError as exc:
        raise InadmissibleHeadingError(
            "heading %r from %r points at an inadmissible cell: %s"
            % (HEADING_NAMES[k], tuple(s), exc)) from exc
    return Observation(HEADING_NAMES[k], cell)


def likelihood_vector(costs, gamma):
    """Softmax of -gamma * cost over one admissible set.

    Shifting by the minimum finite cost keeps the exponent bounded, so
    adding a constant to every cost changes nothing. Infinite costs get
    zero weight; if every cost is infinite, or gamma is 0, the human is
    uninformative and the vector is uniform.
    """
    c = np.asarray(costs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("costs must be a non-empty vector")
    uniform = np.full(c.size, 1.0 / c.size)
    if gamma == 0.0:
        return uniform
    finite = np.isfinite(c)
    if not finite.any():
        return uniform
    w = np.zeros(c.size)
    w[finite] = np.exp(-gamma * (c[finite] - c[finite].min()))
    return w / w.sum()


def _admissible_cells(grid, s):
    cells = [(s[0] + a[0], s[1] + a[1]) for a in admissible_actions(grid, s)]
    if not cells:
        raise ValueError("robot at %r is fully enclosed; no admissible observation" % (s,))
    return cells


def observation_likelihood(grid, graph, s, g, p_v, o, params):
    """P(o | s, g, p_v) for a single already-snapped observation."""
    cells = _admissible_cells(grid, s)
    if o.intended_cell not in cells:
        raise ValueError("observation %r is not admissible from %r" % (o, tuple(s)))
    v = grid.cell_to_polytope[s]
    if p_v is not None and p_v.from_vertex != v:
        raise ValueError("preferred exit %r does not leave polytope %d" % (p_v, v))
    costs = [cost_C(grid, graph, s, t, g, p_v=p_v, v=v) for t in cells]
    lik = likelihood_vector(costs, params.gamma_h)
    return float(lik[cells.index(o.intended_cell)])


def _logsumexp(a):
    m = a.max()
    if not math.isfinite(m):
        return float(m)
    return float(m + math.log(np.exp(a - m).sum()))


@dataclass(frozen=True)
class Belief:
    """Joint posterior over (goal candidate, preferred exit of current_vertex).

    log_probs has one row per goal and one column per exit edge, stored
    normalized. Snapshots are immutable; updates return new instances.
    """

    current_vertex: int
    goals: tuple
    exits: tuple
    log_probs: np.ndarray

    def __post_init__(self):
        lp = np.asarray(self.log_probs, dtype=float)
        if lp.shape != (len(self.goals), len(self.exits)):
            raise ValueError("log_probs shape %r does not match support %dx%d"
                             % (lp.shape, len(self.goals), len(self.exits)))
        object.__setattr__(self, "log_probs", lp)
        total = math.exp(_logsumexp(lp))
        if abs(total - 1.0) > 1e-9:
            raise ValueError("belief mass %.12f is not 1 within 1e-9" % total)

    def probs(self):
        p = np.exp(self.log_probs)
        return p / p.sum()

    def goal_marginal(self):
        return self.probs().sum(axis=1)

    def map_hypothesis(self):
        p = self.probs()
        gi, pi = np.unravel_index(int(p.argmax()), p.shape)
        return self.goals[gi], self.exits[pi]

    def with_likelihoods(self, lik):
        """One Bayes step: multiply by a likelihood matrix and renormalize.

        A posterior whose unnormalized mass falls below MASS_FLOOR means
        every hypothesis was contradicted; that is logged and the belief
        resets to the uniform prior over the same support.
        """
        lik = np.asarray(lik, dtype=float)
        if lik.shape != self.log_probs.shape:
            raise ValueError("likelihood shape %r does not match belief %r"
                             % (lik.shape, self.log_probs.shape))
        if (lik < 0).any() or np.isnan(lik).any():
            raise ValueError("likelihoods must be non-negative")
        with np.errstate(divide="ignore"):
            log_post = self.log_probs + np.log(lik)
        total = _logsumexp(log_post)
        if not total > math.log(MASS_FLOOR):
            log.warning("degenerate posterior at vertex %d (mass underflow); "
                        "resetting to the uniform prior", self.current_vertex)
            return initial_belief_like(self)
        return Belief(self.current_vertex, self.goals, self.exits, log_post - total)


def initial_belief(grid, graph, v):
    """Uniform joint prior over goal candidates x exits of v."""
    exits = tuple(neighbors(graph, v))
    if not exits:
        raise ValueError("polytope %d has no exits; belief support would be empty" % v)
    goals = tuple(grid.goal_candidates)
    n = len(goals) * len(exits)
    lp = np.full((len(goals), len(exits)), -math.log(n))
    return Belief(v, goals, exits, lp)


def initial_belief_like(belief):
    n = len(belief.goals) * len(belief.exits)
    lp = np.full((len(belief.goals), len(belief.exits)), -math.log(n))
    return Belief(belief.current_vertex, belief.goals, belief.exits, lp)


def belief_update(belief, grid, graph, s, o, params, cache=None):
    """Condition the belief on one observation taken at state s.

    Costs come through a CostCache so the whole update spends exactly one
    batch per (goal, exit) hypothesis, and repeated updates inside the same
    polytope resume those searches instead of restarting them.
    """
    v = grid.cell_to_polytope.get(tuple(s))
    if v != belief.current_vertex:
        raise ValueError("state %r lies in polytope %r but the belief tracks %r"
                         % (tuple(s), v, belief.current_vertex))
    cells = _admissible_cells(grid, s)
    if o.intended_cell not in cells:
        raise ValueError("observation %r is not admissible from %r" % (o, tuple(s)))
    if cache is None:
        cache = CostCache(grid, graph)
    idx = cells.index(o.intended_cell)
    lik = np.empty((len(belief.goals), len(belief.exits)))
    for gi, g in enumerate(belief.goals):
        for pi, e in enumerate(belief.exits):
            by_cell = cache.cost_C_many(s, cells, g, e, v)
            costs = [by_cell[t] for t in cells]
            lik[gi, pi] = likelihood_vector(costs, params.gamma_h)[idx]
    return belief.with_likelihoods(lik)


def reanchor_belief(belief, graph, new_vertex, entered_via, beta=DEFAULT_BACK_EDGE_WEIGHT):
    """Rebuild the belief after the robot crosses into new_vertex.

    The goal marginal is preserved exactly. The preference axis cannot
    carry over (its support was the old polytope's exits), so it restarts
    from a prior that is uniform except for the edge leading straight back,
    which gets weight beta.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must be in (0, 1], got %r" % (beta,))
    if entered_via.from_vertex != belief.current_vertex or entered_via.to_vertex != new_vertex:
        raise ValueError("entered_via %r does not connect %d to %d"
                         % (entered_via, belief.current_vertex, new_vertex))
    if entered_via not in neighbors(graph, belief.current_vertex):
        raise ValueError("entered_via %r is not an edge of the graph" % (entered_via,))
    exits = tuple(neighbors(graph, new_vertex))
    if not exits:
        raise ValueError("polytope %d has no exits; cannot re-anchor" % new_vertex)
    back = entered_via.reverse()
    w = np.array([beta if e == back else 1.0 for e in exits])
    w /= w.sum()
    marg = belief.goal_marginal()
    with np.errstate(divide="ignore"):
        lp = np.log(marg)[:, None] + np.log(w)[None, :]
    return Belief(new_vertex, belief.goals, exits, lp - _logsumexp(lp))


def entropy(belief):
    """Shannon entropy of the joint belief, in nats."""
    p = belief.probs().ravel()
    p = p[p > 0.0]
    return float(-(p * np.log(p)).sum())


def sample_human_observation(rng, grid, graph, s, truth, params, cache=None):
    """Draw one heading burst from the generative model.

    Uses the same softmax as observation_likelihood, under the true
    (goal, preference) pair, so inference is calibrated against this
    sampler by construction.
    """
    cells = _admissible_cells(grid, s)
    if params.gamma_h == 0.0:
        probs = np.full(len(cells), 1.0 / len(cells))
    else:
        v = grid.cell_to_polytope[s]
        p_v = truth.preference.get(v)
        if cache is None:
            costs = [cost_C(grid, graph, s, t, truth.goal, p_v=p_v, v=v) for t in cells]
        else:
            by_cell = cache.cost_C_many(s, cells, truth.goal, p_v, v)
            costs = [by_cell[t] for t in cells]
        probs = likelihood_vector(costs, params.gamma_h)
    k = int(rng.choice(len(cells), p=probs))
    cell = cells[k]
    return Observation.from_action(s, (cell[0] - s[0], cell[1] - s[1]))
