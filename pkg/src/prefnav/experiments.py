"""Episode simulation, instance sampling, sweeps, and timing benchmarks.

An episode interleaves planning with periodic human heading bursts. The
human looks at the robot every delta_T steps, starting before the first
move, and the robot replans every step with whatever it has inferred so
far. Success is the two-condition test: the robot stands on the true goal
within the mission horizon and never crossed a facet the human disfavors.

The four methods share one loop and differ only in how they turn the
burst history into an action: path_pref runs the full planner on the
joint belief, goal_only keeps a goal-marginal belief with the preference
conditioning stripped from its cost model, compliant follows the last
burst for a few steps and otherwise stands still, and blended arbitrates
between the planner and a fresh burst by belief entropy.
"""

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .intent import (
    ACTION_OF_HEADING,
    GroundTruthIntent,
    HumanParams,
    MASS_FLOOR,
    belief_update,
    initial_belief,
    likelihood_vector,
    reanchor_belief,
    sample_human_observation,
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
    admissible_actions,
    apply_action,
    bundled_map_names,
    edge_crossed,
    load_bundled,
    load_map,
    resolve_preference,
)

log = logging.getLogger(__name__)

METHODS = ("path_pref", "goal_only", "compliant", "blended")

_WORLD_CACHE = {}


def load_world(ref):
    """Resolve a map reference (bundled name or JSON file path) to a GridMap."""
    world = _WORLD_CACHE.get(ref)
    if world is None:
        if ref in bundled_map_names():
            world = load_bundled(ref)[0]
        else:
            with open(ref, "r", encoding="utf-8") as fh:
                world = load_map(fh.read())[0]
        _WORLD_CACHE[ref] = world
    return world


@dataclass(frozen=True)
class ProblemInstance:
    map: str
    start: tuple
    goal_candidates: tuple
    true_goal: tuple
    theta: dict                  # vertex -> preferred EdgeRef out of it
    delta_T: int
    T_max: int
    gamma_h: float
    seed: int

    def __post_init__(self):
        if tuple(self.true_goal) not in {tuple(g) for g in self.goal_candidates}:
            raise ValueError("true goal %r is not a candidate" % (self.true_goal,))
        if self.delta_T < 1:
            raise ValueError("delta_T must be >= 1")
        if self.T_max < 1:
            raise ValueError("T_max must be >= 1")
        if not self.gamma_h >= 0:
            raise ValueError("gamma_h must be >= 0")

    def to_json(self):
        doc = {
            "map": self.map,
            "start": list(self.start),
            "goal_candidates": [list(g) for g in self.goal_candidates],
            "true_goal": list(self.true_goal),
            "theta": sorted([e.from_vertex, e.to_vertex] for e in self.theta.values()),
            "delta_T": self.delta_T,
            "T_max": self.T_max,
            "gamma_h": self.gamma_h,
            "seed": self.seed,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        theta = {u: EdgeRef(u, w) for u, w in doc["theta"]}
        return cls(
            map=doc["map"],
            start=tuple(doc["start"]),
            goal_candidates=tuple(tuple(g) for g in doc["goal_candidates"]),
            true_goal=tuple(doc["true_goal"]),
            theta=theta,
            delta_T=doc["delta_T"],
            T_max=doc["T_max"],
            gamma_h=doc["gamma_h"],
            seed=doc["seed"],
        )


@dataclass
class RunResult:
    success: bool
    steps: int
    violations: int
    solve_times: list = field(default_factory=list)
    update_times: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)
    observations: list = field(default_factory=list)   # (t, heading name)
    failure: str = ""

    def __post_init__(self):
        if self.success and self.violations != 0:
            raise ValueError("a successful run cannot carry violations")

    def to_json(self):
        # wall-clock timings are inherently non-reproducible, so the
        # canonical serialization carries only the deterministic outcome
        doc = {
            "success": self.success,
            "steps": self.steps,
            "violations": self.violations,
            "trajectory": [list(c) for c in self.trajectory],
            "observations": [[t, h] for t, h in self.observations],
            "failure": self.failure,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def instance_world(instance):
    """The instance's map with its start/goal/timing fields swapped in."""
    base = load_world(instance.map)
    goals = [tuple(g) for g in instance.goal_candidates]
    return replace(
        base,
        start=tuple(instance.start),
        goal_candidates=goals,
        true_goal_index=goals.index(tuple(instance.true_goal)),
        T_max=instance.T_max,
        delta_T=instance.delta_T,
        gamma_h=instance.gamma_h,
    )


def canonical_instance(ref, seed, delta_T=None, T_max=None, gamma_h=None):
    """The instance a map file describes on its own: bundled start, goals,
    true goal, and preference, with optional field overrides."""
    grid = load_world(ref)
    theta = resolve_preference(grid, grid.arrangement, grid.graph)
    return ProblemInstance(
        map=ref,
        start=tuple(grid.start),
        goal_candidates=tuple(tuple(g) for g in grid.goal_candidates),
        true_goal=tuple(grid.goal_candidates[grid.true_goal_index]),
        theta=theta,
        delta_T=grid.delta_T if delta_T is None else delta_T,
        T_max=grid.T_max if T_max is None else T_max,
        gamma_h=grid.gamma_h if gamma_h is None else gamma_h,
        seed=seed,
    )


def sample_instance(rng, ref):
    """Draw a random problem on the given map: start and 3-5 goal candidates
    on distinct free cells, true goal uniform among them, the map's own
    preference."""
    grid = load_world(ref)
    if len(set(grid.cell_to_polytope.values())) < 2:
        raise ValueError("map %r has fewer than 2 free polytopes" % (ref,))
    free = sorted(grid.cell_to_polytope)
    n_goals = int(rng.integers(3, 6))
    if len(free) < n_goals + 1:
        raise ValueError("map %r has too few free cells" % (ref,))
    picks = rng.choice(len(free), size=n_goals + 1, replace=False)
    start = free[picks[0]]
    candidates = tuple(free[k] for k in picks[1:])
    true_goal = candidates[int(rng.integers(n_goals))]
    theta = resolve_preference(grid, grid.arrangement, grid.graph)
    return ProblemInstance(
        map=ref,
        start=start,
        goal_candidates=candidates,
        true_goal=true_goal,
        theta=theta,
        delta_T=grid.delta_T,
        T_max=grid.T_max,
        gamma_h=grid.gamma_h,
        seed=int(rng.integers(2 ** 31 - 1)),
    )


def _admissible_cells(grid, s):
    return [apply_action(grid, s, a) for a in admissible_actions(grid, s)]


def goal_marginal_update(log_marg, grid, s, o, gamma_h, cache, goals):
    """Bayes step on the goal marginal alone: the cost model is the plain
    shortest path through the observed heading, no preference conditioning."""
    cells = _admissible_cells(grid, s)
    idx = cells.index(o.intended_cell)
    new = log_marg.copy()
    for gi, g in enumerate(goals):
        by_cell = cache.cost_C_many(s, cells, g, None, None)
        lik = likelihood_vector([by_cell[t] for t in cells], gamma_h)[idx]
        new[gi] += math.log(lik) if lik > 0.0 else -math.inf
    total = _logsumexp(new)
    if not total > math.log(MASS_FLOOR):
        log.warning("goal-only posterior degenerate at %r; resetting to uniform", s)
        return np.full(len(goals), -math.log(len(goals)))
    return new - total


def _logsumexp(a):
    m = np.max(a)
    if not np.isfinite(m):
        return -math.inf
    return float(m + np.log(np.sum(np.exp(a - m))))


def run_episode(instance, method, rng, config=None):
    """Simulate one mission; never raises, failures carry a diagnostic."""
    if method not in METHODS:
        raise ValueError("unknown method %r" % (method,))
    config = config or PlannerConfig()
    params = RewardParams()
    hparams = HumanParams(gamma_h=instance.gamma_h)
    grid = instance_world(instance)
    graph = grid.graph
    theta = instance.theta
    goals = [tuple(g) for g in instance.goal_candidates]
    truth = GroundTruthIntent(goal=tuple(instance.true_goal), preference=theta)
    cache = CostCache(grid, graph)
    ocache = CostCache(grid, graph)    # the human's own cost model

    s = tuple(instance.start)
    traj = [s]
    obs_log = []
    solve_times = []
    update_times = []
    violations = 0
    steps = 0
    success = s == truth.goal

    belief = None
    log_marg = None
    if method in ("path_pref", "blended"):
        belief = initial_belief(grid, graph, grid.cell_to_polytope[s])
    elif method == "goal_only":
        log_marg = np.full(len(goals), -math.log(len(goals)))
    last_obs = None
    obs_age = 0

    try:
        for t in range(instance.T_max + 1):
            if success:
                break
            fresh = None
            if t % instance.delta_T == 0:
                o = sample_human_observation(rng, grid, graph, s, truth, hparams, ocache)
                obs_log.append((t, o.heading))
                fresh = o
                last_obs = o
                obs_age = 0
                if belief is not None or log_marg is not None:
                    t0 = time.perf_counter()
                    if belief is not None:
                        belief = belief_update(belief, grid, graph, s, o,
                                               hparams, cache)
                    else:
                        log_marg = goal_marginal_update(log_marg, grid, s, o,
                                                     instance.gamma_h, cache, goals)
                    update_times.append(time.perf_counter() - t0)
            if t == instance.T_max:
                break

            obs_age += 1
            t0 = time.perf_counter()
            if method == "path_pref":
                a = pomcp_plan(belief, grid, graph, s, params, config, rng)
            elif method == "goal_only":
                a = goal_only_plan(np.exp(log_marg), goals, grid, graph, s,
                                   params, config, rng)
            elif method == "compliant":
                a = compliant_action(grid, s, last_obs, obs_age)
            else:
                planned = pomcp_plan(belief, grid, graph, s, params, config, rng)
                user = ACTION_OF_HEADING[fresh.heading] if fresh is not None else None
                a = blended_policy(grid, s, belief, planned, user)
            solve_times.append(time.perf_counter() - t0)

            if a is None:           # compliant with stale guidance holds position
                traj.append(s)
                steps = t + 1
                continue

            e = edge_crossed(grid, s, a)
            s = apply_action(grid, s, a)
            if e is INVALID_TRANSITION:
                violations += 1
                if belief is not None:
                    # the two-facet diagonal has no anchoring edge to carry
                    # the belief across, so it restarts in the new polytope
                    belief = initial_belief(grid, graph, grid.cell_to_polytope[s])
            elif isinstance(e, EdgeRef):
                if theta.get(e.from_vertex) != e:
                    violations += 1
                if belief is not None:
                    belief = reanchor_belief(belief, graph, e.to_vertex, e)
            traj.append(s)
            steps = t + 1
            if s == truth.goal:
                success = violations == 0
                break
    except Exception as exc:
        return RunResult(success=False, steps=steps, violations=violations,
                         solve_times=solve_times, update_times=update_times,
                         trajectory=traj, observations=obs_log,
                         failure="%s: %s" % (type(exc).__name__, exc))

    return RunResult(success=success, steps=steps, violations=violations,
                     solve_times=solve_times, update_times=update_times,
                     trajectory=traj, observations=obs_log)


# ---------------------------------------------------------------------------
# sweeps

def sweep(maps, methods, delta_Ts, episodes, seed, instances=6, config=None):
    """Success-rate table over (map, method, delta_T) cells.

    Every cell aggregates `instances` sampled problems x `episodes` runs.
    Row order and all sampling are fixed by the seed, so two invocations
    emit identical tables.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError("unknown method %r" % (m,))
    rows = []
    for mi, ref in enumerate(maps):
        inst_rng = np.random.default_rng([seed, mi])
        insts = [sample_instance(inst_rng, ref) for _ in range(instances)]
        for method in methods:
            for dt in delta_Ts:
                succ = []
                steps = []
                viol = []
                for ii, inst in enumerate(insts):
                    inst_dt = replace(inst, delta_T=int(dt))
                    for ep in range(episodes):
                        # common random numbers across methods: policies that
                        # agree consume the stream identically, so paired
                        # comparisons are exact where they nearly coincide
                        ep_rng = np.random.default_rng(
                            [seed, mi, int(dt), ii, ep])
                        r = run_episode(inst_dt, method, ep_rng, config=config)
                        succ.append(r.success)
                        steps.append(r.steps)
                        viol.append(r.violations)
                n = len(succ)
                rows.append({
                    "map": ref,
                    "method": method,
                    "delta_T": int(dt),
                    "episodes": n,
                    "success_rate": (sum(succ) / n) if n else 0.0,
                    "mean_steps": (sum(steps) / n) if n else 0.0,
                    "mean_violations": (sum(viol) / n) if n else 0.0,
                })
    return rows


SWEEP_COLUMNS = ("map", "method", "delta_T", "episodes",
                 "success_rate", "mean_steps", "mean_violations")


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        out = dict(row)
        for k in ("success_rate", "mean_steps", "mean_violations"):
            out[k] = "%.6f" % row[k]
        w.writerow(out)
    return buf.getvalue()


def summary_ranking(rows):
    """Methods ordered by overall success rate across all cells."""
    totals = {}
    for row in rows:
        hit, n = totals.get(row["method"], (0.0, 0))
        totals[row["method"]] = (hit + row["success_rate"] * row["episodes"],
                                 n + row["episodes"])
    ranked = sorted(((hit / n if n else 0.0, m) for m, (hit, n) in totals.items()),
                    reverse=True)
    return [(m, rate) for rate, m in ranked]


# ---------------------------------------------------------------------------
# timing

def _ci95(xs):
    if len(xs) < 2:
        return 0.0
    return 1.96 * float(np.std(xs, ddof=1)) / math.sqrt(len(xs))


def time_benchmark(maps, methods, runs, seed=0, config=None):
    """First-decision solve time and first belief-update time per map/method.

    Each run samples a fresh instance and measures only the first planner
    call and the first belief update, mean +/- 95% CI over `runs`.
    """
    rows = []
    for mi, ref in enumerate(maps):
        for method in methods:
            if method not in METHODS:
                raise ValueError("unknown method %r" % (method,))
            solve = []
            update = []
            rng = np.random.default_rng([seed, mi, METHODS.index(method)])
            for _ in range(runs):
                inst = sample_instance(rng, ref)
                r = run_episode(inst, method, np.random.default_rng(inst.seed),
                                config=config)
                if r.solve_times:
                    solve.append(r.solve_times[0] * 1000.0)
                if r.update_times:
                    update.append(r.update_times[0] * 1000.0)
            rows.append({
                "map": ref,
                "method": method,
                "runs": runs,
                "solve_ms": float(np.mean(solve)) if solve else 0.0,
                "solve_ci": _ci95(solve),
                "update_ms": float(np.mean(update)) if update else 0.0,
                "update_ci": _ci95(update),
            })
    return rows


BENCH_COLUMNS = ("map", "method", "runs",
                 "solve_ms", "solve_ci", "update_ms", "update_ci")


def bench_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        out = dict(row)
        for k in ("solve_ms", "solve_ci", "update_ms", "update_ci"):
            out[k] = "%.3f" % row[k]
        w.writerow(out)
    return buf.getvalue()
