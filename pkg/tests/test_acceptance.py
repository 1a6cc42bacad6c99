"""End-to-end acceptance checks P1-P8.

Each test prints a single PASS/FAIL summary line with the measured numbers
(visible under pytest -rA or -s); the asserts carry the stated tolerances.
P7 runs a full success-rate sweep and takes ~15 minutes; everything else
finishes in seconds.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

import oracles
from prefnav.experiments import METHODS, sweep
from prefnav.geometry import HalfPlane, ObstaclePolytope, build_arrangement
from prefnav.intent import (
    HumanParams,
    GroundTruthIntent,
    Observation,
    belief_update,
    initial_belief,
    likelihood_vector,
    sample_human_observation,
)
from prefnav.pathcost import CostCache, PathQuery, edge_sequence_of, shortest_path
from prefnav.planning import (
    Particle,
    PlannerConfig,
    RewardParams,
    pomcp_plan,
    reward,
    value_iteration_oracle,
)
from prefnav.worldgraph import (
    ACTIONS,
    INVALID_TRANSITION,
    InvalidActionError,
    admissible_actions,
    apply_action,
    edge_crossed,
    load_bundled,
    neighbors,
    resolve_preference,
)

BOUNDS = (0.0, 0.0, 10.0, 10.0)


def report(line, ok):
    print(line % ("PASS" if ok else "FAIL"))
    assert ok, line % "FAIL"


@pytest.fixture(scope="module")
def map1():
    return load_bundled("map1")


@pytest.fixture(scope="module")
def theta1(map1):
    grid, arr, graph = map1
    return resolve_preference(grid, arr, graph)


# ---------------------------------------------------------------------------
# P1: arrangement enumeration vs dense sign-vector and removal-test oracles

def test_P1_arrangement_matches_oracles():
    rng = np.random.default_rng(2026)
    t0 = time.perf_counter()
    cells_checked = 0
    for mi in range(50):
        raw = oracles.random_map(rng)
        obstacles = [
            ObstaclePolytope(i, [HalfPlane(tuple(A[r]), float(b[r])) for r in range(len(b))])
            for i, (A, b) in enumerate(raw)
        ]
        arr = build_arrangement(obstacles, BOUNDS)
        dense = oracles.sample_sign_set(arr.A, arr.b, BOUNDS)
        got = {tuple(int(s) for s in c.sign_vector) for c in arr.cells}
        assert got == set(dense), "map %d: cell sets differ" % mi
        boxA, boxb = oracles.box_rows(BOUNDS)
        A_ext = np.vstack([arr.A, boxA])
        b_ext = np.concatenate([arr.b, boxb])
        for cell in arr.cells:
            signs = np.concatenate([cell.sign_vector, -np.ones(4, dtype=np.int8)])
            want = set(oracles.essential_by_removal(A_ext, b_ext, signs, BOUNDS))
            assert {i for i, _ in cell.essential} == want, (mi, cell.key)
        cells_checked += len(arr.cells)
    dt = time.perf_counter() - t0
    report(
        "P1 arrangement vs oracles: %%s (50 maps, %d cells exact, %.2fs < 10s)"
        % (cells_checked, dt),
        dt < 10.0,
    )


# ---------------------------------------------------------------------------
# P2: the bundled simple map is one ring of eight polytopes

def test_P2_map1_eight_cycle(map1):
    grid, arr, graph = map1
    n = len(graph.vertices)
    degrees = {v: len({e.to_vertex for e in neighbors(graph, v)}) for v in graph.vertices}
    # walk the ring: 8 vertices of degree 2 and one closed tour covering all
    seen = {graph.vertices[0]}
    prev, cur = None, graph.vertices[0]
    for _ in range(n):
        nxt = [e.to_vertex for e in neighbors(graph, cur) if e.to_vertex != prev]
        prev, cur = cur, nxt[0]
        seen.add(cur)
    ok = (
        n == 8
        and all(d == 2 for d in degrees.values())
        and len(graph.labels) == 8
        and cur == graph.vertices[0]
        and len(seen) == 8
    )
    report("P2 map1 structure: %%s (%d polytopes, degrees %s, closed tour)"
           % (n, sorted(set(degrees.values()))), ok)


# ---------------------------------------------------------------------------
# P3: homotopy signatures on 20 constructed path pairs, zero tolerance

def test_P3_homotopy_signatures(map1):
    grid, arr, graph = map1
    rng = np.random.default_rng(3)
    tops = [(x, y) for x in range(3, 7) for y in range(7, 10)]
    bottoms = [(x, y) for x in range(3, 7) for y in range(0, 4)]

    def route(start, goal, via):
        r = shortest_path(grid, graph, PathQuery(start=start, goal=goal, via=via))
        assert math.isfinite(r.length)
        assert edge_sequence_of(grid, r.path) == r.edge_sequence
        return r.edge_sequence

    distinct = identical = 0
    for k in range(20):
        # endpoints in the bottom band so the over-the-top class is unique
        start = (0, int(rng.integers(0, 4)))
        goal = (9, int(rng.integers(0, 4)))
        if k % 2 == 0:
            top = tops[rng.integers(len(tops))]
            bottom = bottoms[rng.integers(len(bottoms))]
            assert route(start, goal, top) != route(start, goal, bottom), (start, goal)
            distinct += 1
        else:
            side = tops if k % 4 == 1 else bottoms
            i, j = rng.choice(len(side), size=2, replace=False)
            assert route(start, goal, side[i]) == route(start, goal, side[j]), (start, goal)
            identical += 1
    report(
        "P3 homotopy signatures: %%s (%d opposite-side distinct, %d same-side identical, exact)"
        % (distinct, identical),
        distinct == 10 and identical == 10,
    )


# ---------------------------------------------------------------------------
# P4: posterior vs brute-force enumeration, 1e-12; likelihood sums, 1e-9

def oracle_likelihood_map(grid, s, g, p_v, v, gamma):
    """Filtered-Dijkstra costs plus an explicit softmax, no package inference code."""
    free = set(grid.cell_to_polytope)

    def allowed(c, t):
        e = edge_crossed(grid, c, (t[0] - c[0], t[1] - c[1]))
        if e is INVALID_TRANSITION:
            return False
        if grid.cell_to_polytope[c] == v and e is not None:
            return e == p_v
        return True

    costs = {}
    for a in admissible_actions(grid, s):
        o = (s[0] + a[0], s[1] + a[1])
        if not allowed(s, o):
            costs[o] = math.inf
            continue
        d = oracles.dijkstra_grid(free, o, allowed)
        costs[o] = math.hypot(*a) + d.get(g, math.inf)
    finite = [c for c in costs.values() if math.isfinite(c)]
    if not finite:
        return {o: 1.0 / len(costs) for o in costs}
    m = min(finite)
    w = {o: math.exp(-gamma * (costs[o] - m)) if math.isfinite(costs[o]) else 0.0
         for o in costs}
    z = sum(w.values())
    return {o: w[o] / z for o in w}


def test_P4_inference_exactness(map1):
    grid, arr, graph = map1
    theta = resolve_preference(grid, arr, graph)
    params = HumanParams(gamma_h=1.5)
    rng = np.random.default_rng(4)
    goals = [tuple(g) for g in grid.goal_candidates]
    free = sorted(grid.cell_to_polytope)
    memo = {}

    def lik(s, g, e, o):
        key = (s, g, e)
        if key not in memo:
            memo[key] = oracle_likelihood_map(grid, s, g, e, e.from_vertex, params.gamma_h)
        return memo[key][o]

    worst = 0.0
    for _ in range(100):
        s = free[rng.integers(len(free))]
        v = grid.cell_to_polytope[s]
        exits = neighbors(graph, v)
        truth = GroundTruthIntent(goal=goals[rng.integers(len(goals))], preference=theta)
        b = initial_belief(grid, graph, v)
        cache = CostCache(grid, graph)
        log_post = np.zeros((len(goals), len(exits)))
        for _ in range(int(rng.integers(1, 6))):
            o = sample_human_observation(rng, grid, graph, s, truth, params)
            b = belief_update(b, grid, graph, s, o, params, cache=cache)
            for gi, g in enumerate(goals):
                for pi, e in enumerate(exits):
                    lk = lik(s, g, e, o.intended_cell)
                    log_post[gi, pi] += math.log(lk) if lk > 0 else -math.inf
            inside = [c for c in (apply_action(grid, s, a) for a in admissible_actions(grid, s))
                      if grid.cell_to_polytope[c] == v]
            s = inside[rng.integers(len(inside))] if inside else s
        post = np.exp(log_post - log_post.max())
        post /= post.sum()
        worst = max(worst, float(np.abs(b.probs() - post).max()))
    assert worst <= 1e-12, worst

    # likelihood vectors sum to one; softmax unchanged by constant cost shifts
    sum_err = shift_err = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        costs = rng.uniform(0.0, 40.0, size=n)
        costs[rng.random(n) < 0.2] = math.inf
        lv = likelihood_vector(costs, params.gamma_h)
        sum_err = max(sum_err, abs(lv.sum() - 1.0))
        shifted = likelihood_vector(costs + rng.uniform(-50.0, 50.0), params.gamma_h)
        shift_err = max(shift_err, float(np.abs(lv - shifted).max()))
    report(
        "P4 inference exactness: %%s (100 prefixes, max err %.1e <= 1e-12; "
        "sums %.1e <= 1e-9; shift %.1e <= 1e-12)" % (worst, sum_err, shift_err),
        worst <= 1e-12 and sum_err <= 1e-9 and shift_err <= 1e-12,
    )


# ---------------------------------------------------------------------------
# P5: update cost counts |O(s)|*|N(v)|*m_g and does not grow with map size

def test_P5_update_cost_independence(map1):
    params = HumanParams(gamma_h=1.5)
    means = {}
    for name in ("map1", "classroom"):
        grid, arr, graph = load_bundled(name) if name != "map1" else map1
        s = grid.start
        v = grid.cell_to_polytope[s]
        cache = CostCache(grid, graph)
        b = initial_belief(grid, graph, v)
        o = Observation.from_action(s, admissible_actions(grid, s)[0])
        belief_update(b, grid, graph, s, o, params, cache=cache)
        want = len(admissible_actions(grid, s)) * len(neighbors(graph, v)) * len(grid.goal_candidates)
        assert cache.evals == want, (name, cache.evals, want)

        cells = sorted(c for c, vid in grid.cell_to_polytope.items() if vid == v)
        rng = np.random.default_rng(5)
        times = []
        for _ in range(200):
            c = cells[rng.integers(len(cells))]
            acts = admissible_actions(grid, c)
            oc = Observation.from_action(c, acts[rng.integers(len(acts))])
            t0 = time.perf_counter()
            belief_update(b, grid, graph, c, oc, params, cache=cache)
            times.append(time.perf_counter() - t0)
        means[name] = float(np.mean(times))
    ratio = means["classroom"] / means["map1"]
    report(
        "P5 update-cost independence: %%s (counts exact; 200 updates each, "
        "map1 %.3fms vs classroom %.3fms, ratio %.2f <= 2.0)"
        % (means["map1"] * 1e3, means["classroom"] * 1e3, ratio),
        ratio <= 2.0,
    )


# ---------------------------------------------------------------------------
# P6: point-mass POMCP vs the exact finite-horizon oracle

def test_P6_planner_matches_oracle(map1, theta1):
    grid, arr, graph = map1
    params = RewardParams()
    cfg = PlannerConfig(iterations=2000, depth=30)
    goals = [tuple(g) for g in grid.goal_candidates]
    vi = {g: value_iteration_oracle(grid, graph, g, theta1, params, 30)[0] for g in goals}
    # decisions near the goal, where a point mass on the current vertex's
    # exit pins every crossing the remaining route can make
    pools = {}
    for g in goals:
        gv = grid.cell_to_polytope[g]
        near = {gv} | {e.to_vertex for e in neighbors(graph, gv)}
        pools[g] = sorted(c for c, vid in grid.cell_to_polytope.items()
                          if vid in near and c != g)

    def q_values(s, goal):
        part = Particle(location=s, goal=goal, pref=dict(theta1))
        qs = {}
        for a in ACTIONS:
            try:
                s2 = apply_action(grid, s, a)
            except InvalidActionError:
                continue
            qs[a] = reward(grid, graph, s, a, part, params) + params.discount * vi[goal][s2]
        return qs

    rng = np.random.default_rng(7)
    strict = loose = 0
    slowest = 0.0
    for k in range(100):
        g = goals[k % len(goals)]
        s = pools[g][rng.integers(len(pools[g]))]
        v = grid.cell_to_polytope[s]
        b = initial_belief(grid, graph, v)
        mass = np.zeros((len(b.goals), len(b.exits)))
        mass[goals.index(g), b.exits.index(theta1[v])] = 1.0
        t0 = time.perf_counter()
        a = pomcp_plan(b.with_likelihoods(mass), grid, graph, s, params, cfg,
                       np.random.default_rng(k))
        slowest = max(slowest, time.perf_counter() - t0)
        qs = q_values(s, g)
        top = max(qs.values())
        strict += qs[a] >= top - 1e-9
        # interchangeable move orders differ by less than one cardinal step
        loose += qs[a] >= top - 1.0
    report(
        "P6 planner sanity: %%s (%d/100 within 1.0 of oracle (>=90), %d/100 strict, "
        "slowest decision %.3fs < 1s)" % (loose, strict, slowest),
        loose >= 90 and slowest < 1.0,
    )


# ---------------------------------------------------------------------------
# P7: success-rate trends across observation intervals

def test_P7_success_rate_trends(map1):
    t0 = time.perf_counter()
    rows = sweep(["map1"], list(METHODS), [1, 5, 10, 20, 30], episodes=50,
                 seed=2026, instances=6, config=PlannerConfig(iterations=1000))
    wall = time.perf_counter() - t0
    rate = {(r["method"], r["delta_T"]): r["success_rate"] for r in rows}
    for dt in (1, 5, 10, 20, 30):
        print("P7 table delta_T=%-2d  " % dt
              + "  ".join("%s %.2f" % (m, rate[(m, dt)]) for m in METHODS))
    a = all(rate[("compliant", 1)] >= rate[(m, 1)] for m in METHODS)
    b = rate[("compliant", 30)] <= 0.5 * rate[("compliant", 1)]
    c = all(rate[("path_pref", dt)] > rate[("goal_only", dt)] for dt in (5, 10, 20, 30))
    d = all(rate[("blended", dt)] >= rate[("path_pref", dt)] for dt in (10, 20))
    report(
        "P7 trend reproduction: %%s (a=%s b=%s c=%s d=%s, %.0fs < 30min)"
        % (a, b, c, d, wall),
        a and b and c and d and wall < 1800.0,
    )


# ---------------------------------------------------------------------------
# P8: identical CLI invocations produce byte-identical output

def test_P8_run_determinism():
    cmd = [sys.executable, "-m", "prefnav.cli", "run",
           "--map", "map1", "--method", "path_pref", "--seed", "7"]
    outs = []
    for _ in range(2):
        r = subprocess.run(cmd, capture_output=True, timeout=300)
        assert r.returncode == 0, r.stderr.decode()
        outs.append(r.stdout)
    ok = outs[0] == outs[1] and outs[0].endswith(b"\n") and len(outs[0]) > 2
    report("P8 determinism: %%s (two runs, %d bytes, byte-identical)" % len(outs[0]), ok)
