"""A guided tour of the pipeline on the bundled simple map.

Walks the whole stack in one sitting: obstacle arrangement, polytope graph,
path preferences, preference-constrained paths, belief updates from a few
human cues, and finally a planned episode. Run it from the repo root:

    python3 demos/tour_map1.py
"""

import numpy as np

from prefnav.experiments import canonical_instance, run_episode
from prefnav.intent import GroundTruthIntent, HumanParams, belief_update, initial_belief
from prefnav.intent import sample_human_observation
from prefnav.pathcost import PathQuery, shortest_path
from prefnav.worldgraph import load_bundled, neighbors, resolve_preference


def render(grid, trail=(), robot=None):
    rows = []
    trail = set(trail)
    for y in range(grid.height - 1, -1, -1):
        row = []
        for x in range(grid.width):
            c = (x, y)
            if c == robot:
                ch = "R"
            elif c == grid.start:
                ch = "S"
            elif c == tuple(grid.goal_candidates[grid.true_goal_index]):
                ch = "G"
            elif c in {tuple(g) for g in grid.goal_candidates}:
                ch = "g"
            elif c in trail:
                ch = "*"
            elif c in grid.blocked:
                ch = "#"
            else:
                ch = "."
            row.append(ch)
        rows.append(" ".join(row))
    return "\n".join(rows)


def main():
    grid, arr, graph = load_bundled("map1")
    print("== the world ==")
    print(render(grid))
    print("free cells: %d   polytopes: %d   facets: %d"
          % (len(grid.cell_to_polytope), len(graph.vertices), len(graph.labels)))

    theta = resolve_preference(grid, arr, graph)
    print("\n== path preferences (preferred exit per polytope) ==")
    for v in graph.vertices:
        e = theta[v]
        print("  polytope %d -> cross into %d (facet %d of %d)"
              % (v, e.to_vertex, 1 + neighbors(graph, v).index(e), len(neighbors(graph, v))))

    goal = tuple(grid.goal_candidates[grid.true_goal_index])
    v0 = grid.cell_to_polytope[grid.start]
    free = shortest_path(grid, graph, PathQuery(start=grid.start, goal=goal))
    held = shortest_path(grid, graph, PathQuery(
        start=grid.start, goal=goal,
        preferred_exit=theta[v0], constrained_vertex=v0))
    print("\n== shortest paths to the true goal %s ==" % (goal,))
    print("unconstrained: length %.2f, crossings %s"
          % (free.length, [(e.from_vertex, e.to_vertex) for e in free.edge_sequence]))
    print("honoring theta at the start polytope: length %.2f, crossings %s"
          % (held.length, [(e.from_vertex, e.to_vertex) for e in held.edge_sequence]))

    print("\n== watching the human: three cues, one belief ==")
    params = HumanParams(gamma_h=1.5)
    truth = GroundTruthIntent(goal=goal, preference=theta)
    rng = np.random.default_rng(8)
    b = initial_belief(grid, graph, v0)
    s = grid.start
    names = [str(tuple(g)) for g in b.goals]
    exit_names = ["->%d" % e.to_vertex for e in b.exits]
    for k in range(3):
        o = sample_human_observation(rng, grid, graph, s, truth, params)
        b = belief_update(b, grid, graph, s, o, params)
        marg = b.goal_marginal()
        exits = b.probs().sum(axis=0)
        print("cue %d: heading %-2s -> goals  %s   exits  %s"
              % (k + 1, o.heading,
                 "  ".join("%s %.2f" % nm for nm in zip(names, marg)),
                 "  ".join("%s %.2f" % en for en in zip(exit_names, exits))))
    # from this start cell every goal is reached through the same facets, so
    # the cues move the exit posterior while the goal marginal waits for
    # evidence gathered closer to the obstacle
    print("true goal is %s, preferred exit of the start polytope is ->%d"
          % (goal, theta[v0].to_vertex))

    print("\n== one planned episode (preference-aware planner) ==")
    inst = canonical_instance("map1", seed=8)
    r = run_episode(inst, "path_pref", np.random.default_rng(8))
    print(render(grid, trail=r.trajectory[:-1], robot=r.trajectory[-1]))
    print("steps %d   violations %d   success %s"
          % (r.steps, r.violations, r.success))
    print("observations arrived at t = %s" % ([t for t, _ in r.observations],))


if __name__ == "__main__":
    main()
