"""Authoring a map document from scratch, including the two classic mistakes.

A map is a JSON document: grid size, convex obstacles as halfplane lists,
start, goal candidates, and a preference spec. The validator enforces two
geometric rules that trip up most first attempts:

  1. no hyperplane may pass through a cell center (centers sit at half-integer
     coordinates, so integer-valued boundaries are always safe), and
  2. every obstacle must lie strictly inside the map bounds; flush against
     the border leaves degenerate slivers the arrangement rejects.

This script makes both mistakes on purpose, reads the errors, fixes the
document, and runs a short episode on the result.

    python3 demos/author_a_map.py
"""

import json

import numpy as np

from prefnav.experiments import canonical_instance, run_episode
from prefnav.geometry import MapValidationError
from prefnav.worldgraph import load_map, resolve_preference


def box(x0, x1, y0, y1):
    """Axis-aligned rectangle as outward halfplanes n.x <= c."""
    return {"halfplanes": [
        {"n": [-1.0, 0.0], "c": -x0},
        {"n": [1.0, 0.0], "c": x1},
        {"n": [0.0, -1.0], "c": -y0},
        {"n": [0.0, 1.0], "c": y1},
    ]}


def attempt(doc, label):
    print("-- %s" % label)
    try:
        grid, arr, graph = load_map(json.dumps(doc))
    except MapValidationError as err:
        print("   rejected: %s" % err)
        return None
    print("   accepted: %d free cells, %d polytopes"
          % (len(grid.cell_to_polytope), len(graph.vertices)))
    return grid, arr, graph


def main():
    doc = {
        "width": 12, "height": 8, "cell_size": 1.0,
        "obstacles": [box(4.0, 7.0, 2.0, 5.0)],
        "start": [0, 3],
        "goal_candidates": [[11, 3], [11, 6]],
        "true_goal_index": 0,
        "preference": {"mode": "auto_ccw", "obstacle": 0},
        "T_max": 40, "delta_T": 5, "gamma_h": 1.5,
    }

    # mistake 1: a wall through x = 4.5 runs exactly through the centers of
    # column 4, so cells there are neither inside nor outside
    bad = dict(doc)
    bad["obstacles"] = [box(4.5, 7.0, 2.0, 5.0)]
    attempt(bad, "wall through cell centers (x = 4.5)")

    # mistake 2: obstacle flush against the top border
    bad = dict(doc)
    bad["obstacles"] = [box(4.0, 7.0, 2.0, 8.0)]
    attempt(bad, "obstacle touching the boundary (y up to 8)")

    # the fix: integer boundaries, strictly inside the box
    world = attempt(doc, "integer walls, strictly inside")
    grid, arr, graph = world
    theta = resolve_preference(grid, arr, graph)
    print("   preference resolves to %d exits (counterclockwise rule)" % len(theta))

    print("-- two episodes on the new map")
    path = "/tmp/authored_map.json"
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
    # the preference is hidden from the robot; whether the first few cues
    # disambiguate the preferred side before the first crossing decides
    # between a clean run and a penalized one
    for seed in (4, 3):
        inst = canonical_instance(path, seed=seed)
        r = run_episode(inst, "path_pref", np.random.default_rng(seed))
        print("   seed %d: %s -> %s in %d steps, violations %d, success %s"
              % (seed, tuple(inst.start), r.trajectory[-1], r.steps,
                 r.violations, r.success))
    print("   document saved to %s" % path)


if __name__ == "__main__":
    main()
