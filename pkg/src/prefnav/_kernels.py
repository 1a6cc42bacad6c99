"""Numba kernels behind the POMCP planner.

The search tree lives in preallocated flat arrays (visit counts, per-action
counts, Q estimates, child ids): one planning call runs thousands of
simulations and the tree never outlives the call, so there is nothing to be
gained from objects. Vertex preferences beyond the root are sampled lazily;
a stamp array makes "forget everything between simulations" O(1).

Cell indexing matches pathcost: cell (i, j) -> i * height + j. The action
order must stay aligned with worldgraph.ACTIONS.

The goal is not absorbing inside simulations: every step that lands on the
goal pays R_g, so lingering there dominates any loop of preferred-edge
bonuses. Stopping at the goal is episode-layer behavior, not model behavior.
"""

import math

import numba as nb
import numpy as np

SQRT2 = math.sqrt(2.0)

DX = np.array([1, 1, 0, -1, -1, -1, 0, 1], dtype=np.int64)
DY = np.array([0, 1, 1, 1, 0, -1, -1, -1], dtype=np.int64)
STEP = np.where((DX == 0) | (DY == 0), 1.0, SQRT2)


@nb.njit(cache=True)
def seed_rng(seed):
    np.random.seed(seed)


@nb.njit(cache=True)
def pref_of(u, pref_val, pref_stamp, stamp, nbr_ptr, nbr_val):
    # sample u's preferred exit target once per stamp, then reuse it
    if pref_stamp[u] != stamp:
        lo = nbr_ptr[u]
        k = nbr_ptr[u + 1] - lo
        pref_val[u] = nbr_val[lo + int(np.random.random() * k)]
        pref_stamp[u] = stamp
    return pref_val[u]


@nb.njit(cache=True)
def _step_reward(ci, ti, a, gcell, poly, edge_ok, use_pref,
                 pref_val, pref_stamp, stamp, nbr_ptr, nbr_val, Rg, Rp, Rn):
    r = -STEP[a]
    u = poly[ci]
    w = poly[ti]
    if use_pref != 0 and u != w:
        if u >= 0 and w >= 0 and edge_ok[u, w]:
            if pref_of(u, pref_val, pref_stamp, stamp, nbr_ptr, nbr_val) == w:
                r += Rp
            else:
                r += Rn
        else:
            # either an invalid double crossing or a sliver without an edge
            r += Rn
    if ti == gcell:
        r += Rg
    return r


@nb.njit(cache=True)
def _rollout(ci, gcell, gi, steps, eps, gamma, W, H, free, poly, edge_ok,
             nbr_ptr, nbr_val, dist, Rg, Rp, Rn, use_pref, rollout_id,
             pref_val, pref_stamp, stamp):
    G = 0.0
    disc = 1.0
    for _ in range(steps):
        i0 = ci // H
        j0 = ci % H
        a = -1
        if np.random.random() < eps:
            nvalid = 0
            for k in range(8):
                i = i0 + DX[k]
                j = j0 + DY[k]
                if 0 <= i < W and 0 <= j < H and free[i * H + j]:
                    nvalid += 1
            if nvalid == 0:
                break
            pick = int(np.random.random() * nvalid)
            idx = 0
            for k in range(8):
                i = i0 + DX[k]
                j = j0 + DY[k]
                if 0 <= i < W and 0 <= j < H and free[i * H + j]:
                    if idx == pick:
                        a = k
                        break
                    idx += 1
        elif rollout_id == 0:
            best = np.inf
            for k in range(8):
                i = i0 + DX[k]
                j = j0 + DY[k]
                if 0 <= i < W and 0 <= j < H:
                    ti = i * H + j
                    if free[ti]:
                        dv = dist[gi, ti]
                        if a < 0 or dv < best:
                            best = dv
                            a = k
        else:
            # one-step lookahead with a linear tail: each octile step of
            # remaining distance delays the recurring goal reward by about
            # half a bounce cycle, so it is worth roughly (Rg - 2) / 2
            dval = 0.5 * (Rg - 2.0)
            best = -np.inf
            for k in range(8):
                i = i0 + DX[k]
                j = j0 + DY[k]
                if 0 <= i < W and 0 <= j < H:
                    ti = i * H + j
                    if free[ti] and np.isfinite(dist[gi, ti]):
                        sc = _step_reward(ci, ti, k, gcell, poly, edge_ok, use_pref,
                                          pref_val, pref_stamp, stamp, nbr_ptr, nbr_val,
                                          Rg, Rp, Rn) - dval * dist[gi, ti]
                        if a < 0 or sc > best:
                            best = sc
                            a = k
        if a < 0:
            break
        ti = (i0 + DX[a]) * H + (j0 + DY[a])
        r = _step_reward(ci, ti, a, gcell, poly, edge_ok, use_pref,
                         pref_val, pref_stamp, stamp, nbr_ptr, nbr_val, Rg, Rp, Rn)
        G += disc * r
        disc *= gamma
        ci = ti
    return G


@nb.njit(cache=True)
def pomcp_run(seed, iterations, depth, c, eps, gamma, Rg, Rp, Rn, W, H,
              free, poly, edge_ok, nbr_ptr, nbr_val,
              cum_hyp, hyp_goal, hyp_pref, goal_cells, dist,
              s0, v0, use_pref, rollout_id,
              N, Na, Q, child, pref_val, pref_stamp):
    np.random.seed(seed)
    n_nodes = 1
    path_nodes = np.empty(depth, np.int64)
    path_acts = np.empty(depth, np.int64)
    path_rew = np.empty(depth, np.float64)

    for it in range(1, iterations + 1):
        r = np.random.random()
        hi = 0
        while cum_hyp[hi] <= r:
            hi += 1
        gi = hyp_goal[hi]
        gcell = goal_cells[gi]
        if use_pref != 0:
            pref_val[v0] = hyp_pref[hi]
            pref_stamp[v0] = it

        ci = s0
        node = 0
        plen = 0
        tail = 0.0
        for d in range(depth):
            i0 = ci // H
            j0 = ci % H
            untried = -1
            best_a = -1
            best_u = -np.inf
            for k in range(8):
                i = i0 + DX[k]
                j = j0 + DY[k]
                if i < 0 or i >= W or j < 0 or j >= H:
                    continue
                if not free[i * H + j]:
                    continue
                if Na[node, k] == 0:
                    if untried < 0:
                        untried = k
                    continue
                u = Q[node, k]
                if c > 0.0:
                    u += c * math.sqrt(math.log(N[node]) / Na[node, k])
                if u > best_u:
                    best_u = u
                    best_a = k
            a = untried if untried >= 0 else best_a
            if a < 0:
                break
            ti = (i0 + DX[a]) * H + (j0 + DY[a])
            path_nodes[plen] = node
            path_acts[plen] = a
            path_rew[plen] = _step_reward(
                ci, ti, a, gcell, poly, edge_ok, use_pref,
                pref_val, pref_stamp, it, nbr_ptr, nbr_val, Rg, Rp, Rn)
            plen += 1
            if child[node, a] < 0:
                child[node, a] = n_nodes
                n_nodes += 1
                tail = _rollout(ti, gcell, gi, depth - d - 1, eps, gamma,
                                W, H, free, poly, edge_ok, nbr_ptr, nbr_val,
                                dist, Rg, Rp, Rn, use_pref, rollout_id,
                                pref_val, pref_stamp, it)
                break
            node = child[node, a]
            ci = ti

        G = tail
        for p in range(plen - 1, -1, -1):
            G = path_rew[p] + gamma * G
            nd = path_nodes[p]
            ak = path_acts[p]
            N[nd] += 1
            Na[nd, ak] += 1
            Q[nd, ak] += (G - Q[nd, ak]) / Na[nd, ak]
    return n_nodes
