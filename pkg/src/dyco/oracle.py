"""Exact desk-scale solvers (ApR denominators) and non-neural greedy baselines."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graph import DynamicInstance, GraphSnapshot, Problem
from .qubo import tour_length

ENUM_NODE_CAP = 26
HELD_KARP_NODE_CAP = 18
BNB_NODE_CAP = 70


class CapacityError(ValueError):
    """Instance too large for the exact method."""


def _edge_array(g: GraphSnapshot) -> np.ndarray:
    return np.asarray(g.edges, dtype=np.int64).reshape(-1, 2)


def exact_maxcut(g: GraphSnapshot) -> tuple[int, np.ndarray]:
    """Exhaustive maximum cut; node n-1 pinned to side 0 (complement symmetry)."""
    n = g.node_count
    if n > ENUM_NODE_CAP:
        raise CapacityError(f"exact_maxcut enumerates 2^(n-1); n={n} > {ENUM_NODE_CAP}")
    if not g.edges:
        return 0, np.zeros(n, dtype=np.int64)
    edges = _edge_array(g)
    total = 1 << max(n - 1, 0)
    best_val, best_mask = -1, 0
    chunk = 1 << 20
    for lo in range(0, total, chunk):
        masks = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        cuts = np.zeros(masks.shape[0], dtype=np.int64)
        for i, j in edges:
            cuts += ((masks >> i) & 1) ^ ((masks >> j) & 1)
        k = int(np.argmax(cuts))
        if cuts[k] > best_val:
            best_val, best_mask = int(cuts[k]), int(masks[k])
    witness = np.array([(best_mask >> i) & 1 for i in range(n)], dtype=np.int64)
    return best_val, witness


def _mis_enumerate(g: GraphSnapshot) -> tuple[int, np.ndarray]:
    n = g.node_count
    edges = _edge_array(g)
    total = 1 << n
    best_val, best_mask = -1, 0
    chunk = 1 << 20
    for lo in range(0, total, chunk):
        masks = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        ok = np.ones(masks.shape[0], dtype=bool)
        for i, j in edges:
            ok &= (((masks >> i) & 1) & ((masks >> j) & 1)) == 0
        sizes = np.zeros(masks.shape[0], dtype=np.int64)
        for i in range(n):
            sizes += (masks >> i) & 1
        sizes[~ok] = -1
        k = int(np.argmax(sizes))
        if sizes[k] > best_val:
            best_val, best_mask = int(sizes[k]), int(masks[k])
    witness = np.array([(best_mask >> i) & 1 for i in range(n)], dtype=np.int64)
    return best_val, witness


def _clique_cover_bound(adj: list[int], nodes: int) -> int:
    """Greedy clique cover of the candidate set; its size upper-bounds the MIS
    (an independent set takes at most one node per clique)."""
    clique_masks: list[int] = []
    m = nodes
    i = 0
    while m:
        if m & 1:
            placed = False
            for c, cm in enumerate(clique_masks):
                if (adj[i] & cm) == cm:  # adjacent to every member
                    clique_masks[c] = cm | (1 << i)
                    placed = True
                    break
            if not placed:
                clique_masks.append(1 << i)
        m >>= 1
        i += 1
    return len(clique_masks)


def _mis_branch_bound(g: GraphSnapshot) -> tuple[int, np.ndarray]:
    n = g.node_count
    adj = [0] * n
    for i, j in g.edges:
        adj[i] |= 1 << j
        adj[j] |= 1 << i
    best = {"size": -1, "set": 0}

    def recurse(cand: int, chosen: int, size: int):
        if size + bin(cand).count("1") <= best["size"]:
            return
        if cand == 0:
            if size > best["size"]:
                best["size"], best["set"] = size, chosen
            return
        if size + _clique_cover_bound(adj, cand) <= best["size"]:
            return
        # branch on the candidate of highest degree within the candidate set
        v, vdeg = -1, -1
        m, i = cand, 0
        while m:
            if m & 1:
                d = bin(adj[i] & cand).count("1")
                if d > vdeg:
                    v, vdeg = i, d
            m >>= 1
            i += 1
        recurse(cand & ~((1 << v) | adj[v]), chosen | (1 << v), size + 1)  # take v
        recurse(cand & ~(1 << v), chosen, size)  # skip v
    recurse((1 << n) - 1, 0, 0)
    witness = np.array([(best["set"] >> i) & 1 for i in range(n)], dtype=np.int64)
    return best["size"], witness


def exact_mis(g: GraphSnapshot) -> tuple[int, np.ndarray]:
    """Maximum independent set: exhaustive for small n, branch and bound beyond."""
    n = g.node_count
    if n <= ENUM_NODE_CAP:
        return _mis_enumerate(g)
    if n <= BNB_NODE_CAP:
        return _mis_branch_bound(g)
    raise CapacityError(f"exact_mis limited to n <= {BNB_NODE_CAP}; got {n}")


def exact_tsp_held_karp(dist: np.ndarray) -> tuple[float, list[int]]:
    """Held-Karp subset DP; O(2^n n^2) time, tours anchored at node 0."""
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if n > HELD_KARP_NODE_CAP:
        raise CapacityError(f"Held-Karp limited to n <= {HELD_KARP_NODE_CAP}; got {n}")
    if n == 1:
        return 0.0, [0]
    if n == 2:
        return float(2 * dist[0, 1]), [0, 1]
    full = 1 << (n - 1)  # subsets of nodes 1..n-1
    dp = np.full((full, n - 1), np.inf)
    parent = np.full((full, n - 1), -1, dtype=np.int16)
    for j in range(1, n):
        dp[1 << (j - 1), j - 1] = dist[0, j]
    for mask in range(1, full):
        row = dp[mask]
        if not np.any(np.isfinite(row)):
            continue
        for j in range(1, n):
            bit = 1 << (j - 1)
            if mask & bit:
                continue
            cand = row + dist[1:, j]
            k = int(np.argmin(cand))
            nm = mask | bit
            if cand[k] < dp[nm, j - 1]:
                dp[nm, j - 1] = cand[k]
                parent[nm, j - 1] = k + 1
    closing = dp[full - 1] + dist[1:, 0]
    j = int(np.argmin(closing)) + 1
    best = float(closing[j - 1])
    tour = [j]
    mask = full - 1
    while parent[mask, tour[-1] - 1] != -1:
        prev = int(parent[mask, tour[-1] - 1])
        mask ^= 1 << (tour[-1] - 1)
        tour.append(prev)
    tour.append(0)
    tour.reverse()
    return best, tour


def greedy_cut_baseline(g: GraphSnapshot) -> tuple[int, np.ndarray]:
    """One-pass placement in node-id order, each node on the side maximizing marginal cut."""
    side = np.zeros(g.node_count, dtype=np.int64)
    placed = np.zeros(g.node_count, dtype=bool)
    neigh: list[list[int]] = [[] for _ in range(g.node_count)]
    for i, j in g.edges:
        neigh[i].append(j)
        neigh[j].append(i)
    for v in range(g.node_count):
        gain1 = sum(1 for u in neigh[v] if placed[u] and side[u] == 0)
        gain0 = sum(1 for u in neigh[v] if placed[u] and side[u] == 1)
        side[v] = 1 if gain1 > gain0 else 0  # tie stays on side 0
        placed[v] = True
    cut = sum(1 for i, j in g.edges if side[i] != side[j])
    return int(cut), side


def greedy_tour_baseline(dist: np.ndarray) -> tuple[float, list[int]]:
    """Nearest neighbor from node 0, ties toward the lower node id."""
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    tour = [0]
    visited = np.zeros(n, dtype=bool)
    visited[0] = True
    for _ in range(n - 1):
        row = np.where(visited, np.inf, dist[tour[-1]])
        nxt = int(np.argmin(row))
        tour.append(nxt)
        visited[nxt] = True
    return tour_length(dist, tour), tour


def mean_apr(achieved, optima, problem: Problem) -> float:
    """Mean achieved/optimal ratio over the evaluated snapshots (caller excludes
    snapshot 1). MaxCut/MIS ratios are <= 1; TSP ratios are >= 1."""
    achieved = list(achieved)
    optima = list(optima)
    if len(achieved) != len(optima):
        raise ValueError("achieved/optima length mismatch")
    if any(o == 0 for o in optima):
        raise ValueError("zero optimal value; ApR undefined")
    return float(np.mean([a / o for a, o in zip(achieved, optima)]))


def compute_oracle_cache(inst: DynamicInstance) -> dict:
    """Per-snapshot optimal value and witness for every snapshot of the instance."""
    entries = {}
    for t, snap in enumerate(inst.snapshots, start=1):
        if inst.problem is Problem.MAXCUT:
            val, wit = exact_maxcut(snap)
            entries[str(t)] = {"optimum": val, "witness": [int(x) for x in wit]}
        elif inst.problem is Problem.MIS:
            val, wit = exact_mis(snap)
            entries[str(t)] = {"optimum": val, "witness": [int(x) for x in wit]}
        else:
            val, tour = exact_tsp_held_karp(inst.distances[t - 1])
            entries[str(t)] = {"optimum": val, "witness": [int(x) for x in tour]}
    return {"problem": inst.problem.value, "T": inst.T, "snapshots": entries}


def save_oracle_cache(cache: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(cache, fh)


def load_oracle_cache(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
