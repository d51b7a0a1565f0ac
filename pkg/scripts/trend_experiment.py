#!/usr/bin/env python3
"""Strategy comparison on a synthetic growing MaxCut instance.

Builds an Erdos-Renyi growth sequence, runs static / warm / shrink-and-perturb
schedules over a budget sweep, and prints a mean-ApR table against best-known
per-snapshot cut values.
"""

import argparse

import numpy as np

from dyco import solver
from dyco.graph import TemporalEdgeList, build_growth_snapshots
from dyco.oracle import greedy_cut_baseline
from dyco.qubo import cut_size


def make_instance(n, edges, snapshots, graph_seed):
    rng = np.random.default_rng(graph_seed)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    idx = rng.choice(len(pairs), size=edges, replace=False)
    events = tuple(
        (pairs[k][0], pairs[k][1], 1.0, float(t)) for t, k in enumerate(idx)
    )
    return build_growth_snapshots(
        TemporalEdgeList(events=events), snapshots, 1.0 / snapshots
    )


def one_flip_local_search(snap, x):
    x = np.array(x)
    adj = snap.adjacency()
    improved = True
    while improved:
        improved = False
        for v in range(snap.node_count):
            same = adj[v] @ (x == x[v]) - adj[v, v]
            diff = adj[v] @ (x != x[v])
            if same > diff:
                x[v] ^= 1
                improved = True
    return cut_size(snap.edges, x)


def best_known_cuts(inst, runs, restarts=20, seed=0):
    best = {t: 0.0 for t in range(2, inst.T + 1)}
    for traces in runs.values():
        for tr in traces:
            for s in tr.snapshots:
                if s.index > 1:
                    for c in s.cuts:
                        best[s.index] = max(best[s.index], c.objective)
    rng = np.random.default_rng(seed)
    for t in range(2, inst.T + 1):
        snap = inst.snapshots[t - 1]
        _, side = greedy_cut_baseline(snap)
        best[t] = max(best[t], one_flip_local_search(snap, side))
        for _ in range(restarts):
            start = rng.integers(0, 2, snap.node_count)
            best[t] = max(best[t], one_flip_local_search(snap, start))
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=60)
    ap.add_argument("--edges", type=int, default=300)
    ap.add_argument("--snapshots", type=int, default=10)
    ap.add_argument("--graph-seed", type=int, default=42)
    ap.add_argument("--seeds", type=int, default=5, help="repetitions per strategy")
    ap.add_argument("--budgets", default="50,300,1000,3000")
    ap.add_argument("--epochs", type=int, default=3000)
    ap.add_argument("--d-emb", type=int, default=256)
    ap.add_argument("--d-hidden", type=int, default=128)
    ap.add_argument("--lr", type=float, default=1e-4)
    ap.add_argument("--conv", choices=("gcn", "sage"), default="sage")
    args = ap.parse_args()

    budgets = [int(b) for b in args.budgets.split(",")]
    inst = make_instance(args.nodes, args.edges, args.snapshots, args.graph_seed)
    print("edges per snapshot:", [s.edge_count for s in inst.snapshots])

    runs = {}
    for strategy in ("static", "warm", "sp"):
        sched = solver.SolveSchedule(
            strategy=strategy,
            epoch_max=args.epochs,
            epoch_ws=args.epochs,
            lr=args.lr,
            conv=args.conv,
            repetitions=args.seeds,
            d_emb=args.d_emb,
            d_hidden=args.d_hidden,
        )
        runs[strategy] = solver.run_budget_sweep(inst, sched, budgets)
        print(f"{strategy}: done")

    best = best_known_cuts(inst, runs)
    print("best-known cuts:", best)
    header = "strategy," + ",".join(f"median_apr@{b}" for b in budgets)
    print(header)
    for strategy, traces in runs.items():
        row = [strategy]
        for b in budgets:
            aprs = [solver.apr_at_budget(t, best, b, inst.problem) for t in traces]
            row.append(f"{np.median(aprs):.4f}")
        print(",".join(row))


if __name__ == "__main__":
    main()
