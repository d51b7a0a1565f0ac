#!/usr/bin/env python3
"""Hyperplane-rounding success probability under SDP-solution perturbation.

For each noise scale lambda, perturbs a base feasible matrix with a symmetric
Gaussian matrix, projects back onto {X PSD, diag(X)=1}, rounds with random
hyperplanes, and reports how often the known optimal cut is recovered
(with a Wilson confidence interval).
"""

import argparse
import sys

import numpy as np

from dyco import gwlab
from dyco.graph import GraphSnapshot
from dyco.oracle import exact_maxcut


def cycle(n):
    edges = tuple((i, (i + 1) % n) for i in range(n))
    return GraphSnapshot(node_count=n, edges=edges, weights=(1.0,) * n)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cycle", type=int, default=5, help="use the n-cycle graph")
    ap.add_argument("--x0", choices=["sdp", "allones"], default="allones")
    ap.add_argument("--experiment", choices=["perturb", "warmstart"], default="perturb")
    ap.add_argument("--lambdas", default="0.0,0.1,0.3,0.5,1.0")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--rounding-trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = cycle(args.cycle)
    c_star, _ = exact_maxcut(g)
    if args.x0 == "allones":
        x0 = gwlab.SdpPoint(matrix=np.ones((g.node_count, g.node_count)))
    else:
        x0 = gwlab.solve_gw_sdp(g, seed=args.seed)
    fn = (
        gwlab.warmstart_sdp_experiment
        if args.experiment == "warmstart"
        else gwlab.perturbation_experiment
    )
    rows = fn(
        g,
        x0,
        [float(t) for t in args.lambdas.split(",")],
        trials_per_lambda=args.trials,
        rounding_trials=args.rounding_trials,
        c_star=c_star,
        seed=args.seed,
    )
    sys.stdout.write(gwlab.rows_to_csv(rows))


if __name__ == "__main__":
    main()
