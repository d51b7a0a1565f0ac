"""`dyco` command line: build instances, solve, run oracles, GW experiments, reports."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import gwlab, nn, oracle, solver
from .graph import (
    DynamicInstance,
    Problem,
    build_deletion_snapshots,
    build_growth_snapshots,
    build_moving_node_instance,
    ingest_temporal_edges,
    instance_from_json,
    instance_to_json,
    parse_tsplib,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_INTERNAL = 4


def _parse_xy(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected x,y")
    return float(parts[0]), float(parts[1])


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def cmd_build(args) -> int:
    problem = Problem(args.problem)
    raw = Path(args.input).read_text()
    if problem is Problem.TSP:
        base = parse_tsplib(raw)
        if args.start is None or args.end is None:
            raise ValueError("tsp build requires --start and --end")
        inst = build_moving_node_instance(
            base, args.start, args.end, args.snapshots, rounded=not args.no_rounding
        )
    else:
        tel = ingest_temporal_edges(raw)
        fraction = args.fraction if args.fraction is not None else 1.0 / args.snapshots
        if problem is Problem.MAXCUT:
            inst = build_growth_snapshots(tel, args.snapshots, fraction, problem=problem)
        else:
            inst = build_deletion_snapshots(tel, args.snapshots, fraction, problem=problem)
    Path(args.output).write_text(instance_to_json(inst))
    print("snapshot,nodes,edges")
    for t, s in enumerate(inst.snapshots, start=1):
        print(f"{t},{s.node_count},{s.edge_count}")
    return EXIT_OK


def _load_instance(path) -> DynamicInstance:
    return instance_from_json(Path(path).read_text())


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    sched = solver.SolveSchedule(
        strategy=args.strategy,
        sp_subset=args.sp_subset,
        epoch_max=args.epoch_max,
        epoch_ws=args.epoch_ws,
        lr=args.lr,
        lam_shrink=args.lam_shrink,
        lam_perturb=args.lam_perturb,
        sigma=args.sigma,
        seed=args.seed,
        conv=args.conv,
        repetitions=args.reps,
        checkpoint_every=args.checkpoint_every,
        beam_width=args.beam_width,
        penalty_m=args.penalty_m,
        keep_adam_state=args.keep_adam_state,
    )
    budgets = args.budgets or [sched.epoch_ws]
    traces = solver.run_budget_sweep(inst, sched, budgets, jobs=args.jobs)
    optima = None
    if args.apr:
        cache = oracle.compute_oracle_cache(inst)
        optima = {int(k): v["optimum"] for k, v in cache["snapshots"].items()}
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.json").write_text(solver.trace_to_json(traces, sched))
    Path(f"{prefix}.csv").write_text(solver.trace_to_csv(traces, optima, inst.problem))
    if optima is not None:
        for b in budgets:
            aprs = [solver.apr_at_budget(t, optima, b, inst.problem) for t in traces]
            print(
                f"budget={b} mean_apr_mean={np.mean(aprs):.5f} "
                f"mean_apr_median={np.median(aprs):.5f}"
            )
    print(f"wrote {prefix}.json and {prefix}.csv")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    out = Path(args.output)
    if out.exists() and not args.force:
        print(f"cache hit: {out}")
        return EXIT_OK
    cache = oracle.compute_oracle_cache(inst)
    oracle.save_oracle_cache(cache, out)
    for t, entry in sorted(cache["snapshots"].items(), key=lambda kv: int(kv[0])):
        print(f"snapshot {t}: optimum {entry['optimum']}")
    return EXIT_OK


def cmd_gwlab(args) -> int:
    inst = _load_instance(args.instance)
    snap = inst.snapshots[args.snapshot - 1]
    c_star, _ = oracle.exact_maxcut(snap)
    if args.x0 == "allones":
        x0 = gwlab.SdpPoint(matrix=np.ones((snap.node_count, snap.node_count)))
    else:
        x0 = gwlab.solve_gw_sdp(snap, seed=args.seed)
    fn = (
        gwlab.warmstart_sdp_experiment
        if args.experiment == "warmstart"
        else gwlab.perturbation_experiment
    )
    rows = fn(
        snap,
        x0,
        args.lambdas,
        trials_per_lambda=args.trials,
        rounding_trials=args.rounding_trials,
        c_star=c_star,
        seed=args.seed,
    )
    csv = gwlab.rows_to_csv(rows)
    Path(args.output).write_text(csv)
    sys.stdout.write(csv)
    return EXIT_OK


def cmd_report(args) -> int:
    """Merge trace files and an oracle cache into a mean-ApR table
    (one row per method, one column per budget) plus per-snapshot CSVs."""
    cache = oracle.load_oracle_cache(args.oracle)
    optima = {int(k): v["optimum"] for k, v in cache["snapshots"].items()}
    problem = Problem(cache["problem"])
    table: list[tuple[str, dict[int, tuple[float, float]]]] = []
    budgets_all: list[int] = []
    per_snapshot_lines = ["method,rep,snapshot,budget_epochs,objective,apr"]
    for path in args.traces:
        sched, traces = solver.traces_from_json(Path(path).read_text())
        method = sched.strategy if sched.strategy != "sp" else f"sp-{sched.sp_subset}"
        budgets = sorted({c.budget for t in traces for s in t.snapshots for c in s.cuts})
        budgets_all = sorted(set(budgets_all) | set(budgets))
        cells = {}
        for b in budgets:
            aprs = [solver.apr_at_budget(t, optima, b, problem) for t in traces]
            cells[b] = (float(np.mean(aprs)), float(np.median(aprs)))
        table.append((method, cells))
        for t in traces:
            for s in t.snapshots:
                if s.index == 1:
                    continue
                for c in s.cuts:
                    apr = c.objective / optima[s.index]
                    per_snapshot_lines.append(
                        f"{method},{t.rep},{s.index},{c.budget},{c.objective:.6f},{apr:.6f}"
                    )
    header = "method," + ",".join(f"mean@{b},median@{b}" for b in budgets_all)
    lines = [header]
    for method, cells in table:
        row = [method]
        for b in budgets_all:
            if b in cells:
                row += [f"{cells[b][0]:.5f}", f"{cells[b][1]:.5f}"]
            else:
                row += ["", ""]
        lines.append(",".join(row))
    Path(args.output).write_text("\n".join(lines) + "\n")
    Path(args.snapshot_output).write_text("\n".join(per_snapshot_lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dyco", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct a dynamic instance from raw input")
    b.add_argument("--problem", choices=[x.value for x in Problem], required=True)
    b.add_argument("--input", required=True, help="temporal edge list or TSPLIB file")
    b.add_argument("--output", required=True, help="instance JSON path")
    b.add_argument("--snapshots", type=int, default=10, help="number of snapshots T")
    b.add_argument("--fraction", type=float, default=None,
                   help="edge fraction added per step (default 1/T)")
    b.add_argument("--start", type=_parse_xy, default=None, help="tsp: moving node start x,y")
    b.add_argument("--end", type=_parse_xy, default=None, help="tsp: moving node end x,y")
    b.add_argument("--no-rounding", action="store_true",
                   help="tsp: continuous EUC_2D distances instead of TSPLIB rounding")
    b.set_defaults(fn=cmd_build)

    s = sub.add_parser("solve", help="run a solve schedule over an instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--strategy", choices=["static", "warm", "sp"], default="sp")
    s.add_argument("--sp-subset", choices=["emb", "gnn", "full"], default="full")
    s.add_argument("--epoch-max", type=int, default=3000)
    s.add_argument("--epoch-ws", type=int, default=3000)
    s.add_argument("--budgets", type=_parse_int_list, default=None,
                   help="comma-separated epoch budgets, e.g. 50,100,3000")
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--lam-shrink", type=float, default=0.4)
    s.add_argument("--lam-perturb", type=float, default=0.1)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--conv", choices=["gcn", "sage"], default="gcn")
    s.add_argument("--beam-width", type=int, default=1)
    s.add_argument("--checkpoint-every", type=int, default=0,
                   help="tsp best-checkpoint decode cadence (0 = final only)")
    s.add_argument("--penalty-m", type=float, default=None)
    s.add_argument("--keep-adam-state", action="store_true",
                   help="carry Adam moments through shrink-and-perturb")
    s.add_argument("--apr", action="store_true", help="compute exact optima and report ApR")
    s.add_argument("--jobs", type=int, default=1, help="worker threads for repetitions")
    s.add_argument("--out-prefix", default="trace")
    s.set_defaults(fn=cmd_solve)

    o = sub.add_parser("oracle", help="compute/cache exact per-snapshot optima")
    o.add_argument("--instance", required=True)
    o.add_argument("--output", required=True)
    o.add_argument("--force", action="store_true", help="recompute even on cache hit")
    o.set_defaults(fn=cmd_oracle)

    g = sub.add_parser("gwlab", help="GW perturbation experiments on one snapshot")
    g.add_argument("--instance", required=True)
    g.add_argument("--snapshot", type=int, default=1, help="1-based snapshot index")
    g.add_argument("--experiment", choices=["perturb", "warmstart"], default="perturb")
    g.add_argument("--x0", choices=["sdp", "allones"], default="sdp",
                   help="base point: the SDP optimum or the all-ones matrix")
    g.add_argument("--lambdas", type=_parse_float_list, default=[0.0, 0.1, 0.3, 0.5, 1.0])
    g.add_argument("--trials", type=int, default=200, help="perturbation draws per lambda")
    g.add_argument("--rounding-trials", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", required=True)
    g.set_defaults(fn=cmd_gwlab)

    r = sub.add_parser("report", help="merge traces + oracle cache into ApR tables")
    r.add_argument("--traces", nargs="+", required=True)
    r.add_argument("--oracle", required=True)
    r.add_argument("--output", required=True)
    r.add_argument("--snapshot-output", default="snapshots.csv",
                   help="per-snapshot ApR CSV (bar-chart shaped)")
    r.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except oracle.CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # invariant violation
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
