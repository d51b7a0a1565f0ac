"""Solve strategies over snapshot sequences: static, warm start, shrink-and-perturb."""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import decode, nn
from .graph import DynamicInstance, Problem
from .qubo import QuboInstance, build_qubo, natural_objective, qubo_grad, qubo_loss

STRATEGY_STATIC = "static"
STRATEGY_WARM = "warm"
STRATEGY_SP = "sp"


@dataclass
class SolveSchedule:
    strategy: str = STRATEGY_SP
    sp_subset: str = nn.SUBSET_FULL
    epoch_max: int = 3000
    epoch_ws: int = 3000
    lr: float = 1e-3
    lam_shrink: float = 0.4
    lam_perturb: float = 0.1
    sigma: float = 1.0
    seed: int = 0
    conv: str = nn.GCN
    repetitions: int = 1
    checkpoint_every: int = 0  # >0: TSP best-checkpoint decoding cadence
    beam_width: int = 1
    penalty_m: float | None = None
    keep_adam_state: bool = False  # SP only: carry Adam moments through SP
    d_emb: int = nn.DEFAULT_EMB_DIM
    d_hidden: int = nn.DEFAULT_HIDDEN_DIM

    def __post_init__(self):
        if self.strategy not in (STRATEGY_STATIC, STRATEGY_WARM, STRATEGY_SP):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.epoch_max < 1 or self.epoch_ws < 0:
            raise ValueError("epoch budgets must be positive")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass
class BudgetCut:
    budget: int
    seconds: float
    objective: float
    solution: list

    def to_dict(self):
        return {
            "budget": self.budget,
            "seconds": self.seconds,
            "objective": self.objective,
            "solution": self.solution,
        }


@dataclass
class SnapshotTrace:
    index: int  # 1-based
    cuts: list[BudgetCut]
    final_loss: float
    losses: list[float] = field(default_factory=list)

    def objective_at(self, budget: int) -> float:
        for c in self.cuts:
            if c.budget == budget:
                return c.objective
        raise KeyError(f"no cut recorded at budget {budget}")


@dataclass
class SolveTrace:
    strategy: str
    rep: int
    seed: int
    snapshots: list[SnapshotTrace]

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "rep": self.rep,
            "seed": self.seed,
            "snapshots": [
                {
                    "index": s.index,
                    "final_loss": s.final_loss,
                    "cuts": [c.to_dict() for c in s.cuts],
                }
                for s in self.snapshots
            ],
        }


def _rep_seed(base: int, rep: int) -> int:
    return int(base + 1_000_003 * rep)


def _snapshot_seed(rep_seed: int, t: int) -> int:
    return int(rep_seed ^ t)


def _decode_solution(problem: Problem, out: np.ndarray, q: QuboInstance, snap, sched):
    if problem is Problem.MAXCUT:
        x = decode.round_binary(out)
        return [int(v) for v in x], natural_objective(q, x)
    if problem is Problem.MIS:
        x = decode.repair_mis(snap, decode.round_binary(out))
        return [int(v) for v in x], natural_objective(q, x)
    probs = out.reshape(q.n_nodes, q.n_nodes)
    if sched.beam_width > 1:
        tour = decode.decode_tour_beam(probs, sched.beam_width)
    else:
        tour = decode.decode_tour_greedy(probs)
    return [int(v) for v in tour], natural_objective(q, tour)


def _optimize_snapshot(
    model, op, q: QuboInstance, snap, sched: SolveSchedule, epochs: int, budgets, index: int
) -> SnapshotTrace:
    """Run the epoch loop, decoding at each budget cut (and optionally at
    periodic checkpoints in TSP best-of mode)."""
    problem = q.problem
    budgets = sorted(set(budgets))
    best_obj = None
    best_sol = None
    minimize = problem is Problem.TSP
    cuts: list[BudgetCut] = []
    losses: list[float] = []
    start = time.perf_counter()
    out0 = nn.forward(model, op)[0]
    loss = qubo_loss(q, out0)
    next_cut = 0
    if budgets and budgets[0] == 0:  # epoch_ws=0 degenerate: decode the warm-started state
        sol, obj = _decode_solution(problem, out0, q, snap, sched)
        cuts.append(
            BudgetCut(budget=0, seconds=time.perf_counter() - start, objective=obj, solution=sol)
        )
        next_cut = 1
    for epoch in range(1, epochs + 1):
        out, tape = nn.forward(model, op)
        loss = qubo_loss(q, out)
        losses.append(loss)
        grads = nn.backward(model, tape, qubo_grad(q, out))
        nn.adam_step(model, grads, sched.lr)
        at_checkpoint = sched.checkpoint_every > 0 and epoch % sched.checkpoint_every == 0
        at_cut = next_cut < len(budgets) and epoch == budgets[next_cut]
        if at_checkpoint or at_cut:
            out_now, _ = nn.forward(model, op)
            sol, obj = _decode_solution(problem, out_now, q, snap, sched)
            if sched.checkpoint_every > 0:
                if best_obj is None or (obj < best_obj if minimize else obj > best_obj):
                    best_obj, best_sol = obj, sol
                report_sol, report_obj = best_sol, best_obj
            else:
                report_sol, report_obj = sol, obj
            if at_cut:
                cuts.append(
                    BudgetCut(
                        budget=epoch,
                        seconds=time.perf_counter() - start,
                        objective=report_obj,
                        solution=report_sol,
                    )
                )
                next_cut += 1
    if (not budgets or budgets[-1] != epochs) and epochs > 0:
        out_now, _ = nn.forward(model, op)
        sol, obj = _decode_solution(problem, out_now, q, snap, sched)
        if sched.checkpoint_every > 0 and best_obj is not None:
            if obj < best_obj if minimize else obj > best_obj:
                best_obj, best_sol = obj, sol
            sol, obj = best_sol, best_obj
        cuts.append(
            BudgetCut(
                budget=epochs,
                seconds=time.perf_counter() - start,
                objective=obj,
                solution=sol,
            )
        )
    return SnapshotTrace(index=index, cuts=cuts, final_loss=loss, losses=losses)


def _build_qubos(inst: DynamicInstance, sched: SolveSchedule) -> list[QuboInstance]:
    qs = []
    for t, snap in enumerate(inst.snapshots):
        dist = inst.distances[t] if inst.problem is Problem.TSP else None
        qs.append(build_qubo(inst.problem, snap, dist=dist, m=sched.penalty_m))
    return qs


def _d_out(inst: DynamicInstance) -> int:
    return inst.snapshots[0].node_count if inst.problem is Problem.TSP else 1


def _solve_one_rep(inst: DynamicInstance, sched: SolveSchedule, budgets, rep: int) -> SolveTrace:
    rep_seed = _rep_seed(sched.seed, rep)
    qs = _build_qubos(inst, sched)
    ops = [nn.build_operator(s, sched.conv) for s in inst.snapshots]
    d_out = _d_out(inst)
    snaps: list[SnapshotTrace] = []
    model = None
    for t, (snap, q, op) in enumerate(zip(inst.snapshots, qs, ops), start=1):
        if t == 1 or sched.strategy == STRATEGY_STATIC:
            model = nn.init_model(
                snap.node_count,
                d_out,
                layer_kind=sched.conv,
                seed=_snapshot_seed(rep_seed, t),
                d_emb=sched.d_emb,
                d_hidden=sched.d_hidden,
            )
        elif sched.strategy == STRATEGY_SP:
            nn.shrink_perturb(
                model,
                sched.lam_shrink,
                sched.lam_perturb,
                subset=sched.sp_subset,
                sigma=sched.sigma,
                seed=_snapshot_seed(rep_seed, t) + 0x5B,
                keep_adam_state=sched.keep_adam_state,
            )
        # warm start: keep model (and Adam state) from the previous snapshot
        epochs = sched.epoch_max if t == 1 else sched.epoch_ws
        cut_budgets = [] if t == 1 else list(budgets)
        snaps.append(_optimize_snapshot(model, op, q, snap, sched, epochs, cut_budgets, t))
    return SolveTrace(strategy=sched.strategy, rep=rep, seed=rep_seed, snapshots=snaps)


def run_budget_sweep(
    inst: DynamicInstance, sched: SolveSchedule, budgets, jobs: int = 1
) -> list[SolveTrace]:
    """One optimization run per snapshot per repetition, decoded at each budget cut."""
    budgets = list(budgets)
    if budgets != sorted(budgets):
        raise ValueError("budgets must be sorted ascending")
    if budgets and budgets[-1] > sched.epoch_ws:
        raise ValueError("largest budget exceeds epoch_ws")
    reps = range(sched.repetitions)
    if jobs > 1 and sched.repetitions > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_solve_one_rep, inst, sched, budgets, r) for r in reps]
            return [f.result() for f in futures]
    return [_solve_one_rep(inst, sched, budgets, r) for r in reps]


def solve_static(inst, sched: SolveSchedule, budgets=None, jobs: int = 1):
    sched.strategy = STRATEGY_STATIC
    return run_budget_sweep(inst, sched, budgets or [sched.epoch_ws], jobs=jobs)


def solve_warm(inst, sched: SolveSchedule, budgets=None, jobs: int = 1):
    sched.strategy = STRATEGY_WARM
    return run_budget_sweep(inst, sched, budgets or [sched.epoch_ws], jobs=jobs)


def solve_sp(inst, sched: SolveSchedule, budgets=None, jobs: int = 1):
    sched.strategy = STRATEGY_SP
    return run_budget_sweep(inst, sched, budgets or [sched.epoch_ws], jobs=jobs)


def apr_at_budget(trace: SolveTrace, optima: dict[int, float], budget: int, problem: Problem):
    """Mean ApR over snapshots 2..T at one budget cut (snapshot 1 excluded)."""
    ratios = []
    for s in trace.snapshots:
        if s.index == 1:
            continue
        opt = optima[s.index]
        if opt == 0:
            raise ValueError("zero optimal value; ApR undefined")
        ratios.append(s.objective_at(budget) / opt)
    return float(np.mean(ratios))


def trace_to_json(traces: list[SolveTrace], sched: SolveSchedule) -> str:
    return json.dumps(
        {"schedule": asdict(sched), "repetitions": [t.to_dict() for t in traces]}
    )


def traces_from_json(text: str) -> tuple[SolveSchedule, list[SolveTrace]]:
    doc = json.loads(text)
    sched = SolveSchedule(**doc["schedule"])
    traces = []
    for rep_doc in doc["repetitions"]:
        snaps = [
            SnapshotTrace(
                index=s["index"],
                final_loss=s["final_loss"],
                cuts=[BudgetCut(**c) for c in s["cuts"]],
            )
            for s in rep_doc["snapshots"]
        ]
        traces.append(
            SolveTrace(
                strategy=rep_doc["strategy"],
                rep=rep_doc["rep"],
                seed=rep_doc["seed"],
                snapshots=snaps,
            )
        )
    return sched, traces


def trace_to_csv(traces, optima: dict[int, float] | None, problem: Problem) -> str:
    """Per-snapshot, per-budget CSV: snapshot,budget_epochs,seconds,objective,apr."""
    lines = ["rep,snapshot,budget_epochs,seconds,objective,apr"]
    for tr in traces:
        for s in tr.snapshots:
            for c in s.cuts:
                apr = ""
                if optima is not None and s.index in optima and optima[s.index] != 0:
                    apr = f"{c.objective / optima[s.index]:.6f}"
                lines.append(
                    f"{tr.rep},{s.index},{c.budget},{c.seconds:.4f},{c.objective:.6f},{apr}"
                )
    return "\n".join(lines) + "\n"
