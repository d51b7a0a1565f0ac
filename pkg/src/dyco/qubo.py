"""Sparse symmetric QUBO builders plus relaxed loss/gradient evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph import GraphSnapshot, Problem

DEFAULT_MIS_PENALTY = 2.0


@dataclass(frozen=True)
class QuboInstance:
    """min x^T Q x + linear . x + offset over binary x; Q is sparse symmetric CSR.

    The linear term is kept explicit rather than folded into the diagonal via
    x_i^2 = x_i. Both forms agree on binary assignments, but they are different
    functions of a relaxed x in [0,1]^N: the folded form is stationary at x = 0
    (every constraint-penalty gradient vanishes there), which stalls
    gradient-based training, while the explicit form keeps each squared
    constraint (1 - sum x)^2 a true quadratic bowl.
    """

    problem: Problem
    q: sp.csr_matrix
    linear: np.ndarray = None
    offset: float = 0.0
    penalty_m: float = 0.0
    # problem data needed to recover the natural objective
    edges: tuple[tuple[int, int], ...] = ()
    dist: np.ndarray | None = None
    n_nodes: int = 0

    def __post_init__(self):
        if self.linear is None:
            object.__setattr__(self, "linear", np.zeros(self.q.shape[0]))

    @property
    def dim(self) -> int:
        return self.q.shape[0]


def _sym_csr(dim: int, rows, cols, vals) -> sp.csr_matrix:
    m = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    m.sum_duplicates()
    return m


def build_maxcut_qubo(g: GraphSnapshot) -> QuboInstance:
    """Objective = sum over edges of (2 x_i x_j - x_i - x_j) = -cut size on binaries."""
    rows, cols, vals = [], [], []
    linear = np.zeros(g.node_count)
    for i, j in g.edges:
        rows += [i, j]
        cols += [j, i]
        vals += [1.0, 1.0]
        linear[i] -= 1.0
        linear[j] -= 1.0
    q = _sym_csr(g.node_count, rows, cols, vals)
    return QuboInstance(
        problem=Problem.MAXCUT, q=q, linear=linear, edges=g.edges, n_nodes=g.node_count
    )


def build_mis_qubo(g: GraphSnapshot, m: float = DEFAULT_MIS_PENALTY) -> QuboInstance:
    """Objective = -sum x_i + m * sum over edges of x_i x_j on binaries."""
    if m <= 0:
        raise ValueError("MIS penalty m must be positive")
    rows, cols, vals = [], [], []
    for i, j in g.edges:
        rows += [i, j]
        cols += [j, i]
        vals += [m / 2.0, m / 2.0]
    q = _sym_csr(g.node_count, rows, cols, vals)
    return QuboInstance(
        problem=Problem.MIS,
        q=q,
        linear=np.full(g.node_count, -1.0),
        penalty_m=m,
        edges=g.edges,
        n_nodes=g.node_count,
    )


def default_tsp_penalty(dist: np.ndarray) -> float:
    return 2.0 * float(np.max(dist))


def build_tsp_qubo(dist: np.ndarray, m: float | None = None) -> QuboInstance:
    """Row-major flattened X (index(i,v) = i*n+v); returns Q, linear term, offset 2*m*n.

    x^T Q x + linear . x + offset equals, for any relaxed X,
        sum_{i!=j} w_ij sum_v X_iv X_j(v+1 mod n)
        + m sum_i (1 - sum_v X_iv)^2 + m sum_v (1 - sum_i X_iv)^2,
    i.e. the squared constraints are expanded without the binary x^2 = x
    substitution, so the penalty stays a convex bowl over the relaxation.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if dist.shape != (n, n) or not np.allclose(dist, dist.T):
        raise ValueError("distance matrix must be square and symmetric")
    if np.any(np.diag(dist) != 0):
        raise ValueError("distance matrix must have zero diagonal")
    if np.any(dist < 0):
        raise ValueError("distances must be nonnegative")
    if m is None:
        m = default_tsp_penalty(dist)
    if m <= 0:
        raise ValueError("TSP penalty m must be positive")

    def idx(i, v):
        return i * n + v

    rows, cols, vals = [], [], []
    # tour-length term: pairs of consecutive steps, both traversal directions
    for i in range(n):
        for j in range(n):
            if i == j or dist[i, j] == 0:
                continue
            for v in range(n):
                a, b = idx(i, v), idx(j, (v + 1) % n)
                rows += [a, b]
                cols += [b, a]
                vals += [dist[i, j] / 2.0, dist[i, j] / 2.0]
    # row constraints: each node visited exactly once, m*(1 - sum_v X_iv)^2
    for i in range(n):
        for v in range(n):
            rows.append(idx(i, v))
            cols.append(idx(i, v))
            vals.append(m)
            for u in range(v + 1, n):
                a, b = idx(i, v), idx(i, u)
                rows += [a, b]
                cols += [b, a]
                vals += [m, m]
    # column constraints: each step hosts exactly one node, m*(1 - sum_i X_iv)^2
    for v in range(n):
        for i in range(n):
            rows.append(idx(i, v))
            cols.append(idx(i, v))
            vals.append(m)
            for k in range(i + 1, n):
                a, b = idx(i, v), idx(k, v)
                rows += [a, b]
                cols += [b, a]
                vals += [m, m]
    q = _sym_csr(n * n, rows, cols, vals)
    linear = np.full(n * n, -4.0 * m)
    return QuboInstance(
        problem=Problem.TSP,
        q=q,
        linear=linear,
        offset=2.0 * m * n,
        penalty_m=m,
        dist=dist,
        n_nodes=n,
    )


def qubo_loss(q: QuboInstance, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != q.dim:
        raise ValueError(f"assignment dim {x.shape[0]} != QUBO dim {q.dim}")
    return float(x @ (q.q @ x)) + float(q.linear @ x) + q.offset


def qubo_grad(q: QuboInstance, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != q.dim:
        raise ValueError(f"assignment dim {x.shape[0]} != QUBO dim {q.dim}")
    return 2.0 * (q.q @ x) + q.linear


def cut_size(edges, x) -> float:
    x = np.asarray(x).ravel()
    return float(sum(1 for i, j in edges if x[i] != x[j]))


def tour_length(dist: np.ndarray, perm: Sequence[int]) -> float:
    n = len(perm)
    return float(sum(dist[perm[v], perm[(v + 1) % n]] for v in range(n)))


def natural_objective(q: QuboInstance, solution) -> float:
    """Natural units: cut size (MaxCut), set size (MIS, violation-free), tour length (TSP)."""
    if q.problem is Problem.MAXCUT:
        return cut_size(q.edges, solution)
    if q.problem is Problem.MIS:
        x = np.asarray(solution).ravel()
        violated = [(i, j) for i, j in q.edges if x[i] and x[j]]
        if violated:
            raise ValueError(f"MIS selection violates {len(violated)} edges; repair first")
        return float(np.sum(x != 0))
    # TSP: solution is a node permutation (visit order)
    perm = list(solution)
    if sorted(perm) != list(range(q.n_nodes)):
        raise ValueError("TSP solution must be a permutation of all nodes")
    return tour_length(q.dist, perm)


def build_qubo(problem: Problem, g: GraphSnapshot, dist: np.ndarray | None = None,
               m: float | None = None) -> QuboInstance:
    if problem is Problem.MAXCUT:
        return build_maxcut_qubo(g)
    if problem is Problem.MIS:
        return build_mis_qubo(g, m if m is not None else DEFAULT_MIS_PENALTY)
    return build_tsp_qubo(dist, m)


def export_coordinate(q: QuboInstance) -> str:
    """Coordinate-format text dump: `N nnz` header then `i j value` lines.

    The linear term is folded into the diagonal (valid for binary x), which is
    the convention external QUBO tools expect.
    """
    folded = (q.q + sp.diags(q.linear)).tocsr()
    folded.eliminate_zeros()
    coo = folded.tocoo()
    lines = [f"{q.dim} {coo.nnz}"]
    order = np.lexsort((coo.col, coo.row))
    for k in order:
        lines.append(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.12g}")
    return "\n".join(lines) + "\n"
