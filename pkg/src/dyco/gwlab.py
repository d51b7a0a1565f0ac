"""Goemans-Williamson pipeline: factorized SDP ascent, hyperplane rounding,
feasible-set projection, and perturbation experiments around a fixed solution."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .graph import GraphSnapshot

PSD_TOL = 1e-8
DIAG_TOL = 1e-8


@dataclass
class SdpPoint:
    """Symmetric X with X >= 0 (PSD) and unit diagonal, within tolerance."""

    matrix: np.ndarray
    objective: float = float("nan")
    converged: bool = True

    def check(self, psd_tol: float = PSD_TOL, diag_tol: float = DIAG_TOL) -> None:
        x = self.matrix
        if not np.allclose(x, x.T, atol=1e-10):
            raise ValueError("X must be symmetric")
        if np.min(np.linalg.eigvalsh((x + x.T) / 2)) < -psd_tol:
            raise ValueError("X is not PSD within tolerance")
        if np.max(np.abs(np.diag(x) - 1.0)) > diag_tol:
            raise ValueError("diag(X) != 1 within tolerance")


def laplacian(g: GraphSnapshot) -> np.ndarray:
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def sdp_objective(g: GraphSnapshot, x: np.ndarray) -> float:
    return float(np.trace(laplacian(g) @ x)) / 4.0


def _row_normalize(v: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return v / norms


def embed(x: np.ndarray) -> np.ndarray:
    """Unit-row embedding Y with Y Y^T ~= X (negative eigenvalues clamped)."""
    vals, vecs = np.linalg.eigh((x + x.T) / 2)
    vals = np.clip(vals, 0.0, None)
    y = vecs * np.sqrt(vals)
    return _row_normalize(y)


def solve_gw_sdp(
    g: GraphSnapshot,
    iters: int = 20000,
    tol: float = 1e-12,
    seed: int = 0,
    v_init: np.ndarray | None = None,
) -> SdpPoint:
    """Maximize (1/4) Tr(L X) over {X PSD, diag=1} via full-rank factorization
    X = V V^T with projected gradient ascent (row renormalization each step)."""
    if not g.edges:
        raise ValueError("graph needs at least one edge")
    n = g.node_count
    lap = laplacian(g)
    if v_init is not None:
        v = _row_normalize(np.array(v_init, dtype=float))
    else:
        rng = np.random.default_rng(seed)
        v = _row_normalize(rng.standard_normal((n, n)))
    lam_max = float(np.max(np.linalg.eigvalsh(lap)))
    step = 1.0 / max(lam_max, 1e-12)
    obj = np.trace(lap @ (v @ v.T)) / 4.0
    converged = False
    for _ in range(iters):
        v = _row_normalize(v + step * (lap @ v) / 2.0)
        new_obj = np.trace(lap @ (v @ v.T)) / 4.0
        if abs(new_obj - obj) < tol:
            obj = new_obj
            converged = True
            break
        obj = new_obj
    x = v @ v.T
    np.fill_diagonal(x, 1.0)
    return SdpPoint(matrix=x, objective=float(obj), converged=converged)


def gw_round(
    x: SdpPoint | np.ndarray, trials: int, seed: int = 0, g: GraphSnapshot | None = None,
    edges=None,
) -> tuple[int, Counter]:
    """Random-hyperplane rounding: sample r ~ N(0, I), sign(Y r) per trial.

    Returns the best cut found and the empirical cut-value distribution.
    """
    mat = x.matrix if isinstance(x, SdpPoint) else np.asarray(x, dtype=float)
    if edges is None:
        if g is None:
            raise ValueError("supply the graph (or its edge list) to evaluate cuts")
        edges = g.edges
    y = embed(mat)
    n = mat.shape[0]
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((n, trials))
    signs = np.where(y @ r >= 0, 1, -1)
    cuts = np.zeros(trials, dtype=np.int64)
    for i, j in edges:
        cuts += signs[i] != signs[j]
    dist = Counter(int(c) for c in cuts)
    return int(np.max(cuts)), dist


def project_feasible(m: np.ndarray, max_sweeps: int = 10000, tol: float = 1e-9) -> SdpPoint:
    """Dykstra alternating projections between the PSD cone and {diag(X)=1}."""
    x = np.array((m + m.T) / 2.0, dtype=float)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_sweeps):
        # PSD projection with Dykstra correction
        vals, vecs = np.linalg.eigh(x + p)
        y = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
        p = x + p - y
        # unit-diagonal projection with Dykstra correction
        z = y + q
        x_new = z.copy()
        np.fill_diagonal(x_new, 1.0)
        q = z - x_new
        if np.linalg.norm(x_new - x, "fro") < tol:
            x = x_new
            break
        x = x_new
    x = (x + x.T) / 2.0
    # final clean-up: clamp residual negative eigenvalues, repin the diagonal
    vals, vecs = np.linalg.eigh(x)
    x = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
    np.fill_diagonal(x, 1.0)
    return SdpPoint(matrix=x)


def sample_goe(n: int, seed: int | None = None, rng: np.random.Generator | None = None):
    """Z = (A + A^T)/2 with A_ij i.i.d. standard normal."""
    if rng is None:
        rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2.0


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class LambdaRow:
    lam: float
    trials: int
    successes: int

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials)


def _count_optimal_roundings(x_mat, g, c_star, rounding_trials, seed) -> int:
    _, dist = gw_round(x_mat, rounding_trials, seed=seed, g=g)
    return dist.get(int(c_star), 0)


def perturbation_experiment(
    g: GraphSnapshot,
    x0: SdpPoint,
    lambda_grid,
    trials_per_lambda: int,
    rounding_trials: int,
    c_star: int,
    seed: int = 0,
) -> list[LambdaRow]:
    """Estimate P(rounding Proj(X0 + lam*Z) hits the optimal cut) per lambda.

    The lam=0 row rounds X0 alone (no projection, no noise draws).
    """
    rows = []
    for li, lam in enumerate(lambda_grid):
        if lam == 0:
            total = trials_per_lambda * rounding_trials
            succ = _count_optimal_roundings(x0.matrix, g, c_star, total, seed + 7 * li)
            rows.append(LambdaRow(lam=0.0, trials=total, successes=succ))
            continue
        rng = np.random.default_rng(seed + 1000 * (li + 1))
        succ = 0
        for k in range(trials_per_lambda):
            z = sample_goe(g.node_count, rng=rng)
            x_lam = project_feasible(x0.matrix + lam * z)
            succ += _count_optimal_roundings(
                x_lam.matrix, g, c_star, rounding_trials, seed + 1000 * (li + 1) + k
            )
        rows.append(
            LambdaRow(lam=float(lam), trials=trials_per_lambda * rounding_trials, successes=succ)
        )
    return rows


def warmstart_sdp_experiment(
    g: GraphSnapshot,
    x_init: SdpPoint,
    lambda_grid,
    trials_per_lambda: int,
    rounding_trials: int,
    c_star: int,
    seed: int = 0,
    sdp_iters: int = 2000,
) -> list[LambdaRow]:
    """Like perturbation_experiment, but re-run the factorized SDP ascent from
    the perturbed initialization before rounding (noise at initialization)."""
    rows = []
    for li, lam in enumerate(lambda_grid):
        rng = np.random.default_rng(seed + 2000 * (li + 1))
        succ = 0
        draws = 1 if lam == 0 else trials_per_lambda
        for k in range(draws):
            if lam == 0:
                x_start = SdpPoint(matrix=x_init.matrix.copy())
            else:
                z = sample_goe(g.node_count, rng=rng)
                x_start = project_feasible(x_init.matrix + lam * z)
            sol = solve_gw_sdp(g, iters=sdp_iters, v_init=embed_full(x_start.matrix))
            succ += _count_optimal_roundings(
                sol.matrix, g, c_star, rounding_trials, seed + 2000 * (li + 1) + k
            )
        rows.append(LambdaRow(lam=float(lam), trials=draws * rounding_trials, successes=succ))
    return rows


def embed_full(x: np.ndarray) -> np.ndarray:
    """Full-rank factor V (rows renormalized) for warm-starting the SDP ascent."""
    vals, vecs = np.linalg.eigh((x + x.T) / 2)
    v = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return _row_normalize(v)


def rows_to_csv(rows: list[LambdaRow]) -> str:
    lines = ["lambda,trials,successes,p_hat,wilson_lo,wilson_hi"]
    for r in rows:
        lo, hi = r.wilson
        lines.append(f"{r.lam},{r.trials},{r.successes},{r.p_hat:.6f},{lo:.6f},{hi:.6f}")
    return "\n".join(lines) + "\n"
