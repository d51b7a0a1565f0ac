"""Minimal differentiable engine for the embedding -> conv -> ReLU -> conv -> sigmoid
pipeline: sparse message passing, manual reverse mode, Adam, shrink-and-perturb."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import GraphSnapshot

DEFAULT_EMB_DIM = 512
DEFAULT_HIDDEN_DIM = 256

GCN = "gcn"
SAGE = "sage"

SUBSET_EMB = "emb"
SUBSET_GNN = "gnn"
SUBSET_FULL = "full"


class StaleTapeError(RuntimeError):
    """Raised when backward() runs against a tape from before a parameter update."""


@dataclass
class GraphOperator:
    """Precomputed sparse message passing for one snapshot.

    GCN: symmetrically normalized adjacency with self-loops, D^-1/2 (A+I) D^-1/2.
    SAGE: row-normalized adjacency (mean over neighbors, zero row if isolated).
    """

    kind: str
    n: int
    mat: sp.csr_matrix


def build_operator(g: GraphSnapshot, kind: str) -> GraphOperator:
    n = g.node_count
    if kind == GCN:
        rows = [i for i, _ in g.edges] + [j for _, j in g.edges] + list(range(n))
        cols = [j for _, j in g.edges] + [i for i, _ in g.edges] + list(range(n))
        vals = [1.0] * (2 * len(g.edges)) + [1.0] * n
        a_hat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        deg = np.asarray(a_hat.sum(axis=1)).ravel()
        d_inv_sqrt = 1.0 / np.sqrt(deg)
        mat = sp.diags(d_inv_sqrt) @ a_hat @ sp.diags(d_inv_sqrt)
        return GraphOperator(kind=GCN, n=n, mat=mat.tocsr())
    if kind == SAGE:
        rows = [i for i, _ in g.edges] + [j for _, j in g.edges]
        cols = [j for _, j in g.edges] + [i for i, _ in g.edges]
        vals = [1.0] * (2 * len(g.edges))
        adj = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        deg = np.asarray(adj.sum(axis=1)).ravel()
        scale = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
        mat = sp.diags(scale) @ adj
        return GraphOperator(kind=SAGE, n=n, mat=mat.tocsr())
    raise ValueError(f"unknown layer kind {kind!r}")


@dataclass
class ModelState:
    """Learnable parameters plus Adam moment state for the fixed two-conv pipeline."""

    layer_kind: str
    n: int
    d_out: int
    params: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray]
    adam_v: dict[str, np.ndarray]
    adam_step_count: int = 0
    version: int = 0  # bumped on every parameter mutation; used for tape staleness

    def param_names(self) -> list[str]:
        return sorted(self.params)

    def subset_names(self, subset: str) -> list[str]:
        if subset == SUBSET_EMB:
            return ["emb"]
        if subset == SUBSET_GNN:
            return [k for k in self.param_names() if k != "emb"]
        if subset == SUBSET_FULL:
            return self.param_names()
        raise ValueError(f"unknown SP subset {subset!r}")


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(
    n: int,
    d_out: int,
    layer_kind: str = GCN,
    seed: int = 0,
    d_emb: int = DEFAULT_EMB_DIM,
    d_hidden: int = DEFAULT_HIDDEN_DIM,
) -> ModelState:
    """Embedding ~ N(0, 1) per entry; conv weights Glorot; biases zero.

    Unit-variance embeddings keep node representations well separated at
    initialization; tighter scales leave the sigmoid head near a constant
    output, which stalls multi-column (tour-matrix) optimization.
    """
    if min(n, d_out, d_emb, d_hidden) < 1:
        raise ValueError("all dimensions must be positive")
    rng = np.random.default_rng(seed)
    params = {"emb": rng.standard_normal(size=(n, d_emb))}
    if layer_kind == GCN:
        params["w1"] = _glorot(rng, d_emb, d_hidden)
        params["b1"] = np.zeros(d_hidden)
        params["w2"] = _glorot(rng, d_hidden, d_out)
        params["b2"] = np.zeros(d_out)
    elif layer_kind == SAGE:
        params["w1_self"] = _glorot(rng, d_emb, d_hidden)
        params["w1_neigh"] = _glorot(rng, d_emb, d_hidden)
        params["b1"] = np.zeros(d_hidden)
        params["w2_self"] = _glorot(rng, d_hidden, d_out)
        params["w2_neigh"] = _glorot(rng, d_hidden, d_out)
        params["b2"] = np.zeros(d_out)
    else:
        raise ValueError(f"unknown layer kind {layer_kind!r}")
    zeros = {k: np.zeros_like(v) for k, v in params.items()}
    return ModelState(
        layer_kind=layer_kind,
        n=n,
        d_out=d_out,
        params=params,
        adam_m=zeros,
        adam_v={k: np.zeros_like(v) for k, v in params.items()},
    )


@dataclass
class ForwardTape:
    model_version: int
    op: GraphOperator
    h0: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    agg0: np.ndarray | None  # SAGE: mean-aggregated embedding
    agg1: np.ndarray | None  # SAGE: mean-aggregated hidden
    out: np.ndarray  # n x d_out sigmoid output


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(model: ModelState, op: GraphOperator) -> tuple[np.ndarray, ForwardTape]:
    """Returns the flattened relaxed assignment (row-major) and the backward tape."""
    if op.n != model.n:
        raise ValueError(f"operator built for n={op.n}, model has n={model.n}")
    if op.kind != model.layer_kind:
        raise ValueError("operator/model layer kind mismatch")
    p = model.params
    h0 = p["emb"]
    if model.layer_kind == GCN:
        agg0 = agg1 = None
        z1 = op.mat @ (h0 @ p["w1"]) + p["b1"]
        h1 = np.maximum(z1, 0.0)
        z2 = op.mat @ (h1 @ p["w2"]) + p["b2"]
    else:
        agg0 = op.mat @ h0
        z1 = h0 @ p["w1_self"] + agg0 @ p["w1_neigh"] + p["b1"]
        h1 = np.maximum(z1, 0.0)
        agg1 = op.mat @ h1
        z2 = h1 @ p["w2_self"] + agg1 @ p["w2_neigh"] + p["b2"]
    out = _sigmoid(z2)
    tape = ForwardTape(
        model_version=model.version, op=op, h0=h0, z1=z1, h1=h1, agg0=agg0, agg1=agg1, out=out
    )
    return out.ravel(), tape


def backward(model: ModelState, tape: ForwardTape, grad_out: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the scalar loss wrt every parameter, given dL/d(output)."""
    if tape.model_version != model.version:
        raise StaleTapeError("tape predates a parameter update; rerun forward()")
    p = model.params
    g_out = np.asarray(grad_out, dtype=float).reshape(tape.out.shape)
    dz2 = g_out * tape.out * (1.0 - tape.out)
    grads: dict[str, np.ndarray] = {}
    if model.layer_kind == GCN:
        back2 = tape.op.mat.T @ dz2
        grads["w2"] = tape.h1.T @ back2
        grads["b2"] = dz2.sum(axis=0)
        dh1 = back2 @ p["w2"].T
        dz1 = dh1 * (tape.z1 > 0)
        back1 = tape.op.mat.T @ dz1
        grads["w1"] = tape.h0.T @ back1
        grads["b1"] = dz1.sum(axis=0)
        grads["emb"] = back1 @ p["w1"].T
    else:
        grads["w2_self"] = tape.h1.T @ dz2
        grads["w2_neigh"] = tape.agg1.T @ dz2
        grads["b2"] = dz2.sum(axis=0)
        dh1 = dz2 @ p["w2_self"].T + tape.op.mat.T @ dz2 @ p["w2_neigh"].T
        dz1 = dh1 * (tape.z1 > 0)
        grads["w1_self"] = tape.h0.T @ dz1
        grads["w1_neigh"] = tape.agg0.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        grads["emb"] = dz1 @ p["w1_self"].T + tape.op.mat.T @ dz1 @ p["w1_neigh"].T
    return grads


ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def adam_step(model: ModelState, grads: dict[str, np.ndarray], lr: float) -> None:
    """In-place bias-corrected Adam update."""
    if lr < 0:
        raise ValueError("learning rate must be nonnegative")
    for k in model.param_names():
        if not np.all(np.isfinite(grads[k])):
            raise ValueError(f"non-finite gradient for parameter {k!r}; update refused")
    model.adam_step_count += 1
    t = model.adam_step_count
    c1 = 1.0 - ADAM_BETA1**t
    c2 = 1.0 - ADAM_BETA2**t
    for k in model.param_names():
        g = grads[k]
        model.adam_m[k] = ADAM_BETA1 * model.adam_m[k] + (1 - ADAM_BETA1) * g
        model.adam_v[k] = ADAM_BETA2 * model.adam_v[k] + (1 - ADAM_BETA2) * g * g
        m_hat = model.adam_m[k] / c1
        v_hat = model.adam_v[k] / c2
        model.params[k] = model.params[k] - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    model.version += 1


def shrink_perturb(
    model: ModelState,
    lam_shrink: float,
    lam_perturb: float,
    subset: str = SUBSET_FULL,
    sigma: float = 1.0,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
    keep_adam_state: bool = False,
) -> None:
    """In-place theta <- lam_shrink * theta + lam_perturb * eps, eps ~ N(0, sigma^2).

    Only tensors in the subset are touched; their Adam moments are zeroed
    unless keep_adam_state. sigma=0 gives the exact-contraction test mode.
    """
    if not (0.0 < lam_shrink < 1.0):
        raise ValueError("lam_shrink must lie in (0, 1)")
    if not (0.0 < lam_perturb < 1.0):
        raise ValueError("lam_perturb must lie in (0, 1)")
    if rng is None:
        rng = np.random.default_rng(seed)
    for k in model.subset_names(subset):
        eps = rng.normal(0.0, sigma, size=model.params[k].shape) if sigma > 0 else 0.0
        model.params[k] = lam_shrink * model.params[k] + lam_perturb * eps
        if not keep_adam_state:
            model.adam_m[k] = np.zeros_like(model.params[k])
            model.adam_v[k] = np.zeros_like(model.params[k])
    model.version += 1


def check_finite(model: ModelState) -> None:
    for k, v in model.params.items():
        if not np.all(np.isfinite(v)):
            raise FloatingPointError(f"non-finite values in parameter {k!r}")


def save_checkpoint(model: ModelState, path) -> None:
    """npz dump of parameters + Adam state, enough to resume deterministically."""
    arrays = {f"param::{k}": v for k, v in model.params.items()}
    arrays.update({f"m::{k}": v for k, v in model.adam_m.items()})
    arrays.update({f"v::{k}": v for k, v in model.adam_v.items()})
    arrays["meta"] = np.array(
        [model.n, model.d_out, model.adam_step_count, model.version], dtype=np.int64
    )
    arrays["kind"] = np.array(model.layer_kind)
    np.savez(path, **arrays)


def load_checkpoint(path) -> ModelState:
    data = np.load(path, allow_pickle=False)
    n, d_out, step, version = (int(x) for x in data["meta"])
    kind = str(data["kind"])
    params = {k.split("::", 1)[1]: data[k] for k in data.files if k.startswith("param::")}
    adam_m = {k.split("::", 1)[1]: data[k] for k in data.files if k.startswith("m::")}
    adam_v = {k.split("::", 1)[1]: data[k] for k in data.files if k.startswith("v::")}
    return ModelState(
        layer_kind=kind,
        n=n,
        d_out=d_out,
        params=params,
        adam_m=adam_m,
        adam_v=adam_v,
        adam_step_count=step,
        version=version,
    )
