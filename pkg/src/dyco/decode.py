"""Relaxed output -> feasible discrete solutions: rounding, MIS repair, tour decoding."""

from __future__ import annotations

import math

import numpy as np

from .graph import GraphSnapshot

_LOG_CLAMP = 1e-12


def round_binary(x: np.ndarray, tau: float = 0.5) -> np.ndarray:
    """Threshold rounding; x_i >= tau maps to 1 (ties go to 1)."""
    if not (0.0 < tau < 1.0):
        raise ValueError("tau must lie in (0, 1)")
    return (np.asarray(x, dtype=float) >= tau).astype(np.int64)


def repair_mis(g: GraphSnapshot, s: np.ndarray) -> np.ndarray:
    """Greedy violation removal: repeatedly drop the selected node with the most
    violated incident edges (ties broken toward the lower node id). Removal only."""
    sel = np.asarray(s).astype(bool).copy()
    if sel.shape[0] != g.node_count:
        raise ValueError("selection length must equal node_count")
    while True:
        viol = np.zeros(g.node_count, dtype=np.int64)
        for i, j in g.edges:
            if sel[i] and sel[j]:
                viol[i] += 1
                viol[j] += 1
        worst = int(np.max(viol)) if viol.size else 0
        if worst == 0:
            break
        sel[int(np.argmax(viol))] = False  # argmax returns the lowest index on ties
    return sel.astype(np.int64)


def decode_tour_greedy(probs: np.ndarray) -> list[int]:
    """Step-by-step decode: at step v pick the unvisited node maximizing probs[i, v]
    (ties toward the lower node id)."""
    probs = np.asarray(probs, dtype=float)
    n = probs.shape[0]
    visited = np.zeros(n, dtype=bool)
    tour = []
    for v in range(n):
        col = np.where(visited, -np.inf, probs[:, v])
        i = int(np.argmax(col))
        tour.append(i)
        visited[i] = True
    return tour


def _beam_fixed_width(logp: np.ndarray, width: int) -> tuple[float, tuple[int, ...]]:
    """Standard beam of a fixed width over step-by-step node assignment."""
    n = logp.shape[0]
    beams: list[tuple[float, tuple[int, ...], frozenset]] = [(0.0, (), frozenset())]
    for v in range(n):
        candidates = []
        for score, tour, visited in beams:
            options = [(logp[i, v], i) for i in range(n) if i not in visited]
            options.sort(key=lambda t: (-t[0], t[1]))
            for lp, i in options[:width]:
                candidates.append((score + lp, tour + (i,), visited | {i}))
        candidates.sort(key=lambda c: (-c[0], c[1]))
        beams = candidates[:width]
    best = beams[0]
    return best[0], best[1]


def beam_score(probs: np.ndarray, tour) -> float:
    """Sum of clamped log probs of the decoded (node, step) entries."""
    probs = np.clip(np.asarray(probs, dtype=float), _LOG_CLAMP, 1.0 - _LOG_CLAMP)
    return float(sum(math.log(probs[i, v]) for v, i in enumerate(tour)))


def decode_tour_beam(probs: np.ndarray, width: int = 20) -> list[int]:
    """Beam decode returning the best-scoring tour over beam widths 1..width.

    Taking the envelope over widths makes the score monotone in `width` by
    construction and guarantees width=1 reduces exactly to the greedy decode.
    """
    if width < 1:
        raise ValueError("beam width must be >= 1")
    probs = np.asarray(probs, dtype=float)
    logp = np.log(np.clip(probs, _LOG_CLAMP, 1.0 - _LOG_CLAMP))
    best_score, best_tour = -np.inf, None
    for w in range(1, width + 1):
        score, tour = _beam_fixed_width(logp, w)
        if score > best_score or (score == best_score and tour < best_tour):
            best_score, best_tour = score, tour
    return list(best_tour)
