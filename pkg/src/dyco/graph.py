"""Dynamic graph construction: temporal edge lists, TSPLIB input, snapshot sequences."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, TextIO

import numpy as np


class Problem(str, Enum):
    MAXCUT = "maxcut"
    MIS = "mis"
    TSP = "tsp"


class Metric(str, Enum):
    EUC_2D = "EUC_2D"
    GEO = "GEO"


class ParseError(ValueError):
    pass


class UnsupportedFormatError(ValueError):
    pass


# -- domain types ------------------------------------------------------------


@dataclass(frozen=True)
class GraphSnapshot:
    """One timestamped undirected graph: n nodes, edge list, per-edge weights."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        if len(self.weights) != len(self.edges):
            raise ValueError("weights length must equal edges length")
        seen = set()
        for (i, j), w in zip(self.edges, self.weights):
            if i == j:
                raise ValueError(f"self-loop ({i},{j}) not allowed")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise ValueError(f"edge ({i},{j}) endpoint out of range")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate undirected edge {key}")
            seen.add(key)
            if w < 0:
                raise ValueError("edge weights must be nonnegative")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        """Dense weighted adjacency matrix."""
        a = np.zeros((self.node_count, self.node_count))
        for (i, j), w in zip(self.edges, self.weights):
            a[i, j] = w
            a[j, i] = w
        return a


@dataclass(frozen=True)
class DynamicInstance:
    """Ordered snapshot sequence plus the problem it encodes."""

    problem: Problem
    snapshots: tuple[GraphSnapshot, ...]
    # TSP only: per-snapshot n x n distance matrices (same node/edge structure).
    distances: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        if len(self.snapshots) < 1:
            raise ValueError("need at least one snapshot")
        if self.problem is Problem.TSP:
            n0 = self.snapshots[0].node_count
            e0 = {tuple(sorted(e)) for e in self.snapshots[0].edges}
            for s in self.snapshots:
                if s.node_count != n0:
                    raise ValueError("TSP snapshots must share the node set")
                if {tuple(sorted(e)) for e in s.edges} != e0:
                    raise ValueError("TSP snapshots must share the edge set")
            if self.distances is None or len(self.distances) != len(self.snapshots):
                raise ValueError("TSP instance needs one distance matrix per snapshot")

    @property
    def T(self) -> int:
        return len(self.snapshots)


@dataclass(frozen=True)
class TemporalEdgeList:
    """Chronologically sorted undirected edge events (u, v, weight, timestamp)."""

    events: tuple[tuple[int, int, float, float], ...]

    def __post_init__(self):
        ts = [e[3] for e in self.events]
        if any(a > b for a, b in zip(ts, ts[1:])):
            raise ValueError("events must be sorted by timestamp")

    @property
    def node_count(self) -> int:
        nodes = {u for u, _, _, _ in self.events} | {v for _, v, _, _ in self.events}
        return len(nodes)


@dataclass(frozen=True)
class TspNodeSet:
    coords: tuple[tuple[float, float], ...]
    metric: Metric

    def __post_init__(self):
        if len(self.coords) < 3:
            raise ValueError("need at least 3 nodes")


# -- distance functions (TSPLIB conventions) ---------------------------------

_GEO_RADIUS = 6378.388


def _geo_radians(coord: float) -> float:
    deg = int(coord)
    minutes = coord - deg
    return math.pi * (deg + 5.0 * minutes / 3.0) / 180.0


def geo_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """TSPLIB GEO distance (integer kilometers on the idealized sphere)."""
    lat_i, lon_i = _geo_radians(a[0]), _geo_radians(a[1])
    lat_j, lon_j = _geo_radians(b[0]), _geo_radians(b[1])
    q1 = math.cos(lon_i - lon_j)
    q2 = math.cos(lat_i - lat_j)
    q3 = math.cos(lat_i + lat_j)
    arg = 0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)
    arg = max(-1.0, min(1.0, arg))
    return float(int(_GEO_RADIUS * math.acos(arg) + 1.0))


def euc_2d_distance(a, b, rounded: bool = True) -> float:
    d = math.hypot(a[0] - b[0], a[1] - b[1])
    return float(int(d + 0.5)) if rounded else d


def distance_matrix(coords, metric: Metric, rounded: bool = True) -> np.ndarray:
    n = len(coords)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if metric is Metric.GEO:
                w = geo_distance(coords[i], coords[j])
            else:
                w = euc_2d_distance(coords[i], coords[j], rounded=rounded)
            d[i, j] = d[j, i] = w
    return d


# -- ingestion ----------------------------------------------------------------


def ingest_temporal_edges(raw: str | TextIO) -> TemporalEdgeList:
    """Parse a KONECT-style edge list: `u v [weight] [timestamp]` per line.

    Lines starting with % or # are comments. A missing timestamp defaults to
    the line order. Self-loops are dropped; later duplicates of an undirected
    pair are dropped; node ids are remapped to a dense 0-based range in order
    of first appearance (after sorting and deduplication).
    """
    if hasattr(raw, "read"):
        raw = raw.read()
    events = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("%", "#")):
            continue
        tokens = stripped.split()
        if len(tokens) < 2 or len(tokens) > 4:
            raise ParseError(f"line {lineno}: expected 2-4 columns, got {len(tokens)}")
        try:
            u = int(float(tokens[0]))
            v = int(float(tokens[1]))
            w = float(tokens[2]) if len(tokens) >= 3 else 1.0
            ts = float(tokens[3]) if len(tokens) == 4 else float(lineno)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: non-numeric token ({exc})") from None
        events.append((u, v, w, ts))
    if not events:
        raise ParseError("empty input: no edge events found")

    events.sort(key=lambda e: e[3])  # stable: ties keep line order
    seen_pairs = set()
    remap: dict[int, int] = {}
    out = []
    for u, v, w, ts in events:
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in seen_pairs:
            continue
        seen_pairs.add(key)
        for node in (u, v):
            if node not in remap:
                remap[node] = len(remap)
        out.append((remap[u], remap[v], w, ts))
    if not out:
        raise ParseError("no usable events after removing self-loops/duplicates")
    return TemporalEdgeList(events=tuple(out))


def parse_tsplib(raw: str | TextIO) -> TspNodeSet:
    """Parse the TSPLIB subset: NAME/DIMENSION/EDGE_WEIGHT_TYPE/NODE_COORD_SECTION."""
    if hasattr(raw, "read"):
        raw = raw.read()
    metric = None
    coords = []
    in_coords = False
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped == "EOF":
            in_coords = False
            continue
        if in_coords:
            tokens = stripped.split()
            if len(tokens) < 3:
                raise ParseError(f"line {lineno}: bad coordinate line")
            try:
                coords.append((float(tokens[1]), float(tokens[2])))
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric coordinate") from None
            continue
        if ":" in stripped:
            key, _, value = stripped.partition(":")
            key, value = key.strip(), value.strip()
            if key == "EDGE_WEIGHT_TYPE":
                try:
                    metric = Metric(value)
                except ValueError:
                    raise UnsupportedFormatError(
                        f"unsupported EDGE_WEIGHT_TYPE {value!r} (supported: EUC_2D, GEO)"
                    ) from None
        elif stripped.startswith("NODE_COORD_SECTION"):
            in_coords = True
    if metric is None:
        raise ParseError("missing EDGE_WEIGHT_TYPE header")
    if not coords:
        raise ParseError("missing NODE_COORD_SECTION")
    return TspNodeSet(coords=tuple(coords), metric=metric)


# -- snapshot construction -----------------------------------------------------


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _growth_sizes(total: int, T: int, fraction: float) -> list[int]:
    sizes = [min(total, _round_half_up(t * fraction * total)) for t in range(1, T + 1)]
    sizes[-1] = min(total, _round_half_up(T * fraction * total))
    return sizes


def build_growth_snapshots(
    edges: TemporalEdgeList, T: int, fraction_per_step: float, problem: Problem = Problem.MAXCUT
) -> DynamicInstance:
    """Growing DTDG: snapshot t holds the chronologically first round(t*f*|E|) edges."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if not (0.0 < fraction_per_step <= 1.0):
        raise ValueError("fraction_per_step must lie in (0, 1]")
    total = len(edges.events)
    if fraction_per_step * T * total < 1:
        raise ValueError("fraction_per_step * T too small: first snapshot would be empty")
    n = edges.node_count
    snaps = []
    for size in _growth_sizes(total, T, fraction_per_step):
        evs = edges.events[:size]
        snaps.append(
            GraphSnapshot(
                node_count=n,
                edges=tuple((u, v) for u, v, _, _ in evs),
                weights=tuple(w for _, _, w, _ in evs),
            )
        )
    return DynamicInstance(problem=problem, snapshots=tuple(snaps))


def build_deletion_snapshots(
    edges: TemporalEdgeList, T: int, fraction_per_step: float, problem: Problem = Problem.MIS
) -> DynamicInstance:
    """Shrinking DTDG: the exact reverse of the growth sequence."""
    grown = build_growth_snapshots(edges, T, fraction_per_step, problem=problem)
    return DynamicInstance(problem=problem, snapshots=tuple(reversed(grown.snapshots)))


def build_moving_node_instance(
    base: TspNodeSet,
    start: tuple[float, float],
    end: tuple[float, float],
    T: int,
    rounded: bool = True,
) -> DynamicInstance:
    """TSP DTDG: base nodes plus one node moving linearly from start to end.

    The moving node is appended as the last index. Snapshot t places it at
    start + (t-1)/(T-1) * (end-start); only distances involving it change.
    """
    if T < 2:
        raise ValueError("T must be >= 2 for a moving-node instance")
    xs = [c[0] for c in base.coords]
    ys = [c[1] for c in base.coords]
    for name, (x, y) in (("start", start), ("end", end)):
        if not (min(xs) <= x <= max(xs) and min(ys) <= y <= max(ys)):
            warnings.warn(f"{name} position {x, y} lies outside the base bounding box")
    n = len(base.coords) + 1
    edges = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    snaps = []
    dists = []
    for t in range(T):
        alpha = t / (T - 1)
        pos = (start[0] + alpha * (end[0] - start[0]), start[1] + alpha * (end[1] - start[1]))
        coords = list(base.coords) + [pos]
        d = distance_matrix(coords, base.metric, rounded=rounded)
        dists.append(d)
        snaps.append(
            GraphSnapshot(
                node_count=n,
                edges=edges,
                weights=tuple(float(d[i, j]) for i, j in edges),
            )
        )
    return DynamicInstance(problem=Problem.TSP, snapshots=tuple(snaps), distances=tuple(dists))


# -- serialization --------------------------------------------------------------


def instance_to_json(inst: DynamicInstance) -> str:
    doc = {
        "problem": inst.problem.value,
        "T": inst.T,
        "snapshots": [
            {
                "n": s.node_count,
                "edges": [[i, j, w] for (i, j), w in zip(s.edges, s.weights)],
            }
            for s in inst.snapshots
        ],
    }
    return json.dumps(doc)


def instance_from_json(text: str) -> DynamicInstance:
    doc = json.loads(text)
    problem = Problem(doc["problem"])
    snaps = []
    for s in doc["snapshots"]:
        edges = tuple((int(e[0]), int(e[1])) for e in s["edges"])
        weights = tuple(float(e[2]) for e in s["edges"])
        snaps.append(GraphSnapshot(node_count=int(s["n"]), edges=edges, weights=weights))
    distances = None
    if problem is Problem.TSP:
        distances = tuple(s.adjacency() for s in snaps)
    return DynamicInstance(problem=problem, snapshots=tuple(snaps), distances=distances)
