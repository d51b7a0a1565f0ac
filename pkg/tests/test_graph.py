import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyco.graph import (
    DynamicInstance,
    GraphSnapshot,
    Metric,
    ParseError,
    Problem,
    TspNodeSet,
    UnsupportedFormatError,
    build_deletion_snapshots,
    build_growth_snapshots,
    build_moving_node_instance,
    distance_matrix,
    euc_2d_distance,
    geo_distance,
    ingest_temporal_edges,
    instance_from_json,
    instance_to_json,
    parse_tsplib,
)


class TestIngest:
    def test_dedup_and_self_loop(self):
        tel = ingest_temporal_edges("1 2 1 100\n2 1 1 50\n3 3 1 10")
        assert len(tel.events) == 1
        u, v, w, ts = tel.events[0]
        assert (u, v) == (0, 1)  # original (2,1) at t=50, remapped by first appearance
        assert ts == 50

    def test_comment_skip_and_remap(self):
        tel = ingest_temporal_edges("% comment\n5 7 1 1")
        assert tel.events == ((0, 1, 1.0, 1.0),)

    def test_six_events_with_noise(self):
        raw = "\n".join(
            ["1 2 1 1", "2 3 1 2", "3 3 1 3", "2 1 1 4", "3 1 1 5", "1 3 1 6"]
        )
        tel = ingest_temporal_edges(raw)
        assert len(tel.events) == 3

    def test_missing_timestamp_uses_line_order(self):
        tel = ingest_temporal_edges("4 5\n1 2\n")
        assert [e[3] for e in tel.events] == [1.0, 2.0]

    def test_malformed_line_reports_lineno(self):
        with pytest.raises(ParseError, match="line 2"):
            ingest_temporal_edges("1 2\n1 x\n")

    def test_empty_input(self):
        with pytest.raises(ParseError):
            ingest_temporal_edges("% nothing\n")

    def test_file_like(self):
        tel = ingest_temporal_edges(io.StringIO("0 1 1 0\n1 2 1 1"))
        assert len(tel.events) == 2

    def test_idempotent_reserialization(self):
        tel = ingest_temporal_edges("3 4 1 7\n4 5 2 9\n5 3 1 11")
        text = "\n".join(f"{u} {v} {w} {ts}" for u, v, w, ts in tel.events)
        assert ingest_temporal_edges(text).events == tel.events


class TestGrowthSnapshots:
    def _tel(self, n_edges):
        lines = []
        k = 0
        i = 0
        while k < n_edges:
            for j in range(i + 1, n_edges + 2):
                lines.append(f"{i} {j} 1 {k}")
                k += 1
                if k == n_edges:
                    break
            i += 1
        return ingest_temporal_edges("\n".join(lines))

    def test_100_edges_linear(self):
        inst = build_growth_snapshots(self._tel(100), T=10, fraction_per_step=0.10)
        assert [s.edge_count for s in inst.snapshots] == [10 * t for t in range(1, 11)]

    def test_single_snapshot_identity(self):
        inst = build_growth_snapshots(self._tel(100), T=1, fraction_per_step=1.0)
        assert inst.T == 1 and inst.snapshots[0].edge_count == 100

    def test_49_edges_round_half_up(self):
        inst = build_growth_snapshots(self._tel(49), T=10, fraction_per_step=0.10)
        expected = [math.floor(4.9 * t + 0.5) for t in range(1, 10)] + [49]
        assert [s.edge_count for s in inst.snapshots] == expected

    def test_nested_edge_sets(self):
        inst = build_growth_snapshots(self._tel(37), T=5, fraction_per_step=0.2)
        prev = set()
        for s in inst.snapshots:
            cur = set(s.edges)
            assert prev <= cur
            prev = cur

    def test_constant_node_set(self):
        inst = build_growth_snapshots(self._tel(30), T=3, fraction_per_step=1 / 3)
        counts = {s.node_count for s in inst.snapshots}
        assert len(counts) == 1

    def test_bad_T(self):
        with pytest.raises(ValueError):
            build_growth_snapshots(self._tel(10), T=0, fraction_per_step=0.5)

    def test_deletion_is_reversal(self):
        tel = self._tel(30)
        grown = build_growth_snapshots(tel, T=3, fraction_per_step=1 / 3)
        shrunk = build_deletion_snapshots(tel, T=3, fraction_per_step=1 / 3)
        assert [s.edge_count for s in shrunk.snapshots] == [30, 20, 10]
        assert list(shrunk.snapshots) == list(reversed(grown.snapshots))

    @given(n_edges=st.integers(5, 60), T=st.integers(1, 8))
    @settings(max_examples=25, deadline=None)
    def test_growth_monotone_property(self, n_edges, T):
        inst = build_growth_snapshots(self._tel(n_edges), T=T, fraction_per_step=1.0 / T)
        sizes = [s.edge_count for s in inst.snapshots]
        assert sizes == sorted(sizes)
        assert sizes[-1] == n_edges
        prev = set()
        for s in inst.snapshots:
            assert prev <= set(s.edges)
            prev = set(s.edges)


class TestMovingNode:
    def _square(self):
        return TspNodeSet(coords=((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)),
                          metric=Metric.EUC_2D)

    def test_snapshot_count_and_size(self, burma14_text):
        base = parse_tsplib(burma14_text)
        mid = (20.0, 95.0)
        inst = build_moving_node_instance(base, (15.0, 93.0), mid, T=5)
        assert inst.T == 5
        assert all(s.node_count == 15 for s in inst.snapshots)

    def test_degenerate_trajectory(self):
        inst = build_moving_node_instance(self._square(), (0.5, 0.5), (0.5, 0.5), T=3)
        assert inst.snapshots[0] == inst.snapshots[1] == inst.snapshots[2]

    def test_linear_interpolation(self):
        inst = build_moving_node_instance(
            self._square(), (0.0, 0.0), (1.0, 1.0), T=3, rounded=False
        )
        # moving node is the last index; recover its position from distances to (0,0)
        d0 = [inst.distances[t][4, 0] for t in range(3)]
        assert d0 == pytest.approx([0.0, math.sqrt(0.5), math.sqrt(2.0)])

    def test_only_moving_row_changes(self):
        inst = build_moving_node_instance(
            self._square(), (0.1, 0.1), (0.9, 0.9), T=4, rounded=False
        )
        n = 5
        for t in range(3):
            diff = inst.distances[t] != inst.distances[t + 1]
            changed = np.argwhere(diff)
            assert all(n - 1 in pair for pair in changed)

    def test_T_too_small(self):
        with pytest.raises(ValueError):
            build_moving_node_instance(self._square(), (0, 0), (1, 1), T=1)

    def test_outside_bbox_warns(self):
        with pytest.warns(UserWarning):
            build_moving_node_instance(self._square(), (-5.0, 0.0), (1.0, 1.0), T=2)


class TestTsplib:
    def test_burma14(self, burma14_text):
        nodes = parse_tsplib(burma14_text)
        assert len(nodes.coords) == 14
        assert nodes.metric is Metric.GEO

    def test_minimal_euc(self):
        raw = (
            "NAME: tiny\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\n"
            "NODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n"
        )
        nodes = parse_tsplib(raw)
        assert len(nodes.coords) == 3
        assert nodes.metric is Metric.EUC_2D

    def test_unsupported_metric(self):
        raw = "EDGE_WEIGHT_TYPE: ATT\nNODE_COORD_SECTION\n1 0 0\n"
        with pytest.raises(UnsupportedFormatError):
            parse_tsplib(raw)

    def test_missing_coords(self):
        with pytest.raises(ParseError):
            parse_tsplib("EDGE_WEIGHT_TYPE: EUC_2D\n")

    def test_euc_rounding_convention(self):
        assert euc_2d_distance((0, 0), (3, 4)) == 5
        assert euc_2d_distance((0, 0), (1, 1)) == 1  # round(1.414) = 1
        assert euc_2d_distance((0, 0), (1, 1), rounded=False) == pytest.approx(math.sqrt(2))

    def test_geo_distance_is_integral_km(self):
        d = geo_distance((16.47, 96.10), (16.47, 94.44))
        assert d == int(d) and d > 0


class TestSnapshotInvariants:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            GraphSnapshot(2, ((0, 0),), (1.0,))

    def test_rejects_duplicate_undirected(self):
        with pytest.raises(ValueError):
            GraphSnapshot(2, ((0, 1), (1, 0)), (1.0, 1.0))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GraphSnapshot(2, ((0, 5),), (1.0,))

    def test_json_roundtrip(self, triangle):
        inst = DynamicInstance(Problem.MAXCUT, (triangle,))
        again = instance_from_json(instance_to_json(inst))
        assert again.problem is Problem.MAXCUT
        assert again.snapshots[0].edges == triangle.edges

    def test_tsp_json_roundtrip(self):
        base = TspNodeSet(coords=((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)), metric=Metric.EUC_2D)
        inst = build_moving_node_instance(base, (0.2, 0.2), (0.8, 0.8), T=2, rounded=False)
        again = instance_from_json(instance_to_json(inst))
        assert again.problem is Problem.TSP
        for t in range(2):
            np.testing.assert_allclose(again.distances[t], inst.distances[t], atol=1e-9)
