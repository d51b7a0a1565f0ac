import numpy as np
import pytest

from conftest import random_snapshot, unit_snapshot
from dyco import nn
from dyco.qubo import build_maxcut_qubo, qubo_grad, qubo_loss


def fd_check(model, op, q, h=1e-5, tol=1e-4):
    out, tape = nn.forward(model, op)
    grads = nn.backward(model, tape, qubo_grad(q, out))
    worst = 0.0
    for k in model.param_names():
        tensor = model.params[k]
        for idx in np.ndindex(tensor.shape):
            orig = tensor[idx]
            tensor[idx] = orig + h
            lp = qubo_loss(q, nn.forward(model, op)[0])
            tensor[idx] = orig - h
            lm = qubo_loss(q, nn.forward(model, op)[0])
            tensor[idx] = orig
            fd = (lp - lm) / (2 * h)
            an = grads[k][idx]
            denom = max(abs(fd), abs(an), 1e-6)
            worst = max(worst, abs(fd - an) / denom)
    assert worst < tol, f"max relative gradient error {worst}"


class TestInit:
    def test_default_dimensions(self):
        m = nn.init_model(10, 1)
        assert m.params["emb"].shape == (10, 512)
        assert m.params["w1"].shape == (512, 256)

    def test_seed_determinism(self):
        a = nn.init_model(6, 1, seed=9, d_emb=8, d_hidden=4)
        b = nn.init_model(6, 1, seed=9, d_emb=8, d_hidden=4)
        for k in a.param_names():
            np.testing.assert_array_equal(a.params[k], b.params[k])

    def test_tsp_output_head(self):
        m = nn.init_model(15, 15, d_emb=8, d_hidden=4)
        assert m.params["w2"].shape == (4, 15)

    def test_embedding_unit_scale(self):
        m = nn.init_model(200, 1, d_emb=64, d_hidden=4, seed=2)
        emb = m.params["emb"]
        assert abs(emb.mean()) < 0.05
        assert abs(emb.std() - 1.0) < 0.05

    def test_adam_state_shapes(self):
        m = nn.init_model(5, 1, layer_kind=nn.SAGE, d_emb=8, d_hidden=4)
        for k in m.param_names():
            assert m.adam_m[k].shape == m.params[k].shape
            assert np.all(m.adam_m[k] == 0) and np.all(m.adam_v[k] == 0)


class TestForward:
    def test_zero_head_gives_half(self, triangle):
        m = nn.init_model(3, 1, d_emb=8, d_hidden=4, seed=0)
        m.params["w2"][:] = 0.0
        m.version += 1
        op = nn.build_operator(triangle, nn.GCN)
        out, _ = nn.forward(m, op)
        np.testing.assert_allclose(out, 0.5)

    def test_isolated_node_self_only(self):
        # isolated node: A_hat = 1, D_hat = 1, so its conv output uses only itself
        g = unit_snapshot(3, [(0, 1)])
        op = nn.build_operator(g, nn.GCN)
        row = op.mat.toarray()[2]
        np.testing.assert_allclose(row, [0, 0, 1])

    def test_deterministic_repeat(self, c5):
        op = nn.build_operator(c5, nn.GCN)
        m1 = nn.init_model(5, 1, seed=4, d_emb=8, d_hidden=4)
        m2 = nn.init_model(5, 1, seed=4, d_emb=8, d_hidden=4)
        np.testing.assert_array_equal(nn.forward(m1, op)[0], nn.forward(m2, op)[0])

    def test_dimension_mismatch(self, triangle, c5):
        m = nn.init_model(3, 1, d_emb=8, d_hidden=4)
        with pytest.raises(ValueError):
            nn.forward(m, nn.build_operator(c5, nn.GCN))

    def test_output_in_unit_interval(self, c5):
        m = nn.init_model(5, 1, seed=1, d_emb=16, d_hidden=8)
        out, _ = nn.forward(m, nn.build_operator(c5, nn.GCN))
        assert np.all(out > 0) and np.all(out < 1)

    def test_gcn_normalization_matches_dense(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            g = random_snapshot(rng, int(rng.integers(2, 20)))
            op = nn.build_operator(g, nn.GCN)
            a_hat = g.adjacency() + np.eye(g.node_count)
            d = np.diag(1.0 / np.sqrt(a_hat.sum(axis=1)))
            np.testing.assert_allclose(op.mat.toarray(), d @ a_hat @ d, atol=1e-12)

    def test_sage_mean_aggregation(self):
        g = unit_snapshot(4, [(0, 1), (0, 2), (0, 3)])
        op = nn.build_operator(g, nn.SAGE)
        mat = op.mat.toarray()
        np.testing.assert_allclose(mat[0], [0, 1 / 3, 1 / 3, 1 / 3])
        np.testing.assert_allclose(mat[1], [1, 0, 0, 0])


class TestBackward:
    def test_gradient_fd_small(self):
        rng = np.random.default_rng(0)
        for trial in range(4):
            n = int(rng.integers(3, 8))
            g = random_snapshot(rng, n, p=0.5)
            kind = nn.GCN if trial % 2 == 0 else nn.SAGE
            m = nn.init_model(n, 1, layer_kind=kind, seed=trial, d_emb=6, d_hidden=4)
            q = build_maxcut_qubo(g)
            op = nn.build_operator(g, kind)
            # a few steps first, to leave the symmetric zero-bias region
            for _ in range(3):
                out, tape = nn.forward(m, op)
                nn.adam_step(m, nn.backward(m, tape, qubo_grad(q, out)), 0.01)
            fd_check(m, op, q)

    def test_stale_tape_rejected(self, c5):
        m = nn.init_model(5, 1, seed=0, d_emb=8, d_hidden=4)
        q = build_maxcut_qubo(c5)
        op = nn.build_operator(c5, nn.GCN)
        out, tape = nn.forward(m, op)
        grads = nn.backward(m, tape, qubo_grad(q, out))
        nn.adam_step(m, grads, 0.01)
        with pytest.raises(nn.StaleTapeError):
            nn.backward(m, tape, qubo_grad(q, out))

    def test_gradient_linearity(self, c5):
        m = nn.init_model(5, 1, seed=0, d_emb=8, d_hidden=4)
        op = nn.build_operator(c5, nn.GCN)
        out, tape = nn.forward(m, op)
        g = np.linspace(0.1, 1.0, 5)
        g1 = nn.backward(m, tape, g)
        g2 = nn.backward(m, tape, 2 * g)
        for k in m.param_names():
            np.testing.assert_allclose(g2[k], 2 * g1[k], rtol=1e-12)

    def test_unused_parameter_zero_grad(self, c5):
        # dead ReLU: forcing z1 <= 0 zeroes conv1 weight gradients
        m = nn.init_model(5, 1, seed=0, d_emb=8, d_hidden=4)
        m.params["b1"][:] = -100.0
        op = nn.build_operator(c5, nn.GCN)
        out, tape = nn.forward(m, op)
        grads = nn.backward(m, tape, np.ones(5))
        np.testing.assert_array_equal(grads["w1"], 0)
        np.testing.assert_array_equal(grads["emb"], 0)


class TestAdam:
    def test_zero_grad_no_change(self, c5):
        m = nn.init_model(5, 1, seed=0, d_emb=8, d_hidden=4)
        before = {k: v.copy() for k, v in m.params.items()}
        nn.adam_step(m, {k: np.zeros_like(v) for k, v in m.params.items()}, 0.01)
        for k in m.param_names():
            np.testing.assert_array_equal(m.params[k], before[k])

    def test_first_step_is_signed_lr(self):
        m = nn.init_model(2, 1, seed=0, d_emb=4, d_hidden=2)
        g = {k: np.ones_like(v) for k, v in m.params.items()}
        before = {k: v.copy() for k, v in m.params.items()}
        nn.adam_step(m, g, 0.001)
        for k in m.param_names():
            step = before[k] - m.params[k]
            np.testing.assert_allclose(step, 0.001, rtol=1e-6)

    def test_zero_lr(self, c5):
        m = nn.init_model(5, 1, seed=0, d_emb=8, d_hidden=4)
        before = {k: v.copy() for k, v in m.params.items()}
        nn.adam_step(m, {k: np.ones_like(v) for k, v in m.params.items()}, 0.0)
        for k in m.param_names():
            np.testing.assert_array_equal(m.params[k], before[k])

    def test_nan_grad_refused(self, c5):
        m = nn.init_model(5, 1, seed=0, d_emb=8, d_hidden=4)
        bad = {k: np.full_like(v, np.nan) for k, v in m.params.items()}
        with pytest.raises(ValueError):
            nn.adam_step(m, bad, 0.01)


class TestShrinkPerturb:
    def test_exact_contraction_with_zero_noise(self):
        m = nn.init_model(4, 1, seed=1, d_emb=8, d_hidden=4)
        before = {k: v.copy() for k, v in m.params.items()}
        nn.shrink_perturb(m, 0.4, 0.1, subset=nn.SUBSET_FULL, sigma=0.0, seed=0)
        for k in m.param_names():
            np.testing.assert_array_equal(m.params[k], 0.4 * before[k])

    def test_norm_contraction(self):
        m = nn.init_model(4, 1, seed=1, d_emb=8, d_hidden=4)
        norms = {k: np.linalg.norm(v) for k, v in m.params.items()}
        nn.shrink_perturb(m, 0.4, 0.1, sigma=0.0, seed=0)
        for k in m.param_names():
            assert np.linalg.norm(m.params[k]) == pytest.approx(0.4 * norms[k])

    def test_subset_isolation_emb(self):
        m = nn.init_model(4, 1, seed=1, d_emb=8, d_hidden=4)
        conv_before = {k: v.copy() for k, v in m.params.items() if k != "emb"}
        nn.shrink_perturb(m, 0.4, 0.1, subset=nn.SUBSET_EMB, sigma=1.0, seed=3)
        for k, v in conv_before.items():
            np.testing.assert_array_equal(m.params[k], v)
        assert not np.array_equal(m.params["emb"], 0.4 * m.params["emb"])

    def test_subset_isolation_gnn(self):
        m = nn.init_model(4, 1, seed=1, d_emb=8, d_hidden=4)
        emb_before = m.params["emb"].copy()
        nn.shrink_perturb(m, 0.4, 0.1, subset=nn.SUBSET_GNN, sigma=1.0, seed=3)
        np.testing.assert_array_equal(m.params["emb"], emb_before)

    def test_adam_reset_on_subset(self, c5):
        m = nn.init_model(5, 1, seed=0, d_emb=8, d_hidden=4)
        op = nn.build_operator(c5, nn.GCN)
        q = build_maxcut_qubo(c5)
        out, tape = nn.forward(m, op)
        nn.adam_step(m, nn.backward(m, tape, qubo_grad(q, out)), 0.01)
        nn.shrink_perturb(m, 0.4, 0.1, subset=nn.SUBSET_EMB, sigma=0.0, seed=0)
        assert np.all(m.adam_m["emb"] == 0)
        assert np.any(m.adam_m["w1"] != 0)

    def test_keep_adam_state_flag(self, c5):
        m = nn.init_model(5, 1, seed=0, d_emb=8, d_hidden=4)
        op = nn.build_operator(c5, nn.GCN)
        q = build_maxcut_qubo(c5)
        out, tape = nn.forward(m, op)
        nn.adam_step(m, nn.backward(m, tape, qubo_grad(q, out)), 0.01)
        moments = {k: v.copy() for k, v in m.adam_m.items()}
        nn.shrink_perturb(m, 0.4, 0.1, sigma=0.0, seed=0, keep_adam_state=True)
        for k in m.param_names():
            np.testing.assert_array_equal(m.adam_m[k], moments[k])

    def test_out_of_range_rejected(self):
        m = nn.init_model(4, 1, seed=1, d_emb=8, d_hidden=4)
        with pytest.raises(ValueError):
            nn.shrink_perturb(m, 1.0, 0.1)
        with pytest.raises(ValueError):
            nn.shrink_perturb(m, 0.4, 0.0)


class TestCheckpoint:
    def test_roundtrip(self, tmp_path, c5):
        m = nn.init_model(5, 1, layer_kind=nn.SAGE, seed=0, d_emb=8, d_hidden=4)
        op = nn.build_operator(c5, nn.SAGE)
        q = build_maxcut_qubo(c5)
        out, tape = nn.forward(m, op)
        nn.adam_step(m, nn.backward(m, tape, qubo_grad(q, out)), 0.01)
        path = tmp_path / "ckpt.npz"
        nn.save_checkpoint(m, path)
        again = nn.load_checkpoint(path)
        assert again.layer_kind == nn.SAGE
        assert again.adam_step_count == 1
        for k in m.param_names():
            np.testing.assert_array_equal(again.params[k], m.params[k])
            np.testing.assert_array_equal(again.adam_v[k], m.adam_v[k])
        np.testing.assert_array_equal(nn.forward(again, op)[0], nn.forward(m, op)[0])
