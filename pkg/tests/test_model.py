"""Architecture assembly, forward/backward, and the model file format."""

import json
import struct

import numpy as np
import pytest

from cellgauge.data import NormStats
from cellgauge.model import (ArchSpec, ModelFormatError, build_model, load_model,
                             param_layout, save_model)
from cellgauge.numerics import Rng

import reference as ref


def _windows(seed, batch, t_w):
    return Rng(seed).gaussian(0.0, 1.0, batch * t_w * 3).reshape(batch, t_w, 3)


class TestArchSpec:
    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            ArchSpec(t_w=7)
        with pytest.raises(ValueError):
            ArchSpec(t_w=0)
        with pytest.raises(ValueError):
            ArchSpec(arch_kind="wide-first")
        with pytest.raises(ValueError):
            ArchSpec(conv_layers=3)
        with pytest.raises(ValueError):
            ArchSpec(dropout_rate=1.0)

    def test_kernel_widths_scale_with_window(self):
        spec = ArchSpec(t_w=100)
        assert spec.conv1_widths == (10, 20, 50)
        assert spec.conv2_widths == (20, 20, 20)

    def test_branch_geometry_dense_first_two_conv(self):
        spec = ArchSpec(arch_kind="dense-first", conv_layers=2, t_w=100)
        geo = spec.branch_geometry()
        assert [g[0] for g in geo] == [91, 81, 51]       # after conv-1
        assert [g[1] for g in geo] == [72, 62, 32]       # after conv-2
        assert [g[2] for g in geo] == [7, 6, 3]          # after pooling
        assert spec.flat_sizes() == (56, 48, 24)

    def test_geometry_one_conv(self):
        spec = ArchSpec(conv_layers=1, t_w=100)
        assert spec.flat_sizes() == (9 * 16, 8 * 16, 5 * 16)

    def test_short_maps_clamp_pooling(self):
        spec = ArchSpec(t_w=20)  # conv widths (2, 4, 10)
        geo = spec.branch_geometry()
        assert [g[0] for g in geo] == [19, 17, 11]
        assert [g[1] for g in geo] == [16, 14, 8]
        # pool width 10 clamps to the 8-long map; every branch pools to 1
        assert [g[2] for g in geo] == [1, 1, 1]


class TestLayout:
    def test_dense_first_parameter_set(self):
        spec = ArchSpec(arch_kind="dense-first", conv_layers=2, t_w=100)
        layout = param_layout(spec)
        names = [n for n, _, _ in layout]
        assert names == ["conv1_b0", "conv1_b1", "conv1_b2",
                         "conv2_b0", "conv2_b1", "conv2_b2",
                         "dense_b0", "dense_b1", "dense_b2", "final"]
        shapes = {n: w for n, w, _ in layout}
        assert shapes["conv1_b0"] == (16, 10, 3)
        assert shapes["conv2_b2"] == (8, 20, 16)
        assert shapes["dense_b0"] == (64, 56)
        assert shapes["final"] == (1, 192)

    def test_merge_first_parameter_set(self):
        spec = ArchSpec(arch_kind="merge-first", conv_layers=1, t_w=100)
        layout = param_layout(spec)
        names = [n for n, _, _ in layout]
        assert names == ["conv1_b0", "conv1_b1", "conv1_b2", "dense", "final"]
        shapes = {n: w for n, w, _ in layout}
        assert shapes["dense"] == (64, 144 + 128 + 80)
        assert shapes["final"] == (1, 64)

    def test_build_model_initializes_layout(self):
        spec = ArchSpec(t_w=20)
        model = build_model(spec, Rng(1))
        for p, (name, wshape, bshape) in zip(model.params, param_layout(spec)):
            assert p.name == name
            assert p.weights.shape == wshape
            assert p.biases.shape == bshape
            assert np.all(p.biases == 0.0)
            assert p.trainable

    def test_build_is_seed_deterministic(self):
        spec = ArchSpec(t_w=20)
        a = build_model(spec, Rng(5))
        b = build_model(spec, Rng(5))
        for pa, pb in zip(a.params, b.params):
            np.testing.assert_array_equal(pa.weights, pb.weights)
        c = build_model(spec, Rng(6))
        assert any(not np.array_equal(pa.weights, pc.weights)
                   for pa, pc in zip(a.params, c.params))


class TestForward:
    @pytest.mark.parametrize("arch", ["dense-first", "merge-first"])
    @pytest.mark.parametrize("nconv", [1, 2])
    def test_single_equals_batch_row(self, arch, nconv):
        spec = ArchSpec(arch_kind=arch, conv_layers=nconv, t_w=20)
        model = build_model(spec, Rng(2))
        x = _windows(3, 6, 20)
        batch_pred, _ = model.forward(x)
        # BLAS may pick different kernels for different GEMM shapes, so
        # single-window inference agrees to rounding, not bit-for-bit.
        for i in range(6):
            np.testing.assert_allclose(model.predict(x[i]), batch_pred[i],
                                       rtol=1e-12, atol=1e-14)

    def test_predictions_are_nonnegative(self):
        for seed in range(10):
            model = build_model(ArchSpec(t_w=20), Rng(seed))
            pred, _ = model.forward(_windows(seed + 100, 32, 20))
            assert np.all(pred >= 0.0)

    def test_inference_is_deterministic(self):
        model = build_model(ArchSpec(t_w=20), Rng(4))
        x = _windows(1, 8, 20)
        a, _ = model.forward(x)
        b, _ = model.forward(x)
        np.testing.assert_array_equal(a, b)

    def test_training_forward_needs_rng_for_dropout(self):
        model = build_model(ArchSpec(t_w=20), Rng(4))
        with pytest.raises(ValueError):
            model.forward(_windows(1, 4, 20), training=True)
        # with dropout disabled, training mode works without an rng
        model0 = build_model(ArchSpec(t_w=20, dropout_rate=0.0), Rng(4))
        model0.forward(_windows(1, 4, 20), training=True)

    def test_dropout_changes_activations(self):
        model = build_model(ArchSpec(t_w=20), Rng(4))
        x = _windows(2, 16, 20)
        # Compare the final pre-activation: the output ReLU can clamp whole
        # batches to zero at init, hiding upstream differences.
        _, ca = model.forward(x, rng=Rng(1), training=True)
        _, cb = model.forward(x, rng=Rng(2), training=True)
        assert not np.array_equal(ca["zf"], cb["zf"])
        _, ca2 = model.forward(x, rng=Rng(1), training=True)
        np.testing.assert_array_equal(ca["zf"], ca2["zf"])

    def test_wrong_shape_rejected(self):
        model = build_model(ArchSpec(t_w=20), Rng(0))
        with pytest.raises(ValueError):
            model.forward(np.zeros((30, 3)))
        with pytest.raises(ValueError):
            model.forward(np.zeros((4, 20, 2)))


class TestBackward:
    def test_matches_finite_differences_small(self):
        # Whole-model check on the smallest legal window; the acceptance
        # suite repeats this at t_w=20 across seeds and both archs.
        spec = ArchSpec(arch_kind="dense-first", conv_layers=1, t_w=10,
                        dropout_rate=0.0, final_l2_coeff=1e-4)
        model = build_model(spec, Rng(3))
        x = _windows(7, 4, 10)
        y = Rng(8).uniform01(4)

        def loss_fn(m):
            pred, _ = m.forward(x)
            diff = pred - y
            penalty = spec.final_l2_coeff * float(np.sum(m.by_name("final").weights ** 2))
            return float(diff @ diff) / len(y) + penalty

        pred, cache = model.forward(x)
        grads = model.backward(cache, 2.0 * (pred - y) / len(y))
        analytic = ref.flatten_grads(grads)
        fd = ref.fd_gradient(loss_fn, model, h=1e-5)
        # Central differences carry ~eps*|loss|/h ~ 1e-12 of cancellation
        # noise, so the relative-error denominator is floored where both
        # gradients are essentially zero.
        denom = np.maximum(np.abs(analytic) + np.abs(fd), 1e-6)
        assert np.max(np.abs(analytic - fd) / denom) < 1e-4

    def test_zero_upstream_leaves_only_l2_term(self):
        model = build_model(ArchSpec(t_w=20, final_l2_coeff=1e-4), Rng(5))
        x = _windows(2, 3, 20)
        _, cache = model.forward(x)
        grads = model.backward(cache, np.zeros(3))
        for p, (gw, gb) in zip(model.params, grads):
            if p.name == "final":
                np.testing.assert_array_equal(gw, 2e-4 * p.weights)
            else:
                assert np.all(gw == 0.0)
            assert np.all(gb == 0.0)

    def test_no_l2_zero_upstream_all_zero(self):
        model = build_model(ArchSpec(t_w=20, final_l2_coeff=0.0), Rng(5))
        _, cache = model.forward(_windows(2, 3, 20))
        grads = model.backward(cache, np.zeros(3))
        assert all(np.all(gw == 0) and np.all(gb == 0) for gw, gb in grads)


class TestSerialization:
    def _model(self, tmp_path, stats=True):
        spec = ArchSpec(t_w=20)
        model = build_model(spec, Rng(11))
        if stats:
            model.norm_stats = NormStats(mean=[3.6, 1.2, 24.0], std=[0.3, 0.9, 1.5])
        path = tmp_path / "model.cgm"
        save_model(model, path)
        return model, path

    def test_roundtrip_bit_exact(self, tmp_path):
        model, path = self._model(tmp_path)
        loaded = load_model(path)
        assert loaded.spec == model.spec
        assert loaded.creation_seed == model.creation_seed
        np.testing.assert_array_equal(loaded.norm_stats.mean, model.norm_stats.mean)
        for pa, pb in zip(model.params, loaded.params):
            assert pa.name == pb.name
            assert pa.trainable == pb.trainable
            np.testing.assert_array_equal(pa.weights, pb.weights)
            np.testing.assert_array_equal(pa.biases, pb.biases)

    def test_trainable_flags_roundtrip(self, tmp_path):
        model, path = self._model(tmp_path)
        model.by_name("final").trainable = False
        save_model(model, path)
        assert load_model(path).by_name("final").trainable is False

    def test_magic_rejected(self, tmp_path):
        _, path = self._model(tmp_path)
        raw = path.read_bytes()
        path.write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_truncated_payload_rejected(self, tmp_path):
        _, path = self._model(tmp_path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-16])
        with pytest.raises(ModelFormatError, match="truncated"):
            load_model(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        _, path = self._model(tmp_path)
        path.write_bytes(path.read_bytes() + b"\x00" * 8)
        with pytest.raises(ModelFormatError, match="trailing"):
            load_model(path)

    def test_unreadable_header_rejected(self, tmp_path):
        path = tmp_path / "bad.cgm"
        path.write_bytes(b"CGM1" + struct.pack("<Q", 3) + b"not")
        with pytest.raises(ModelFormatError, match="header"):
            load_model(path)

    def test_unsupported_version_rejected(self, tmp_path):
        _, path = self._model(tmp_path)
        raw = path.read_bytes()
        hlen = struct.unpack("<Q", raw[4:12])[0]
        header = json.loads(raw[12:12 + hlen])
        header["format_version"] = 99
        blob = json.dumps(header, sort_keys=True).encode()
        path.write_bytes(b"CGM1" + struct.pack("<Q", len(blob)) + blob + raw[12 + hlen:])
        with pytest.raises(ModelFormatError, match="version"):
            load_model(path)

    def test_header_layer_mismatch_rejected(self, tmp_path):
        _, path = self._model(tmp_path)
        raw = path.read_bytes()
        hlen = struct.unpack("<Q", raw[4:12])[0]
        header = json.loads(raw[12:12 + hlen])
        header["layers"][0]["weights_shape"] = [16, 9, 3]
        blob = json.dumps(header, sort_keys=True).encode()
        path.write_bytes(b"CGM1" + struct.pack("<Q", len(blob)) + blob + raw[12 + hlen:])
        with pytest.raises(ModelFormatError, match="does not match"):
            load_model(path)

    def test_failed_save_leaves_no_partial_file(self, tmp_path):
        model, _ = self._model(tmp_path)
        target = tmp_path / "sub" / "missing" / "model.cgm"
        with pytest.raises(OSError):
            save_model(model, target)
        assert not target.exists()
