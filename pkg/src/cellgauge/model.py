"""The windowed SoC estimator networks: build, run, differentiate, serialize.

Four architectures are supported: {dense-first, merge-first} x {1, 2 conv
layers}.  All of them share the same front end: three parallel convolution
branches over the (t_w, 3) input window, with per-branch kernel widths
(t_w/10, t_w/5, t_w/2) in the first layer and (t_w/5) everywhere in the
second, leaky-ReLU activations, dropout after each conv activation, and one
average-pooling stage before flattening.  The heads differ:

* dense-first: each branch feeds its own hidden dense block; the three
  block outputs are concatenated into the final neuron.
* merge-first: the flattened branches are concatenated first and feed one
  shared hidden dense block, then the final neuron.

The final neuron uses ReLU, so predictions are always >= 0.  The model file
format ("CGM1") is little-endian and self-describing; see save_model.
"""

from __future__ import annotations

import dataclasses
import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from . import layers
from .data import NormStats
from .layers import LayerParams
from .numerics import Rng

MAGIC = b"CGM1"
FORMAT_VERSION = 1

ARCH_KINDS = ("dense-first", "merge-first")


class ModelFormatError(Exception):
    """Raised when a model file is malformed, truncated, or inconsistent."""


class SpecMismatchError(Exception):
    """Raised when two models that must share an architecture do not."""


@dataclass(frozen=True)
class ArchSpec:
    arch_kind: str = "dense-first"
    conv_layers: int = 2
    t_w: int = 500
    filters_l1: int = 16
    filters_l2: int = 8
    dense_units: int = 64
    pool_width: int = 10
    dropout_rate: float = 0.2
    final_l2_coeff: float = 1e-4
    leaky_slope: float = 0.01

    def __post_init__(self):
        if self.arch_kind not in ARCH_KINDS:
            raise ValueError(f"arch_kind must be one of {ARCH_KINDS}, got {self.arch_kind!r}")
        if self.conv_layers not in (1, 2):
            raise ValueError(f"conv_layers must be 1 or 2, got {self.conv_layers}")
        if self.t_w < 10 or self.t_w % 10 != 0:
            raise ValueError(f"t_w must be a positive multiple of 10, got {self.t_w}")
        for name in ("filters_l1", "filters_l2", "dense_units", "pool_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.final_l2_coeff < 0:
            raise ValueError("final_l2_coeff must be >= 0")

    @property
    def conv1_widths(self) -> tuple:
        return (self.t_w // 10, self.t_w // 5, self.t_w // 2)

    @property
    def conv2_widths(self) -> tuple:
        w = self.t_w // 5
        return (w, w, w)

    def branch_geometry(self):
        """Per-branch (conv1_len, conv2_len or None, pooled_len, flat_size)."""
        out = []
        for i in range(3):
            l1 = self.t_w - self.conv1_widths[i] + 1
            if self.conv_layers == 2:
                l2 = l1 - self.conv2_widths[i] + 1
                pool_in, filters = l2, self.filters_l2
            else:
                l2 = None
                pool_in, filters = l1, self.filters_l1
            pooled = pool_in // layers.effective_pool_width(pool_in, self.pool_width)
            out.append((l1, l2, pooled, pooled * filters))
        return out

    def flat_sizes(self) -> tuple:
        return tuple(g[3] for g in self.branch_geometry())


def param_layout(spec: ArchSpec):
    """Parameter names and shapes in build order, derived from the spec only."""
    layout = []
    for i, w in enumerate(spec.conv1_widths):
        layout.append((f"conv1_b{i}", (spec.filters_l1, w, 3), (spec.filters_l1,)))
    if spec.conv_layers == 2:
        for i, w in enumerate(spec.conv2_widths):
            layout.append((f"conv2_b{i}", (spec.filters_l2, w, spec.filters_l1), (spec.filters_l2,)))
    flats = spec.flat_sizes()
    if spec.arch_kind == "dense-first":
        for i, n in enumerate(flats):
            layout.append((f"dense_b{i}", (spec.dense_units, n), (spec.dense_units,)))
        layout.append(("final", (1, 3 * spec.dense_units), (1,)))
    else:
        layout.append(("dense", (spec.dense_units, sum(flats)), (spec.dense_units,)))
        layout.append(("final", (1, spec.dense_units), (1,)))
    return layout


@dataclass
class CnnModel:
    spec: ArchSpec
    params: list
    norm_stats: NormStats | None = None
    creation_seed: int | None = None
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {p.name: i for i, p in enumerate(self.params)}

    def by_name(self, name: str) -> LayerParams:
        return self.params[self._index[name]]

    def conv_param_names(self):
        return [p.name for p in self.params if p.name.startswith("conv")]

    def head_param_names(self):
        return [p.name for p in self.params if not p.name.startswith("conv")]

    def snapshot(self):
        return [(p.weights.copy(), p.biases.copy()) for p in self.params]

    def restore(self, snap):
        for p, (w, b) in zip(self.params, snap):
            p.weights = w.copy()
            p.biases = b.copy()

    # -- execution ---------------------------------------------------------

    def forward(self, x, rng: Rng | None = None, training: bool = False):
        """Run the network; returns (prediction, cache for backward).

        ``x`` is one (t_w, 3) window or a (batch, t_w, 3) stack; the
        prediction is a scalar or a (batch,) vector to match.  Inference
        (training=False) is deterministic; training mode needs an Rng when
        the spec has a nonzero dropout rate.
        """
        spec = self.spec
        xb = np.asarray(x, dtype=np.float64)
        single = xb.ndim == 2
        if single:
            xb = xb[None]
        if xb.ndim != 3 or xb.shape[1] != spec.t_w or xb.shape[2] != 3:
            raise ValueError(f"expected input windows shaped (*, {spec.t_w}, 3), got {np.asarray(x).shape}")
        use_dropout = training and spec.dropout_rate > 0.0
        if use_dropout and rng is None:
            raise ValueError("training-mode forward with dropout needs an Rng")

        cache = {"x": xb, "single": single, "training": training, "branches": []}
        flats = []
        for i in range(3):
            br = {}
            c1 = self.by_name(f"conv1_b{i}")
            br["z1"] = layers.conv1d_forward(xb, c1.weights, c1.biases)
            a1 = layers.leaky_relu(br["z1"], spec.leaky_slope)
            br["m1"] = layers.dropout_mask(a1.shape, spec.dropout_rate, rng) if use_dropout else None
            d1 = a1 * br["m1"] if br["m1"] is not None else a1
            if spec.conv_layers == 2:
                br["d1"] = d1
                c2 = self.by_name(f"conv2_b{i}")
                br["z2"] = layers.conv1d_forward(d1, c2.weights, c2.biases)
                a2 = layers.leaky_relu(br["z2"], spec.leaky_slope)
                br["m2"] = layers.dropout_mask(a2.shape, spec.dropout_rate, rng) if use_dropout else None
                pool_in = a2 * br["m2"] if br["m2"] is not None else a2
            else:
                pool_in = d1
            br["pool_in_len"] = pool_in.shape[1]
            pooled = layers.avgpool1d(pool_in, spec.pool_width)
            br["pooled_shape"] = pooled.shape
            br["flat"] = pooled.reshape(pooled.shape[0], -1)
            flats.append(br["flat"])
            cache["branches"].append(br)

        if spec.arch_kind == "dense-first":
            hs = []
            for i in range(3):
                d = self.by_name(f"dense_b{i}")
                zd = layers.dense_forward(flats[i], d.weights, d.biases)
                cache["branches"][i]["zd"] = zd
                hs.append(layers.leaky_relu(zd, spec.leaky_slope))
            h = np.concatenate(hs, axis=1)
        else:
            cf = np.concatenate(flats, axis=1)
            cache["concat_flat"] = cf
            d = self.by_name("dense")
            cache["zd"] = layers.dense_forward(cf, d.weights, d.biases)
            h = layers.leaky_relu(cache["zd"], spec.leaky_slope)
        cache["h"] = h

        f = self.by_name("final")
        cache["zf"] = layers.dense_forward(h, f.weights, f.biases)
        pred = layers.relu(cache["zf"])[:, 0]
        return (float(pred[0]) if single else pred), cache

    def predict(self, x):
        return self.forward(x, training=False)[0]

    def backward(self, cache, dpred):
        """Gradients of (loss + final-layer L2 penalty) for every parameter.

        ``dpred`` is dLoss/dPrediction, scalar or (batch,) to match the
        forward call.  The returned list of (weight_grad, bias_grad) pairs
        parallels ``self.params``; the penalty contributes 2*lambda*w to
        the final layer's weight gradient only.
        """
        spec = self.spec
        slope = spec.leaky_slope
        dp = np.asarray(dpred, dtype=np.float64)
        if cache["single"]:
            dp = dp.reshape(1, 1)
        else:
            dp = dp.reshape(-1, 1)
        grads = [None] * len(self.params)

        dzf = layers.relu_backward(cache["zf"], dp)
        f = self.by_name("final")
        dh, gwf, gbf = layers.dense_backward(cache["h"], f.weights, dzf)
        gwf = gwf + 2.0 * spec.final_l2_coeff * f.weights
        grads[self._index["final"]] = (gwf, gbf)

        dflats = []
        if spec.arch_kind == "dense-first":
            for i in range(3):
                u = spec.dense_units
                br = cache["branches"][i]
                dzd = layers.leaky_relu_backward(br["zd"], dh[:, i * u:(i + 1) * u], slope)
                d = self.by_name(f"dense_b{i}")
                dflat, gwd, gbd = layers.dense_backward(br["flat"], d.weights, dzd)
                grads[self._index[f"dense_b{i}"]] = (gwd, gbd)
                dflats.append(dflat)
        else:
            dzd = layers.leaky_relu_backward(cache["zd"], dh, slope)
            d = self.by_name("dense")
            dcf, gwd, gbd = layers.dense_backward(cache["concat_flat"], d.weights, dzd)
            grads[self._index["dense"]] = (gwd, gbd)
            sizes = spec.flat_sizes()
            offs = np.cumsum((0,) + sizes)
            dflats = [dcf[:, offs[i]:offs[i + 1]] for i in range(3)]

        xb = cache["x"]
        for i in range(3):
            br = cache["branches"][i]
            dpool = dflats[i].reshape(br["pooled_shape"])
            dpin = layers.avgpool1d_backward(br["pool_in_len"], spec.pool_width, dpool)
            if spec.conv_layers == 2:
                da2 = dpin * br["m2"] if br["m2"] is not None else dpin
                dz2 = layers.leaky_relu_backward(br["z2"], da2, slope)
                c2 = self.by_name(f"conv2_b{i}")
                dd1, gw2, gb2 = layers.conv1d_backward(br["d1"], c2.weights, dz2)
                grads[self._index[f"conv2_b{i}"]] = (gw2, gb2)
            else:
                dd1 = dpin
            da1 = dd1 * br["m1"] if br["m1"] is not None else dd1
            dz1 = layers.leaky_relu_backward(br["z1"], da1, slope)
            c1 = self.by_name(f"conv1_b{i}")
            _, gw1, gb1 = layers.conv1d_backward(xb, c1.weights, dz1, need_input_grad=False)
            grads[self._index[f"conv1_b{i}"]] = (gw1, gb1)
        return grads


def build_model(spec: ArchSpec, rng: Rng) -> CnnModel:
    """Initialize a model: fan-in-scaled uniform weights, zero biases."""
    params = []
    for name, wshape, bshape in param_layout(spec):
        if name.startswith("conv"):
            fan_in = wshape[1] * wshape[2]
        else:
            fan_in = wshape[1]
        params.append(LayerParams(
            name=name,
            weights=layers.fan_in_uniform(rng, wshape, fan_in),
            biases=np.zeros(bshape),
        ))
    return CnnModel(spec=spec, params=params, creation_seed=rng.seed)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_model(model: CnnModel, path) -> None:
    """Write a CGM1 model file.

    Layout: 4 magic bytes "CGM1", a little-endian uint64 header length, a
    UTF-8 JSON header (spec fields, norm stats, creation seed, per-layer
    names/shapes/trainable flags), then every parameter tensor's raw
    little-endian float64 bytes in build order (weights, then biases).
    The file is written to a temp name and renamed, so a failed save never
    leaves a partial model behind.
    """
    header = {
        "format_version": FORMAT_VERSION,
        "spec": dataclasses.asdict(model.spec),
        "norm_stats": model.norm_stats.as_dict() if model.norm_stats is not None else None,
        "creation_seed": model.creation_seed,
        "layers": [
            {
                "name": p.name,
                "trainable": bool(p.trainable),
                "weights_shape": list(p.weights.shape),
                "biases_shape": list(p.biases.shape),
            }
            for p in model.params
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for p in model.params:
            fh.write(np.ascontiguousarray(p.weights, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(p.biases, dtype="<f8").tobytes())
    os.replace(tmp, path)


def load_model(path) -> CnnModel:
    """Read a CGM1 model file; raises ModelFormatError on any inconsistency."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 8 or raw[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a CGM1 model file")
    (hlen,) = struct.unpack("<Q", raw[4:12])
    if len(raw) < 12 + hlen:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: unreadable header ({exc})") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format version {header.get('format_version')!r}")
    try:
        spec = ArchSpec(**header["spec"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: bad spec in header ({exc})") from exc

    layout = param_layout(spec)
    described = header.get("layers", [])
    if len(described) != len(layout):
        raise ModelFormatError(f"{path}: header lists {len(described)} layers, spec implies {len(layout)}")
    params = []
    offset = 12 + hlen
    for (name, wshape, bshape), meta in zip(layout, described):
        if meta.get("name") != name or tuple(meta.get("weights_shape", ())) != wshape \
                or tuple(meta.get("biases_shape", ())) != bshape:
            raise ModelFormatError(f"{path}: layer {meta.get('name')!r} does not match spec layer {name} {wshape}")
        nw, nb = int(np.prod(wshape)), int(np.prod(bshape))
        need = (nw + nb) * 8
        if offset + need > len(raw):
            raise ModelFormatError(f"{path}: truncated parameter payload at layer {name}")
        w = np.frombuffer(raw, dtype="<f8", count=nw, offset=offset).reshape(wshape).copy()
        b = np.frombuffer(raw, dtype="<f8", count=nb, offset=offset + nw * 8).reshape(bshape).copy()
        offset += need
        params.append(LayerParams(name=name, weights=w, biases=b, trainable=bool(meta.get("trainable", True))))
    if offset != len(raw):
        raise ModelFormatError(f"{path}: {len(raw) - offset} trailing bytes after parameter payload")

    stats = header.get("norm_stats")
    return CnnModel(
        spec=spec,
        params=params,
        norm_stats=NormStats.from_dict(stats) if stats is not None else None,
        creation_seed=header.get("creation_seed"),
    )
