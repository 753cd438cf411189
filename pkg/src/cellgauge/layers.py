"""Forward and backward passes for the network's layer kinds.

Conventions used throughout:

* activations are float64 arrays shaped ``(batch, length, channels)``; every
  public op also accepts a single sample ``(length, channels)`` (or ``(n,)``
  for dense layers) and returns the same rank it was given.
* conv kernels are ``(filters, width, in_channels)``, dense weights are
  ``(out, in)``, biases are 1-D.
* convolutions are "valid" (no padding), stride 1; pooling windows do not
  overlap and trailing samples that do not fill a window are dropped.

The convolution is evaluated as one GEMM per batch chunk on an explicit
im2col buffer; chunking keeps the buffer under ``COL_BUDGET_BYTES`` so long
windows (t_w = 1000 kernels are 500 samples wide) cannot blow up memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .numerics import Rng

COL_BUDGET_BYTES = 256 * 2**20


@dataclass
class LayerParams:
    """One layer's learnable state; gradients mirror these shapes exactly."""

    name: str
    weights: np.ndarray
    biases: np.ndarray
    trainable: bool = True


def fan_in_uniform(rng: Rng, shape: tuple, fan_in: int) -> np.ndarray:
    """Weight init: U(-sqrt(6/fan_in), +sqrt(6/fan_in))."""
    bound = np.sqrt(6.0 / fan_in)
    n = int(np.prod(shape))
    return rng.uniform(-bound, bound, n).reshape(shape)


def _as_batch(x: np.ndarray, rank: int):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == rank:
        return x[None], True
    if x.ndim == rank + 1:
        return x, False
    raise ValueError(f"expected a rank-{rank} sample or batch, got shape {x.shape}")


def _chunk_slices(batch: int, bytes_per_item: int):
    step = max(1, COL_BUDGET_BYTES // max(1, bytes_per_item))
    for start in range(0, batch, step):
        yield slice(start, min(start + step, batch))


def _conv_cols(xb: np.ndarray, width: int) -> np.ndarray:
    # (B, len, ch) -> contiguous (B, len-width+1, width, ch)
    view = sliding_window_view(xb, width, axis=1)
    return np.ascontiguousarray(view.transpose(0, 1, 3, 2))


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def conv1d_forward(x: np.ndarray, weights: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """Valid 1-D convolution, stride 1.

    out[t, f] = bias[f] + sum_{d, c} x[t+d, c] * weights[f, d, c]
    """
    xb, single = _as_batch(x, 2)
    nf, width, ch = weights.shape
    b, length, xch = xb.shape
    if xch != ch:
        raise ValueError(f"input has {xch} channels, kernel expects {ch}")
    if length < width:
        raise ValueError(f"input length {length} is shorter than kernel width {width}")
    lout = length - width + 1
    wmat = weights.transpose(1, 2, 0).reshape(width * ch, nf)
    out = np.empty((b, lout, nf))
    for sl in _chunk_slices(b, lout * width * ch * 8):
        cols = _conv_cols(xb[sl], width)
        nb = cols.shape[0]
        out[sl] = (cols.reshape(nb * lout, width * ch) @ wmat).reshape(nb, lout, nf)
    out += biases
    return out[0] if single else out


def conv1d_backward(x, weights, upstream, need_input_grad: bool = True):
    """Gradients of conv1d_forward wrt (input, weights, biases)."""
    xb, single = _as_batch(x, 2)
    ub, _ = _as_batch(upstream, 2)
    nf, width, ch = weights.shape
    b, length, _ = xb.shape
    lout = length - width + 1
    if ub.shape != (b, lout, nf):
        raise ValueError(f"upstream shape {ub.shape} does not match output ({b}, {lout}, {nf})")

    grad_b = ub.sum(axis=(0, 1))

    gw_mat = np.zeros((width * ch, nf))
    for sl in _chunk_slices(b, lout * width * ch * 8):
        cols = _conv_cols(xb[sl], width)
        nb = cols.shape[0]
        gw_mat += cols.reshape(nb * lout, width * ch).T @ ub[sl].reshape(nb * lout, nf)
    grad_w = gw_mat.reshape(width, ch, nf).transpose(2, 0, 1)

    grad_x = None
    if need_input_grad:
        # full correlation of the upstream with the flipped kernel
        flip = np.ascontiguousarray(weights.transpose(1, 0, 2)[::-1]).reshape(width * nf, ch)
        pad = np.zeros((b, length + width - 1, nf))
        pad[:, width - 1:width - 1 + lout] = ub
        grad_x = np.empty((b, length, ch))
        for sl in _chunk_slices(b, length * width * nf * 8):
            view = sliding_window_view(pad[sl], width, axis=1)  # (nb, length, nf, width)
            cols = np.ascontiguousarray(view.transpose(0, 1, 3, 2))
            nb = cols.shape[0]
            grad_x[sl] = (cols.reshape(nb * length, width * nf) @ flip).reshape(nb, length, ch)
        if single:
            grad_x = grad_x[0]
    return grad_x, grad_w, grad_b


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------

def effective_pool_width(length: int, width: int) -> int:
    # feature maps shorter than the pool window collapse to one output
    return min(width, length)


def avgpool1d(x: np.ndarray, width: int) -> np.ndarray:
    """Non-overlapping average pooling; trailing remainder samples dropped."""
    xb, single = _as_batch(x, 2)
    b, length, ch = xb.shape
    if length == 0:
        raise ValueError("cannot pool an empty input")
    eff = effective_pool_width(length, width)
    m = length // eff
    out = xb[:, : m * eff].reshape(b, m, eff, ch).mean(axis=2)
    return out[0] if single else out


def avgpool1d_backward(length: int, width: int, upstream: np.ndarray) -> np.ndarray:
    ub, single = _as_batch(upstream, 2)
    b, m, ch = ub.shape
    eff = effective_pool_width(length, width)
    grad = np.zeros((b, length, ch))
    grad[:, : m * eff] = np.repeat(ub, eff, axis=1) / eff
    return grad[0] if single else grad


# ---------------------------------------------------------------------------
# dense
# ---------------------------------------------------------------------------

def dense_forward(x: np.ndarray, weights: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """Affine map out = W x + b (weights shaped (out, in))."""
    xb, single = _as_batch(x, 1)
    if xb.shape[1] != weights.shape[1]:
        raise ValueError(f"input size {xb.shape[1]} does not match weight shape {weights.shape}")
    out = xb @ weights.T + biases
    return out[0] if single else out


def dense_backward(x, weights, upstream):
    xb, single = _as_batch(x, 1)
    ub, _ = _as_batch(upstream, 1)
    grad_w = ub.T @ xb
    grad_b = ub.sum(axis=0)
    grad_x = ub @ weights
    return (grad_x[0] if single else grad_x), grad_w, grad_b


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

def leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, x, slope * x)


def leaky_relu_backward(x, upstream, slope: float):
    return upstream * np.where(np.asarray(x) >= 0, 1.0, slope)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(x, upstream):
    return upstream * (np.asarray(x) > 0)


# ---------------------------------------------------------------------------
# dropout
# ---------------------------------------------------------------------------

def dropout_mask(shape: tuple, rate: float, rng: Rng) -> np.ndarray:
    """Inverted-dropout mask: entries are 0 or 1/(1-rate), E[mask] = 1."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    n = int(np.prod(shape))
    keep = rng.uniform01(n) >= rate
    return (keep.astype(np.float64) / (1.0 - rate)).reshape(shape)


def dropout_apply(x: np.ndarray, rate: float, rng: Rng, training: bool) -> np.ndarray:
    """Training: zero elements with probability ``rate`` and rescale the
    survivors by 1/(1-rate); inference: identity."""
    x = np.asarray(x, dtype=np.float64)
    if not training or rate == 0.0:
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        return x
    return x * dropout_mask(x.shape, rate, rng)
