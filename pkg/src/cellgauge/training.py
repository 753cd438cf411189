"""Objective, optimizer, training loop, transfer setup, and evaluation.

Training minimizes mean-squared SoC error plus the model's final-layer L2
penalty with mini-batch Adam, shuffling each epoch with a seeded
permutation, validating every epoch, and stopping once validation MSE has
failed to improve for a fixed number of consecutive epochs.  The weights
returned are the best-validation checkpoint, not the last epoch's.
Everything is deterministic given (seed, data, config).
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import SplitWindows
from .model import ArchSpec, CnnModel, SpecMismatchError, load_model
from .numerics import Rng

FREEZE_POLICIES = ("none", "dense-frozen")


class NonFiniteLossError(Exception):
    """Training hit a NaN/inf loss; carries where it happened."""

    def __init__(self, loss, epoch, batch_index=None):
        self.loss = loss
        self.epoch = epoch
        self.batch_index = batch_index
        where = f"epoch {epoch}" + ("" if batch_index is None else f", batch {batch_index}")
        super().__init__(f"non-finite loss {loss!r} at {where}")


# ---------------------------------------------------------------------------
# objective and metrics
# ---------------------------------------------------------------------------

def mse_loss(pred, target):
    """Mean squared error and its gradient wrt pred: 2*(pred - target)/L."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"pred {pred.shape} vs target {target.shape}")
    n = pred.size
    if n == 0:
        raise ValueError("mse_loss on empty vectors")
    diff = pred - target
    return float(diff @ diff) / n, 2.0 * diff / n


def mae(pred, target):
    """Mean absolute error in percent SoC."""
    pred, target = np.asarray(pred), np.asarray(target)
    if pred.shape != target.shape or pred.size == 0:
        raise ValueError("mae needs equal-length nonempty vectors")
    return 100.0 * float(np.mean(np.abs(pred - target)))


def max_err(pred, target):
    """Maximum absolute error in percent SoC."""
    pred, target = np.asarray(pred), np.asarray(target)
    if pred.shape != target.shape or pred.size == 0:
        raise ValueError("max_err needs equal-length nonempty vectors")
    return 100.0 * float(np.max(np.abs(pred - target)))


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    batch_size: int = 128
    max_epochs: int = 100
    patience: int = 10
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    l2_coeff: float = 1e-4
    seed: int = 0
    freeze_policy: str = "none"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 1 <= self.patience <= self.max_epochs:
            raise ValueError("need 1 <= patience <= max_epochs")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("learning_rate and epsilon must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.freeze_policy not in FREEZE_POLICIES:
            raise ValueError(f"freeze_policy must be one of {FREEZE_POLICIES}")


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def init_for(cls, params):
        return cls(
            m=[(np.zeros_like(p.weights), np.zeros_like(p.biases)) for p in params],
            v=[(np.zeros_like(p.weights), np.zeros_like(p.biases)) for p in params],
        )


def adam_step(params, grads, state: AdamState, config: TrainConfig) -> None:
    """One bias-corrected Adam update, in place.

    Update per tensor: m <- b1*m + (1-b1)*g, v <- b2*v + (1-b2)*g^2,
    param -= lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps), with eps added
    outside the square root.  Parameters flagged non-trainable are skipped
    entirely — values and moments stay bit-identical.  The step counter
    advances exactly once per call.
    """
    if len(grads) != len(params):
        raise ValueError(f"{len(grads)} gradients for {len(params)} parameters")
    state.step += 1
    t = state.step
    b1, b2 = config.beta1, config.beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    lr = config.learning_rate
    for p, (gw, gb), ms, vs in zip(params, grads, state.m, state.v):
        if gw.shape != p.weights.shape or gb.shape != p.biases.shape:
            raise ValueError(f"{p.name}: gradient shape {gw.shape}/{gb.shape} does not "
                             f"match parameter {p.weights.shape}/{p.biases.shape}")
        if not p.trainable:
            continue
        for arr, g, m, v in ((p.weights, gw, ms[0], vs[0]), (p.biases, gb, ms[1], vs[1])):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * np.square(g)
            arr -= lr * (m / corr1) / (np.sqrt(v / corr2) + config.epsilon)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

@dataclass
class EarlyStopper:
    """Stop after `patience` consecutive epochs without strict improvement."""

    patience: int
    best: float = np.inf
    best_epoch: int = 0
    bad_epochs: int = 0

    def update(self, epoch: int, value: float):
        """Returns (improved, stop_now)."""
        if value < self.best:
            self.best = value
            self.best_epoch = epoch
            self.bad_epochs = 0
            return True, False
        self.bad_epochs += 1
        return False, self.bad_epochs >= self.patience


@dataclass
class TrainReport:
    epochs: list = field(default_factory=list)   # (epoch, train_mse, val_mse, seconds)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_val_mse: float = np.inf
    config: TrainConfig | None = None

    def to_csv(self, path, extra_header=None) -> None:
        """Write per-epoch losses; run provenance goes into # comment lines."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = dict(extra_header or {})
        if self.config is not None:
            header.update(batch_size=self.config.batch_size,
                          learning_rate=self.config.learning_rate,
                          patience=self.config.patience, seed=self.config.seed,
                          freeze_policy=self.config.freeze_policy)
        header.update(best_epoch=self.best_epoch, best_val_mse=repr(self.best_val_mse),
                      stopped_epoch=self.stopped_epoch)
        lines = [f"# {k}={v}" for k, v in header.items()]
        lines.append("epoch,train_mse,val_mse")
        for epoch, train_mse, val_mse, _ in self.epochs:
            lines.append(f"{epoch},{train_mse!r},{val_mse!r}")
        path.write_text("\n".join(lines) + "\n")


def _batched_predictions(model: CnnModel, features, batch_size=1024):
    out = np.empty(len(features))
    for start in range(0, len(features), batch_size):
        pred, _ = model.forward(features[start:start + batch_size], training=False)
        out[start:start + len(pred)] = pred
    return out


def validation_mse(model: CnnModel, windows: SplitWindows, batch_size=1024) -> float:
    """Inference-mode MSE over a window set (module-level so tests can stub it)."""
    pred = _batched_predictions(model, windows.features, batch_size)
    loss, _ = mse_loss(pred, windows.labels)
    return loss


def train(model: CnnModel, train_windows: SplitWindows, val_windows: SplitWindows,
          config: TrainConfig, rng: Rng | None = None, progress=None):
    """Fit the model; returns (model with best-validation weights, TrainReport).

    Each epoch shuffles the training windows with the seeded rng and steps
    Adam once per mini-batch (the trailing partial batch is kept, its loss
    normalized by its own size).  Validation MSE is computed every epoch;
    when it fails to improve for `patience` consecutive epochs, training
    stops and the best checkpoint is restored.  A NaN/inf training or
    validation loss aborts with NonFiniteLossError.  ``progress``, when
    given, is called as progress(epoch, train_mse, val_mse, seconds) after
    every epoch.
    """
    if train_windows.n == 0:
        raise ValueError("empty training split")
    if val_windows.n == 0:
        raise ValueError("empty validation split")
    if rng is None:
        rng = Rng(config.seed)
    shuffle_rng = Rng(rng.derive(0))
    dropout_rng = Rng(rng.derive(1))

    if config.freeze_policy == "dense-frozen":
        for p in model.params:
            p.trainable = p.name.startswith("conv")

    feats, labels = train_windows.features, train_windows.labels
    state = AdamState.init_for(model.params)
    stopper = EarlyStopper(config.patience)
    report = TrainReport(config=config)
    best_snapshot = model.snapshot()

    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(train_windows.n)
        sse = 0.0
        for bi, start in enumerate(range(0, train_windows.n, config.batch_size)):
            take = order[start:start + config.batch_size]
            pred, cache = model.forward(feats[take], rng=dropout_rng, training=True)
            loss, dpred = mse_loss(pred, labels[take])
            if not np.isfinite(loss):
                raise NonFiniteLossError(loss, epoch, bi)
            grads = model.backward(cache, dpred)
            adam_step(model.params, grads, state, config)
            sse += loss * len(take)
        train_mse = sse / train_windows.n

        val_mse = validation_mse(model, val_windows, max(config.batch_size, 256))
        if not np.isfinite(val_mse):
            raise NonFiniteLossError(val_mse, epoch)
        improved, stop = stopper.update(epoch, val_mse)
        if improved:
            best_snapshot = model.snapshot()
        seconds = time.perf_counter() - t0
        report.epochs.append((epoch, train_mse, val_mse, seconds))
        report.stopped_epoch = epoch
        if progress is not None:
            progress(epoch, train_mse, val_mse, seconds)
        if stop:
            break

    model.restore(best_snapshot)
    report.best_epoch = stopper.best_epoch
    report.best_val_mse = stopper.best
    return model, report


# ---------------------------------------------------------------------------
# transfer learning
# ---------------------------------------------------------------------------

def transfer_init(target_spec: ArchSpec, source) -> CnnModel:
    """Clone a trained source model for fine-tuning on a new cell.

    ``source`` is a CnnModel or a model file path.  The architectures must
    match exactly; every parameter is copied bit-for-bit, then the dense
    and final layers are frozen so that training updates only the
    convolutional front end.
    """
    if not isinstance(source, CnnModel):
        source = load_model(source)
    if source.spec != target_spec:
        raise SpecMismatchError(
            f"source spec {source.spec} does not match target spec {target_spec}")
    params = []
    for p in source.params:
        params.append(type(p)(name=p.name, weights=p.weights.copy(),
                              biases=p.biases.copy(),
                              trainable=p.name.startswith("conv")))
    return CnnModel(spec=target_spec, params=params, norm_stats=source.norm_stats,
                    creation_seed=source.creation_seed)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass
class MetricsReport:
    """Per-(cycle, temperature) MAE/MAX/MSE plus the pooled aggregate."""

    rows: list                   # (cycle_id, temp_c, mae_pct, max_pct, mse)
    aggregate: tuple             # (mae_pct, max_pct, mse)

    def to_csv_text(self) -> str:
        lines = ["cycle,temp_c,mae_pct,max_pct,mse"]
        for cycle_id, temp, m, x, s in self.rows:
            lines.append(f"{cycle_id},{temp:g},{m!r},{x!r},{s!r}")
        m, x, s = self.aggregate
        lines.append(f"ALL,,{m!r},{x!r},{s!r}")
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv_text())


def evaluate(model: CnnModel, windows: SplitWindows, batch_size=1024) -> MetricsReport:
    """Deterministic inference-mode metrics, grouped by (cycle, temperature)."""
    if windows.n == 0:
        warnings.warn("evaluate called on an empty window set", stacklevel=2)
        return MetricsReport(rows=[], aggregate=(np.nan, np.nan, np.nan))
    pred = _batched_predictions(model, windows.features, batch_size)
    rows = []
    for gi, (cycle_id, temp) in enumerate(windows.groups):
        mask = windows.group_index == gi
        if not mask.any():
            warnings.warn(f"no windows for group ({cycle_id}, {temp:g}); skipped",
                          stacklevel=2)
            continue
        p, y = pred[mask], windows.labels[mask]
        rows.append((cycle_id, temp, mae(p, y), max_err(p, y), mse_loss(p, y)[0]))
    aggregate = (mae(pred, windows.labels), max_err(pred, windows.labels),
                 mse_loss(pred, windows.labels)[0])
    return MetricsReport(rows=rows, aggregate=aggregate)
