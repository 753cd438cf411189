"""Drive-cycle ingestion and the windowed-dataset pipeline.

A recorded drive cycle is a uniformly sampled series of (voltage, current,
temperature) with a state-of-charge label per sample.  This module loads
cycle CSVs, derives SoC labels by coulomb counting when a file does not
carry them, downsamples, z-score normalizes (statistics fitted on the
training split only), injects one of two additive noise models, slices the
series into fixed-width windows labeled at their final timestep, and
assembles full train/val/test recipes for the supported datasets.

Conventions: discharge current is positive (a per-dataset sign flag fixes
files that store it the other way), SoC is a fraction in [0, 1], and all
randomness flows through an explicit Rng so a recipe is reproducible from
its seed.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .numerics import Rng

REQUIRED_COLUMNS = ("time_s", "voltage_v", "current_a", "temp_c")
CHANNEL_NAMES = ("voltage_v", "current_a", "temp_c")
NOISE_KINDS = ("none", "a", "b")

NOISE_A_STD = 0.1  # additive Gaussian with variance 0.01 per channel

# Relative tolerance on sample spacing before a cycle is rejected as
# non-uniform.
_DT_RTOL = 0.01

# Stream indices for seeds derived from a recipe's master Rng.  Cycle noise
# streams start above these so adding a knob never reshuffles cycle noise.
_SUBSAMPLE_STREAM = 0
_CYCLE_STREAM_BASE = 16


class MissingCyclesError(Exception):
    """Requested cycle files that do not exist, listed by path."""

    def __init__(self, missing):
        self.missing = [str(m) for m in missing]
        super().__init__("missing cycle files: " + ", ".join(self.missing))


# ---------------------------------------------------------------------------
# core types
# ---------------------------------------------------------------------------

@dataclass
class DriveCycle:
    """One uniformly sampled discharge recording with SoC labels."""

    cycle_id: str
    ambient_c: float
    sampling_hz: float
    time_s: np.ndarray
    voltage_v: np.ndarray
    current_a: np.ndarray
    temp_c: np.ndarray
    soc: np.ndarray

    def __post_init__(self):
        arrays = [self.time_s, self.voltage_v, self.current_a, self.temp_c, self.soc]
        n = len(self.time_s)
        if n < 1:
            raise ValueError(f"{self.cycle_id}: empty cycle")
        if any(len(a) != n for a in arrays):
            raise ValueError(f"{self.cycle_id}: column lengths differ")
        if any(not np.all(np.isfinite(a)) for a in arrays):
            raise ValueError(f"{self.cycle_id}: non-finite values")
        if n > 1 and np.any(np.diff(self.time_s) <= 0):
            raise ValueError(f"{self.cycle_id}: time must be strictly increasing")
        if self.sampling_hz <= 0:
            raise ValueError(f"{self.cycle_id}: sampling_hz must be positive")
        if n > 1:
            dt = np.diff(self.time_s)
            nominal = 1.0 / self.sampling_hz
            if np.max(np.abs(dt - nominal)) > _DT_RTOL * nominal:
                raise ValueError(
                    f"{self.cycle_id}: sample spacing deviates from {nominal} s by more than {_DT_RTOL:.0%}")
        if np.any(self.soc < 0.0) or np.any(self.soc > 1.0):
            raise ValueError(f"{self.cycle_id}: soc outside [0, 1]")

    @property
    def n(self) -> int:
        return len(self.time_s)

    @property
    def dt(self) -> float:
        return 1.0 / self.sampling_hz

    def features(self) -> np.ndarray:
        """The (n, 3) stack of (V, I, T) in channel order."""
        return np.stack([self.voltage_v, self.current_a, self.temp_c], axis=1)

    def with_features(self, feats: np.ndarray) -> "DriveCycle":
        """Same cycle with the three feature channels replaced; labels shared."""
        feats = np.asarray(feats, dtype=np.float64)
        if feats.shape != (self.n, 3):
            raise ValueError(f"features must be ({self.n}, 3), got {feats.shape}")
        return replace(self, voltage_v=feats[:, 0].copy(),
                       current_a=feats[:, 1].copy(), temp_c=feats[:, 2].copy())


@dataclass
class NormStats:
    """Per-channel z-score statistics for (V, I, T), fitted on training data."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(3)
        self.std = np.asarray(self.std, dtype=np.float64).reshape(3)
        if np.any(self.std <= 0) or not np.all(np.isfinite(self.std)):
            raise ValueError("channel std must be positive and finite")

    def as_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(mean=np.array(d["mean"]), std=np.array(d["std"]))


@dataclass
class CycleWindows:
    """All windows from one cycle: features (L, t_w, 3), labels (L,)."""

    cycle_id: str
    ambient_c: float
    features: np.ndarray
    labels: np.ndarray


@dataclass
class SplitWindows:
    """One split's windows pooled across cycles, grouped for per-cycle metrics."""

    features: np.ndarray          # (N, t_w, 3)
    labels: np.ndarray            # (N,)
    group_index: np.ndarray       # (N,) index into groups
    groups: list                  # [(cycle_id, ambient_c), ...]

    @property
    def n(self) -> int:
        return len(self.labels)


# ---------------------------------------------------------------------------
# loading / labels
# ---------------------------------------------------------------------------

def derive_soc(current_a, dt_s, capacity_ah, soc0=1.0):
    """SoC by coulomb counting: soc_k = soc0 - sum_{j<=k} I_j*dt / (3600*C).

    Discharge current is positive, so soc decreases while current flows.
    Values that integrate outside [0, 1] are clamped with a warning.
    """
    if capacity_ah <= 0:
        raise ValueError(f"capacity must be positive, got {capacity_ah}")
    if not 0.0 <= soc0 <= 1.0:
        raise ValueError(f"soc0 must be in [0, 1], got {soc0}")
    current = np.asarray(current_a, dtype=np.float64)
    soc = soc0 - np.cumsum(current * dt_s) / (3600.0 * capacity_ah)
    if np.any(soc < 0.0) or np.any(soc > 1.0):
        warnings.warn(f"coulomb-counted soc left [0, 1] (min {soc.min():.4f}, "
                      f"max {soc.max():.4f}); clamping", stacklevel=2)
        soc = np.clip(soc, 0.0, 1.0)
    return soc


def load_cycle(path, cycle_id=None, ambient_c=0.0, sampling_hz=None,
               capacity_ah=None, current_sign=1.0) -> DriveCycle:
    """Read one cycle CSV into a validated DriveCycle.

    The file must have a header with at least time_s, voltage_v, current_a,
    temp_c.  Labels come from a soc column when present; otherwise from an
    ah_discharged column via soc = 1 - ah/capacity.  current_sign (+1/-1)
    converts the file's convention to discharge-positive.  sampling_hz is
    inferred from the median time spacing when not given.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ValueError(f"{path}: missing required columns {missing}")
        idx = {name: header.index(name) for name in header}
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")

    def col(name):
        j = idx[name]
        return np.array([float(r[j]) for r in rows])

    time_s = col("time_s")
    current = current_sign * col("current_a")
    if sampling_hz is None:
        if len(time_s) < 2:
            raise ValueError(f"{path}: cannot infer sampling rate from one row")
        sampling_hz = 1.0 / float(np.median(np.diff(time_s)))

    if "soc" in idx:
        soc = col("soc")
    elif "ah_discharged" in idx:
        if capacity_ah is None:
            raise ValueError(f"{path}: ah_discharged labels need a capacity")
        soc = 1.0 - col("ah_discharged") / capacity_ah
        if np.any(soc < 0.0) or np.any(soc > 1.0):
            warnings.warn(f"{path}: ah-derived soc outside [0, 1]; clamping", stacklevel=2)
            soc = np.clip(soc, 0.0, 1.0)
    else:
        raise ValueError(f"{path}: needs a soc or ah_discharged column for labels")

    return DriveCycle(
        cycle_id=cycle_id if cycle_id is not None else path.stem,
        ambient_c=ambient_c,
        sampling_hz=sampling_hz,
        time_s=time_s,
        voltage_v=col("voltage_v"),
        current_a=current,
        temp_c=col("temp_c"),
        soc=soc,
    )


def save_cycle(cycle: DriveCycle, path) -> None:
    """Write a cycle CSV (with soc column) that load_cycle reads back exactly.

    Floats are written with repr, so every value round-trips bit-exactly.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "voltage_v", "current_a", "temp_c", "soc"])
        for k in range(cycle.n):
            writer.writerow([repr(float(v)) for v in
                             (cycle.time_s[k], cycle.voltage_v[k], cycle.current_a[k],
                              cycle.temp_c[k], cycle.soc[k])])


def downsample(cycle: DriveCycle, factor: int) -> DriveCycle:
    """Decimate: keep every factor-th sample starting at index 0."""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"downsample factor must be a positive integer, got {factor}")
    factor = int(factor)
    if factor == 1:
        return cycle
    if cycle.n < 1 or len(cycle.time_s[::factor]) < 1:
        raise ValueError(f"{cycle.cycle_id}: downsampling by {factor} leaves nothing")
    return replace(
        cycle,
        sampling_hz=cycle.sampling_hz / factor,
        time_s=cycle.time_s[::factor].copy(),
        voltage_v=cycle.voltage_v[::factor].copy(),
        current_a=cycle.current_a[::factor].copy(),
        temp_c=cycle.temp_c[::factor].copy(),
        soc=cycle.soc[::factor].copy(),
    )


# ---------------------------------------------------------------------------
# normalization and noise
# ---------------------------------------------------------------------------

def fit_norm(train_cycles) -> NormStats:
    """Per-channel mean/std over every sample of every training cycle."""
    if not train_cycles:
        raise ValueError("cannot fit normalization on an empty training split")
    feats = np.concatenate([c.features() for c in train_cycles], axis=0)
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    for ch, m, s in zip(CHANNEL_NAMES, mean, std):
        # a numerically constant channel shows up as std ~ eps*|mean|, not 0
        if s <= 1e-12 * max(1.0, abs(m)):
            raise ValueError(f"zero-variance channel {ch!r}: cannot z-score")
    return NormStats(mean=mean, std=std)


def apply_norm(cycle: DriveCycle, stats: NormStats) -> DriveCycle:
    return cycle.with_features((cycle.features() - stats.mean) / stats.std)


def inject_noise_a(cycle: DriveCycle, rng: Rng) -> DriveCycle:
    """Add independent N(0, 0.01) (variance 0.01) noise to each channel.

    Meant for already-normalized cycles; labels pass through untouched.
    """
    feats = cycle.features()
    for c in range(3):
        feats[:, c] += rng.gaussian(0.0, NOISE_A_STD, cycle.n)
    return cycle.with_features(feats)


def noise_b_sequence(n: int, rng: Rng) -> np.ndarray:
    """One channel's bounded non-Gaussian noise sequence of length n.

    Per sequence: z0, z1 ~ U(1, 10), eta ~ U(1, 5), then x_t ~ N(z0, z1)
    (z1 is a variance).  The phase follows a_t = sin(a_{t-1}*eta +
    tanh(x_t)) from a_0 = 0, and the noise is eps_t = 1/(1 + exp(0.3*a_t)).
    a_0 = 0 makes eps_0 exactly 0.5; since sin keeps a in [-1, 1], every
    value lies in [1/(1+e^0.3), 1/(1+e^-0.3)] ~ [0.4256, 0.5744].  One x is
    drawn per timestep (the t=0 draw is unused) so the stream advances
    uniformly with n.
    """
    if n < 1:
        raise ValueError("sequence length must be >= 1")
    z0 = rng.uniform(1.0, 10.0, 1)[0]
    z1 = rng.uniform(1.0, 10.0, 1)[0]
    eta = rng.uniform(1.0, 5.0, 1)[0]
    x = rng.gaussian(z0, np.sqrt(z1), n)
    tanh_x = np.tanh(x)
    a = np.empty(n)
    a[0] = 0.0
    for t in range(1, n):
        a[t] = np.sin(a[t - 1] * eta + tanh_x[t])
    return 1.0 / (1.0 + np.exp(0.3 * a))


def inject_noise_b(cycle: DriveCycle, rng: Rng) -> DriveCycle:
    """Add an independent sigmoid-of-sine noise sequence to each channel."""
    feats = cycle.features()
    for c in range(3):
        feats[:, c] += noise_b_sequence(cycle.n, rng)
    return cycle.with_features(feats)


_NOISE_INJECTORS = {"none": None, "a": inject_noise_a, "b": inject_noise_b}


# ---------------------------------------------------------------------------
# windowing
# ---------------------------------------------------------------------------

def make_windows(cycle: DriveCycle, t_w: int) -> CycleWindows:
    """Slice a cycle into all L = n - t_w + 1 windows labeled at their end.

    A cycle shorter than t_w yields zero windows with a warning — at coarse
    sampling rates some recordings simply cannot fill a window.
    """
    if t_w < 1:
        raise ValueError(f"t_w must be >= 1, got {t_w}")
    if cycle.n < t_w:
        warnings.warn(f"{cycle.cycle_id} ({cycle.ambient_c:g}C): {cycle.n} samples "
                      f"< t_w={t_w}, no windows produced", stacklevel=2)
        return CycleWindows(cycle.cycle_id, cycle.ambient_c,
                            np.empty((0, t_w, 3)), np.empty((0,)))
    feats = cycle.features()
    wins = np.lib.stride_tricks.sliding_window_view(feats, t_w, axis=0)
    return CycleWindows(cycle.cycle_id, cycle.ambient_c,
                        np.ascontiguousarray(wins.transpose(0, 2, 1)),
                        cycle.soc[t_w - 1:].copy())


def _pool_windows(per_cycle) -> SplitWindows:
    groups, chunks, labels, gidx = [], [], [], []
    for cw in per_cycle:
        if len(cw.labels) == 0:
            continue
        groups.append((cw.cycle_id, cw.ambient_c))
        chunks.append(cw.features)
        labels.append(cw.labels)
        gidx.append(np.full(len(cw.labels), len(groups) - 1, dtype=np.int64))
    if not chunks:
        t_w = per_cycle[0].features.shape[1] if per_cycle else 0
        return SplitWindows(np.empty((0, t_w, 3)), np.empty((0,)),
                            np.empty((0,), dtype=np.int64), [])
    return SplitWindows(np.concatenate(chunks), np.concatenate(labels),
                        np.concatenate(gidx), groups)


# ---------------------------------------------------------------------------
# dataset manifests and recipes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetManifest:
    """Where a dataset lives and which cycles/temperatures form each split."""

    dataset: str
    root: str
    capacity_ah: float
    current_sign: float
    native_hz: float
    temps_c: tuple
    train_cycles: tuple
    val_cycles: tuple
    test_cycles: tuple

    def cycle_path(self, cycle_id, temp_c) -> Path:
        return Path(self.root) / self.dataset / f"{int(temp_c)}" / f"{cycle_id}.csv"


_FIVE_TEMPS = (-20, -10, 0, 10, 25)

_MANIFEST_DEFAULTS = {
    "panasonic": dict(capacity_ah=2.9, current_sign=-1.0, native_hz=10.0,
                      temps_c=_FIVE_TEMPS,
                      train_cycles=("Cycle1", "Cycle2", "Cycle3", "Cycle4", "UDDS"),
                      val_cycles=("LA92",), test_cycles=("US06", "HWFET")),
    "lg": dict(capacity_ah=3.0, current_sign=-1.0, native_hz=10.0,
               temps_c=_FIVE_TEMPS,
               train_cycles=("Mixed1", "Mixed2", "Mixed3", "Mixed4", "Mixed5",
                             "Mixed6", "Mixed7", "Mixed8", "UDDS"),
               val_cycles=("LA92",), test_cycles=("US06", "HWFET")),
    "synthA": dict(capacity_ah=2.9, current_sign=1.0, native_hz=1.0,
                   temps_c=(10, 25),
                   train_cycles=("Mixed1", "Mixed2", "UDDS"),
                   val_cycles=("LA92",), test_cycles=("US06", "HWFET")),
    "synthB": dict(capacity_ah=3.0, current_sign=1.0, native_hz=1.0,
                   temps_c=(10, 25),
                   train_cycles=("Mixed1", "Mixed2", "UDDS"),
                   val_cycles=("LA92",), test_cycles=("US06", "HWFET")),
}

DATASET_KINDS = tuple(_MANIFEST_DEFAULTS)


def default_manifest(dataset: str, root) -> DatasetManifest:
    if dataset not in _MANIFEST_DEFAULTS:
        raise ValueError(f"unknown dataset {dataset!r}; choose from {DATASET_KINDS}")
    return DatasetManifest(dataset=dataset, root=str(root), **_MANIFEST_DEFAULTS[dataset])


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"dataset={manifest.dataset}",
        f"root={manifest.root}",
        f"capacity_ah={manifest.capacity_ah!r}",
        f"current_sign={manifest.current_sign!r}",
        f"native_hz={manifest.native_hz!r}",
        "temps_c=" + ",".join(str(int(t)) for t in manifest.temps_c),
        "train_cycles=" + ",".join(manifest.train_cycles),
        "val_cycles=" + ",".join(manifest.val_cycles),
        "test_cycles=" + ",".join(manifest.test_cycles),
    ]
    path.write_text("\n".join(lines) + "\n")


def parse_manifest(path) -> DatasetManifest:
    """Read the plain-text key=value manifest written by write_manifest."""
    fields = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()
    try:
        return DatasetManifest(
            dataset=fields["dataset"],
            root=fields["root"],
            capacity_ah=float(fields["capacity_ah"]),
            current_sign=float(fields["current_sign"]),
            native_hz=float(fields["native_hz"]),
            temps_c=tuple(int(t) for t in fields["temps_c"].split(",") if t),
            train_cycles=tuple(c for c in fields["train_cycles"].split(",") if c),
            val_cycles=tuple(c for c in fields["val_cycles"].split(",") if c),
            test_cycles=tuple(c for c in fields["test_cycles"].split(",") if c),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: manifest missing field {exc}") from exc


def subsample_cycles(entries, keep_prob, rng: Rng):
    """Keep each entry independently with probability keep_prob.

    Returns (kept entries, retry count): an all-dropped draw is retried with
    fresh randomness so the result is never empty.
    """
    if not 0.0 < keep_prob <= 1.0:
        raise ValueError(f"keep_prob must be in (0, 1], got {keep_prob}")
    entries = list(entries)
    if not entries:
        return [], 0
    retries = 0
    while True:
        keep = rng.bernoulli(keep_prob, len(entries))
        if keep.any():
            return [e for e, k in zip(entries, keep) if k], retries
        retries += 1
        if retries > 1000:
            raise RuntimeError("subsampling kept nothing in 1000 attempts")


@dataclass
class RecipeSplit:
    """A materialized experiment recipe: windows per split plus provenance."""

    stats: NormStats
    splits: dict                 # split name -> SplitWindows
    files: dict                  # split name -> [(cycle_id, temp_c), ...]
    noise: str
    sampling_hz: float
    t_w: int
    train_kept: list | None = None
    subsample_retries: int = 0

    @property
    def train(self) -> SplitWindows:
        return self.splits["train"]

    @property
    def val(self) -> SplitWindows:
        return self.splits["val"]

    @property
    def test(self) -> SplitWindows:
        return self.splits["test"]


def _downsample_factor(native_hz, sampling_hz) -> int:
    factor = native_hz / sampling_hz
    if factor < 1.0 - 1e-9:
        raise ValueError(f"cannot resample {native_hz} Hz data up to {sampling_hz} Hz")
    if abs(factor - round(factor)) > 1e-9:
        raise ValueError(f"sampling rate {sampling_hz} Hz is not an integer "
                         f"decimation of the native {native_hz} Hz")
    return int(round(factor))


def assemble_recipe(manifest: DatasetManifest, sampling_hz, t_w, noise, rng: Rng,
                    parts=("train", "val", "test"), stats: NormStats | None = None,
                    train_keep_prob=None) -> RecipeSplit:
    """Build the windowed train/val/test sets for one experiment.

    Steps, per split: locate cycle files (all missing ones reported at
    once), load with the manifest's capacity and current-sign convention,
    decimate to sampling_hz, normalize with train-split statistics (or the
    caller's ``stats`` when assembling evaluation-only parts), inject the
    configured noise with a per-cycle seed derived from ``rng``, and window
    at width t_w.  Cycles are processed in name-sorted order and derived
    seeds depend only on a cycle's position in the full recipe listing, so
    results are reproducible and unaffected by which parts are requested.
    ``train_keep_prob`` subsamples the train cycle list (transfer-learning
    data-reduction experiments); the kept list is recorded in the result.
    """
    if noise not in NOISE_KINDS:
        raise ValueError(f"noise must be one of {NOISE_KINDS}, got {noise!r}")
    for part in parts:
        if part not in ("train", "val", "test"):
            raise ValueError(f"unknown recipe part {part!r}")
    factor = _downsample_factor(manifest.native_hz, sampling_hz)

    split_cycles = {"train": manifest.train_cycles, "val": manifest.val_cycles,
                    "test": manifest.test_cycles}
    # One global, name-sorted enumeration of every (split, cycle, temp) entry;
    # entry index -> derived noise seed, stable across parts/subsampling.
    entries = []
    for part in ("train", "val", "test"):
        for cycle_id in sorted(split_cycles[part]):
            for temp in manifest.temps_c:
                entries.append((part, cycle_id, temp))
    streams = {e: _CYCLE_STREAM_BASE + i for i, e in enumerate(entries)}

    wanted = {part: [e for e in entries if e[0] == part] for part in parts}
    train_kept = None
    retries = 0
    if train_keep_prob is not None and "train" in wanted:
        sub_rng = Rng(rng.derive(_SUBSAMPLE_STREAM))
        wanted["train"], retries = subsample_cycles(wanted["train"], train_keep_prob, sub_rng)
        train_kept = [(c, t) for _, c, t in wanted["train"]]

    missing = [manifest.cycle_path(c, t) for part in parts
               for _, c, t in wanted[part] if not manifest.cycle_path(c, t).exists()]
    if missing:
        raise MissingCyclesError(missing)

    def prepared(entry):
        _, cycle_id, temp = entry
        cycle = load_cycle(manifest.cycle_path(cycle_id, temp), cycle_id=cycle_id,
                           ambient_c=temp, sampling_hz=manifest.native_hz,
                           capacity_ah=manifest.capacity_ah,
                           current_sign=manifest.current_sign)
        return downsample(cycle, factor)

    cycles = {part: [prepared(e) for e in wanted[part]] for part in parts}

    if stats is None:
        if "train" not in parts:
            raise ValueError("need explicit NormStats when assembling without a train part")
        stats = fit_norm(cycles["train"])

    injector = _NOISE_INJECTORS[noise]
    splits, files = {}, {}
    for part in parts:
        per_cycle = []
        for entry, cycle in zip(wanted[part], cycles[part]):
            cycle = apply_norm(cycle, stats)
            if injector is not None:
                cycle = injector(cycle, Rng(rng.derive(streams[entry])))
            per_cycle.append(make_windows(cycle, t_w))
        splits[part] = _pool_windows(per_cycle)
        files[part] = [(c, t) for _, c, t in wanted[part]]

    return RecipeSplit(stats=stats, splits=splits, files=files, noise=noise,
                       sampling_hz=float(sampling_hz), t_w=int(t_w),
                       train_kept=train_kept, subsample_retries=retries)
