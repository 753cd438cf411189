"""Deterministic random numbers and shape-checked array arithmetic.

All numeric state in this package lives in float64 numpy arrays (row-major,
C order).  What numpy does not give us in a portable, bit-reproducible form
is the random stream: numpy's generators are free to change their algorithms
between versions.  ``Rng`` below is a counter-based splitmix64 generator
whose output depends only on (seed, number of values drawn so far), so any
seeded computation replays identically on every platform and numpy version.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15  # splitmix64 counter increment
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_DERIVE_GAMMA = 0xD1B54A32D192ED03  # separate stream for child seeds

_INV_2_53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a python int, reduced mod 2**64."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


class Rng:
    """Counter-based splitmix64 random generator.

    Draw k (0-based, counting every 64-bit word ever produced) is
    ``mix64(seed + (k+1) * GAMMA)``, i.e. the standard splitmix64 sequence,
    evaluated here in vectorized form over a numpy uint64 counter array.
    State is exactly ``(seed, counter)`` and serializes via ``state``.

    Instances are single-threaded; for parallel work derive independent
    children with ``derive(index)``.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK
        self._counter = int(counter)

    # -- state -------------------------------------------------------------

    @property
    def state(self) -> dict:
        return {"seed": self.seed, "counter": self._counter}

    @classmethod
    def from_state(cls, state: dict) -> "Rng":
        return cls(state["seed"], state["counter"])

    def derive(self, index: int) -> int:
        """Seed for an independent child stream ``index``.

        Pure function of (seed, index); does not consume the parent stream.
        Distinct indices give unrelated child seeds, so components can be
        given their own Rng(seed.derive(i)) without coordinating draws.
        """
        return mix64((self.seed + (int(index) + 1) * _DERIVE_GAMMA) & _MASK)

    # -- raw stream --------------------------------------------------------

    def _raw(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        start = (self.seed + (self._counter + 1) * _GAMMA) & _MASK
        z = np.uint64(start) + np.arange(n, dtype=np.uint64) * np.uint64(_GAMMA)
        z ^= z >> np.uint64(30)
        z *= np.uint64(_MIX1)
        z ^= z >> np.uint64(27)
        z *= np.uint64(_MIX2)
        z ^= z >> np.uint64(31)
        self._counter += n
        return z

    # -- distributions -----------------------------------------------------

    def uniform01(self, n: int) -> np.ndarray:
        """n i.i.d. draws from [0, 1) with 53-bit resolution."""
        return (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def uniform(self, lo: float, hi: float, n: int) -> np.ndarray:
        """n i.i.d. draws from [lo, hi)."""
        if lo > hi:
            raise ValueError(f"uniform bounds out of order: lo={lo} > hi={hi}")
        return lo + self.uniform01(n) * (hi - lo)

    def gaussian(self, mean: float, std: float, n: int) -> np.ndarray:
        """n i.i.d. normal draws via Box-Muller on the uniform stream.

        Always consumes 2*ceil(n/2) raw words so the stream position does
        not depend on (mean, std); std=0 collapses to the constant mean.
        """
        if std < 0:
            raise ValueError(f"standard deviation must be >= 0, got {std}")
        m = (n + 1) // 2
        # u1 in (0, 1] keeps log() finite
        u1 = ((self._raw(m) >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (self._raw(m) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return mean + std * z

    def bernoulli(self, p: float, n: int) -> np.ndarray:
        """n independent boolean draws, True with probability p."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {p}")
        return self.uniform01(n) < p

    def permutation(self, n: int) -> np.ndarray:
        """Uniformly random permutation of range(n) (argsort of uniforms)."""
        return np.argsort(self.uniform01(n), kind="stable")


_ELEMENTWISE_OPS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}


def elementwise(op_kind: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise add/sub/mul with strict shape equality (no broadcasting)."""
    if op_kind not in _ELEMENTWISE_OPS:
        raise ValueError(f"unknown elementwise op {op_kind!r}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return _ELEMENTWISE_OPS[op_kind](a, b)
