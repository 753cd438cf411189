"""Synthetic drive-cycle generator.

Produces desk-scale battery datasets with the same CSV layout as the real
ones, so the whole pipeline — training, evaluation, and cross-cell transfer
— can be exercised without multi-gigabyte downloads.  The cell is a
zero-order equivalent circuit: terminal voltage = OCV(soc) - I*R with a
strictly increasing polynomial OCV curve, SoC by exact coulomb counting
from full charge, and a stochastic discharge current built from a few
sinusoids plus uniform jitter.  No electrochemical fidelity is claimed;
the point is a learnable (V, I, T) -> SoC structure and a controllable
distribution shift between the two built-in presets.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .data import DriveCycle, default_manifest, derive_soc, save_cycle
from .numerics import Rng

# Discharge never drains below this soc; current is cut to zero instead so
# labels stay comfortably inside [0, 1].
SOC_FLOOR = 0.02


@dataclass(frozen=True)
class SynthCellSpec:
    """Parameters of one synthetic cell and its stochastic load profile.

    ocv_coeffs are ascending polynomial coefficients mapping soc in [0, 1]
    to volts; the curve must be strictly increasing.  The load current (A,
    discharge-positive) is offset + sum of sinusoids + uniform jitter,
    clipped at zero.  Temperature ramps linearly from its base.
    """

    capacity_ah: float = 2.9
    resistance_ohm: float = 0.030
    ocv_coeffs: tuple = (3.0, 1.0, -0.45, 0.65)
    temp_base_c: float = 25.0
    temp_drift_c_per_hr: float = 2.0
    current_offset_a: float = 2.2
    current_amps: tuple = (1.2, 0.8, 0.5)
    current_freqs_hz: tuple = (1 / 50.0, 1 / 123.0, 1 / 301.0)
    current_jitter_a: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.capacity_ah <= 0:
            raise ValueError(f"capacity must be positive, got {self.capacity_ah}")
        if self.resistance_ohm < 0:
            raise ValueError(f"resistance must be >= 0, got {self.resistance_ohm}")
        if self.current_jitter_a < 0:
            raise ValueError("current jitter must be >= 0")
        if len(self.current_amps) != len(self.current_freqs_hz):
            raise ValueError("current_amps and current_freqs_hz lengths differ")
        grid = np.linspace(0.0, 1.0, 1001)
        if np.any(np.diff(self.ocv(grid)) <= 0):
            raise ValueError("ocv_coeffs must be strictly increasing on [0, 1]")

    def ocv(self, soc):
        return npoly.polyval(np.asarray(soc), self.ocv_coeffs)


def synth_generate(spec: SynthCellSpec, duration_s, sampling_hz,
                   cycle_id="synth", ambient_c=None) -> DriveCycle:
    """Simulate one discharge recording.

    The SoC series is literally derive_soc applied to the generated current,
    so labels are bit-consistent with coulomb counting by construction.  If
    the stochastic load would drain the cell below SOC_FLOOR, the current is
    zeroed from that point on (the cell is "disconnected").
    """
    n = int(round(duration_s * sampling_hz))
    if n < 1:
        raise ValueError(f"duration {duration_s} s at {sampling_hz} Hz yields no samples")
    dt = 1.0 / sampling_hz
    rng = Rng(spec.seed)
    t = np.arange(n) * dt

    current = np.full(n, spec.current_offset_a)
    phases = rng.uniform(0.0, 2.0 * np.pi, len(spec.current_amps)) \
        if spec.current_amps else np.empty(0)
    for amp, freq, phase in zip(spec.current_amps, spec.current_freqs_hz, phases):
        current += amp * np.sin(2.0 * np.pi * freq * t + phase)
    if spec.current_jitter_a > 0:
        current += spec.current_jitter_a * (2.0 * rng.uniform01(n) - 1.0)
    current = np.maximum(current, 0.0)

    # Cut the load once the integrated draw would pass the soc floor.
    budget_ah = (1.0 - SOC_FLOOR) * spec.capacity_ah * 3600.0
    drawn = np.cumsum(current * dt)
    over = np.nonzero(drawn > budget_ah)[0]
    if len(over):
        current[over[0]:] = 0.0

    soc = derive_soc(current, dt, spec.capacity_ah, soc0=1.0)
    base = spec.temp_base_c if ambient_c is None else ambient_c
    temp = base + spec.temp_drift_c_per_hr * t / 3600.0
    voltage = spec.ocv(soc) - current * spec.resistance_ohm

    return DriveCycle(cycle_id=cycle_id, ambient_c=base, sampling_hz=sampling_hz,
                      time_s=t, voltage_v=voltage, current_a=current,
                      temp_c=temp, soc=soc)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

PRESETS = {
    # Plays the "source chemistry" role: lower OCV knee, low resistance.
    "synthA": SynthCellSpec(capacity_ah=2.9, resistance_ohm=0.030,
                            ocv_coeffs=(3.0, 1.0, -0.45, 0.65)),
    # Target chemistry: same feature space, shifted voltage marginal.
    "synthB": SynthCellSpec(capacity_ah=3.0, resistance_ohm=0.080,
                            ocv_coeffs=(3.15, 0.35, 0.25, 0.35)),
}

# Per-cycle flavor: scales on the mean load and sinusoid frequencies so the
# named cycles differ systematically, the way real drive schedules do.
CYCLE_STYLES = {
    "Mixed1": (1.00, 1.00),
    "Mixed2": (1.10, 1.30),
    "UDDS": (0.90, 0.80),
    "LA92": (1.05, 1.15),
    "US06": (1.20, 1.50),
    "HWFET": (0.80, 0.60),
}


def preset_cycle_spec(preset: str, cycle_id: str, seed: int) -> SynthCellSpec:
    """The cell spec for one named cycle of a preset dataset."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {tuple(PRESETS)}")
    if cycle_id not in CYCLE_STYLES:
        raise ValueError(f"unknown cycle {cycle_id!r}; choose from {tuple(CYCLE_STYLES)}")
    base = PRESETS[preset]
    offset_scale, freq_scale = CYCLE_STYLES[cycle_id]
    return dataclasses.replace(
        base,
        current_offset_a=base.current_offset_a * offset_scale,
        current_freqs_hz=tuple(f * freq_scale for f in base.current_freqs_hz),
        seed=seed,
    )


def generate_dataset(preset: str, root, duration_s=3600.0, seed=0):
    """Write a preset's full cycle set as CSVs under root/<preset>/<temp>/.

    Covers every (cycle, temperature) the recipe for that preset expects.
    Each file gets its own derived seed, so cycles differ from each other
    but the whole dataset is reproducible from one seed.  Returns the list
    of written paths.
    """
    manifest = default_manifest(preset, root)
    master = Rng(seed)
    entries = []
    for split_cycles in (manifest.train_cycles, manifest.val_cycles, manifest.test_cycles):
        for cycle_id in sorted(split_cycles):
            for temp in manifest.temps_c:
                entries.append((cycle_id, temp))

    written = []
    for i, (cycle_id, temp) in enumerate(entries):
        spec = preset_cycle_spec(preset, cycle_id, seed=master.derive(i))
        cycle = synth_generate(spec, duration_s, manifest.native_hz,
                               cycle_id=cycle_id, ambient_c=float(temp))
        path = manifest.cycle_path(cycle_id, temp)
        save_cycle(cycle, path)
        written.append(path)
    return written
