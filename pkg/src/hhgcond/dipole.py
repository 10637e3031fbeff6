"""Dipole waveforms and the per-mode displacements they induce.

The mode shifts are the Fourier components of the dipole expectation value,

    chi_q = -i sqrt(q) kappa  int dt <d>(t) exp(i q omega t),

evaluated by trapezoidal quadrature over the sampled window, and the mode
phases are

    phi_q = q kappa^2  int dt1 int_{t2<t1} dt2 <d>(t1) <d>(t2) sin(q omega (t1 - t2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_KAPPA = 0.01
DEFAULT_CUTOFF = 9


@dataclass(frozen=True)
class DipoleWaveform:
    """Uniformly sampled <d>(t); sample n sits at ``t0 + n*dt``."""

    samples: np.ndarray
    t0: float = 0.0
    dt: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float).reshape(-1)
        if samples.size < 2:
            raise ValueError("a waveform needs at least 2 samples")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform samples must be finite")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def duration(self) -> float:
        return self.dt * (self.samples.size - 1)

    def __add__(self, other: "DipoleWaveform") -> "DipoleWaveform":
        self._check_same_grid(other)
        return DipoleWaveform(self.samples + other.samples, self.t0, self.dt, self.omega)

    def scaled(self, factor: float) -> "DipoleWaveform":
        return DipoleWaveform(self.samples * factor, self.t0, self.dt, self.omega)

    def _check_same_grid(self, other):
        if (self.samples.size, self.t0, self.dt, self.omega) != (
            other.samples.size, other.t0, other.dt, other.omega,
        ):
            raise ValueError("waveforms are sampled on different grids")


# -- synthetic generators --------------------------------------------------

@dataclass(frozen=True)
class Monochromatic:
    order: int
    amplitude: float = 1.0

    def components(self):
        return [(self.order, self.amplitude)]


@dataclass(frozen=True)
class HarmonicComb:
    lines: tuple[tuple[int, float], ...]

    def __init__(self, lines):
        object.__setattr__(self, "lines", tuple((int(q), float(a)) for q, a in lines))

    def components(self):
        return list(self.lines)


@dataclass(frozen=True)
class Enveloped:
    """Gaussian window ``exp(-(t-center)^2 / (2 width^2))`` applied to ``inner``."""

    inner: "Monochromatic | HarmonicComb"
    center: float
    width: float

    def components(self):
        return self.inner.components()


@dataclass(frozen=True)
class DipoleSpec:
    kind: Monochromatic | HarmonicComb | Enveloped
    cycles: int = 8
    samples_per_cycle: int = 64
    omega: float = 1.0

    def validate(self):
        if self.cycles < 1:
            raise ValueError(f"cycles must be >= 1, got {self.cycles}")
        orders = [q for q, _ in self.kind.components()]
        if not orders:
            raise ValueError("waveform has no spectral components")
        if min(orders) < 1:
            raise ValueError(f"harmonic orders must be >= 1, got {orders}")
        q_max = max(orders)
        if self.samples_per_cycle < 8 * q_max:
            raise ValueError(
                f"samples_per_cycle={self.samples_per_cycle} undersamples harmonic {q_max}: "
                f"need samples_per_cycle >= 8 * {q_max} = {8 * q_max}"
            )
        if isinstance(self.kind, Enveloped) and not self.kind.width > 0:
            raise ValueError("envelope width must be > 0")
        if not self.omega > 0:
            raise ValueError("omega must be > 0")


def synth_dipole(spec: DipoleSpec) -> DipoleWaveform:
    """Sample ``spec`` over exactly ``cycles`` fundamental periods, endpoints included."""
    spec.validate()
    n = spec.cycles * spec.samples_per_cycle
    dt = 2 * math.pi / (spec.omega * spec.samples_per_cycle)
    t = dt * np.arange(n + 1)
    d = np.zeros_like(t)
    for q, a in spec.kind.components():
        d += a * np.cos(q * spec.omega * t)
    if isinstance(spec.kind, Enveloped):
        d *= np.exp(-((t - spec.kind.center) ** 2) / (2 * spec.kind.width**2))
    return DipoleWaveform(d, 0.0, dt, spec.omega)


# -- shifts and phases -----------------------------------------------------

def _trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def _check_order(q: int):
    if int(q) != q or q < 1:
        raise ValueError(f"mode index q must be an integer >= 1, got {q}")


def fourier_component(w: DipoleWaveform, q: int) -> complex:
    """Trapezoidal estimate of int <d>(t) exp(i q omega t) dt over the window."""
    _check_order(q)
    w_t = _trapezoid_weights(w.samples.size, w.dt)
    return complex(np.sum(w_t * w.samples * np.exp(1j * q * w.omega * w.times)))


def mode_shift(w: DipoleWaveform, q: int, kappa: float = DEFAULT_KAPPA) -> complex:
    return -1j * math.sqrt(q) * kappa * fourier_component(w, q)


def _cumulative_trapezoid(y: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * dt * (y[1:] + y[:-1]))
    return out


def mode_phase(w: DipoleWaveform, q: int, kappa: float = DEFAULT_KAPPA) -> float:
    """Nested trapezoid for the ordered double integral, in O(n).

    sin(q w (t1 - t2)) is split into sin(q w t1) cos(q w t2) - cos(q w t1) sin(q w t2),
    so the inner integral reduces to two cumulative trapezoids.
    """
    _check_order(q)
    theta = q * w.omega * w.times
    d = w.samples
    inner = np.sin(theta) * _cumulative_trapezoid(d * np.cos(theta), w.dt) - np.cos(
        theta
    ) * _cumulative_trapezoid(d * np.sin(theta), w.dt)
    outer = np.sum(_trapezoid_weights(d.size, w.dt) * d * inner)
    return float(q * kappa**2 * outer)


@dataclass(frozen=True)
class ShiftTable:
    """Displacements chi_q and phases phi_q for q = 1..N (index q-1 in the arrays)."""

    shifts: np.ndarray
    phases: np.ndarray = field(default=None)
    kappa: float = DEFAULT_KAPPA
    omega: float = 1.0

    def __post_init__(self):
        shifts = np.array(self.shifts, dtype=complex).reshape(-1)
        if shifts.size < 1:
            raise ValueError("a shift table needs the fundamental entry q=1")
        phases = np.zeros(shifts.size) if self.phases is None else np.array(self.phases, dtype=float)
        if phases.shape != shifts.shape:
            raise ValueError("shifts and phases must have the same length")
        if not (np.all(np.isfinite(shifts)) and np.all(np.isfinite(phases))):
            raise ValueError("shift table entries must be finite")
        shifts.flags.writeable = False
        phases.flags.writeable = False
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "phases", phases)

    @property
    def N(self) -> int:
        return self.shifts.size

    def shift(self, q: int) -> complex:
        _check_order(q)
        return complex(self.shifts[q - 1])

    def phase(self, q: int) -> float:
        _check_order(q)
        return float(self.phases[q - 1])

    @property
    def chi1(self) -> complex:
        return complex(self.shifts[0])

    @property
    def harmonics(self) -> np.ndarray:
        return self.shifts[1:]

    @property
    def omega_factor(self) -> float:
        return decoherence_factor(self)

    @property
    def total_phase(self) -> float:
        return float(np.sum(self.phases))


def all_shifts(w: DipoleWaveform, N: int = DEFAULT_CUTOFF, kappa: float = DEFAULT_KAPPA) -> ShiftTable:
    if N < 2:
        raise ValueError(f"cutoff N must be >= 2 (at least one harmonic mode), got {N}")
    shifts = [mode_shift(w, q, kappa) for q in range(1, N + 1)]
    phases = [mode_phase(w, q, kappa) for q in range(1, N + 1)]
    return ShiftTable(np.array(shifts), np.array(phases), kappa, w.omega)


def decoherence_factor(t: ShiftTable) -> float:
    """Omega = sum_{q>=2} |chi_q|^2; the fundamental is excluded."""
    h = t.shifts[1:]
    return float(np.sum(h.real**2 + h.imag**2))


# -- file formats ----------------------------------------------------------

def load_waveform(path: str | Path, omega: float = 1.0, rtol: float = 1e-9) -> DipoleWaveform:
    """Read two-column ``time value`` text; '#' lines are comments."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected 2 columns, found {data.shape[1]}")
    t, d = data[:, 0], data[:, 1]
    if t.size < 2:
        raise ValueError(f"{path}: need at least 2 samples")
    steps = np.diff(t)
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not dt > 0 or np.max(np.abs(steps - dt)) > rtol * abs(dt):
        raise ValueError(f"{path}: time column is not uniformly spaced to relative {rtol:g}")
    return DipoleWaveform(d, float(t[0]), float(dt), omega)


def save_waveform(w: DipoleWaveform, path: str | Path):
    header = f"t0={w.t0!r} dt={w.dt!r} omega={w.omega!r}\ntime dipole"
    np.savetxt(path, np.column_stack([w.times, w.samples]), fmt="%.17e", header=header)


def format_shift_table(t: ShiftTable) -> str:
    lines = [f"kappa={t.kappa!r}", f"omega={t.omega!r}", f"N={t.N}"]
    for q in range(1, t.N + 1):
        chi = t.shift(q)
        lines.append(f"q={q} re={chi.real!r} im={chi.imag!r} phi={t.phase(q)!r}")
    return "\n".join(lines) + "\n"


def parse_shift_table(text: str) -> ShiftTable:
    header: dict[str, str] = {}
    records: dict[int, tuple[complex, float]] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = dict(item.split("=", 1) for item in line.split())
        if "q" in fields:
            records[int(fields["q"])] = (complex(float(fields["re"]), float(fields["im"])), float(fields["phi"]))
        else:
            header.update(fields)
    n = int(header.get("N", len(records)))
    if sorted(records) != list(range(1, n + 1)):
        raise ValueError(f"shift table records must cover q=1..{n}, got {sorted(records)}")
    shifts = [records[q][0] for q in range(1, n + 1)]
    phases = [records[q][1] for q in range(1, n + 1)]
    return ShiftTable(shifts, phases, float(header.get("kappa", DEFAULT_KAPPA)), float(header.get("omega", 1.0)))


def table_from_shifts(chis: Sequence[complex], phases: Sequence[float] | None = None, kappa: float = DEFAULT_KAPPA) -> ShiftTable:
    """Build a table directly from chosen chi_q (q = 1..N), bypassing any waveform."""
    return ShiftTable(np.asarray(chis, dtype=complex), phases, kappa)
