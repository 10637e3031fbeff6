"""Wigner functions, fidelities, photon statistics and Schmidt spectra of CSS states."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import css, fock
from .css import CSSState
from .dipole import DipoleWaveform, all_shifts, decoherence_factor

log = logging.getLogger(__name__)

GRAM_FLOOR = 1e-14


# -- Wigner functions -------------------------------------------------------

@dataclass(frozen=True)
class PhaseGrid:
    """Square grid of phase-space points ``center + step*(i + 1j*j)``.

    ``values[i, j]`` belongs to Re offset ``(i - n) * step`` and Im offset
    ``(j - n) * step`` with ``n = round(radius / step)``.
    """

    center: complex
    radius: float
    step: float
    values: np.ndarray | None = None

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if self.radius < 3 * self.step:
            raise ValueError(f"radius {self.radius} is smaller than 3 steps ({3 * self.step})")
        if self.values is not None:
            v = np.asarray(self.values, dtype=float)
            if v.shape != (self.size, self.size):
                raise ValueError(f"values shape {v.shape} does not match grid size {self.size}")
            object.__setattr__(self, "values", v)

    @property
    def half_width(self) -> int:
        return int(round(self.radius / self.step))

    @property
    def size(self) -> int:
        return 2 * self.half_width + 1

    @property
    def axis(self) -> np.ndarray:
        return self.step * np.arange(-self.half_width, self.half_width + 1)

    def points(self) -> np.ndarray:
        x, y = np.meshgrid(self.center.real + self.axis, self.center.imag + self.axis, indexing="ij")
        return x + 1j * y

    def with_values(self, values) -> "PhaseGrid":
        return PhaseGrid(self.center, self.radius, self.step, values)


def wigner_at(s: CSSState, gammas) -> np.ndarray:
    """W(g) = (2/pi) <s| D(g) P D(g)^dag |s> at arbitrary points (P = parity).

    For a pair of terms with amplitudes b_j, b_k and u = b_j - g, v = b_k - g,
    the matrix element is exp(-|u|^2/2 - |v|^2/2 - conj(u) v + i Im(g conj(b_j - b_k))).
    Only differences of amplitudes enter, so large displacements stay accurate.
    """
    if s.n_modes != 1:
        raise ValueError(f"wigner needs a single-mode state, got {s.n_modes} modes; reduce or post-select first")
    g = np.asarray(gammas, dtype=complex)
    shape = g.shape
    g = g.reshape(-1)
    out = np.zeros(g.size)
    b = s.amps[:, 0]
    c = s.coeffs
    for j in range(s.n_terms):
        u = b[j] - g
        for k in range(s.n_terms):
            v = b[k] - g
            logm = (
                -0.5 * (np.abs(u) ** 2 + np.abs(v) ** 2)
                - np.conj(u) * v
                + 1j * (g * np.conj(b[j] - b[k])).imag
            )
            out += (np.conj(c[j]) * c[k] * css.safe_exp(logm)).real
    return (2.0 / np.pi) * out.reshape(shape)


def wigner(s: CSSState, grid: PhaseGrid) -> PhaseGrid:
    return grid.with_values(wigner_at(s, grid.points()))


def wigner_fock(v: fock.FockVector, gammas, pad: int = 96) -> np.ndarray:
    """Oracle Wigner function: (2/pi) sum_n (-1)^n |<n| D(g)^dag |v>|^2 with a
    displacement matrix built by expm in an enlarged basis."""
    if v.n_modes != 1:
        raise ValueError("wigner_fock needs a single-mode vector")
    psi = np.zeros(pad, dtype=complex)
    psi[: v.cutoff] = v.amplitudes
    parity = (-1.0) ** np.arange(pad)
    g = np.asarray(gammas, dtype=complex)
    out = np.empty(g.size)
    for i, gamma in enumerate(g.reshape(-1)):
        d = fock.displacement_matrix(-gamma, pad, check=False).matrix
        phi = d @ psi
        out[i] = (2.0 / np.pi) * float(parity @ np.abs(phi) ** 2)
    return out.reshape(g.shape)


def grid_integral(grid: PhaseGrid, values=None) -> float:
    values = grid.values if values is None else values
    inner = np.trapezoid(values, dx=grid.step, axis=1)
    return float(np.trapezoid(inner, dx=grid.step))


def negativity_volume(grid: PhaseGrid) -> float:
    """int |W| - int W over the grid (trapezoid rule)."""
    return grid_integral(grid, np.abs(grid.values)) - grid_integral(grid)


def cat_grid(alpha: complex, chi1: complex, step: float = 0.05, margin: float = 4.0) -> PhaseGrid:
    """Grid covering both components of a two-term state in |alpha> and |alpha+chi_1>."""
    return PhaseGrid(alpha + 0.5 * chi1, 0.5 * abs(chi1) + margin, step)


# -- overlaps and moments ---------------------------------------------------

def fidelity(a, b) -> float:
    """|<a|b>|^2 / (<a|a><b|b>) for two CSS states or two Fock vectors."""
    if isinstance(a, CSSState) and isinstance(b, CSSState):
        ab, aa, bb = css.inner(a, b), css.norm_squared(a), css.norm_squared(b)
    elif isinstance(a, fock.FockVector) and isinstance(b, fock.FockVector):
        ab, aa, bb = fock.fock_inner(a, b), fock.fock_inner(a, a).real, fock.fock_inner(b, b).real
    else:
        raise TypeError("fidelity needs two CSSState or two FockVector arguments")
    if aa == 0 or bb == 0:
        raise ZeroDivisionError("fidelity with a zero-norm state")
    return float(abs(ab) ** 2 / (aa * bb))


def photon_stats(s: CSSState, mode: int = 0) -> tuple[float, float]:
    """Mean and variance of the photon number in ``mode``.

    Uses <b|a^dag a|g> = conj(b) g <b|g> and
    <b|(a^dag a)^2|g> = (conj(b)^2 g^2 + conj(b) g) <b|g>.
    """
    (mode,) = css._check_selection([mode], s.n_modes)
    n2 = css.norm_squared(s)
    if n2 == 0:
        raise ZeroDivisionError("photon statistics of the zero state")
    if abs(n2 - 1.0) > 1e-6:
        log.info("photon_stats: input norm^2 = %.6g, normalizing", n2)
    g = css.gram(s, s)
    b = s.amps[:, mode]
    x = np.conj(b)[:, None] * b[None, :]
    weights = np.conj(s.coeffs)[:, None] * s.coeffs[None, :] * g
    mean = float(np.sum(weights * x).real / n2)
    second = float(np.sum(weights * (x**2 + x)).real / n2)
    return mean, second - mean**2


# -- entanglement -----------------------------------------------------------

@dataclass(frozen=True)
class EntropyReport:
    schmidt_coefficients: np.ndarray
    entropy: float
    bipartition: tuple[int, ...]
    regularized: int = 0

    @property
    def entropy_bits(self) -> float:
        return self.entropy / np.log(2.0)


def _orthonormal_factor(g: np.ndarray) -> tuple[np.ndarray, int]:
    """R with G = R^dag R, dropping Gram eigenvalues below GRAM_FLOOR."""
    g = 0.5 * (g + g.conj().T)
    evals, evecs = np.linalg.eigh(g)
    keep = evals > GRAM_FLOOR
    dropped = int(np.sum(~keep))
    r = np.sqrt(evals[keep])[:, None] * evecs[:, keep].conj().T
    return r, dropped


def schmidt_coefficients(s: CSSState, keep: Sequence[int]) -> tuple[np.ndarray, int]:
    """Schmidt weights (descending, summing to 1) via the Gram-matrix route.

    Writing s = sum_k c_k |A_k> (x) |B_k> and G_A = R_A^dag R_A (likewise for B),
    the coefficient matrix in orthonormal bases of span{A} and span{B} is
    R_A diag(c) R_B^T; its squared singular values are the Schmidt weights.
    """
    keep = css._check_selection(keep, s.n_modes)
    if not keep or len(keep) == s.n_modes:
        raise ValueError("keep must be a nonempty proper subset of the modes")
    s = css.compress(s)
    if s.n_terms == 0:
        raise ZeroDivisionError("entanglement of the zero state")
    rest = [m for m in range(s.n_modes) if m not in keep]
    side_a = CSSState(len(keep), np.ones(s.n_terms), s.amps[:, list(keep)])
    side_b = CSSState(len(rest), np.ones(s.n_terms), s.amps[:, rest])
    r_a, drop_a = _orthonormal_factor(css.gram(side_a, side_a))
    r_b, drop_b = _orthonormal_factor(css.gram(side_b, side_b))
    dropped = drop_a + drop_b
    if dropped:
        log.info("schmidt_coefficients: dropped %d Gram eigenvalue(s) below %.0e", dropped, GRAM_FLOOR)
    m = r_a @ np.diag(s.coeffs) @ r_b.T
    sv = np.linalg.svd(m, compute_uv=False)
    lam = sv**2
    total = lam.sum()
    if total == 0:
        raise ZeroDivisionError("entanglement of the zero state")
    lam = np.clip(lam / total, 0.0, None)
    return np.sort(lam)[::-1], dropped


def entropy_from_weights(lam: np.ndarray) -> float:
    lam = np.asarray(lam, dtype=float)
    lam = lam[lam > 0]
    return float(max(0.0, -np.sum(lam * np.log(lam))))


def entanglement_entropy(s: CSSState, keep: Sequence[int]) -> EntropyReport:
    """Von Neumann entropy (natural log) of the reduced state on ``keep``."""
    lam, dropped = schmidt_coefficients(s, keep)
    return EntropyReport(lam, entropy_from_weights(lam), tuple(int(k) for k in keep), dropped)


def fock_entropy(v: fock.FockVector, keep: Sequence[int]) -> tuple[np.ndarray, float]:
    """Oracle: eigenvalues of the partial trace and their entropy."""
    rho = fock.partial_trace(v, keep).matrix
    evals = np.linalg.eigvalsh(rho)
    evals = np.clip(evals / np.sum(evals), 0.0, None)
    return np.sort(evals)[::-1], entropy_from_weights(evals)


# -- cutoff scans -----------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    N: int
    omega: float
    emission_probability: float
    cat_negativity: float


def cutoff_scan(
    w: DipoleWaveform,
    kappa: float,
    Ns: Sequence[int],
    alpha: complex = 0.0,
    step: float = 0.05,
) -> list[ScanRow]:
    """Omega(N), emission probability and cat negativity volume for each cutoff.

    The waveform and kappa are held fixed while N varies.
    """
    from .states import build_cat, emission_probability

    Ns = [int(n) for n in Ns]
    if any(n < 2 for n in Ns):
        raise ValueError(f"every cutoff must be >= 2, got {Ns}")
    if Ns != sorted(Ns):
        raise ValueError(f"cutoffs must be ascending, got {Ns}")
    rows = []
    for n in Ns:
        t = all_shifts(w, n, kappa)
        cat = build_cat(alpha, t).state
        if css.norm_squared(cat) == 0.0:
            neg = 0.0
        else:
            grid = wigner(css.normalized(cat), cat_grid(alpha, t.chi1, step))
            neg = negativity_volume(grid)
        rows.append(ScanRow(n, decoherence_factor(t), emission_probability(alpha, t), neg))
    return rows


# -- export -----------------------------------------------------------------

def format_grid(grid: PhaseGrid) -> str:
    """Header lines then one row per Re index, values in %.17e."""
    if grid.values is None:
        raise ValueError("grid has no values")
    c = complex(grid.center)
    lines = [
        f"# center_re={c.real:.17e} center_im={c.imag:.17e}",
        f"# radius={grid.radius:.17e} step={grid.step:.17e} size={grid.size}",
        "# rows: Re offset (i - n) * step; columns: Im offset (j - n) * step",
    ]
    for row in grid.values:
        lines.append(" ".join(f"{x:.17e}" for x in row))
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> PhaseGrid:
    header = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            for item in line[1:].split():
                if "=" in item:
                    k, v = item.split("=", 1)
                    header[k] = v
        elif line.strip():
            rows.append([float(x) for x in line.split()])
    center = complex(float(header["center_re"]), float(header["center_im"]))
    return PhaseGrid(center, float(header["radius"]), float(header["step"]), np.array(rows))
