"""Truncated number-basis brute force, used only to cross-check the CSS algebra.

Nothing in the conditioning pipeline depends on this module. Multimode
vectors are stored row-major with mode 0 as the slowest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .css import CSSState, _check_selection
from .errors import GuardError

MAX_DIM = 10**6
LEAKAGE_TOL = 1e-8


@dataclass(frozen=True)
class FockVector:
    cutoff: int
    n_modes: int
    amplitudes: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        if self.cutoff < 2:
            raise ValueError("cutoff must be >= 2")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.cutoff**self.n_modes:
            raise ValueError(f"expected {self.cutoff ** self.n_modes} amplitudes, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.cutoff,) * self.n_modes)


@dataclass(frozen=True)
class FockOperator:
    cutoff: int
    n_modes: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        dim = self.cutoff**self.n_modes
        if mat.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "matrix", mat)


def _guard_amplitude(alpha: complex, cutoff: int):
    if abs(alpha) ** 2 > cutoff / 4:
        need = int(np.ceil(4 * abs(alpha) ** 2))
        raise GuardError(f"|alpha|^2 = {abs(alpha) ** 2:.4g} exceeds cutoff/4; use cutoff >= {need}")


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """e^{-|a|^2/2} a^n / sqrt(n!) for n < cutoff, by upward recursion."""
    alpha = complex(alpha)
    c = np.empty(cutoff, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, cutoff):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c


def coherent_fock(alpha: complex, cutoff: int) -> FockVector:
    _guard_amplitude(alpha, cutoff)
    c = coherent_amplitudes(alpha, cutoff)
    leakage = max(0.0, 1.0 - float(np.vdot(c, c).real))
    if leakage >= LEAKAGE_TOL:
        raise GuardError(
            f"truncation leakage {leakage:.3g} for |alpha|={abs(alpha):.4g} at cutoff {cutoff}; "
            f"increase the cutoff"
        )
    return FockVector(cutoff, 1, c, leakage)


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)


def number_operator(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff, dtype=float)).astype(complex)


def displacement_matrix(chi: complex, cutoff: int, check: bool = True) -> FockOperator:
    """D(chi) = exp(chi a^dag - conj(chi) a) in the truncated basis (scipy Pade-13 expm)."""
    _guard_amplitude(chi, cutoff)
    a = annihilation(cutoff)
    u = expm(complex(chi) * a.conj().T - np.conj(chi) * a)
    if check:
        half = cutoff // 2
        block = (u.conj().T @ u)[:half, :half]
        err = np.max(np.abs(block - np.eye(half)))
        if err > 1e-8:
            raise GuardError(f"displacement not unitary on the low block (error {err:.3g})")
    return FockOperator(cutoff, 1, u)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1) if np.ndim(mats[0]) == 2 else 1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def css_to_fock(s: CSSState, cutoff: int) -> FockVector:
    dim = cutoff**s.n_modes
    if dim > MAX_DIM:
        raise GuardError(f"Fock dimension {cutoff}^{s.n_modes} = {dim} exceeds {MAX_DIM}")
    vec = np.zeros(dim, dtype=complex)
    leakage = 0.0
    for c, amps in zip(s.coeffs, s.amps):
        factors = []
        for a in amps:
            f = coherent_fock(a, cutoff)
            leakage = max(leakage, f.leakage)
            factors.append(f.amplitudes)
        vec += c * kron_all(factors)
    return FockVector(cutoff, s.n_modes, vec, leakage)


def fock_inner(a: FockVector, b: FockVector) -> complex:
    if (a.cutoff, a.n_modes) != (b.cutoff, b.n_modes):
        raise ValueError("Fock vectors live in different spaces")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def partial_trace(v: FockVector, keep: Sequence[int]) -> FockOperator:
    """Reduced density matrix of |v><v| on the kept modes (in the given order)."""
    keep = _check_selection(keep, v.n_modes)
    if not keep:
        raise ValueError("keep must name at least one mode")
    rest = [m for m in range(v.n_modes) if m not in keep]
    psi = np.transpose(v.tensor(), list(keep) + rest)
    psi = psi.reshape(v.cutoff ** len(keep), -1)
    return FockOperator(v.cutoff, len(keep), psi @ psi.conj().T)


def apply_operator(op: FockOperator, v: FockVector) -> FockVector:
    return FockVector(v.cutoff, v.n_modes, op.matrix @ v.amplitudes, v.leakage)


def dump_matrix(op: FockOperator) -> str:
    """Flat text dump: one ``i j re im`` line per nonzero entry."""
    lines = [f"# cutoff={op.cutoff} n_modes={op.n_modes}"]
    rows, cols = np.nonzero(op.matrix)
    for i, j in zip(rows, cols):
        z = op.matrix[i, j]
        lines.append(f"{i} {j} {z.real:.17e} {z.imag:.17e}")
    return "\n".join(lines) + "\n"


def apply_on_mode(v: FockVector, mode: int, matrix: np.ndarray) -> FockVector:
    """Act with a single-mode matrix on one factor of a multimode vector."""
    (mode,) = _check_selection([mode], v.n_modes)
    psi = np.tensordot(matrix, v.tensor(), axes=([1], [mode]))
    psi = np.moveaxis(psi, 0, mode)
    return FockVector(v.cutoff, v.n_modes, psi, v.leakage)


def contract_modes(v: FockVector, modes: Sequence[int], bras: Sequence[np.ndarray]) -> FockVector:
    """Contract the listed modes with the given single-mode bra vectors (kets
    passed in; they are conjugated here)."""
    modes = _check_selection(modes, v.n_modes)
    psi = v.tensor()
    for m, bra in sorted(zip(modes, bras), key=lambda x: -x[0]):
        psi = np.tensordot(psi, np.conj(bra), axes=([m], [0]))
    return FockVector(v.cutoff, v.n_modes - len(modes), psi, v.leakage)


def product_vector(amps: Sequence[complex], cutoff: int) -> FockVector:
    """Fock vector of the product coherent state with the given amplitudes."""
    factors = [coherent_fock(a, cutoff) for a in amps]
    leak = max(f.leakage for f in factors)
    return FockVector(cutoff, len(factors), kron_all([f.amplitudes for f in factors]), leak)
