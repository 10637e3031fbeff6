"""Exact algebra of finite superpositions of multimode coherent states.

A :class:`CSSState` is a list of terms ``c_k |b_k1> (x) |b_k2> (x) ...``. All
operations used by the conditioning pipeline (displacements, rank-one
coherent projectors, partial post-selection) map such superpositions onto
superpositions, so nothing is ever expanded in a number basis and
amplitudes of order 1e7 are handled as easily as amplitudes of order 1.

Mode 0 is the fundamental (harmonic order q=1); mode j is harmonic q=j+1.
States are never normalized implicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# exponents below this are flushed to an exact zero
EXP_FLOOR = -700.0


def log_overlap(beta, gamma):
    """Logarithm of <beta|gamma>, broadcasting over array arguments.

    Written as ``-|d|^2/2 + i Im(conj(m) d)`` with ``d = gamma - beta`` and
    ``m = (beta + gamma)/2``. The real part then never suffers from
    cancellation between ``|beta|^2`` and ``|gamma|^2`` at large amplitude, and
    swapping the arguments flips the sign of ``d`` exactly, so Gram matrices
    are Hermitian to the last bit even when the phase is of order 1e7.
    """
    beta = np.asarray(beta, dtype=complex)
    gamma = np.asarray(gamma, dtype=complex)
    delta = gamma - beta
    mid = 0.5 * (beta + gamma)
    # explicit real products: numpy's complex multiply may fuse or not
    # depending on array shape, which moves a 1e7 phase by an ulp
    return -0.5 * (delta.real**2 + delta.imag**2) + 1j * (mid.real * delta.imag - mid.imag * delta.real)


def safe_exp(log_value):
    """``exp`` that returns an exact 0 once the real part drops below EXP_FLOOR."""
    log_value = np.asarray(log_value, dtype=complex)
    out = np.zeros(log_value.shape, dtype=complex)
    keep = log_value.real >= EXP_FLOOR
    out[keep] = np.exp(log_value[keep])
    if out.ndim == 0:
        return complex(out)
    return out


def coherent_overlap(beta: complex, gamma: complex) -> complex:
    """<beta|gamma> = exp(-|beta|^2/2 - |gamma|^2/2 + conj(beta) gamma)."""
    return complex(safe_exp(log_overlap(beta, gamma)))


@dataclass(frozen=True)
class CSSState:
    """Unnormalized finite superposition of multimode coherent states.

    Attributes
    ----------
    coeffs : (T,) complex array
        Term coefficients.
    amps : (T, n_modes) complex array
        Coherent amplitudes, one row per term.
    """

    n_modes: int
    coeffs: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        coeffs = np.array(self.coeffs, dtype=complex).reshape(-1)
        amps = np.array(self.amps, dtype=complex).reshape(len(coeffs), self.n_modes)
        if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(amps))):
            raise ValueError("coefficients and amplitudes must be finite")
        coeffs.flags.writeable = False
        amps.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "amps", amps)

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    def terms(self):
        return [(complex(c), a.copy()) for c, a in zip(self.coeffs, self.amps)]

    def __add__(self, other: "CSSState") -> "CSSState":
        return add(self, other)

    def __sub__(self, other: "CSSState") -> "CSSState":
        return add(self, scale(other, -1.0))

    def __rmul__(self, c) -> "CSSState":
        return scale(self, c)

    def __repr__(self):
        return f"CSSState(n_modes={self.n_modes}, n_terms={self.n_terms})"


def coherent(amps: Sequence[complex] | complex, coeff: complex = 1.0) -> CSSState:
    """Single product coherent state ``coeff * |a_0> (x) |a_1> ...``."""
    amps = np.atleast_1d(np.asarray(amps, dtype=complex))
    return CSSState(len(amps), np.array([coeff]), amps[None, :])


def zero(n_modes: int) -> CSSState:
    return CSSState(n_modes, np.zeros(0, dtype=complex), np.zeros((0, n_modes), dtype=complex))


def from_terms(n_modes: int, terms: Iterable[tuple[complex, Sequence[complex]]]) -> CSSState:
    terms = list(terms)
    if not terms:
        return zero(n_modes)
    coeffs = [c for c, _ in terms]
    amps = []
    for _, a in terms:
        a = np.atleast_1d(np.asarray(a, dtype=complex))
        if a.shape != (n_modes,):
            raise ValueError(f"term amplitude vector has shape {a.shape}, expected ({n_modes},)")
        amps.append(a)
    return CSSState(n_modes, np.array(coeffs), np.array(amps))


def _check_modes(a: CSSState, b: CSSState):
    if a.n_modes != b.n_modes:
        raise ValueError(f"mode-count mismatch: {a.n_modes} vs {b.n_modes}")


def _check_selection(sel: Sequence[int], n_modes: int) -> tuple[int, ...]:
    sel = tuple(int(m) for m in sel)
    if len(set(sel)) != len(sel):
        raise ValueError(f"duplicate mode indices in selection {sel}")
    for m in sel:
        if not 0 <= m < n_modes:
            raise IndexError(f"mode index {m} out of range for {n_modes} modes")
    return sel


def log_gram(a: CSSState, b: CSSState) -> np.ndarray:
    """Matrix of log <a_j|b_k> for the product-state terms (coefficients excluded)."""
    _check_modes(a, b)
    return log_overlap(a.amps[:, None, :], b.amps[None, :, :]).sum(axis=-1)


def gram(a: CSSState, b: CSSState) -> np.ndarray:
    return safe_exp(log_gram(a, b)).reshape(a.n_terms, b.n_terms)


def inner(a: CSSState, b: CSSState) -> complex:
    """<a|b>, antilinear in the first argument."""
    _check_modes(a, b)
    if a.n_terms == 0 or b.n_terms == 0:
        return 0j
    return complex(np.conj(a.coeffs) @ gram(a, b) @ b.coeffs)


def add(a: CSSState, b: CSSState) -> CSSState:
    _check_modes(a, b)
    return CSSState(a.n_modes, np.concatenate([a.coeffs, b.coeffs]), np.concatenate([a.amps, b.amps]))


def scale(a: CSSState, c: complex) -> CSSState:
    return CSSState(a.n_modes, a.coeffs * complex(c), a.amps)


def norm_squared(a: CSSState) -> float:
    if a.n_terms == 0:
        return 0.0
    g = gram(a, a)
    value = complex(np.conj(a.coeffs) @ g @ a.coeffs)
    # roundoff scale of the double sum, not of its (possibly cancelled) result
    mass = float(np.abs(a.coeffs) @ np.abs(g) @ np.abs(a.coeffs))
    if abs(value.imag) > 1e-10 * mass:
        raise ArithmeticError(f"<a|a> has imaginary part {value.imag!r}")
    return max(value.real, 0.0)


def norm(a: CSSState) -> float:
    return float(np.sqrt(norm_squared(a)))


def normalized(a: CSSState) -> CSSState:
    n = norm(a)
    if n == 0.0:
        raise ZeroDivisionError("cannot normalize the zero state")
    return scale(a, 1.0 / n)


def displacement_phase(chi, beta) -> np.ndarray:
    """Im(chi conj(beta)), the exponent of the phase picked up by D(chi)|beta>.

    Evaluated from real products only, so every caller rounds identically
    (complex products can differ by an ulp between code paths, which matters
    once the phase is of order 1e7).
    """
    chi = np.asarray(chi, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    return chi.imag * beta.real - chi.real * beta.imag


def displace(s: CSSState, mode: int, chi: complex) -> CSSState:
    """Apply D(chi) on one mode: D(chi)|b> = exp(i Im(chi conj(b))) |b + chi>."""
    (mode,) = _check_selection([mode], s.n_modes)
    chi = complex(chi)
    beta = s.amps[:, mode]
    phase = np.exp(1j * displacement_phase(chi, beta))
    amps = s.amps.copy()
    amps[:, mode] = beta + chi
    return CSSState(s.n_modes, s.coeffs * phase, amps)


def displace_all(s: CSSState, chis: Sequence[complex]) -> CSSState:
    chis = np.asarray(chis, dtype=complex)
    if chis.shape != (s.n_modes,):
        raise ValueError(f"need {s.n_modes} displacements, got {chis.shape}")
    out = s
    for m, chi in enumerate(chis):
        out = displace(out, m, chi)
    return out


def _selection_weights(s: CSSState, sel, gammas) -> np.ndarray:
    gammas = np.atleast_1d(np.asarray(gammas, dtype=complex))
    if len(sel) != len(gammas):
        raise ValueError(f"{len(sel)} selected modes but {len(gammas)} amplitudes")
    if s.n_terms == 0:
        return np.zeros(0, dtype=complex)
    logs = log_overlap(gammas[None, :], s.amps[:, list(sel)]).sum(axis=-1)
    return safe_exp(logs).reshape(s.n_terms)


def project_coherent(s: CSSState, sel: Sequence[int], gammas: Sequence[complex]) -> CSSState:
    """Apply the rank-one projectors |g_m><g_m| on the selected modes."""
    sel = _check_selection(sel, s.n_modes)
    weights = _selection_weights(s, sel, gammas)
    amps = s.amps.copy()
    amps[:, list(sel)] = np.atleast_1d(np.asarray(gammas, dtype=complex))
    return CSSState(s.n_modes, s.coeffs * weights, amps)


def postselect(s: CSSState, sel: Sequence[int], gammas: Sequence[complex]) -> CSSState:
    """Contract the selected modes with the bra <g|, keeping the other modes in order."""
    sel = _check_selection(sel, s.n_modes)
    if len(sel) == s.n_modes:
        raise ValueError("selection covers every mode; use inner() for a full contraction")
    weights = _selection_weights(s, sel, gammas)
    rest = [m for m in range(s.n_modes) if m not in sel]
    return CSSState(len(rest), s.coeffs * weights, s.amps[:, rest])


def embed(r: CSSState, sel: Sequence[int], gammas: Sequence[complex]) -> CSSState:
    """Inverse of :func:`postselect` on the ket side: ``|r> (x) |g>`` with the
    g-modes inserted at positions ``sel`` of the enlarged state."""
    n_modes = r.n_modes + len(sel)
    sel = _check_selection(sel, n_modes)
    gammas = np.atleast_1d(np.asarray(gammas, dtype=complex))
    if len(sel) != len(gammas):
        raise ValueError(f"{len(sel)} selected modes but {len(gammas)} amplitudes")
    rest = [m for m in range(n_modes) if m not in sel]
    amps = np.zeros((r.n_terms, n_modes), dtype=complex)
    amps[:, rest] = r.amps
    amps[:, list(sel)] = gammas
    return CSSState(n_modes, r.coeffs, amps)


def tensor(a: CSSState, b: CSSState) -> CSSState:
    """|a> (x) |b>, modes of ``a`` first."""
    ta, tb = a.n_terms, b.n_terms
    coeffs = np.outer(a.coeffs, b.coeffs).reshape(-1)
    amps = np.concatenate(
        [np.repeat(a.amps, tb, axis=0), np.tile(b.amps, (ta, 1))], axis=1
    ) if ta and tb else np.zeros((0, a.n_modes + b.n_modes), dtype=complex)
    return CSSState(a.n_modes + b.n_modes, coeffs, amps)


def compress(s: CSSState, tol: float = 0.0, coeff_tol: float | None = None) -> CSSState:
    """Merge terms whose amplitude vectors agree to ``tol`` per component and
    drop terms with ``|c| <= coeff_tol`` (default ``tol``). Exact zeros are
    always dropped."""
    if tol < 0 or (coeff_tol is not None and coeff_tol < 0):
        raise ValueError("tolerances must be >= 0")
    if coeff_tol is None:
        coeff_tol = tol
    groups: list[list] = []
    for c, a in zip(s.coeffs, s.amps):
        for g in groups:
            if np.all(np.abs(g[1] - a) <= tol):
                g[0] += c
                break
        else:
            groups.append([complex(c), a.copy()])
    kept = [(c, a) for c, a in groups if abs(c) > coeff_tol and c != 0]
    return from_terms(s.n_modes, kept)


# -- serialization ---------------------------------------------------------

def _pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def to_dict(s: CSSState) -> dict:
    return {
        "n_modes": s.n_modes,
        "terms": [
            {"coeff": _pair(c), "amps": [_pair(x) for x in a]} for c, a in zip(s.coeffs, s.amps)
        ],
    }


def from_dict(d: dict) -> CSSState:
    n_modes = int(d["n_modes"])
    terms = [
        (complex(*t["coeff"]), [complex(*p) for p in t["amps"]]) for t in d["terms"]
    ]
    return from_terms(n_modes, terms)


def dumps(s: CSSState) -> str:
    """JSON text; float repr is shortest round-trip so loads(dumps(s)) is bit-exact."""
    return json.dumps(to_dict(s), indent=1, allow_nan=False)


def loads(text: str) -> CSSState:
    return from_dict(json.loads(text))
