"""Closed-form constructors for the heralded field states.

Each builder writes the state down directly from the shift table; the
conditioning pipeline in :mod:`hhgcond.conditioning` is the ground truth
they are tested against. The builders carry the same global phase as the
pipeline, ``exp(i (sum_q phi_q + Im(chi_1 conj(alpha))))``, so the two agree
coefficient by coefficient rather than only up to a phase.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import css, fock
from .css import CSSState
from .dipole import ShiftTable, decoherence_factor

W_GUARD = 0.3

LABELS = ("phi_g", "phi_hh", "psi_omega", "w_limit", "cat")


class PerturbativeGuardWarning(UserWarning):
    """A W-limit shift is too large for the first-order truncation to be reliable."""


@dataclass(frozen=True)
class NamedState:
    """Unnormalized state with the probability (or density) of producing it.

    ``probability`` equals ``<state|state>``; for post-selected states it is
    a density per d^2 chi / pi of each measured mode.
    """

    label: str
    state: CSSState
    probability: float
    alpha: complex
    table: ShiftTable

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown state label {self.label!r}")


def _global_phase(alpha: complex, t: ShiftTable) -> complex:
    # same factorization as the pipeline, so the product rounds identically
    return np.exp(1j * css.displacement_phase(t.chi1, [alpha]))[0] * np.exp(1j * t.total_phase)


def emission_probability(alpha: complex, t: ShiftTable) -> float:
    """1 - exp(-(|chi_1|^2 + Omega)); independent of alpha."""
    return float(-np.expm1(-(abs(t.chi1) ** 2 + decoherence_factor(t))))


def build_phi_g(alpha: complex, t: ShiftTable) -> NamedState:
    amps = np.concatenate([[alpha + t.chi1], t.harmonics])
    s = css.coherent(amps, _global_phase(alpha, t))
    return NamedState("phi_g", s, 1.0, alpha, t)


def build_phi_hh(alpha: complex, t: ShiftTable) -> NamedState:
    """|alpha+chi_1> (x)_q |chi_q>  -  xi prod_q xi_q |alpha> (x)_q |0_q>."""
    g = _global_phase(alpha, t)
    h = t.harmonics
    xi = css.coherent_overlap(alpha, alpha + t.chi1)
    xi_q = np.exp(-0.5 * np.abs(h) ** 2)
    first = np.concatenate([[alpha + t.chi1], h])
    second = np.concatenate([[alpha], np.zeros_like(h)])
    s = css.compress(css.from_terms(t.N, [(g, first), (-g * xi * np.prod(xi_q), second)]))
    return NamedState("phi_hh", s, emission_probability(alpha, t), alpha, t)


def build_psi_omega(alpha: complex, t: ShiftTable) -> NamedState:
    """Harmonic state heralded by post-selecting the fundamental on |alpha+chi_1>:

    (x)_q |chi_q>  -  exp(-|chi_1|^2) prod_q exp(-|chi_q|^2/2) (x)_q |0_q>

    on the N-1 harmonic modes (survivor index j is harmonic q = j + 2).
    """
    if t.N < 3:
        raise ValueError(f"psi_omega needs N >= 3 (at least two harmonics), got N={t.N}")
    g = _global_phase(alpha, t)
    h = t.harmonics
    weight = np.exp(-abs(t.chi1) ** 2) * np.prod(np.exp(-0.5 * np.abs(h) ** 2))
    s = css.compress(css.from_terms(t.N - 1, [(g, h), (-g * weight, np.zeros_like(h))]))
    return NamedState("psi_omega", s, css.norm_squared(s), alpha, t)


def build_cat(alpha: complex, t: ShiftTable) -> NamedState:
    """Fundamental state heralded by post-selecting every harmonic on |chi_q>:

    |alpha+chi_1>  -  <alpha|alpha+chi_1> exp(-Omega) |alpha>.
    """
    g = _global_phase(alpha, t)
    xi = css.coherent_overlap(alpha, alpha + t.chi1)
    omega = decoherence_factor(t)
    s = css.compress(css.from_terms(1, [(g, [alpha + t.chi1]), (-g * xi * np.exp(-omega), [alpha])]))
    return NamedState("cat", s, css.norm_squared(s), alpha, t)


def cat_norm_squared(alpha: complex, t: ShiftTable) -> float:
    """Closed form 1 - |xi|^2 e^{-Omega} (2 - e^{-Omega}) with |xi|^2 = e^{-|chi_1|^2}."""
    omega = decoherence_factor(t)
    return float(1.0 - np.exp(-abs(t.chi1) ** 2 - omega) * (2.0 - np.exp(-omega)))


def w_limit(t: ShiftTable, modes: Sequence[int], cutoff: int = 2) -> fock.FockVector:
    """chi_q|100> + chi_r|010> + chi_s|001> for harmonic orders ``modes = (q, r, s)``.

    Unnormalized, in a three-mode Fock space truncated at ``cutoff``. Shifts of
    modulus >= 0.3 trigger a :class:`PerturbativeGuardWarning`.
    """
    modes = [int(q) for q in modes]
    if len(modes) != 3 or len(set(modes)) != 3:
        raise ValueError(f"need three distinct harmonic orders, got {modes}")
    if any(q < 2 or q > t.N for q in modes):
        raise ValueError(f"harmonic orders must lie in 2..{t.N}, got {modes}")
    chis = [t.shift(q) for q in modes]
    big = [q for q, c in zip(modes, chis) if abs(c) >= W_GUARD]
    if big:
        warnings.warn(
            f"|chi_q| >= {W_GUARD} for q in {big}; first-order W truncation is unreliable",
            PerturbativeGuardWarning,
            stacklevel=2,
        )
    v = np.zeros((cutoff,) * 3, dtype=complex)
    v[1, 0, 0], v[0, 1, 0], v[0, 0, 1] = chis
    return fock.FockVector(cutoff, 3, v)


def restrict_psi_omega(alpha: complex, t: ShiftTable, modes: Sequence[int]) -> CSSState:
    """psi_omega on the harmonics ``modes`` only; other harmonics are
    contracted with the vacuum bra."""
    s = build_psi_omega(alpha, t).state
    keep = [q - 2 for q in modes]
    drop = [j for j in range(s.n_modes) if j not in keep]
    if drop:
        s = css.postselect(s, drop, np.zeros(len(drop)))
        # postselect keeps survivors in ascending order; reorder to ``modes``
        order = np.argsort(np.argsort(keep))
        s = CSSState(s.n_modes, s.coeffs, s.amps[:, order])
    return s


def w_limit_fidelity(alpha: complex, t: ShiftTable, modes: Sequence[int], cutoff: int = 8) -> float:
    """Fidelity of the restricted psi_omega against the ideal W vector."""
    from .analysis import fidelity

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PerturbativeGuardWarning)
        w = w_limit(t, modes, cutoff)
    psi = fock.css_to_fock(restrict_psi_omega(alpha, t, modes), cutoff)
    return fidelity(psi, w)


def to_dict(ns: NamedState) -> dict:
    """Export record: label, probability, parameter provenance and the state."""
    t = ns.table
    return {
        "label": ns.label,
        "probability": ns.probability,
        "alpha": [complex(ns.alpha).real, complex(ns.alpha).imag],
        "table": {
            "kappa": t.kappa,
            "omega": t.omega,
            "shifts": [[z.real, z.imag] for z in t.shifts.tolist()],
            "phases": t.phases.tolist(),
        },
        "state": css.to_dict(ns.state),
    }
