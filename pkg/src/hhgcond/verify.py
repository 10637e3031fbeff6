"""Oracle-equivalence suite: each CSS-side result against a truncated-Fock computation.

Every check draws random small-amplitude inputs (|amplitude| <= 2, at most
three modes) from a seeded generator, computes the same quantity along both
routes, and reports the largest absolute discrepancy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis, conditioning as cond, css, fock, states
from .dipole import ShiftTable

CUTOFF = 40
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tol)


def _amp(rng, rmax):
    r = rmax * np.sqrt(rng.uniform())
    return r * np.exp(2j * np.pi * rng.uniform())


def random_css(rng, n_modes, n_terms, rmax=1.0) -> css.CSSState:
    coeffs = rng.normal(size=n_terms) + 1j * rng.normal(size=n_terms)
    amps = np.array([[_amp(rng, rmax) for _ in range(n_modes)] for _ in range(n_terms)])
    return css.CSSState(n_modes, coeffs, amps)


def random_table(rng, n, rmax=0.8) -> ShiftTable:
    return ShiftTable([_amp(rng, rmax) for _ in range(n)], rng.uniform(-np.pi, np.pi, size=n))


def _to_fock(s, cutoff=CUTOFF):
    return fock.css_to_fock(s, cutoff).amplitudes


def _maxabs(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) if np.size(a) else 0.0


def check_overlap(rng, trials=20):
    err = 0.0
    for _ in range(trials):
        b, g = _amp(rng, 2.0), _amp(rng, 2.0)
        ref = fock.fock_inner(fock.coherent_fock(b, CUTOFF), fock.coherent_fock(g, CUTOFF))
        err = max(err, abs(css.coherent_overlap(b, g) - ref))
    return err


def check_inner(rng, trials=4):
    err = 0.0
    for _ in range(trials):
        n = rng.integers(1, 4)
        a, b = random_css(rng, n, 3), random_css(rng, n, 2)
        ref = np.vdot(_to_fock(a), _to_fock(b))
        err = max(err, abs(css.inner(a, b) - ref) / max(1.0, np.abs(a.coeffs).sum() * np.abs(b.coeffs).sum()))
    return err


def check_displace(rng, trials=4):
    err = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        s = random_css(rng, n, 2, rmax=1.0)
        mode, chi = int(rng.integers(n)), _amp(rng, 1.0)
        got = _to_fock(css.displace(s, mode, chi))
        v = fock.css_to_fock(s, CUTOFF)
        ref = fock.apply_on_mode(v, mode, fock.displacement_matrix(chi, CUTOFF).matrix).amplitudes
        err = max(err, _maxabs(got, ref))
    return err


def check_project(rng, trials=4):
    err = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 4))
        s = random_css(rng, n, 2, rmax=1.5)
        sel = list(rng.choice(n, size=int(rng.integers(1, n)), replace=False))
        gam = [_amp(rng, 1.5) for _ in sel]
        got = _to_fock(css.project_coherent(s, sel, gam))
        v = fock.css_to_fock(s, CUTOFF)
        for m, g in zip(sel, gam):
            k = fock.coherent_fock(g, CUTOFF).amplitudes
            v = fock.apply_on_mode(v, m, np.outer(k, k.conj()))
        err = max(err, _maxabs(got, v.amplitudes))
    return err


def check_postselect(rng, trials=4):
    err = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 4))
        s = random_css(rng, n, 3, rmax=1.5)
        sel = sorted(int(m) for m in rng.choice(n, size=int(rng.integers(1, n)), replace=False))
        gam = [_amp(rng, 1.5) for _ in sel]
        got = _to_fock(css.postselect(s, sel, gam))
        bras = [fock.coherent_fock(g, CUTOFF).amplitudes for g in gam]
        ref = fock.contract_modes(fock.css_to_fock(s, CUTOFF), sel, bras).amplitudes
        err = max(err, _maxabs(got, ref))
    return err


def fock_phi_g(alpha, t: ShiftTable, cutoff=CUTOFF) -> fock.FockVector:
    """Channel output built with displacement matrices only."""
    amps = np.zeros(t.N, dtype=complex)
    amps[0] = alpha
    v = fock.product_vector(amps, cutoff)
    for m, chi in enumerate(t.shifts):
        v = fock.apply_on_mode(v, m, fock.displacement_matrix(chi, cutoff).matrix)
    return fock.FockVector(cutoff, t.N, np.exp(1j * t.total_phase) * v.amplitudes)


def fock_pi_excited(v: fock.FockVector, alpha) -> fock.FockVector:
    amps = np.zeros(v.n_modes, dtype=complex)
    amps[0] = alpha
    vac = fock.product_vector(amps, v.cutoff).amplitudes
    return fock.FockVector(v.cutoff, v.n_modes, v.amplitudes - vac * np.vdot(vac, v.amplitudes))


def fock_quantum_operation(alpha, t, measured, postsel, cutoff=CUTOFF) -> fock.FockVector:
    v = fock_pi_excited(fock_phi_g(alpha, t, cutoff), alpha)
    bras = [fock.coherent_fock(g, cutoff).amplitudes for g in postsel]
    return fock.contract_modes(v, measured, bras)


def check_conditioning(rng, trials=3):
    err = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 4))
        alpha = _amp(rng, 1.0)
        t = random_table(rng, n)
        out = cond.build_phi_hh(alpha, t)
        ref = fock_pi_excited(fock_phi_g(alpha, t), alpha)
        err = max(err, _maxabs(_to_fock(out.state), ref.amplitudes))
        err = max(err, abs(out.probability - np.vdot(ref.amplitudes, ref.amplitudes).real))
        measured = [int(m) for m in rng.choice(n, size=int(rng.integers(1, n)), replace=False)]
        postsel = [_amp(rng, 1.5) for _ in measured]
        q = cond.quantum_operation(alpha, t, measured, postsel)
        qref = fock_quantum_operation(alpha, t, sorted(measured), [postsel[measured.index(m)] for m in sorted(measured)])
        err = max(err, _maxabs(_to_fock(q.state), qref.amplitudes))
    return err


def check_builders(rng, trials=3):
    err = 0.0
    for _ in range(trials):
        alpha = _amp(rng, 1.0)
        t = random_table(rng, 3, rmax=0.7)
        cat = states.build_cat(alpha, t).state
        ref = fock_quantum_operation(alpha, t, [1, 2], list(t.harmonics))
        err = max(err, _maxabs(_to_fock(cat), ref.amplitudes))
        psi = states.build_psi_omega(alpha, t).state
        ref = fock_quantum_operation(alpha, t, [0], [alpha + t.chi1])
        err = max(err, _maxabs(_to_fock(psi), ref.amplitudes))
    return err


def check_photon_stats(rng, trials=4):
    err = 0.0
    n_op = fock.number_operator(CUTOFF)
    for _ in range(trials):
        s = css.normalized(random_css(rng, 1, 2, rmax=1.5))
        v = _to_fock(s)
        mean, var = analysis.photon_stats(s)
        m_ref = np.vdot(v, n_op @ v).real
        v_ref = np.vdot(v, n_op @ n_op @ v).real - m_ref**2
        err = max(err, abs(mean - m_ref), abs(var - v_ref))
    return err


def check_entropy(rng, trials=3):
    err = 0.0
    for _ in range(trials):
        alpha = _amp(rng, 1.0)
        t = random_table(rng, 3, rmax=0.8)
        s = css.normalized(cond.build_phi_hh(alpha, t).state)
        lam, _ = analysis.schmidt_coefficients(s, [0])
        ref_lam, _ = analysis.fock_entropy(fock.css_to_fock(s, CUTOFF), [0])
        k = min(len(lam), len(ref_lam))
        err = max(err, _maxabs(lam[:k], ref_lam[:k]), float(np.sum(ref_lam[k:])))
    return err


CHECKS: dict[str, Callable] = {
    "overlap": check_overlap,
    "inner": check_inner,
    "displace": check_displace,
    "project": check_project,
    "postselect": check_postselect,
    "conditioning": check_conditioning,
    "builders": check_builders,
    "photon_stats": check_photon_stats,
    "entropy": check_entropy,
}


def run_oracle_suite(tol: float = DEFAULT_TOL, seed: int = 20220101) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [CheckResult(name, float(fn(rng)), tol) for name, fn in CHECKS.items()]
