"""Measurement theory for conditioning on harmonic emission.

The field starts in ``|0~> = |alpha> (x) |0_2> ... |0_N>``. The HHG channel
displaces every mode, and the two-outcome wavepacket measurement
``{|0~><0~|, 1 - |0~><0~|}`` heralds whether harmonic radiation was emitted.
Post-selecting some modes on coherent states turns the excited branch into a
measurement operator on the remaining modes of the form

    M = phase * (p 1 - c |ket><bra|) * prod_r D(chi_r),

which is what :class:`MeasurementOperator` stores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import css
from . import fock
from .css import CSSState
from .dipole import ShiftTable
from .errors import GuardError

EXCITED = "excited"
VACUUM = "vacuum"

# compression after every pipeline stage
STAGE_TOL = 1e-14


@dataclass(frozen=True)
class ConditioningOutcome:
    """Unnormalized post-measurement state with its outcome probability.

    For post-selection on continuous coherent amplitudes ``probability`` is a
    density per ``d^2 chi / pi`` of every measured mode (``is_density``).
    """

    state: CSSState
    probability: float
    outcome_label: str
    is_density: bool = False


def _stage(s: CSSState) -> CSSState:
    """Merge coincident terms; drop terms negligible relative to the largest one."""
    if s.n_terms == 0:
        return s
    return css.compress(s, STAGE_TOL, coeff_tol=STAGE_TOL * float(np.max(np.abs(s.coeffs))))


def initial_state(alpha: complex, n_modes: int) -> CSSState:
    """|alpha> on the fundamental, vacuum on the ``n_modes - 1`` harmonics."""
    amps = np.zeros(n_modes, dtype=complex)
    amps[0] = alpha
    return css.coherent(amps)


def hhg_channel(s: CSSState, t: ShiftTable) -> CSSState:
    """prod_q exp(i phi_q) D(chi_q) applied to every mode of ``s``."""
    if s.n_modes != t.N:
        raise ValueError(f"state has {s.n_modes} modes but the shift table has N={t.N}")
    out = css.displace_all(s, t.shifts)
    return css.scale(out, np.exp(1j * t.total_phase))


def _wavepacket_vacuum_overlap(s: CSSState, alpha: complex) -> tuple[CSSState, complex]:
    vac = initial_state(alpha, s.n_modes)
    return vac, css.inner(vac, s)


def _probability(out: CSSState, s: CSSState) -> float:
    n_in = css.norm_squared(s)
    if n_in == 0.0:
        raise ZeroDivisionError("conditioning the zero state")
    return css.norm_squared(out) / n_in


def pi_excited(s: CSSState, alpha: complex) -> ConditioningOutcome:
    """Apply 1 - |0~><0~|; the probability is relative to <s|s>."""
    vac, amp = _wavepacket_vacuum_overlap(s, alpha)
    out = _stage(css.add(s, css.scale(vac, -amp)))
    return ConditioningOutcome(out, _probability(out, s), EXCITED)


def pi_vacuum(s: CSSState, alpha: complex) -> ConditioningOutcome:
    vac, amp = _wavepacket_vacuum_overlap(s, alpha)
    out = _stage(css.scale(vac, amp))
    return ConditioningOutcome(out, _probability(out, s), VACUUM)


def phi_g(alpha: complex, t: ShiftTable) -> CSSState:
    """Field state after the HHG channel acts on the uncorrelated input."""
    return hhg_channel(initial_state(alpha, t.N), t)


def build_phi_hh(alpha: complex, t: ShiftTable) -> ConditioningOutcome:
    """Channel followed by the excited-wavepacket projection (two terms)."""
    return pi_excited(phi_g(alpha, t), alpha)


def condition(alpha: complex, t: ShiftTable, outcome: str = EXCITED) -> ConditioningOutcome:
    s = phi_g(alpha, t)
    if outcome == EXCITED:
        return pi_excited(s, alpha)
    if outcome == VACUUM:
        return pi_vacuum(s, alpha)
    raise ValueError(f"unknown outcome {outcome!r}; expected {EXCITED!r} or {VACUUM!r}")


def quantum_operation(
    alpha: complex,
    t: ShiftTable,
    measured: Sequence[int],
    postsel: Sequence[complex],
    outcome: str = EXCITED,
) -> ConditioningOutcome:
    """Herald on ``outcome`` and post-select ``measured`` modes on ``|postsel>``.

    The returned state lives on the unmeasured modes (original order); its
    squared norm is the probability density Tr[E rho_0].
    """
    measured = list(measured)
    if not measured:
        raise ValueError("at least one mode must be measured")
    if len(set(measured)) == t.N:
        raise ValueError("cannot measure every mode; nothing would remain")
    heralded = condition(alpha, t, outcome)
    survivor = _stage(css.postselect(heralded.state, measured, postsel))
    return ConditioningOutcome(survivor, css.norm_squared(survivor), outcome, is_density=True)


# -- symbolic measurement operators ----------------------------------------

@dataclass(frozen=True)
class MeasurementOperator:
    """phase * (p 1 - c |ket><bra|) * prod_r D(displacements[r]) on ``n_modes`` modes.

    With ``c == 0`` and ``p`` of unit modulus the operator is a pure
    displacement, hence unitary. Setting ``p = 0`` describes the vacuum
    outcome, whose operator is rank one.
    """

    n_modes: int
    displacements: np.ndarray
    c: complex = 0.0
    bra_amps: np.ndarray | None = None
    ket_amps: np.ndarray | None = None
    p: complex = 1.0
    phase: complex = 1.0
    label: str = EXCITED

    def __post_init__(self):
        d = np.asarray(self.displacements, dtype=complex).reshape(-1)
        if d.size != self.n_modes:
            raise ValueError(f"{d.size} displacements for {self.n_modes} modes")
        object.__setattr__(self, "displacements", d)
        for name in ("bra_amps", "ket_amps"):
            v = getattr(self, name)
            v = np.zeros(self.n_modes, dtype=complex) if v is None else np.asarray(v, dtype=complex).reshape(-1)
            if v.size != self.n_modes:
                raise ValueError(f"{name} has {v.size} entries for {self.n_modes} modes")
            object.__setattr__(self, name, v)

    @property
    def has_correction(self) -> bool:
        return self.c != 0


def measurement_operator_for(
    alpha: complex,
    t: ShiftTable,
    measured: Sequence[int],
    postsel: Sequence[complex],
    outcome: str = EXCITED,
) -> MeasurementOperator:
    """<{postsel}| Pi_outcome |{shifted measured}> prod_{unmeasured} e^{i phi} D(chi)."""
    measured = css._check_selection(measured, t.N)
    postsel = np.atleast_1d(np.asarray(postsel, dtype=complex))
    if len(postsel) != len(measured):
        raise ValueError(f"{len(measured)} measured modes but {len(postsel)} post-selection amplitudes")
    if not measured or len(measured) == t.N:
        raise ValueError("the measured set must be a nonempty proper subset of the modes")
    rest = [m for m in range(t.N) if m not in measured]
    init = np.zeros(t.N, dtype=complex)
    init[0] = alpha
    shifts = t.shifts
    m_init, m_shifted = init[list(measured)], init[list(measured)] + shifts[list(measured)]
    # displacement phases picked up by the measured modes, plus the channel phase
    disp_phase = np.sum(css.displacement_phase(shifts[list(measured)], m_init))
    phase = np.exp(1j * (t.total_phase + disp_phase))
    p = css.safe_exp(css.log_overlap(postsel, m_shifted).sum())
    c = css.safe_exp((css.log_overlap(postsel, m_init) + css.log_overlap(m_init, m_shifted)).sum())
    if outcome == VACUUM:
        p, c = 0.0, -c
    elif outcome != EXCITED:
        raise ValueError(f"unknown outcome {outcome!r}")
    return MeasurementOperator(
        n_modes=len(rest),
        displacements=shifts[rest],
        c=complex(c),
        bra_amps=init[rest],
        ket_amps=init[rest],
        p=complex(p),
        phase=complex(phase),
        label=outcome,
    )


def measurement_operator(
    alpha: complex,
    t: ShiftTable,
    variant: str,
    postsel: Sequence[complex] | None = None,
    outcome: str = EXCITED,
) -> MeasurementOperator:
    """Operator for measuring the fundamental (``"fundamental"``) or all
    harmonics (``"harmonics"``). ``postsel`` defaults to the shifted amplitudes.

    At the default post-selection the correction is e^{-|chi_1|^2} for the
    fundamental and e^{-Omega} for the harmonics.
    """
    if variant == "fundamental":
        measured = [0]
        default = [alpha + t.chi1]
    elif variant == "harmonics":
        measured = list(range(1, t.N))
        default = list(t.harmonics)
    else:
        raise ValueError(f"unknown variant {variant!r}; expected 'fundamental' or 'harmonics'")
    if postsel is None:
        postsel = default
    return measurement_operator_for(alpha, t, measured, postsel, outcome)


def apply_operator(m: MeasurementOperator, s: CSSState) -> CSSState:
    """Displacements first, then the rank-one correction."""
    if s.n_modes != m.n_modes:
        raise ValueError(f"operator acts on {m.n_modes} modes, state has {s.n_modes}")
    shifted = css.displace_all(s, m.displacements)
    out = css.scale(shifted, m.p * m.phase)
    if m.has_correction:
        ket = css.coherent(m.ket_amps)
        amp = css.inner(css.coherent(m.bra_amps), shifted)
        out = css.add(out, css.scale(ket, -m.c * m.phase * amp))
    return _stage(out)


def operator_matrix(m: MeasurementOperator, cutoff: int) -> np.ndarray:
    """Truncated-Fock matrix of ``m`` (oracle side)."""
    disp = fock.kron_all([fock.displacement_matrix(chi, cutoff, check=False).matrix for chi in m.displacements])
    dim = disp.shape[0]
    core = m.p * np.eye(dim, dtype=complex)
    if m.has_correction:
        ket = fock.kron_all([fock.coherent_fock(a, cutoff).amplitudes for a in m.ket_amps])
        bra = fock.kron_all([fock.coherent_fock(a, cutoff).amplitudes for a in m.bra_amps])
        core = core - m.c * np.outer(ket, bra.conj())
    return m.phase * core @ disp


def effect_matrix(m: MeasurementOperator, cutoff: int) -> fock.FockOperator:
    """E = M^dag M on the survivor modes, truncated at ``cutoff`` per mode."""
    mat = operator_matrix(m, cutoff)
    e = mat.conj().T @ mat
    return fock.FockOperator(cutoff, m.n_modes, 0.5 * (e + e.conj().T))


def correction_matrix(alpha: complex, omega: float, cutoff: int) -> np.ndarray:
    """1 - e^{-Omega} |alpha><alpha| in the truncated space."""
    v = fock.coherent_fock(alpha, cutoff).amplitudes
    return np.eye(cutoff, dtype=complex) - np.exp(-omega) * np.outer(v, v.conj())


def idempotence_defect(alpha: complex, omega: float, cutoff: int = 32) -> float:
    """Spectral norm of P^2 - P for P = 1 - e^{-Omega}|alpha><alpha|."""
    p = correction_matrix(alpha, omega, cutoff)
    return float(np.linalg.norm(p @ p - p, ord=2))


# -- completeness ----------------------------------------------------------

@dataclass(frozen=True)
class CompletenessResult:
    deviation: float
    step: float
    radius: float
    n_points: int
    cutoff: int


def completeness_check(
    alpha: complex,
    chi: complex,
    cutoff: int = 24,
    step: float = 0.05,
    radius: float | None = None,
    chi1: complex = 0.0,
    center: complex = 0.0,
) -> CompletenessResult:
    """Integrate sum_nu (M_nu)^dag M_nu over the post-selected harmonic amplitude.

    One harmonic mode (N = 2) is measured; the integral runs over a disk of
    ``radius`` (default ``|chi| + 6``) on a Cartesian grid of spacing ``step``
    with uniform weight ``step^2 / pi``. Returns the largest absolute entry
    deviation from the identity on the lower half of the cutoff block.

    Every M_nu has the form (p 1 - c P) D with P = |alpha><alpha|, so the
    integrand is |p|^2 1 - 2 Re(conj(p) c) P + 2 |c|^2 P conjugated by D; the
    three scalar weights are accumulated with ``math.fsum`` for a
    reproducible, order-independent sum.
    """
    if radius is None:
        radius = abs(chi) + 6.0
    if radius < abs(chi) + 6.0 - 1e-12:
        raise GuardError(f"grid radius {radius} < |chi| + 6 = {abs(chi) + 6.0}; the Gaussian tails are cut off")
    if not step > 0:
        raise ValueError("step must be > 0")
    n = int(np.floor(radius / step))
    axis = step * np.arange(-n, n + 1)
    x, y = np.meshgrid(center.real + axis, center.imag + axis, indexing="ij")
    inside = (x - center.real) ** 2 + (y - center.imag) ** 2 <= radius**2
    gammas = (x + 1j * y)[inside]

    shifted = complex(chi)  # post-selection ket amplitude of the measured harmonic
    p = css.safe_exp(css.log_overlap(gammas, shifted))
    c = css.safe_exp(css.log_overlap(gammas, 0.0) + css.log_overlap(0.0, shifted))
    w = step**2 / math.pi
    s_pp = math.fsum((w * np.abs(p) ** 2).tolist())
    s_pc = math.fsum((w * (np.conj(p) * c).real).tolist())
    s_cc = math.fsum((w * np.abs(c) ** 2).tolist())

    proj = fock.coherent_fock(alpha, cutoff).amplitudes
    proj = np.outer(proj, proj.conj())
    core = s_pp * np.eye(cutoff) - 2 * s_pc * proj + 2 * s_cc * proj
    d = fock.displacement_matrix(chi1, cutoff, check=False).matrix
    total = d.conj().T @ core @ d
    half = cutoff // 2
    dev = float(np.max(np.abs(total[:half, :half] - np.eye(half))))
    return CompletenessResult(dev, step, radius, int(gammas.size), cutoff)


def completeness_matrix_sum(alpha: complex, chi: complex, cutoff: int, step: float, radius: float | None = None) -> np.ndarray:
    """Brute-force version of :func:`completeness_check`: builds every effect
    matrix from :func:`measurement_operator_for` and sums them. Slow; for
    cross-checking the scalar route at coarse steps."""
    if radius is None:
        radius = abs(chi) + 6.0
    t = ShiftTable([0.0, chi])
    n = int(np.floor(radius / step))
    axis = step * np.arange(-n, n + 1)
    total = np.zeros((cutoff, cutoff), dtype=complex)
    for xr in axis:
        for yi in axis:
            if xr**2 + yi**2 > radius**2:
                continue
            g = complex(xr, yi)
            for outcome in (EXCITED, VACUUM):
                m = measurement_operator_for(alpha, t, [1], [g], outcome)
                total += effect_matrix(m, cutoff).matrix
    return total * step**2 / math.pi
