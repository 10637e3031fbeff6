import numpy as np
import pytest

from hhgcond import analysis, css, fock
from hhgcond.errors import GuardError


def test_vacuum_vector():
    v = fock.coherent_fock(0, 10).amplitudes
    assert v[0] == 1 and not np.any(v[1:])


def test_norm_at_cutoff_32():
    c = fock.coherent_fock(1, 32).amplitudes
    assert abs(np.vdot(c, c).real - 1) < 1e-12


def test_overlap_cross_check():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a, b = (2 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform()) for _ in range(2))
        ref = np.vdot(fock.coherent_fock(a, 40).amplitudes, fock.coherent_fock(b, 40).amplitudes)
        assert abs(ref - css.coherent_overlap(a, b)) < 1e-8


def test_amplitude_guard_names_cutoff():
    with pytest.raises(GuardError, match="cutoff >= 36"):
        fock.coherent_fock(3, 20)


def test_leakage_guard():
    with pytest.raises(GuardError, match="leakage"):
        fock.coherent_fock(2.0, 16)


def test_displacement_identity():
    assert np.allclose(fock.displacement_matrix(0, 12).matrix, np.eye(12))


def test_displacement_column_is_coherent():
    chi = 0.9 - 0.4j
    d = fock.displacement_matrix(chi, 40).matrix
    assert np.max(np.abs(d[:, 0] - fock.coherent_fock(chi, 40).amplitudes)) < 1e-8


def test_displacement_inverse():
    chi = 1.1 + 0.3j
    p = fock.displacement_matrix(chi, 40).matrix @ fock.displacement_matrix(-chi, 40).matrix
    assert np.max(np.abs(p[:20, :20] - np.eye(20))) < 1e-8


def test_css_to_fock_examples():
    v = fock.css_to_fock(css.coherent([0, 0]), 6).amplitudes
    assert v[0] == 1 and not np.any(v[1:])
    assert not np.any(fock.css_to_fock(css.zero(2), 6).amplitudes)


def test_dimension_guard():
    with pytest.raises(GuardError):
        fock.css_to_fock(css.coherent([0] * 5), 40)


def test_partial_trace_product():
    v = fock.css_to_fock(css.coherent([0.5, 1j]), 24)
    rho = fock.partial_trace(v, [0]).matrix
    ev = np.linalg.eigvalsh(rho)
    assert np.trace(rho).real == pytest.approx(1, abs=1e-12)
    assert np.sum(ev > 1e-10) == 1


def test_partial_trace_bell_like():
    s = css.normalized(css.from_terms(2, [(1, [1, 0]), (1, [-1, 1.2])]))
    v = fock.css_to_fock(s, 32)
    ev = np.sort(np.linalg.eigvalsh(fock.partial_trace(v, [1]).matrix))[::-1]
    lam, _ = analysis.schmidt_coefficients(s, [0])
    assert np.sum(ev > 1e-10) == 2
    assert np.max(np.abs(ev[:2] - lam[:2])) < 1e-8


def test_apply_on_mode_matches_kron():
    rng = np.random.default_rng(1)
    v = fock.css_to_fock(css.coherent([0.3, -0.2j, 0.1]), 8)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    full = fock.kron_all([np.eye(8), m, np.eye(8)]) @ v.amplitudes
    assert np.allclose(fock.apply_on_mode(v, 1, m).amplitudes, full)


def test_dump_matrix():
    text = fock.dump_matrix(fock.FockOperator(2, 1, np.array([[1, 0], [0, 2j]])))
    assert text.splitlines()[0] == "# cutoff=2 n_modes=1"
    assert len(text.splitlines()) == 3
