import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhgcond import analysis, conditioning as cond, css, fock, states
from hhgcond.analysis import PhaseGrid
from hhgcond.dipole import DipoleSpec, HarmonicComb, Monochromatic, synth_dipole, table_from_shifts
from hhgcond.verify import random_css, random_table

seeds = st.integers(0, 2**32 - 1)


def kitten(omega, alpha=0.0, chi1=2.0):
    t = table_from_shifts([chi1, np.sqrt(omega)])
    return css.normalized(states.build_cat(alpha, t).state)


class TestWigner:
    def test_vacuum_peak(self):
        assert analysis.wigner_at(css.coherent([0]), 0) == pytest.approx(2 / np.pi, rel=1e-15)

    def test_coherent_peak_moves(self):
        a = 1.2 - 0.7j
        assert analysis.wigner_at(css.coherent([a]), a) == pytest.approx(2 / np.pi, rel=1e-15)
        grid = analysis.wigner(css.coherent([a]), PhaseGrid(a, 0.5, 0.05))
        i, j = np.unravel_index(np.argmax(grid.values), grid.values.shape)
        assert grid.points()[i, j] == pytest.approx(a, abs=1e-12)

    def test_large_displacement(self):
        a = 1e7 + 2e6j
        assert analysis.wigner_at(css.coherent([a]), a + 0.3) == pytest.approx(2 / np.pi * np.exp(-0.18), rel=1e-9)

    def test_cat_negative(self):
        w = analysis.wigner(kitten(0.01), analysis.cat_grid(0, 2))
        assert w.values.min() < 0

    @given(seeds)
    @settings(max_examples=8, deadline=None)
    def test_normalization(self, seed):
        rng = np.random.default_rng(seed)
        s = random_css(rng, 1, 3, 1.5)
        grid = PhaseGrid(0, 1.5 + 5, 0.1)
        assert analysis.grid_integral(analysis.wigner(s, grid)) == pytest.approx(css.norm_squared(s), abs=1e-4)

    def test_matches_fock_oracle(self):
        rng = np.random.default_rng(2)
        s = css.normalized(random_css(rng, 1, 3, 2.0))
        grid = PhaseGrid(0.3 - 0.2j, 2.0, 0.2)
        pts = grid.points()
        assert pts.shape == (21, 21)
        got = analysis.wigner_at(s, pts)
        ref = analysis.wigner_fock(fock.css_to_fock(s, 40), pts)
        assert np.max(np.abs(got - ref)) < 1e-6

    def test_multimode_rejected(self):
        with pytest.raises(ValueError):
            analysis.wigner_at(css.coherent([0, 0]), 0)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            PhaseGrid(0, 0.1, 0.05)
        with pytest.raises(ValueError):
            PhaseGrid(0, 1.0, 0.0)


class TestNegativity:
    def test_coherent_zero(self):
        w = analysis.wigner(css.coherent([0.5j]), PhaseGrid(0.5j, 5, 0.05))
        assert analysis.negativity_volume(w) < 1e-6

    def test_decreases_with_decoherence(self):
        vols = [analysis.negativity_volume(analysis.wigner(kitten(o), analysis.cat_grid(0, 2))) for o in (0.01, 0.5, 2.0)]
        assert vols[0] > vols[1] > vols[2] > 0


class TestFidelity:
    def test_self(self):
        s = random_css(np.random.default_rng(1), 2, 3)
        assert analysis.fidelity(s, s) == pytest.approx(1, abs=1e-14)

    def test_vacuum_coherent(self):
        chi = 0.7 + 0.4j
        assert analysis.fidelity(css.coherent([0]), css.coherent([chi])) == pytest.approx(np.exp(-abs(chi) ** 2), rel=1e-14)

    @given(seeds)
    @settings(max_examples=20)
    def test_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_css(rng, 2, 2), random_css(rng, 2, 3)
        assert analysis.fidelity(a, b) == pytest.approx(analysis.fidelity(b, a), rel=1e-12, abs=1e-15)

    def test_mixed_types(self):
        with pytest.raises(TypeError):
            analysis.fidelity(css.coherent([0]), fock.coherent_fock(0, 4))


class TestPhotonStats:
    def test_poisson(self):
        chi = 1.1 - 0.5j
        mean, var = analysis.photon_stats(css.coherent([chi]))
        assert mean == pytest.approx(abs(chi) ** 2, rel=1e-14)
        assert var == pytest.approx(abs(chi) ** 2, rel=1e-12)

    def test_vacuum(self):
        assert analysis.photon_stats(css.coherent([0])) == (0.0, 0.0)

    def test_cat_against_oracle(self):
        s = kitten(0.01)
        v = fock.css_to_fock(s, 40).amplitudes
        n = fock.number_operator(40)
        mean = np.vdot(v, n @ v).real
        var = np.vdot(v, n @ n @ v).real - mean**2
        got = analysis.photon_stats(s)
        assert got[0] == pytest.approx(mean, abs=1e-8) and got[1] == pytest.approx(var, abs=1e-8)

    def test_selected_mode(self):
        mean, _ = analysis.photon_stats(css.coherent([0.1, 2.0]), mode=1)
        assert mean == pytest.approx(4.0)


class TestEntropy:
    def test_product(self):
        r = analysis.entanglement_entropy(css.coherent([0.4, -1j, 0.3]), [1])
        assert r.entropy < 1e-10

    def test_no_depletion(self):
        s = css.normalized(cond.build_phi_hh(0.5, table_from_shifts([0, 0.5, 0.8j])).state)
        assert analysis.entanglement_entropy(s, [0]).entropy < 1e-10

    def test_against_oracle(self):
        t = table_from_shifts([1.0, np.sqrt(1.0)])
        s = css.normalized(cond.build_phi_hh(1.0, t).state)
        _, ref = analysis.fock_entropy(fock.css_to_fock(s, 40), [0])
        assert analysis.entanglement_entropy(s, [0]).entropy == pytest.approx(ref, abs=1e-6)

    def test_composite_harmonic_side(self):
        t = table_from_shifts([1.0, np.sqrt(0.5), np.sqrt(0.5) * 1j])
        s = css.normalized(cond.build_phi_hh(1.0, t).state)
        _, ref = analysis.fock_entropy(fock.css_to_fock(s, 24), [0])
        r = analysis.entanglement_entropy(s, [0])
        assert r.entropy == pytest.approx(ref, abs=1e-6)
        assert r.entropy_bits == pytest.approx(r.entropy / np.log(2))

    @given(seeds)
    @settings(max_examples=25)
    def test_bounds(self, seed):
        rng = np.random.default_rng(seed)
        s = random_css(rng, 3, int(rng.integers(1, 5)), 1.5)
        r = analysis.entanglement_entropy(s, [int(rng.integers(3))])
        assert -1e-12 <= r.entropy <= np.log(s.n_terms) + 1e-10
        assert r.schmidt_coefficients.sum() == pytest.approx(1)

    @given(seeds, st.floats(-5, 5))
    @settings(max_examples=20)
    def test_alpha_shift_invariance(self, seed, delta):
        rng = np.random.default_rng(seed)
        t = random_table(rng, 3, 1.0)
        alpha = complex(*rng.normal(size=2))
        a = analysis.entanglement_entropy(css.normalized(cond.build_phi_hh(alpha, t).state), [0])
        b = analysis.entanglement_entropy(css.normalized(cond.build_phi_hh(alpha + delta, t).state), [0])
        assert abs(a.entropy - b.entropy) < 1e-10
        k = min(a.schmidt_coefficients.size, b.schmidt_coefficients.size)
        assert np.allclose(a.schmidt_coefficients[:k], b.schmidt_coefficients[:k], atol=1e-10)

    def test_regularization_reported(self):
        s = css.from_terms(2, [(1, [0, 0]), (1, [1e-9, 1])])
        r = analysis.entanglement_entropy(s, [0])
        assert r.regularized >= 1

    def test_bad_bipartition(self):
        with pytest.raises(ValueError):
            analysis.entanglement_entropy(css.coherent([0, 0]), [0, 1])


class TestCutoffScan:
    def test_no_harmonics(self):
        w = synth_dipole(DipoleSpec(Monochromatic(1)))
        rows = analysis.cutoff_scan(w, 0.01, [2, 4, 6])
        assert all(r.omega < 1e-20 for r in rows)

    def test_saturation(self):
        w = synth_dipole(DipoleSpec(HarmonicComb([(1, 1.0), (3, 20.0), (5, 15.0), (7, 10.0)])))
        rows = analysis.cutoff_scan(w, 0.01, [2, 3, 5, 7, 8, 9])
        om = [r.omega for r in rows]
        assert all(b >= a for a, b in zip(om, om[1:]))
        assert om[3] == pytest.approx(om[4], rel=1e-12) == pytest.approx(om[5], rel=1e-12)
        assert om[2] < om[3]
        negs = [r.cat_negativity for r in rows]
        assert negs[3] < negs[0]

    def test_validation(self):
        w = synth_dipole(DipoleSpec(Monochromatic(1)))
        with pytest.raises(ValueError):
            analysis.cutoff_scan(w, 0.01, [4, 2])
        with pytest.raises(ValueError):
            analysis.cutoff_scan(w, 0.01, [1])


def test_grid_text_roundtrip():
    g = analysis.wigner(css.coherent([0.2]), PhaseGrid(0.1 + 0.1j, 1.0, 0.25))
    text = analysis.format_grid(g)
    back = analysis.parse_grid(text)
    assert np.array_equal(back.values, g.values) and back.center == g.center
    assert text.startswith("# center_re=")
