import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhgcond import dipole
from hhgcond.dipole import DipoleSpec, DipoleWaveform, HarmonicComb, Monochromatic, synth_dipole


def mono(q0, cycles=8, spc=64, amplitude=1.0):
    return synth_dipole(DipoleSpec(Monochromatic(q0, amplitude), cycles, spc))


def brute_phase(w, q, kappa):
    # ordered double trapezoid, written as an explicit loop
    t, d, dt = w.times, w.samples, w.dt
    total = 0.0
    for i in range(t.size):
        if i == 0:
            inner = 0.0
        else:
            f = d[: i + 1] * np.sin(q * w.omega * (t[i] - t[: i + 1]))
            inner = dt * (f.sum() - 0.5 * (f[0] + f[-1]))
        wt = 0.5 * dt if i in (0, t.size - 1) else dt
        total += wt * d[i] * inner
    return q * kappa**2 * total


class TestSynth:
    def test_monochromatic_samples(self):
        w = mono(3)
        assert w.times[0] == 0 and w.times[-1] == pytest.approx(16 * np.pi)
        assert np.allclose(w.samples, np.cos(3 * w.times), atol=1e-15)

    def test_zero_amplitude(self):
        assert not np.any(mono(2, amplitude=0.0).samples)

    def test_comb_origin(self):
        w = synth_dipole(DipoleSpec(HarmonicComb([(1, 1.0), (3, 0.5)])))
        assert w.samples[0] == 1.5

    def test_undersampling_rejected(self):
        with pytest.raises(ValueError, match="8 \\* 9 = 72"):
            synth_dipole(DipoleSpec(Monochromatic(9), samples_per_cycle=64))

    def test_zero_cycles_rejected(self):
        with pytest.raises(ValueError):
            synth_dipole(DipoleSpec(Monochromatic(1), cycles=0))

    def test_waveform_validation(self):
        with pytest.raises(ValueError):
            DipoleWaveform([1.0], dt=1.0)
        with pytest.raises(ValueError):
            DipoleWaveform([1.0, 2.0], dt=0.0)
        with pytest.raises(ValueError):
            DipoleWaveform([1.0, np.inf], dt=0.1)


class TestShift:
    def test_closed_form(self):
        w = mono(3)
        chi = dipole.mode_shift(w, 3, 0.01)
        want = -1j * math.sqrt(3) * 0.01 * 8 * math.pi
        assert chi == pytest.approx(want, rel=1e-12)
        assert chi.imag == pytest.approx(-0.43531, abs=1e-5)

    def test_orthogonality(self):
        assert abs(dipole.mode_shift(mono(3), 2, 0.01)) < 1e-10

    def test_zero_waveform(self):
        assert dipole.mode_shift(mono(1, amplitude=0.0), 4, 0.01) == 0

    def test_bad_order(self):
        with pytest.raises(ValueError):
            dipole.mode_shift(mono(1), 0)

    @given(st.integers(0, 2**32 - 1), st.floats(1e-4, 1.0), st.floats(-3, 3))
    @settings(max_examples=25)
    def test_linearity(self, seed, kappa, c):
        rng = np.random.default_rng(seed)
        a = DipoleWaveform(rng.normal(size=101), dt=0.07)
        b = DipoleWaveform(rng.normal(size=101), dt=0.07)
        q = int(rng.integers(1, 6))
        lhs = dipole.mode_shift(a + b.scaled(c), q, kappa)
        rhs = dipole.mode_shift(a, q, kappa) + c * dipole.mode_shift(b, q, kappa)
        scale = abs(dipole.mode_shift(a, q, kappa)) + abs(c * dipole.mode_shift(b, q, kappa))
        assert abs(lhs - rhs) <= 1e-12 * scale
        assert dipole.mode_shift(a, q, 2 * kappa) == pytest.approx(2 * dipole.mode_shift(a, q, kappa), rel=1e-12)

    def test_second_order_convergence_on_open_window(self):
        # window of 5.3 time units is not a whole number of periods, so the
        # endpoint error of the trapezoid rule is visible and O(dt^2)
        q0, q, T = 3, 2, 5.3

        def exact():
            f = lambda t: 0.5 * ((np.exp(1j * (q + q0) * t) - 1) / (1j * (q + q0)) + (np.exp(1j * (q - q0) * t) - 1) / (1j * (q - q0)))
            return -1j * math.sqrt(q) * 0.01 * f(T)

        errs = []
        for n in (200, 400, 800, 1600):
            t = np.linspace(0, T, n + 1)
            w = DipoleWaveform(np.cos(q0 * t), dt=T / n)
            errs.append(abs(dipole.mode_shift(w, q, 0.01) - exact()))
        ratios = [a / b for a, b in zip(errs, errs[1:])]
        assert all(3.9 < r < 4.1 for r in ratios), ratios


class TestPhase:
    def test_zero_waveform(self):
        assert dipole.mode_phase(mono(1, amplitude=0.0), 1, 0.01) == 0

    def test_kappa_squared(self):
        w = mono(1, cycles=4)
        assert dipole.mode_phase(w, 1, 0.02) == pytest.approx(4 * dipole.mode_phase(w, 1, 0.01), rel=1e-12)

    def test_against_double_loop(self):
        w = mono(1, cycles=4)
        for q in (1, 2, 3):
            assert dipole.mode_phase(w, q, 0.01) == pytest.approx(brute_phase(w, q, 0.01), rel=1e-6, abs=1e-18)

    def test_closed_form(self):
        # cos t over 4 periods, q = 1: q kappa^2 int t sin(2t)/4 dt = -pi kappa^2
        w = mono(1, cycles=4, spc=512)
        assert dipole.mode_phase(w, 1, 0.01) == pytest.approx(-math.pi * 1e-4, rel=1e-4)


class TestTable:
    def test_spectral_support(self):
        w = synth_dipole(DipoleSpec(HarmonicComb([(1, 0.7), (3, 0.2)])))
        t = dipole.all_shifts(w, 6, 0.01)
        big = [q for q in range(1, 7) if abs(t.shift(q)) > 1e-10]
        assert big == [1, 3]

    def test_cutoff_two(self):
        t = dipole.all_shifts(mono(1), 2)
        assert t.N == 2 and t.shifts.shape == (2,)
        with pytest.raises(ValueError):
            dipole.all_shifts(mono(1), 1)

    def test_double_kappa(self):
        w = synth_dipole(DipoleSpec(HarmonicComb([(1, 1.0), (2, 0.3), (5, 0.1)])))
        a, b = dipole.all_shifts(w, 5, 0.01), dipole.all_shifts(w, 5, 0.02)
        assert np.allclose(np.abs(b.shifts), 2 * np.abs(a.shifts), rtol=1e-12, atol=0)

    def test_omega_examples(self):
        assert dipole.decoherence_factor(dipole.table_from_shifts([0, 0, 0])) == 0
        assert dipole.decoherence_factor(dipole.table_from_shifts([0, 0.3, 0.4])) == pytest.approx(0.25, abs=1e-16)
        assert dipole.decoherence_factor(dipole.table_from_shifts([5, 0])) == 0

    def test_omega_additive(self):
        a = dipole.table_from_shifts([0.1, 0.2, 0, 0.3j, 0])
        b = dipole.table_from_shifts([0.1, 0, 0.5, 0, -0.1])
        ab = dipole.table_from_shifts(a.shifts + np.array([0, 0, 0.5, 0, -0.1]))
        total = dipole.decoherence_factor(a) + dipole.decoherence_factor(b)
        assert dipole.decoherence_factor(ab) == pytest.approx(total, rel=1e-15)

    def test_needs_fundamental(self):
        with pytest.raises(ValueError):
            dipole.table_from_shifts([])

    def test_text_roundtrip(self):
        w = synth_dipole(DipoleSpec(HarmonicComb([(1, 1.0), (3, 0.5)])))
        t = dipole.all_shifts(w, 4, 0.03)
        back = dipole.parse_shift_table(dipole.format_shift_table(t))
        assert np.array_equal(back.shifts, t.shifts) and np.array_equal(back.phases, t.phases)
        assert back.kappa == 0.03

    def test_parse_rejects_gaps(self):
        with pytest.raises(ValueError):
            dipole.parse_shift_table("N=2\nq=1 re=0 im=0 phi=0\n")


class TestWaveformFile:
    def test_roundtrip(self, tmp_path):
        w = mono(2, cycles=2, spc=32)
        p = tmp_path / "d.txt"
        dipole.save_waveform(w, p)
        back = dipole.load_waveform(p)
        assert np.array_equal(back.samples, w.samples)
        assert back.dt == pytest.approx(w.dt, rel=1e-12)

    def test_nonuniform_rejected(self, tmp_path):
        p = tmp_path / "d.txt"
        p.write_text("# t d\n0 1\n0.1 2\n0.25 3\n")
        with pytest.raises(ValueError, match="uniformly"):
            dipole.load_waveform(p)

    def test_wrong_columns(self, tmp_path):
        p = tmp_path / "d.txt"
        p.write_text("0 1 2\n1 2 3\n")
        with pytest.raises(ValueError, match="2 columns"):
            dipole.load_waveform(p)
