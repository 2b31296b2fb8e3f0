"""Exact free evolution, S~ and Duhamel quadrature."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlwlab.fourier_field import CauchyPair, FourierField, apply_multiplier, bracket
from nlwlab.lp_calculus import random_field
from nlwlab.propagators import (
    FreeWave,
    duhamel_increment,
    free_evolve,
    linear_energy,
    tilde_free_evolve,
)

COS1 = FourierField.from_modes(2, cos={(1, 0, 0): 1.0})
ZERO = FourierField.zeros(2)


def random_pair(seed, M=4):
    rng = np.random.default_rng(seed)
    return CauchyPair(random_field(M, rng), random_field(M, rng), 0.5)


def close(a, b, tol=1e-12):
    return np.max(np.abs(a.coeffs - b.coeffs)) <= tol * max(1.0, np.max(np.abs(b.coeffs)))


class TestFreeEvolve:
    def test_identity_at_zero(self):
        P = random_pair(0)
        out = free_evolve(P, 0.0)
        assert close(out.u0, P.u0) and close(out.u1, P.u1)

    def test_single_mode_quarter_period(self):
        out = free_evolve(CauchyPair(COS1, ZERO), math.pi / 2)
        assert np.max(np.abs(out.u0.coeffs)) < 1e-15
        assert close(out.u1, -1.0 * COS1)

    def test_zero_mode_ballistic(self):
        out = free_evolve(CauchyPair(FourierField.constant(2.0, 1), FourierField.constant(3.0, 1)), 0.7)
        assert out.u0.coeffs[1, 1, 1] == pytest.approx(2 + 3 * 0.7, abs=1e-15)
        assert out.u1.coeffs[1, 1, 1] == pytest.approx(3.0)

    @given(seed=st.integers(0, 10**6), t1=st.floats(-5, 5), t2=st.floats(-5, 5))
    @settings(max_examples=40, deadline=None)
    def test_group_law(self, seed, t1, t2):
        P = random_pair(seed, 3)
        a = free_evolve(free_evolve(P, t1), t2)
        b = free_evolve(P, t1 + t2)
        assert close(a.u0, b.u0, 1e-12) and close(a.u1, b.u1, 1e-12)

    @given(seed=st.integers(0, 10**6), t=st.floats(-5, 5))
    @settings(max_examples=40, deadline=None)
    def test_reversible(self, seed, t):
        P = random_pair(seed, 3)
        back = free_evolve(free_evolve(P, t), -t)
        assert close(back.u0, P.u0) and close(back.u1, P.u1)

    def test_linear_energy_conserved(self):
        P = random_pair(5)
        e0 = linear_energy(P)
        for t in (0.3, 1.7, 12.0):
            assert linear_energy(free_evolve(P, t)) == pytest.approx(e0, rel=1e-10)

    def test_free_wave_matches(self):
        P = random_pair(6)
        z = FreeWave(P)
        assert close(z(0.9), free_evolve(P, 0.9).u0)
        stack = z.positions([0.0, 0.9])
        assert np.allclose(stack[1], z.position(0.9))


class TestTilde:
    def test_zero_at_t0_without_velocity(self):
        assert np.all(tilde_free_evolve(CauchyPair(COS1, ZERO), 0.0).coeffs == 0)

    def test_velocity_only(self):
        out = tilde_free_evolve(CauchyPair(ZERO, COS1), 0.0)
        assert close(out, COS1 * (1 / math.sqrt(2)))

    def test_bracket_identity(self):
        P = random_pair(8)
        lhs = apply_multiplier(tilde_free_evolve(P, 0.7), bracket(1.0))
        assert close(lhs, free_evolve(P, 0.7).u1)


class TestDuhamel:
    def test_zero_forcing(self):
        f = [(t, ZERO) for t in np.linspace(0, 1, 5)]
        assert np.all(duhamel_increment(f, 0.0, 1.0).coeffs == 0)

    @pytest.mark.parametrize("n", [8, 16, 32])
    def test_constant_zero_mode(self, n):
        t = 1.3
        f = [(s, FourierField.constant(1.0, 1)) for s in np.linspace(0, t, n + 1)]
        assert duhamel_increment(f, 0.0, t).coeffs[1, 1, 1].real == pytest.approx(t * t / 2, rel=1e-12)

    def test_cos_forcing_second_order(self):
        t = 2.0
        exact = (1 - math.cos(t)) * COS1
        errs = []
        for n in (8, 16, 32):
            f = [(s, COS1) for s in np.linspace(0, t, n + 1)]
            errs.append(np.max(np.abs(duhamel_increment(f, 0.0, t).coeffs - exact.coeffs)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)

    def test_sub_interval(self):
        f = [(s, FourierField.constant(1.0, 1)) for s in np.linspace(0, 2, 21)]
        assert duhamel_increment(f, 0.5, 1.5).coeffs[1, 1, 1].real == pytest.approx(0.5, rel=1e-12)

    def test_coverage_checked(self):
        f = [(s, COS1) for s in np.linspace(0, 1, 5)]
        with pytest.raises(ValueError):
            duhamel_increment(f, 0.0, 2.0)
        with pytest.raises(ValueError):
            duhamel_increment(f, 0.1, 1.0)
        with pytest.raises(ValueError):
            duhamel_increment(f[:1], 0.0, 0.0)
