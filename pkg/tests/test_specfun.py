import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from besselsquare.specfun import (
    BesselOrder,
    ConvergenceError,
    PoleError,
    ZeroTable,
    as_order,
    bessel_i,
    bessel_i_scaled,
    bessel_j,
    bessel_zero,
    bessel_zeros,
    beta_fn,
    hyp1f2,
    normalization_d,
)


def series_j(nu, x, terms=30):
    """Alternating power series for J_nu in exact-ish mpmath arithmetic."""
    mp.mp.dps = 40
    x = mp.mpf(x)
    return float(sum((-1) ** k * (x / 2) ** (2 * k + nu) / (mp.factorial(k) * mp.gamma(k + nu + 1))
                     for k in range(terms)))


def series_1f2(a, b1, b2, z, terms=200):
    mp.mp.dps = 50
    total, term = mp.mpf(1), mp.mpf(1)
    for k in range(terms):
        term *= (a + k) * mp.mpf(z) / ((b1 + k) * (b2 + k) * (k + 1))
        total += term
    return float(total)


class TestOrder:
    def test_rejects_nu_at_or_below_minus_one(self):
        for bad in (-1.0, -1.5, float("nan")):
            with pytest.raises(ValueError):
                BesselOrder(bad)

    def test_stored_as_given(self):
        assert BesselOrder(-0.75).nu == -0.75
        assert as_order(BesselOrder(0.3)) == 0.3


class TestBesselJ:
    def test_half_order_cosine_zero(self):
        assert abs(bessel_j(-0.5, math.pi / 2)) < 1e-16

    def test_order_zero_at_origin(self):
        assert bessel_j(0, 0.0) == 1.0

    def test_series_oracle(self):
        assert bessel_j(1, 1.0) == pytest.approx(0.44005058574493, rel=1e-13)
        for nu, x in ((1.0, 1.0), (0.0, 2.5), (-0.6, 3.0), (2.0, 7.5)):
            assert bessel_j(nu, x) == pytest.approx(series_j(nu, x, 60), rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_j(0, -1.0)
        with pytest.raises(ValueError):
            bessel_j(-0.5, 0.0)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-0.9, 3.0), st.floats(0.1, 30.0))
    def test_recurrence(self, nu, x):
        lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x) if nu - 1 > -1 else None
        if lhs is None:
            # J_{nu-1} with nu-1 <= -1 is outside the order range; use mpmath there
            lhs = float(mp.besselj(nu - 1, x)) + bessel_j(nu + 1, x)
        rhs = 2 * nu / x * bessel_j(nu, x)
        scale = abs(bessel_j(nu - 1 if nu - 1 > -1 else nu, x)) + abs(bessel_j(nu + 1, x))
        assert abs(lhs - rhs) <= 1e-9 * max(scale, 1e-300)


class TestBesselI:
    def test_closed_forms(self):
        assert bessel_i(-0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.cosh(1), rel=1e-14)
        assert bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1), rel=1e-14)
        assert bessel_i(0, 0.0) == 1.0

    def test_scaled_variant(self):
        for x in (0.5, 20.0, 800.0):
            ref = float(mp.besseli(1.3, x) * mp.exp(-x))
            assert bessel_i_scaled(1.3, x) == pytest.approx(ref, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_i(0, -0.1)


class TestZeros:
    def test_closed_forms(self):
        assert bessel_zero(0.5, 3) == pytest.approx(3 * math.pi, abs=1e-13)
        assert bessel_zero(-0.5, 1) == pytest.approx(math.pi / 2, abs=1e-13)

    def test_first_zero_of_j0_by_bisection(self):
        mp.mp.dps = 30
        root = mp.findroot(lambda v: mp.besselj(0, v), (2, 3), solver="bisect")
        assert bessel_zero(0, 1) == pytest.approx(float(root), abs=1e-13)
        assert bessel_zero(0, 1) == pytest.approx(2.404825557695773, abs=1e-14)

    def test_against_mpmath(self):
        for nu in (-0.75, 0.0, 1.3, 5.0):
            s = bessel_zeros(nu, 40)
            if nu >= 0:
                ref = [float(mp.besseljzero(nu, j)) for j in (1, 7, 40)]
            else:
                # mpmath has no negative-order zeros; bisect its J_nu on a sign bracket
                mp.mp.dps = 30
                ref = [float(mp.findroot(lambda v: mp.besselj(nu, v), (s[j - 1] - 0.5, s[j - 1] + 0.5),
                                         solver="bisect")) for j in (1, 7, 40)]
            assert np.allclose(s[[0, 6, 39]], ref, rtol=0, atol=1e-11)

    def test_index_validation(self):
        with pytest.raises(ValueError):
            bessel_zero(0, 0)

    def test_interlacing(self):
        for nu in (-0.6, 0.0, 2.0):
            a, b = bessel_zeros(nu, 200), bessel_zeros(nu + 1, 200)
            assert np.all(a[:-1] < b[:-1]) and np.all(b[:-1] < a[1:])

    def test_gap_asymptotic(self):
        s = bessel_zeros(0.3, 1001)
        j = np.arange(1, 1001)
        dev = np.abs(np.diff(s) - math.pi)
        slope = np.polyfit(np.log(j[10:]), np.log(dev[10:]), 1)[0]
        assert slope <= -0.9
        assert np.max(dev * j) < 1.0

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-0.95, 50.0), st.integers(1, 300))
    def test_residual_and_order(self, nu, n):
        s = bessel_zeros(nu, n)
        assert np.all(np.diff(s) > 0) and s[0] > 0
        assert np.max(np.abs(bessel_j(nu, s))) <= 1e-10


class TestNormalization:
    def test_half_order_is_sqrt_pi(self):
        d = normalization_d(0.5, np.arange(1, 30))
        assert np.allclose(d, math.sqrt(math.pi), rtol=0, atol=1e-13)

    def test_first_zero_order_zero(self):
        s = 2.404825557695773
        j1 = series_j(1.0, s, 60)
        assert j1 == pytest.approx(0.519147, abs=1e-6)
        assert normalization_d(0, 1) == pytest.approx(math.sqrt(2) / (math.sqrt(s) * j1), rel=1e-12)

    def test_tends_to_sqrt_pi(self):
        j = np.array([10, 100, 1000])
        err = np.abs(normalization_d(0, j) / math.sqrt(math.pi) - 1)
        assert np.all(err * j < 1.0)
        assert err[-1] < err[0]

    def test_table(self):
        t = ZeroTable.build(-0.3, 12)
        assert t.zeros.size == 13 and t.J == 12
        assert np.all(t.norms > 0)
        assert np.allclose(t.norms, normalization_d(-0.3, np.arange(1, 13)), rtol=1e-15)


class TestBeta:
    def test_values(self):
        assert beta_fn(2, 1) == pytest.approx(0.5, rel=1e-15)
        assert beta_fn(2, 2 * 1.5 - 1) == pytest.approx(1 / 6, rel=1e-15)
        assert beta_fn(0.5, 0.5) == pytest.approx(math.pi, rel=1e-14)

    def test_pole(self):
        with pytest.raises(PoleError):
            beta_fn(0, 1)


class TestHyp1F2:
    def test_zero_argument(self):
        assert hyp1f2(0.3, 1.2, 2.5, 0.0) == 1.0

    def test_against_series_oracle(self):
        for args in ((1, 2, 2, 3.0), (1, 2, 2, -30.0), (1.75, 1, 2.75, -0.25),
                     (1.75 + 0.5, 2.0, 3.5, -25.0), (1.625, 0.75, 3.125, -100.0)):
            assert hyp1f2(*args) == pytest.approx(series_1f2(*args), rel=1e-10)

    def test_pole_parameter(self):
        with pytest.raises(PoleError):
            hyp1f2(1, -2, 1, 0.5)

    def test_budget(self):
        with pytest.raises(ConvergenceError):
            hyp1f2(1, 1, 1, -1e6, max_terms=50)
