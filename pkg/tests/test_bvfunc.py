import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given
from hypothesis import strategies as st

from wignerfh.bvfunc import (FLAT, BVFunction, Piece, abs_shift, builtin_library, bump, from_descriptor,
                             indicator, integrate_df, monomial, norms, polynomial_on, ramp, smooth_cutoff, zero)
from wignerfh.errors import SpecError

LIB = builtin_library()
interval = st.tuples(st.floats(-2.9, 2.9), st.floats(-2.9, 2.9)).filter(lambda t: t[1] - t[0] > 1e-3)


def stieltjes_sum(g, f, a=-3.0, b=3.0, n=200001):
    # Riemann-Stieltjes sum on a fine grid: sum g(mid) [f(x_{k+1}) - f(x_k)]
    x = np.linspace(a - 1e-9, b + 1e-9, n)
    fx = f(x)
    return np.sum(g(0.5 * (x[1:] + x[:-1])) * np.diff(fx))


class TestEval:
    def test_indicator(self):
        f = indicator(0, 1)
        assert f(0.5) == 1 and f(-0.5) == 0 and f(1.5) == 0

    def test_right_continuous(self):
        f = indicator(0, 1)
        assert f(0.0) == 1.0
        assert f(1.0) == 0.0

    def test_abs_vanishes_at_shift(self):
        assert abs_shift(0.7)(0.7) == pytest.approx(0.0, abs=1e-15)
        assert abs_shift(0.7)(-1.3) == pytest.approx(2.0)

    def test_outside_support(self):
        for f in LIB.values():
            assert np.all(f(np.array([-3.5, 3.0, 4.0])) == 0)

    def test_cutoff_flat(self):
        x = np.linspace(-FLAT, FLAT, 101)
        np.testing.assert_allclose(monomial(2)(x), x**2, rtol=0, atol=1e-14)
        np.testing.assert_allclose(monomial(3)(x), x**3, rtol=0, atol=1e-13)
        c = smooth_cutoff()
        assert c(2.8) < 1 and c(2.8) > 0

    def test_regularity_flags(self):
        assert not LIB["indicator"].has_bounded_derivative
        for k in ("abs", "x", "x2", "x3", "bump", "ramp"):
            assert LIB[k].has_bounded_derivative, k

    def test_bad_construction(self):
        with pytest.raises(SpecError):
            indicator(1, 0)
        with pytest.raises(SpecError):
            BVFunction((0, 1, 0.5), (Piece.constant(1), Piece.constant(1)))
        with pytest.raises(SpecError):
            BVFunction((-4, 0), (Piece.constant(1),))
        with pytest.raises(SpecError):
            bump(2.5, 1.0)

    @given(st.floats(-3, 3))
    def test_deriv_matches_finite_difference(self, x):
        for name in ("x3", "bump", "ramp"):
            f = LIB[name]
            if np.min(np.abs(np.array(f.breakpoints) - x)) < 1e-3:
                continue
            h = 1e-6
            fd = (f(x + h) - f(x - h)) / (2 * h)
            assert f.deriv(x) == pytest.approx(fd, abs=1e-5)


class TestIntegrateDf:
    @pytest.mark.parametrize("name", sorted(LIB))
    def test_total_mass_zero(self, name):
        assert abs(integrate_df(np.ones_like, LIB[name])) < 1e-10

    @given(interval)
    def test_indicator_atoms(self, ab):
        a, b = ab
        assert integrate_df(lambda x: x, indicator(a, b)) == pytest.approx(a - b, abs=1e-12)

    def test_polynomial_piece(self):
        f = polynomial_on([0.0, 0.0, 1.0], -2, 2)
        g = np.cos
        # atoms: +4 at -2, -4 at 2; smooth part int cos(x) 2x dx = 0 (odd)
        want = 4 * np.cos(-2) - 4 * np.cos(2)
        assert integrate_df(g, f) == pytest.approx(want, abs=1e-12)
        cut = monomial(2)
        assert integrate_df(g, cut) == pytest.approx(stieltjes_sum(g, cut), abs=1e-6)

    @pytest.mark.parametrize("name", ["bump", "ramp", "x2", "abs"])
    def test_integration_by_parts(self, name):
        # int g df = -int g' f dx for atomless f
        f = LIB[name]
        x = np.linspace(-3, 3, 600001)
        lhs = integrate_df(np.sin, f)
        rhs = -trapezoid(np.cos(x) * f(x), x)
        assert abs(lhs - rhs) < 1e-8

    def test_complex_integrand(self):
        f = indicator(-1, 1)
        val = integrate_df(lambda x: np.exp(1j * x), f)
        assert val == pytest.approx(np.exp(-1j) - np.exp(1j))


class TestNorms:
    @given(interval)
    def test_indicator(self, ab):
        a, b = ab
        tv, l1 = norms(indicator(a, b))
        assert tv == pytest.approx(2.0) and l1 == pytest.approx(b - a)

    def test_x_with_jumps(self):
        tv, l1 = norms(polynomial_on([0, 1], -2, 2))
        assert tv == pytest.approx(8.0) and l1 == pytest.approx(4.0)

    def test_zero(self):
        assert norms(zero()) == (0.0, 0.0)

    def test_quadrature_pieces(self):
        tv, l1 = norms(bump())
        assert tv == pytest.approx(2.0, abs=1e-10)
        x = np.linspace(-1, 1, 400001)
        assert l1 == pytest.approx(trapezoid(bump()(x), x), abs=1e-8)

    @given(interval, interval, st.floats(-2, 2))
    def test_subadditive(self, ab, cd, s):
        f = indicator(*ab)
        g = ramp(-1, 1) * abs_shift(s)
        tf, lf = norms(f)
        tg, lg = norms(g)
        th, lh = norms(f + g)
        assert th <= tf + tg + 1e-9 and lh <= lf + lg + 1e-9


def test_arithmetic():
    f = indicator(-1, 1) + indicator(0, 2)
    assert f(0.5) == 2 and f(-0.5) == 1 and f(1.5) == 1
    g = 2.0 * monomial(1) - monomial(1)
    np.testing.assert_allclose(g(np.linspace(-2, 2, 9)), np.linspace(-2, 2, 9), atol=1e-14)
    assert (-indicator(0, 1))(0.5) == -1


def test_descriptors():
    f = from_descriptor({"kind": "indicator", "a": -0.5, "b": 0.25})
    assert f(0) == 1 and f(0.3) == 0 and f.name == "1[-0.5,0.25]"
    assert from_descriptor({"kind": "x2", "name": "sq"}).name == "sq"
    assert from_descriptor({"kind": "monomial", "k": 3})(0.5) == pytest.approx(0.125)
    with pytest.raises(SpecError):
        from_descriptor({"kind": "sine"})
    with pytest.raises(SpecError):
        from_descriptor({"a": 1})
    with pytest.raises(SpecError):
        from_descriptor({"kind": "indicator", "c": 1})
