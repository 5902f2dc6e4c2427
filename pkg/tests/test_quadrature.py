import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from sgcov.quadrature import (
    IntegrationError,
    QuadratureSettings,
    integrate,
    integrate_batch,
    integrate_tail,
    integrate_tail_batch,
    kernel_F,
    kernel_F_complement,
    kernel_F_diff,
    kernel_F_inf,
    solve_tail_cutoff,
)


def kernel_oracle(s, x, a):
    # split at the knee t = s**(1/a) so quad sees two smooth pieces
    knee = min(x, s ** (1.0 / a))
    f = lambda t: 2.0 * t / (1.0 + t**a / s)
    lo = sint.quad(f, 0.0, knee, epsabs=0, epsrel=1e-13, limit=500)[0]
    hi = sint.quad(f, knee, x, epsabs=0, epsrel=1e-13, limit=500)[0] if x > knee else 0.0
    return lo + hi


def test_kernel_zero_radius():
    assert kernel_F(3.0, 0.0, 4.0) == 0.0


def test_kernel_small_radius_is_area_like():
    # F ~ x**2 when x**alpha << s
    assert kernel_F(1e6, 0.01, 4.0) == pytest.approx(1e-4, rel=1e-12)


def test_kernel_alpha4_closed_form():
    # alpha = 4 gives sqrt(s) * arctan(x**2 / sqrt(s))
    s, x = 7.3, np.linspace(0.1, 30, 25)
    assert np.allclose(kernel_F(s, x, 4.0), math.sqrt(s) * np.arctan(x**2 / math.sqrt(s)), rtol=1e-13)


def test_kernel_limit_matches_closed_form():
    s, a = 2.5, 3.5
    assert kernel_F(s, 1e9, a) == pytest.approx(kernel_F_inf(s, a), rel=1e-12)
    with mpmath.workdps(30):
        tail = float(mpmath.quad(lambda t: 2 * t / (1 + t**a / s), [40, 100, 1000, mpmath.inf]))
    assert kernel_F_complement(s, 40.0, a) == pytest.approx(tail, rel=1e-12)


@pytest.mark.parametrize("s,x,a", [(1e-3, 50.0, 2.1), (1e6, 1.0, 6.0), (1.0, 1.0, 3.0), (40.0, 2.6, 3.9)])
def test_kernel_matches_quadrature(s, x, a):
    assert kernel_F(s, x, a) == pytest.approx(kernel_oracle(s, x, a), rel=1e-10)


def test_kernel_broadcasts():
    out = kernel_F(np.array([1.0, 2.0]), np.array([[1.0], [2.0]]), 4.0)
    assert out.shape == (2, 2)


@pytest.mark.parametrize("args", [(0.0, 1.0, 4.0), (1.0, -1.0, 4.0), (1.0, 1.0, 2.0)])
def test_kernel_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        kernel_F(*args)


def test_kernel_diff_large_radii_no_cancellation():
    s, a = 1.0, 4.0
    hi, lo = 2000.0, 1000.0
    # exact: sqrt(s) (arctan(hi^2) - arctan(lo^2)) = 1/lo^2 - 1/hi^2 to leading order
    exact = math.atan(1 / lo**2) - math.atan(1 / hi**2)
    assert kernel_F_diff(s, hi, lo, a) == pytest.approx(exact, rel=1e-10)


@given(
    s=st.floats(1e-3, 1e6),
    x=st.floats(0.0, 100.0),
    a=st.floats(2.05, 6.0),
)
def test_kernel_property_matches_oracle(s, x, a):
    ref = kernel_oracle(s, x, a)
    assert abs(kernel_F(s, x, a) - ref) <= 1e-9 * max(ref, 1e-300)


@given(s=st.floats(1e-2, 1e4), a=st.floats(2.1, 6.0), x1=st.floats(0, 80), x2=st.floats(0, 80))
def test_kernel_monotone_in_radius(s, a, x1, x2):
    lo, hi = sorted((x1, x2))
    assert kernel_F(s, hi, a) >= kernel_F(s, lo, a)
    assert kernel_F(s, hi, a) <= kernel_F_inf(s, a) * (1 + 1e-12)


def test_settings_validation():
    with pytest.raises(ValueError):
        QuadratureSettings(abs_tol=-1)
    with pytest.raises(ValueError):
        QuadratureSettings(max_subdivisions=0)
    t = QuadratureSettings().tighter()
    assert t.rel_tol < QuadratureSettings().rel_tol


def test_integrate_polynomial_and_singular_endpoint():
    assert integrate(lambda x: x**3, 0.0, 2.0) == pytest.approx(4.0, rel=1e-12)
    assert integrate(lambda x: 1 / np.sqrt(x), 0.0, 1.0) == pytest.approx(2.0, rel=1e-7)


def test_integrate_batch_owners():
    a = np.zeros(3)
    b = np.array([1.0, 2.0, 3.0])
    k = np.array([1.0, 2.0, 3.0])
    vals = integrate_batch(lambda x, own: k[own] * x, a, b)
    assert np.allclose(vals, k * b**2 / 2, rtol=1e-12)


def test_integrate_batch_budget_failure():
    s = QuadratureSettings(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=4)
    with pytest.raises(IntegrationError):
        integrate_batch(lambda x, _: np.sin(1 / x), [1e-6], [1.0], s)


def test_integrate_rejects_reversed_limits():
    with pytest.raises(ValueError):
        integrate(lambda x: x, 1.0, 0.0)


def test_tail_integrals():
    # power law with a rigorous bound
    val = integrate_tail(lambda u: u**-3.0, 1.0, decay_hint=4.0, tail_bound=lambda U: 0.5 * U**-2.0)
    assert val == pytest.approx(0.5, abs=1e-9)
    # exponential without a bound
    assert integrate_tail(lambda u: np.exp(-u), 0.0) == pytest.approx(1.0, rel=1e-9)
    vals = integrate_tail_batch(lambda u, own: np.exp(-(own + 1.0) * u), np.zeros(3))
    assert np.allclose(vals, 1.0 / np.arange(1, 4), rtol=1e-9)


def test_tail_rejects_divergent_hint():
    with pytest.raises(ValueError):
        integrate_tail(lambda u: 1 / u, 1.0, decay_hint=2.0)


def test_tail_cutoff_is_tight():
    U = solve_tail_cutoff(lambda U: 1.0 / U, np.array([1.0]), 1e-3)
    assert 1e3 <= U[0] <= 1e3 * 2 ** 0.2
