import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from sgcov.geometry import (
    CircleConfig,
    DomainError,
    _lens_area,
    area,
    area_derivative,
    chord_radii,
    half_angle,
    intersection_area,
    intersection_area_derivative,
    safe_arccos,
    tangent_angle,
)


def area_by_angle(d, D, r):
    # independent oracle: integrate the clipped chord length in polar coordinates
    kinks = [0.0, math.pi]
    if d > 0 and r > 0:
        c = (r * r + d * d - D * D) / (2 * d * r)
        if abs(c) < 1:
            kinks.append(math.acos(c))
    if d > D:
        kinks.append(math.asin(D / d))

    def inner(theta):
        rad = D * D - (d * math.sin(theta)) ** 2
        if rad <= 0:
            return 0.0
        root = math.sqrt(rad)
        near = max(d * math.cos(theta) - root, 0.0)
        far = d * math.cos(theta) + root
        lo, hi = min(near, r), min(max(far, 0.0), r)
        return 0.5 * (hi * hi - lo * lo)
    kinks = sorted(set(kinks))
    return 2 * sum(sint.quad(inner, a, b, epsabs=1e-12, epsrel=1e-13, limit=200)[0]
                   for a, b in zip(kinks[:-1], kinks[1:]))


def test_docstring_example():
    assert intersection_area(CircleConfig(d=10, D=15), 5) == pytest.approx(25 * math.pi)


@pytest.mark.parametrize("d,D,r", [(0.0, 15, 10), (0.0, 15, 20), (10, 15, 4), (10, 15, 12),
                                   (10, 15, 24), (20, 15, 10), (20, 15, 34), (20, 15, 40), (3, 5, 30)])
def test_area_pieces_match_polar_oracle(d, D, r):
    assert area(d, D, r) == pytest.approx(area_by_angle(d, D, r), abs=1e-8)


@pytest.mark.parametrize("d,D", [(10.0, 15.0), (20.0, 15.0), (15.0, 15.0), (1e-3, 15.0)])
def test_area_continuous_at_boundaries(d, D):
    for edge in (abs(D - d), D + d):
        if edge == 0:
            continue
        eps = 1e-12 * edge
        jump = area(d, D, edge + eps) - area(d, D, edge - eps)
        # remove the genuine increase over the 2 eps step
        assert abs(jump - 2 * eps * area_derivative(d, D, edge)) < 1e-9
        # the lens formula evaluated exactly on the boundary agrees with the neighbouring piece
        lens = _lens_area(d, D, edge)
        if edge == D + d:
            piece = math.pi * D * D
        else:
            piece = math.pi * edge * edge if d < D else 0.0
        assert abs(lens - piece) < 1e-9


def test_derivative_matches_finite_difference():
    for d, D in ((10.0, 15.0), (20.0, 15.0)):
        r = np.linspace(abs(D - d) + 0.1, D + d - 0.1, 50)
        h = 1e-5 * r
        fd = (area(d, D, r + h) - area(d, D, r - h)) / (2 * h)
        assert np.allclose(area_derivative(d, D, r), fd, rtol=1e-6)
        assert np.allclose(intersection_area_derivative(CircleConfig(d, D), r), fd, rtol=1e-6)


def test_derivative_limits():
    cfg = CircleConfig(10.0, 15.0)
    assert intersection_area_derivative(cfg, 5.0) == pytest.approx(2 * math.pi * 5.0)
    assert intersection_area_derivative(cfg, 25.0) == pytest.approx(0.0, abs=1e-6)


def test_half_and_tangent_angles():
    cfg = CircleConfig(20.0, 15.0)
    assert tangent_angle(cfg) == pytest.approx(math.asin(0.75))
    # at the tangent distance the crossings coincide with the tangent direction
    rt = math.sqrt(20.0**2 - 15.0**2)
    assert half_angle(cfg, rt) == pytest.approx(tangent_angle(cfg), abs=1e-6)
    with pytest.raises(DomainError):
        tangent_angle(CircleConfig(10.0, 15.0))
    with pytest.raises(DomainError):
        half_angle(cfg, 1.0)


def test_chord_radii():
    near, far = chord_radii(CircleConfig(20.0, 15.0), 0.0)
    assert (near, far) == pytest.approx((5.0, 35.0))
    near, far = chord_radii(CircleConfig(0.0, 15.0), 1.0)
    assert (near, far) == pytest.approx((-15.0, 15.0))
    with pytest.raises(DomainError):
        chord_radii(CircleConfig(20.0, 15.0), math.pi / 2)


def test_domain_errors():
    with pytest.raises(DomainError):
        CircleConfig(1.0, 0.0)
    with pytest.raises(DomainError):
        CircleConfig(-1.0, 1.0)
    with pytest.raises(DomainError):
        intersection_area(CircleConfig(1.0, 1.0), -1.0)
    with pytest.raises(DomainError):
        safe_arccos(1.001)
    assert safe_arccos(1 + 1e-13) == 0.0


@given(d=st.floats(0, 50), D=st.floats(0.5, 30), r1=st.floats(0, 100), r2=st.floats(0, 100))
def test_area_monotone_and_bounded(d, D, r1, r2):
    lo, hi = sorted((r1, r2))
    a_lo, a_hi = area(d, D, lo), area(d, D, hi)
    assert a_lo <= a_hi + 1e-9 * D * D
    assert a_hi <= min(math.pi * D * D, math.pi * hi * hi) * (1 + 1e-12) + 1e-12
    assert a_lo >= 0


@given(d=st.floats(0.1, 50), D=st.floats(0.5, 30), r=st.floats(0.01, 100))
def test_area_symmetry(d, D, r):
    # swapping the roles of the two circles leaves the overlap unchanged
    assert area(d, D, r) == pytest.approx(area(d, r, D), rel=1e-9, abs=1e-9)
