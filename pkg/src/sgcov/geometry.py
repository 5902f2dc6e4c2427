"""Planar geometry of a disk of radius ``D`` seen from a point at distance ``d``
from its center.

The receiver sits at the origin; ``r`` is the radius of a circle around it.
All helpers broadcast over their arguments.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DomainError",
    "CircleConfig",
    "ChordRadii",
    "area",
    "area_derivative",
    "intersection_area",
    "intersection_area_derivative",
    "half_angle",
    "tangent_angle",
    "chord_radii",
    "safe_arccos",
    "safe_arcsin",
]

_TRIG_SLACK = 1e-12


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class CircleConfig:
    d: float
    D: float

    def __post_init__(self):
        if not self.D > 0:
            raise DomainError("disk radius D must be positive")
        if not self.d >= 0:
            raise DomainError("center separation d must be nonnegative")


class ChordRadii(NamedTuple):
    r_near: float
    r_far: float


def _clip_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + _TRIG_SLACK):
        raise DomainError("inverse-trig argument outside [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def safe_arccos(x):
    """``arccos`` that forgives overshoot up to 1e-12 and rejects anything larger."""
    return np.arccos(_clip_unit(x))


def safe_arcsin(x):
    return np.arcsin(_clip_unit(x))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _lens_terms(d, D, r):
    """Angles at the disk center and at the origin, plus ``K = 4 * triangle area``.

    The atan2 form keeps full precision where the circles are nearly tangent;
    the factored product avoids cancellation in ``K``.
    """
    k2 = (r + d - D) * (r + d + D) * (D - r + d) * (D + r - d)
    k = np.sqrt(np.maximum(k2, 0.0))
    big = np.arctan2(k, (D - r) * (D + r) + d * d)
    small = np.arctan2(k, (r - D) * (r + D) + d * d)
    return big, small, k


def _lens_area(d, D, r):
    # two circular segments; valid for |D - r| < d < D + r
    big, small, k = _lens_terms(d, D, r)
    return D * D * big + r * r * small - 0.5 * k


def area(d, D, r):
    """Area of ``b(o, r)`` intersected with a disk of radius ``D`` at distance ``d``.

    Piecewise: the smaller disk when one contains the other, zero when they
    are disjoint, the lens formula in between.  Vectorised version of
    :func:`intersection_area` without argument checks.
    """
    d, D, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (d, D, r)))
    out = np.empty(d.shape)
    inside = d <= np.abs(D - r)
    apart = d >= D + r
    lens = ~(inside | apart)
    out[inside] = np.pi * np.minimum(D[inside], r[inside]) ** 2
    out[apart] = 0.0
    out[lens] = _lens_area(d[lens], D[lens], r[lens])
    return _scalar(out)


def area_derivative(d, D, r):
    """``d area / d r``: arc length of the ``r``-circle inside the disk."""
    d, D, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (d, D, r)))
    out = np.zeros(d.shape)
    inner = r < D - d
    lens = (r >= np.abs(D - d)) & (r <= D + d) & (d > 0)
    out[inner] = 2.0 * np.pi * r[inner]
    out[lens] = 2.0 * r[lens] * _lens_terms(d[lens], D[lens], r[lens])[1]
    return _scalar(out)


def intersection_area(cfg: CircleConfig, r):
    """Area of the part of the disk ``b(x_o, D)`` within distance ``r`` of the origin.

    >>> round(intersection_area(CircleConfig(d=10, D=15), 5), 4)
    78.5398
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    return area(cfg.d, cfg.D, r)


def _check_lens(cfg: CircleConfig, r, what):
    r = np.asarray(r, dtype=float)
    lo, hi = abs(cfg.D - cfg.d), cfg.D + cfg.d
    slack = _TRIG_SLACK * hi
    if cfg.d == 0 or np.any(r < lo - slack) or np.any(r > hi + slack):
        raise DomainError(f"{what} needs |D - d| <= r <= D + d with d > 0")
    return r


def half_angle(cfg: CircleConfig, r):
    """Angle, seen from the origin, between the disk center and the points where
    the ``r``-circle crosses the disk boundary."""
    r = _check_lens(cfg, r, "half_angle")
    return _scalar(_lens_terms(cfg.d, cfg.D, r)[1])


def intersection_area_derivative(cfg: CircleConfig, r):
    """Radial derivative of :func:`intersection_area` in the lens regime.

    Equals ``2 r * half_angle(r)``; at the inner boundary this tends to
    ``2 pi r`` and at the outer one to zero.
    """
    r = _check_lens(cfg, r, "intersection_area_derivative")
    return _scalar(2.0 * r * _lens_terms(cfg.d, cfg.D, r)[1])


def tangent_angle(cfg: CircleConfig):
    if cfg.d < cfg.D:
        raise DomainError("tangent lines exist only for d >= D")
    return float(np.arcsin(cfg.D / cfg.d))


def chord_radii(cfg: CircleConfig, theta) -> ChordRadii:
    """Distances from the origin to the two disk-boundary crossings along the
    ray at angle ``theta`` from the direction of the center.

    For ``d <= D`` the near value is negative (the ray starts inside the disk);
    callers clamp it at zero.
    """
    theta = np.asarray(theta, dtype=float)
    d, D = cfg.d, cfg.D
    rad = D * D - (d * np.sin(theta)) ** 2
    if np.any(rad < -_TRIG_SLACK * D * D):
        raise DomainError("ray misses the disk")
    root = np.sqrt(np.maximum(rad, 0.0))
    base = d * np.cos(theta)
    return ChordRadii(_scalar(base - root), _scalar(base + root))
