"""Coverage analysis for one cluster: a Poisson process of transmitters on a
disk, with the receiver at the origin and the disk center at distance ``d``.

Everything is conditioned on the disk holding at least one transmitter; the
unconditional coverage carries the factor ``1 - exp(-lam pi D^2)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import DomainError, area, area_derivative
from .quadrature import QuadratureSettings, integrate_batch, kernel_F_diff

__all__ = [
    "SingleClusterGeometry",
    "ChannelModel",
    "Strategy",
    "BranchError",
    "serving_ccdf_closest",
    "serving_pdf_closest",
    "serving_cdf_uniform",
    "serving_pdf_uniform",
    "lt_interference_closest",
    "lt_interference_uniform",
    "lt_lb_closest",
    "lt_lb_uniform",
    "coverage",
    "coverage_lower_bound",
    "spectral_efficiency",
]


@dataclass(frozen=True)
class SingleClusterGeometry:
    lam: float
    D: float
    d: float

    def __post_init__(self):
        if not (self.lam > 0 and self.D > 0 and self.d >= 0):
            raise DomainError("need lam > 0, D > 0, d >= 0")

    @property
    def mean_count(self) -> float:
        return self.lam * math.pi * self.D**2

    @property
    def p_nonempty(self) -> float:
        return -math.expm1(-self.mean_count)


@dataclass(frozen=True)
class ChannelModel:
    alpha: float
    sigma2: float = 1e-4

    def __post_init__(self):
        if not self.alpha > 2:
            raise DomainError("path-loss exponent must exceed 2")
        if not self.sigma2 >= 0:
            raise DomainError("noise power must be nonnegative")


class Strategy(enum.Enum):
    CLOSEST = "closest"
    UNIFORM = "uniform"


class BranchError(DomainError):
    """Serving distance outside the support for the given receiver offset."""


def _arr(x):
    return np.asarray(x, dtype=float)


def _out(x, like):
    return float(np.asarray(x).item()) if np.ndim(like) == 0 else x


# --------------------------------------------------------------------------
# serving distance
# --------------------------------------------------------------------------

def serving_ccdf_closest(geom: SingleClusterGeometry, r):
    """``P(R_c > r | at least one transmitter)``."""
    r = _arr(r)
    L0 = geom.mean_count
    covered = geom.lam * area(geom.d, geom.D, r)
    out = (np.exp(-covered) - math.exp(-L0)) / -math.expm1(-L0)
    return _out(np.clip(out, 0.0, 1.0), r)


def serving_pdf_closest(geom: SingleClusterGeometry, r):
    r = _arr(r)
    lam = geom.lam
    dens = lam * area_derivative(geom.d, geom.D, r) * np.exp(-lam * area(geom.d, geom.D, r))
    return _out(dens / geom.p_nonempty, r)


def serving_cdf_uniform(geom: SingleClusterGeometry, r):
    r = _arr(r)
    return _out(area(geom.d, geom.D, r) / (math.pi * geom.D**2), r)


def serving_pdf_uniform(geom: SingleClusterGeometry, r):
    r = _arr(r)
    return _out(area_derivative(geom.d, geom.D, r) / (math.pi * geom.D**2), r)


# --------------------------------------------------------------------------
# Laplace transforms, closest selection
# --------------------------------------------------------------------------

def _far_chord(d, D, theta):
    # clamped: for d = D the ray at theta = pi ends at the origin
    return np.maximum(d * np.cos(theta) + np.sqrt(np.maximum(D * D - (d * np.sin(theta)) ** 2, 0.0)), 0.0)


def _near_chord(d, D, theta):
    return d * np.cos(theta) - np.sqrt(np.maximum(D * D - (d * np.sin(theta)) ** 2, 0.0))


def _cross_angle(d, D, r):
    c = (r * r + d * d - D * D) / (2.0 * d * r)
    return np.arccos(np.clip(c, -1.0, 1.0))


_BRANCH_SLACK = 1e-9


def closest_branches(d, D, rc):
    """Label each ``(d, rc)`` pair with the closest-selection LT branch.

    Returns an integer array: 0 for the receiver-inside disk case (``rc <
    D - d``), 1 for the lens case, 2 for the case where the near boundary
    still shadows part of the cone (``d > D`` and ``rc < sqrt(d^2 - D^2)``).
    """
    d, rc = np.broadcast_arrays(_arr(d), _arr(rc))
    slack = _BRANCH_SLACK * (D + d)
    label = np.full(d.shape, 1, dtype=int)
    inside = d <= D
    label[inside & (rc < D - d)] = 0
    outside = ~inside
    tangent = np.sqrt(np.maximum(d * d - D * D, 0.0))
    label[outside & (rc < tangent)] = 2
    bad = (rc > D + d + slack) | (outside & (rc < d - D - slack)) | (rc < 0)
    if bad.any():
        raise BranchError("serving distance outside the support of the serving distance")
    return label


def lt_closest_exponent(lam, D, alpha, d, s, rc, settings: QuadratureSettings | None = None):
    """Log of the closest-selection interference LT, vectorised over ``(d, s, rc)``.

    The interferers form a Poisson process on the disk minus ``b(o, rc)``;
    in polar coordinates around the receiver the radial part of the PGFL
    integral is ``F(s, outer) - F(s, inner)/2`` per unit angle, which leaves
    one angular integral per branch.
    """
    settings = (settings or QuadratureSettings()).tighter()
    d, s, rc = (a.ravel() for a in np.broadcast_arrays(_arr(d), _arr(s), _arr(rc)))
    shape = np.broadcast_shapes(np.shape(d), np.shape(s), np.shape(rc))
    label = closest_branches(d, D, rc)
    n = d.size
    upper = np.empty(n)
    upper[label == 0] = math.pi
    lens = label != 0
    upper[lens] = _cross_angle(d[lens], D, np.maximum(rc[lens], 1e-300))

    def main(theta, own):
        return kernel_F_diff(s[own], _far_chord(d[own], D, theta), rc[own], alpha)

    expo = -lam * integrate_batch(main, np.zeros(n), upper, settings)

    shadow = np.flatnonzero(label == 2)
    if shadow.size:
        dd, ss = d[shadow], s[shadow]
        t0 = upper[shadow]
        t1 = np.arcsin(np.minimum(D / dd, 1.0))
        span = t1 - t0

        def cone(psi, own):
            theta = t0[own] + span[own] * np.sin(psi)
            hi = _far_chord(dd[own], D, theta)
            lo = np.maximum(_near_chord(dd[own], D, theta), 0.0)
            return kernel_F_diff(ss[own], hi, lo, alpha) * span[own] * np.cos(psi)

        expo[shadow] -= lam * integrate_batch(cone, np.zeros(shadow.size),
                                              np.full(shadow.size, 0.5 * math.pi), settings)
    return expo.reshape(shape)


def lt_interference_closest(geom: SingleClusterGeometry, channel: ChannelModel, s, R_c,
                            settings: QuadratureSettings | None = None):
    """LT of the interference given the serving distance, closest selection."""
    s, R_c = _arr(s), _arr(R_c)
    if np.any(~(s > 0)):
        raise DomainError("LT argument must be positive")
    out = np.exp(lt_closest_exponent(geom.lam, geom.D, channel.alpha, geom.d, s, R_c, settings))
    return _out(out, np.broadcast_to(s, np.broadcast_shapes(s.shape, R_c.shape)))


# --------------------------------------------------------------------------
# Laplace transforms, uniform selection
# --------------------------------------------------------------------------

def uniform_pass_fractions(D, alpha, d, s, settings: QuadratureSettings | None = None):
    """``E[x^a/(x^a+s)]`` and ``E[s/(x^a+s)]`` for the distance ``x`` of a
    uniform point of the disk; vectorised over ``(d, s)``.

    The first is the chance that one interferer does not knock out an
    ``Exp(1)`` clock, i.e. the per-point factor of the PGF.  The second is
    ``(1/(pi D^2)) int F(s, far) - F(s, near) dtheta`` over the rays that hit
    the disk, with the near radius clamped at zero.
    """
    settings = (settings or QuadratureSettings()).tighter()
    d, s = np.broadcast_arrays(_arr(d), _arr(s))
    shape = d.shape
    d, s = d.ravel(), s.ravel()
    inside = d <= D
    n = d.size
    q = np.empty(n)
    if inside.any():
        di, si = d[inside], s[inside]

        def full(theta, own):
            return kernel_F_diff(si[own], _far_chord(di[own], D, theta), 0.0, alpha)

        q[inside] = integrate_batch(full, np.zeros(di.size), np.full(di.size, math.pi), settings)
    if (~inside).any():
        do, so = d[~inside], s[~inside]
        span = np.arcsin(D / do)

        def cone(psi, own):
            theta = span[own] * np.sin(psi)
            hi = _far_chord(do[own], D, theta)
            lo = _near_chord(do[own], D, theta)
            return kernel_F_diff(so[own], hi, lo, alpha) * span[own] * np.cos(psi)

        q[~inside] = integrate_batch(cone, np.zeros(do.size), np.full(do.size, 0.5 * math.pi),
                                     settings)
    q = np.clip(q / (math.pi * D * D), 0.0, 1.0)
    return (1.0 - q).reshape(shape), q.reshape(shape)


def _poisson_pgf_conditional(L0, p, q):
    """``E[p^(N-1) | N > 0]`` for ``N ~ Poisson(L0)``, with ``q = 1 - p``."""
    L0 = np.asarray(L0, dtype=float)
    small = L0 * p < 1.0
    num = np.where(small, np.exp(-L0) * np.expm1(L0 * p), np.exp(-L0 * q) - np.exp(-L0))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / (-np.expm1(-L0) * p)
    # no room for interferers at all
    return np.where(p > 0, out, L0 * np.exp(-L0) / -np.expm1(-L0))


def lt_uniform_values(lam, D, alpha, d, s, settings=None):
    p, q = uniform_pass_fractions(D, alpha, d, s, settings)
    return _poisson_pgf_conditional(lam * math.pi * D * D, p, q)


def lt_interference_uniform(geom: SingleClusterGeometry, channel: ChannelModel, s,
                            settings: QuadratureSettings | None = None):
    """LT of the interference under uniform selection (independent of ``R_u``)."""
    s = _arr(s)
    if np.any(~(s > 0)):
        raise DomainError("LT argument must be positive")
    return _out(lt_uniform_values(geom.lam, geom.D, channel.alpha, geom.d, s, settings), s)


# --------------------------------------------------------------------------
# closed-form lower bounds
# --------------------------------------------------------------------------

def lb_closest_exponent(lam, D, alpha, d, s, rc):
    """Log of the closed-form lower bound on the closest-selection LT.

    The interferer region is enlarged to half-disks (``d <= D``) or to
    sectors between the tangent lines (``d > D``) around the receiver.
    """
    d, s, rc = np.broadcast_arrays(_arr(d), _arr(s), _arr(rc))
    closest_branches(d, D, rc)
    out = np.empty(d.shape)
    far = d + D

    inside = d <= D
    back = np.sqrt(np.maximum(D * D - d * d, 0.0))
    a_hat = inside & (rc <= back)
    b_hat = inside & ~a_hat
    out[a_hat] = -0.5 * math.pi * lam * (
        kernel_F_diff(s[a_hat], far[a_hat], rc[a_hat], alpha)
        + kernel_F_diff(s[a_hat], back[a_hat], rc[a_hat], alpha))
    out[b_hat] = -0.5 * math.pi * lam * kernel_F_diff(s[b_hat], far[b_hat], rc[b_hat], alpha)

    outside = ~inside
    if outside.any():
        dd, ss, rr = d[outside], s[outside], rc[outside]
        phi0 = np.arcsin(D / dd)
        phi1 = _cross_angle(dd, D, rr)
        tangent = np.sqrt(dd * dd - D * D)
        vals = np.empty(dd.shape)
        c_hat = rr < tangent
        if c_hat.any():
            mid = _far_chord(dd[c_hat], D, phi1[c_hat])
            vals[c_hat] = -lam * (
                phi0[c_hat] * kernel_F_diff(ss[c_hat], mid, rr[c_hat], alpha)
                + phi1[c_hat] * kernel_F_diff(ss[c_hat], dd[c_hat] + D, mid, alpha))
        d_hat = ~c_hat
        vals[d_hat] = -lam * phi1[d_hat] * kernel_F_diff(ss[d_hat], dd[d_hat] + D, rr[d_hat], alpha)
        out[outside] = vals
    return out


def lt_lb_closest(geom: SingleClusterGeometry, channel: ChannelModel, s, R_c):
    s, R_c = _arr(s), _arr(R_c)
    out = np.exp(lb_closest_exponent(geom.lam, geom.D, channel.alpha, geom.d, s, R_c))
    return _out(out, np.broadcast_to(s, np.broadcast_shapes(s.shape, R_c.shape)))


def lb_uniform_values(lam, D, alpha, d, s):
    d, s = np.broadcast_arrays(_arr(d), _arr(s))
    L0 = np.empty(d.shape)
    q = np.empty(d.shape)
    inside = d <= D
    di, si = d[inside], s[inside]
    big = math.pi * D * (D + di)
    lost = 0.5 * math.pi * (kernel_F_diff(si, np.sqrt(np.maximum(D * D - di * di, 0.0)), 0.0, alpha)
                            + kernel_F_diff(si, D + di, 0.0, alpha))
    L0[inside], q[inside] = lam * big, lost / big
    do, so = d[~inside], s[~inside]
    phi0 = np.arcsin(D / do)
    big = 4.0 * do * D * phi0
    lost = phi0 * kernel_F_diff(so, do + D, do - D, alpha)
    L0[~inside], q[~inside] = lam * big, lost / big
    return _poisson_pgf_conditional(L0, 1.0 - q, q)


def lt_lb_uniform(geom: SingleClusterGeometry, channel: ChannelModel, s):
    s = _arr(s)
    return _out(lb_uniform_values(geom.lam, geom.D, channel.alpha, geom.d, s), s)


# --------------------------------------------------------------------------
# coverage
# --------------------------------------------------------------------------

def closest_pieces(d, D):
    """Serving-distance pieces split where the LT changes branch."""
    if d <= D:
        return [(0.0, D - d), (D - d, D + d)]
    tangent = math.sqrt(d * d - D * D)
    return [(d - D, tangent), (tangent, d + D)]


def _split_pieces(pieces, beta, lam, alpha, sigma2):
    """Per-threshold integration pieces over the serving distance.

    For large thresholds the integrand lives within ``r0 ~ beta^(-1/alpha)``
    of the origin, far below the first Kronrod node of ``[0, D - d]``; extra
    breakpoints at ``r0`` and ``10 r0`` keep the adaptive rule from missing it.
    """
    r0 = (beta * max(sigma2, lam ** (0.5 * alpha))) ** (-1.0 / alpha)
    los, his, owners = [], [], []
    for i, scale in enumerate(r0):
        for lo, hi in pieces:
            cuts = [lo] + [c for c in (scale, 10.0 * scale) if lo == 0.0 and c < hi] + [hi]
            los.extend(cuts[:-1])
            his.extend(cuts[1:])
            owners.extend([i] * (len(cuts) - 1))
    return np.array(los), np.array(his), np.array(owners, dtype=int)


def _coverage_closest(geom, channel, beta, settings, bound):
    lam, D, d, alpha = geom.lam, geom.D, geom.d, channel.alpha
    pieces = [p for p in closest_pieces(d, D) if p[1] > p[0]]
    los, his, owners = _split_pieces(pieces, beta, lam, alpha, channel.sigma2)
    own_beta = beta[owners]

    def integrand(r, own):
        b = own_beta[own]
        s = b * r**alpha
        dens = lam * area_derivative(d, D, r)
        if bound:
            lt = lb_closest_exponent(lam, D, alpha, d, s, r)
        else:
            lt = lt_closest_exponent(lam, D, alpha, d, s, r, settings)
        return dens * np.exp(-lam * area(d, D, r) - b * channel.sigma2 * r**alpha + lt)

    vals = integrate_batch(integrand, los, his, settings)
    return np.bincount(owners, vals, minlength=beta.size)


def _coverage_uniform(geom, channel, beta, settings, bound):
    lam, D, d, alpha = geom.lam, geom.D, geom.d, channel.alpha
    pieces = [p for p in closest_pieces(d, D) if p[1] > p[0]]
    los, his, owners = _split_pieces(pieces, beta, lam, alpha, channel.sigma2)
    own_beta = beta[owners]
    norm = math.pi * D * D

    def integrand(r, own):
        b = own_beta[own]
        s = b * r**alpha
        if bound:
            lt = lb_uniform_values(lam, D, alpha, d, s)
        else:
            lt = lt_uniform_values(lam, D, alpha, d, s, settings)
        return area_derivative(d, D, r) / norm * np.exp(-b * channel.sigma2 * r**alpha) * lt

    vals = integrate_batch(integrand, los, his, settings)
    return geom.p_nonempty * np.bincount(owners, vals, minlength=beta.size)


def _coverage(strategy, geom, channel, beta, settings, bound):
    strategy = Strategy(strategy)
    settings = settings or QuadratureSettings()
    b = _arr(beta)
    if np.any(~(b > 0)):
        raise DomainError("SINR threshold must be positive")
    flat = b.ravel()
    out = np.zeros(flat.size)
    finite = np.isfinite(flat)
    if finite.any():
        fn = _coverage_closest if strategy is Strategy.CLOSEST else _coverage_uniform
        out[finite] = fn(geom, channel, flat[finite], settings, bound)
    return _out(np.clip(out, 0.0, 1.0).reshape(b.shape), b)


def coverage(strategy, geom: SingleClusterGeometry, channel: ChannelModel, beta,
             settings: QuadratureSettings | None = None):
    """Coverage probability ``P(SINR > beta)``, counting an empty disk as an outage.

    ``beta`` is linear (not dB) and may be an array; all thresholds share one
    batched quadrature.
    """
    return _coverage(strategy, geom, channel, beta, settings, bound=False)


def coverage_lower_bound(strategy, geom: SingleClusterGeometry, channel: ChannelModel, beta,
                         settings: QuadratureSettings | None = None):
    """Coverage with the exact LT replaced by its closed-form lower bound."""
    return _coverage(strategy, geom, channel, beta, settings, bound=True)


def spectral_efficiency_from_coverage(cov_fn, alpha: float,
                                      settings: QuadratureSettings | None = None) -> float:
    """``(1/ln 2) int_0^inf P(t) / (1 + t) dt`` for a vectorised coverage curve.

    Coverage decays like ``t^(-2/alpha)``, so on ``[1, inf)`` the threshold is
    written as ``t = w^(-alpha)``, which turns the slow tail into an integrand
    that vanishes linearly at ``w = 0``.
    """
    settings = settings or QuadratureSettings()

    def head(t, _):
        return cov_fn(t) / (1.0 + t)

    def tail(w, _):
        wk = w**alpha
        with np.errstate(divide="ignore", over="ignore"):
            t = 1.0 / wk
        return cov_fn(t) * alpha / (w * (1.0 + wk))

    lo = integrate_batch(head, [0.0], [1.0], settings)[0]
    hi = integrate_batch(tail, [0.0], [1.0], settings)[0]
    return float(lo + hi) / math.log(2.0)


def spectral_efficiency(strategy, geom: SingleClusterGeometry, channel: ChannelModel,
                        settings: QuadratureSettings | None = None) -> float:
    """Ergodic rate in bits per channel use, integrated from the coverage curve."""
    return spectral_efficiency_from_coverage(
        lambda t: coverage(strategy, geom, channel, t, settings), channel.alpha, settings)
