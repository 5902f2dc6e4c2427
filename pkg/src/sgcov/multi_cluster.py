"""Coverage in a Matern cluster network: Poisson parents of intensity
``lam_p``, each carrying a Poisson cluster of intensity ``lam`` on a disk of
radius ``D``.

Closed-access receivers are served by their own cluster and sit at a
Rayleigh(``sigma_c``) offset from its center.  Open-access receivers sit at
an arbitrary point and are served by the nearest transmitter of the network.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import DomainError, area, area_derivative
from .quadrature import QuadratureSettings, integrate_batch, integrate_tail_batch
from .single_cluster import (
    ChannelModel,
    lt_closest_exponent,
    lt_uniform_values,
    spectral_efficiency_from_coverage,
    uniform_pass_fractions,
)

__all__ = [
    "MultiClusterParams",
    "AccessMode",
    "receiver_offset_pdf",
    "cluster_lt_exponent",
    "lt_inter_cluster",
    "coverage_closed_access",
    "contact_ccdf",
    "contact_cdf",
    "contact_pdf",
    "lt_total_interference",
    "coverage_open_access",
    "coverage_multi",
    "spectral_efficiency_multi",
]


@dataclass(frozen=True)
class MultiClusterParams:
    lam_p: float
    lam: float
    D: float
    sigma_c: float

    def __post_init__(self):
        if not (self.lam_p > 0 and self.lam > 0 and self.D > 0 and self.sigma_c > 0):
            raise DomainError("lam_p, lam, D and sigma_c must all be positive")

    @property
    def mean_count(self) -> float:
        return self.lam * math.pi * self.D**2


class AccessMode(enum.Enum):
    CLOSED_CLOSEST = "closed-closest"
    CLOSED_UNIFORM = "closed-uniform"
    OPEN_CLOSEST = "open-closest"


def _arr(x):
    return np.asarray(x, dtype=float)


def _out(x, like):
    return float(np.asarray(x).item()) if np.ndim(like) == 0 else x


def receiver_offset_pdf(params: MultiClusterParams, v):
    """Rayleigh density of the closed-access receiver's distance to its cluster center."""
    v = _arr(v)
    sc2 = params.sigma_c**2
    return _out(np.where(v >= 0, v / sc2 * np.exp(-v * v / (2.0 * sc2)), 0.0), v)


def offset_cutoff(params: MultiClusterParams, tail_tol: float) -> float:
    return params.sigma_c * math.sqrt(2.0 * math.log(1.0 / tail_tol))


# --------------------------------------------------------------------------
# inter-cluster interference
# --------------------------------------------------------------------------

def cluster_lt_exponent(lam, D, alpha, u, s, settings=None):
    """Log of ``E[exp(-s I)]`` for the whole (possibly empty) cluster centered at distance ``u``."""
    _, q = uniform_pass_fractions(D, alpha, u, s, settings)
    return -lam * math.pi * D * D * q


def _cluster_tail_bound(lam, D, alpha, s):
    # 1 - L_u <= lam pi D^2 s (u - D)^-alpha, integrated against u du
    def bound(U, own):
        gap = np.maximum(U - D, 1e-300)
        with np.errstate(over="ignore"):
            return lam * math.pi * D * D * s[own] * (
                gap ** (2.0 - alpha) / (alpha - 2.0) + D * gap ** (1.0 - alpha) / (alpha - 1.0))
    return bound


def inter_cluster_exponent(lam_p, lam, D, alpha, s, settings: QuadratureSettings | None = None):
    """Log of the inter-cluster interference LT, vectorised over ``s``."""
    settings = settings or QuadratureSettings()
    inner = settings.tighter()
    s = _arr(s)
    flat = s.ravel()
    n = flat.size

    def f(u, own):
        return -np.expm1(cluster_lt_exponent(lam, D, alpha, u, flat[own], inner)) * u

    near = integrate_batch(f, np.zeros(n), np.full(n, D), settings)
    far = integrate_tail_batch(f, np.full(n, D), settings,
                               tail_bound=_cluster_tail_bound(lam, D, alpha, flat))
    return (-2.0 * math.pi * lam_p * (near + far)).reshape(s.shape)


def lt_inter_cluster(params: MultiClusterParams, channel: ChannelModel, s,
                     settings: QuadratureSettings | None = None):
    """LT of the interference from all clusters other than the receiver's own."""
    s = _arr(s)
    if np.any(~(s > 0)):
        raise DomainError("LT argument must be positive")
    out = np.exp(inter_cluster_exponent(params.lam_p, params.lam, params.D, channel.alpha, s, settings))
    return _out(out, s)


# --------------------------------------------------------------------------
# closed access
# --------------------------------------------------------------------------

def _offset_pieces(r, D, v_max):
    """Offset ranges for which ``r`` is a possible serving distance, split at
    the points where the conditional LT changes branch."""
    lo = max(r - D, 0.0)
    hi = min(D + r, v_max)
    cuts = sorted({lo, hi} | {c for c in (D - r, D, math.sqrt(r * r + D * D)) if lo < c < hi})
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def _scale_cuts(beta, lam, alpha, sigma2, lo, hi):
    r0 = (beta * max(sigma2, lam ** (0.5 * alpha))) ** (-1.0 / alpha)
    return [c for c in (r0, 10.0 * r0) if lo < c < hi]


def coverage_closed_access(mode, params: MultiClusterParams, channel: ChannelModel, beta,
                           settings: QuadratureSettings | None = None):
    """Coverage of a closed-access receiver, served only by its own cluster.

    The serving distance ``r`` is the outer variable so that the inter-cluster
    LT, which depends on ``r`` alone, is computed once per node; the inner
    integral runs over the receiver offset ``v`` and is cut at
    ``sigma_c sqrt(2 ln(1/tail_tol))``.
    """
    mode = AccessMode(mode)
    if mode is AccessMode.OPEN_CLOSEST:
        raise DomainError("use coverage_open_access for open-access receivers")
    settings = settings or QuadratureSettings()
    inner = settings.tighter()
    b = _arr(beta)
    if np.any(~(b > 0)):
        raise DomainError("SINR threshold must be positive")
    lam, lam_p, D, alpha, sigma2 = params.lam, params.lam_p, params.D, channel.alpha, channel.sigma2
    v_max = offset_cutoff(params, settings.tail_tol)
    r_max = D + v_max
    closest = mode is AccessMode.CLOSED_CLOSEST
    norm = math.pi * D * D
    p_nonempty = -math.expm1(-lam * norm)

    flat = b.ravel()
    los, his, owners = [], [], []
    for i, bb in enumerate(flat):
        if not np.isfinite(bb):
            continue
        cuts = sorted({0.0, D, r_max} | set(_scale_cuts(bb, lam, alpha, sigma2, 0.0, D)))
        los.extend(cuts[:-1])
        his.extend(cuts[1:])
        owners.extend([i] * (len(cuts) - 1))
    owners = np.array(owners, dtype=int)
    own_beta = flat[owners]

    def offset_integral(r, s):
        # int f(v) dens(v | r) L_intra(s | r, v) dv for each (r, s) pair
        v_lo, v_hi, v_own = [], [], []
        for j, rj in enumerate(r):
            for a, c in _offset_pieces(rj, D, v_max):
                v_lo.append(a)
                v_hi.append(c)
                v_own.append(j)
        v_own = np.array(v_own, dtype=int)

        def g(v, own):
            k = v_own[own]
            rr, ss = r[k], s[k]
            weight = receiver_offset_pdf(params, v)
            if closest:
                expo = -lam * area(v, D, rr) + lt_closest_exponent(lam, D, alpha, v, ss, rr, inner)
                return weight * lam * area_derivative(v, D, rr) * np.exp(expo)
            lt = lt_uniform_values(lam, D, alpha, v, ss, inner)
            return weight * p_nonempty * area_derivative(v, D, rr) / norm * lt

        vals = integrate_batch(g, v_lo, v_hi, inner)
        return np.bincount(v_own, vals, minlength=r.size)

    def integrand(r, own):
        bb = own_beta[own]
        s = bb * r**alpha
        inter = inter_cluster_exponent(lam_p, lam, D, alpha, s, inner)
        return offset_integral(r, s) * np.exp(inter - bb * sigma2 * r**alpha)

    out = np.zeros(flat.size)
    if owners.size:
        vals = integrate_batch(integrand, los, his, settings)
        out += np.bincount(owners, vals, minlength=flat.size)
    return _out(np.clip(out, 0.0, 1.0).reshape(b.shape), b)


# --------------------------------------------------------------------------
# open access: contact distance
# --------------------------------------------------------------------------

def _contact_terms(params: MultiClusterParams, r, settings: QuadratureSettings | None):
    """Void exponent ``int (1 - e^{-lam B_u(r)}) u du`` and hazard integral
    ``int lam dB_u/dr e^{-lam B_u(r)} u du`` at each radius."""
    settings = (settings or QuadratureSettings()).tighter()
    lam, D = params.lam, params.D
    r = _arr(r).ravel()
    m = np.minimum(r, D)
    gap = np.abs(D - r)
    void = -np.expm1(-lam * math.pi * m * m) * gap * gap / 2.0
    hazard = np.where(r < D, 2.0 * math.pi * lam * r * np.exp(-lam * math.pi * r * r) * gap * gap / 2.0, 0.0)
    pos = r > 0
    if pos.any():
        rp = r[pos]

        def fvoid(u, own):
            return -np.expm1(-lam * area(u, D, rp[own])) * u

        def fhaz(u, own):
            rr = rp[own]
            return lam * area_derivative(u, D, rr) * np.exp(-lam * area(u, D, rr)) * u

        lo, hi = np.abs(D - rp), D + rp
        void[pos] += integrate_batch(fvoid, lo, hi, settings)
        hazard[pos] += integrate_batch(fhaz, lo, hi, settings)
    return void, hazard


def contact_ccdf(params: MultiClusterParams, r, settings: QuadratureSettings | None = None):
    r = _arr(r)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    void, _ = _contact_terms(params, r, settings)
    return _out(np.exp(-2.0 * math.pi * params.lam_p * void).reshape(r.shape), r)


def contact_cdf(params: MultiClusterParams, r, settings: QuadratureSettings | None = None):
    """CDF of the distance from an arbitrary point to the nearest transmitter."""
    r = _arr(r)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    void, _ = _contact_terms(params, r, settings)
    return _out(-np.expm1(-2.0 * math.pi * params.lam_p * void).reshape(r.shape), r)


def contact_pdf(params: MultiClusterParams, r, settings: QuadratureSettings | None = None):
    r = _arr(r)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    void, hazard = _contact_terms(params, r, settings)
    c = 2.0 * math.pi * params.lam_p
    return _out((c * hazard * np.exp(-c * void)).reshape(r.shape), r)


# --------------------------------------------------------------------------
# open access: interference and coverage
# --------------------------------------------------------------------------

def _open_zone_terms(params, alpha, r, s, settings, palm):
    """Per-radius integrals over parent distance ``u`` for the open-access LT.

    Returns ``(expo, serving)`` where ``expo`` is the integral inside the
    exponent and ``serving`` the hazard-like prefactor (``None`` for the
    unconditioned form).  With ``palm`` every cluster is weighted by the
    probability that it leaves ``b(o, r)`` empty and the serving cluster's
    other members are included.
    """
    lam, D = params.lam, params.D
    inner = settings.tighter()
    r, s = (a.ravel() for a in np.broadcast_arrays(_arr(r), _arr(s)))
    n = r.size

    def near(u, own):
        # parent distance inside [max(0, r - D), D + r]
        rr, ss = r[own], s[own]
        expo_out = lt_closest_exponent(lam, D, alpha, u, ss, rr, inner)
        if palm:
            logm = expo_out - lam * area(u, D, rr)
            return -np.expm1(logm) * u
        return -np.expm1(expo_out) * u

    lo = np.maximum(r - D, 0.0)
    hi = D + r
    los, his, owners = [], [], []
    for i in range(n):
        cuts = sorted({lo[i], hi[i]} | {c for c in (D - r[i], D, math.hypot(D, r[i]))
                                        if lo[i] < c < hi[i]})
        los.extend(cuts[:-1])
        his.extend(cuts[1:])
        owners.extend([i] * (len(cuts) - 1))
    owners = np.array(owners, dtype=int)
    expo = np.bincount(owners, integrate_batch(lambda u, own: near(u, owners[own]), los, his, settings),
                       minlength=n)

    def far(u, own):
        return -np.expm1(cluster_lt_exponent(lam, D, alpha, u, s[own], inner)) * u

    expo += integrate_tail_batch(far, hi, settings, tail_bound=_cluster_tail_bound(lam, D, alpha, s))
    # clusters wholly inside b(o, r) would have been seen; they are excluded
    # by the void probability below
    void, hazard = _contact_terms(params, r, settings)
    if not palm:
        return expo + void, hazard

    def serving(u, own):
        k = owners[own]
        rr, ss = r[k], s[k]
        logm = lt_closest_exponent(lam, D, alpha, u, ss, rr, inner) - lam * area(u, D, rr)
        return lam * area_derivative(u, D, rr) * np.exp(logm) * u

    serve = np.bincount(owners, integrate_batch(serving, los, his, settings), minlength=n)
    # clusters in [0, r - D] lie inside the ball: void factor e^{-lam pi D^2}, no interference
    expo += -np.expm1(-lam * math.pi * D * D) * lo * lo / 2.0
    return expo, serve


def lt_total_interference(params: MultiClusterParams, channel: ChannelModel, s, R_t,
                          settings: QuadratureSettings | None = None, *, palm: bool = True):
    """LT of the interference at an open-access receiver given the contact distance.

    By default the conditioning on the contact event is kept: every parent is
    thinned by the chance that its cluster avoids ``b(o, R_t)``, and the
    serving transmitter's own cluster contributes its remaining members.
    With ``palm=False`` the transmitters beyond ``R_t`` are instead treated as
    an unconditioned cluster process restricted to the complement of
    ``b(o, R_t)``; that form overstates the LT and is kept for comparison.
    """
    settings = settings or QuadratureSettings()
    s, R_t = _arr(s), _arr(R_t)
    if np.any(~(s > 0)) or np.any(R_t < 0):
        raise DomainError("need s > 0 and R_t >= 0")
    shape = np.broadcast_shapes(s.shape, R_t.shape)
    expo, serve = _open_zone_terms(params, channel.alpha, R_t, s, settings, palm)
    c = 2.0 * math.pi * params.lam_p
    if palm:
        void, hazard = _contact_terms(params, np.broadcast_to(R_t, shape), settings)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = serve / hazard * np.exp(-c * (expo - void))
    else:
        void, _ = _contact_terms(params, np.broadcast_to(R_t, shape), settings)
        out = np.exp(-c * (expo - void))
    out = np.clip(out, 0.0, 1.0).reshape(shape)
    return _out(out, np.empty(shape))


def coverage_open_access(params: MultiClusterParams, channel: ChannelModel, beta,
                         settings: QuadratureSettings | None = None, *, palm: bool = True):
    """Coverage of an open-access receiver served by the nearest transmitter.

    Integrates ``exp(-beta sigma^2 r^alpha) L(beta r^alpha | r) f_R(r)`` over
    the contact distance; the tail beyond ``U`` is bounded by ``1 - F(U)``.
    """
    settings = settings or QuadratureSettings()
    b = _arr(beta)
    if np.any(~(b > 0)):
        raise DomainError("SINR threshold must be positive")
    lam, D, alpha, sigma2 = params.lam, params.D, channel.alpha, channel.sigma2
    c = 2.0 * math.pi * params.lam_p
    flat = b.ravel()
    idx = np.flatnonzero(np.isfinite(flat))
    out = np.zeros(flat.size)
    if idx.size == 0:
        return _out(out.reshape(b.shape), b)

    def integrand_for(own_beta):
        def f(r, own):
            bb = own_beta[own]
            s = bb * r**alpha
            expo, serve = _open_zone_terms(params, alpha, r, s, settings, palm)
            return c * serve * np.exp(-c * expo - bb * sigma2 * r**alpha)
        return f

    los, his, owners = [], [], []
    for i in idx:
        cuts = sorted({0.0, D} | set(_scale_cuts(flat[i], lam, alpha, sigma2, 0.0, D)))
        los.extend(cuts[:-1])
        his.extend(cuts[1:])
        owners.extend([i] * (len(cuts) - 1))
    owners = np.array(owners, dtype=int)
    out += np.bincount(owners, integrate_batch(integrand_for(flat[owners]), los, his, settings),
                       minlength=flat.size)

    def tail_bound(U, own):
        return contact_ccdf(params, U, settings)

    tail = integrate_tail_batch(integrand_for(flat[idx]), np.full(idx.size, D), settings,
                                tail_bound=tail_bound)
    out[idx] += tail
    return _out(np.clip(out, 0.0, 1.0).reshape(b.shape), b)


def coverage_multi(mode, params: MultiClusterParams, channel: ChannelModel, beta,
                   settings: QuadratureSettings | None = None):
    mode = AccessMode(mode)
    if mode is AccessMode.OPEN_CLOSEST:
        return coverage_open_access(params, channel, beta, settings)
    return coverage_closed_access(mode, params, channel, beta, settings)


def spectral_efficiency_multi(mode, params: MultiClusterParams, channel: ChannelModel,
                              settings: QuadratureSettings | None = None) -> float:
    return spectral_efficiency_from_coverage(
        lambda t: coverage_multi(mode, params, channel, t, settings), channel.alpha, settings)
