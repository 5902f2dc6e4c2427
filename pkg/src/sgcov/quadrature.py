"""Interference kernel and adaptive quadrature.

The kernel ``F(s, x) = x**2 * 2F1(1, 2/a; 1 + 2/a; -x**a / s)`` equals
``2 * int_0^x t / (1 + t**a / s) dt``; it is the radial building block of every
interference Laplace transform in the package.

All integrators here are vectorised: a *batch* of integrals over different
intervals is refined simultaneously and the integrand is called once per sweep
with every pending node.  Integrands therefore receive ``(x, owner)`` arrays,
where ``owner[i]`` is the index of the integral node ``x[i]`` belongs to.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba
import numpy as np

__all__ = [
    "QuadratureSettings",
    "IntegrationError",
    "KernelConvergenceError",
    "kernel_F",
    "kernel_F_inf",
    "kernel_F_complement",
    "kernel_F_diff",
    "integrate",
    "integrate_batch",
    "integrate_tail",
    "integrate_tail_batch",
    "solve_tail_cutoff",
]


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    max_subdivisions: int = 2000
    tail_tol: float = 1e-10

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "tail_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def tighter(self, factor: float = 10.0) -> "QuadratureSettings":
        """Settings for an inner integral nested inside an outer one."""
        return replace(self, abs_tol=self.abs_tol / factor, rel_tol=self.rel_tol / factor)


class IntegrationError(RuntimeError):
    """Subdivision budget exhausted; carries the best estimate so far."""

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class KernelConvergenceError(ArithmeticError):
    pass


# --------------------------------------------------------------------------
# kernel F(s, x)
# --------------------------------------------------------------------------

_MAX_TERMS = 4000
# Pfaff series below this value of x**a / s, reciprocal expansion above it.
_SWITCH = 3.0


@numba.njit(cache=True)
def _pfaff_sum(q, b):
    # 2F1(1, 1; 1 + b; w) with w = q / (1 + q)
    w = q / (1.0 + q)
    term = 1.0
    total = 1.0
    n = 0
    while n < _MAX_TERMS:
        term *= (n + 1.0) / (n + 1.0 + b) * w
        total += term
        n += 1
        if term * 4.0 <= 1e-17 * total:
            return total
    return np.nan


@numba.njit(cache=True)
def _recip_sum(q, a):
    # sum_k (-1)^k q^-(k+1) / (a (k+1) - 2)
    inv = 1.0 / q
    p = inv
    total = 0.0
    k = 0
    while k < _MAX_TERMS:
        term = p / (a * (k + 1.0) - 2.0)
        if k % 2 == 0:
            total += term
        else:
            total -= term
        if term <= 1e-17 * abs(total):
            return total
        p *= inv
        k += 1
    return np.nan


@numba.njit(cache=True)
def _finf(s, a):
    return 2.0 * s ** (2.0 / a) * (math.pi / a) / math.sin(2.0 * math.pi / a)


@numba.njit(cache=True)
def _kernel_scalar(s, x, a, complement):
    """F(s, x), or F(s, inf) - F(s, x) when ``complement`` is set."""
    if x <= 0.0:
        return _finf(s, a) if complement else 0.0
    if math.isinf(s):
        return math.inf if complement else x * x
    q = x**a / s
    if q <= _SWITCH:
        val = x * x * _pfaff_sum(q, 2.0 / a) / (1.0 + q)
        return _finf(s, a) - val if complement else val
    tail = 2.0 * x * x * _recip_sum(q, a)
    return tail if complement else _finf(s, a) - tail


@numba.njit(cache=True)
def _kernel_array(s, x, a, complement, out):
    for i in range(out.size):
        out[i] = _kernel_scalar(s[i], x[i], a[i], complement)


@numba.njit(cache=True)
def _kernel_diff_array(s, hi, lo, a, out):
    for i in range(out.size):
        if lo[i] > 0.0 and lo[i] ** a[i] / s[i] > _SWITCH:
            out[i] = _kernel_scalar(s[i], lo[i], a[i], True) - _kernel_scalar(s[i], hi[i], a[i], True)
        else:
            out[i] = _kernel_scalar(s[i], hi[i], a[i], False) - _kernel_scalar(s[i], lo[i], a[i], False)


def _check_kernel_args(s, x, alpha):
    if np.any(~(s > 0)):
        raise ValueError("kernel_F requires s > 0")
    if np.any(x < 0):
        raise ValueError("kernel_F requires x >= 0")
    if np.any(~(alpha > 2)):
        raise ValueError("kernel_F requires alpha > 2")


def _kernel(s, x, alpha, complement):
    s, x, alpha = np.broadcast_arrays(
        np.asarray(s, dtype=float), np.asarray(x, dtype=float), np.asarray(alpha, dtype=float)
    )
    _check_kernel_args(s, x, alpha)
    out = np.empty(s.shape)
    _kernel_array(s.ravel(), x.ravel(), alpha.ravel(), complement, out.reshape(-1))
    if np.isnan(out).any():
        raise KernelConvergenceError("hypergeometric series did not converge")
    return out if out.ndim else float(out)


def kernel_F(s, x, alpha):
    """Interference kernel ``F(s, x) = 2 int_0^x t / (1 + t**alpha / s) dt``.

    Evaluated through the hypergeometric representation: the Pfaff
    transformation puts the argument into ``[0, 1)`` for moderate
    ``x**alpha / s``; beyond that the expansion in ``s / x**alpha`` around the
    closed-form limit ``F(s, inf)`` converges faster.

    Broadcasts over all three arguments.
    """
    return _kernel(s, x, alpha, False)


def kernel_F_inf(s, alpha):
    """``F(s, inf) = 2 pi s**(2/alpha) / (alpha sin(2 pi / alpha))``."""
    s = np.asarray(s, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    out = 2.0 * s ** (2.0 / alpha) * (np.pi / alpha) / np.sin(2.0 * np.pi / alpha)
    return out if out.ndim else float(out)


def kernel_F_complement(s, x, alpha):
    """``F(s, inf) - F(s, x)``, accurate when ``x`` is far beyond ``s**(1/alpha)``."""
    return _kernel(s, x, alpha, True)


def kernel_F_diff(s, x_hi, x_lo, alpha):
    """``F(s, x_hi) - F(s, x_lo)`` without cancellation for large radii."""
    s, x_hi, x_lo, alpha = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (s, x_hi, x_lo, alpha))
    )
    _check_kernel_args(s, np.minimum(x_hi, x_lo), alpha)
    out = np.empty(s.shape)
    _kernel_diff_array(s.ravel(), x_hi.ravel(), x_lo.ravel(), alpha.ravel(), out.reshape(-1))
    if np.isnan(out).any():
        raise KernelConvergenceError("hypergeometric series did not converge")
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# adaptive Gauss-Kronrod (G10/K21)
# --------------------------------------------------------------------------

_XK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_NODES = np.concatenate([-_XK[:-1], [0.0], _XK[:-1][::-1]])
_KW = np.concatenate([_WK[:-1], [_WK[-1]], _WK[:-1][::-1]])
_GW = np.zeros(21)
_GW[1:10:2] = _WG
_GW[11:20:2] = _WG[::-1]

_EPS = np.finfo(float).eps


def _gk21(f, lo, hi, owner):
    """Kronrod estimate and QUADPACK-style error for each interval."""
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = center[:, None] + half[:, None] * _NODES[None, :]
    own = np.broadcast_to(owner[:, None], x.shape)
    fx = np.asarray(f(x.ravel(), own.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise FloatingPointError("integrand returned non-finite values")
    kron = fx @ _KW
    gauss = fx @ _GW
    mean = kron / 2.0
    resabs = np.abs(fx) @ _KW * np.abs(half)
    resasc = np.abs(fx - mean[:, None]) @ _KW * np.abs(half)
    err = np.abs((kron - gauss) * half)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc > 0) & (err > 0), scaled, err)
    err = np.maximum(err, 50.0 * _EPS * resabs)
    return kron * half, err


def integrate_batch(f, a, b, settings: QuadratureSettings | None = None, *, return_error=False):
    """Integrate many integrals at once.

    Parameters
    ----------
    f : callable
        ``f(x, owner) -> values``; both arguments are 1-D arrays of equal
        length and ``owner`` holds the index of the integral each node
        belongs to.
    a, b : array_like
        Lower and upper limits, one pair per integral (``a <= b``).
    settings : QuadratureSettings, optional
    return_error : bool
        Also return the per-integral error estimates.

    Each integral is refined until its estimated error is at most
    ``max(abs_tol, rel_tol * |I|)``.  Intervals are bisected in sweeps; in a
    sweep every interval whose error exceeds its equal share of the target is
    split.

    Raises
    ------
    IntegrationError
        When some integral needs more than ``max_subdivisions`` intervals.
    """
    settings = settings or QuadratureSettings()
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    m = a.size
    if np.any(b < a):
        raise ValueError("integration limits must satisfy a <= b")
    if m == 0:
        empty = np.zeros(0)
        return (empty, empty) if return_error else empty

    owner = np.flatnonzero(b > a)
    lo = a[owner].copy()
    hi = b[owner].copy()
    val = np.zeros(0)
    err = np.zeros(0)
    if owner.size:
        val, err = _gk21(f, lo, hi, owner)
    frozen = np.zeros(owner.size, dtype=bool)

    while True:
        total = np.bincount(owner, weights=val, minlength=m)
        total_err = np.bincount(owner, weights=err, minlength=m)
        target = np.maximum(settings.abs_tol, settings.rel_tol * np.abs(total))
        pending = total_err > target
        if not pending.any():
            break
        count = np.bincount(owner, minlength=m)
        share = target[owner] / count[owner]
        split = pending[owner] & (err > share) & ~frozen
        if not split.any():
            break
        if np.any(count[pending] > settings.max_subdivisions):
            raise IntegrationError(
                "subdivision budget exceeded",
                total if m > 1 else float(total[0]),
                total_err if m > 1 else float(total_err[0]),
            )
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_owner = np.concatenate([owner[split], owner[split]])
        new_val, new_err = _gk21(f, new_lo, new_hi, new_owner)
        # intervals that can no longer be resolved in floating point
        new_frozen = (new_hi - new_lo) <= 64.0 * _EPS * np.maximum(np.abs(new_lo), np.abs(new_hi))
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        owner = np.concatenate([owner[keep], new_owner])
        val = np.concatenate([val[keep], new_val])
        err = np.concatenate([err[keep], new_err])
        frozen = np.concatenate([frozen[keep], new_frozen])

    total = np.bincount(owner, weights=val, minlength=m)
    if return_error:
        return total, np.bincount(owner, weights=err, minlength=m)
    return total


def integrate(f, a: float, b: float, settings: QuadratureSettings | None = None) -> float:
    """Adaptive integral of a vectorised scalar function over ``[a, b]``.

    ``f`` is called with a 1-D array of nodes.  Endpoint singularities are
    fine since the Kronrod nodes never touch the endpoints.
    """
    if b < a:
        raise ValueError("integration limits must satisfy a <= b")
    return float(integrate_batch(lambda x, _: f(x), [a], [b], settings)[0])


# --------------------------------------------------------------------------
# semi-infinite ranges
# --------------------------------------------------------------------------

def solve_tail_cutoff(tail_bound, a, tol, *, u_cap=1e300):
    """Smallest (up to a factor of 2**(1/8)) ``U >= a`` with ``tail_bound(U) <= tol``.

    ``tail_bound`` must be nonincreasing and vectorised over ``U``; ``a`` may
    be an array, one cutoff per entry.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    start = np.maximum(a, np.finfo(float).tiny)
    hi = start.copy()
    # geometric search for a bracketing upper point
    for _ in range(4096):
        bad = tail_bound(hi) > tol
        if not bad.any():
            break
        hi = np.where(bad, np.minimum(hi * 2.0, u_cap), hi)
        if np.all(hi[bad] >= u_cap):
            break
    lo = np.maximum(hi / 2.0, start)
    # refine in log space
    for _ in range(12):
        mid = np.sqrt(lo * hi)
        ok = tail_bound(mid) <= tol
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return np.maximum(hi, a)


def integrate_tail_batch(f, a, settings=None, *, tail_bound=None, return_cutoff=False):
    """Batch of integrals over ``[a_i, inf)``.

    With ``tail_bound`` (a vectorised ``(U, owner) -> bound`` on
    ``int_U^inf |f|``) each range is truncated at the point where the bound
    drops below ``tail_tol``; the truncated range ``[a, U]`` is integrated in
    the logarithmic variable when ``a > 0`` so that power-law integrands stay
    smooth.  Without a bound the map ``u = a + L t / (1 - t)`` sends the full
    range onto ``[0, 1)``.
    """
    settings = settings or QuadratureSettings()
    a = np.atleast_1d(np.asarray(a, dtype=float))
    owners = np.arange(a.size)
    if tail_bound is None:
        scale = np.maximum(np.abs(a), 1.0)

        def mapped(t, own):
            one_minus = 1.0 - t
            u = a[own] + scale[own] * t / one_minus
            return f(u, own) * scale[own] / one_minus**2

        val = integrate_batch(mapped, np.zeros(a.size), np.ones(a.size), settings)
        cutoff = np.full(a.size, np.inf)
    else:
        cutoff = solve_tail_cutoff(lambda U: tail_bound(U, owners), a, settings.tail_tol)
        positive = a > 0
        val = np.zeros(a.size)
        if positive.any():
            idx = np.flatnonzero(positive)
            base = a[idx]

            def logmapped(y, own):
                u = base[own] * np.exp(y)
                return f(u, idx[own]) * u

            val[idx] = integrate_batch(logmapped, np.zeros(idx.size), np.log(cutoff[idx] / base), settings)
        if (~positive).any():
            idx = np.flatnonzero(~positive)
            val[idx] = integrate_batch(lambda u, own: f(u, idx[own]), a[idx], cutoff[idx], settings)
    return (val, cutoff) if return_cutoff else val


def integrate_tail(f, a: float, decay_hint: float | None = None, settings=None, *,
                   tail_bound=None, full_output=False):
    """Integral of a vectorised ``f`` over ``[a, inf)``.

    ``decay_hint`` is the path-loss exponent governing the power-law decay of
    ``f(u) ~ u**(1 - alpha)``; it is only used to sanity-check that the
    integral converges.  ``tail_bound(U)`` optionally gives a rigorous bound on
    the integral beyond ``U`` and switches on deterministic truncation.  With
    ``full_output`` the chosen cutoff is returned alongside the value.
    """
    if decay_hint is not None and not decay_hint > 2:
        raise ValueError("power-law tails need an exponent above 2")
    tb = None if tail_bound is None else (lambda U, own: tail_bound(U))
    val, cut = integrate_tail_batch(lambda u, own: f(u), [a], settings, tail_bound=tb, return_cutoff=True)
    if full_output:
        return float(val[0]), {"u_max": float(cut[0])}
    return float(val[0])
