"""Monte Carlo simulator for the network models in :mod:`sgcov.scenario`.

Trials run in fixed-size batches.  Batch ``b`` draws from its own Philox
stream keyed by ``(seed, b)`` and the batches are merged in index order, so
results do not depend on how many worker threads were used.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import DomainError
from .multi_cluster import MultiClusterParams
from .scenario import Kind, Scenario
from .single_cluster import ChannelModel, Strategy

__all__ = [
    "SimConfig",
    "EstimateWithCI",
    "TrialRecords",
    "InsufficientSamplesError",
    "SimConfigError",
    "batch_rng",
    "sample_fhppp",
    "sample_mcp",
    "realize_sinr",
    "simulate",
    "coverage_from_records",
    "estimate_coverage",
    "estimate_lt",
    "estimate_contact_cdf",
    "estimate_spectral_efficiency",
    "batch_coverage",
]


class SimConfigError(DomainError):
    pass


class InsufficientSamplesError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Simulator settings.

    Parents of a cluster process are drawn on the disk of radius
    ``window_dilation`` (default ``D + interference_truncation_radius``)
    around the receiver; transmitters beyond the truncation radius are not
    drawn individually.  With ``far_field="mean"`` their expected
    contribution ``2 pi lam_p lam pi D^2 R_I^(2-alpha) / (alpha-2)`` is added
    to every interference sample, which removes the first-order truncation
    bias; with ``"drop"`` it is omitted and the configuration must keep that
    omitted mean below ``1e-6 sigma^2``.
    """
    n_trials: int = 100_000
    seed: int = 0
    interference_truncation_radius: float = 200.0
    window_dilation: float | None = None
    batch_size: int = 4096
    threads: int = 1
    fading: str = "rayleigh"
    far_field: str = "mean"
    band: float = 0.01

    def __post_init__(self):
        if not self.n_trials > 0 or not self.batch_size > 0:
            raise SimConfigError("n_trials and batch_size must be positive")
        if not 0 <= self.seed < 2**64:
            raise SimConfigError("seed must be a 64-bit unsigned integer")
        if not self.interference_truncation_radius > 0:
            raise SimConfigError("truncation radius must be positive")
        if self.fading not in ("rayleigh", "unit"):
            raise SimConfigError("fading must be 'rayleigh' or 'unit'")
        if self.far_field not in ("mean", "drop"):
            raise SimConfigError("far_field must be 'mean' or 'drop'")
        if not self.threads >= 1:
            raise SimConfigError("threads must be at least 1")

    def dilation(self, D: float) -> float:
        need = D + self.interference_truncation_radius
        if self.window_dilation is None:
            return need
        if self.window_dilation < need:
            raise SimConfigError("window dilation must be at least D + truncation radius")
        return self.window_dilation


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    std_error: float
    n: int
    seed: int
    accepted: float = 1.0

    def ci(self, z: float = 1.96) -> tuple[float, float]:
        return self.mean - z * self.std_error, self.mean + z * self.std_error


class TrialRecords(NamedTuple):
    """Per-trial outcome arrays.

    ``serving`` is the serving distance (``inf`` when there is no
    transmitter), ``signal`` the received serving power, ``interference``
    the total interference and ``inter`` its part from clusters other than
    the receiver's own (equal to ``interference`` for open access).
    """
    serving: np.ndarray
    signal: np.ndarray
    interference: np.ndarray
    inter: np.ndarray
    sigma2: float

    @property
    def sinr(self) -> np.ndarray:
        return self.signal / (self.sigma2 + self.interference)

    @property
    def n(self) -> int:
        return self.serving.size


def batch_rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch,))))


# --------------------------------------------------------------------------
# single-pattern helpers
# --------------------------------------------------------------------------

def _disk_points(rng, n, D):
    rad = D * np.sqrt(rng.random(n))
    ang = 2.0 * math.pi * rng.random(n)
    return rad * np.cos(ang), rad * np.sin(ang)


def sample_fhppp(lam: float, center, D: float, rng: np.random.Generator) -> np.ndarray:
    """Poisson(``lam pi D^2``) points, i.i.d. uniform on ``b(center, D)``; shape ``(n, 2)``."""
    n = rng.poisson(lam * math.pi * D * D)
    x, y = _disk_points(rng, n, D)
    return np.column_stack([x + center[0], y + center[1]])


def sample_mcp(params: MultiClusterParams, window_radius: float, rng: np.random.Generator, *,
               truncation_radius: float = 200.0, dilation: float | None = None) -> np.ndarray:
    """Matern cluster process seen from the origin.

    Parents are drawn on ``b(o, window_radius + dilation)`` with
    ``dilation >= D + truncation_radius``; offspring farther than
    ``window_radius + truncation_radius`` from the origin are discarded.
    """
    if not window_radius > 0:
        raise DomainError("window radius must be positive")
    need = params.D + truncation_radius
    dilation = need if dilation is None else dilation
    if dilation < need:
        raise SimConfigError("window dilation must be at least D + truncation radius")
    reach = window_radius + dilation
    n_par = rng.poisson(params.lam_p * math.pi * reach * reach)
    px, py = _disk_points(rng, n_par, reach)
    counts = rng.poisson(params.mean_count, n_par)
    ox, oy = _disk_points(rng, counts.sum(), params.D)
    ox += np.repeat(px, counts)
    oy += np.repeat(py, counts)
    keep = np.hypot(ox, oy) <= window_radius + truncation_radius
    return np.column_stack([ox[keep], oy[keep]])


def realize_sinr(candidates, channel: ChannelModel, rng: np.random.Generator | None = None, *,
                 strategy=Strategy.CLOSEST, interferers=None, fading: str = "rayleigh",
                 extra_interference: float = 0.0):
    """SINR at the origin for one pattern.

    ``candidates`` are the points the receiver may be served by; the rest of
    them, plus ``interferers``, interfere.  Returns ``None`` when there is no
    candidate.  ``fading="unit"`` sets every fade to one.
    """
    cand = np.asarray(candidates, dtype=float).reshape(-1, 2)
    other = np.zeros((0, 2)) if interferers is None else np.asarray(interferers, float).reshape(-1, 2)
    if cand.shape[0] == 0:
        return None
    rng = rng or np.random.default_rng()
    n = cand.shape[0] + other.shape[0]
    h = np.ones(n) if fading == "unit" else rng.exponential(1.0, n)
    dist = np.hypot(*np.vstack([cand, other]).T)
    power = h * dist ** (-channel.alpha)
    if Strategy(strategy) is Strategy.CLOSEST:
        k = int(np.argmin(dist[: cand.shape[0]]))
    else:
        k = int(rng.integers(cand.shape[0]))
    interference = power.sum() - power[k] + extra_interference
    return float(power[k] / (channel.sigma2 + interference))


# --------------------------------------------------------------------------
# batched simulation
# --------------------------------------------------------------------------

def _serve(dist, counts, strategy, rng):
    """Index of the serving point of each nonempty trial; points are grouped by trial."""
    starts = np.cumsum(counts) - counts
    busy = counts > 0
    if Strategy(strategy) is Strategy.CLOSEST:
        if not busy.any():
            return np.zeros(0, dtype=int), busy
        mins = np.minimum.reduceat(dist, starts[busy]) if dist.size else np.zeros(0)
        trial = np.repeat(np.arange(counts.size), counts)
        best = np.full(counts.size, np.inf)
        best[busy] = mins
        hit = np.flatnonzero(dist == best[trial])
        # first hit per trial guards against exact ties
        _, first = np.unique(trial[hit], return_index=True)
        return hit[first], busy
    pick = np.floor(rng.random(counts.size) * counts).astype(int)
    return (starts + pick)[busy], busy


def _fades(rng, n, fading):
    return np.ones(n) if fading == "unit" else rng.exponential(1.0, n)


def _cluster_distances(rng, center, counts, D):
    """Distances to the origin of uniform points on disks of radius ``D``
    whose centers lie at distances ``center``; by isotropy only the angle
    relative to the center direction matters."""
    rho = D * np.sqrt(rng.random(counts.sum()))
    c = np.cos(math.pi * rng.random(rho.size))
    P = np.repeat(center, counts)
    return np.sqrt(np.maximum(P * P + rho * rho + 2.0 * P * rho * c, 0.0))


def _background(rng, B, lam_p, lam, D, reach, cutoff):
    """Distances of cluster-process points within ``cutoff`` of the origin for
    ``B`` trials, grouped by trial."""
    n_par = rng.poisson(lam_p * math.pi * reach * reach, B)
    parent = reach * np.sqrt(rng.random(n_par.sum()))
    counts = rng.poisson(lam * math.pi * D * D, parent.size)
    dist = _cluster_distances(rng, parent, counts, D)
    trial = np.repeat(np.repeat(np.arange(B), n_par), counts)
    keep = dist <= cutoff
    return dist[keep], trial[keep]


def far_field_mean(sc: Scenario, sim: SimConfig) -> float:
    """Mean interference from cluster-process points beyond the truncation radius."""
    if sc.kind is Kind.SINGLE or sim.far_field == "drop":
        return 0.0
    R = sim.interference_truncation_radius
    return 2.0 * math.pi * sc.lam_p * sc.mean_count * R ** (2.0 - sc.alpha) / (sc.alpha - 2.0)


def validate(sc: Scenario, sim: SimConfig) -> None:
    if sc.kind is Kind.SINGLE:
        return
    sim.dilation(sc.D)
    if sim.far_field == "drop":
        R = sim.interference_truncation_radius
        omitted = 2.0 * math.pi * sc.lam_p * sc.mean_count * R ** (2.0 - sc.alpha) / (sc.alpha - 2.0)
        if omitted > 1e-6 * sc.sigma2:
            raise SimConfigError(
                f"truncation at {R:g} m omits mean interference {omitted:.3g} > 1e-6 sigma^2; "
                "raise the radius or use far_field='mean'")


def _run_batch(sc: Scenario, sim: SimConfig, b: int, B: int):
    rng = batch_rng(sim.seed, b)
    alpha = sc.alpha
    L0 = sc.mean_count
    serving = np.full(B, np.inf)
    signal = np.zeros(B)
    inter = np.zeros(B)

    if sc.kind in (Kind.SINGLE, Kind.CLOSED):
        if sc.kind is Kind.SINGLE:
            offset = np.full(B, sc.d)
        else:
            offset = rng.rayleigh(sc.sigma_c, B)
        counts = rng.poisson(L0, B)
        dist = _cluster_distances(rng, offset, counts, sc.D)
        power = _fades(rng, dist.size, sim.fading) * dist ** (-alpha)
        idx, busy = _serve(dist, counts, sc.strategy, rng)
        serving[busy] = dist[idx]
        signal[busy] = power[idx]
        power[idx] = 0.0
        own = np.bincount(np.repeat(np.arange(B), counts), power, minlength=B)
        if sc.kind is Kind.CLOSED:
            R = sim.interference_truncation_radius
            bd, bt = _background(rng, B, sc.lam_p, sc.lam, sc.D, sim.dilation(sc.D), R)
            bp = _fades(rng, bd.size, sim.fading) * bd ** (-alpha)
            inter = np.bincount(bt, bp, minlength=B) + far_field_mean(sc, sim)
        return serving, signal, own + inter, inter

    # open access: nearest transmitter of the whole process
    R = sim.interference_truncation_radius
    bd, bt = _background(rng, B, sc.lam_p, sc.lam, sc.D, sim.dilation(sc.D), R)
    power = _fades(rng, bd.size, sim.fading) * bd ** (-alpha)
    counts = np.bincount(bt, minlength=B)
    idx, busy = _serve(bd, counts, Strategy.CLOSEST, rng)
    serving[busy] = bd[idx]
    signal[busy] = power[idx]
    power[idx] = 0.0
    total = np.bincount(bt, power, minlength=B) + far_field_mean(sc, sim)
    return serving, signal, total, total


def simulate(sc: Scenario, sim: SimConfig) -> TrialRecords:
    """Run ``sim.n_trials`` independent trials of the scenario."""
    validate(sc, sim)
    nb = -(-sim.n_trials // sim.batch_size)
    sizes = [min(sim.batch_size, sim.n_trials - b * sim.batch_size) for b in range(nb)]

    def job(b):
        return _run_batch(sc, sim, b, sizes[b])

    if sim.threads > 1:
        with ThreadPoolExecutor(max_workers=sim.threads) as pool:
            parts = list(pool.map(job, range(nb)))
    else:
        parts = [job(b) for b in range(nb)]
    cols = [np.concatenate([p[k] for p in parts]) for k in range(4)]
    return TrialRecords(*cols, sigma2=sc.sigma2)


# --------------------------------------------------------------------------
# estimators
# --------------------------------------------------------------------------

def _mean_se(x: np.ndarray, seed: int, accepted: float = 1.0) -> EstimateWithCI:
    n = x.size
    if n < 100:
        raise InsufficientSamplesError(f"only {n} samples accepted; need at least 100")
    se = float(x.std(ddof=1) / math.sqrt(n))
    return EstimateWithCI(float(x.mean()), se, n, seed, accepted)


def coverage_from_records(rec: TrialRecords, beta, seed: int = 0):
    """Coverage estimates for each linear threshold in ``beta`` from one set of trials."""
    sinr = rec.sinr
    out = []
    for b in np.atleast_1d(beta):
        p = float(np.mean(sinr > b))
        out.append(EstimateWithCI(p, math.sqrt(p * (1.0 - p) / rec.n), rec.n, seed))
    return out if np.ndim(beta) else out[0]


def estimate_coverage(sc: Scenario, beta, sim: SimConfig, records: TrialRecords | None = None):
    """``P(SINR > beta)`` with an empty serving set counted as an outage."""
    rec = records if records is not None else simulate(sc, sim)
    return coverage_from_records(rec, beta, sim.seed)


def estimate_lt(sc: Scenario, s: float, sim: SimConfig, *, R: float | None = None,
                records: TrialRecords | None = None) -> EstimateWithCI:
    """Empirical ``E[exp(-s I)]`` for the interference the analytics describe.

    Single cluster, closest: conditioned on a serving distance within
    ``sim.band * R`` of ``R``.  Single cluster, uniform: over nonempty disks.
    Closed access: the inter-cluster part only, unconditioned.  Open access:
    total interference given a contact distance near ``R``.
    """
    rec = records if records is not None else simulate(sc, sim)
    if sc.kind is Kind.CLOSED:
        return _mean_se(np.exp(-s * rec.inter), sim.seed)
    if sc.kind is Kind.SINGLE and sc.strategy is Strategy.UNIFORM:
        keep = np.isfinite(rec.serving)
    else:
        if R is None:
            raise DomainError("conditional LT needs the serving distance R")
        keep = np.abs(rec.serving - R) <= sim.band * R
    return _mean_se(np.exp(-s * rec.interference[keep]), sim.seed, float(keep.mean()))


def estimate_contact_cdf(params: MultiClusterParams, r_grid, sim: SimConfig, *, alpha: float = 4.0,
                         records: TrialRecords | None = None):
    """Empirical CDF of the contact distance with binomial standard errors."""
    if records is None:
        sc = Scenario(Kind.OPEN, params.lam, params.D, alpha, lam_p=params.lam_p)
        records = simulate(sc, sim)
    r_grid = np.atleast_1d(np.asarray(r_grid, dtype=float))
    if r_grid.size and r_grid.max() > sim.interference_truncation_radius:
        raise DomainError("contact radii beyond the truncation radius are not simulated")
    cdf = np.array([np.mean(records.serving <= r) for r in r_grid])
    se = np.sqrt(cdf * (1.0 - cdf) / records.n)
    return cdf, se


def estimate_spectral_efficiency(sc: Scenario, sim: SimConfig,
                                 records: TrialRecords | None = None) -> EstimateWithCI:
    """``E[log2(1 + SINR)]`` with an empty serving set contributing zero."""
    rec = records if records is not None else simulate(sc, sim)
    return _mean_se(np.log2(1.0 + rec.sinr), sim.seed)


def batch_coverage(rec: TrialRecords, sim: SimConfig, beta: float) -> list[EstimateWithCI]:
    """Coverage at one threshold for each simulation batch, in batch order."""
    hit = rec.sinr > beta
    out = []
    for b, start in enumerate(range(0, rec.n, sim.batch_size)):
        part = hit[start:start + sim.batch_size]
        p = float(part.mean())
        out.append(EstimateWithCI(p, math.sqrt(p * (1.0 - p) / part.size), part.size, sim.seed))
    return out
