"""A fully specified network model: what is deployed, where the receiver is,
and how it picks its transmitter."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .geometry import DomainError
from .multi_cluster import (
    AccessMode,
    MultiClusterParams,
    coverage_closed_access,
    coverage_open_access,
    spectral_efficiency_multi,
)
from .quadrature import QuadratureSettings
from .single_cluster import (
    ChannelModel,
    SingleClusterGeometry,
    Strategy,
    coverage,
    coverage_lower_bound,
    spectral_efficiency,
)


class Kind(enum.Enum):
    SINGLE = "single"
    CLOSED = "closed"
    OPEN = "open"


@dataclass(frozen=True)
class Scenario:
    """Model record consumed by both the analytics and the simulator.

    ``d`` is used by single-cluster models, ``lam_p`` and ``sigma_c`` by the
    cluster-process models.  ``strategy`` is ignored for open access, which
    always serves from the nearest transmitter.
    """
    kind: Kind
    lam: float
    D: float
    alpha: float
    sigma2: float = 1e-4
    strategy: Strategy = Strategy.CLOSEST
    d: float = 0.0
    lam_p: float = 0.0
    sigma_c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        ChannelModel(self.alpha, self.sigma2)
        if self.kind is Kind.SINGLE:
            SingleClusterGeometry(self.lam, self.D, self.d)
        else:
            # open access has no offset; any positive placeholder will do
            MultiClusterParams(self.lam_p, self.lam, self.D, self.sigma_c or 1.0)
            if self.kind is Kind.CLOSED and not self.sigma_c > 0:
                raise DomainError("closed access needs sigma_c > 0")
        if self.kind is Kind.OPEN and self.strategy is not Strategy.CLOSEST:
            raise DomainError("open access supports closest selection only")

    @property
    def channel(self) -> ChannelModel:
        return ChannelModel(self.alpha, self.sigma2)

    @property
    def geometry(self) -> SingleClusterGeometry:
        return SingleClusterGeometry(self.lam, self.D, self.d)

    @property
    def params(self) -> MultiClusterParams:
        return MultiClusterParams(self.lam_p, self.lam, self.D, self.sigma_c or 1.0)

    @property
    def access_mode(self) -> AccessMode:
        if self.kind is Kind.OPEN:
            return AccessMode.OPEN_CLOSEST
        if self.strategy is Strategy.CLOSEST:
            return AccessMode.CLOSED_CLOSEST
        return AccessMode.CLOSED_UNIFORM

    @property
    def mean_count(self) -> float:
        return self.lam * math.pi * self.D**2

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def analytic_coverage(sc: Scenario, beta, settings: QuadratureSettings | None = None):
    """Coverage at linear thresholds ``beta`` from the matching closed-form model."""
    if sc.kind is Kind.SINGLE:
        return coverage(sc.strategy, sc.geometry, sc.channel, beta, settings)
    if sc.kind is Kind.CLOSED:
        return coverage_closed_access(sc.access_mode, sc.params, sc.channel, beta, settings)
    return coverage_open_access(sc.params, sc.channel, beta, settings)


def analytic_lower_bound(sc: Scenario, beta, settings: QuadratureSettings | None = None):
    """Closed-form-LT lower bound on coverage; only defined for a single cluster."""
    if sc.kind is not Kind.SINGLE:
        return None
    return coverage_lower_bound(sc.strategy, sc.geometry, sc.channel, beta, settings)


def analytic_spectral_efficiency(sc: Scenario, settings: QuadratureSettings | None = None) -> float:
    if sc.kind is Kind.SINGLE:
        return spectral_efficiency(sc.strategy, sc.geometry, sc.channel, settings)
    return spectral_efficiency_multi(sc.access_mode, sc.params, sc.channel, settings)
