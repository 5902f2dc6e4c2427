"""JSON scenario files: loading, validation and expansion into grid points.

A config names the model (``kind``, ``strategy``, ``params``), one sweep
axis with ``{min, max, n_points}`` (or an explicit ``values`` list), and
optionally simulator settings and a list of ``cases``.  Each case is a dict
of parameter overrides and is swept separately.  ``mc_overrides`` changes
parameters for the simulator only, which is how negative-control fixtures are
built.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .geometry import DomainError
from .montecarlo import SimConfig
from .quadrature import QuadratureSettings
from .scenario import Kind, Scenario

AXES = ("beta_dB", "delta", "delta_c", "alpha", "r")
QUANTITIES = ("coverage", "spectral_efficiency", "contact_cdf")
_PARAM_KEYS = {"lam", "D", "alpha", "sigma2", "d", "delta", "lam_p", "sigma_c", "delta_c", "beta_dB"}


class ConfigError(ValueError):
    pass


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def scenario_dir() -> Path:
    env = os.environ.get("SGCOV_SCENARIO_DIR")
    if env:
        return Path(env)
    return Path(str(resources.files("sgcov") / "scenarios"))


def resolve_path(name: str) -> Path:
    """A filesystem path, or the name of a bundled scenario with or without ``.json``."""
    p = Path(name)
    if p.is_file():
        return p
    base = scenario_dir()
    for cand in (base / name, base / f"{name}.json"):
        if cand.is_file():
            return cand
    raise ConfigError(f"no scenario file or bundled scenario named {name!r}")


def bundled_names() -> list[str]:
    return sorted(p.stem for p in scenario_dir().glob("*.json"))


@dataclass
class Sweep:
    axis: str
    values: np.ndarray


@dataclass
class RunConfig:
    name: str
    quantity: str
    base: dict
    sweep: Sweep
    cases: list = field(default_factory=list)
    lower_bound: bool = False
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    sim: SimConfig | None = None
    mc_overrides: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def case_labels(self) -> list[str]:
        if not self.cases:
            return [""]
        return ["/".join(f"{k}={v:g}" if isinstance(v, (int, float)) else f"{k}={v}"
                         for k, v in case.items()) for case in self.cases]

    def case_params(self) -> list[dict]:
        return [dict(self.base, **case) for case in (self.cases or [{}])]

    def scenario(self, params: dict, axis_value: float | None = None, *, for_mc: bool = False) -> Scenario:
        p = dict(params)
        if for_mc:
            p.update(self.mc_overrides)
        if axis_value is not None and self.sweep.axis not in ("beta_dB", "r"):
            p[self.sweep.axis] = axis_value
            # an axis value replaces any conflicting absolute setting
            if self.sweep.axis == "delta":
                p.pop("d", None)
            if self.sweep.axis == "delta_c":
                p.pop("sigma_c", None)
        return build_scenario(p)


def build_scenario(p: dict) -> Scenario:
    try:
        D = float(p["D"])
        d = float(p["d"]) if "d" in p else float(p.get("delta", 0.0)) * D
        sigma_c = float(p["sigma_c"]) if "sigma_c" in p else float(p.get("delta_c", 0.0)) * D
        return Scenario(
            kind=Kind(p.get("kind", "single")),
            lam=float(p["lam"]),
            D=D,
            alpha=float(p["alpha"]),
            sigma2=float(p.get("sigma2", 1e-4)),
            strategy=p.get("strategy", "closest"),
            d=d,
            lam_p=float(p.get("lam_p", 0.0)),
            sigma_c=sigma_c,
        )
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc.args[0]!r}") from None
    except (TypeError, DomainError) as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(f"bad parameter value: {exc}") from None


def _sweep(spec: dict) -> Sweep:
    axis = spec.get("axis")
    if axis not in AXES:
        raise ConfigError(f"sweep axis must be one of {AXES}, got {axis!r}")
    if "values" in spec:
        vals = np.asarray(spec["values"], dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise ConfigError("sweep values must be a nonempty list")
    else:
        try:
            lo, hi, n = float(spec["min"]), float(spec["max"]), int(spec["n_points"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("sweep needs min, max and n_points") from None
        if n < 2:
            raise ConfigError("sweep n_points must be at least 2")
        vals = np.linspace(lo, hi, n)
    if not np.all(np.isfinite(vals)):
        raise ConfigError("sweep values must be finite")
    return Sweep(axis, np.sort(vals))


def parse_config(raw: dict, name: str = "scenario") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in raw and isinstance(raw["config"], dict):
        # metadata sidecar written by a previous run
        raw = raw["config"]
    params = raw.get("params")
    if not isinstance(params, dict):
        raise ConfigError("config needs a 'params' object")
    unknown = set(params) - _PARAM_KEYS
    if unknown:
        raise ConfigError(f"unknown parameters: {sorted(unknown)}")
    base = dict(params, kind=raw.get("kind", "single"), strategy=raw.get("strategy", "closest"))
    quantity = raw.get("quantity", "coverage")
    if quantity not in QUANTITIES:
        raise ConfigError(f"quantity must be one of {QUANTITIES}")
    if "sweep" not in raw:
        raise ConfigError("config needs a 'sweep' object")
    sweep = _sweep(raw["sweep"])
    if quantity == "coverage" and sweep.axis != "beta_dB" and "beta_dB" not in params:
        raise ConfigError("coverage sweeps over a non-threshold axis need params.beta_dB")
    if quantity == "contact_cdf" and sweep.axis != "r":
        raise ConfigError("contact_cdf sweeps over the 'r' axis")
    cases = raw.get("cases", [])
    if not isinstance(cases, list) or not all(isinstance(c, dict) for c in cases):
        raise ConfigError("cases must be a list of objects")
    for c in cases:
        extra = set(c) - _PARAM_KEYS - {"kind", "strategy"}
        if extra:
            raise ConfigError(f"unknown case keys: {sorted(extra)}")
    try:
        quad = QuadratureSettings(**raw.get("quadrature", {}))
        sim = SimConfig(**raw["sim"]) if "sim" in raw else None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(
        name=raw.get("name", name),
        quantity=quantity,
        base=base,
        sweep=sweep,
        cases=cases,
        lower_bound=bool(raw.get("lower_bound", False)),
        quadrature=quad,
        sim=sim,
        mc_overrides=dict(raw.get("mc_overrides", {})),
        raw=raw,
    )
    # build every grid point once so that bad values fail before any work
    for params in cfg.case_params():
        for v in sweep.values:
            cfg.scenario(params, v)
            if cfg.mc_overrides:
                cfg.scenario(params, v, for_mc=True)
    return cfg


def load_config(name: str) -> RunConfig:
    path = resolve_path(name)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, path.stem)


def fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.12g}"
