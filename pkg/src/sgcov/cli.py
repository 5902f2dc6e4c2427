"""Command-line front end.

    sgcov coverage --config fig5_closest_a4_d23 --out fig5.csv
    sgcov compare --config compare_single_closest --trials 1000000

Every command writes the CSV to ``--out`` (or standard output) with a
``<out>.meta.json`` sidecar that can be fed back through ``--config`` to
reproduce the run.  Exit codes: 0 success, 1 compare mismatch, 2 bad
configuration, 3 quadrature failure (rows flagged, partial CSV written).
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, db_to_linear, fmt, load_config
from .geometry import DomainError
from .montecarlo import (
    InsufficientSamplesError,
    SimConfig,
    batch_coverage,
    coverage_from_records,
    estimate_contact_cdf,
    estimate_spectral_efficiency,
    simulate,
)
from .multi_cluster import contact_cdf
from .quadrature import IntegrationError, KernelConvergenceError
from .scenario import Kind, analytic_coverage, analytic_lower_bound, analytic_spectral_efficiency

HEADER = "axis,axis_value,analytic,lower_bound,mc_mean,mc_stderr,flags"

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_QUADRATURE = 0, 1, 2, 3


@dataclass
class Row:
    case: str
    axis: str
    axis_value: float
    analytic: float | None = None
    lower_bound: float | None = None
    mc_mean: float | None = None
    mc_stderr: float | None = None
    flags: tuple = ()

    def csv(self) -> str:
        flags = list(self.flags)
        if self.case:
            flags.insert(0, f"case={self.case}")
        text = ";".join(flags)
        if "," in text:
            text = '"' + text + '"'
        return ",".join([self.axis, fmt(self.axis_value), fmt(self.analytic), fmt(self.lower_bound),
                         fmt(self.mc_mean), fmt(self.mc_stderr), text])


def derived_seed(seed: int, case: int, point: int) -> int:
    return int(np.random.SeedSequence([seed, case, point]).generate_state(1, np.uint64)[0])


# --------------------------------------------------------------------------
# analytic side
# --------------------------------------------------------------------------

def _safe(fn, *args):
    """Run an analytic evaluation; quadrature failures become flagged NaNs."""
    try:
        return fn(*args), ()
    except (IntegrationError, KernelConvergenceError):
        return None, ("quadrature_failure",)


def _analytic_rows(cfg: RunConfig, threads: int) -> list[Row]:
    rows = []
    axis, values = cfg.sweep.axis, cfg.sweep.values
    settings = cfg.quadrature
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    run = pool.map if pool else map
    try:
        for label, params in zip(cfg.case_labels(), cfg.case_params()):
            if cfg.quantity == "contact_cdf":
                sc = cfg.scenario(params)
                vals, flags = _safe(lambda r: contact_cdf(sc.params, r, settings), values)
                for i, v in enumerate(values):
                    rows.append(Row(label, axis, v, None if vals is None else float(vals[i]), flags=flags))
                continue
            if cfg.quantity == "coverage" and axis == "beta_dB":
                sc = cfg.scenario(params)
                beta = db_to_linear(values)
                cov, flags = _safe(analytic_coverage, sc, beta, settings)
                if cov is None:
                    # isolate the failing thresholds
                    pts = [_safe(analytic_coverage, sc, b, settings) for b in beta]
                else:
                    pts = [(c, flags) for c in cov]
                lbs = [None] * len(values)
                if cfg.lower_bound and sc.kind is Kind.SINGLE:
                    lb, lbf = _safe(analytic_lower_bound, sc, beta, settings)
                    if lb is not None:
                        lbs = list(lb)
                for v, (c, f), lb in zip(values, pts, lbs):
                    rows.append(Row(label, axis, v, None if c is None else float(c),
                                    None if lb is None else float(lb), flags=f))
                continue

            def point(v, params=params):
                sc = cfg.scenario(params, v)
                if cfg.quantity == "spectral_efficiency":
                    val, f = _safe(analytic_spectral_efficiency, sc, settings)
                    return val, None, f
                beta = float(db_to_linear(params["beta_dB"]))
                val, f = _safe(analytic_coverage, sc, beta, settings)
                lb = None
                if cfg.lower_bound and sc.kind is Kind.SINGLE:
                    lb, _ = _safe(analytic_lower_bound, sc, beta, settings)
                return val, lb, f

            for v, (val, lb, f) in zip(values, run(point, values)):
                rows.append(Row(label, axis, v, None if val is None else float(val),
                                None if lb is None else float(lb), flags=f))
    finally:
        if pool:
            pool.shutdown()
    return rows


# --------------------------------------------------------------------------
# simulation side
# --------------------------------------------------------------------------

def _mc_fill(cfg: RunConfig, rows: list[Row], threads: int, dump: list | None = None) -> None:
    """Attach Monte Carlo means and standard errors to ``rows`` in place.

    With ``dump`` (coverage sweeps only) per-batch estimates are appended to
    it as extra rows on the ``batch`` axis.
    """
    if cfg.sim is None:
        raise ConfigError("this command needs a 'sim' section (or --trials)")
    axis, values = cfg.sweep.axis, cfg.sweep.values
    n = len(values)
    for ci, params in enumerate(cfg.case_params()):
        block = rows[ci * n:(ci + 1) * n]
        if cfg.quantity == "contact_cdf" or axis == "beta_dB":
            sc = cfg.scenario(params, for_mc=True)
            if cfg.quantity == "contact_cdf":
                sc = sc.with_(kind=Kind.OPEN, strategy="closest")
            sim = replace(cfg.sim, seed=derived_seed(cfg.sim.seed, ci, 0), threads=threads)
            rec = simulate(sc, sim)
            if cfg.quantity == "contact_cdf":
                mean, se = estimate_contact_cdf(sc.params, values, sim, records=rec)
                ests = list(zip(mean, se))
            else:
                ests = [(e.mean, e.std_error) for e in coverage_from_records(rec, db_to_linear(values))]
                if dump is not None:
                    for row in block:
                        _dump_batches(dump, row, rec, sim, float(db_to_linear(row.axis_value)))
            for row, (m, s) in zip(block, ests):
                row.mc_mean, row.mc_stderr = float(m), float(s)
            continue
        for pi, (row, v) in enumerate(zip(block, values)):
            sc = cfg.scenario(params, v, for_mc=True)
            sim = replace(cfg.sim, seed=derived_seed(cfg.sim.seed, ci, pi), threads=threads)
            rec = simulate(sc, sim)
            if cfg.quantity == "spectral_efficiency":
                e = estimate_spectral_efficiency(sc, sim, records=rec)
            else:
                beta = float(db_to_linear(params["beta_dB"]))
                e = coverage_from_records(rec, beta)
                if dump is not None:
                    _dump_batches(dump, row, rec, sim, beta)
            row.mc_mean, row.mc_stderr = e.mean, e.std_error


def _dump_batches(dump, row, rec, sim, beta):
    point = f"{row.axis}={fmt(row.axis_value)}"
    for b, e in enumerate(batch_coverage(rec, sim, beta)):
        dump.append(Row(row.case, "batch", b, mc_mean=e.mean, mc_stderr=e.std_error, flags=(point,)))


def _blank_rows(cfg: RunConfig) -> list[Row]:
    return [Row(label, cfg.sweep.axis, v)
            for label in cfg.case_labels() for v in cfg.sweep.values]


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def render_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    for row in rows:
        buf.write(row.csv() + "\n")
    return buf.getvalue()


def _metadata(cfg: RunConfig, command: str) -> dict:
    raw = dict(cfg.raw)
    if cfg.sim is not None:
        raw["sim"] = {k: v for k, v in asdict(cfg.sim).items() if k != "threads"}
    raw["quadrature"] = asdict(cfg.quadrature)
    return {
        "command": command,
        "version": __version__,
        "numpy": np.__version__,
        "seed": None if cfg.sim is None else cfg.sim.seed,
        "n_trials": None if cfg.sim is None else cfg.sim.n_trials,
        "truncation_radius": None if cfg.sim is None else cfg.sim.interference_truncation_radius,
        "config": raw,
    }


def _write(rows, cfg, args, command):
    text = render_csv(rows)
    if args.out:
        with open(args.out, "w", newline="") as f:
            f.write(text)
        with open(args.out + ".meta.json", "w") as f:
            json.dump(_metadata(cfg, command), f, indent=2)
            f.write("\n")
    elif command != "compare":
        sys.stdout.write(text)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.trials is not None or args.seed is not None:
        sim = cfg.sim or SimConfig()
        if args.trials is not None:
            sim = replace(sim, n_trials=args.trials)
        if args.seed is not None:
            sim = replace(sim, seed=args.seed)
        cfg.sim = sim
    if args.atol is not None:
        cfg.raw = dict(cfg.raw, atol=args.atol)
    return cfg


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _check_quantity(cfg, wanted):
    if cfg.quantity != wanted:
        raise ConfigError(f"config describes {cfg.quantity}, not {wanted}")


def cmd_analytic(cfg, args, quantity):
    _check_quantity(cfg, quantity)
    rows = _analytic_rows(cfg, args.threads)
    _write(rows, cfg, args, args.command)
    return EXIT_QUADRATURE if any("quadrature_failure" in r.flags for r in rows) else EXIT_OK


def cmd_simulate(cfg, args):
    rows = _blank_rows(cfg)
    dump = None
    if args.dump_batches:
        if cfg.quantity != "coverage":
            raise ConfigError("--dump-batches applies to coverage sweeps only")
        dump = []
    _mc_fill(cfg, rows, args.threads, dump)
    _write(rows, cfg, args, "simulate")
    if dump is not None:
        with open(args.dump_batches, "w", newline="") as f:
            f.write(render_csv(dump))
    return EXIT_OK


def cmd_compare(cfg, args):
    atol = float(cfg.raw.get("atol", 0.01))
    rows = _analytic_rows(cfg, args.threads)
    _mc_fill(cfg, rows, args.threads)
    failures = 0
    out = sys.stdout
    for row in rows:
        if row.analytic is None:
            status = "error"
            tol = float("nan")
        else:
            tol = max(atol, 3.0 * row.mc_stderr)
            status = "pass" if abs(row.analytic - row.mc_mean) <= tol else "fail"
        if status != "pass":
            failures += 1
            row.flags = tuple(row.flags) + (status,)
        out.write(f"case={row.case or '-'} axis={row.axis} value={fmt(row.axis_value)} "
                  f"analytic={fmt(row.analytic) or 'nan'} mc_mean={fmt(row.mc_mean)} "
                  f"mc_stderr={fmt(row.mc_stderr)} tol={fmt(tol)} status={status}\n")
    verdict = "pass" if failures == 0 else "fail"
    out.write(f"summary points={len(rows)} failures={failures} status={verdict}\n")
    _write(rows, cfg, args, "compare")
    if any("quadrature_failure" in r.flags for r in rows):
        return EXIT_QUADRATURE
    return EXIT_OK if failures == 0 else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgcov", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("coverage", "analytic coverage sweep"),
        ("spectral-efficiency", "analytic spectral-efficiency sweep"),
        ("contact-cdf", "contact-distance CDF of the cluster process"),
        ("simulate", "Monte Carlo estimates for the configured sweep"),
        ("compare", "analytic vs Monte Carlo with a pass/fail verdict"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario JSON path or bundled scenario name")
        p.add_argument("--out", help="CSV output path (default: standard output)")
        p.add_argument("--seed", type=int, help="override the simulator seed")
        p.add_argument("--trials", type=int, help="override the number of Monte Carlo trials")
        p.add_argument("--atol", type=float, help="absolute tolerance floor for compare")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        if name == "simulate":
            p.add_argument("--dump-batches", metavar="PATH",
                           help="also write per-batch coverage estimates to PATH")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "coverage":
            return cmd_analytic(cfg, args, "coverage")
        if args.command == "spectral-efficiency":
            return cmd_analytic(cfg, args, "spectral_efficiency")
        if args.command == "contact-cdf":
            return cmd_analytic(cfg, args, "contact_cdf")
        if args.command == "simulate":
            return cmd_simulate(cfg, args)
        return cmd_compare(cfg, args)
    except (ConfigError, DomainError, InsufficientSamplesError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
