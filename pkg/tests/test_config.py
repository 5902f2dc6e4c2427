import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgcov.config import (
    ConfigError,
    bundled_names,
    db_to_linear,
    fmt,
    linear_to_db,
    load_config,
    parse_config,
    resolve_path,
)
from sgcov.scenario import Kind

BASE = {"params": {"lam": 0.01, "D": 15, "alpha": 4, "delta": 0.5},
        "sweep": {"axis": "beta_dB", "min": -10, "max": 10, "n_points": 3}}


def cfg(**changes):
    raw = json.loads(json.dumps(BASE))
    raw.update(changes)
    return raw


@given(st.floats(-200, 200))
def test_db_round_trip(x):
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-9)


def test_db_values():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(-3.0) == pytest.approx(0.501187, rel=1e-5)


def test_fmt():
    assert fmt(None) == "" and fmt(float("nan")) == ""
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(2.0) == "2"


def test_parse_minimal():
    c = parse_config(cfg())
    assert c.quantity == "coverage"
    assert np.allclose(c.sweep.values, [-10, 0, 10])
    sc = c.scenario(c.case_params()[0])
    assert sc.kind is Kind.SINGLE and sc.d == pytest.approx(7.5)
    assert c.case_labels() == [""]


def test_cases_and_overrides():
    c = parse_config(cfg(cases=[{"alpha": 3}, {"alpha": 4, "strategy": "uniform"}], mc_overrides={"alpha": 3}))
    assert c.case_labels() == ["alpha=3", "alpha=4/strategy=uniform"]
    p = c.case_params()[1]
    assert c.scenario(p).alpha == 4 and c.scenario(p, for_mc=True).alpha == 3


def test_axis_replaces_absolute_setting():
    raw = cfg(sweep={"axis": "delta", "values": [0.0, 1.0]})
    raw["params"].update(d=3.0, beta_dB=0)
    c = parse_config(raw)
    assert c.scenario(c.case_params()[0], 1.0).d == pytest.approx(15.0)


@pytest.mark.parametrize("raw", [
    [],
    {"sweep": BASE["sweep"]},
    cfg(sweep={"axis": "beta_dB", "min": 0, "max": 1, "n_points": 1}),
    cfg(sweep={"axis": "gamma", "min": 0, "max": 1, "n_points": 2}),
    cfg(sweep={"axis": "beta_dB"}),
    cfg(sweep={"axis": "beta_dB", "values": [0, float("inf")]}),
    cfg(quantity="throughput"),
    cfg(kind="hybrid"),
    cfg(strategy="random"),
    cfg(params={"lam": -1, "D": 15, "alpha": 4}),
    cfg(params={"lam": 0.01, "D": 15, "alpha": 2}),
    cfg(params={"lam": 0.01, "D": 15}),
    cfg(params={"lam": 0.01, "D": 15, "alpha": 4, "colour": 1}),
    cfg(cases=[{"shape": 1}]),
    cfg(cases={"alpha": 3}),
    cfg(sim={"n_trials": 0}),
    cfg(sim={"bogus": 1}),
    cfg(quadrature={"rel_tol": -1}),
    cfg(sweep={"axis": "delta", "values": [0, 1]}),
    cfg(quantity="contact_cdf"),
    cfg(kind="open", strategy="uniform", params={"lam": 0.01, "D": 15, "alpha": 4, "lam_p": 4e-4}),
    cfg(kind="closed", params={"lam": 0.01, "D": 15, "alpha": 4, "lam_p": 4e-4}),
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_bundled_scenarios_load():
    names = bundled_names()
    for required in ("fig5_closest_a4_d23", "fig6", "fig7", "fig8", "fig9", "fig10", "contact_cdf",
                     "compare_single_closest", "compare_multi_open", "compare_corrupt_alpha"):
        assert required in names
    for name in names:
        load_config(name)


def test_scenario_dir_override(tmp_path, monkeypatch):
    (tmp_path / "mine.json").write_text(json.dumps(cfg()))
    monkeypatch.setenv("SGCOV_SCENARIO_DIR", str(tmp_path))
    assert resolve_path("mine") == tmp_path / "mine.json"
    assert bundled_names() == ["mine"]
    with pytest.raises(ConfigError):
        resolve_path("fig6")


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_metadata_sidecar_accepted():
    c = parse_config({"version": "x", "config": cfg()})
    assert c.sweep.values.size == 3
