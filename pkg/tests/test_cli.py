import json

import pytest

from sgcov.cli import HEADER, derived_seed, main


def write(tmp_path, raw, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


SMALL = {"kind": "single", "strategy": "closest",
         "params": {"lam": 0.01, "D": 15, "alpha": 4, "delta": 0.6666666666666666},
         "sweep": {"axis": "beta_dB", "min": -5, "max": 5, "n_points": 2},
         "sim": {"n_trials": 20000, "seed": 3}}


def read_rows(path):
    lines = open(path).read().splitlines()
    assert lines[0] == HEADER
    return [line.split(",") for line in lines[1:]]


def test_two_point_grid(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["coverage", "--config", write(tmp_path, SMALL), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 2
    assert [r[0] for r in rows] == ["beta_dB", "beta_dB"]
    assert [float(r[1]) for r in rows] == [-5.0, 5.0]
    assert float(rows[0][2]) > float(rows[1][2])
    assert rows[0][3:6] == ["", "", ""]
    meta = json.loads(open(str(out) + ".meta.json").read())
    assert meta["config"]["params"] == SMALL["params"]
    assert {"version", "seed", "n_trials", "truncation_radius", "numpy", "config"} <= set(meta)


def test_stdout_output(tmp_path, capsys):
    assert main(["coverage", "--config", write(tmp_path, SMALL)]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == HEADER and len(text.splitlines()) == 3


def test_lower_bound_column(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["coverage", "--config", write(tmp_path, dict(SMALL, lower_bound=True)), "--out", str(out)]) == 0
    for row in read_rows(out):
        assert float(row[3]) <= float(row[2])


def test_metadata_round_trip(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", write(tmp_path, SMALL), "--out", str(a), "--seed", "11",
                 "--trials", "3000"]) == 0
    assert main(["simulate", "--config", str(a) + ".meta.json", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_compare_pass_and_report(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["compare", "--config", write(tmp_path, SMALL), "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1].startswith("summary ") and "status=pass" in lines[-1]
    fields = dict(kv.split("=", 1) for kv in lines[0].split())
    assert {"axis", "value", "analytic", "mc_mean", "mc_stderr", "tol", "status"} <= set(fields)
    assert all(r[4] for r in read_rows(out))


def test_compare_negative_control(capsys):
    assert main(["compare", "--config", "compare_corrupt_alpha"]) == 1
    assert "status=fail" in capsys.readouterr().out.splitlines()[-1]


def test_compare_needs_sim(tmp_path):
    raw = {k: v for k, v in SMALL.items() if k != "sim"}
    assert main(["compare", "--config", write(tmp_path, raw)]) == 2


def test_compare_thread_independence(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cfg = write(tmp_path, dict(SMALL, sweep={"axis": "delta", "values": [0.5, 1.0]},
                               params=dict(SMALL["params"], beta_dB=0)))
    assert main(["compare", "--config", cfg, "--out", str(a), "--threads", "1"]) == 0
    assert main(["compare", "--config", cfg, "--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_errors_exit_2(tmp_path):
    assert main(["coverage", "--config", "no_such_scenario"]) == 2
    bad = dict(SMALL, params={"lam": 0.01, "D": 15, "alpha": 1.5})
    assert main(["coverage", "--config", write(tmp_path, bad)]) == 2
    assert main(["spectral-efficiency", "--config", write(tmp_path, SMALL)]) == 2
    assert main(["coverage", "--config", write(tmp_path, SMALL), "--threads", "0"]) == 2


def test_quadrature_failure_exit_3(tmp_path):
    out = tmp_path / "q.csv"
    raw = dict(SMALL, quadrature={"abs_tol": 1e-300, "rel_tol": 1e-15, "max_subdivisions": 2})
    assert main(["coverage", "--config", write(tmp_path, raw), "--out", str(out)]) == 3
    rows = read_rows(out)
    assert len(rows) == 2 and all("quadrature_failure" in r[6] for r in rows)


def test_spectral_efficiency_empty_network(tmp_path, capsys):
    raw = dict(SMALL, quantity="spectral_efficiency",
               params={"lam": 1e-9, "D": 15, "alpha": 4},
               sweep={"axis": "delta", "values": [0.5, 1.0]})
    assert main(["spectral-efficiency", "--config", write(tmp_path, raw)]) == 0
    rows = [line.split(",") for line in capsys.readouterr().out.splitlines()[1:]]
    assert all(float(r[2]) < 1e-4 for r in rows)


def test_contact_cdf_command(tmp_path, capsys):
    assert main(["contact-cdf", "--config", "contact_cdf"]) == 0
    rows = [line.split(",") for line in capsys.readouterr().out.splitlines()[1:]]
    vals = [float(r[2]) for r in rows]
    assert len(vals) == 20 and vals == sorted(vals)


def test_dump_batches(tmp_path):
    dump = tmp_path / "d.csv"
    assert main(["simulate", "--config", write(tmp_path, SMALL), "--trials", "5000",
                 "--dump-batches", str(dump)]) == 0
    rows = read_rows(dump)
    assert {r[0] for r in rows} == {"batch"}
    assert len(rows) == 2 * 2


def test_derived_seed_stable():
    assert derived_seed(1, 0, 0) == derived_seed(1, 0, 0)
    assert derived_seed(1, 0, 1) != derived_seed(1, 1, 0)


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


# closest selection, alpha = 4, delta = 2/3; validated against 1e6-trial MC and then frozen
FIG5_CLOSEST_A4_D23 = {-30: 0.998189199788, -20: 0.989738685975, -10: 0.918790886635, 0: 0.61333383369,
                       10: 0.24365026944, 20: 0.0784400557497, 30: 0.0248117296973, 40: 0.00784622601024}


def test_bundled_fig5_regression(tmp_path):
    out = tmp_path / "f5.csv"
    assert main(["coverage", "--config", "fig5_closest_a4_d23", "--out", str(out)]) == 0
    rows = {float(r[1]): float(r[2]) for r in read_rows(out)}
    assert len(rows) == 71
    for b, p in FIG5_CLOSEST_A4_D23.items():
        assert rows[b] == pytest.approx(p, rel=1e-9)


def test_bundled_fig6_sweep(tmp_path):
    out = tmp_path / "f6.csv"
    assert main(["coverage", "--config", "fig6", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 4 * 31
    curve = [(float(r[1]), float(r[2])) for r in rows if r[6] == "case=strategy=closest/beta_dB=0"]
    best = max(curve, key=lambda t: t[1])[0]
    # peak of the closest-selection 0 dB curve on the 0.1-spaced grid
    assert best == pytest.approx(0.7)
