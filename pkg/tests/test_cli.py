import csv
import io
import json
import math
import subprocess
import sys

import pytest

from dispersive_readout import cli
from dispersive_readout.errors import NumericalFailure


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    doc = json.loads(out)
    assert doc["schema"] == cli.SCHEMA
    return doc["result"]


TRANSMON_INI = """
[physical]
g = 86e6
omega_q = 7e9
omega_r = 6e9
omega_d = 6.0073960e9
kappa_1 = 7.396e6
kappa_2 = 7.396e6
eta = 0.9
alpha_res_sq = 1.0
t_m = 1.2e-6
t_0 = 1e-6
T1 = 20e-6

[run]
units = cyclic
format = json
"""


@pytest.fixture
def ini(tmp_path):
    path = tmp_path / "transmon.ini"
    path.write_text(TRANSMON_INI)
    return str(path)


def test_stats_example(capsys):
    res = run_json(capsys, "stats", "--dx", "D=0.6", "X=0.15", "tau=20")
    assert res["n_up"] == pytest.approx(16.632, abs=1e-3)
    assert res["n_down"] == pytest.approx(12.8, abs=1e-12)
    assert res["n_th"] == 15
    assert res["status"] == "ok"
    for key in ("snr", "fidelity", "fidelity_on_off", "fidelity_gaussian"):
        assert key in res


def test_stats_deltak_matches_dx(capsys):
    a = run_json(capsys, "stats", "--dx", "D=0.6", "X=0.15", "tau=20")
    b = run_json(capsys, "stats", "--deltak", "Delta=4", f"K={1 / 0.15!r}", "Tm=3")
    assert b["fidelity"] == pytest.approx(a["fidelity"], rel=1e-12)


def test_optimize_snr_example(capsys):
    res = run_json(capsys, "optimize-snr", "--X", "1e-3")
    assert res["d_opt"] == pytest.approx(0.7071, abs=1e-4)
    assert res["global"]["c"] == pytest.approx(0.570, abs=1e-3)
    res = run_json(capsys, "optimize-snr", "--X", "1", "--asymmetric")
    assert res["global"]["c"] == pytest.approx(0.806, abs=1e-3)


def test_figures_fig5(capsys, tmp_path):
    res = run_json(capsys, "figures", "--which", "fig5", "--out", str(tmp_path), "--jobs", "2")
    (path,) = res["files"]
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 200 * 200
    assert 0.95 <= max(float(r["fidelity"]) for r in rows) <= 0.96


def test_figures_json_and_all(capsys, tmp_path):
    res = run_json(capsys, "figures", "--out", str(tmp_path), "--format", "json", "--jobs", "1")
    assert len(res["files"]) == 4
    doc = json.load(open(tmp_path / "fig3.json"))
    assert doc["schema"] == cli.SCHEMA
    jumps = doc["tables"]["fig3_jumps"]
    assert jumps["columns"][0] == "X" and len(jumps["rows"]) > 20


def test_sweep_round_trip(capsys):
    code, out, _ = run(capsys, "sweep", "--dx", "D=0:2:9", "X=0.15,1,3", "tau=0.5:30:4:log", "--jobs", "2")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    header, body = rows[0], rows[1:]
    assert header[:3] == ["D", "X", "tau"]
    assert len(body) == 9 * 3 * 4
    for r in body:
        again = cli.sweep_point(("dx", float(r[0]), float(r[1]), float(r[2])))
        for cell, val in zip(r[3:], again[3:]):
            if isinstance(val, float):
                assert float(cell) == pytest.approx(val, rel=1e-9, abs=1e-300)
            elif val is None:
                assert cell == ""
            else:
                assert cell == str(val)


def test_sweep_order_independent_of_jobs(capsys):
    args = ["sweep", "--deltak", "Delta=0.8:1.6:7", "K=0.5,1", "Tm=5:20:5"]
    _, a, _ = run(capsys, *args, "--jobs", "1")
    _, b, _ = run(capsys, *args, "--jobs", "3")
    assert a == b


def test_csv_uses_round_trip_precision(capsys):
    _, out, _ = run(capsys, "stats", "--dx", "D=0.6", "X=0.15", "tau=20", "--format", "csv")
    header, row = list(csv.reader(io.StringIO(out)))
    rec = dict(zip(header, row))
    assert float(rec["n_up"]) == 20 / 1.2025


def test_schema_on_every_command(capsys, ini):
    for argv in (
        ["stats", "--dx", "D=1", "X=1", "tau=3"],
        ["optimize-snr", "--X", "2"],
        ["optimize-fidelity", "--dx", "X=1", "tau=5"],
        ["optimize-fidelity", "--deltak", "Tm=11.29"],
        ["estimate", "--table", "transmon", "--target-fidelity", "0.95"],
        ["mc-check", "--dx", "D=1", "X=1", "tau=5", "--trials", "20000"],
        ["stats", "--physical", ini],
    ):
        run_json(capsys, *argv)


def test_physical_config_and_units(capsys, ini):
    res = run_json(capsys, "stats", "--physical", ini)
    assert res["parametrization"] == "physical"
    assert res["dimensionless"]["X"] == pytest.approx(2 * 7.396e6 / 14.792e6, rel=1e-3)
    assert res["regime"]["verdicts"]["t1_measurement"] == "ok"
    # the flag overrides [run]: angular reading shrinks tau by 2 pi
    ang = run_json(capsys, "stats", "--physical", ini, "--units", "angular")
    assert res["dimensionless"]["tau_m"] / ang["dimensionless"]["tau_m"] == pytest.approx(2 * math.pi)


def test_estimate_table(capsys):
    res = run_json(capsys, "estimate", "--table", "all", "--units", "cyclic")
    assert len(res["rows"]) == 8
    t = {(r["name"], r["target_fidelity"]): r for r in res["rows"]}
    assert t[("transmon", 0.99)]["t_m"] > t[("transmon", 0.95)]["t_m"]
    assert t[("transmon", 0.95)]["T_m"] == pytest.approx(11.29, abs=0.01)


def test_estimate_physical_file(capsys, ini):
    res = run_json(capsys, "estimate", "--physical", ini, "--target-fidelity", "0.95")
    (row,) = res["rows"]
    assert row["name"] == "transmon"
    assert row["fidelity"] == pytest.approx(0.95, abs=1e-4)


def test_mc_check(capsys):
    res = run_json(capsys, "mc-check", "--dx", "D=0.6", "X=0.15", "tau=20", "--trials", "100000", "--seed", "3")
    assert res["verdict"] == "agree"
    assert res["seed"] == 3 and res["trials"] == 100000


def test_optimize_fidelity_jumps(capsys):
    res = run_json(capsys, "optimize-fidelity", "--dx", "X=1", "tau=10", "--jumps", "0.1:10")
    assert [round(j["time"], 3) for j in res["jump_times"]][:2] == [2.177, 4.342]


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["stats"],
        ["stats", "--dx", "D=1", "X=1"],
        ["stats", "--dx", "D=1", "X=1", "tau=1", "--deltak", "Delta=1", "K=1", "Tm=1"],
        ["stats", "--dx", "D=1", "Y=1", "tau=1"],
        ["stats", "--dx", "D=one", "X=1", "tau=1"],
        ["sweep", "--dx", "D=0:1", "X=1", "tau=1"],
        ["stats", "--physical", "/nonexistent.ini"],
        ["figures", "--which", "fig9"],
        ["stats", "--dx", "D=1", "X=1", "tau=1", "--jobs", "0"],
    ],
)
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""


def test_domain_error_json(capsys):
    code, out, err = run(capsys, "stats", "--dx", "D=-1", "X=1", "tau=1", "--json-errors")
    assert code == 3
    doc = json.loads(err)
    assert doc["schema"] == cli.SCHEMA
    assert doc["error"]["type"] == "domain" and doc["error"]["exit_code"] == 3


def test_usage_error_json(capsys):
    code, _, err = run(capsys, "stats", "--json-errors")
    assert code == 2 and json.loads(err)["error"]["type"] == "usage"


def test_numerical_failure_exit(capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericalFailure("no convergence", bracket=(1.0, 2.0))

    monkeypatch.setattr(cli, "snr_optimal_detuning", boom)
    code, _, err = run(capsys, "optimize-snr", "--X", "1", "--json-errors")
    assert code == 4
    assert json.loads(err)["error"]["bracket"] == [1.0, 2.0]


def test_cap_exceeded_is_domain(capsys):
    code, _, _ = run(capsys, "estimate", "--table", "transmon", "--target-fidelity", "0.3")
    assert code == 3


def test_out_file(capsys, tmp_path):
    path = tmp_path / "s.json"
    code, out, _ = run(capsys, "stats", "--dx", "D=1", "X=1", "tau=2", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["command"] == "stats"


def test_entry_point_subprocess():
    p = subprocess.run([sys.executable, "-m", "dispersive_readout", "optimize-snr", "--X", "9"],
                       capture_output=True, text=True)
    assert p.returncode == 0
    assert json.loads(p.stdout)["result"]["d_opt"] == pytest.approx(9.00307, abs=1e-5)
    p = subprocess.run([sys.executable, "-m", "dispersive_readout", "stats", "--nope"],
                       capture_output=True, text=True)
    assert p.returncode == 2
