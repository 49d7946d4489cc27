import math

import numpy as np
import pytest

from dispersive_readout.figures import fig2_data, fig3_data, fig4_data, fig5_data


def test_fig2_columns_and_gain():
    t = fig2_data(np.array([0.1, 1.0, 3.0]))["fig2"]
    rec = t.as_records()
    assert [r["X"] for r in rec] == [0.1, 1.0, 3.0]
    for r in rec:
        assert r["snr1_opt"] >= r["snr1_naive"]
        assert r["d_opt_minus_X"] == pytest.approx(r["d_opt"] - r["X"])


def test_fig3_small():
    out = fig3_data(xs=(1.0,), tau_max=5.0)
    rows = out["fig3"].as_records()
    assert len(rows) == 50
    assert all(r["d_lo"] < r["d_opt"] <= r["d_hi"] for r in rows)
    assert [round(j["tau_m"], 3) for j in out["fig3_jumps"].as_records()] == [2.177, 4.342]


def test_fig4_pmf_and_continuation_agree_at_integers():
    out = fig4_data()
    rows = out["fig4"].as_records()
    pmf = {(r["tau_m"], r["n"]): r["p_up"] for r in rows if r["kind"] == "pmf"}
    cont = {(r["tau_m"], r["n"]): r["p_up"] for r in rows if r["kind"] == "cont"}
    for key, p in pmf.items():
        assert cont[key] == pytest.approx(p, rel=1e-12)
    for tau in (0.5, 20.0):
        assert math.fsum(p for (t, _), p in pmf.items() if t == tau) == pytest.approx(1.0, abs=1e-9)
    thr = out["fig4_thresholds"].as_records()
    assert thr[1]["n_th"] == 15 and thr[1]["n_down"] == pytest.approx(12.8)


def test_fig5_parallel_matches_serial():
    d = np.linspace(0.9, 1.4, 20)
    k = np.linspace(0.5, 1.3, 20)
    a = fig5_data(deltas=d, ks=k, jobs=1)["fig5"].rows
    b = fig5_data(deltas=d, ks=k, jobs=3)["fig5"].rows
    assert a == b
