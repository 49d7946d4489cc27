import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispersive_readout.errors import DegenerateStatisticsError, DomainError
from dispersive_readout.statistics import (
    DimensionlessDeltaK,
    DimensionlessDX,
    MeanCounts,
    continuous_threshold,
    evaluate_point,
    fidelity,
    fidelity_for_threshold,
    fidelity_gaussian,
    fidelity_gaussian_snr,
    fidelity_on_off,
    infidelity,
    mean_counts_deltak,
    mean_counts_dx,
    mean_counts_signed,
    snr,
    threshold_count,
)

means = st.tuples(st.floats(0.01, 300.0), st.floats(0.0, 1.0)).map(
    lambda t: MeanCounts(t[0], t[0] * t[1])
)


def direct_fidelity(mc, n):
    """1 - sum_{k<n} P_up(k) - sum_{k>=n} P_down(k), by brute summation."""
    def pmf(k, m):
        if m == 0.0:
            return 1.0 if k == 0 else 0.0
        return math.exp(k * math.log(m) - m - math.lgamma(k + 1))

    err_up = math.fsum(pmf(k, mc.n_up) for k in range(n))
    err_down = 1.0 - math.fsum(pmf(k, mc.n_down) for k in range(n))
    return 1.0 - err_up - err_down


def test_fig4_point_means():
    mc = mean_counts_dx(DimensionlessDX(0.6, 0.15, 20.0))
    assert mc.n_up == pytest.approx(20.0 / 1.2025, rel=1e-14)
    assert mc.n_down == pytest.approx(12.8, rel=1e-14)


def test_parametrizations_agree():
    rnd = random.Random(3)
    for _ in range(50):
        p = DimensionlessDX(rnd.uniform(0, 5), rnd.uniform(0.01, 5), rnd.uniform(0, 50))
        a = mean_counts_dx(p)
        b = mean_counts_deltak(p.to_deltak())
        assert b.n_up == pytest.approx(a.n_up, rel=1e-13)
        assert b.n_down == pytest.approx(a.n_down, rel=1e-13, abs=1e-300)
        back = p.to_deltak().to_dx()
        assert (back.D, back.X, back.tau_m) == pytest.approx((p.D, p.X, p.tau_m), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 50))
def test_reflection_symmetry(D, X, tau):
    a = mean_counts_signed(D, X, tau)
    b = mean_counts_signed(-D, X, tau)
    c = mean_counts_signed(D, -X, tau)
    assert sorted(a) == pytest.approx(sorted(b))
    assert sorted(a) == pytest.approx(sorted(c))
    hi, lo = max(a), min(a)
    if hi > lo:
        mc = MeanCounts(hi, lo)
        canon = mean_counts_dx(DimensionlessDX(abs(D), abs(X), tau))
        assert fidelity(canon) == pytest.approx(fidelity(mc), abs=1e-12)
        assert snr(canon) == pytest.approx(snr(mc), abs=1e-12)


def test_threshold_formula():
    mc = MeanCounts(16.632016632016633, 12.8)
    cont = (mc.n_up - mc.n_down) / math.log(mc.n_up / mc.n_down)
    assert continuous_threshold(mc) == pytest.approx(cont, rel=1e-14)
    assert threshold_count(mc) == math.ceil(cont) == 15
    assert threshold_count(MeanCounts(0.3, 0.0)) == 1
    assert threshold_count(MeanCounts(1e-4, 1e-5)) == 1


def test_threshold_for_nearly_equal_means():
    mc = MeanCounts(100.0 * (1 + 1e-12), 100.0)
    assert continuous_threshold(mc) == pytest.approx(100.0, rel=1e-9)


def test_fidelity_known_value():
    # two-count threshold with means 2 and 0.5 has F = Q(2,.5) - Q(2,2)
    mc = MeanCounts(2.0, 0.5)
    expect = 1.5 * math.exp(-0.5) - 3.0 * math.exp(-2.0)
    assert threshold_count(mc) == 2
    assert fidelity(mc) == pytest.approx(expect, rel=1e-14)


@settings(max_examples=300, deadline=None)
@given(means)
def test_fidelity_equals_direct_sum(mc):
    if mc.is_degenerate:
        return
    n = threshold_count(mc)
    assert fidelity(mc) == pytest.approx(direct_fidelity(mc, n), abs=1e-9)


def test_fidelity_direct_sum_large_means():
    for up, down in [(1e4, 9.6e3), (5e3, 1e3), (800.0, 790.0)]:
        mc = MeanCounts(up, down)
        assert fidelity(mc) == pytest.approx(direct_fidelity(mc, threshold_count(mc)), abs=1e-9)


def test_infidelity_tiny():
    import mpmath

    mc = MeanCounts(400.0, 1.0)
    n = threshold_count(mc)
    exact = mpmath.gammainc(n, 400.0, mpmath.inf, regularized=True) + mpmath.gammainc(
        n, 0, 1.0, regularized=True
    )
    assert fidelity(mc) == 1.0
    assert infidelity(mc) == pytest.approx(float(exact), rel=1e-12)
    assert infidelity(mc) < 1e-90


@settings(max_examples=300, deadline=None)
@given(means)
def test_pnr_dominates_on_off(mc):
    if mc.is_degenerate:
        return
    f, f10 = fidelity(mc), fidelity_on_off(mc)
    if threshold_count(mc) == 1:
        assert f == pytest.approx(f10, abs=1e-15)
    else:
        assert f > f10 - 1e-15
        assert f - f10 > 0 or math.isclose(f, f10, abs_tol=1e-12)


def test_on_off_strictly_worse_when_threshold_above_one():
    mc = MeanCounts(12.0, 2.0)
    assert threshold_count(mc) > 1
    assert fidelity(mc) > fidelity_on_off(mc) + 0.1


def test_threshold_is_optimal_by_brute_force():
    for up in np.linspace(0.2, 8.0, 14):
        for frac in np.linspace(0.0, 0.95, 12):
            mc = MeanCounts(float(up), float(up * frac))
            if mc.is_degenerate:
                continue
            top = int(up + 10 * math.sqrt(up)) + 1
            best = max(fidelity_for_threshold(mc, n) for n in range(top + 1))
            assert fidelity(mc) >= best - 1e-14


def test_scaling_never_hurts():
    for up in (0.1, 1.0, 4.0, 30.0):
        for frac in (0.05, 0.3, 0.8):
            mc = MeanCounts(up, up * frac)
            fs = [fidelity(mc.scaled(c)) for c in np.linspace(1.0, 6.0, 60)]
            assert all(b >= a - 1e-12 for a, b in zip(fs, fs[1:]))


def test_gaussian_convergence():
    rnd = random.Random(11)
    for _ in range(200):
        down = rnd.uniform(10.0, 400.0)
        mc = MeanCounts(down * rnd.uniform(1.0001, 3.0), down)
        assert abs(fidelity_gaussian(mc) - fidelity(mc)) <= 0.01


def test_gaussian_snr_form():
    mc = MeanCounts(25.0, 16.0)
    assert fidelity_gaussian_snr(mc) == pytest.approx(math.erf(1.0 / math.sqrt(2.0)))
    assert abs(fidelity_gaussian(mc) - fidelity_gaussian_snr(mc)) < 0.005


def test_gaussian_needs_positive_down():
    with pytest.raises(DomainError):
        fidelity_gaussian(MeanCounts(3.0, 0.0))


def test_degenerate_handling():
    mc = mean_counts_dx(DimensionlessDX(0.0, 0.5, 10.0))
    assert mc.is_degenerate
    with pytest.raises(DegenerateStatisticsError):
        threshold_count(mc)
    assert fidelity(mc) == 0.0
    stats = evaluate_point(mc)
    assert stats.status == "degenerate" and stats.n_th is None
    assert mean_counts_dx(DimensionlessDX(0.7, 0.0, 3.0)).is_degenerate
    assert mean_counts_deltak(DimensionlessDeltaK(0.0, 1.0, 3.0)).is_degenerate


def test_evaluate_point_fields():
    s = evaluate_point(MeanCounts(16.632016632016633, 12.8))
    d = s.as_dict()
    assert s.status == "ok"
    assert d["n_th"] == 15
    assert d["snr"] == pytest.approx(math.sqrt(16.632016632016633) - math.sqrt(12.8))
    assert 0.0 < d["fidelity_on_off"] < d["fidelity"] < 1.0


@pytest.mark.parametrize(
    "make",
    [
        lambda: MeanCounts(1.0, 2.0),
        lambda: MeanCounts(-1.0, 0.0),
        lambda: MeanCounts(math.inf, 1.0),
        lambda: DimensionlessDX(-0.1, 1.0, 1.0),
        lambda: DimensionlessDX(0.1, 1.0, math.nan),
        lambda: DimensionlessDeltaK(1.0, 0.0, 1.0),
        lambda: DimensionlessDX(1.0, 0.0, 1.0).to_deltak(),
    ],
)
def test_invalid_inputs(make):
    with pytest.raises(DomainError):
        make()
