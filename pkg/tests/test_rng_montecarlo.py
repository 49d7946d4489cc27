import math

import numpy as np
import pytest
from scipy import stats

from dispersive_readout.errors import DomainError
from dispersive_readout.montecarlo import simulate_fidelity, simulate_sequential, split_trials
from dispersive_readout.rng import sample_poisson, stream_key, threefry2x32, uniform
from dispersive_readout.statistics import MeanCounts, fidelity

# Random123 known-answer vectors for Threefry-2x32-20 (also produced by jax)
KAT = [
    ((0, 0), (0, 0), (0x6B200159, 0x99BA4EFE)),
    ((0xFFFFFFFF, 0xFFFFFFFF), (0xFFFFFFFF, 0xFFFFFFFF), (0x1CB996FC, 0xBB002BE7)),
    ((0x13198A2E, 0x03707344), (0x243F6A88, 0x85A308D3), (0xC4923A9C, 0x483DF7A0)),
]


@pytest.mark.parametrize("key,ctr,expect", KAT)
def test_threefry_known_answers(key, ctr, expect):
    assert threefry2x32(key, ctr) == expect


def test_frozen_streams():
    assert sample_poisson(7.3, 12, 2024).tolist() == [6, 11, 6, 10, 5, 9, 8, 6, 8, 9, 2, 4]
    assert sample_poisson(55.0, 12, 2024, stream=3).tolist() == [
        51, 62, 56, 67, 55, 48, 49, 64, 53, 48, 62, 57]


def test_uniform_open_interval():
    key = stream_key(1, 0)
    us = [uniform(key, (i, 0)) for i in range(2000)]
    assert all(0.0 < u < 1.0 for u in us)
    assert uniform(stream_key(2024, 0), (0, 0)) == 0.3579240254281882


def test_streams_independent_and_reproducible():
    a = sample_poisson(4.0, 1000, 9)
    assert np.array_equal(a, sample_poisson(4.0, 1000, 9))
    assert not np.array_equal(a, sample_poisson(4.0, 1000, 9, stream=1))
    assert not np.array_equal(a, sample_poisson(4.0, 1000, 10))
    # prefixes agree: draw i depends only on its counter
    assert np.array_equal(a[:100], sample_poisson(4.0, 100, 9))


@pytest.mark.parametrize("mean", [7.3, 29.9, 30.5, 250.0])
def test_poisson_moments(mean):
    x = sample_poisson(mean, 1_000_000, 12345)
    n = x.size
    se_mean = math.sqrt(mean / n)
    se_var = math.sqrt((2 * mean * mean + mean) / n)  # Var(s^2) for Poisson
    assert abs(x.mean() - mean) < 4 * se_mean
    assert abs(x.var() - mean) < 4 * se_var


@pytest.mark.parametrize("mean", [0.4, 12.0, 80.0])
def test_poisson_distribution_chi_square(mean):
    x = sample_poisson(mean, 200_000, 77)
    lo, hi = int(stats.poisson.ppf(1e-4, mean)), int(stats.poisson.ppf(1 - 1e-4, mean))
    edges = np.arange(lo, hi + 2) - 0.5
    obs, _ = np.histogram(np.clip(x, lo, hi), bins=edges)
    probs = np.diff(stats.poisson.cdf(edges, mean))
    probs[0] += stats.poisson.cdf(lo - 1, mean)
    probs[-1] += stats.poisson.sf(hi, mean)
    exp = probs * x.size
    keep = exp > 5
    chi2 = (((obs - exp) ** 2) / exp)[keep].sum()
    assert stats.chi2.sf(chi2, keep.sum() - 1) > 1e-4


def test_zero_mean_and_errors():
    assert sample_poisson(0.0, 5, 1).tolist() == [0] * 5
    with pytest.raises(DomainError):
        sample_poisson(-1.0, 5, 1)
    with pytest.raises(DomainError):
        stream_key(-1, 0)
    with pytest.raises(DomainError):
        stream_key(2**64, 0)


def test_std_error_never_zero():
    res = simulate_fidelity(MeanCounts(60.0, 0.0), 10_000, seed=1)
    assert res.empirical_fidelity == 1.0
    assert 0.0 < res.std_error < 1e-3
    mid = simulate_fidelity(MeanCounts(2.0, 0.5), 100_000, seed=1)
    f = mid.empirical_fidelity
    assert mid.std_error == pytest.approx(math.sqrt((1 - f * f) / mid.trials), rel=1e-4)


def test_split_trials():
    assert split_trials(10, 3) == [4, 3, 3]
    assert sum(split_trials(1_000_003, 8)) == 1_000_003


def test_oracle_grid():
    ups = [0.5, 2.0, 6.0, 15.0, 40.0]
    for i, up in enumerate(ups):
        for j, frac in enumerate([0.0, 0.1, 0.3, 0.6, 0.9]):
            mc = MeanCounts(up, up * frac)
            res = simulate_fidelity(mc, 200_000, seed=1000 + 5 * i + j)
            assert abs(res.empirical_fidelity - fidelity(mc)) <= 3.5 * res.std_error
            assert res.up_trials + (res.trials - res.up_trials) == res.trials


def test_result_independent_of_jobs():
    mc = MeanCounts(9.0, 3.0)
    a = simulate_fidelity(mc, 100_000, seed=5, jobs=1)
    b = simulate_fidelity(mc, 100_000, seed=5, jobs=4)
    assert a == b
    assert simulate_fidelity(mc, 100_000, seed=5, streams=3) != a


def test_sequential_matches_single_shot_fidelity():
    per_bin = MeanCounts(0.2, 0.05)
    res = simulate_sequential(per_bin, 10, 400_000, seed=3)
    assert res.n_bins == 10
    assert abs(res.empirical_fidelity - fidelity(per_bin.scaled(10))) <= 3.5 * res.std_error


def test_degenerate_flag():
    res = simulate_fidelity(MeanCounts(2.0, 2.0), 100_000, seed=8)
    assert res.degenerate
    assert abs(res.empirical_fidelity) <= 3.5 * res.std_error


@pytest.mark.parametrize("trials", [0, -3, 2.5, True])
def test_bad_trials(trials):
    with pytest.raises(DomainError):
        simulate_fidelity(MeanCounts(2.0, 1.0), trials, seed=1)
