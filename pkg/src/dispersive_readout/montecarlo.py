"""Monte Carlo oracle for the analytic fidelity.

Each trial prepares 'up' or 'down' with probability 1/2, draws a Poisson
count (or a sum over bins) and thresholds it. Fidelity here means one minus
the sum of both error probabilities, so the estimator is ``2 p - 1`` with
``p`` the fraction of correct decisions.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ._backend import kernels
from .errors import DomainError
from .rng import stream_key
from .statistics import MeanCounts, threshold_count

__all__ = ["McResult", "simulate_fidelity", "simulate_sequential", "split_trials"]

DEFAULT_STREAMS = 8


@dataclass(frozen=True)
class McResult:
    """Outcome of a Monte Carlo fidelity estimate.

    Attributes:
        trials: Number of simulated measurements.
        empirical_fidelity: ``2 * fraction_correct - 1``; may dip slightly
            below zero for indistinguishable states.
        std_error: Standard error of ``empirical_fidelity``,
            ``2 sqrt(p (1 - p) / trials)`` with ``p = (correct + 1) / (trials + 2)``;
            this is ``sqrt((1 - F^2) / trials)`` away from the edges.
        seed: Seed the streams were derived from.
        streams: Number of independent streams.
        fraction_correct: Share of correct decisions.
        n_th: Threshold applied to the summed count.
        n_bins: Bins summed per trial.
        up_trials: Trials prepared in the excited state.
        up_errors: Excited-state trials declared 'down'.
        down_errors: Ground-state trials declared 'up'.
        degenerate: Both states share one count distribution.
    """

    trials: int
    empirical_fidelity: float
    std_error: float
    seed: int
    streams: int
    fraction_correct: float
    n_th: int
    n_bins: int
    up_trials: int
    up_errors: int
    down_errors: int
    degenerate: bool

    def as_dict(self):
        return dict(self.__dict__)


def split_trials(trials, streams):
    """Sizes of ``streams`` near-equal partitions of ``trials``."""
    base, extra = divmod(trials, streams)
    return [base + (1 if i < extra else 0) for i in range(streams)]


def _run(up_bin, down_bin, n_bins, n_th, trials, seed, streams, jobs):
    if isinstance(trials, bool) or int(trials) != trials or trials < 1:
        raise DomainError(f"trials must be a positive integer, got {trials!r}")
    trials = int(trials)
    if streams < 1:
        raise DomainError(f"streams must be >= 1, got {streams}")
    sizes = split_trials(trials, streams)
    if max(sizes) > 0xFFFFFFFF:
        raise DomainError("too many trials per stream; raise the stream count")
    tasks = [(stream_key(seed, i), n) for i, n in enumerate(sizes) if n]

    def one(task):
        (k0, k1), n = task
        return kernels.simulate(k0, k1, n, up_bin, down_bin, n_bins, n_th)

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(one, tasks))
    else:
        parts = [one(t) for t in tasks]
    up_t = sum(p[0] for p in parts)
    up_c = sum(p[1] for p in parts)
    down_t = sum(p[2] for p in parts)
    down_c = sum(p[3] for p in parts)
    frac = (up_c + down_c) / trials
    fid = 2.0 * frac - 1.0
    return McResult(
        trials=trials,
        empirical_fidelity=fid,
        std_error=_std_error(up_c + down_c, trials),
        seed=int(seed),
        streams=streams,
        fraction_correct=frac,
        n_th=n_th,
        n_bins=n_bins,
        up_trials=up_t,
        up_errors=up_t - up_c,
        down_errors=down_t - down_c,
        degenerate=False,
    )


def _std_error(correct, trials):
    # sqrt((1 - F^2) / N) = 2 sqrt(p (1 - p) / N), with p smoothed by
    # Laplace's rule so that a run without errors keeps a nonzero error bar
    p = (correct + 1.0) / (trials + 2.0)
    return 2.0 * math.sqrt(p * (1.0 - p) / trials)


def _threshold(mc):
    if mc.is_degenerate:
        # any threshold is equally useless; use the crossing limit
        return max(1, math.ceil(mc.n_up)), True
    return threshold_count(mc), False


def simulate_fidelity(mc: MeanCounts, trials, seed, streams=DEFAULT_STREAMS, jobs=1) -> McResult:
    """Estimate the fidelity at ``mc`` by direct sampling.

    Args:
        mc: Mean counts of the two states.
        trials: Number of measurements, ``>= 1``.
        seed: 64-bit seed.
        streams: Independent counter streams; the result depends on
            ``(seed, streams)`` but not on ``jobs``.
        jobs: Worker threads.

    Raises:
        DomainError: For ``trials < 1`` or an invalid seed.
    """
    n_th, degenerate = _threshold(mc)
    res = _run(mc.n_up, mc.n_down, 1, n_th, trials, seed, streams, jobs)
    return _flag(res, degenerate)


def simulate_sequential(mc_per_bin: MeanCounts, n_bins, trials, seed, streams=DEFAULT_STREAMS, jobs=1):
    """Like :func:`simulate_fidelity`, but each count is a sum over bins.

    The threshold is the one of the summed means ``n_bins * mc_per_bin``.
    """
    if isinstance(n_bins, bool) or int(n_bins) != n_bins or n_bins < 1:
        raise DomainError(f"n_bins must be a positive integer, got {n_bins!r}")
    n_bins = int(n_bins)
    n_th, degenerate = _threshold(mc_per_bin.scaled(n_bins))
    res = _run(mc_per_bin.n_up, mc_per_bin.n_down, n_bins, n_th, trials, seed, streams, jobs)
    return _flag(res, degenerate)


def _flag(res, degenerate):
    if not degenerate:
        return res
    return McResult(**{**res.as_dict(), "degenerate": True})
