"""Data behind the published figures; no plotting.

Each ``figN_data`` returns a mapping from table name to :class:`Table`.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .fidelity_opt import fidelity_detuning_bounds, fidelity_jump_times, fidelity_optimal_detuning
from .pool import parallel_map
from .snr import snr1, snr_detuning_large_x_approx, snr_optimal_detuning
from .statistics import (
    DimensionlessDX,
    MeanCounts,
    continuous_threshold,
    mean_counts_dx,
    threshold_count,
)

__all__ = ["FIGURES", "Table", "fig2_data", "fig3_data", "fig4_data", "fig5_data"]


@dataclass
class Table:
    columns: list
    rows: list

    def as_records(self):
        return [dict(zip(self.columns, r)) for r in self.rows]


def fig2_data(xs=None):
    """Optimal versus naive detuning for SNR as a function of pull."""
    if xs is None:
        xs = np.linspace(0.02, 3.5, 175)
    rows = []
    for X in xs:
        X = float(X)
        o = snr_optimal_detuning(X)
        naive = snr1(X, X)
        rows.append([
            X, o.d_opt, o.d_opt - X, o.snr1, naive, o.snr1 - naive,
            snr_detuning_large_x_approx(X, "xi"), snr_detuning_large_x_approx(X, "simple"),
            o.method,
        ])
    cols = ["X", "d_opt", "d_opt_minus_X", "snr1_opt", "snr1_naive", "snr1_gain",
            "d_approx_xi", "d_approx_simple", "method"]
    return {"fig2": Table(cols, rows)}


def _fig3_row(args):
    X, tau = args
    o = fidelity_optimal_detuning(X, tau)
    return [X, tau, o.d_opt, o.fidelity, o.n_th, o.branch]


def fig3_data(xs=(1.0, 9.0), tau_max=45.0, step=0.1, jobs=1):
    """Fidelity-optimal detuning versus time, with its jumps."""
    points = []
    for X in xs:
        n = int(round(tau_max / step))
        points.extend((float(X), round((i + 1) * step, 10)) for i in range(n))
    rows = parallel_map(_fig3_row, points, jobs)
    extra = {}
    for X in xs:
        d_lo, d_hi = fidelity_detuning_bounds(X)
        extra[float(X)] = (snr_optimal_detuning(X).d_opt, d_lo, d_hi)
    for r in rows:
        r.extend(extra[r[0]])
    cols = ["X", "tau_m", "d_opt", "fidelity", "n_th", "branch", "d_snr", "d_lo", "d_hi"]
    jrows = []
    for X in xs:
        for j in fidelity_jump_times(X, (step, tau_max), step=step):
            jrows.append([float(X), j.time, j.n_th_before, j.n_th_after, j.d_before, j.d_after,
                          j.kind, j.fidelity_before, j.fidelity_after, j.bound_time])
    jcols = ["X", "tau_m", "n_th_before", "n_th_after", "d_before", "d_after", "kind",
             "fidelity_before", "fidelity_after", "bound_time"]
    return {"fig3": Table(cols, rows), "fig3_jumps": Table(jcols, jrows)}


def fig4_data(D=0.6, X=0.15, taus=(0.5, 20.0), cont_step=0.05):
    """Count distributions for both states, their Gaussian approximations and
    the real-argument continuation of the Poisson law."""
    rows, thr = [], []
    for tau in taus:
        mc = mean_counts_dx(DimensionlessDX(D, X, tau))
        top = int(math.ceil(mc.n_up + 8.0 * math.sqrt(mc.n_up) + 4.0))
        for n in range(top + 1):
            rows.append([tau, float(n), "pmf",
                         math.exp(kernels.poisson_logpmf(n, mc.n_up)),
                         math.exp(kernels.poisson_logpmf(n, mc.n_down)),
                         _gauss(n, mc.n_up), _gauss(n, mc.n_down)])
        for x in np.arange(0.0, top + cont_step / 2, cont_step):
            x = float(x)
            rows.append([tau, x, "cont", _cont_pmf(x, mc.n_up), _cont_pmf(x, mc.n_down),
                         _gauss(x, mc.n_up), _gauss(x, mc.n_down)])
        thr.append([tau, mc.n_up, mc.n_down, continuous_threshold(mc), threshold_count(mc)])
    cols = ["tau_m", "n", "kind", "p_up", "p_down", "gauss_up", "gauss_down"]
    tcols = ["tau_m", "n_up", "n_down", "n_th_cont", "n_th"]
    return {"fig4": Table(cols, rows), "fig4_thresholds": Table(tcols, thr)}


def _gauss(x, m):
    return math.exp(-((x - m) ** 2) / (2.0 * m)) / math.sqrt(2.0 * math.pi * m)


def _cont_pmf(x, m):
    return math.exp(x * math.log(m) - m - math.lgamma(x + 1.0))


def _fig5_row(args):
    delta, k, T = args
    k2 = k * k
    up = k * k2 * T / ((delta - 1.0) ** 2 + k2)
    down = k * k2 * T / ((delta + 1.0) ** 2 + k2)
    mc = MeanCounts(up, down)
    n = threshold_count(mc)
    return [delta, k, kernels.branch_fidelity(n, up, down), n]


def fig5_data(T_m=11.29, deltas=None, ks=None, jobs=1):
    """Fidelity over the (Delta, K) plane at fixed ``T_m``."""
    if deltas is None:
        deltas = np.linspace(0.9, 1.4, 200)
    if ks is None:
        ks = np.linspace(0.5, 1.3, 200)
    points = [(float(d), float(k), float(T_m)) for d in deltas for k in ks]
    rows = parallel_map(_fig5_row, points, jobs, chunksize=2000)
    return {"fig5": Table(["Delta", "K", "fidelity", "n_th"], rows)}


FIGURES = {"fig2": fig2_data, "fig3": fig3_data, "fig4": fig4_data, "fig5": fig5_data}
