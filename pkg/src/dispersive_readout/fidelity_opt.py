"""Fidelity-optimal detuning and damping.

For a fixed threshold ``n`` the fidelity ``F_n = Q(n, n_down) - Q(n, n_up)``
is smooth in the detuning, and its stationary points solve

    g_n(D) = ln(D + X) - ln(D - X) + (n_up - n_down) - (n + 1) ln(n_up / n_down) = 0,

with ``sign(g_n) = sign(dF_n/dD)``. The true fidelity is ``max_n F_n`` (the
crossing-point threshold is optimal for any pair of means), so its global
maximum is the best per-threshold maximum that is self-consistent, i.e.
whose own optimal threshold is ``n``. As the measurement time grows the
winning threshold steps up by one; the optimal detuning jumps there while
the fidelity stays continuous.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._backend import kernels
from .errors import DomainError, NumericalFailure
from .rootfind import find_root
from .statistics import log_ratio

__all__ = [
    "FidelityOptimum",
    "Jump",
    "maximality_check",
    "fidelity_at",
    "fidelity_detuning_bounds",
    "fidelity_joint_optimum",
    "fidelity_jump_times",
    "fidelity_optimal_detuning",
    "joint_curve_means",
]

SCAN_POINTS = 128
COARSE_STEP = 0.1


@dataclass(frozen=True)
class FidelityOptimum:
    """Result of a fidelity maximization.

    Detuning-only solves fill ``X``, ``tau_m`` and ``d_opt``; joint solves
    fill ``T_m``, ``delta_opt`` and ``k_opt``.

    Attributes:
        fidelity: Fidelity at the optimum.
        infidelity: ``1 - fidelity``, computed without cancellation.
        n_th: Threshold count at the optimum.
        n_th_cont: Continuous crossing point at the optimum.
        branch: ``interior-stationary`` or ``at-upper-bound``.
        maximality_verified: Whether the sufficient maximality test passed.
        bracket: Search interval for the detuning (or ``Delta``).
        jump_times: Threshold switch times, when computed.
    """

    fidelity: float
    infidelity: float
    n_th: int
    n_th_cont: float
    branch: str
    maximality_verified: bool
    bracket: tuple
    X: Optional[float] = None
    tau_m: Optional[float] = None
    d_opt: Optional[float] = None
    T_m: Optional[float] = None
    delta_opt: Optional[float] = None
    k_opt: Optional[float] = None
    asymmetric: bool = False
    jump_times: tuple = field(default=())

    def as_dict(self):
        out = {k: v for k, v in self.__dict__.items() if v is not None}
        out["jump_times"] = list(self.jump_times)
        return out


def fidelity_detuning_bounds(X):
    """Interval that contains every fidelity-optimal detuning at pull ``X``.

    The upper end ``sqrt(X^2 + 1)`` is where the SNR-type balance breaks
    down; the lower end is where the difference of the two Lorentzians peaks.

    Returns:
        ``(d_lo, d_hi)`` with ``X < d_lo < d_hi``.
    """
    X = float(X)
    if not (X > 0.0) or math.isinf(X):
        raise DomainError(f"X must be finite and > 0, got {X!r}")
    x2 = X * X
    d_hi = math.sqrt(x2 + 1.0)
    d_lo = math.sqrt((2.0 * math.sqrt(x2 * x2 + x2 + 1.0) + x2 - 1.0) / 3.0)
    return d_lo, d_hi


def _means(D, X, tau):
    return tau / ((D - X) ** 2 + 1.0), tau / ((D + X) ** 2 + 1.0)


def _cont(up, down):
    return (up - down) / log_ratio(up, down)


def _nth(up, down):
    return max(1, math.ceil(_cont(up, down)))


def fidelity_at(D, X, tau_m):
    """Fidelity at detuning ``D``, pull ``X`` and time ``tau_m``."""
    up, down = _means(D, X, tau_m)
    if up <= down:
        return 0.0
    return kernels.branch_fidelity(_nth(up, down), up, down)


def _log_inf(n, up, down):
    return kernels.log_infidelity(n, up, down)


def _parts_vec(p, m):
    lp, lm = p * p + 1.0, m * m + 1.0
    return np.log(p) - np.log(m), 1.0 / lm - 1.0 / lp, np.log(lp) - np.log(lm)


def _stationary_roots(gfun, grid, gvals, falling_only=True):
    """Sign changes of ``g`` on the grid, refined to roots.

    With ``falling_only`` only ``+ -> -`` crossings (maxima of ``F_n``) are kept.
    """
    roots = []
    for i in range(len(grid) - 1):
        lo_pos = gvals[i] > 0.0
        if (lo_pos and gvals[i + 1] <= 0.0) or (
            not falling_only and gvals[i] < 0.0 and gvals[i + 1] >= 0.0
        ):
            if gvals[i + 1] == 0.0:
                roots.append(float(grid[i + 1]))
                continue
            roots.append(find_root(gfun, grid[i], grid[i + 1], xtol=0.0, rtol=4e-16))
    return roots


# ---------------------------------------------------------------------------
# detuning at fixed pull


def _scan_grid(d_lo, d_hi):
    return np.linspace(d_lo, d_hi, SCAN_POINTS + 1)


def _branch_candidates(X, tau, n, grid, parts):
    """Stationary maxima of ``F_n`` inside the bracket."""
    a, w, r = parts
    gvals = a + tau * w - (n + 1) * r

    def g(D):
        up, down = _means(D, X, tau)
        return math.log(D + X) - math.log(D - X) + (up - down) - (n + 1) * math.log(up / down)

    return _stationary_roots(g, grid, gvals)


def maximality_check(X, d, tau_m, n_th):
    """Sufficient test that a stationary point of ``F_n`` is a maximum.

    The second-derivative inequality reduces to ``n_cont < n_th`` at the
    point. At the upper bound the sign-change rule applies instead and the
    check reports ``True``.
    """
    _, d_hi = fidelity_detuning_bounds(X)
    if d >= d_hi * (1.0 - 1e-12):
        return True
    up, down = _means(d, X, tau_m)
    if up <= down:
        return False
    return _cont(up, down) < n_th


def _branch_max(X, tau, n, d_lo, d_hi, grid, parts):
    """Unconstrained maximum of ``F_n`` over ``[d_lo, d_hi]``."""
    pts = _branch_candidates(X, tau, n, grid, parts)
    pts.extend((d_lo, d_hi))
    best = None
    for d in pts:
        up, down = _means(d, X, tau)
        key = (_log_inf(n, up, down), -d)
        if best is None or key < best[0]:
            best = (key, d)
    (li, _), d = best
    return li, d


def fidelity_optimal_detuning(X, tau_m):
    """Detuning that maximizes the fidelity at fixed pull and time.

    For every threshold met inside the bracket (plus one on either side)
    the stationary maxima of ``F_n`` are found by a scan followed by
    bracketed root solves. Roots whose own threshold differs from ``n`` are
    dropped and the upper bound joins as an extra candidate. The best
    fidelity wins; ties go to the smaller detuning.

    Args:
        X: Dimensionless pull, ``> 0``.
        tau_m: Dimensionless time, ``> 0``.

    Returns:
        FidelityOptimum with ``d_opt`` in ``(d_lo, d_hi]``.

    Raises:
        DomainError: For invalid arguments.
        NumericalFailure: If no candidate survives.
    """
    X = float(X)
    tau = float(tau_m)
    if not (tau > 0.0) or math.isinf(tau):
        raise DomainError(f"tau_m must be finite and > 0, got {tau!r}")
    d_lo, d_hi = fidelity_detuning_bounds(X)
    grid = _scan_grid(d_lo, d_hi)
    parts = _parts_vec(grid + X, grid - X)
    return _optimal_detuning(X, tau, d_lo, d_hi, grid, parts)


def _optimal_detuning(X, tau, d_lo, d_hi, grid, parts):
    up_g = tau / ((grid - X) ** 2 + 1.0)
    down_g = tau / ((grid + X) ** 2 + 1.0)
    cont = (up_g - down_g) / (parts[2])
    n_lo = max(1, int(math.ceil(cont.min())) - 1)
    n_hi = int(math.ceil(cont.max())) + 1

    cands = []  # (maximality ok, log infidelity, d, n, branch)
    for n in range(n_lo, n_hi + 1):
        for d in _branch_candidates(X, tau, n, grid, parts):
            up, down = _means(d, X, tau)
            if up <= down or _nth(up, down) != n:
                continue
            ok = maximality_check(X, d, tau, n)
            cands.append((ok, _log_inf(n, up, down), d, n, "interior-stationary"))
    up, down = _means(d_hi, X, tau)
    n_b = _nth(up, down)
    cands.append((True, _log_inf(n_b, up, down), d_hi, n_b, "at-upper-bound"))
    cands = [c for c in cands if not math.isnan(c[1])]
    if not cands:
        raise NumericalFailure(f"no admissible detuning at X={X!r}, tau={tau!r}", bracket=(d_lo, d_hi))
    # failed maximality demotes; then lowest infidelity, then smaller detuning
    ok, li, d, n, branch = min(cands, key=lambda c: (not c[0], c[1], c[2]))
    up, down = _means(d, X, tau)
    return FidelityOptimum(
        fidelity=-math.expm1(li),
        infidelity=math.exp(li),
        n_th=n,
        n_th_cont=_cont(up, down),
        branch=branch,
        maximality_verified=ok,
        bracket=(d_lo, d_hi),
        X=X,
        tau_m=tau,
        d_opt=d,
    )


@dataclass(frozen=True)
class Jump:
    """A switch of the optimal threshold at fixed pull.

    Attributes:
        time: Dimensionless time of the switch.
        n_th_before: Threshold just before.
        n_th_after: Threshold just after.
        d_before: Optimal detuning just before.
        d_after: Optimal detuning just after.
        kind: ``crossover`` when two interior branches exchange the lead,
            ``bound-reach`` when the outgoing branch is pinned near the upper
            bound and would lose consistency within one coarse step.
        fidelity_before: Fidelity of the outgoing branch at ``time``.
        fidelity_after: Fidelity of the incoming branch at ``time``.
        bound_time: Time at which the crossing point at the upper bound
            reaches ``n_th_before``.
    """

    time: float
    n_th_before: int
    n_th_after: int
    d_before: float
    d_after: float
    kind: str
    fidelity_before: float
    fidelity_after: float
    bound_time: float

    def as_dict(self):
        return dict(self.__dict__)


def fidelity_jump_times(X, tau_range, step=COARSE_STEP, rel_tol=1e-10):
    """Locate every switch of the optimal threshold inside ``tau_range``.

    A coarse scan with ``step`` flags intervals where the optimal threshold
    changes; each is then bisected on the sign of the fidelity difference
    between the outgoing and incoming branch maxima.

    Args:
        X: Dimensionless pull.
        tau_range: ``(lo, hi)`` with ``0 < lo``; ``lo == hi`` gives ``[]``.
        step: Coarse scan step.
        rel_tol: Relative accuracy of the located times.

    Returns:
        List of :class:`Jump`, ordered by time.
    """
    lo, hi = (float(t) for t in tau_range)
    if not lo > 0.0 or hi < lo:
        raise DomainError(f"need 0 < lo <= hi, got {tau_range!r}")
    if hi == lo:
        return []
    X = float(X)
    d_lo, d_hi = fidelity_detuning_bounds(X)
    grid = _scan_grid(d_lo, d_hi)
    parts = _parts_vec(grid + X, grid - X)
    up1, down1 = _means(d_hi, X, 1.0)
    cont_hi_unit = _cont(up1, down1)

    def opt(tau):
        return _optimal_detuning(X, tau, d_lo, d_hi, grid, parts)

    count = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
    taus = [min(hi, lo + i * step) for i in range(count + 1)]
    jumps = []
    prev_t, prev = taus[0], opt(taus[0])
    for t in taus[1:]:
        cur = opt(t)
        a_t, a_n = prev_t, prev.n_th
        while cur.n_th > a_n:
            jumps.append(_refine_jump(X, a_t, t, a_n, opt, d_lo, d_hi, grid, parts,
                                      cont_hi_unit, step, rel_tol))
            a_t, a_n = jumps[-1].time, jumps[-1].n_th_after
        prev_t, prev = t, cur
    return jumps


def _refine_jump(X, t_a, t_b, n_a, opt, d_lo, d_hi, grid, parts, cont_hi_unit, step, rel_tol):
    def diff(tau, n_b):
        la, _ = _branch_max(X, tau, n_a, d_lo, d_hi, grid, parts)
        lb, _ = _branch_max(X, tau, n_b, d_lo, d_hi, grid, parts)
        return lb - la  # > 0 while the outgoing branch still leads

    # normally the next threshold takes over; skip it only if it never leads
    n_b = n_a + 1
    if diff(t_b, n_b) > 0.0:
        n_b = opt(t_b).n_th
    a, b = t_a, t_b
    while b - a > rel_tol * b:
        m = 0.5 * (a + b)
        if diff(m, n_b) > 0.0:
            a = m
        else:
            b = m
    la, da = _branch_max(X, a, n_a, d_lo, d_hi, grid, parts)
    lb, db = _branch_max(X, b, n_b, d_lo, d_hi, grid, parts)
    bound_time = n_a / cont_hi_unit
    kind = "bound-reach" if bound_time - b < step else "crossover"
    return Jump(
        time=b,
        n_th_before=n_a,
        n_th_after=n_b,
        d_before=da,
        d_after=db,
        kind=kind,
        fidelity_before=-math.expm1(la),
        fidelity_after=-math.expm1(lb),
        bound_time=bound_time,
    )


# ---------------------------------------------------------------------------
# joint optimum over (Delta, K)

_C27 = math.sqrt(27.0) / 2.0


def joint_curve_means(Delta, T):
    """Mean counts on the stationary curve ``K^2 = 3 Delta^2 - 3``."""
    s = math.sqrt(Delta * Delta - 1.0)
    return (
        T * _C27 * (Delta + 1.0) * s / (2.0 * Delta + 1.0),
        T * _C27 * (Delta - 1.0) * s / (2.0 * Delta - 1.0),
    )


def _curve_grid(delta_max):
    s = np.geomspace(1e-6, delta_max - 1.0, 400)
    return 1.0 + s


def _curve_fidelity(Delta, T):
    up, down = joint_curve_means(Delta, T)
    if up <= down:
        return 0.0
    return kernels.branch_fidelity(_nth(up, down), up, down)


def fidelity_joint_optimum(T_m, asymmetric=False):
    """Maximize the fidelity over detuning and damping at fixed ``T_m``.

    Stationarity in both variables forces ``K^2 = 3 Delta^2 - 3``; along
    that curve the problem is one-dimensional in ``Delta``, and each
    threshold's stationary points are solved in log form. The best
    self-consistent point is returned.

    Args:
        T_m: Dimensionless time (``eta t_m g lambda |alpha|^2``).
        asymmetric: Treat all leakage as going to the detector port, which
            doubles the effective time.

    Raises:
        DomainError: For invalid ``T_m``.
        NumericalFailure: If no consistent stationary point exists.
    """
    T_m = float(T_m)
    if not (T_m > 0.0) or math.isinf(T_m):
        raise DomainError(f"T_m must be finite and > 0, got {T_m!r}")
    T = 2.0 * T_m if asymmetric else T_m

    delta_max = 3.0
    best_f = max(_curve_fidelity(d, T) for d in _curve_grid(delta_max))
    while delta_max < 1e3 and _curve_fidelity(delta_max, T) > 0.9 * best_f:
        delta_max *= 2.0
        best_f = max(best_f, _curve_fidelity(delta_max, T))

    grid = _curve_grid(delta_max)
    s = np.sqrt(grid * grid - 1.0)
    up_g = T * _C27 * (grid + 1.0) * s / (2.0 * grid + 1.0)
    down_g = T * _C27 * (grid - 1.0) * s / (2.0 * grid - 1.0)
    a = np.log(grid + 1.0) - np.log(grid - 1.0)
    w = up_g - down_g
    r = np.log(up_g) - np.log(down_g)
    cont = w / r
    nth_g = np.maximum(1, np.ceil(cont)).astype(np.int64)
    logs = np.array([_log_inf(int(n), u, dn) for n, u, dn in zip(nth_g, up_g, down_g)])
    n_star = int(nth_g[int(np.argmin(logs))])

    cands = []
    for n in range(max(1, n_star - 3), n_star + 4):
        gvals = a + w - (n + 1) * r

        def g(D, n=n):
            up, down = joint_curve_means(D, T)
            return math.log(D + 1.0) - math.log(D - 1.0) + (up - down) - (n + 1) * math.log(up / down)

        for d in _stationary_roots(g, grid, gvals, falling_only=False):
            up, down = joint_curve_means(d, T)
            if _nth(up, down) != n:
                continue
            cands.append((_cont(up, down) < n, _log_inf(n, up, down), d, n))
    if not cands:
        raise NumericalFailure(f"no consistent joint optimum at T_m={T_m!r}", bracket=(1.0, delta_max))
    ok, li, d, n = min(cands, key=lambda c: (not c[0], c[1], c[2]))
    up, down = joint_curve_means(d, T)
    return FidelityOptimum(
        fidelity=-math.expm1(li),
        infidelity=math.exp(li),
        n_th=n,
        n_th_cont=_cont(up, down),
        branch="interior-stationary",
        maximality_verified=ok,
        bracket=(1.0, delta_max),
        T_m=T_m,
        delta_opt=d,
        k_opt=math.sqrt(3.0 * d * d - 3.0),
        asymmetric=bool(asymmetric),
    )
