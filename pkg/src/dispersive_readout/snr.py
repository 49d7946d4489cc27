"""SNR-optimal operating points.

At fixed pull ``X`` the SNR-optimal detuning is the root of

    (D + X) / ((D + X)^2 + 1)^{3/2} = (D - X) / ((D - X)^2 + 1)^{3/2},

which always lies in ``(X, sqrt(X^2 + 1))``. Over both detuning and damping
the SNR peaks at ``Delta = sqrt(5)/2``, ``K = sqrt(3)/2``.
"""

import math
from dataclasses import dataclass

from .errors import DomainError, NumericalFailure
from .rootfind import find_root

__all__ = [
    "SnrOptimum",
    "large_x_validity",
    "snr1",
    "snr_global_optimum",
    "snr_optimal_detuning",
    "snr_detuning_large_x_approx",
    "stationarity_residuals",
]

SMALL_X = 1e-7
LARGE_X = 1e6


def snr1(D, X):
    """SNR at unit dimensionless time, as a function of detuning and pull."""
    return 1.0 / math.sqrt((D - X) ** 2 + 1.0) - 1.0 / math.sqrt((D + X) ** 2 + 1.0)


def _slope(D, X):
    # dSNR1/dD; positive left of the optimum
    p, m = D + X, D - X
    return p / (p * p + 1.0) ** 1.5 - m / (m * m + 1.0) ** 1.5


@dataclass(frozen=True)
class SnrOptimum:
    """SNR-optimal detuning at fixed pull.

    Attributes:
        X: Pull the optimum was computed for.
        d_opt: Optimal dimensionless detuning.
        snr1: SNR at ``tau_m = 1``; scales as ``sqrt(tau_m)``.
        bracket: Interval that contains the root.
        method: ``root-found``, ``asymptotic-large-X`` or ``asymptotic-small-X``.
    """

    X: float
    d_opt: float
    snr1: float
    bracket: tuple
    method: str


def snr_detuning_large_x_approx(X, variant="xi"):
    """Large-pull approximation of the SNR-optimal detuning.

    ``variant="xi"`` linearizes the optimality equation in ``xi = D - X``;
    ``variant="simple"`` keeps only the leading term ``2X/(4X^2+1)^{3/2}``.
    """
    X = float(X)
    if not X > 0.0:
        raise DomainError(f"X must be > 0, got {X!r}")
    q = 4.0 * X * X + 1.0
    if variant == "xi":
        # q^{5/2} - 1 without cancellation at small X
        return X + 2.0 * X * q / (8.0 * X * X + math.expm1(2.5 * math.log1p(4.0 * X * X)))
    if variant == "simple":
        return X + 2.0 * X * q**-1.5
    raise DomainError(f"unknown variant {variant!r}")


def large_x_validity(X):
    """Ratios behind the two smallness conditions of the large-X expansion.

    Returns ``(xi^2 / ([X + 1/(4X)]^2 / 16), xi^2)``; both should be small.
    """
    xi = snr_detuning_large_x_approx(X) - X
    return xi * xi / ((X + 0.25 / X) ** 2 / 16.0), xi * xi


def snr_optimal_detuning(X, rel_tol=1e-12):
    """Detuning maximizing the SNR at fixed pull.

    Args:
        X: Dimensionless pull, ``X > 0``.
        rel_tol: Relative tolerance in ``(0, 1e-6]``.

    Returns:
        SnrOptimum. Below ``X = 1e-7`` and above roughly ``X = 1e3`` the
        root is not resolvable in double precision and the asymptotic limits
        are used instead.

    Raises:
        DomainError: For invalid arguments.
        NumericalFailure: If the root finder fails or the root is not a maximum.
    """
    X = float(X)
    if not (X > 0.0) or math.isinf(X):
        raise DomainError(f"X must be finite and > 0, got {X!r}")
    if not (0.0 < rel_tol <= 1e-6):
        raise DomainError(f"rel_tol must be in (0, 1e-6], got {rel_tol!r}")
    upper = math.sqrt(X * X + 1.0)
    if X < SMALL_X:
        d = 1.0 / math.sqrt(2.0)
        return SnrOptimum(X, d, snr1(d, X), (X, upper), "asymptotic-small-X")
    eps = 1e-12 * (1.0 + X)
    lo, hi = X + eps, upper - eps
    # the opened bracket must leave room for the offset D - X ~ 1/(4X^2)
    if X > LARGE_X or snr_detuning_large_x_approx(X) - X < 100.0 * eps:
        d = snr_detuning_large_x_approx(X)
        return SnrOptimum(X, d, snr1(d, X), (X, upper), "asymptotic-large-X")

    scale = (2.0 * X) / (4.0 * X * X + 1.0) ** 1.5
    d = find_root(lambda t: _slope(t, X), lo, hi, xtol=0.0, rtol=rel_tol, ftol=rel_tol * scale)

    h = 1e-3 * (hi - lo)
    s0 = snr1(d, X)
    if not (snr1(d - h, X) < s0 and snr1(d + h, X) < s0):
        raise NumericalFailure(f"stationary point at D={d!r} is not a maximum", bracket=(lo, hi))
    return SnrOptimum(X, d, s0, (lo, hi), "root-found")


def stationarity_residuals(Delta, K):
    """Residuals of the two stationarity conditions of SNR over (Delta, K).

    Both vanish at the joint optimum.
    """
    k2 = K * K
    p = (Delta + 1.0) ** 2 + k2
    m = (Delta - 1.0) ** 2 + k2
    r_delta = (Delta + 1.0) / p**1.5 - (Delta - 1.0) / m**1.5
    r_k = (3.0 * (Delta + 1.0) ** 2 + k2) / p**1.5 - (3.0 * (Delta - 1.0) ** 2 + k2) / m**1.5
    return r_delta, r_k


def snr_global_optimum(asymmetric=False):
    """Joint SNR optimum over detuning and damping.

    Returns:
        ``(Delta, K, c)`` where ``c`` is the SNR per ``sqrt(T_m)``. An
        asymmetric cavity (all leakage through the detector port) doubles
        the effective time and multiplies ``c`` by ``sqrt(2)``.

    Raises:
        NumericalFailure: If the closed form fails its runtime check.
    """
    delta = math.sqrt(5.0) / 2.0
    k = math.sqrt(3.0) / 2.0
    r_delta, r_k = stationarity_residuals(delta, k)
    r_curve = k * k - (3.0 * delta * delta - 3.0)
    if max(abs(r_delta), abs(r_k), abs(r_curve)) > 1e-10:
        raise NumericalFailure(f"joint SNR optimum fails stationarity ({r_delta}, {r_k}, {r_curve})")
    c = k**1.5 * (
        1.0 / math.sqrt((delta - 1.0) ** 2 + k * k) - 1.0 / math.sqrt((delta + 1.0) ** 2 + k * k)
    )
    if asymmetric:
        c *= math.sqrt(2.0)
    return delta, k, c
