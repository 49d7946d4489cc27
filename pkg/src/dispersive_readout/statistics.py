"""Photocount statistics of a dispersive measurement.

The counts for each qubit eigenstate are Poissonian, so the pair of means
(n_up, n_down) fixes every figure of merit: SNR, threshold count, exact
fidelity, click/no-click fidelity and the Gaussian approximation.

Two dimensionless parametrizations are supported:

* ``DimensionlessDX``: detuning ``D`` and pull ``X`` in units of the cavity
  half-width, time ``tau_m``.
* ``DimensionlessDeltaK``: detuning ``Delta`` and half-width ``K`` in units
  of the pull, time ``T_m``.

They are related by ``D = Delta / K``, ``X = 1 / K``, ``tau_m = T_m * K``.
"""

import math
from dataclasses import dataclass
from typing import Optional

from ._backend import kernels
from .errors import DegenerateStatisticsError, DomainError

__all__ = [
    "DimensionlessDX",
    "DimensionlessDeltaK",
    "MeanCounts",
    "PointStats",
    "continuous_threshold",
    "evaluate_point",
    "fidelity",
    "fidelity_for_threshold",
    "fidelity_gaussian",
    "fidelity_gaussian_snr",
    "fidelity_on_off",
    "infidelity",
    "log_ratio",
    "mean_counts_deltak",
    "mean_counts_dx",
    "mean_counts_signed",
    "snr",
    "threshold_count",
]


def _check_finite(name, value, positive=False):
    value = float(value)
    bad = not math.isfinite(value) or value < 0.0 or (positive and value == 0.0)
    if bad:
        cond = "> 0" if positive else ">= 0"
        raise DomainError(f"{name} must be finite and {cond}, got {value!r}")
    return value


@dataclass(frozen=True)
class DimensionlessDX:
    """Detuning and pull in units of the cavity half-width, plus the time.

    ``D = 0`` or ``X = 0`` are accepted as the degenerate boundary of the
    canonical sector; the resulting statistics carry no information.
    """

    D: float
    X: float
    tau_m: float

    def __post_init__(self):
        for name in ("D", "X", "tau_m"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))

    @property
    def degenerate(self):
        return self.D == 0.0 or self.X == 0.0 or self.tau_m == 0.0

    def to_deltak(self):
        if self.X == 0.0:
            raise DomainError("zero pull has no (Delta, K) representation")
        return DimensionlessDeltaK(self.D / self.X, 1.0 / self.X, self.tau_m * self.X)


@dataclass(frozen=True)
class DimensionlessDeltaK:
    """Detuning and half-width in units of the pull, plus time ``T_m``."""

    Delta: float
    K: float
    T_m: float

    def __post_init__(self):
        object.__setattr__(self, "Delta", _check_finite("Delta", self.Delta))
        object.__setattr__(self, "K", _check_finite("K", self.K, positive=True))
        object.__setattr__(self, "T_m", _check_finite("T_m", self.T_m))

    @property
    def degenerate(self):
        return self.Delta == 0.0 or self.T_m == 0.0

    def to_dx(self):
        return DimensionlessDX(self.Delta / self.K, 1.0 / self.K, self.T_m * self.K)


@dataclass(frozen=True)
class MeanCounts:
    """Poisson means for the excited (``n_up``) and ground (``n_down``) state."""

    n_up: float
    n_down: float

    def __post_init__(self):
        up = _check_finite("n_up", self.n_up)
        down = _check_finite("n_down", self.n_down)
        if up < down:
            raise DomainError(
                f"n_up must be >= n_down in the canonical sector, got ({up!r}, {down!r})"
            )
        object.__setattr__(self, "n_up", up)
        object.__setattr__(self, "n_down", down)

    @property
    def is_degenerate(self):
        return self.n_up == self.n_down

    def scaled(self, factor):
        return MeanCounts(self.n_up * factor, self.n_down * factor)


def mean_counts_signed(D, X, tau_m):
    """Means (state up, state down) for signed detuning and pull.

    No canonical ordering is imposed, so this is the form used to check the
    reflection symmetry of the statistics.
    """
    return tau_m / ((D - X) ** 2 + 1.0), tau_m / ((D + X) ** 2 + 1.0)


def mean_counts_dx(p: DimensionlessDX) -> MeanCounts:
    """Mean counts tau/((D -+ X)^2 + 1) for the two qubit states."""
    up, down = mean_counts_signed(p.D, p.X, p.tau_m)
    if p.D == 0.0 or p.X == 0.0:
        down = up  # exact equality; avoids a rounding-level ordering flip
    return MeanCounts(up, down)


def mean_counts_deltak(p: DimensionlessDeltaK) -> MeanCounts:
    """Mean counts K^3 T/((Delta -+ 1)^2 + K^2) for the two qubit states."""
    k2 = p.K * p.K
    scale = p.K * k2 * p.T_m
    up = scale / ((p.Delta - 1.0) ** 2 + k2)
    down = scale / ((p.Delta + 1.0) ** 2 + k2)
    if p.Delta == 0.0:
        down = up
    return MeanCounts(up, down)


def snr(mc: MeanCounts) -> float:
    """Signal-to-noise ratio sqrt(n_up) - sqrt(n_down)."""
    return math.sqrt(mc.n_up) - math.sqrt(mc.n_down)


def log_ratio(a, b):
    """ln(a / b) for a >= b > 0, accurate when the means nearly coincide."""
    if a < 2.0 * b:
        return math.log1p((a - b) / b)
    return math.log(a) - math.log(b)  # no overflow for subnormal b


def continuous_threshold(mc: MeanCounts) -> float:
    """Count at which the two Poisson laws cross: (a - b) / ln(a / b).

    Raises:
        DegenerateStatisticsError: If the means coincide.
    """
    a, b = mc.n_up, mc.n_down
    if a == b:
        raise DegenerateStatisticsError("identical mean counts: states indistinguishable")
    if b == 0.0:
        return 0.0
    return (a - b) / log_ratio(a, b)


def threshold_count(mc: MeanCounts) -> int:
    """Smallest count declared 'up': the ceiling of the crossing point.

    Returns 1 when ``n_down`` is zero.

    Raises:
        DegenerateStatisticsError: If the means coincide.
    """
    cont = continuous_threshold(mc)
    return max(1, math.ceil(cont))


def fidelity_for_threshold(mc: MeanCounts, n_th: int) -> float:
    """Fidelity Q(n_th, n_down) - Q(n_th, n_up) for an arbitrary threshold.

    ``n_th = 0`` declares every outcome 'up' and gives 0.
    """
    if n_th <= 0:
        return 0.0
    return kernels.branch_fidelity(int(n_th), mc.n_up, mc.n_down)


def infidelity(mc: MeanCounts, n_th: Optional[int] = None) -> float:
    """Total error probability 1 - F, accurate even when it is tiny."""
    if n_th is None:
        if mc.is_degenerate:
            return 1.0
        n_th = threshold_count(mc)
    return math.exp(kernels.log_infidelity(int(n_th), mc.n_up, mc.n_down))


def fidelity(mc: MeanCounts) -> float:
    """Measurement fidelity with the optimal integer threshold.

    Equals ``[Gamma(n, n_down) - Gamma(n, n_up)] / Gamma(n)`` with
    ``n = threshold_count(mc)``. Degenerate means give 0; use
    :func:`evaluate_point` to see the status flag.
    """
    if mc.is_degenerate:
        return 0.0
    return kernels.branch_fidelity(threshold_count(mc), mc.n_up, mc.n_down)


def fidelity_on_off(mc: MeanCounts) -> float:
    """Fidelity of a click/no-click detector: e^{-n_down} - e^{-n_up}."""
    return math.expm1(-mc.n_down) - math.expm1(-mc.n_up)


def _gaussian_limits(mc):
    a, b = mc.n_up, mc.n_down
    if b <= 0.0:
        raise DomainError("Gaussian approximation needs n_down > 0")
    n_g = math.sqrt(a * b * (1.0 + log_ratio(a, b) / (a - b)))
    return (n_g - b) / math.sqrt(2.0 * b), (n_g - a) / math.sqrt(2.0 * a)


def fidelity_gaussian(mc: MeanCounts) -> float:
    """Gaussian approximation 1/2 erf(x_down) - 1/2 erf(x_up).

    Uses the full Gaussian threshold, including the logarithmic correction.
    Degenerate means give 0.
    """
    if mc.is_degenerate:
        return 0.0
    x_down, x_up = _gaussian_limits(mc)
    return 0.5 * math.erf(x_down) - 0.5 * math.erf(x_up)


def fidelity_gaussian_snr(mc: MeanCounts) -> float:
    """SNR shortcut of the Gaussian approximation, erf(SNR / sqrt 2)."""
    return math.erf(snr(mc) / math.sqrt(2.0))


@dataclass(frozen=True)
class PointStats:
    """All figures of merit at one operating point.

    ``status`` is ``"ok"`` or ``"degenerate"``; degenerate points have
    ``n_th = None`` and zero fidelities.
    """

    n_up: float
    n_down: float
    snr: float
    n_th: Optional[int]
    n_th_cont: Optional[float]
    fidelity: float
    fidelity_on_off: float
    fidelity_gaussian: Optional[float]
    fidelity_gaussian_snr: Optional[float]
    status: str

    def as_dict(self):
        return dict(self.__dict__)


def evaluate_point(mc: MeanCounts) -> PointStats:
    """Evaluate every statistic, flagging degenerate inputs instead of raising."""
    if mc.is_degenerate:
        return PointStats(mc.n_up, mc.n_down, 0.0, None, None, 0.0, 0.0, 0.0, 0.0, "degenerate")
    gauss = gauss_snr = None
    if mc.n_down > 0.0:
        gauss = fidelity_gaussian(mc)
        gauss_snr = fidelity_gaussian_snr(mc)
    return PointStats(
        n_up=mc.n_up,
        n_down=mc.n_down,
        snr=snr(mc),
        n_th=threshold_count(mc),
        n_th_cont=continuous_threshold(mc),
        fidelity=fidelity(mc),
        fidelity_on_off=fidelity_on_off(mc),
        fidelity_gaussian=gauss,
        fidelity_gaussian_snr=gauss_snr,
        status="ok",
    )
