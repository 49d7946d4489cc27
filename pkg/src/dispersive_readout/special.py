"""Special functions for the fidelity formulas.

Everything funnels into two kernels: the log of the Poisson CDF and the log
of its upper tail, both anchored at the mode and summed outward. The
regularized upper incomplete gamma at integer order is the Poisson CDF:

    Q(n, x) = Gamma(n, x) / (n - 1)! = P(xi <= n - 1),  xi ~ Poisson(x).
"""

import math
import operator

from ._backend import kernels
from .errors import DomainError

__all__ = [
    "erf",
    "log_regularized_gamma_q",
    "log_upper_incomplete_gamma_int",
    "poisson_logcdf",
    "poisson_logpmf",
    "poisson_logsf",
    "regularized_gamma_q",
    "upper_incomplete_gamma_int",
]


def _as_int(n, name, minimum):
    if isinstance(n, bool):
        raise DomainError(f"{name} must be an integer, got {n!r}")
    try:
        value = operator.index(n)
    except TypeError:
        if isinstance(n, float) and n.is_integer():
            value = int(n)
        else:
            raise DomainError(f"{name} must be an integer, got {n!r}") from None
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return value


def _as_nonneg(x, name):
    x = float(x)
    if not (x >= 0.0) or math.isinf(x):
        raise DomainError(f"{name} must be finite and >= 0, got {x!r}")
    return x


def log_regularized_gamma_q(n, x):
    """Natural log of Q(n, x) for integer n >= 1 and x >= 0."""
    n = _as_int(n, "n", 1)
    x = _as_nonneg(x, "x")
    return kernels.log_poisson_cdf(n, x)


def regularized_gamma_q(n, x):
    """Regularized upper incomplete gamma Q(n, x) = Gamma(n, x) / Gamma(n).

    Equal to the Poisson probability of at most ``n - 1`` events at mean
    ``x``. Nonincreasing in ``x`` and nondecreasing in ``n``.

    Args:
        n: Integer order, ``n >= 1``.
        x: Lower integration limit, ``x >= 0``.

    Returns:
        A float in ``[0, 1]``.

    Raises:
        DomainError: For ``n < 1``, negative ``x`` or non-integer ``n``.
    """
    return math.exp(log_regularized_gamma_q(n, x))


def log_upper_incomplete_gamma_int(n, x):
    """ln Gamma(n, x); stays finite where Gamma(n, x) itself overflows."""
    n = _as_int(n, "n", 1)
    x = _as_nonneg(x, "x")
    return math.lgamma(n) + kernels.log_poisson_cdf(n, x)


def upper_incomplete_gamma_int(n, x):
    """Upper incomplete gamma Gamma(n, x) at positive integer order.

    Uses Gamma(n, x) = (n - 1)! e^{-x} sum_{k<n} x^k / k!, evaluated through
    the log-space Poisson CDF. Returns ``inf`` once the value exceeds the
    double range (n above about 171); use
    :func:`log_upper_incomplete_gamma_int` there.
    """
    n = _as_int(n, "n", 1)
    x = _as_nonneg(x, "x")
    q = kernels.log_poisson_cdf(n, x)
    if n <= 171:
        return math.factorial(n - 1) * math.exp(q)
    try:
        return math.exp(math.lgamma(n) + q)
    except OverflowError:
        return math.inf


def erf(x):
    """Error function; odd, saturating to +-1 beyond |x| of about 6."""
    x = float(x)
    if math.isnan(x):
        raise DomainError("erf of NaN")
    return math.erf(x)


def poisson_logpmf(n, mean):
    """ln of the Poisson probability of ``n`` counts at ``mean`` (> 0)."""
    n = _as_int(n, "n", 0)
    mean = float(mean)
    if not (mean > 0.0) or math.isinf(mean):
        raise DomainError(f"mean must be finite and > 0, got {mean!r}")
    return kernels.poisson_logpmf(n, mean)


def poisson_logcdf(n, mean):
    """ln P(xi <= n) for xi ~ Poisson(mean)."""
    n = _as_int(n, "n", 0)
    return kernels.log_poisson_cdf(n + 1, _as_nonneg(mean, "mean"))


def poisson_logsf(n, mean):
    """ln P(xi >= n) for xi ~ Poisson(mean)."""
    n = _as_int(n, "n", 0)
    return kernels.log_poisson_sf(n, _as_nonneg(mean, "mean"))
