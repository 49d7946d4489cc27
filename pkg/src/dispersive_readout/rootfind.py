"""Bracketed scalar root finding.

Bisection safeguarded Illinois regula falsi. No derivatives are needed,
which matters where the target functions flatten out at large pull.
"""

import math

from .errors import NumericalFailure

__all__ = ["find_root", "MAX_ITER"]

MAX_ITER = 200


def find_root(f, lo, hi, *, xtol=1e-14, rtol=1e-13, ftol=0.0, max_iter=MAX_ITER):
    """Locate a sign change of ``f`` inside ``[lo, hi]``.

    Converges when the bracket is narrower than ``xtol + rtol * |x|`` and
    ``|f(x)| <= ftol``, or when the bracket can no longer be split in
    floating point. A zero ``ftol`` disables the residual test.

    Args:
        f: Continuous scalar function.
        lo: Left end of the bracket.
        hi: Right end of the bracket.
        xtol: Absolute width tolerance.
        rtol: Relative width tolerance.
        ftol: Residual tolerance.
        max_iter: Iteration cap.

    Returns:
        The root estimate.

    Raises:
        NumericalFailure: If the ends do not bracket a sign change or the
            iteration cap is hit. ``bracket`` holds the last interval.
    """
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if math.isnan(fa) or math.isnan(fb) or (fa > 0) == (fb > 0):
        raise NumericalFailure(
            f"no sign change on [{a!r}, {b!r}] (f = {fa!r}, {fb!r})", bracket=(a, b)
        )
    side = 0
    x, fx = a, fa
    for _ in range(max_iter):
        width = b - a
        tol = xtol + rtol * max(abs(a), abs(b))
        if width <= tol and (ftol == 0.0 or abs(fx) <= ftol):
            return x
        mid = a + 0.5 * width
        if mid <= a or mid >= b:
            return a if abs(fa) <= abs(fb) else b
        x = (a * fb - b * fa) / (fb - fa)
        # fall back to bisection when the secant point is useless
        if not (a < x < b) or width <= tol:
            x = mid
        fx = f(x)
        if fx == 0.0:
            return x
        if math.isnan(fx):
            raise NumericalFailure(f"function returned NaN at {x!r}", bracket=(a, b))
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
            if side == -1:
                fb *= 0.5
            side = -1
        else:
            b, fb = x, fx
            if side == 1:
                fa *= 0.5
            side = 1
        if (b - a) > 0.5 * width:
            # secant stalled: force a bisection step next
            m = a + 0.5 * (b - a)
            fm = f(m)
            if fm == 0.0:
                return m
            if (fm > 0) == (fa > 0):
                a, fa = m, fm
            else:
                b, fb = m, fm
            x, fx = m, fm
            side = 0
    raise NumericalFailure(f"no convergence after {max_iter} iterations", bracket=(a, b))
