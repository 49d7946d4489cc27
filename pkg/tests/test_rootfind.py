import math

import pytest

from dispersive_readout.errors import NumericalFailure
from dispersive_readout.rootfind import find_root


def test_simple_roots():
    assert find_root(lambda x: x * x - 2.0, 0.0, 2.0) == pytest.approx(math.sqrt(2.0), rel=1e-13)
    assert find_root(math.cos, 1.0, 2.0) == pytest.approx(math.pi / 2, rel=1e-13)
    assert find_root(lambda x: x - 1e-3, 0.0, 1.0) == pytest.approx(1e-3, rel=1e-12)


def test_endpoint_root():
    assert find_root(lambda x: x, 0.0, 1.0) == 0.0


def test_flat_function_converges():
    # regula falsi stalls on this without the bisection safeguard
    r = find_root(lambda x: math.tanh(50 * (x - 0.3)) ** 3, -5.0, 10.0)
    assert r == pytest.approx(0.3, abs=1e-10)


def test_residual_tolerance_honoured():
    f = lambda x: math.expm1(x) - 0.5  # noqa: E731
    r = find_root(f, 0.0, 1.0, xtol=0.0, rtol=1e-15, ftol=1e-15)
    assert abs(f(r)) <= 1e-15


def test_no_sign_change_reports_bracket():
    with pytest.raises(NumericalFailure) as info:
        find_root(lambda x: x * x + 1.0, -1.0, 2.0)
    assert info.value.bracket == (-1.0, 2.0)


def test_nan_is_failure():
    with pytest.raises(NumericalFailure):
        find_root(lambda x: math.nan, 0.0, 1.0)


def test_iteration_cap():
    with pytest.raises(NumericalFailure) as info:
        find_root(lambda x: x**5 - 0.123456789, 0.0, 1.0, xtol=0.0, rtol=0.0, ftol=1e-300, max_iter=3)
    lo, hi = info.value.bracket
    assert lo <= 0.123456789 ** 0.2 <= hi
