"""Root finding and quadrature utilities."""

import math

import numpy as np
import pytest

from gausscap.errors import NoConvergence, QuadratureFailure
from gausscap.quadrature import integrate, integrate_checked
from gausscap.rootfind import (bisect, expand_bracket_up, golden_max,
                               sign_change_on_grid)


def test_bisect_cosine():
    root = bisect(math.cos, 1.0, 2.0, rel_tol=1e-14)
    assert root == pytest.approx(math.pi / 2.0, abs=1e-12)


def test_bisect_requires_sign_change():
    with pytest.raises(NoConvergence):
        bisect(lambda x: x * x + 1.0, -1.0, 1.0)


def test_bisect_survives_domain_puncture():
    # undefined on a thin interior strip; the root sits to its right
    def f(x):
        if 0.4 < x < 0.45:
            raise ValueError("hole")
        return x - 0.7

    assert bisect(f, 0.0, 1.0) == pytest.approx(0.7, abs=1e-9)


def test_bisect_fully_undefined_interior():
    def f(x):
        if x in (0.0, 1.0):
            return -1.0 if x == 0.0 else 1.0
        raise ValueError("no interior")

    with pytest.raises(NoConvergence):
        bisect(f, 0.0, 1.0)


def test_expand_bracket_up():
    lo, hi = expand_bracket_up(lambda x: x - 40.0, 1.0, 2.0)
    assert lo < 40.0 < hi


def test_expand_bracket_skips_domain_errors():
    def f(x):
        if x < 3.0:
            raise ValueError("below domain")
        return x - 10.0

    lo, hi = expand_bracket_up(f, 1.0, 2.0)
    assert f(lo) * f(hi) <= 0.0


def test_sign_change_on_grid():
    grid = np.linspace(0.0, 2.0, 21)
    pair = sign_change_on_grid(lambda x: x - 0.55, grid)
    assert pair is not None
    assert pair[0] <= 0.55 <= pair[1]
    assert sign_change_on_grid(lambda x: x + 1.0, grid) is None


def test_golden_max_parabola():
    xm = golden_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0, tol=1e-9)
    assert xm == pytest.approx(0.3, abs=1e-7)


def test_integrate_polynomial_exact():
    # degree 7 is exact for 4-node Gauss-Legendre on each panel
    val = integrate(lambda x: x ** 7, 0.0, 1.0, panels=2)
    assert val == pytest.approx(1.0 / 8.0, rel=1e-14)


def test_integrate_empty_interval():
    assert integrate(lambda x: x, 1.0, 1.0) == 0.0


def test_integrate_checked_flags_rough_integrand():
    with pytest.raises(QuadratureFailure):
        integrate_checked(lambda x: np.abs(x - 0.123456) ** 0.1,
                          0.0, 1.0, panels=1, tol=1e-12)
    val = integrate_checked(np.sin, 0.0, math.pi, panels=16)
    assert val == pytest.approx(2.0, rel=1e-10)
