"""Scalar root bracketing/bisection and golden-section maximization.

Bisection is deliberately preferred over faster methods: every residual in
this package is cheap, while brackets are derivable analytically, so
robustness wins.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

from .errors import NoConvergence

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def bisect(f: Callable[[float], float], lo: float, hi: float,
           rel_tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise NoConvergence(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = None
        try:
            fmid = f(mid)
        except ValueError:
            # domain puncture inside the bracket (residual undefined where a
            # symplectic eigenvalue dips to the vacuum bound): probe
            # progressively closer to either endpoint
            for frac in (0.25, 0.75, 0.1, 0.9, 0.03, 0.97, 0.01, 0.99):
                mid = lo + frac * (hi - lo)
                try:
                    fmid = f(mid)
                    break
                except ValueError:
                    continue
            if fmid is None:
                raise NoConvergence(
                    f"residual undefined across [{lo}, {hi}]") from None
        if fmid == 0.0 or (hi - lo) <= rel_tol * max(abs(lo), abs(hi), 1.0):
            return mid
        if math.copysign(1.0, fmid) == math.copysign(1.0, flo):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return 0.5 * (lo + hi)


def expand_bracket_up(f: Callable[[float], float], lo: float, hi: float,
                      factor: float = 2.0, max_expansions: int = 60):
    """Grow the upper endpoint until f changes sign; returns (lo, hi).

    Endpoints where f raises ValueError (outside the residual's domain) are
    stepped over by advancing the lower endpoint.
    """
    flo = None
    for _ in range(max_expansions):
        if flo is None:
            try:
                flo = f(lo)
            except ValueError:
                lo, hi = hi, hi * factor
                continue
        try:
            fhi = f(hi)
        except ValueError:
            hi *= factor
            continue
        if math.copysign(1.0, flo) != math.copysign(1.0, fhi) or flo == 0.0 or fhi == 0.0:
            return lo, hi
        lo, flo = hi, fhi
        hi *= factor
    raise NoConvergence(f"bracket expansion exhausted at hi={hi}")


def sign_change_on_grid(f: Callable[[float], float],
                        grid: Sequence[float]) -> Optional[tuple[float, float]]:
    """First adjacent grid pair where f changes sign, skipping domain errors."""
    prev_x = None
    prev_f = None
    for x in grid:
        try:
            fx = f(x)
        except ValueError:
            prev_x, prev_f = None, None
            continue
        if prev_f is not None:
            if prev_f == 0.0:
                return prev_x, prev_x
            if math.copysign(1.0, prev_f) != math.copysign(1.0, fx):
                return prev_x, x
        prev_x, prev_f = x, fx
    return None


def golden_max(f: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-6, max_iter: int = 200) -> float:
    """Argmax of a unimodal function on [lo, hi] by golden-section search."""
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    return 0.5 * (a + b)
