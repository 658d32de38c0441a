"""Composite Gauss-Legendre quadrature over [a, b].

Integrands here are smooth away from stage-transition points, which the
callers handle by splitting the interval, so a modest fixed rule per panel
is enough.  A Richardson-style doubling check is available for callers
that want certified accuracy.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import QuadratureFailure

_NODES_PER_PANEL = 4
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_NODES_PER_PANEL)


def panel_nodes(a: float, b: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """All nodes and weights of the composite rule on [a, b]."""
    if b <= a:
        return np.empty(0), np.empty(0)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return x, w


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              panels: int = 256) -> float:
    """Integral of a vectorized integrand on [a, b]."""
    if b <= a:
        return 0.0
    x, w = panel_nodes(a, b, panels)
    return float(np.dot(w, np.asarray(f(x), dtype=float)))


def integrate_checked(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                      panels: int = 256, tol: float = 1e-8) -> float:
    """Integral with a doubled-panel agreement check."""
    coarse = integrate(f, a, b, panels)
    fine = integrate(f, a, b, 2 * panels)
    if abs(fine - coarse) > tol * max(1.0, abs(fine)):
        raise QuadratureFailure(
            f"quadrature not converged on [{a}, {b}]: {coarse} vs {fine}")
    return fine
