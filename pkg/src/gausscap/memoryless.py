"""One-channel-use solver for the squeezed-thermal memoryless environment.

The environment has e_q = (N_env+1/2)e^s, e_p = (N_env+1/2)e^{-s}.  For
N >> s the closed third-stage form applies; otherwise the single mode
drops to the second stage and one transcendental equation remains.  Also
provides the optimal environment squeezing s*, the critical transmissivity
separating finite from infinite s*, and the optimal input squeezing curve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .entropy import ApproxOrder, g_entropy, g_photons, nu_g_derivative
from .errors import NoConvergence
from .rootfind import bisect, golden_max, sign_change_on_grid

_LN2 = math.log(2.0)


@dataclass
class OneUseSolution:
    capacity: float
    stage: str  # 'first' | 'second' | 'third'
    i_q: float
    i_p: float
    c_q: float
    c_p: float
    r_opt: float


def _env_eigs(n_env: float, s: float) -> tuple[float, float]:
    base = n_env + 0.5
    return base * math.exp(s), base * math.exp(-s)


def third_stage_capacity(eta: float, big_n: float, n_env: float,
                         m_env: float) -> float:
    """Closed-form third-stage bound g[eta N + (1-eta) M_env] - g[(1-eta) N_env].

    Shared by the memoryless solver (M_env from cosh s) and the asymptotic
    memory solver (M_env from I0(2s)).
    """
    return g_photons(eta * big_n + (1.0 - eta) * m_env) \
        - g_photons((1.0 - eta) * n_env)


def one_use_residual(i_u: float, eta: float, big_n: float, e_u: float,
                     e_us: float, order: ApproxOrder = ApproxOrder.EXACT) -> float:
    """Second-stage stationarity residual for one use, energy folded in.

    c_u = 0, i_ustar = 1/(4 i_u), c_ustar = 2N+1 - i_u - 1/(4 i_u).
    """
    i_us = 0.25 / i_u
    o_u = eta * i_u + (1.0 - eta) * e_u
    o_us = eta * i_us + (1.0 - eta) * e_us
    a_us = eta * (2.0 * big_n + 1.0 - i_u) + (1.0 - eta) * e_us
    nu2 = o_u * o_us
    nubar2 = o_u * a_us
    if nu2 <= 0.25 or nubar2 <= 0.25:
        raise ValueError("symplectic eigenvalue at or below the vacuum bound")
    nu = math.sqrt(nu2)
    nubar = math.sqrt(nubar2)
    lhs = (1.0 / o_u - 1.0 / a_us) * nu_g_derivative(nubar, order)
    rhs = (1.0 / o_u - i_us / (i_u * o_us)) * nu_g_derivative(nu, order)
    return lhs - rhs


def second_stage_zeroth(eta: float, big_n: float, e_ustar: float) -> float:
    """Closed-form zeroth-order root of the one-use second-stage equation."""
    phi = eta / ((1.0 - eta) * e_ustar)
    return 0.5 * (math.sqrt(1.0 + (2.0 * big_n + 1.0) * phi + 0.25 * phi * phi)
                  - 0.5 * phi)


def second_stage_first_order(eta: float, big_n: float, n_env: float, s: float) -> float:
    """First-order root i0 + eps, all eigenvalues inside taken at zeroth order."""
    s_abs = abs(s)
    e_u, e_us = _env_eigs(n_env, s_abs)
    i0 = second_stage_zeroth(eta, big_n, e_us)
    i_us = 0.25 / i0
    c_us = 2.0 * big_n + 1.0 - i0 - i_us
    o_u = eta * i0 + (1.0 - eta) * e_u
    a_us = eta * (i_us + c_us) + (1.0 - eta) * e_us
    o_us = eta * i_us + (1.0 - eta) * e_us
    nu2 = o_u * o_us
    num = eta * a_us * o_u * i0 * c_us * (a_us - o_u)
    den = 2.0 * (eta * eta * (o_u * o_u + a_us * a_us - a_us * o_u) * i0 * c_us
                 - a_us * a_us * o_u * o_u * (12.0 * nu2 + 1.0))
    if den == 0.0:
        return i0
    return i0 + num / den


def solve_one_use(eta: float, big_n: float, n_env: float, s: float,
                  order: ApproxOrder = ApproxOrder.EXACT) -> OneUseSolution:
    """Capacity lower bound and optimal spectra for a single channel use."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmissivity must lie in [0,1], got {eta}")
    if big_n < 0.0 or n_env < 0.0:
        raise ValueError("photon numbers must be non-negative")
    if big_n == 0.0:
        return OneUseSolution(0.0, "first", 0.5, 0.5, 0.0, 0.0, 0.0)
    if eta == 0.0:
        return OneUseSolution(0.0, "first", 0.5, 0.5, big_n, big_n, 0.0)
    if eta == 1.0:
        return OneUseSolution(g_photons(big_n), "third", 0.5, 0.5, big_n, big_n, 0.0)

    # s >= 0 internally; negative s swaps quadratures at the end
    flip = s < 0.0
    s_abs = abs(s)
    e_q, e_p = _env_eigs(n_env, s_abs)
    m_env = (n_env + 0.5) * math.cosh(s_abs) - 0.5

    # third stage first
    i_q = 0.5 * math.exp(s_abs)
    i_p = 0.5 * math.exp(-s_abs)
    tr_mean = (n_env + 0.5) * math.cosh(s_abs)
    c_q = big_n + 0.5 - i_q + (1.0 - eta) / eta * (tr_mean - e_q)
    c_p = big_n + 0.5 - i_p + (1.0 - eta) / eta * (tr_mean - e_p)
    if c_q >= 0.0 and c_p >= 0.0:
        cap = third_stage_capacity(eta, big_n, n_env, m_env)
        sol = OneUseSolution(cap, "third", i_q, i_p, c_q, c_p, s_abs)
        return _flip(sol) if flip else sol

    # second stage; for s>0 only c_q can be negative (e_q >= e_p)
    if c_p < 0.0:
        raise NoConvergence(
            f"unexpected sign pattern c_q={c_q}, c_p={c_p} at one use")
    i_u = _solve_one_use_second(eta, big_n, e_q, e_p, order)
    i_us = 0.25 / i_u
    c_us = 2.0 * big_n + 1.0 - i_u - i_us
    o_u = eta * i_u + (1.0 - eta) * e_q
    o_us = eta * i_us + (1.0 - eta) * e_p
    a_us = o_us + eta * c_us
    nu = math.sqrt(o_u * o_us)
    nubar = math.sqrt(o_u * a_us)
    cap = g_entropy(nubar) - g_entropy(nu)
    r_opt = math.log(2.0 * i_u)
    sol = OneUseSolution(cap, "second", i_u, i_us, 0.0, c_us, r_opt)
    return _flip(sol) if flip else sol


def _flip(sol: OneUseSolution) -> OneUseSolution:
    return OneUseSolution(sol.capacity, sol.stage, sol.i_p, sol.i_q,
                          sol.c_p, sol.c_q, -sol.r_opt)


def _solve_one_use_second(eta, big_n, e_u, e_us, order) -> float:
    """Root of the one-use second-stage equation on its admissible interval.

    c_ustar > 0 restricts i_u to (N+1/2-sqrt(N^2+N), N+1/2+sqrt(N^2+N)).
    """
    if order is ApproxOrder.ZEROTH:
        return second_stage_zeroth(eta, big_n, e_us)
    if order is ApproxOrder.FIRST:
        i0 = second_stage_zeroth(eta, big_n, e_us)
        i_us = 0.25 / i0
        c_us = 2.0 * big_n + 1.0 - i0 - i_us
        o_u = eta * i0 + (1.0 - eta) * e_u
        o_us = eta * i_us + (1.0 - eta) * e_us
        a_us = eta * (i_us + c_us) + (1.0 - eta) * e_us
        nu2 = o_u * o_us
        num = eta * a_us * o_u * i0 * c_us * (a_us - o_u)
        den = 2.0 * (eta * eta * (o_u * o_u + a_us * a_us - a_us * o_u) * i0 * c_us
                     - a_us * a_us * o_u * o_u * (12.0 * nu2 + 1.0))
        return i0 if den == 0.0 else i0 + num / den

    half_w = math.sqrt(big_n * big_n + big_n)
    lo = big_n + 0.5 - half_w
    hi = big_n + 0.5 + half_w

    def f(i):
        return one_use_residual(i, eta, big_n, e_u, e_us, order)

    pad = 1e-12 * max(1.0, hi)
    grid = np.linspace(lo + pad, hi - pad, 256)
    found = sign_change_on_grid(f, grid)
    if found is None:
        raise NoConvergence(
            f"no second-stage root in ({lo}, {hi}) for eta={eta}, N={big_n}")
    a, b = found
    if a == b:
        return a
    return bisect(f, a, b, rel_tol=1e-12, max_iter=200)


def optimal_env_squeezing(eta: float, big_n: float, n_env: float,
                          s_max: float = 30.0,
                          order: ApproxOrder = ApproxOrder.EXACT) -> Optional[float]:
    """Environment squeezing maximizing the one-use bound, or None if the
    maximum sits at the search cap (interpreted as s* = infinity).

    Two-phase search: a 64-point coarse grid guards against missed local
    maxima (unimodality is observed, not proven), then golden-section.
    """
    if s_max <= 0.0:
        raise ValueError("s_max must be positive")

    def cap(s):
        return solve_one_use(eta, big_n, n_env, s, order).capacity

    grid = np.linspace(0.0, s_max, 64)
    vals = np.array([cap(s) for s in grid])
    k = int(np.argmax(vals))
    interior = vals[1:-1]
    peaks = int(np.sum((interior > vals[:-2]) & (interior >= vals[2:])))
    if peaks > 1:
        warnings.warn(f"multiple local maxima over s for eta={eta}, "
                      f"N={big_n}, N_env={n_env}", RuntimeWarning)
    if k >= len(grid) - 1:
        return None
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    s_star = golden_max(cap, lo, hi, tol=1e-6)
    if s_star >= s_max - 1e-5:
        return None
    return s_star


def critical_transmissivity(big_n: float, n_env: float, s_max: float = 30.0,
                            tol: float = 1e-4) -> float:
    """Threshold transmissivity above which the optimal s* is infinite.

    Bisection in eta on the predicate "optimal_env_squeezing returns None";
    returns 0 or 1 when the predicate is constant over (0, 1).
    """
    if big_n <= 0.0:
        raise ValueError("critical transmissivity needs N > 0")

    def unbounded(eta):
        return optimal_env_squeezing(eta, big_n, n_env, s_max) is None

    lo, hi = 1e-3, 1.0 - 1e-3
    if unbounded(lo):
        return 0.0
    if not unbounded(hi):
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if unbounded(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def r_opt_curve(eta: float, big_n: float, n_env: float, s_grid,
                order: ApproxOrder = ApproxOrder.EXACT) -> list:
    """Optimal input squeezing along a grid of environment squeezings.

    r_opt = s where the mode is third stage; r_opt = sign(s) ln(2 i_u) in
    the second stage.  Continuous with a kink at the stage transition.
    """
    return [(float(s), solve_one_use(eta, big_n, n_env, float(s), order).r_opt)
            for s in s_grid]
