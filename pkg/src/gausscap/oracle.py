"""Brute-force maximizer of the Holevo information over diagonal spectra.

Validation-only module: it shares no solver code, computes chi from first
principles, enforces constraints by projection, and uses multi-start
finite-difference ascent.  Purity of the input is NOT assumed; only
i_q * i_p >= 1/4 is enforced, so purity emerging at the optimum is itself
a check on the analytic solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, EnvironmentSpectrum
from .errors import InfeasibleStart

_FD_STEP = 1e-6
_STEP0 = 0.1
_STEP_FLOOR = 1e-12


@dataclass
class OracleReport:
    chi_best: float
    input_q: np.ndarray
    input_p: np.ndarray
    classical_q: np.ndarray
    classical_p: np.ndarray
    starts: int
    spread: float


def _chi(iq, ip, cq, cp, eq, ep, eta) -> float:
    total = 0.0
    for k in range(iq.size):
        oq = eta * iq[k] + (1.0 - eta) * eq[k]
        op = eta * ip[k] + (1.0 - eta) * ep[k]
        aq = oq + eta * cq[k]
        ap = op + eta * cp[k]
        nu = math.sqrt(oq * op)
        nb = math.sqrt(aq * ap)
        total += _g(nb) - _g(nu)
    return total


def _g(nu: float) -> float:
    hi = nu + 0.5
    lo = nu - 0.5
    if lo <= 1e-14:
        return hi * math.log2(hi)
    return hi * math.log2(hi) - lo * math.log2(lo)


def _project(theta: np.ndarray, n: int, budget: float) -> np.ndarray:
    """Pull a raw point back into the constraint set.

    Order: positivity, uncertainty bound, then exact energy via rescaling
    of the classical budget.
    """
    th = theta.copy()
    iq, ip, cq, cp = th[:n], th[n:2 * n], th[2 * n:3 * n], th[3 * n:]
    np.clip(iq, 1e-9, None, out=iq)
    np.clip(ip, 1e-9, None, out=ip)
    np.clip(cq, 0.0, None, out=cq)
    np.clip(cp, 0.0, None, out=cp)
    prod = iq * ip
    low = prod < 0.25
    if np.any(low):
        scale = np.sqrt(0.25 / prod[low])
        iq[low] *= scale
        ip[low] *= scale
    spent = iq.sum() + ip.sum()
    room = budget - spent
    if room < 0.0:
        # shrink the input toward the vacuum until it fits, then repair
        # the uncertainty bound (second pass keeps the overshoot tiny)
        alpha = max((budget - n) / max(spent - n, 1e-300), 0.0)
        iq[:] = 0.5 + alpha * (iq - 0.5)
        ip[:] = 0.5 + alpha * (ip - 0.5)
        prod = iq * ip
        low = prod < 0.25
        if np.any(low):
            scale = np.sqrt(0.25 / prod[low])
            iq[low] *= scale
            ip[low] *= scale
        room = max(budget - iq.sum() - ip.sum(), 0.0)
    csum = cq.sum() + cp.sum()
    if csum > 0.0:
        f = room / csum
        cq *= f
        cp *= f
    elif room > 0.0:
        cq += room / (2 * n)
        cp += room / (2 * n)
    return th


def _ascend(theta, n, budget, eq, ep, eta, iters):
    def value(th):
        return _chi(th[:n], th[n:2 * n], th[2 * n:3 * n], th[3 * n:], eq, ep, eta)

    theta = _project(theta, n, budget)
    best = value(theta)
    dim = theta.size
    grad = np.empty(dim)

    # phase 1: projected finite-difference gradient ascent (fast while the
    # iterate is in the interior)
    for _ in range(iters):
        for j in range(dim):
            bump = np.zeros(dim)
            bump[j] = _FD_STEP
            grad[j] = (value(_project(theta + bump, n, budget))
                       - value(_project(theta - bump, n, budget))) / (2 * _FD_STEP)
        gnorm = float(np.linalg.norm(grad))
        if gnorm < 1e-7:
            break
        step = _STEP0
        improved = False
        while step >= _STEP_FLOOR:
            cand = _project(theta + step * grad / gnorm, n, budget)
            cand_val = value(cand)
            if cand_val > best:
                theta, best = cand, cand_val
                improved = True
                break
            step *= 0.5
        if not improved:
            break

    # phase 2: compass (coordinate) search.  The uncertainty-bound
    # projection has a kink on the purity surface that poisons the
    # finite-difference gradient there; direct +- coordinate probes slide
    # along the boundary instead of fighting it.
    step = _STEP0
    evals = 0
    eval_cap = iters * 6 * dim
    while step >= _STEP_FLOOR and evals < eval_cap:
        moved = False
        for j in range(dim):
            for sgn in (1.0, -1.0):
                bump = np.zeros(dim)
                bump[j] = sgn * step
                cand = _project(theta + bump, n, budget)
                cand_val = value(cand)
                evals += 1
                if cand_val > best:
                    theta, best = cand, cand_val
                    moved = True
                    break
        if not moved:
            step *= 0.5
    return theta, best


def projected_gradient_norm(theta, n, budget, eq, ep, eta, delta=1e-7) -> float:
    """First-order optimality measure ||P(theta + delta*grad) - theta||/delta."""
    def value(th):
        return _chi(th[:n], th[n:2 * n], th[2 * n:3 * n], th[3 * n:], eq, ep, eta)

    dim = theta.size
    grad = np.empty(dim)
    for j in range(dim):
        bump = np.zeros(dim)
        bump[j] = _FD_STEP
        grad[j] = (value(_project(theta + bump, n, budget))
                   - value(_project(theta - bump, n, budget))) / (2 * _FD_STEP)
    moved = _project(theta + delta * grad, n, budget)
    return float(np.linalg.norm(moved - theta) / delta)


def maximize_chi(params: ChannelParams, env: EnvironmentSpectrum,
                 starts: int = 8, iters: int = 300,
                 seed: int = 20240901) -> OracleReport:
    """Multi-start projected-ascent maximization of chi; returns the best
    point and the spread of converged values across starts.
    """
    n = params.n_modes
    if n != len(env):
        raise ValueError("environment size does not match n_modes")
    if n > 8:
        raise ValueError("oracle is a desk-scale check; n <= 8 only")
    if starts < 1:
        raise ValueError("need at least one start")
    if params.n_photons < 0.0:
        raise InfeasibleStart("negative photon budget")
    eta = params.eta
    eq = env.spectrum.q
    ep = env.spectrum.p
    budget = 2.0 * n * (params.n_photons + 0.5)
    rng = np.random.default_rng(seed)

    best_theta = None
    best_val = -math.inf
    finals = []
    for _ in range(starts):
        delta = rng.uniform(-0.3, 0.3, size=n)
        iq = 0.5 * np.exp(delta)
        ip = 0.5 * np.exp(-delta) * np.exp(rng.uniform(0.0, 0.1, size=n))
        split = rng.dirichlet(np.ones(2 * n))
        room = max(budget - iq.sum() - ip.sum(), 0.0)
        cq = split[:n] * room
        cp = split[n:] * room
        theta0 = np.concatenate([iq, ip, cq, cp])
        theta, val = _ascend(theta0, n, budget, eq, ep, eta, iters)
        finals.append(val)
        if val > best_val:
            best_theta, best_val = theta, val
    spread = float(max(finals) - min(finals))
    t = best_theta
    return OracleReport(best_val, t[:n].copy(), t[n:2 * n].copy(),
                        t[2 * n:3 * n].copy(), t[3 * n:].copy(), starts, spread)
