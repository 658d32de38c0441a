"""Self-check battery: closed forms, limits, cross-solver agreement.

Each criterion returns a CriterionResult; run_battery collects all of them.
The `fast` flag trims instance counts / grid sizes so the battery finishes in
a few seconds from the command line; tests run the full versions.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .channel import (ChannelParams, memoryless_environment,
                      nearest_neighbor_environment)
from .entropy import ApproxOrder, g_entropy, g_series
from .kkt import capacity_all_third, solve_dynamic, solve_static
from .memory import max_over_env, solve_asymptotic
from .memoryless import solve_one_use
from .oracle import maximize_chi
from .rootfind import bisect

_LN2 = math.log(2.0)


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.index} ({self.name}): "
                f"{self.detail} [{self.seconds:.1f}s]")


def _result(index, name, t0, passed, detail):
    return CriterionResult(index, name, bool(passed), detail, time.time() - t0)


def criterion_entropy_expansion(fast: bool = False) -> CriterionResult:
    """Zeroth-order entropy error bounded by the geometric series tail and
    shrinking like 1/nu^2."""
    t0 = time.time()
    nus = [1.0, 2.0, 5.0, 10.0, 50.0]
    errs = []
    ok = True
    for nu in nus:
        err = abs(g_entropy(nu) - g_series(nu, 0))
        q = (2.0 * nu) ** -2
        bound = q / (6.0 * _LN2) / (1.0 - q)
        errs.append(err)
        if err > bound:
            ok = False
    ratio_ok = True
    for (n1, e1), (n2, e2) in zip(zip(nus, errs), zip(nus[1:], errs[1:])):
        expected = (n2 / n1) ** 2
        if abs(e1 / e2 / expected - 1.0) > 0.20:
            ratio_ok = False
    return _result(1, "entropy expansion", t0, ok and ratio_ok,
                   f"max err {max(errs):.2e}, 1/nu^2 scaling "
                   f"{'ok' if ratio_ok else 'violated'}")


def criterion_oracle_third_stage(fast: bool = False) -> CriterionResult:
    """capacity_all_third against the brute-force maximizer on seeded
    all-third instances."""
    t0 = time.time()
    rng = np.random.default_rng(20240901)
    want = 6 if fast else 20
    worst_gap = 0.0
    worst_spread = 0.0
    found = 0
    attempts = 0
    while found < want and attempts < 400:
        attempts += 1
        n = int(rng.integers(1, 5))
        eta = float(rng.uniform(0.3, 0.95))
        big_n = float(rng.uniform(0.5, 3.0))
        n_env = float(rng.uniform(0.0, 1.5))
        s = float(rng.uniform(0.0, 0.8))
        env = (memoryless_environment(n_env, s, n) if attempts % 2
               else nearest_neighbor_environment(n_env, s, n))
        params = ChannelParams(eta, big_n, n)
        sol = solve_dynamic(params, env)
        if any(st.value != 3 for st in sol.stages.stage):
            continue
        found += 1
        rep = maximize_chi(params, env, starts=8, iters=300)
        gap = abs(rep.chi_best / n - capacity_all_third(params, env))
        worst_gap = max(worst_gap, gap)
        worst_spread = max(worst_spread, rep.spread)
    ok = found == want and worst_gap < 1e-3 and worst_spread < 1e-4
    return _result(2, "closed form vs oracle", t0, ok,
                   f"{found} instances, worst gap {worst_gap:.2e}, "
                   f"worst spread {worst_spread:.2e}")


def criterion_static_dynamic(fast: bool = False) -> CriterionResult:
    """Static and dynamic stage algorithms agree on a randomized battery."""
    t0 = time.time()
    rng = np.random.default_rng(42)
    count = 20 if fast else 100
    worst = 0.0
    mismatches = 0
    for k in range(count):
        n = int(rng.integers(1, 17))
        eta = float(rng.uniform(0.05, 0.98))
        big_n = float(rng.uniform(0.01, 4.0))
        n_env = float(rng.uniform(0.0, 2.0))
        s = float(rng.uniform(-1.5, 1.5))
        env = (memoryless_environment(n_env, s, n) if k % 2
               else nearest_neighbor_environment(n_env, s, n))
        params = ChannelParams(eta, big_n, n)
        dyn = solve_dynamic(params, env)
        sta = solve_static(params, env)
        worst = max(worst, abs(dyn.capacity_per_use - sta.capacity_per_use))
        if dyn.stages.stage != sta.stages.stage:
            mismatches += 1
    ok = worst < 1e-10 and mismatches == 0
    return _result(3, "static vs dynamic", t0, ok,
                   f"{count} instances, worst diff {worst:.2e}, "
                   f"{mismatches} stage mismatches")


def criterion_strong_squeezing_limit(fast: bool = False) -> CriterionResult:
    """Capacity at strong squeezing approaches log2(3), independent of eta."""
    t0 = time.time()
    target = math.log2(3.0)
    worst = 0.0
    for eta in (0.1, 0.5, 0.9):
        cap = solve_one_use(eta, 1.0, 1.0, 12.0).capacity
        worst = max(worst, abs(cap - target) / target)
    return _result(4, "strong squeezing limit", t0, worst < 0.01,
                   f"worst relative deviation {worst:.2e}")


def criterion_order_fidelity(fast: bool = False) -> CriterionResult:
    """Zeroth-order capacity within 0.05% of exact, first order no worse."""
    t0 = time.time()
    worst_rel0 = 0.0
    first_ok = True
    for big_n in (0.01, 1.0):
        exact = solve_asymptotic(0.95, big_n, 0.5, 2.5,
                                 order=ApproxOrder.EXACT).capacity
        zeroth = solve_asymptotic(0.95, big_n, 0.5, 2.5,
                                  order=ApproxOrder.ZEROTH).capacity
        first = solve_asymptotic(0.95, big_n, 0.5, 2.5,
                                 order=ApproxOrder.FIRST).capacity
        rel0 = abs(exact - zeroth) / exact
        rel1 = abs(exact - first) / exact
        worst_rel0 = max(worst_rel0, rel0)
        if rel1 > rel0:
            first_ok = False
    ok = worst_rel0 < 5e-4 and first_ok
    return _result(5, "approximation fidelity", t0, ok,
                   f"worst zeroth rel err {worst_rel0:.2e}, "
                   f"first {'<=' if first_ok else '>'} zeroth")


def criterion_kink(fast: bool = False) -> CriterionResult:
    """r_opt(s) is continuous with a slope kink at the second/third
    transition."""
    t0 = time.time()

    def third(s):
        return 1.0 if solve_one_use(0.5, 1.0, 1.0, float(s)).stage == "third" \
            else -1.0

    s_t = bisect(third, 0.3, 0.6, rel_tol=1e-10)
    h = 1e-4
    r = lambda s: solve_one_use(0.5, 1.0, 1.0, float(s)).r_opt
    left = (r(s_t - h) - r(s_t - 2 * h)) / h
    right = (r(s_t + 2 * h) - r(s_t + h)) / h
    jump = abs(r(s_t + 1e-7) - r(s_t - 1e-7))
    ok = abs(left - right) > 0.01 and jump < 1e-5
    return _result(6, "r_opt kink", t0, ok,
                   f"s_t={s_t:.4f}, slope gap {abs(left - right):.3f}, "
                   f"jump {jump:.1e}")


def criterion_memory_consistency(fast: bool = False) -> CriterionResult:
    """Asymptotic all-third closed form and finite-n convergence."""
    t0 = time.time()
    # all-third regime: the asymptotic solver must coincide with the
    # memoryless closed form after replacing cosh s by I0(2s)
    from .memory import bessel_i0
    from .memoryless import third_stage_capacity
    eta, big_n, n_env, s = 0.8, 6.0, 0.3, 0.4
    asym = solve_asymptotic(eta, big_n, n_env, s)
    m_env = (n_env + 0.5) * bessel_i0(2.0 * s) - 0.5
    closed = third_stage_capacity(eta, big_n, n_env, m_env)
    closed_gap = abs(asym.capacity - closed)

    target = solve_asymptotic(0.5, 1.0, 1.0, 1.0).capacity
    sizes = (32, 64) if fast else (32, 64, 128)
    errs = []
    for n in sizes:
        sol = solve_dynamic(ChannelParams(0.5, 1.0, n),
                            nearest_neighbor_environment(1.0, 1.0, n))
        errs.append(abs(sol.capacity_per_use - target))
    decreasing = all(a > b for a, b in zip(errs, errs[1:]))
    ok = closed_gap < 1e-12 and decreasing and errs[-1] < 5e-3
    return _result(7, "memory consistency", t0, ok,
                   f"closed-form gap {closed_gap:.1e}, finite-n errors "
                   + "->".join(f"{e:.1e}" for e in errs))


def criterion_water_filling(fast: bool = False) -> CriterionResult:
    """Flat water level where classical power is poured; monotone spectra
    in N."""
    t0 = time.time()
    xi = np.linspace(0.0, math.pi / 2.0, 101 if fast else 201)
    prev = None
    flat_ok = True
    mono_ok = True
    for big_n in (0.0, 0.05, 0.67, 1.0, 2.0):
        sol = solve_asymptotic(0.5, big_n, 1.0, 1.0)
        dens = sol.densities(xi)
        mask = dens["c_q"] > 0
        if mask.any() and float(np.var(dens["nubar"][mask])) >= 1e-8:
            flat_ok = False
        if prev is not None:
            if not (np.all(dens["nubar"] >= prev["nubar"] - 1e-9)
                    and np.all(dens["nu"] <= prev["nu"] + 1e-9)):
                mono_ok = False
        prev = dens
    return _result(8, "quantum water filling", t0, flat_ok and mono_ok,
                   f"level flat: {flat_ok}, monotone in N: {mono_ok}")


def criterion_memory_gain(fast: bool = False) -> CriterionResult:
    """Correlated environments beat memoryless ones somewhere on an M_env
    grid."""
    t0 = time.time()
    grid = np.linspace(2.0, 4.0, 5) if fast else np.linspace(0.1, 6.0, 20)
    best = -math.inf
    for m_env in grid:
        nn = max_over_env(0.9, 1.0, float(m_env), model="nearest-neighbor")
        ml = max_over_env(0.9, 1.0, float(m_env), model="memoryless")
        best = max(best, nn - ml)
    return _result(9, "memory gain", t0, best > 1e-3,
                   f"max gain {best:.2e} bits")


CRITERIA = (
    criterion_entropy_expansion,
    criterion_oracle_third_stage,
    criterion_static_dynamic,
    criterion_strong_squeezing_limit,
    criterion_order_fidelity,
    criterion_kink,
    criterion_memory_consistency,
    criterion_water_filling,
    criterion_memory_gain,
)


def run_battery(fast: bool = True, echo=None) -> list:
    results = []
    for crit in CRITERIA:
        res = crit(fast=fast)
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
