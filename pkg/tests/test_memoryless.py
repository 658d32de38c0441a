"""One-use solver for the squeezed-thermal memoryless environment."""

import math

import numpy as np
import pytest

from gausscap.entropy import ApproxOrder, g_photons
from gausscap.memoryless import (_env_eigs, critical_transmissivity,
                                 one_use_residual, optimal_env_squeezing,
                                 r_opt_curve, second_stage_first_order,
                                 second_stage_zeroth, solve_one_use,
                                 third_stage_capacity)


def test_unsqueezed_thermal_value():
    # s = 0 stays third stage: C = g[eta N + (1-eta) N_env] - g[(1-eta) N_env]
    sol = solve_one_use(0.5, 1.0, 1.0, 0.0)
    assert sol.stage == "third"
    expect = g_photons(1.0) - g_photons(0.5)
    assert sol.capacity == pytest.approx(expect, abs=1e-14)
    assert sol.capacity == pytest.approx(0.6225562489, abs=1e-9)
    assert sol.r_opt == 0.0


def test_vacuum_budget_gives_zero_capacity():
    sol = solve_one_use(0.5, 0.0, 1.0, 0.3)
    assert sol.capacity == 0.0
    assert sol.c_q == sol.c_p == 0.0


def test_third_stage_closed_form_matches():
    eta, big_n, n_env, s = 0.7, 3.0, 0.5, 0.3
    sol = solve_one_use(eta, big_n, n_env, s)
    assert sol.stage == "third"
    m_env = (n_env + 0.5) * math.cosh(s) - 0.5
    assert sol.capacity == pytest.approx(
        third_stage_capacity(eta, big_n, n_env, m_env), abs=1e-13)
    # third-stage input mirrors the environment squeezing
    assert sol.r_opt == pytest.approx(s, abs=1e-12)
    assert sol.i_q == pytest.approx(0.5 * math.exp(s), rel=1e-12)


def test_energy_constraint_saturated():
    for s in (0.0, 0.5, 1.3, 2.4):
        sol = solve_one_use(0.6, 0.8, 0.7, s)
        total = sol.i_q + sol.i_p + sol.c_q + sol.c_p
        assert total == pytest.approx(2.0 * (0.8 + 0.5), rel=1e-10)


def test_second_stage_root_zeroes_residual():
    eta, big_n, n_env, s = 0.5, 1.0, 1.0, 1.2
    e_q, e_p = _env_eigs(n_env, s)
    sol = solve_one_use(eta, big_n, n_env, s)
    assert sol.stage == "second"
    assert sol.c_q == 0.0 and sol.c_p > 0.0
    assert one_use_residual(sol.i_q, eta, big_n, e_q, e_p) == pytest.approx(
        0.0, abs=1e-10)
    # purity of the optimal input
    assert sol.i_q * sol.i_p == pytest.approx(0.25, rel=1e-12)


def test_zeroth_closed_form_zeroes_truncated_residual():
    eta, big_n = 0.5, 1.0
    e_q, e_p = _env_eigs(1.0, 1.2)
    i0 = second_stage_zeroth(eta, big_n, e_p)
    assert one_use_residual(i0, eta, big_n, e_q, e_p,
                            ApproxOrder.ZEROTH) == pytest.approx(0.0, abs=1e-12)


def test_order_hierarchy_second_stage():
    # truncated roots should straddle close to the exact one
    exact = solve_one_use(0.5, 1.0, 1.0, 1.2).i_q
    zeroth = solve_one_use(0.5, 1.0, 1.0, 1.2, ApproxOrder.ZEROTH).i_q
    first = solve_one_use(0.5, 1.0, 1.0, 1.2, ApproxOrder.FIRST).i_q
    assert abs(zeroth - exact) / exact < 0.05
    assert abs(first - exact) / exact < 0.05


def test_first_order_root_formula():
    # closed-form first-order root agrees with the first-order solve
    i_first = second_stage_first_order(0.5, 1.0, 1.0, 1.2)
    sol = solve_one_use(0.5, 1.0, 1.0, 1.2, ApproxOrder.FIRST)
    assert i_first == pytest.approx(sol.i_q, rel=2e-2)


def test_stage_transition_monotone_in_s():
    # at fixed eta, N, N_env the mode leaves the third stage as s grows
    stages = [solve_one_use(0.5, 1.0, 1.0, s).stage
              for s in (0.0, 0.2, 0.45, 0.5, 1.0, 3.0)]
    assert stages[0] == "third"
    assert stages[-1] == "second"
    flips = sum(1 for a, b in zip(stages, stages[1:]) if a != b)
    assert flips == 1


def test_sign_symmetry_in_s():
    plus = solve_one_use(0.5, 1.0, 1.0, 1.2)
    minus = solve_one_use(0.5, 1.0, 1.0, -1.2)
    assert plus.capacity == pytest.approx(minus.capacity, rel=1e-12)
    assert plus.i_q == pytest.approx(minus.i_p, rel=1e-12)
    assert plus.r_opt == pytest.approx(-minus.r_opt, rel=1e-12)


def test_strong_squeezing_limit():
    target = math.log2(3.0)
    for eta in (0.1, 0.5, 0.9):
        cap = solve_one_use(eta, 1.0, 1.0, 12.0).capacity
        assert abs(cap - target) / target < 0.01


def test_r_opt_curve_continuous_with_kink():
    s_grid = np.linspace(0.0, 1.0, 201)
    curve = r_opt_curve(0.5, 1.0, 1.0, s_grid)
    r = np.array([v for _, v in curve])
    # continuity: no jump anywhere near the grid resolution
    assert np.max(np.abs(np.diff(r))) < 0.02
    # third stage keeps r = s exactly at the start of the grid
    assert r[10] == pytest.approx(s_grid[10], abs=1e-10)
    assert r[-1] < s_grid[-1]  # second stage lags the environment squeezing


def test_optimal_env_squeezing_beats_grid():
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s_star = optimal_env_squeezing(0.5, 1.0, 0.2, s_max=6.0)
    if s_star is not None:
        best = solve_one_use(0.5, 1.0, 0.2, s_star).capacity
        for s in np.linspace(0.0, 6.0, 25):
            assert best >= solve_one_use(0.5, 1.0, 0.2, float(s)).capacity - 1e-7


def test_critical_transmissivity_in_range():
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        eta_c = critical_transmissivity(1.0, 1.0, s_max=12.0, tol=1e-2)
    assert 0.0 <= eta_c <= 1.0
