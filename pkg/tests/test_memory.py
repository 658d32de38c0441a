"""Asymptotic solver for the nearest-neighbor correlated environment."""

import math

import numpy as np
import pytest

from gausscap.channel import ChannelParams, nearest_neighbor_environment
from gausscap.entropy import ApproxOrder
from gausscap.kkt import solve_dynamic
from gausscap.memory import (Distribution, bessel_i0, env_density,
                             max_over_env, n2_threshold, solve_asymptotic,
                             w_parameter)
from gausscap.memoryless import solve_one_use, third_stage_capacity


def test_bessel_i0_reference_values():
    # Abramowitz & Stegun 9.8
    assert bessel_i0(0.0) == 1.0
    assert bessel_i0(1.0) == pytest.approx(1.2660658777520084, rel=1e-12)
    assert bessel_i0(2.0) == pytest.approx(2.2795853023360673, rel=1e-12)
    assert bessel_i0(10.0) == pytest.approx(2815.716628466254, rel=1e-10)
    assert bessel_i0(-3.0) == bessel_i0(3.0)


def test_env_density_endpoints():
    # xi = 0 is the most squeezed point, xi = pi/2 is unsqueezed
    assert env_density(0.0, 1.0, 0.8, "q") == pytest.approx(
        1.5 * math.exp(1.6), rel=1e-12)
    assert env_density(math.pi / 2.0, 1.0, 0.8, "q") == pytest.approx(1.5)
    prod = env_density(0.7, 0.0, 0.8, "q") * env_density(0.7, 0.0, 0.8, "p")
    assert prod == pytest.approx(0.25, rel=1e-12)


def test_all_third_matches_closed_form():
    eta, big_n, n_env, s = 0.8, 6.0, 0.3, 0.4
    sol = solve_asymptotic(eta, big_n, n_env, s)
    assert sol.distribution is Distribution.ALL_THIRD
    m_env = (n_env + 0.5) * bessel_i0(2.0 * s) - 0.5
    assert sol.capacity == pytest.approx(
        third_stage_capacity(eta, big_n, n_env, m_env), abs=1e-12)


def test_s_zero_reduces_to_one_use():
    sol = solve_asymptotic(0.5, 1.0, 1.0, 0.0)
    one = solve_one_use(0.5, 1.0, 1.0, 0.0)
    assert sol.capacity == pytest.approx(one.capacity, abs=1e-12)


def test_distribution_switches_at_n2_threshold():
    eta, n_env, s = 0.5, 1.0, 1.0
    n2 = n2_threshold(eta, n_env, s)
    assert 0.0 < n2 < 10.0
    below = solve_asymptotic(eta, 0.8 * n2, n_env, s)
    above = solve_asymptotic(eta, 1.2 * n2, n_env, s)
    assert below.distribution is Distribution.TWO_ONE_TWO
    assert above.distribution is Distribution.TWO_THREE_TWO


def test_capacity_continuous_across_threshold():
    eta, n_env, s = 0.5, 1.0, 1.0
    n2 = n2_threshold(eta, n_env, s)
    lo = solve_asymptotic(eta, n2 * (1 - 1e-6), n_env, s)
    hi = solve_asymptotic(eta, n2 * (1 + 1e-6), n_env, s)
    assert lo.capacity == pytest.approx(hi.capacity, abs=1e-4)


def test_densities_mirror_symmetry():
    sol = solve_asymptotic(0.5, 1.0, 1.0, 1.0)
    xi = np.linspace(0.0, math.pi, 41)
    dens = sol.densities(xi)
    np.testing.assert_allclose(dens["i_q"], dens["i_p"][::-1], rtol=1e-10)
    np.testing.assert_allclose(dens["c_q"], dens["c_p"][::-1], atol=1e-10)
    np.testing.assert_allclose(dens["nu"], dens["nu"][::-1], rtol=1e-10)


def test_water_level_flat_where_modulated():
    sol = solve_asymptotic(0.5, 1.0, 1.0, 1.0)
    xi = np.linspace(0.0, math.pi / 2.0, 201)
    dens = sol.densities(xi)
    mask = dens["c_q"] > 0
    assert mask.any()
    level = dens["nubar"][mask]
    assert float(np.var(level)) < 1e-10
    assert float(level.mean()) == pytest.approx(sol.x, rel=1e-8)


def test_second_region_input_is_pure():
    sol = solve_asymptotic(0.5, 1.0, 1.0, 1.0)
    xi = np.linspace(0.0, math.pi / 2.0, 64)
    dens = sol.densities(xi)
    second = dens["stage"] == 2
    assert second.any()
    np.testing.assert_allclose((dens["i_q"] * dens["i_p"])[second], 0.25,
                               rtol=1e-9)


def test_finite_n_converges_to_asymptotic():
    target = solve_asymptotic(0.5, 1.0, 1.0, 1.0).capacity
    errs = []
    for n in (16, 32, 64):
        sol = solve_dynamic(ChannelParams(0.5, 1.0, n),
                            nearest_neighbor_environment(1.0, 1.0, n))
        errs.append(abs(sol.capacity_per_use - target))
    assert errs == sorted(errs, reverse=True)
    assert errs[-1] < 1e-2


def test_order_truncations_stay_close():
    exact = solve_asymptotic(0.95, 1.0, 0.5, 2.5, ApproxOrder.EXACT).capacity
    zeroth = solve_asymptotic(0.95, 1.0, 0.5, 2.5, ApproxOrder.ZEROTH).capacity
    first = solve_asymptotic(0.95, 1.0, 0.5, 2.5, ApproxOrder.FIRST).capacity
    assert abs(zeroth - exact) / exact < 5e-3
    assert abs(first - exact) / exact < 5e-3


def test_w_parameter_positive():
    assert w_parameter(0.5, 1.0, 1.0, 1.0) > 0.0


def test_max_over_env_at_least_unsqueezed():
    # the s-search can only improve on the s = 0 point of the same family
    m_env = 2.0
    for model in ("memoryless", "nearest-neighbor"):
        best = max_over_env(0.9, 1.0, m_env, model=model)
        base = solve_one_use(0.9, 1.0, m_env, 0.0).capacity
        assert best >= base - 1e-9


def test_memory_gain_exists():
    nn = max_over_env(0.9, 1.0, 3.0, model="nearest-neighbor")
    ml = max_over_env(0.9, 1.0, 3.0, model="memoryless")
    assert nn - ml > 1e-3


def test_zero_budget_zero_capacity():
    sol = solve_asymptotic(0.5, 0.0, 1.0, 1.0)
    assert sol.capacity == 0.0
