import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decpomdp_pbp import dp, oracle
from decpomdp_pbp.info import StrategyProfile, enumerate_info
from decpomdp_pbp.model import (
    build_random_example,
    build_separated_example,
    build_single_agent,
    replace_problem,
    separated_factors,
)


def test_joint_law_size_and_mass(example, converged):
    law = oracle.joint_law(example, converged)
    # 2 states x 4 joint observations per stage, actions fixed by the profile
    assert len(law) == 8 ** 3
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)


def test_deterministic_kernels_give_one_trajectory(example):
    step = np.zeros((2, 2, 2, 2))
    step[..., 1] = 1.0
    obs = np.zeros((2, 2, 2, 2))
    obs[0, ..., 0] = obs[1, ..., 1] = 1.0
    spec = replace_problem(example, transition=step, observation=(obs, obs),
                           initial=np.array([1.0, 0.0]),
                           initial_obs=(np.eye(2), np.eye(2)))
    law = oracle.joint_law(spec, StrategyProfile.constant(spec))
    assert len(law) == 1
    ((xs, _, _), p), = law.items()
    assert xs == (0, 1, 1) and p == 1.0


def test_size_guard(example):
    with pytest.raises(oracle.SizeGuardError, match="guard"):
        oracle.enumerate_team_optimal(example)


def test_coordinator_refuses_without_sharing(no_sharing):
    with pytest.raises(ValueError, match="no stage has shared information"):
        oracle.common_info_dp(no_sharing)


def test_tiny_team_optimum(tiny):
    team, best = oracle.enumerate_team_optimal(tiny)
    coord, value = oracle.common_info_dp(tiny)
    assert value == pytest.approx(best, abs=1e-12)
    assert oracle.exact_payoff(tiny, team) == pytest.approx(best, abs=1e-12)
    assert oracle.exact_payoff(tiny, coord) == pytest.approx(best, abs=1e-12)
    assert best <= dp.pbp_iterate(tiny).payoff + 1e-12


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_team_optimum_bounds_every_profile(seed):
    spec = build_random_example(seed, horizon=2, delay=1)
    _, best = oracle.enumerate_team_optimal(spec)
    assert oracle.common_info_dp(spec)[1] == pytest.approx(best, abs=1e-12)
    for s in range(5):
        assert best <= oracle.exact_payoff(spec, StrategyProfile.random(spec, s)) + 1e-12
    assert best <= dp.pbp_iterate(spec).payoff + 1e-12


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_single_agent_optima_agree(seed):
    spec = build_random_example(seed, num_agents=1, horizon=3, delay=1)
    policy, value = oracle.centralized_pomdp_solve(spec)
    assert oracle.exact_payoff(spec, policy) == pytest.approx(value, abs=1e-12)
    assert oracle.enumerate_team_optimal(spec)[1] == pytest.approx(value, abs=1e-12)
    assert oracle.common_info_dp(spec)[1] == pytest.approx(value, abs=1e-12)
    # one agent: person-by-person optimal is optimal in this instance
    assert dp.pbp_iterate(spec).payoff >= value - 1e-12


def test_noiseless_pomdp_is_an_mdp():
    rng = np.random.default_rng(5)
    trans = rng.dirichlet(np.ones(3), size=(3, 2))
    cost = rng.uniform(0, 5, size=(3, 3, 2))
    init = np.array([0.2, 0.5, 0.3])
    spec = build_single_agent(3, trans, np.eye(3), np.eye(3), cost, init)
    v = np.zeros(3)
    for t in (2, 1, 0):
        v = (cost[t] + np.einsum("xuy,y->xu", trans, v)).min(axis=1)
    assert oracle.centralized_pomdp_solve(spec)[1] == pytest.approx(init @ v, abs=1e-12)


@pytest.mark.parametrize("seed", [None, 7])
def test_separated_instance_adds_up(seed):
    factors = separated_factors(seed)
    spec = build_separated_example(factors, delay=2)
    total = sum(oracle.centralized_pomdp_solve(f)[1] for f in factors)
    assert dp.pbp_iterate(spec).payoff == pytest.approx(total, abs=1e-9)


def test_monte_carlo_is_seeded(example, converged):
    a = oracle.monte_carlo_payoff(example, converged, 10_000, seed=3)
    b = oracle.monte_carlo_payoff(example, converged, 10_000, seed=3)
    c = oracle.monte_carlo_payoff(example, converged, 10_000, seed=4)
    assert a == b and a != c
    with pytest.raises(ValueError):
        oracle.monte_carlo_payoff(example, converged, 0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_monte_carlo_agrees_with_exact(seed):
    spec = build_random_example(seed, delay=1 + seed % 3)
    profile = StrategyProfile.random(spec, seed)
    mean, se = oracle.monte_carlo_payoff(spec, profile, 200_000, seed=seed)
    assert abs(mean - oracle.exact_payoff(spec, profile)) <= 4 * se


def test_exhaustive_posterior_off_support(example, converged):
    spec = replace_problem(example, initial_obs=(np.array([[1.0, 0.0], [1.0, 0.0]]),
                                               example.initial_obs[1]))
    assert oracle.exhaustive_posterior(spec, 0, converged, enumerate_info(spec, 1, 0)[1]) is None


@pytest.mark.parametrize("seed", [None, 7, 21])
def test_lifted_factor_optima_form_an_equilibrium(seed):
    factors = separated_factors(seed)
    spec = build_separated_example(factors, delay=2)
    solved = [oracle.centralized_pomdp_solve(f) for f in factors]
    lifted = oracle.lift_factor_policies(spec, factors, [p for p, _ in solved])
    res = dp.verify_equilibrium(spec, lifted)
    assert res["equilibrium"]
    assert res["payoff"] == pytest.approx(sum(v for _, v in solved), abs=1e-9)


def test_separated_instance_can_have_worse_equilibria():
    factors = separated_factors(21)
    spec = build_separated_example(factors, delay=2)
    report = dp.pbp_iterate(spec)
    total = sum(oracle.centralized_pomdp_solve(f)[1] for f in factors)
    assert dp.verify_equilibrium(spec, report.profile)["equilibrium"]
    assert report.payoff > total + 1.0
