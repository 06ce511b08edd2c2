import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decpomdp_pbp import dp, oracle
from decpomdp_pbp.info import StrategyProfile, enumerate_info
from decpomdp_pbp.model import build_random_example, replace_problem


def _by_labels(spec, k, t, labels):
    for info in enumerate_info(spec, t, k):
        if tuple(info.labels(spec)) == labels:
            return info
    raise KeyError(labels)


STAGE_OF_LENGTH = {1: 1, 3: 2, 7: 3}

ROWS = [
    (0, ("o2",), 6.71, "c2"),
    (0, ("o2", "o1", "c2"), 1.61, "c1"),
    (0, ("o2", "o2", "c2", "c2", "o1", "o1", "c1"), 0.33, "c1"),
    (1, ("o2",), 5.81, "c2"),
    (1, ("o2", "o1", "c2"), 1.99, "c1"),
    (1, ("o2", "o2", "c2", "c2", "o1", "o1", "c1"), 0.51, "c1"),
]


def test_paper_payoff(example_report):
    assert example_report.converged and example_report.equilibrium
    assert example_report.payoff == pytest.approx(4.3005, abs=5e-4)
    for v in example_report.expected_values:
        assert v == pytest.approx(example_report.payoff, abs=1e-9)


@pytest.mark.parametrize("k,labels,value,action", ROWS)
def test_sample_values(example, example_report, k, labels, value, action):
    info = _by_labels(example, k, STAGE_OF_LENGTH[len(labels)], labels)
    vt = example_report.value_tables[k]
    assert vt.values[info.stage - 1][info] == pytest.approx(value, abs=5e-3)
    assert example.action_labels[k][vt.actions[info.stage - 1][info]] == action


def test_terminal_stage_point_mass(example, converged):
    tree = dp.build_agent_tree(example, 0, converged)
    node = next(iter(tree.nodes(3).values()))
    node.posterior.probs[:] = 0.0
    node.posterior.probs[0, 0] = 1.0
    node.cost = dp.expected_stage_cost(example, node.posterior, node.info, converged)
    values, actions = dp.terminal_stage(example, 0, converged, tree)
    other = converged.action(_other_view(example, node.info))
    expect = example.cost[(2, 0, slice(None), other)]
    assert values[node.info] == pytest.approx(expect.min(), abs=1e-15)
    assert actions[node.info] == int(np.argmin(expect))


def _other_view(example, info):
    # agent 2's realization sharing the shared block, private block all index 0
    for cand in enumerate_info(example, info.stage, 1):
        if cand.shared == info.shared and cand.own_obs[0] == 0:
            return cand
    raise KeyError


def test_zero_cost_is_trivial(example):
    spec = replace_problem(example, cost=np.zeros_like(example.cost))
    report = dp.pbp_iterate(spec)
    assert report.sweeps == 1 and report.payoff == 0.0
    assert all(not tab.any() for row in report.profile.tables for tab in row)
    vt, _ = dp.best_response(spec, 0, report.profile)
    assert all(v == 0.0 for layer in vt.values for v in layer.values())


def test_tie_break_prefers_lowest_index():
    assert dp.argmin_lowest(np.array([1.0, 1.0 + 1e-13, 0.5 + 0.5])) == 0
    assert dp.argmin_lowest(np.array([2.0, 1.0, 1.0])) == 1
    assert dp.argmin_set(np.array([1.0, 1.0, 3.0])) == frozenset({0, 1})


@pytest.mark.parametrize("seed", range(10))
def test_best_response_matches_history_tree(example, seed):
    profile = StrategyProfile.random(example, seed)
    for k in range(2):
        vt, tables = dp.best_response(example, k, profile)
        _, total = oracle.tree_best_response(example, k, profile)
        assert vt.expected_initial_value == pytest.approx(total, abs=1e-9)
        assert oracle.exact_payoff(example, profile.with_agent(k, tables)) == pytest.approx(total, abs=1e-9)


def test_policy_values_match_history_tree(example, converged):
    for k in range(2):
        vt = dp.evaluate_agent(example, k, converged)
        values, _, total = oracle.tree_values(example, k, converged, optimize=False)
        assert vt.expected_initial_value == pytest.approx(total, abs=1e-12)
        for t in range(3):
            for info, v in values[t].items():
                assert vt.values[t][info] == pytest.approx(v, abs=1e-12)


def test_equilibrium_confirmed_two_ways(example, converged):
    res = dp.verify_equilibrium(example, converged)
    assert res["equilibrium"]
    assert max(res["dp_gaps"] + res["oracle_gaps"]) <= 1e-9


def test_no_random_deviation_helps(example, converged):
    base = oracle.exact_payoff(example, converged)
    rng = np.random.default_rng(2024)
    for _ in range(100):
        k = int(rng.integers(2))
        own = [rng.integers(0, 2, len(t)) for t in converged.agent_tables(k)]
        assert oracle.exact_payoff(example, converged.with_agent(k, own)) >= base - 1e-9


def test_perturbed_profile_has_a_gap(example, converged):
    stuck = converged.with_agent(0, [np.zeros_like(t) for t in converged.agent_tables(0)])
    res = dp.verify_equilibrium(example, stuck)
    assert not res["equilibrium"]
    assert res["dp_gaps"][0] > 1e-3
    assert res["dp_gaps"][0] == pytest.approx(res["oracle_gaps"][0], abs=1e-9)


def test_full_sweep_is_monotone(example):
    report = dp.pbp_iterate(example, mode="full_sweep")
    hist = report.payoff_history
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))
    assert report.equilibrium


def test_other_equilibrium_from_full_sweeps(example):
    # a second fixed point: equilibria are not unique here
    report = dp.pbp_iterate(example, mode="full_sweep")
    assert report.payoff == pytest.approx(4.419145, abs=1e-6)
    assert dp.verify_equilibrium(example, report.profile)["equilibrium"]


@pytest.mark.parametrize("seed", [0, 3, 8])
def test_random_starts_reach_equilibria(example, seed):
    report = dp.pbp_iterate(example, initial=StrategyProfile.random(example, seed))
    assert report.equilibrium
    assert dp.verify_equilibrium(example, report.profile)["equilibrium"]


def test_without_escape_fixed_points_can_stall(example):
    stalled = [s for s in range(12)
               if not dp.pbp_iterate(example, initial=StrategyProfile.random(example, s),
                                     escape=False).equilibrium]
    assert stalled
    report = dp.pbp_iterate(example, initial=StrategyProfile.random(example, stalled[0]))
    assert report.escapes >= 1 and report.equilibrium


def test_sweep_budget(example):
    with pytest.raises(dp.NonConvergenceError) as err:
        dp.pbp_iterate(example, max_outer=1)
    assert err.value.previous != err.value.last


def test_unknown_mode(example):
    with pytest.raises(ValueError, match="unknown mode"):
        dp.pbp_iterate(example, mode="sideways")


def test_compression_on_paper(example, converged):
    report = dp.compression_report(example, converged)
    for (t, k), entry in report.items():
        assert entry["kernel_invariant"]
        assert entry["full_singletons"] and entry["separated_factors"]
        if t == 3:
            assert entry["terminal_consistent"]


@pytest.fixture(scope="module")
def blind_first(example):
    """Agent 1's observations carry no information, so realizations merge."""
    flat = np.full((2, 2, 2, 2), 0.5)
    return replace_problem(example, observation=(flat, example.observation[1]),
                           initial_obs=(np.full((2, 2), 0.5), example.initial_obs[1]))


def test_compression_with_nontrivial_groups(blind_first):
    report = dp.pbp_iterate(blind_first)
    assert report.equilibrium
    comp = dp.compression_report(blind_first, report.profile)
    assert max(e["largest_group"] for e in comp.values()) > 1
    for (t, k), entry in comp.items():
        assert entry["kernel_invariant"]
        if t == 3:
            assert entry["terminal_consistent"]


def test_next_posterior_law_is_markov(example, converged, blind_first):
    for k in range(2):
        assert oracle.markov_check(example, k, converged)["max_diff"] <= 1e-10
    profile = dp.pbp_iterate(blind_first).profile
    res = oracle.markov_check(blind_first, 0, profile)
    assert res["pairs"] > res["groups"]
    assert res["max_diff"] <= 1e-10


def test_no_sharing_compresses_on_posterior(no_sharing):
    report = dp.pbp_iterate(no_sharing)
    assert report.equilibrium
    for t in range(1, 4):
        for info in enumerate_info(no_sharing, t, 0):
            assert info.shared == ((), ())
    comp = dp.compression_report(no_sharing, report.profile)
    assert all(e["kernel_invariant"] for e in comp.values())
    assert comp[(3, 0)]["terminal_consistent"] and comp[(3, 1)]["terminal_consistent"]


@pytest.mark.parametrize("fixture", ["one_step_delay", "no_sharing"])
def test_degenerate_delays_reach_verified_equilibria(request, fixture):
    spec = request.getfixturevalue(fixture)
    report = dp.pbp_iterate(spec)
    assert dp.verify_equilibrium(spec, report.profile)["equilibrium"]
    assert report.payoff == pytest.approx(oracle.exact_payoff(spec, report.profile), abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), delay=st.integers(1, 3))
def test_iteration_ends_at_an_equilibrium(seed, delay):
    spec = build_random_example(seed, delay=delay)
    report = dp.pbp_iterate(spec)
    res = dp.verify_equilibrium(spec, report.profile)
    assert res["equilibrium"]
    assert report.payoff == pytest.approx(res["payoff"], abs=1e-10)
