import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decpomdp_pbp import oracle
from decpomdp_pbp.info import (
    StrategyProfile,
    compose_info,
    enumerate_info,
    enumerate_shared,
    extend_info,
    info_count,
    info_from_history,
    info_index,
    private_space,
    reconstruct_info,
    shared_action_consistency,
    window,
)
from decpomdp_pbp.model import build_random_example


def lab(spec, info):
    return info.labels(spec)


def test_first_extension_matches_listed_realization(example):
    i1 = enumerate_info(example, 1, 0)[1]
    assert lab(example, i1) == ("o2",)
    i2 = extend_info(example, i1, 0, 1)
    assert lab(example, i2) == ("o2", "o1", "c2")


def test_seven_tuple_ordering(example):
    # shared: y_1 of both agents, then u_1 of both; private: y_2, y_3, u_2
    i1 = enumerate_info(example, 1, 0)[1]
    i2 = extend_info(example, i1, 0, 1)          # y2 = o1, u1 = c2
    i3 = extend_info(example, i2, 0, 0, (1,), (1,))  # y3 = o1, u2 = c1
    assert lab(example, i3) == ("o2", "o2", "c2", "c2", "o1", "o1", "c1")
    assert i3.shared_obs == ((1, 1),) and i3.shared_act == ((1, 1),)
    assert i3.own_obs == (0, 0) and i3.own_act == (0,)


def test_no_sharing_when_delay_is_horizon(no_sharing):
    spec = no_sharing
    info = enumerate_info(spec, 1, 1)[0]
    for t in range(1, spec.horizon):
        info = extend_info(spec, info, 1, 0)
        assert info.shared_obs == () and info.shared_act == ()
    assert len(info.own_obs) == spec.horizon


def test_extension_arguments_validated(example):
    i1 = enumerate_info(example, 1, 0)[0]
    with pytest.raises(ValueError, match="out of range"):
        extend_info(example, i1, 2, 0)
    with pytest.raises(ValueError, match="out of range"):
        extend_info(example, i1, 0, 5)
    with pytest.raises(ValueError, match="no entries are shared"):
        extend_info(example, i1, 0, 0, (1,), (0,))
    i2 = extend_info(example, i1, 0, 0)
    with pytest.raises(ValueError, match="shared observations"):
        extend_info(example, i2, 0, 0)
    with pytest.raises(ValueError, match="label out of range"):
        extend_info(example, i2, 0, 0, (3,), (0,))
    i3 = extend_info(example, i2, 0, 0, (0,), (0,))
    with pytest.raises(ValueError, match="horizon"):
        extend_info(example, i3, 0, 0, (0,), (0,))


@pytest.mark.parametrize("t,k", [(t, k) for t in (1, 2, 3) for k in (0, 1)])
def test_realization_counts(example, t, k):
    m = max(t - example.delay, 0)
    _, n_obs, n_act = window(t, example.delay)
    closed_form = (2 * 2) ** m * (2 * 2) ** m * 2 ** n_obs * 2 ** n_act
    assert len(enumerate_info(example, t, k)) == closed_form == info_count(example, t, k)


def test_enumeration_is_deterministic_and_indexed(example):
    for t in (1, 2, 3):
        infos = enumerate_info(example, t, 1)
        assert infos == tuple(enumerate_info.__wrapped__(example, t, 1))
        assert [info_index(example, i) for i in infos] == list(range(len(infos)))
        assert len(set(infos)) == len(infos)


def test_enumeration_order_is_lexicographic(example):
    tuples = [i.as_tuple() for i in enumerate_info(example, 3, 0)]
    assert tuples == sorted(tuples)


@st.composite
def realization_and_extension(draw):
    seed = draw(st.integers(0, 1000))
    K = draw(st.integers(1, 3))
    n = draw(st.integers(2, 4))
    T = draw(st.integers(1, n))
    spec = build_random_example(seed, num_agents=K, n_obs=draw(st.integers(1, 3)),
                                n_actions=draw(st.integers(1, 2)), horizon=n, delay=T)
    k = draw(st.integers(0, K - 1))
    t = draw(st.integers(1, n - 1))
    idx = draw(st.integers(0, info_count(spec, t, k) - 1))
    info = enumerate_info(spec, t, k)[idx]
    y = draw(st.integers(0, spec.n_obs(k) - 1))
    u = draw(st.integers(0, spec.n_actions(k) - 1))
    if t - T + 1 >= 1:
        others = [j for j in range(K) if j != k]
        ys = tuple(draw(st.integers(0, spec.n_obs(j) - 1)) for j in others)
        us = tuple(draw(st.integers(0, spec.n_actions(j) - 1)) for j in others)
    else:
        ys = us = ()
    return spec, info, y, u, ys, us


@settings(max_examples=150, deadline=None)
@given(realization_and_extension())
def test_extension_nests_and_slides(case):
    spec, info, y, u, ys, us = case
    nxt = extend_info(spec, info, y, u, ys, us)
    m = len(info.shared_obs)
    assert nxt.shared_obs[:m] == info.shared_obs
    assert nxt.shared_act[:m] == info.shared_act
    assert len(nxt.shared_obs) - m in (0, 1)
    # every entry of the old realization survives somewhere in the new one
    full_old = [s[info.agent] for s in info.shared_obs] + list(info.own_obs)
    full_new = [s[info.agent] for s in nxt.shared_obs] + list(nxt.own_obs)
    assert full_new == full_old + [y]
    acts_old = [s[info.agent] for s in info.shared_act] + list(info.own_act)
    acts_new = [s[info.agent] for s in nxt.shared_act] + list(nxt.own_act)
    assert acts_new == acts_old + [u]
    _, n_obs, n_act = window(info.stage + 1, spec.delay)
    assert (len(nxt.own_obs), len(nxt.own_act)) == (n_obs, n_act)
    assert 0 <= info_index(spec, nxt) < info_count(spec, nxt.stage, nxt.agent)


def test_history_roundtrip(example):
    obs = [(1, 0), (0, 1), (1, 1)]
    acts = [(1, 0), (0, 0)]
    i3 = info_from_history(example, 0, 3, obs, acts)
    assert i3.shared_obs == ((1, 0),) and i3.shared_act == ((1, 0),)
    assert i3.own_obs == (0, 1) and i3.own_act == (0,)
    assert lab(example, i3) == ("o2", "o1", "c2", "c1", "o1", "o2", "c1")


def test_reconstruct_other_agent_realization(example):
    # at t=3 the shared block plus y_2^j rebuilds agent j's stage-2 realization
    shared = (((1, 0),), ((1, 0),))
    j2 = reconstruct_info(example, 1, 2, shared, 1)
    assert j2.own_obs == (0, 1) and j2.own_act == (0,)
    with pytest.raises(ValueError):
        reconstruct_info(example, 1, 3, shared, 1)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_reconstruction_is_total(data):
    seed = data.draw(st.integers(0, 500))
    n = data.draw(st.integers(2, 4))
    T = data.draw(st.integers(1, n - 1))
    spec = build_random_example(seed, num_agents=2, horizon=n, delay=T)
    t = data.draw(st.integers(T + 1, n))
    shared = data.draw(st.sampled_from(enumerate_shared(spec, t)))
    j = data.draw(st.integers(0, 1))
    y = data.draw(st.integers(0, spec.n_obs(j) - 1))
    info = reconstruct_info(spec, j, t - T + 1, shared, y)
    assert info.stage == t - T + 1 and info.own_obs[-1] == y
    assert info.shared_obs == shared[0][:len(info.shared_obs)]


def test_consistency_vacuous_before_sharing(example):
    profile = StrategyProfile.random(example, 0)
    for t in (1, 2):
        for shared in enumerate_shared(example, t):
            assert shared_action_consistency(example, t, shared, profile)


def test_consistency_detects_contradiction(example):
    profile = StrategyProfile.constant(example, 0)
    assert shared_action_consistency(example, 3, (((1, 1),), ((0, 0),)), profile)
    assert not shared_action_consistency(example, 3, (((1, 1),), ((1, 0),)), profile)


def test_consistent_blocks_have_mass(example, converged):
    law = oracle.joint_law(example, converged)
    support = {(obs[:1], acts[:1]) for (_, obs, acts) in law}
    for shared in enumerate_shared(example, 3):
        consistent = shared_action_consistency(example, 3, shared, converged)
        assert consistent == (shared in support)


def test_profile_tables_and_serialization(example, converged):
    js = converged.to_json()
    assert set(js) == {f"t={t},agent={k}" for t in (1, 2, 3) for k in (0, 1)}
    assert js["t=1,agent=0"]["o2"] == "c2"
    other = converged.with_stage(1, 0, np.zeros(2, dtype=int))
    assert other != converged
    assert other.action(compose_info(0, 1, ((), ()), ((1,), ()))) == 0
    with pytest.raises(ValueError, match="shape"):
        converged.with_stage(1, 0, np.zeros(3, dtype=int))
    with pytest.raises(ValueError, match="invalid actions"):
        converged.with_stage(1, 0, np.array([0, 2]))


def test_private_space_size(example):
    assert len(private_space(example, 3, 0)) == 8
    assert len(private_space(example, 1, 1)) == 2
