"""Delayed-sharing information patterns.

At stage ``t`` agent ``k`` knows

* the shared block: every agent's observations and actions of stages
  ``1..t-T``;
* its private block: its own observations of stages ``max(1, t-T+1)..t`` and
  its own actions of stages ``max(1, t-T+1)..t-1``.

Realizations are stored with integer labels.  The canonical flat ordering
(used for enumeration, indexing and serialization) is::

    shared observations  (stage-major, agents 0..K-1 inside each stage)
    shared actions       (same layout)
    own observations     (stage-major)
    own actions          (stage-major)

Enumeration is lexicographic in that ordering, so the position of a
realization in :func:`enumerate_info` is its mixed-radix index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .model import ProblemSpec


def shared_length(t: int, T: int) -> int:
    """Number of stages in the shared block at stage ``t``."""
    return max(t - T, 0)


def window(t: int, T: int) -> tuple:
    """``(first_stage, n_obs, n_act)`` of a private block at stage ``t``."""
    first = max(1, t - T + 1)
    return first, t - first + 1, t - first


@dataclass(frozen=True)
class InfoRealization:
    """One realization ``i_t^k`` of agent ``k``'s information at stage ``t``.

    ``shared_obs[s - 1][j]`` / ``shared_act[s - 1][j]`` hold agent ``j``'s
    observation/action at stage ``s <= t - T``.  ``own_obs`` and ``own_act``
    cover the trailing private window.
    """

    agent: int
    stage: int
    shared_obs: tuple
    shared_act: tuple
    own_obs: tuple
    own_act: tuple

    @property
    def shared(self) -> tuple:
        return (self.shared_obs, self.shared_act)

    @property
    def private(self) -> tuple:
        return (self.own_obs, self.own_act)

    def as_tuple(self) -> tuple:
        flat = [y for stage in self.shared_obs for y in stage]
        flat += [u for stage in self.shared_act for u in stage]
        return tuple(flat) + self.own_obs + self.own_act

    def labels(self, spec: ProblemSpec) -> tuple:
        """Canonical tuple with label strings instead of indices."""
        out = []
        for stage in self.shared_obs:
            out += [spec.obs_labels[j][y] for j, y in enumerate(stage)]
        for stage in self.shared_act:
            out += [spec.action_labels[j][u] for j, u in enumerate(stage)]
        out += [spec.obs_labels[self.agent][y] for y in self.own_obs]
        out += [spec.action_labels[self.agent][u] for u in self.own_act]
        return tuple(out)


@lru_cache(maxsize=None)
def info_radices(spec: ProblemSpec, t: int, k: int) -> tuple:
    """Radix of every position of the canonical flat tuple."""
    K, T = spec.num_agents, spec.delay
    m = shared_length(t, T)
    _, n_obs, n_act = window(t, T)
    r = [spec.n_obs(j) for _ in range(m) for j in range(K)]
    r += [spec.n_actions(j) for _ in range(m) for j in range(K)]
    r += [spec.n_obs(k)] * n_obs + [spec.n_actions(k)] * n_act
    return tuple(r)


@lru_cache(maxsize=None)
def _places(spec: ProblemSpec, t: int, k: int) -> np.ndarray:
    r = info_radices(spec, t, k)
    places = np.ones(len(r), dtype=np.int64)
    for i in range(len(r) - 2, -1, -1):
        places[i] = places[i + 1] * r[i + 1]
    return places


def info_count(spec: ProblemSpec, t: int, k: int) -> int:
    return int(np.prod(info_radices(spec, t, k), dtype=np.int64))


def info_index(spec: ProblemSpec, info: InfoRealization) -> int:
    """Position of ``info`` in :func:`enumerate_info`."""
    flat = info.as_tuple()
    places = _places(spec, info.stage, info.agent)
    return int(sum(d * p for d, p in zip(flat, places)))


def _split_shared(flat, K, m):
    obs = tuple(tuple(flat[s * K:(s + 1) * K]) for s in range(m))
    off = m * K
    act = tuple(tuple(flat[off + s * K: off + (s + 1) * K]) for s in range(m))
    return obs, act


@lru_cache(maxsize=None)
def enumerate_shared(spec: ProblemSpec, t: int) -> tuple:
    """All shared blocks ``(obs, act)`` at stage ``t``, lexicographic order."""
    K, m = spec.num_agents, shared_length(t, spec.delay)
    radices = [spec.n_obs(j) for _ in range(m) for j in range(K)]
    radices += [spec.n_actions(j) for _ in range(m) for j in range(K)]
    return tuple(_split_shared(flat, K, m)
                 for flat in itertools.product(*(range(r) for r in radices)))


@lru_cache(maxsize=None)
def private_space(spec: ProblemSpec, t: int, k: int) -> tuple:
    """All private blocks ``(own_obs, own_act)`` of agent ``k`` at stage ``t``."""
    _, n_obs, n_act = window(t, spec.delay)
    radices = [spec.n_obs(k)] * n_obs + [spec.n_actions(k)] * n_act
    return tuple((flat[:n_obs], flat[n_obs:])
                 for flat in itertools.product(*(range(r) for r in radices)))


@lru_cache(maxsize=None)
def enumerate_info(spec: ProblemSpec, t: int, k: int) -> tuple:
    """All realizations of ``i_t^k`` in canonical (index) order."""
    if not 1 <= t <= spec.horizon:
        raise ValueError(f"stage {t} outside 1..{spec.horizon}")
    return tuple(InfoRealization(k, t, sh[0], sh[1], pr[0], pr[1])
                 for sh in enumerate_shared(spec, t)
                 for pr in private_space(spec, t, k))


def compose_info(k: int, t: int, shared: tuple, private: tuple) -> InfoRealization:
    return InfoRealization(k, t, shared[0], shared[1], private[0], private[1])


def slide_private(private: tuple, y_next: int, u: int, t: int, T: int) -> tuple:
    """Private block at ``t + 1`` from the block at ``t``, the new observation
    and the stage-``t`` action; the stage ``t - T + 1`` entries fall off."""
    obs, act = private[0] + (y_next,), private[1] + (u,)
    if t - T + 1 >= 1:
        obs, act = obs[1:], act[1:]
    return obs, act


def dropped_entries(private: tuple, u: int, t: int, T: int):
    """Entries of stage ``t - T + 1`` that move into the shared block at
    ``t + 1`` (``None`` while the window is still filling)."""
    if t - T + 1 < 1:
        return None
    return private[0][0], (private[1] + (u,))[0]


def extend_info(spec: ProblemSpec, info: InfoRealization, y_next: int, u: int,
                others_obs: Sequence[int] = (), others_act: Sequence[int] = ()) -> InfoRealization:
    """``i_{t+1}^k`` from ``i_t^k``, the new own observation, the own action
    ``u_t^k`` and the other agents' stage ``t - T + 1`` observations/actions.

    ``others_obs`` / ``others_act`` list the entries of agents ``j != k`` in
    increasing ``j``; they must be empty while ``t + 1 <= T``.
    """
    k, t, T, K = info.agent, info.stage, spec.delay, spec.num_agents
    if t >= spec.horizon:
        raise ValueError(f"cannot extend past the horizon (stage {t})")
    if not 0 <= y_next < spec.n_obs(k):
        raise ValueError(f"observation {y_next} out of range for agent {k}")
    if not 0 <= u < spec.n_actions(k):
        raise ValueError(f"action {u} out of range for agent {k}")
    others = [j for j in range(K) if j != k]
    drop = dropped_entries(info.private, u, t, T)
    if drop is None:
        if others_obs or others_act:
            raise ValueError(f"no entries are shared when moving to stage {t + 1} <= T={T}")
        shared_obs, shared_act = info.shared_obs, info.shared_act
    else:
        if len(others_obs) != K - 1 or len(others_act) != K - 1:
            raise ValueError(f"need {K - 1} shared observations and actions of the other agents")
        ys, us = [0] * K, [0] * K
        ys[k], us[k] = drop
        for j, y, a in zip(others, others_obs, others_act):
            if not 0 <= y < spec.n_obs(j) or not 0 <= a < spec.n_actions(j):
                raise ValueError(f"label out of range for agent {j}")
            ys[j], us[j] = y, a
        shared_obs = info.shared_obs + (tuple(ys),)
        shared_act = info.shared_act + (tuple(us),)
    own = slide_private(info.private, y_next, u, t, T)
    return InfoRealization(k, t + 1, shared_obs, shared_act, own[0], own[1])


def info_from_history(spec: ProblemSpec, k: int, t: int, obs: Sequence, acts: Sequence) -> InfoRealization:
    """Agent ``k``'s realization at ``t`` from a joint history.

    ``obs[s - 1][j]`` for ``s <= t`` and ``acts[s - 1][j]`` for ``s < t``.
    Entries that ``k`` cannot see are never read and may be ``None``.
    """
    T = spec.delay
    m = shared_length(t, T)
    first, _, _ = window(t, T)
    return InfoRealization(
        k, t,
        tuple(tuple(obs[s]) for s in range(m)),
        tuple(tuple(acts[s]) for s in range(m)),
        tuple(obs[s - 1][k] for s in range(first, t + 1)),
        tuple(acts[s - 1][k] for s in range(first, t)),
    )


def reconstruct_info(spec: ProblemSpec, j: int, s: int, shared: tuple, y: int) -> InfoRealization:
    """Agent ``j``'s realization at stage ``s = t - T + 1`` rebuilt from the
    shared block ``shared`` of stage ``t`` plus ``y_s^j``."""
    obs_blocks, act_blocks = shared
    m = len(obs_blocks)
    if s != m + 1:
        raise ValueError(f"stage {s} is not t - T + 1 for a shared block of length {m}")
    K = spec.num_agents
    obs = list(obs_blocks) + [tuple(y if i == j else None for i in range(K))]
    return info_from_history(spec, j, s, obs, act_blocks)


class StrategyProfile:
    """Deterministic strategies of all agents.

    ``tables[t - 1][k]`` is an integer array mapping the index of every
    realization in ``enumerate_info(spec, t, k)`` to an action index.
    """

    def __init__(self, spec: ProblemSpec, tables):
        self.spec = spec
        self.tables = [[np.array(tables[t][k], dtype=np.int64) for k in range(spec.num_agents)]
                       for t in range(spec.horizon)]
        for t in range(spec.horizon):
            for k in range(spec.num_agents):
                tab = self.tables[t][k]
                if tab.shape != (info_count(spec, t + 1, k),):
                    raise ValueError(f"strategy table (t={t + 1}, k={k}) has shape {tab.shape}")
                if tab.size and (tab.min() < 0 or tab.max() >= spec.n_actions(k)):
                    raise ValueError(f"strategy table (t={t + 1}, k={k}) has invalid actions")
                tab.setflags(write=False)

    @classmethod
    def constant(cls, spec: ProblemSpec, action: int = 0) -> "StrategyProfile":
        return cls(spec, [[np.full(info_count(spec, t, k), action)
                           for k in range(spec.num_agents)]
                          for t in range(1, spec.horizon + 1)])

    @classmethod
    def random(cls, spec: ProblemSpec, seed=None) -> "StrategyProfile":
        rng = np.random.default_rng(seed)
        return cls(spec, [[rng.integers(0, spec.n_actions(k), info_count(spec, t, k))
                           for k in range(spec.num_agents)]
                          for t in range(1, spec.horizon + 1)])

    def action(self, info: InfoRealization) -> int:
        return int(self.tables[info.stage - 1][info.agent][info_index(self.spec, info)])

    def __call__(self, info: InfoRealization) -> int:
        return self.action(info)

    def agent_tables(self, k: int) -> list:
        return [self.tables[t][k] for t in range(self.spec.horizon)]

    def with_agent(self, k: int, tables) -> "StrategyProfile":
        new = [list(row) for row in self.tables]
        for t in range(self.spec.horizon):
            new[t][k] = tables[t]
        return StrategyProfile(self.spec, new)

    def with_stage(self, t: int, k: int, table) -> "StrategyProfile":
        new = [list(row) for row in self.tables]
        new[t - 1][k] = table
        return StrategyProfile(self.spec, new)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StrategyProfile) or other.spec is not self.spec:
            return NotImplemented
        return all(np.array_equal(a, b) for ra, rb in zip(self.tables, other.tables)
                   for a, b in zip(ra, rb))

    __hash__ = None

    def to_json(self) -> dict:
        """Strategies keyed by canonical label tuples."""
        spec = self.spec
        out = {}
        for t in range(1, spec.horizon + 1):
            for k in range(spec.num_agents):
                acts = self.tables[t - 1][k]
                out[f"t={t},agent={k}"] = {
                    ",".join(info.labels(spec)): spec.action_labels[k][int(a)]
                    for info, a in zip(enumerate_info(spec, t, k), acts)}
        return out


def shared_action_consistency(spec: ProblemSpec, t: int, shared: tuple, profile) -> bool:
    """True iff every action recorded in the shared block of stage ``t`` is
    the one ``profile`` prescribes on the realization it was taken at."""
    obs_blocks, act_blocks = shared
    for s in range(1, len(obs_blocks) + 1):
        for j in range(spec.num_agents):
            info = info_from_history(spec, j, s, obs_blocks, act_blocks)
            if profile.action(info) != act_blocks[s - 1][j]:
                return False
    return True
