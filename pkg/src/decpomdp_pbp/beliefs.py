"""Recursive posteriors for delayed-sharing patterns.

Three filters live here:

* the private posterior of agent ``k`` over the state and the other agents'
  private blocks, given ``i_t^k`` (the other agents' strategies are fixed,
  agent ``k``'s own actions are read from the realization);
* the strategy-free posterior over the state ``x_{t-T}`` given the shared
  block only;
* the strategy-dependent posterior over the current state and *all* private
  blocks given the shared block.

Posteriors are dense arrays over ``X x (private-block enumeration)`` with
exact zeros off-support.  A zero normalizer is reported by returning ``None``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .info import (
    InfoRealization,
    compose_info,
    dropped_entries,
    private_space,
    slide_private,
)
from .model import ProblemSpec


class ImpossibleObservationError(ValueError):
    pass


@lru_cache(maxsize=None)
def others_private_space(spec: ProblemSpec, t: int, k: int) -> tuple:
    """Joint private blocks of agents ``j != k`` (increasing ``j``)."""
    others = [j for j in range(spec.num_agents) if j != k]
    return tuple(itertools.product(*(private_space(spec, t, j) for j in others)))


@lru_cache(maxsize=None)
def _others_index(spec, t, k):
    return {lam: i for i, lam in enumerate(others_private_space(spec, t, k))}


@lru_cache(maxsize=None)
def joint_private_space(spec: ProblemSpec, t: int) -> tuple:
    """Private blocks of all agents at stage ``t``."""
    return tuple(itertools.product(*(private_space(spec, t, j)
                                     for j in range(spec.num_agents))))


@lru_cache(maxsize=None)
def _joint_index(spec, t):
    return {lam: i for i, lam in enumerate(joint_private_space(spec, t))}


def _others(spec, k):
    return [j for j in range(spec.num_agents) if j != k]


def _joint(K, k, u, others, u_others):
    joint = [0] * K
    joint[k] = u
    for j, a in zip(others, u_others):
        joint[j] = a
    return tuple(joint)


@dataclass(frozen=True, eq=False)
class PrivatePosterior:
    """``probs[x, l]``: mass on state ``x`` and the ``l``-th entry of
    ``others_private_space(spec, stage, agent)``."""

    agent: int
    stage: int
    probs: np.ndarray

    def state_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def key(self, decimals: int = 10) -> tuple:
        """Rounded, hashable form for grouping realizations."""
        return tuple(np.round(self.probs, decimals).ravel().tolist())


def private_init(spec: ProblemSpec, k: int, y: int) -> PrivatePosterior:
    """Posterior of ``(x_1, y_1^{-k})`` given agent ``k``'s first observation."""
    others = _others(spec, k)
    space = others_private_space(spec, 1, k)
    probs = np.zeros((spec.n_states, len(space)))
    base = spec.initial * spec.initial_obs[k][:, y]
    for li, lam in enumerate(space):
        w = base.copy()
        for j, block in zip(others, lam):
            w = w * spec.initial_obs[j][:, block[0][0]]
        probs[:, li] = w
    total = probs.sum()
    if total <= 0:
        raise ImpossibleObservationError(
            f"observation {spec.obs_labels[k][y]!r} of agent {k} has zero probability at stage 1")
    return PrivatePosterior(k, 1, probs / total)


def other_actions(spec: ProblemSpec, info: InfoRealization, lam, profile) -> tuple:
    """Stage-``t`` actions the others take on their private blocks ``lam``."""
    t = info.stage
    return tuple(profile.action(compose_info(j, t, info.shared, block))
                 for j, block in zip(_others(spec, info.agent), lam))


def update_unnormalized(spec: ProblemSpec, xi: PrivatePosterior, info: InfoRealization,
                        y_next: int, u: int, profile, others_obs=(), others_act=()) -> np.ndarray:
    """Unnormalized posterior of ``(x_{t+1}, lambda_{t+1}^{-k})``.

    Its total mass is the conditional probability of the new own observation
    and the newly shared entries given ``i_t^k`` and ``u``.
    """
    k, t, T, K = info.agent, info.stage, spec.delay, spec.num_agents
    others = _others(spec, k)
    next_index = _others_index(spec, t + 1, k)
    out = np.zeros((spec.n_states, len(next_index)))
    dropping = t - T + 1 >= 1
    if T == 1:
        # the revealed actions must be what the others' strategies prescribe
        for j, yj, aj in zip(others, others_obs, others_act):
            if profile.action(compose_info(j, t, info.shared, ((yj,), ()))) != aj:
                return out
    other_obs_ranges = [range(spec.n_obs(j)) for j in others]
    for li, lam in enumerate(others_private_space(spec, t, k)):
        col = xi.probs[:, li]
        if not col.any():
            continue
        if T == 1:
            # stage-t actions of the others are already in i_{t+1}^k
            u_others = tuple(others_act)
        else:
            u_others = other_actions(spec, info, lam, profile)
        if dropping:
            drops = [dropped_entries(block, a, t, T) for block, a in zip(lam, u_others)]
            if tuple(d[0] for d in drops) != tuple(others_obs):
                continue
            if tuple(d[1] for d in drops) != tuple(others_act):
                continue
        joint = _joint(K, k, u, others, u_others)
        pred = col @ spec.transition[(slice(None), *joint)]
        pred = pred * spec.observation[k][(slice(None), *joint, y_next)]
        for ys in itertools.product(*other_obs_ranges):
            w = pred
            for j, yj in zip(others, ys):
                w = w * spec.observation[j][(slice(None), *joint, yj)]
            lam_next = tuple(slide_private(block, yj, a, t, T)
                             for block, yj, a in zip(lam, ys, u_others))
            out[:, next_index[lam_next]] += w
    return out


def private_update(spec: ProblemSpec, xi: PrivatePosterior, info: InfoRealization,
                   y_next: int, u: int, profile, others_obs=(), others_act=()):
    """Posterior at ``t + 1`` for the realization
    ``extend_info(spec, info, y_next, u, others_obs, others_act)``.

    ``profile`` supplies the other agents' strategies (agent ``k``'s entries
    are never read).  Returns ``None`` when that realization has zero
    probability given ``xi``.
    """
    out = update_unnormalized(spec, xi, info, y_next, u, profile, others_obs, others_act)
    total = out.sum()
    if total <= 0:
        return None
    return PrivatePosterior(info.agent, info.stage + 1, out / total)


def stage_transition_measure(spec: ProblemSpec, xi: PrivatePosterior, info: InfoRealization,
                             u: int, profile) -> np.ndarray:
    """Joint measure of ``(y_{t+1}^k, lambda_t^{-k}, x_t, x_{t+1})`` given
    ``(xi, shared block, u)``; indexed ``[y, l, x, x_next]``."""
    k, K = info.agent, spec.num_agents
    others = _others(spec, k)
    space = others_private_space(spec, info.stage, k)
    nx = spec.n_states
    out = np.zeros((spec.n_obs(k), len(space), nx, nx))
    for li, lam in enumerate(space):
        col = xi.probs[:, li]
        if not col.any():
            continue
        joint = _joint(K, k, u, others, other_actions(spec, info, lam, profile))
        trans = col[:, None] * spec.transition[(slice(None), *joint)]
        q = spec.observation[k][(slice(None), *joint)]  # [x_next, y]
        out[:, li] = q.T[:, None, :] * trans[None]
    return out


def predictive_obs(spec: ProblemSpec, xi: PrivatePosterior, info: InfoRealization,
                   u: int, profile) -> np.ndarray:
    """Distribution of agent ``k``'s next observation given ``(xi, shared, u)``."""
    return stage_transition_measure(spec, xi, info, u, profile).sum(axis=(1, 2, 3))


# --- shared-block posteriors ------------------------------------------------

def theta_init(spec: ProblemSpec, y1) -> np.ndarray | None:
    """Posterior of ``x_1`` given every agent's first observation."""
    w = spec.initial.copy()
    for j, y in enumerate(y1):
        w = w * spec.initial_obs[j][:, y]
    total = w.sum()
    return None if total <= 0 else w / total


def theta_update(spec: ProblemSpec, theta: np.ndarray, y_joint, u_joint) -> np.ndarray | None:
    """Shift the shared-state posterior by one stage.

    ``u_joint`` are the actions of stage ``t - T`` and ``y_joint`` the
    observations of stage ``t - T + 1``.  No strategy enters.
    """
    w = theta @ spec.transition[(slice(None), *u_joint)]
    for j, y in enumerate(y_joint):
        w = w * spec.observation[j][(slice(None), *u_joint, y)]
    total = w.sum()
    return None if total <= 0 else w / total


def theta_from_shared(spec: ProblemSpec, shared) -> np.ndarray | None:
    """Posterior of ``x_{t-T}`` given a shared block of length ``t - T >= 1``."""
    obs, act = shared
    if not obs:
        raise ValueError("the shared block is empty; theta is defined for t >= T + 1")
    theta = theta_init(spec, obs[0])
    for s in range(1, len(obs)):
        if theta is None:
            return None
        theta = theta_update(spec, theta, obs[s], act[s - 1])
    return theta


@dataclass(frozen=True, eq=False)
class CentralizedPosteriorPi:
    """``probs[x, l]`` over the state and ``joint_private_space(spec, stage)``."""

    stage: int
    probs: np.ndarray


def pi_init(spec: ProblemSpec) -> CentralizedPosteriorPi:
    space = joint_private_space(spec, 1)
    probs = np.zeros((spec.n_states, len(space)))
    for li, lam in enumerate(space):
        w = spec.initial.copy()
        for j, block in enumerate(lam):
            w = w * spec.initial_obs[j][:, block[0][0]]
        probs[:, li] = w
    return CentralizedPosteriorPi(1, probs)


def pi_update_unnormalized(spec: ProblemSpec, pi: CentralizedPosteriorPi, shared, profile,
                           revealed_obs=None, revealed_act=None) -> np.ndarray:
    """Unnormalized ``pi_{t+1}``; ``revealed_*`` are the stage ``t - T + 1``
    entries of all agents joining the shared block (``None`` while
    ``t + 1 <= T``)."""
    t, T, K = pi.stage, spec.delay, spec.num_agents
    next_index = _joint_index(spec, t + 1)
    out = np.zeros((spec.n_states, len(next_index)))
    obs_ranges = [range(spec.n_obs(j)) for j in range(K)]
    for li, lam in enumerate(joint_private_space(spec, t)):
        col = pi.probs[:, li]
        if not col.any():
            continue
        joint = tuple(profile.action(compose_info(j, t, shared, lam[j])) for j in range(K))
        if t - T + 1 >= 1:
            drops = [dropped_entries(block, a, t, T) for block, a in zip(lam, joint)]
            if tuple(d[0] for d in drops) != tuple(revealed_obs):
                continue
            if tuple(d[1] for d in drops) != tuple(revealed_act):
                continue
        pred = col @ spec.transition[(slice(None), *joint)]
        for ys in itertools.product(*obs_ranges):
            w = pred
            for j, yj in enumerate(ys):
                w = w * spec.observation[j][(slice(None), *joint, yj)]
            lam_next = tuple(slide_private(block, yj, a, t, T)
                             for block, yj, a in zip(lam, ys, joint))
            out[:, next_index[lam_next]] += w
    return out


def pi_update(spec: ProblemSpec, pi: CentralizedPosteriorPi, shared, profile,
              revealed_obs=None, revealed_act=None) -> CentralizedPosteriorPi | None:
    out = pi_update_unnormalized(spec, pi, shared, profile, revealed_obs, revealed_act)
    total = out.sum()
    if total <= 0:
        return None
    return CentralizedPosteriorPi(pi.stage + 1, out / total)


def pi_forward(spec: ProblemSpec, profile) -> list:
    """``result[t - 1]`` maps each shared block of positive probability to
    ``(P(shared), pi_t)``."""
    T = spec.delay
    layers = [{((), ()): (1.0, pi_init(spec))}]
    for t in range(1, spec.horizon):
        nxt = {}
        for shared, (p, pi) in layers[-1].items():
            if t - T + 1 < 1:
                out = pi_update_unnormalized(spec, pi, shared, profile)
                nxt[shared] = (p, CentralizedPosteriorPi(t + 1, out / out.sum()))
                continue
            K = spec.num_agents
            for ys in itertools.product(*(range(spec.n_obs(j)) for j in range(K))):
                for us in spec.joint_actions():
                    out = pi_update_unnormalized(spec, pi, shared, profile, ys, us)
                    mass = out.sum()
                    if mass <= 0:
                        continue
                    new_shared = (shared[0] + (ys,), shared[1] + (us,))
                    nxt[new_shared] = (p * mass, CentralizedPosteriorPi(t + 1, out / mass))
        layers.append(nxt)
    return layers


def pi_from_shared(spec: ProblemSpec, t: int, shared, profile) -> CentralizedPosteriorPi | None:
    """``pi_t`` for a given shared block of stage ``t``."""
    T = spec.delay
    obs, act = shared
    pi = pi_init(spec)
    for s in range(1, t):
        if pi is None:
            return None
        m = s - T + 1  # stage whose entries become shared at s + 1
        prefix = (obs[:max(s - T, 0)], act[:max(s - T, 0)])
        if m >= 1:
            pi = pi_update(spec, pi, prefix, profile, obs[m - 1], act[m - 1])
        else:
            pi = pi_update(spec, pi, prefix, profile)
    return pi


def payoff_via_pi(spec: ProblemSpec, profile) -> float:
    """Expected total cost computed from the shared-block posteriors."""
    total = 0.0
    K = spec.num_agents
    for t, layer in enumerate(pi_forward(spec, profile), start=1):
        space = joint_private_space(spec, t)
        for shared, (p, pi) in layer.items():
            for li, lam in enumerate(space):
                col = pi.probs[:, li]
                if not col.any():
                    continue
                joint = tuple(profile.action(compose_info(j, t, shared, lam[j])) for j in range(K))
                total += p * float(col @ spec.cost[(t - 1, slice(None), *joint)])
    return total
