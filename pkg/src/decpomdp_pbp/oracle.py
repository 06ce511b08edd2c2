"""Brute-force reference computations.

Everything here works from full histories and the raw kernels.  The only
pieces shared with the solver are the realization bookkeeping in
:mod:`decpomdp_pbp.info` and, for the common-information recursion, the
shared-block posterior update.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np

from .beliefs import joint_private_space, others_private_space, pi_init, pi_update_unnormalized
from .info import (
    StrategyProfile,
    compose_info,
    enumerate_info,
    info_count,
    info_from_history,
    info_index,
    shared_length,
    window,
)
from .model import ProblemSpec


class SizeGuardError(ValueError):
    pass


def _others(spec, k):
    return [j for j in range(spec.num_agents) if j != k]


def _others_block(spec, k, t, obs, acts):
    """Joint private blocks of the agents other than ``k`` in a history."""
    return tuple(info_from_history(spec, j, t, obs, acts).private for j in _others(spec, k))


def _joint_private(spec, t, obs, acts):
    return tuple(info_from_history(spec, j, t, obs, acts).private
                 for j in range(spec.num_agents))


# --- the joint law ----------------------------------------------------------

def joint_law(spec: ProblemSpec, profile: StrategyProfile) -> dict:
    """``{(states, observations, actions): probability}`` over full
    trajectories; ``observations[t - 1]`` and ``actions[t - 1]`` are joint
    tuples.  Only profile-consistent trajectories appear."""
    K, n = spec.num_agents, spec.horizon
    obs_space = list(itertools.product(*(range(spec.n_obs(j)) for j in range(K))))
    layer = {}
    for x in range(spec.n_states):
        for ys in obs_space:
            w = spec.initial[x] * math.prod(spec.initial_obs[j][x, y] for j, y in enumerate(ys))
            if w > 0:
                layer[((x,), (ys,), ())] = w
    for t in range(1, n + 1):
        nxt = {}
        for (xs, obs, acts), w in layer.items():
            us = tuple(profile.action(info_from_history(spec, j, t, obs, acts)) for j in range(K))
            if t == n:
                nxt[(xs, obs, acts + (us,))] = w
                continue
            for x2 in range(spec.n_states):
                p = w * spec.transition[(xs[-1], *us, x2)]
                if p <= 0:
                    continue
                for ys in obs_space:
                    q = p * math.prod(spec.observation[j][(x2, *us, y)] for j, y in enumerate(ys))
                    if q > 0:
                        nxt[(xs + (x2,), obs + (ys,), acts + (us,))] = q
        layer = nxt
    return layer


def exact_payoff(spec: ProblemSpec, profile: StrategyProfile) -> float:
    total = 0.0
    for (xs, _, acts), p in joint_law(spec, profile).items():
        total += p * sum(spec.cost[(t, x, *u)] for t, (x, u) in enumerate(zip(xs, acts)))
    return float(total)


def exhaustive_theta(spec: ProblemSpec, profile: StrategyProfile, t: int) -> dict:
    """``{shared block: P(x_{t-T} | shared block)}`` for ``t > T``."""
    m = shared_length(t, spec.delay)
    if m == 0:
        raise ValueError(f"no shared block at stage {t}")
    acc = defaultdict(lambda: np.zeros(spec.n_states))
    for (xs, obs, acts), p in joint_law(spec, profile).items():
        acc[(obs[:m], acts[:m])][xs[m - 1]] += p
    return {k: v / v.sum() for k, v in acc.items()}


def exhaustive_pi(spec: ProblemSpec, profile: StrategyProfile, t: int) -> dict:
    """``{shared block: P(x_t, all private blocks | shared block)}`` indexed
    like :func:`~decpomdp_pbp.beliefs.joint_private_space`."""
    m = shared_length(t, spec.delay)
    index = {lam: i for i, lam in enumerate(joint_private_space(spec, t))}
    acc = defaultdict(lambda: np.zeros((spec.n_states, len(index))))
    for (xs, obs, acts), p in joint_law(spec, profile).items():
        lam = _joint_private(spec, t, obs[:t], acts[:t - 1])
        acc[(obs[:m], acts[:m])][xs[t - 1], index[lam]] += p
    return {k: v / v.sum() for k, v in acc.items()}


def posterior_from_joint_law(spec: ProblemSpec, profile: StrategyProfile, info):
    """``P(x_t, others' private blocks | info)`` under the full profile,
    agent ``k``'s own strategy included; ``None`` off-support."""
    k, t = info.agent, info.stage
    index = {lam: i for i, lam in enumerate(others_private_space(spec, t, k))}
    acc = np.zeros((spec.n_states, len(index)))
    for (xs, obs, acts), p in joint_law(spec, profile).items():
        if info_from_history(spec, k, t, obs[:t], acts[:t - 1]) == info:
            acc[xs[t - 1], index[_others_block(spec, k, t, obs[:t], acts[:t - 1])]] += p
    total = acc.sum()
    return None if total <= 0 else acc / total


# --- single-agent view with own actions left free -------------------------

def prefix_law(spec: ProblemSpec, k: int, profile: StrategyProfile) -> list:
    """Forward enumeration of histories with agent ``k``'s actions branching
    freely and everyone else following ``profile``.

    ``result[t - 1]`` maps ``(x_t, observations, actions)`` (actions up to
    ``t - 1``) to its weight.  Restricting to one choice of own actions
    gives the law under any strategy that makes those choices.
    """
    K, n = spec.num_agents, spec.horizon
    obs_space = list(itertools.product(*(range(spec.n_obs(j)) for j in range(K))))
    layer = {}
    for x in range(spec.n_states):
        for ys in obs_space:
            w = spec.initial[x] * math.prod(spec.initial_obs[j][x, y] for j, y in enumerate(ys))
            if w > 0:
                layer[(x, (ys,), ())] = layer.get((x, (ys,), ()), 0.0) + w
    layers = [layer]
    for t in range(1, n):
        nxt = defaultdict(float)
        for (x, obs, acts), w in layers[-1].items():
            others = {j: profile.action(info_from_history(spec, j, t, obs, acts))
                      for j in _others(spec, k)}
            for u in range(spec.n_actions(k)):
                us = tuple(u if j == k else others[j] for j in range(K))
                for x2 in range(spec.n_states):
                    p = w * spec.transition[(x, *us, x2)]
                    if p <= 0:
                        continue
                    for ys in obs_space:
                        q = p * math.prod(spec.observation[j][(x2, *us, y)]
                                          for j, y in enumerate(ys))
                        if q > 0:
                            nxt[(x2, obs + (ys,), acts + (us,))] += q
        layers.append(dict(nxt))
    return layers


def exhaustive_posteriors(spec: ProblemSpec, k: int, profile: StrategyProfile, t: int,
                          law=None) -> dict:
    """``{info: (P(info), posterior over X x others' private blocks)}`` for
    every realization that some own-action choice reaches."""
    law = law or prefix_law(spec, k, profile)
    index = {lam: i for i, lam in enumerate(others_private_space(spec, t, k))}
    acc = {}
    for (x, obs, acts), w in law[t - 1].items():
        info = info_from_history(spec, k, t, obs, acts)
        arr = acc.setdefault(info, np.zeros((spec.n_states, len(index))))
        arr[x, index[_others_block(spec, k, t, obs, acts)]] += w
    return {info: (float(a.sum()), a / a.sum()) for info, a in acc.items()}


def exhaustive_posterior(spec: ProblemSpec, k: int, profile: StrategyProfile, info):
    """Posterior for one realization, or ``None`` if it cannot occur."""
    return exhaustive_posteriors(spec, k, profile, info.stage).get(info, (0.0, None))[1]


def _history_tree(spec, k, profile):
    """Per stage: ``{info: [P(info), cost per own action]}`` and
    ``{info: {action: {child info: P(child)}}}``."""
    law = prefix_law(spec, k, profile)
    K, n = spec.num_agents, spec.horizon
    stats, kids = [], []
    for t in range(1, n + 1):
        st = {}
        ch = defaultdict(lambda: defaultdict(lambda: defaultdict(float)))
        for (x, obs, acts), w in law[t - 1].items():
            info = info_from_history(spec, k, t, obs, acts)
            entry = st.setdefault(info, [0.0, np.zeros(spec.n_actions(k))])
            entry[0] += w
            others = {j: profile.action(info_from_history(spec, j, t, obs, acts))
                      for j in _others(spec, k)}
            for u in range(spec.n_actions(k)):
                us = tuple(u if j == k else others[j] for j in range(K))
                entry[1][u] += w * spec.cost[(t - 1, x, *us)]
            if t > 1:
                parent = info_from_history(spec, k, t - 1, obs[:-1], acts[:-1])
                ch[parent][acts[-1][k]][info] += w
        stats.append(st)
        if t > 1:
            kids.append(ch)
    return stats, kids


def tree_values(spec: ProblemSpec, k: int, profile: StrategyProfile, optimize: bool = True):
    """Backward induction on agent ``k``'s raw history tree.

    With ``optimize`` the agent picks the cheapest action (lowest index on
    ties); otherwise it follows ``profile``.  Returns per-stage value and
    action maps and the expected total cost.
    """
    stats, kids = _history_tree(spec, k, profile)
    n = spec.horizon
    values = [dict() for _ in range(n)]
    actions = [dict() for _ in range(n)]
    for t in range(n, 0, -1):
        for info, (p, cost) in stats[t - 1].items():
            q = cost / p
            if t < n:
                for u, children in kids[t - 1].get(info, {}).items():
                    q[u] += sum(w * values[t][c] for c, w in children.items()) / p
            u = int(np.flatnonzero(q <= q.min() + 1e-12)[0]) if optimize else profile.action(info)
            values[t - 1][info] = float(q[u])
            actions[t - 1][info] = u
    total = sum(p * values[0][i] for i, (p, _) in stats[0].items())
    return values, actions, float(total)


def tree_best_response(spec: ProblemSpec, k: int, profile: StrategyProfile):
    """``(strategy tables for k, payoff)`` of agent ``k``'s exact best response."""
    _, actions, total = tree_values(spec, k, profile)
    tables = []
    for t in range(1, spec.horizon + 1):
        tab = np.zeros(info_count(spec, t, k), dtype=np.int64)
        for info, u in actions[t - 1].items():
            tab[info_index(spec, info)] = u
        tables.append(tab)
    return tables, total


def next_posterior_law(spec: ProblemSpec, k: int, profile: StrategyProfile, t: int,
                       decimals: int = 10) -> dict:
    """``{(info, u): {rounded next posterior: probability}}`` for every
    reachable stage-``t`` realization and own action."""
    law = prefix_law(spec, k, profile)
    now = exhaustive_posteriors(spec, k, profile, t, law)
    nxt = exhaustive_posteriors(spec, k, profile, t + 1, law)
    out = defaultdict(lambda: defaultdict(float))
    for child, (pc, post) in nxt.items():
        parent = _parent(spec, child)
        u = child.own_act[-1] if child.own_act else child.shared_act[-1][k]
        key = tuple(np.round(post, decimals).ravel().tolist())
        out[(parent, u)][key] += pc / now[parent][0]
    return {key: dict(v) for key, v in out.items()}


def markov_check(spec: ProblemSpec, k: int, profile: StrategyProfile,
                 decimals: int = 10) -> dict:
    """Group reachable ``(info, u)`` by (posterior, shared block, u) and
    measure how far the next-posterior laws differ inside a group."""
    law = prefix_law(spec, k, profile)
    worst, pairs, buckets = 0.0, 0, {}
    for t in range(1, spec.horizon):
        now = exhaustive_posteriors(spec, k, profile, t, law)
        for (info, u), dist in next_posterior_law(spec, k, profile, t, decimals).items():
            pairs += 1
            key = (t, tuple(np.round(now[info][1], decimals).ravel().tolist()), info.shared, u)
            ref = buckets.setdefault(key, dist)
            for post in set(ref) | set(dist):
                worst = max(worst, abs(ref.get(post, 0.0) - dist.get(post, 0.0)))
    return {"pairs": pairs, "groups": len(buckets), "max_diff": worst}


def _parent(spec, child):
    """Stage ``t`` realization that ``child`` (stage ``t + 1``) extends."""
    k, t, T = child.agent, child.stage - 1, spec.delay
    m = shared_length(t, T)
    first, n_obs, n_act = window(t, T)
    obs = [blk for blk in child.shared_obs] + [
        tuple(y if j == k else None for j in range(spec.num_agents)) for y in child.own_obs]
    acts = [blk for blk in child.shared_act] + [
        tuple(u if j == k else None for j in range(spec.num_agents)) for u in child.own_act]
    return info_from_history(spec, k, t, obs[:t], acts[:t - 1])


# --- team optimum -----------------------------------------------------------

def _strategy_space_bound(spec):
    """log10 of the number of deterministic joint profiles once recorded
    actions are tied to strategies (only observations vary freely)."""
    total = 0.0
    for t in range(1, spec.horizon + 1):
        for k in range(spec.num_agents):
            m = shared_length(t, spec.delay)
            _, n_obs, _ = window(t, spec.delay)
            combos = math.prod(spec.n_obs(j) for j in range(spec.num_agents)) ** m
            combos *= spec.n_obs(k) ** n_obs
            total += combos * math.log10(spec.n_actions(k))
    return total


def enumerate_team_optimal(spec: ProblemSpec, guard: float = 1e7):
    """Exhaustive minimum of the expected cost over joint deterministic profiles.

    Earlier stages are enumerated explicitly; for each, every joint
    assignment of last-stage actions over the reachable realizations is
    scored with one tensor contraction.
    """
    if _strategy_space_bound(spec) > math.log10(guard):
        raise SizeGuardError(
            f"about 10^{_strategy_space_bound(spec):.1f} joint profiles exceeds the guard {guard:g}")
    K, n = spec.num_agents, spec.horizon
    obs_space = list(itertools.product(*(range(spec.n_obs(j)) for j in range(K))))
    start = defaultdict(float)
    for x in range(spec.n_states):
        for ys in obs_space:
            w = spec.initial[x] * math.prod(spec.initial_obs[j][x, y] for j, y in enumerate(ys))
            if w > 0:
                start[(x, (ys,), ())] += w
    best = [math.inf, None]

    def stage_infos(t, layer):
        per_agent = [sorted({info_from_history(spec, j, t, obs, acts) for (_, obs, acts) in layer},
                            key=lambda i: info_index(spec, i)) for j in range(K)]
        return per_agent

    def recurse(t, layer, chosen, so_far):
        infos = stage_infos(t, layer)
        if t == n:
            _score_last(t, layer, infos, chosen, so_far)
            return
        for assign in itertools.product(*(itertools.product(range(spec.n_actions(j)),
                                                            repeat=len(infos[j]))
                                          for j in range(K))):
            acts_of = [dict(zip(infos[j], assign[j])) for j in range(K)]
            cost = 0.0
            nxt = defaultdict(float)
            for (x, obs, acts), w in layer.items():
                us = tuple(acts_of[j][info_from_history(spec, j, t, obs, acts)] for j in range(K))
                cost += w * spec.cost[(t - 1, x, *us)]
                for x2 in range(spec.n_states):
                    p = w * spec.transition[(x, *us, x2)]
                    if p <= 0:
                        continue
                    for ys in obs_space:
                        q = p * math.prod(spec.observation[j][(x2, *us, y)]
                                          for j, y in enumerate(ys))
                        if q > 0:
                            nxt[(x2, obs + (ys,), acts + (us,))] += q
            recurse(t + 1, nxt, chosen + [acts_of], so_far + cost)

    def _score_last(t, layer, infos, chosen, so_far):
        pos = [{info: i for i, info in enumerate(infos[j])} for j in range(K)]
        mass = np.zeros((spec.n_states, *(len(infos[j]) for j in range(K))))
        for (x, obs, acts), w in layer.items():
            mass[(x, *(pos[j][info_from_history(spec, j, t, obs, acts)] for j in range(K)))] += w
        # stage cost for every (realization tuple, joint action)
        tensor = np.tensordot(mass, spec.cost[t - 1], axes=([0], [0]))
        assigns = [np.array(list(itertools.product(range(spec.n_actions(j)),
                                                   repeat=len(infos[j]))), dtype=np.int64)
                   .reshape(-1, len(infos[j])) for j in range(K)]
        # contract agent by agent: pick each agent's action per realization
        scores = tensor
        for j in range(K):
            # scores axes: [assign_0..assign_{j-1}, real_j..real_{K-1}, act_j..act_{K-1}]
            lead = j
            r_axis, a_axis = lead, lead + (K - j)
            r_idx = np.arange(len(infos[j]))
            moved = np.moveaxis(scores, (r_axis, a_axis), (-2, -1))
            picked = moved[..., r_idx[None, :], assigns[j]]     # [..., assign_j, real_j]
            scores = np.moveaxis(picked.sum(axis=-1), -1, lead)
        flat = scores.reshape(-1)
        idx = int(np.argmin(flat))
        total = so_far + float(flat[idx])
        if total < best[0] - 1e-15:
            picks = np.unravel_index(idx, scores.shape)
            last = [dict(zip(infos[j], assigns[j][picks[j]].tolist())) for j in range(K)]
            best[0], best[1] = total, chosen + [last]

    recurse(1, dict(start), [], 0.0)
    return _profile_from_choices(spec, best[1]), best[0]


def _profile_from_choices(spec, choices):
    tables = []
    for t in range(1, spec.horizon + 1):
        row = []
        for k in range(spec.num_agents):
            tab = np.zeros(info_count(spec, t, k), dtype=np.int64)
            for info, u in choices[t - 1][k].items():
                tab[info_index(spec, info)] = u
            row.append(tab)
        tables.append(row)
    return StrategyProfile(spec, tables)


# --- single-agent POMDP -----------------------------------------------------

def centralized_pomdp_solve(spec: ProblemSpec, decimals: int = 12):
    """``(policy, optimal value)`` of a single-agent instance by backward
    induction over the reachable beliefs."""
    if spec.num_agents != 1:
        raise ValueError("centralized_pomdp_solve needs exactly one agent")
    n = spec.horizon
    cache = {}

    def value(t, belief):
        key = (t, tuple(np.round(belief, decimals).tolist()))
        if key in cache:
            return cache[key]
        q = belief @ spec.cost[t - 1]
        if t < n:
            for u in range(spec.n_actions(0)):
                pred = belief @ spec.transition[:, u, :]
                joint = pred[:, None] * spec.observation[0][:, u, :]
                for y in range(spec.n_obs(0)):
                    py = joint[:, y].sum()
                    if py > 0:
                        q[u] += py * value(t + 1, joint[:, y] / py)[0]
        u = int(np.flatnonzero(q <= q.min() + 1e-12)[0])
        cache[key] = (float(q[u]), u)
        return cache[key]

    total = 0.0
    for y in range(spec.n_obs(0)):
        w = spec.initial * spec.initial_obs[0][:, y]
        if w.sum() > 0:
            total += w.sum() * value(1, w / w.sum())[0]

    tables = []
    for t in range(1, n + 1):
        tab = np.zeros(info_count(spec, t, 0), dtype=np.int64)
        for idx, info in enumerate(_single_agent_infos(spec, t)):
            belief = _belief_of(spec, info)
            if belief is not None:
                tab[idx] = value(t, belief)[1]
        tables.append(tab)
    return StrategyProfile(spec, [[tab] for tab in tables]), total


def lift_factor_policies(spec: ProblemSpec, factors, policies) -> StrategyProfile:
    """Joint profile in which agent ``k`` runs ``policies[k]`` on its own
    observations and actions of factor ``k`` and ignores everything else."""
    tables = []
    for t in range(1, spec.horizon + 1):
        row = []
        for k, (factor, policy) in enumerate(zip(factors, policies)):
            tab = np.zeros(info_count(spec, t, k), dtype=np.int64)
            for idx, info in enumerate(enumerate_info(spec, t, k)):
                ys = [blk[k] for blk in info.shared_obs] + list(info.own_obs)
                us = [blk[k] for blk in info.shared_act] + list(info.own_act)
                own = info_from_history(factor, 0, t, [(y,) for y in ys], [(u,) for u in us])
                tab[idx] = policy.action(own)
            row.append(tab)
        tables.append(row)
    return StrategyProfile(spec, tables)


def _single_agent_infos(spec, t):
    from .info import enumerate_info
    return enumerate_info(spec, t, 0)


def _belief_of(spec, info):
    obs = [blk[0] for blk in info.shared_obs] + list(info.own_obs)
    acts = [blk[0] for blk in info.shared_act] + list(info.own_act)
    b = spec.initial * spec.initial_obs[0][:, obs[0]]
    for y, u in zip(obs[1:], acts):
        if b.sum() <= 0:
            return None
        b = (b / b.sum()) @ spec.transition[:, u, :] * spec.observation[0][:, u, y]
    return None if b.sum() <= 0 else b / b.sum()


# --- common-information recursion ------------------------------------------

class _Prescriptions:
    """Profile-like view of one stage's prescriptions."""

    def __init__(self, maps):
        self.maps = maps

    def action(self, info):
        return self.maps[info.agent][info.private]


def common_info_dp(spec: ProblemSpec, guard: float = 1e6, decimals: int = 12):
    """Team-optimal profile from a coordinator that sees only the shared block.

    The coordinator's state is the posterior over the current state and all
    private blocks; at each stage it picks one map per agent from private
    block to action.
    """
    if spec.delay >= spec.horizon:
        raise ValueError(
            "the delay equals the horizon, so no stage has shared information and the "
            "coordinator recursion is vacuous; use enumerate_team_optimal instead")
    K, n = spec.num_agents, spec.horizon
    cache = {}

    def supports(t, pi):
        lam_mass = pi.probs.sum(axis=0)
        space = joint_private_space(spec, t)
        sup = [set() for _ in range(K)]
        for li, lam in enumerate(space):
            if lam_mass[li] > 0:
                for j in range(K):
                    sup[j].add(lam[j])
        return [sorted(s) for s in sup]

    def candidates(t, pi):
        sup = supports(t, pi)
        count = math.prod(spec.n_actions(j) ** len(sup[j]) for j in range(K))
        if count > guard:
            raise SizeGuardError(f"{count} joint prescriptions at stage {t} exceeds the guard {guard:g}")
        for combo in itertools.product(*(itertools.product(range(spec.n_actions(j)), repeat=len(sup[j]))
                                         for j in range(K))):
            yield [dict(zip(sup[j], combo[j])) for j in range(K)]

    def stage_cost(t, pi, maps):
        total = 0.0
        for li, lam in enumerate(joint_private_space(spec, t)):
            col = pi.probs[:, li]
            if col.any():
                us = tuple(maps[j][lam[j]] for j in range(K))
                total += col @ spec.cost[(t - 1, slice(None), *us)]
        return total

    def branches(t, pi, shared, maps):
        rx = _Prescriptions(maps)
        out = []
        if t - spec.delay + 1 < 1:
            arr = pi_update_unnormalized(spec, pi, shared, rx)
            out.append((1.0, shared, arr / arr.sum()))
            return out
        for ys in itertools.product(*(range(spec.n_obs(j)) for j in range(K))):
            for us in spec.joint_actions():
                arr = pi_update_unnormalized(spec, pi, shared, rx, ys, us)
                mass = arr.sum()
                if mass > 0:
                    out.append((mass, (shared[0] + (ys,), shared[1] + (us,)), arr / mass))
        return out

    def value(t, pi, shared):
        key = (t, tuple(np.round(pi.probs, decimals).ravel().tolist()))
        if key in cache:
            return cache[key][0]
        best, best_maps = math.inf, None
        for maps in candidates(t, pi):
            q = stage_cost(t, pi, maps)
            if t < n:
                for mass, new_shared, probs in branches(t, pi, shared, maps):
                    q += mass * value(t + 1, _Pi(t + 1, probs), new_shared)
            if q < best - 1e-15:
                best, best_maps = q, maps
        cache[key] = (best, best_maps)
        return best

    root = pi_init(spec)
    total = value(1, root, ((), ()))

    tables = [[np.zeros(info_count(spec, t, k), dtype=np.int64) for k in range(K)]
              for t in range(1, n + 1)]
    frontier = [(root, ((), ()))]
    for t in range(1, n + 1):
        nxt = []
        for pi, shared in frontier:
            key = (t, tuple(np.round(pi.probs, decimals).ravel().tolist()))
            maps = cache[key][1]
            for j in range(K):
                for lam, u in maps[j].items():
                    tables[t - 1][j][info_index(spec, compose_info(j, t, shared, lam))] = u
            if t < n:
                nxt += [(_Pi(t + 1, probs), s) for _, s, probs in branches(t, pi, shared, maps)]
        frontier = nxt
    return StrategyProfile(spec, tables), float(total)


class _Pi:
    def __init__(self, stage, probs):
        self.stage = stage
        self.probs = probs


# --- Monte Carlo ------------------------------------------------------------

def _draw(rng, probs):
    """One categorical draw per row of ``probs``."""
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    return (rng.random(len(probs))[:, None] > cdf).sum(axis=1)


def monte_carlo_payoff(spec: ProblemSpec, profile: StrategyProfile, samples: int,
                       seed=None, batch: int = 200_000):
    """``(mean, standard error)`` of the total cost over seeded rollouts."""
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    K, n, T = spec.num_agents, spec.horizon, spec.delay
    totals = []
    left = samples
    while left:
        N = min(batch, left)
        left -= N
        x = _draw(rng, np.broadcast_to(spec.initial, (N, spec.n_states)))
        obs = np.zeros((N, n, K), dtype=np.int64)
        acts = np.zeros((N, n, K), dtype=np.int64)
        for j in range(K):
            obs[:, 0, j] = _draw(rng, spec.initial_obs[j][x])
        cost = np.zeros(N)
        for t in range(1, n + 1):
            for j in range(K):
                acts[:, t - 1, j] = profile.tables[t - 1][j][_info_indices(spec, t, j, obs, acts)]
            u = tuple(acts[:, t - 1, j] for j in range(K))
            cost += spec.cost[(t - 1, x, *u)]
            if t < n:
                x = _draw(rng, spec.transition[(x, *u)])
                for j in range(K):
                    obs[:, t, j] = _draw(rng, spec.observation[j][(x, *u)])
        totals.append(cost)
    totals = np.concatenate(totals)
    se = totals.std(ddof=1) / math.sqrt(samples) if samples > 1 else 0.0
    return float(totals.mean()), float(se)


def _info_indices(spec, t, k, obs, acts):
    from .info import _places

    K, T = spec.num_agents, spec.delay
    m = shared_length(t, T)
    first, _, _ = window(t, T)
    cols = [obs[:, s, j] for s in range(m) for j in range(K)]
    cols += [acts[:, s, j] for s in range(m) for j in range(K)]
    cols += [obs[:, s - 1, k] for s in range(first, t + 1)]
    cols += [acts[:, s - 1, k] for s in range(first, t)]
    places = _places(spec, t, k)
    idx = np.zeros(len(obs), dtype=np.int64)
    for c, p in zip(cols, places):
        idx += c * p
    return idx
