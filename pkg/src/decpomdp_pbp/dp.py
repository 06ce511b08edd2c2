"""Per-agent backward dynamic programming and person-by-person iteration.

For a fixed set of other-agent strategies, :func:`build_agent_tree` walks
forward over every realization of agent ``k`` that has positive probability
for *some* choice of its own actions, attaching the private posterior, the
expected stage cost of each action and the weighted continuations.  Best
responses minimize over single actions on that tree; policy evaluation
follows the agent's current strategy on it.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .beliefs import (
    PrivatePosterior,
    other_actions,
    others_private_space,
    payoff_via_pi,
    private_init,
    private_update,
    stage_transition_measure,
    theta_from_shared,
)
from .info import (
    InfoRealization,
    StrategyProfile,
    compose_info,
    dropped_entries,
    enumerate_info,
    extend_info,
    info_count,
    info_index,
)
from .model import ProblemSpec

log = logging.getLogger(__name__)

TIE_TOL = 1e-12


class NonConvergenceError(RuntimeError):
    def __init__(self, message, previous: StrategyProfile, last: StrategyProfile):
        super().__init__(message)
        self.previous = previous
        self.last = last


class InconsistentContinuationError(RuntimeError):
    pass


def argmin_lowest(q: np.ndarray, tol: float = TIE_TOL) -> int:
    """Index of the smallest entry; near-ties go to the lowest index."""
    return int(np.flatnonzero(q <= q.min() + tol)[0])


def argmin_set(q: np.ndarray, tol: float = TIE_TOL) -> frozenset:
    return frozenset(np.flatnonzero(q <= q.min() + tol).tolist())


@dataclass
class Node:
    info: InfoRealization
    posterior: PrivatePosterior
    cost: np.ndarray                     # expected stage cost per own action
    children: list = field(default_factory=list)  # per action: [(mass, next info)]


@dataclass
class AgentTree:
    """Realizations of one agent reachable under some own-action choice."""

    agent: int
    layers: list                          # layers[t - 1]: {info: Node}
    initial_probs: dict                   # stage-1 info -> probability

    def nodes(self, t: int) -> dict:
        return self.layers[t - 1]


def continuations(spec: ProblemSpec, xi: PrivatePosterior, info: InfoRealization,
                  u: int, profile) -> list:
    """``[(mass, next_info)]`` with positive mass after playing ``u`` at ``info``.

    Sums the stage transition measure over states, then groups the others'
    private blocks by the entries they reveal at ``t + 1``.
    """
    t, T = info.stage, spec.delay
    meas = stage_transition_measure(spec, xi, info, u, profile).sum(axis=(2, 3))
    acc = defaultdict(float)
    for li, lam in enumerate(others_private_space(spec, t, info.agent)):
        col = meas[:, li]
        if not col.any():
            continue
        if t - T + 1 >= 1:
            acts = other_actions(spec, info, lam, profile)
            drops = [dropped_entries(block, a, t, T) for block, a in zip(lam, acts)]
            revealed = (tuple(d[0] for d in drops), tuple(d[1] for d in drops))
        else:
            revealed = ((), ())
        for y in np.flatnonzero(col > 0):
            acc[(int(y), revealed)] += float(col[y])
    return [(mass, extend_info(spec, info, y, u, *revealed))
            for (y, revealed), mass in sorted(acc.items())]


def expected_stage_cost(spec: ProblemSpec, xi: PrivatePosterior, info: InfoRealization,
                        profile) -> np.ndarray:
    k, K, t = info.agent, spec.num_agents, info.stage
    others = [j for j in range(K) if j != k]
    cost = np.zeros(spec.n_actions(k))
    for li, lam in enumerate(others_private_space(spec, t, k)):
        col = xi.probs[:, li]
        if not col.any():
            continue
        acts = other_actions(spec, info, lam, profile)
        for u in range(spec.n_actions(k)):
            joint = [0] * K
            joint[k] = u
            for j, a in zip(others, acts):
                joint[j] = a
            cost[u] += col @ spec.cost[(t - 1, slice(None), *joint)]
    return cost


def build_agent_tree(spec: ProblemSpec, k: int, profile: StrategyProfile) -> AgentTree:
    """Forward pass for agent ``k``; only the others' strategies are read."""
    n = spec.horizon
    first = {}
    initial_probs = {}
    for y in range(spec.n_obs(k)):
        p = float(spec.initial @ spec.initial_obs[k][:, y])
        if p <= 0:
            continue
        info = enumerate_info(spec, 1, k)[y]
        first[info] = Node(info, private_init(spec, k, y), None)
        initial_probs[info] = p
    layers = [first]
    for t in range(1, n + 1):
        nxt = {}
        for info, node in layers[-1].items():
            node.cost = expected_stage_cost(spec, node.posterior, info, profile)
            if t == n:
                continue
            for u in range(spec.n_actions(k)):
                conts = continuations(spec, node.posterior, info, u, profile)
                node.children.append(conts)
                for _, child in conts:
                    if child in nxt:
                        continue
                    post = private_update(spec, node.posterior, info, child.own_obs[-1], u,
                                          profile, *_revealed_others(child, info, spec))
                    if post is None:
                        raise InconsistentContinuationError(
                            f"continuation {child.labels(spec)} has mass but no posterior")
                    nxt[child] = Node(child, post, None)
        if t < n:
            layers.append(nxt)
    return AgentTree(k, layers, initial_probs)


def _revealed_others(child: InfoRealization, parent: InfoRealization, spec: ProblemSpec):
    if len(child.shared_obs) == len(parent.shared_obs):
        return (), ()
    k = child.agent
    ys = tuple(y for j, y in enumerate(child.shared_obs[-1]) if j != k)
    us = tuple(a for j, a in enumerate(child.shared_act[-1]) if j != k)
    return ys, us


@dataclass
class ValueTable:
    agent: int
    values: list              # values[t - 1]: {info: V_t(info)}
    actions: list             # actions[t - 1]: {info: chosen action}
    q_values: list            # q_values[t - 1]: {info: array over actions}
    initial_probs: dict

    @property
    def expected_initial_value(self) -> float:
        return float(sum(p * self.values[0][i] for i, p in self.initial_probs.items()))

    def to_json(self, spec: ProblemSpec) -> dict:
        out = {}
        for t, (vals, acts) in enumerate(zip(self.values, self.actions), start=1):
            out[f"t={t}"] = {",".join(i.labels(spec)): {
                "value": vals[i], "action": spec.action_labels[self.agent][acts[i]]}
                for i in sorted(vals, key=lambda i: info_index(spec, i))}
        return out


def _backward(spec, tree: AgentTree, choose, stop: int = 1) -> ValueTable:
    """Backward pass over ``tree`` from stage ``n`` down to ``stop``.

    ``choose(t, info, q)`` returns the action whose value is kept.
    """
    n = spec.horizon
    values = [dict() for _ in range(n)]
    actions = [dict() for _ in range(n)]
    qs = [dict() for _ in range(n)]
    for t in range(n, stop - 1, -1):
        nxt = values[t] if t < n else None
        for info, node in tree.nodes(t).items():
            q = node.cost.copy()
            if t < n:
                for u, conts in enumerate(node.children):
                    q[u] += sum(m * nxt[child] for m, child in conts)
            u = choose(t, info, q)
            qs[t - 1][info] = q
            actions[t - 1][info] = u
            values[t - 1][info] = float(q[u])
    return ValueTable(tree.agent, values, actions, qs, tree.initial_probs)


def terminal_stage(spec: ProblemSpec, k: int, profile: StrategyProfile, tree=None):
    """``(values, actions)`` at the last stage over the reachable realizations."""
    tree = tree or build_agent_tree(spec, k, profile)
    table = _backward(spec, tree, lambda t, i, q: argmin_lowest(q), stop=spec.horizon)
    return table.values[-1], table.actions[-1]


def interior_stage(spec: ProblemSpec, k: int, t: int, profile: StrategyProfile,
                   next_values: dict, tree=None):
    """``(values, actions)`` at stage ``t < n`` given continuation values."""
    tree = tree or build_agent_tree(spec, k, profile)
    values, actions = {}, {}
    for info, node in tree.nodes(t).items():
        q = node.cost.copy()
        for u, conts in enumerate(node.children):
            q[u] += sum(m * next_values[child] for m, child in conts)
        u = argmin_lowest(q)
        values[info], actions[info] = float(q[u]), u
    return values, actions


def _tables_from_actions(spec, k, actions, base=None) -> list:
    tables = []
    for t in range(1, spec.horizon + 1):
        tab = np.zeros(info_count(spec, t, k), dtype=np.int64) if base is None else base[t - 1].copy()
        for info, u in actions[t - 1].items():
            tab[info_index(spec, info)] = u
        tables.append(tab)
    return tables


def best_response(spec: ProblemSpec, k: int, profile: StrategyProfile, tree=None):
    """Optimal strategy of agent ``k`` against the others in ``profile``.

    Returns ``(ValueTable, tables)``; realizations that no own strategy can
    reach get action 0.
    """
    tree = tree or build_agent_tree(spec, k, profile)
    table = _backward(spec, tree, lambda t, i, q: argmin_lowest(q))
    return table, _tables_from_actions(spec, k, table.actions)


def evaluate_agent(spec: ProblemSpec, k: int, profile: StrategyProfile, tree=None,
                   stop: int = 1) -> ValueTable:
    """Cost-to-go of agent ``k`` following its own strategy in ``profile``."""
    tree = tree or build_agent_tree(spec, k, profile)
    return _backward(spec, tree, lambda t, i, q: profile.action(i), stop=stop)


def reachable_infos(spec: ProblemSpec, tree: AgentTree, profile: StrategyProfile) -> list:
    """Per stage, the realizations with positive probability when agent
    ``tree.agent`` also follows ``profile``."""
    layers = [set(tree.initial_probs)]
    for t in range(1, spec.horizon):
        nxt = set()
        for info in layers[-1]:
            node = tree.nodes(t)[info]
            nxt.update(child for _, child in node.children[profile.action(info)])
        layers.append(nxt)
    return layers


def payoff(spec: ProblemSpec, profile: StrategyProfile) -> float:
    """Expected total cost of ``profile``."""
    return payoff_via_pi(spec, profile)


@dataclass
class EquilibriumReport:
    converged: bool
    sweeps: int
    payoff: float
    expected_values: list         # per agent E[V_1] under the final profile
    gaps: list                    # per agent DP best-response gap
    profile: StrategyProfile
    value_tables: list
    payoff_history: list
    mode: str
    escapes: int = 0

    @property
    def equilibrium(self) -> bool:
        return all(g <= 1e-9 for g in self.gaps)

    def to_json(self) -> dict:
        spec = self.profile.spec
        return {
            "converged": self.converged,
            "sweeps": self.sweeps,
            "mode": self.mode,
            "escapes": self.escapes,
            "payoff": self.payoff,
            "expected_values": self.expected_values,
            "gaps": self.gaps,
            "equilibrium": self.equilibrium,
            "payoff_history": self.payoff_history,
            "strategies": self.profile.to_json(),
            "values": {f"agent={k}": vt.to_json(spec) for k, vt in enumerate(self.value_tables)},
        }


def _stage_update(spec, k, t, profile):
    """New stage-``t`` table for agent ``k``.

    Only realizations reached under the current profile are re-optimized;
    the rest fall back to action 0 so that off-path choices never steer
    earlier decisions.
    """
    tree = build_agent_tree(spec, k, profile)
    later = evaluate_agent(spec, k, profile, tree, stop=t + 1) if t < spec.horizon else None
    _, acts = (interior_stage(spec, k, t, profile, later.values[t], tree) if later
               else terminal_stage(spec, k, profile, tree))
    reach = reachable_infos(spec, tree, profile)[t - 1]
    tab = np.zeros(info_count(spec, t, k), dtype=np.int64)
    for info in reach:
        tab[info_index(spec, info)] = acts[info]
    return tab


def _gaps(spec, profile):
    gaps, responses = [], []
    for k in range(spec.num_agents):
        tree = build_agent_tree(spec, k, profile)
        own = evaluate_agent(spec, k, profile, tree)
        best, tables = best_response(spec, k, profile, tree)
        gaps.append(own.expected_initial_value - best.expected_initial_value)
        responses.append(tables)
    return gaps, responses


def pbp_iterate(spec: ProblemSpec, initial: StrategyProfile | None = None,
                mode: str = "time_first", max_outer: int = 100,
                max_inner: int = 1000, escape: bool = True,
                tol: float = 1e-9) -> EquilibriumReport:
    """Person-by-person iteration until no strategy changes.

    ``time_first`` sweeps stages ``n`` down to 1 and, at each stage, cycles
    through the agents until that stage is stable.  ``full_sweep`` replaces
    whole-horizon strategies by best responses, one agent at a time.

    A time-first fixed point only re-optimizes realizations on the current
    path, so it can stall where a deviation through an off-path realization
    still pays.  With ``escape`` set, such an agent's whole-horizon best
    response is swapped in and the sweeps resume.
    """
    if mode not in ("time_first", "full_sweep"):
        raise ValueError(f"unknown mode {mode!r}")
    profile = initial if initial is not None else StrategyProfile.constant(spec)
    K, n = spec.num_agents, spec.horizon
    history = [payoff(spec, profile)]
    escapes = 0
    for sweep in range(1, max_outer + 1):
        old = profile
        if mode == "time_first":
            for t in range(n, 0, -1):
                for _ in range(max_inner):
                    changed = False
                    for k in range(K):
                        tab = _stage_update(spec, k, t, profile)
                        if not np.array_equal(tab, profile.tables[t - 1][k]):
                            profile = profile.with_stage(t, k, tab)
                            changed = True
                    if not changed:
                        break
                else:
                    raise NonConvergenceError(f"stage {t} did not settle", old, profile)
            history.append(payoff(spec, profile))
        else:
            for k in range(K):
                _, tables = best_response(spec, k, profile)
                profile = profile.with_agent(k, tables)
                history.append(payoff(spec, profile))
        log.info("sweep %d payoff %.10f", sweep, history[-1])
        if profile != old:
            continue
        gaps, responses = _gaps(spec, profile)
        worst = int(np.argmax(gaps))
        if mode == "full_sweep" or not escape or gaps[worst] <= tol:
            break
        log.info("fixed point leaves agent %d a gain of %.3g; swapping in its best response",
                 worst, gaps[worst])
        profile = profile.with_agent(worst, responses[worst])
        history.append(payoff(spec, profile))
        escapes += 1
    else:
        raise NonConvergenceError(f"no fixed point after {max_outer} sweeps", old, profile)
    tables = [evaluate_agent(spec, k, profile) for k in range(K)]
    return EquilibriumReport(True, sweep, history[-1],
                             [vt.expected_initial_value for vt in tables], gaps,
                             profile, tables, history, mode, escapes)


def verify_equilibrium(spec: ProblemSpec, profile: StrategyProfile, tol: float = 1e-9) -> dict:
    """Best-response gaps from the DP and from the brute-force oracle."""
    from . import oracle

    base = oracle.exact_payoff(spec, profile)
    dp_gaps, oracle_gaps = [], []
    for k in range(spec.num_agents):
        dp_gaps.append(evaluate_agent(spec, k, profile).expected_initial_value
                       - best_response(spec, k, profile)[0].expected_initial_value)
        oracle_gaps.append(base - oracle.tree_best_response(spec, k, profile)[1])
    return {"payoff": base, "dp_gaps": dp_gaps, "oracle_gaps": oracle_gaps,
            "equilibrium": all(g <= tol for g in dp_gaps + oracle_gaps)}


def compression_report(spec: ProblemSpec, profile: StrategyProfile, decimals: int = 10) -> dict:
    """Group reachable realizations by candidate sufficient statistics.

    Value and kernel checks cover every realization some own-action choice
    reaches; the factoring checks cover the realizations on the path of
    ``profile``.  Per ``(t, k)``:

    ``full``      groups by (posterior, shared block, own private block);
    ``terminal``  at the last stage, groups by (posterior, shared block) and
                  checks values and argmin sets agree inside each group;
    ``separated`` groups by (posterior, shared-state posterior, own private
                  block) and checks the chosen actions factor through it;
    ``kernel``    checks the stage transition measure agrees across
                  realizations sharing (posterior, shared block).
    """
    tol = 10.0 ** -decimals
    report = {}
    for k in range(spec.num_agents):
        tree = build_agent_tree(spec, k, profile)
        vt, _ = best_response(spec, k, profile, tree)
        reach = reachable_infos(spec, tree, profile)
        for t in range(1, spec.horizon + 1):
            nodes = tree.nodes(t)
            full = defaultdict(list)
            by_xi_delta = defaultdict(list)
            sep = defaultdict(set)
            for info, node in nodes.items():
                xk = node.posterior.key(decimals)
                by_xi_delta[(xk, info.shared)].append(info)
                if info not in reach[t - 1]:
                    continue
                full[(xk, info.shared, info.private)].append(info)
                theta = theta_from_shared(spec, info.shared) if info.shared_obs else None
                tk = None if theta is None else tuple(np.round(theta, decimals).tolist())
                sep[(xk, tk, info.private)].add(profile.action(info))
            entry = {
                "realizations": len(nodes),
                "on_path": len(reach[t - 1]),
                "largest_group": max(len(g) for g in by_xi_delta.values()),
                "full_groups": len(full),
                "full_singletons": all(len(g) == 1 for g in full.values()),
                "separated_groups": len(sep),
                "separated_factors": all(len(a) == 1 for a in sep.values()),
            }
            kernel_ok = True
            for group in by_xi_delta.values():
                ref = group[0]
                for u in range(spec.n_actions(k)):
                    m0 = stage_transition_measure(spec, nodes[ref].posterior, ref, u, profile)
                    for other in group[1:]:
                        m1 = stage_transition_measure(spec, nodes[other].posterior, other, u, profile)
                        kernel_ok &= bool(np.max(np.abs(m0 - m1)) <= 1e-12)
            entry["kernel_invariant"] = kernel_ok
            if t == spec.horizon:
                ok = True
                for group in by_xi_delta.values():
                    q0 = vt.q_values[t - 1][group[0]]
                    for other in group[1:]:
                        q1 = vt.q_values[t - 1][other]
                        ok &= abs(vt.values[t - 1][group[0]] - vt.values[t - 1][other]) <= tol
                        ok &= argmin_set(q0, tol) == argmin_set(q1, tol)
                entry["terminal_groups"] = len(by_xi_delta)
                entry["terminal_consistent"] = ok
            report[(t, k)] = entry
    return report
