"""Finite decentralized POMDP instances.

A :class:`ProblemSpec` holds time-invariant spaces and kernels together with a
(possibly time-varying) stage cost.  All tables are dense numpy arrays indexed
by integer label positions:

``transition[x, u_1, ..., u_K, x_next]``
    probability of the next state given the current state and joint action.
``observation[k][x, u_1, ..., u_K, y]``
    probability that agent ``k`` observes ``y`` in state ``x`` when the joint
    action of the *previous* stage was ``(u_1, ..., u_K)``.
``initial_obs[k][x, y]``
    first-stage observation kernel (no previous action exists).
``cost[t - 1, x, u_1, ..., u_K]``
    stage cost at stage ``t`` (stages are numbered ``1..horizon``).

Agents are indexed ``0..K-1``; stages ``1..n``.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

STOCHASTIC_TOL = 1e-12


class ProblemFormatError(ValueError):
    """Raised when a serialized problem cannot be parsed or violates the schema."""


class InvalidProblemError(ValueError):
    """Raised when a parsed problem fails :func:`validate_problem`."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid problem: " + "; ".join(self.violations))


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    horizon: int
    delay: int
    states: tuple
    obs_labels: tuple
    action_labels: tuple
    transition: np.ndarray
    observation: tuple
    initial_obs: tuple
    cost: np.ndarray
    initial: np.ndarray
    name: str = field(default="problem")

    @property
    def num_agents(self) -> int:
        return len(self.action_labels)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def action_shape(self) -> tuple:
        return tuple(len(a) for a in self.action_labels)

    def n_obs(self, k: int) -> int:
        return len(self.obs_labels[k])

    def n_actions(self, k: int) -> int:
        return len(self.action_labels[k])

    def joint_actions(self):
        """All joint actions in lexicographic order."""
        return itertools.product(*(range(m) for m in self.action_shape))

    def stage_cost(self, t: int, x: int, joint: Sequence[int]) -> float:
        return float(self.cost[(t - 1, x, *joint)])


def _check_rows(name, table, tol, violations):
    table = np.asarray(table, dtype=float)
    neg = np.argwhere(table < 0)
    for idx in neg:
        violations.append(f"{name}{tuple(int(i) for i in idx)}: negative entry {table[tuple(idx)]}")
    sums = table.sum(axis=-1)
    for idx in np.ndindex(sums.shape):
        s = sums[idx]
        if abs(s - 1.0) > tol:
            violations.append(f"{name}{idx}: row sum {s:.12g} != 1")


def validate_problem(spec: ProblemSpec, tol: float = STOCHASTIC_TOL) -> list:
    """Return a list of invariant violations; empty when ``spec`` is valid."""
    v = []
    n, T, K = spec.horizon, spec.delay, spec.num_agents
    if n < 1:
        v.append(f"horizon {n} < 1")
    if K < 1:
        v.append("no agents")
    if T < 1:
        v.append(f"delay {T} < 1")
    if T > n:
        v.append(f"delay exceeds horizon ({T} > {n})")
    if len(spec.obs_labels) != K:
        v.append(f"obs_labels has {len(spec.obs_labels)} agents, expected {K}")
        return v
    nx, ashape = spec.n_states, spec.action_shape
    if spec.initial.shape != (nx,):
        v.append(f"initial has shape {spec.initial.shape}, expected {(nx,)}")
    else:
        _check_rows("initial", spec.initial, tol, v)
    if spec.transition.shape != (nx, *ashape, nx):
        v.append(f"transition has shape {spec.transition.shape}, expected {(nx, *ashape, nx)}")
    else:
        _check_rows("transition", spec.transition, tol, v)
    if len(spec.observation) != K or len(spec.initial_obs) != K:
        v.append("observation/initial_obs must have one table per agent")
        return v
    for k in range(K):
        ny = spec.n_obs(k)
        q = spec.observation[k]
        if q.shape != (nx, *ashape, ny):
            v.append(f"observation[{k}] has shape {q.shape}, expected {(nx, *ashape, ny)}")
        else:
            _check_rows(f"observation[{k}]", q, tol, v)
        q1 = spec.initial_obs[k]
        if q1.shape != (nx, ny):
            v.append(f"initial_obs[{k}] has shape {q1.shape}, expected {(nx, ny)}")
        else:
            _check_rows(f"initial_obs[{k}]", q1, tol, v)
    if spec.cost.shape != (n, nx, *ashape):
        v.append(f"cost has shape {spec.cost.shape}, expected {(n, nx, *ashape)}")
    elif not np.all(np.isfinite(spec.cost)):
        v.append("cost has non-finite entries")
    return v


def make_problem(horizon, delay, states, obs_labels, action_labels, transition,
                 observation, initial_obs, cost, initial, name="problem",
                 validate=True) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from array-likes; raises on invalid input."""
    cost = np.array(cost, dtype=float)
    if cost.ndim == 1 + len(action_labels):
        # time-invariant cost given without the stage axis
        cost = np.broadcast_to(cost, (horizon, *cost.shape)).copy()
    spec = ProblemSpec(
        horizon=int(horizon),
        delay=int(delay),
        states=tuple(states),
        obs_labels=tuple(tuple(o) for o in obs_labels),
        action_labels=tuple(tuple(a) for a in action_labels),
        transition=np.array(transition, dtype=float),
        observation=tuple(np.array(q, dtype=float) for q in observation),
        initial_obs=tuple(np.array(q, dtype=float) for q in initial_obs),
        cost=cost,
        initial=np.array(initial, dtype=float),
        name=name,
    )
    for arr in (spec.transition, spec.cost, spec.initial, *spec.observation, *spec.initial_obs):
        arr.setflags(write=False)
    if validate:
        violations = validate_problem(spec)
        if violations:
            raise InvalidProblemError(violations)
    return spec


def replace_problem(spec: ProblemSpec, **changes) -> ProblemSpec:
    """Copy of ``spec`` with some fields replaced (re-validated)."""
    fields = dict(
        horizon=spec.horizon, delay=spec.delay, states=spec.states,
        obs_labels=spec.obs_labels, action_labels=spec.action_labels,
        transition=spec.transition, observation=spec.observation,
        initial_obs=spec.initial_obs, cost=spec.cost, initial=spec.initial,
        name=spec.name,
    )
    fields.update(changes)
    return make_problem(**fields)


# --- built-in scenarios -----------------------------------------------------

PAPER_OBS = (
    np.array([[0.9, 0.1], [0.1, 0.9]]),  # agent 1: the reliable channel
    np.array([[0.7, 0.3], [0.3, 0.7]]),
)
PAPER_TRANSITION = {
    # (x, u1, u2): (P(s1), P(s2))
    (0, 0, 0): (0.9, 0.1),
    (0, 0, 1): (0.7, 0.3),
    (0, 1, 0): (0.8, 0.2),
    (0, 1, 1): (0.7, 0.3),
    (1, 0, 0): (0.2, 0.8),
    (1, 0, 1): (0.5, 0.5),
    (1, 1, 0): (0.7, 0.3),
    (1, 1, 1): (0.8, 0.2),
}
PAPER_COSTS = (
    np.array([[0.0, 1.0], [8.0, 2.0]]),  # l1[x, u1]
    np.array([[0.0, 1.0], [4.0, 2.0]]),  # l2[x, u2]
)


def build_paper_example() -> ProblemSpec:
    """Two-agent master/apprentice instance: n=3, T=2, binary spaces."""
    S = np.zeros((2, 2, 2, 2))
    for key, row in PAPER_TRANSITION.items():
        S[key] = row
    obs = []
    for q in PAPER_OBS:
        # action-independent: replicate rows over the previous joint action
        obs.append(np.broadcast_to(q[:, None, None, :], (2, 2, 2, 2)).copy())
    l1, l2 = PAPER_COSTS
    cost = l1[:, :, None] + l2[:, None, :]
    return make_problem(
        horizon=3, delay=2,
        states=("s1", "s2"),
        obs_labels=(("o1", "o2"), ("o1", "o2")),
        action_labels=(("c1", "c2"), ("c1", "c2")),
        transition=S, observation=obs, initial_obs=PAPER_OBS,
        cost=cost, initial=[0.7, 0.3], name="paper_example",
    )


def build_separated_example(sub_specs: Sequence[ProblemSpec], delay: int | None = None,
                            name="separated") -> ProblemSpec:
    """Product of independent single-agent POMDPs.

    Agent ``k`` controls and observes only factor ``k`` of the product state;
    the stage cost is the sum of the factor costs.  ``delay`` defaults to the
    common horizon (no sharing).
    """
    if not sub_specs:
        raise ValueError("need at least one sub-problem")
    n = sub_specs[0].horizon
    for i, s in enumerate(sub_specs):
        if s.num_agents != 1:
            raise ValueError(f"sub-problem {i} has {s.num_agents} agents, expected 1")
        if s.horizon != n:
            raise ValueError(f"sub-problem {i} horizon {s.horizon} != {n}")
    K = len(sub_specs)
    dims = tuple(s.n_states for s in sub_specs)
    ashape = tuple(s.n_actions(0) for s in sub_specs)
    states = tuple(itertools.product(*(range(d) for d in dims)))
    nx = len(states)
    labels = tuple("(" + ",".join(str(s.states[xi]) for s, xi in zip(sub_specs, xs)) + ")"
                   for xs in states)

    S = np.ones((nx, *ashape, nx))
    cost = np.zeros((n, nx, *ashape))
    initial = np.ones(nx)
    for xi, xs in enumerate(states):
        initial[xi] = np.prod([s.initial[a] for s, a in zip(sub_specs, xs)])
        for joint in itertools.product(*(range(m) for m in ashape)):
            for xj, xs2 in enumerate(states):
                S[(xi, *joint, xj)] = np.prod(
                    [s.transition[xs[k], joint[k], xs2[k]] for k, s in enumerate(sub_specs)])
            cost[(slice(None), xi, *joint)] = sum(
                s.cost[:, xs[k], joint[k]] for k, s in enumerate(sub_specs))
    obs, obs1 = [], []
    for k, s in enumerate(sub_specs):
        ny = s.n_obs(0)
        q = np.zeros((nx, *ashape, ny))
        q1 = np.zeros((nx, ny))
        for xi, xs in enumerate(states):
            q1[xi] = s.initial_obs[0][xs[k]]
            for joint in itertools.product(*(range(m) for m in ashape)):
                q[(xi, *joint)] = s.observation[0][xs[k], joint[k]]
        obs.append(q)
        obs1.append(q1)
    return make_problem(
        horizon=n, delay=n if delay is None else delay, states=labels,
        obs_labels=tuple(s.obs_labels[0] for s in sub_specs),
        action_labels=tuple(s.action_labels[0] for s in sub_specs),
        transition=S, observation=obs, initial_obs=obs1, cost=cost,
        initial=initial, name=name,
    )


def _random_pmf(rng, shape, floor=0.05):
    p = rng.random(shape) + floor
    return p / p.sum(axis=-1, keepdims=True)


def build_random_example(seed: int, num_agents=2, n_states=2, n_obs=2, n_actions=2,
                         horizon=3, delay=2, positive=True) -> ProblemSpec:
    """Random instance with strictly positive kernels (unless ``positive=False``)."""
    rng = np.random.default_rng(seed)
    K = num_agents
    ashape = (n_actions,) * K
    floor = 0.05 if positive else 0.0
    S = _random_pmf(rng, (n_states, *ashape, n_states), floor)
    obs = [_random_pmf(rng, (n_states, *ashape, n_obs), floor) for _ in range(K)]
    obs1 = [_random_pmf(rng, (n_states, n_obs), floor) for _ in range(K)]
    cost = np.round(rng.uniform(0.0, 10.0, (horizon, n_states, *ashape)), 3)
    return make_problem(
        horizon=horizon, delay=delay,
        states=tuple(f"s{i + 1}" for i in range(n_states)),
        obs_labels=tuple(tuple(f"o{i + 1}" for i in range(n_obs)) for _ in range(K)),
        action_labels=tuple(tuple(f"c{i + 1}" for i in range(n_actions)) for _ in range(K)),
        transition=S, observation=obs, initial_obs=obs1, cost=cost,
        initial=_random_pmf(rng, n_states, floor), name=f"random(seed={seed})",
    )


def build_single_agent(horizon, transition, observation, initial_obs, cost, initial,
                       states=None, obs_labels=None, action_labels=None,
                       name="pomdp") -> ProblemSpec:
    """Convenience constructor for a K=1 POMDP.

    ``transition[x, u, x']``, ``observation[x, u_prev, y]`` (or ``[x, y]`` when
    action independent), ``cost[t-1, x, u]`` or ``cost[x, u]``.
    """
    transition = np.asarray(transition, dtype=float)
    nx, nu = transition.shape[:2]
    observation = np.asarray(observation, dtype=float)
    if observation.ndim == 2:
        observation = np.broadcast_to(observation[:, None, :],
                                      (nx, nu, observation.shape[-1])).copy()
    ny = observation.shape[-1]
    return make_problem(
        horizon=horizon, delay=horizon,
        states=states or tuple(f"s{i + 1}" for i in range(nx)),
        obs_labels=(obs_labels or tuple(f"o{i + 1}" for i in range(ny)),),
        action_labels=(action_labels or tuple(f"c{i + 1}" for i in range(nu)),),
        transition=transition, observation=[observation], initial_obs=[initial_obs],
        cost=cost, initial=initial, name=name,
    )


def separated_factors(seed: int | None = None, horizon=3) -> list:
    """The two single-agent POMDPs behind :func:`separated_scenario`.

    With ``seed=None`` fixed hand-picked factors are used; otherwise the
    factors are drawn at random.
    """
    if seed is None:
        subs = [
            build_single_agent(
                horizon,
                transition=[[[0.9, 0.1], [0.6, 0.4]], [[0.3, 0.7], [0.8, 0.2]]],
                observation=[[0.85, 0.15], [0.2, 0.8]],
                initial_obs=[[0.85, 0.15], [0.2, 0.8]],
                cost=[[0.0, 1.5], [6.0, 2.0]],
                initial=[0.6, 0.4], name="factor1"),
            build_single_agent(
                horizon,
                transition=[[[0.7, 0.3], [0.95, 0.05]], [[0.1, 0.9], [0.5, 0.5]]],
                observation=[[0.6, 0.4], [0.35, 0.65]],
                initial_obs=[[0.6, 0.4], [0.35, 0.65]],
                cost=[[1.0, 0.5], [3.0, 4.0]],
                initial=[0.5, 0.5], name="factor2"),
        ]
    else:
        rng = np.random.default_rng(seed)
        subs = []
        for i in range(2):
            q = _random_pmf(rng, (2, 2))
            subs.append(build_single_agent(
                horizon, transition=_random_pmf(rng, (2, 2, 2)), observation=q,
                initial_obs=q, cost=np.round(rng.uniform(0, 10, (2, 2)), 3),
                initial=_random_pmf(rng, 2), name=f"factor{i + 1}"))
    return subs


def separated_scenario(seed: int | None = None, horizon=3, delay=2) -> ProblemSpec:
    """Two independent 2-state POMDPs joined into one separated problem."""
    return build_separated_example(separated_factors(seed, horizon), delay=delay)


# --- serialization ----------------------------------------------------------

def _key(labels) -> str:
    return "(" + ",".join(str(x) for x in labels) + ")"


_KEY_RE = re.compile(r"^\((.*)\)$")


def save_problem(spec: ProblemSpec) -> str:
    """Serialize ``spec`` to the JSON problem-file format."""
    K = spec.num_agents
    transition, cost = {}, {}
    observation = [{} for _ in range(K)]
    for x in range(spec.n_states):
        for joint in spec.joint_actions():
            labels = [spec.states[x]] + [spec.action_labels[k][u] for k, u in enumerate(joint)]
            transition[_key(labels)] = spec.transition[(x, *joint)].tolist()
            for k in range(K):
                observation[k][_key(labels)] = spec.observation[k][(x, *joint)].tolist()
            for t in range(1, spec.horizon + 1):
                cost[_key([t] + labels)] = spec.stage_cost(t, x, joint)
    doc = {
        "name": spec.name,
        "horizon": spec.horizon,
        "delay": spec.delay,
        "states": list(spec.states),
        "agents": [{"obs": list(spec.obs_labels[k]), "actions": list(spec.action_labels[k])}
                   for k in range(K)],
        "initial": spec.initial.tolist(),
        "initial_obs": [spec.initial_obs[k].tolist() for k in range(K)],
        "transition": transition,
        "observation": observation,
        "cost": cost,
    }
    return json.dumps(doc, indent=1, ensure_ascii=False)


def _require(doc, name, path=""):
    if not isinstance(doc, dict) or name not in doc:
        raise ProblemFormatError(f"missing field '{path}{name}'")
    return doc[name]


def _parse_table(table, field_path, index_of, dims, row_len):
    if not isinstance(table, dict):
        raise ProblemFormatError(f"field '{field_path}' must be an object")
    out = np.full(dims if row_len == 0 else (*dims, row_len), np.nan)
    for key, row in table.items():
        m = _KEY_RE.match(key.strip())
        if not m:
            raise ProblemFormatError(f"{field_path}: malformed key {key!r}")
        parts = [p.strip() for p in m.group(1).split(",")]
        if len(parts) != len(index_of):
            raise ProblemFormatError(f"{field_path}: key {key!r} has {len(parts)} labels, "
                                     f"expected {len(index_of)}")
        try:
            idx = tuple(ix[p] for ix, p in zip(index_of, parts))
        except KeyError as e:
            raise ProblemFormatError(f"{field_path}: unknown label {e} in key {key!r}") from None
        if row_len == 0:
            if isinstance(row, bool) or not isinstance(row, (int, float)):
                raise ProblemFormatError(f"{field_path}[{key!r}]: expected a number")
            out[idx] = row
            continue
        if not isinstance(row, list) or len(row) != row_len:
            raise ProblemFormatError(f"{field_path}[{key!r}]: expected a list of {row_len} numbers")
        out[idx] = row
    if np.isnan(out).any():
        missing = tuple(int(i) for i in np.argwhere(np.isnan(out))[0])
        raise ProblemFormatError(f"{field_path}: missing entry at index {missing}")
    return out


def load_problem(source) -> ProblemSpec:
    """Parse a problem from a path, or from JSON text.

    Raises :class:`ProblemFormatError` on parse/schema errors and
    :class:`InvalidProblemError` when the tables are not stochastic.
    """
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(f"parse error at line {e.lineno} column {e.colno}: {e.msg}") from None

    n = _require(doc, "horizon")
    T = _require(doc, "delay")
    states = _require(doc, "states")
    agents = _require(doc, "agents")
    initial = _require(doc, "initial")
    initial_obs = _require(doc, "initial_obs")
    transition = _require(doc, "transition")
    observation = _require(doc, "observation")
    cost = _require(doc, "cost")
    if not isinstance(agents, list) or not agents:
        raise ProblemFormatError("field 'agents' must be a non-empty list")
    obs_labels, act_labels = [], []
    for k, a in enumerate(agents):
        obs_labels.append(tuple(_require(a, "obs", f"agents[{k}].")))
        act_labels.append(tuple(_require(a, "actions", f"agents[{k}].")))
    K = len(agents)
    if not isinstance(observation, list) or len(observation) != K:
        raise ProblemFormatError(f"field 'observation' must be a list of {K} tables")
    if not isinstance(initial_obs, list) or len(initial_obs) != K:
        raise ProblemFormatError(f"field 'initial_obs' must be a list of {K} tables")

    sx = {s: i for i, s in enumerate(states)}
    su = [{a: i for i, a in enumerate(acts)} for acts in act_labels]
    ashape = tuple(len(a) for a in act_labels)
    S = _parse_table(transition, "transition", [sx, *su], (len(states), *ashape), len(states))
    Q = [_parse_table(observation[k], f"observation[{k}]", [sx, *su], (len(states), *ashape),
                      len(obs_labels[k])) for k in range(K)]
    st = {str(t): t - 1 for t in range(1, int(n) + 1)}
    C = _parse_table(cost, "cost", [st, sx, *su], (int(n), len(states), *ashape), 0)
    try:
        Q1 = [np.asarray(q, dtype=float) for q in initial_obs]
        init = np.asarray(initial, dtype=float)
    except (TypeError, ValueError) as e:
        raise ProblemFormatError(f"initial/initial_obs: {e}") from None
    return make_problem(
        horizon=n, delay=T, states=states, obs_labels=obs_labels, action_labels=act_labels,
        transition=S, observation=Q, initial_obs=Q1, cost=C, initial=init,
        name=doc.get("name", "problem"),
    )


def problems_equal(a: ProblemSpec, b: ProblemSpec) -> bool:
    """Structural equality of two specs (bitwise on tables)."""
    if (a.horizon, a.delay, a.states, a.obs_labels, a.action_labels) != \
            (b.horizon, b.delay, b.states, b.obs_labels, b.action_labels):
        return False
    pairs = [(a.transition, b.transition), (a.cost, b.cost), (a.initial, b.initial)]
    pairs += list(zip(a.observation, b.observation)) + list(zip(a.initial_obs, b.initial_obs))
    return all(x.shape == y.shape and np.array_equal(x, y) for x, y in pairs)
