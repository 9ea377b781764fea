"""Model specification, rate evaluation and transition-graph checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from ..errors import CycleError, ModelError

__all__ = [
    "STAR",
    "ModelSpec",
    "TransitionGraph",
    "evaluate_rate",
    "transition_graph",
    "check_acyclic",
    "audit_rates",
    "reachable",
]

# padding mark for absent particles
STAR = None


@dataclass(frozen=True)
class ModelSpec:
    """A Markov pure-jump particle model with finite state space.

    ``rate(j, t, a, neighbors)`` returns the intensity of the jump ``a -> a + j``
    for a particle in state ``a`` whose neighbors are in the states listed in
    ``neighbors`` (a tuple of state codes; order must not matter).
    ``rate_bound(d, t)`` bounds every rate of a particle of degree ``d - 1``
    and is nondecreasing in both arguments.
    """

    name: str
    states: tuple
    jumps: tuple
    rate: Callable
    declared_edges: frozenset
    rate_bound: Callable
    labels: tuple = ()
    time_homogeneous: bool = True
    field_rate: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        states = tuple(int(s) for s in self.states)
        if len(set(states)) != len(states) or not states:
            raise ModelError("states must be a non-empty set of distinct integer codes")
        jumps = tuple(int(j) for j in self.jumps)
        if 0 in jumps or len(set(jumps)) != len(jumps):
            raise ModelError("jumps must be distinct and non-zero")
        edges = frozenset((int(a), int(b)) for a, b in self.declared_edges)
        sset = set(states)
        for a, b in edges:
            if a not in sset or b not in sset:
                raise ModelError(f"declared edge {(a, b)} leaves the state space")
            if b - a not in jumps:
                raise ModelError(f"declared edge {(a, b)} is not a permitted jump")
        labels = tuple(self.labels) if self.labels else tuple(str(s) for s in states)
        if len(labels) != len(states):
            raise ModelError("need one label per state")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "declared_edges", edges)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self):
        return len(self.states)

    @cached_property
    def index(self):
        """State code -> position in ``states``."""
        return {s: i for i, s in enumerate(self.states)}

    def label(self, state):
        return "*" if state is STAR else self.labels[self.index[state]]

    def state_from_label(self, label):
        if label in self.labels:
            return self.states[self.labels.index(label)]
        try:
            code = int(label)
        except (TypeError, ValueError):
            raise ModelError(f"unknown state {label!r}") from None
        if code not in self.index:
            raise ModelError(f"unknown state {label!r}")
        return code

    @cached_property
    def order(self):
        """Topological order of the declared transition graph (cached)."""
        return check_acyclic(transition_graph(self, probes=0))


def evaluate_rate(model, j, t, a, neighbors):
    """Rate of jump ``j`` at time ``t``; STAR entries are absent particles."""
    if a is STAR or j not in model.jumps:
        return 0.0
    nb = tuple(x for x in neighbors if x is not STAR)
    return float(model.rate(j, t, a, nb))


@dataclass(frozen=True)
class TransitionGraph:
    nodes: tuple
    edges: frozenset

    def successors(self, a):
        return sorted(b for x, b in self.edges if x == a)


def _random_probe(model, rng, max_degree, horizon):
    t = float(rng.uniform(0.0, horizon))
    a = model.states[rng.integers(model.m)]
    d = int(rng.integers(0, max_degree + 1))
    nb = tuple(model.states[i] for i in rng.integers(model.m, size=d))
    return t, a, nb


def transition_graph(model, probes=10**4, rng=None, max_degree=6, horizon=10.0):
    """Declared transition graph, checked by random probing of the rates.

    Every probe ``(j, t, a, x)`` with a positive rate must correspond to a
    declared edge ``(a, a + j)``; otherwise :class:`ModelError` is raised.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(probes):
        t, a, nb = _random_probe(model, rng, max_degree, horizon)
        for j in model.jumps:
            r = evaluate_rate(model, j, t, a, nb)
            if r > 0 and (a, a + j) not in model.declared_edges:
                raise ModelError(
                    f"positive rate {r:g} outside declared edges at j={j}, t={t:g}, a={a}, x={nb}"
                )
    return TransitionGraph(model.states, model.declared_edges)


def check_acyclic(tg):
    """Topological order of ``tg``; raises :class:`CycleError` with a witness."""
    indeg = {a: 0 for a in tg.nodes}
    for _, b in tg.edges:
        indeg[b] += 1
    ready = [a for a in tg.nodes if indeg[a] == 0]
    order = []
    while ready:
        a = ready.pop(0)
        order.append(a)
        for b in tg.successors(a):
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
        ready.sort(key=tg.nodes.index)
    if len(order) == len(tg.nodes):
        return tuple(order)
    raise CycleError(_find_cycle(tg, [a for a in tg.nodes if indeg[a] > 0]))


def _find_cycle(tg, candidates):
    color = {}
    stack = []

    def visit(a):
        color[a] = 1
        stack.append(a)
        for b in tg.successors(a):
            if color.get(b) == 1:
                return stack[stack.index(b):] + [b]
            if b not in color:
                found = visit(b)
                if found:
                    return found
        stack.pop()
        color[a] = 2
        return None

    for a in candidates:
        if a not in color:
            found = visit(a)
            if found:
                return found
    raise AssertionError("no cycle found in cyclic graph")


def reachable(tg, a):
    """States reachable from ``a`` by one or more declared transitions."""
    seen, todo = set(), [a]
    while todo:
        for b in tg.successors(todo.pop()):
            if b not in seen:
                seen.add(b)
                todo.append(b)
    return seen


def audit_rates(model, probes=10**3, rng=None, max_degree=6, horizon=10.0):
    """Probe rate bound, nonnegativity and permutation invariance.

    Returns a list of human-readable violations (empty when all probes pass).
    """
    rng = np.random.default_rng(1) if rng is None else rng
    problems = []
    for _ in range(probes):
        t, a, nb = _random_probe(model, rng, max_degree, horizon)
        perm = tuple(nb[i] for i in rng.permutation(len(nb)))
        bound = model.rate_bound(len(nb) + 1, t)
        for j in model.jumps:
            r = evaluate_rate(model, j, t, a, nb)
            if r < 0:
                problems.append(f"negative rate {r:g} at j={j}, t={t:g}, a={a}, x={nb}")
            if r > bound:
                problems.append(f"rate {r:g} exceeds bound {bound:g} at j={j}, t={t:g}, a={a}, x={nb}")
            if evaluate_rate(model, j, t, a, perm) != r:
                problems.append(f"rate not permutation invariant at j={j}, t={t:g}, a={a}, x={nb}")
    return problems


