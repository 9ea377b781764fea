"""Canonical root-neighborhood configurations and laws over them.

A configuration is the root state followed by ``d_max`` neighbor slots,
padded with :data:`STAR`. Since the law of the neighborhood is exchangeable
in the occupied slots, only the root state and the multiset of neighbor
states matter: a canonical class is stored as ``(root index, counts)``
where ``counts[x]`` is the number of neighbors in state ``states[x]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement
from math import comb, factorial, prod

import numpy as np

from ..models.base import STAR, ModelSpec

__all__ = [
    "ConfigSpace",
    "LawVector",
    "enumerate_configs",
    "build_initial_law",
    "marginalize",
    "class_count",
]


def class_count(m, support):
    """Number of canonical classes: m * sum_k C(k + m - 1, m - 1)."""
    return m * sum(comb(k + m - 1, m - 1) for k in support)


class ConfigSpace:
    """Indexed list of canonical neighborhood classes for ``(theta, states)``."""

    def __init__(self, theta, states, labels=None, model=None):
        self.theta = theta
        self.states = tuple(states)
        self.labels = tuple(labels) if labels else tuple(str(s) for s in self.states)
        self.model = model
        self.m = len(self.states)
        self.d_max = theta.d_max
        self.state_index = {s: i for i, s in enumerate(self.states)}

        roots, counts = [], []
        for k in theta.support:
            for r in range(self.m):
                for combo in combinations_with_replacement(range(self.m), k):
                    c = [0] * self.m
                    for x in combo:
                        c[x] += 1
                    roots.append(r)
                    counts.append(tuple(c))
        self.root = np.array(roots, dtype=np.int64)
        self.counts = np.array(counts, dtype=np.int64).reshape(len(roots), self.m)
        self.degree = self.counts.sum(axis=1)
        self.multiplicity = np.array(
            [factorial(int(sum(c))) // prod(factorial(x) for x in c) for c in counts], dtype=np.int64
        )
        self._index = {(r, c): i for i, (r, c) in enumerate(zip(roots, counts))}
        base = self.d_max + 1
        if self.m * float(base) ** self.m >= 2**62:
            raise ValueError("configuration space too large to key with int64")
        self._radix = base ** np.arange(self.m, dtype=np.int64)
        keys = self._keys(self.root, self.counts)
        self._key_order = np.argsort(keys)
        self._sorted_keys = keys[self._key_order]
        # dense inverse table when the key range is small
        self._dense = None
        if self.m * base**self.m <= 2**22:
            self._dense = np.full(self.m * base**self.m, -1, dtype=np.int64)
            self._dense[keys] = np.arange(len(keys))

    def __len__(self):
        return len(self.root)

    def index_of(self, root_idx, counts):
        """Class index for a root index and a count tuple, or -1 if outside C^theta."""
        return self._index.get((int(root_idx), tuple(int(c) for c in counts)), -1)

    def _keys(self, root_idx, counts):
        return np.asarray(root_idx, dtype=np.int64) * int(self._radix[-1] * (self.d_max + 1)) + counts @ self._radix

    def lookup(self, root_idx, counts):
        """Vectorized :meth:`index_of` for arrays of roots and count rows."""
        keys = self._keys(root_idx, np.asarray(counts, dtype=np.int64))
        if self._dense is not None:
            return self._dense[keys]
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.minimum(pos, len(self._sorted_keys) - 1)
        found = self._sorted_keys[pos] == keys
        return np.where(found, self._key_order[pos], -1)

    def canonical(self, entries):
        """Class index of an ordered configuration (codes, STAR padding)."""
        entries = tuple(entries)
        if len(entries) != self.d_max + 1 or entries[0] is STAR:
            return -1
        k = 0
        while k < self.d_max and entries[k + 1] is not STAR:
            k += 1
        if any(e is not STAR for e in entries[k + 1:]):
            return -1
        try:
            r = self.state_index[entries[0]]
            c = [0] * self.m
            for e in entries[1 : k + 1]:
                c[self.state_index[e]] += 1
        except KeyError:
            return -1
        return self.index_of(r, c)

    def config(self, i):
        """Canonical ordered representative: neighbors sorted ascending, STAR padded."""
        nb = [self.states[x] for x in range(self.m) for _ in range(self.counts[i, x])]
        return NeighborhoodConfig((self.states[self.root[i]], *nb) + (STAR,) * (self.d_max - len(nb)))

    def neighbor_states(self, i):
        return tuple(self.states[x] for x in range(self.m) for _ in range(self.counts[i, x]))

    def describe(self, i):
        """Human-readable class string such as ``"S|S,I,*"``."""
        cfg = self.config(i)
        name = lambda s: "*" if s is STAR else self.labels[self.state_index[s]]
        return name(cfg.entries[0]) + "|" + ",".join(name(s) for s in cfg.entries[1:])

    @cached_property
    def root_onehot(self):
        out = np.zeros((len(self), self.m))
        out[np.arange(len(self)), self.root] = 1.0
        return out


@dataclass(frozen=True)
class NeighborhoodConfig:
    entries: tuple

    @property
    def root(self):
        return self.entries[0]

    @property
    def k(self):
        return sum(1 for e in self.entries[1:] if e is not STAR)

    def __str__(self):
        return "(" + ", ".join("*" if e is STAR else str(e) for e in self.entries) + ")"


def enumerate_configs(theta, states):
    """Canonical classes for ``theta`` over ``states`` (a sequence or a ModelSpec)."""
    if isinstance(states, ModelSpec):
        return ConfigSpace(theta, states.states, states.labels, model=states)
    return ConfigSpace(theta, states)


@dataclass
class LawVector:
    """Probability of each canonical class (summed over its ordered members)."""

    space: ConfigSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.space),):
            raise ValueError(f"law has shape {self.values.shape}, expected ({len(self.space)},)")

    @property
    def multiplicity(self):
        return self.space.multiplicity

    @property
    def total(self):
        return float(self.values.sum())

    def ordered_probability(self, entries):
        """Probability of one ordered configuration (class mass / multiplicity)."""
        i = self.space.canonical(entries)
        if i < 0:
            return 0.0
        return float(self.values[i] / self.space.multiplicity[i])

    def marginal(self):
        return marginalize(self)

    def as_dict(self):
        return {self.space.describe(i): float(v) for i, v in enumerate(self.values)}


def _as_state_vector(q, space):
    if isinstance(q, dict):
        vec = np.zeros(space.m)
        for s, p in q.items():
            vec[space.state_index[s]] = p
        return vec
    vec = np.asarray(q, dtype=float)
    if vec.shape != (space.m,):
        raise ValueError(f"expected {space.m} state probabilities")
    return vec


def build_initial_law(theta, q, states=None, space=None):
    """Law of an i.i.d. neighborhood: degree ~ theta, each particle ~ q.

    ``q`` is a mapping state code -> probability or a vector in state order.
    """
    if space is None:
        space = enumerate_configs(theta, states)
    qv = _as_state_vector(q, space)
    if abs(qv.sum() - 1.0) > 1e-12 or np.any(qv < 0):
        raise ValueError("q must be a probability vector")
    theta_k = np.array([theta(k) for k in space.degree])
    with np.errstate(divide="ignore"):
        nb = np.prod(np.where(space.counts > 0, qv[None, :] ** space.counts, 1.0), axis=1)
    values = theta_k * qv[space.root] * space.multiplicity * nb
    return LawVector(space, values)


def marginalize(p):
    """Law of the root state."""
    return np.bincount(p.space.root, weights=p.values, minlength=p.space.m)
