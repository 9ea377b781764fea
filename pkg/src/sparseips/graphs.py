"""Degree distributions, configuration-model graphs and truncated UGW trees.

Graphs use 0-based integer vertex ids. Tree vertices carry Ulam-Harris
labels: the root is ``()`` and the ``i``-th child of ``v`` is ``v + (i,)``
with ``i`` starting at 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isclose

import numpy as np

from .errors import GraphError

__all__ = [
    "DegreeDistribution",
    "Graph",
    "RootedTree",
    "validate_graphical",
    "sample_configuration_model",
    "sample_degree_sequence",
    "random_regular_graph",
    "empirical_degree_distribution",
    "size_biased",
    "sample_ugw",
    "read_edgelist",
    "write_edgelist",
]


@dataclass(frozen=True)
class DegreeDistribution:
    """Finitely supported probability mass function on the non-negative integers."""

    pmf: dict

    def __post_init__(self):
        pmf = {}
        for k, p in dict(self.pmf).items():
            k = int(k)
            p = float(p)
            if k < 0:
                raise GraphError(f"negative degree {k} in degree distribution")
            if p < 0 or p > 1:
                raise GraphError(f"probability {p} for degree {k} outside [0, 1]")
            if p > 0:
                pmf[k] = pmf.get(k, 0.0) + p
        total = sum(pmf.values())
        if not pmf or abs(total - 1.0) > 1e-12:
            raise GraphError(f"degree probabilities sum to {total}, expected 1")
        object.__setattr__(self, "pmf", dict(sorted(pmf.items())))

    @classmethod
    def delta(cls, k):
        return cls({int(k): 1.0})

    @classmethod
    def from_counts(cls, counts):
        """Normalize a mapping degree -> count (or weight)."""
        counts = {int(k): float(c) for k, c in dict(counts).items() if c > 0}
        total = sum(counts.values())
        if total <= 0:
            raise GraphError("cannot normalize empty degree counts")
        pmf = {k: c / total for k, c in counts.items()}
        # absorb rounding so the sum is exactly representable as 1
        last = max(pmf)
        pmf[last] = 1.0 - sum(p for k, p in pmf.items() if k != last)
        return cls(pmf)

    def __call__(self, k):
        return self.pmf.get(int(k), 0.0)

    @property
    def support(self):
        return tuple(self.pmf)

    @property
    def d_max(self):
        return max(self.pmf)

    @property
    def mean(self):
        return sum(k * p for k, p in self.pmf.items())

    def sample(self, rng, size=None):
        ks = np.fromiter(self.pmf, dtype=np.int64)
        ps = np.fromiter(self.pmf.values(), dtype=float)
        return rng.choice(ks, size=size, p=ps / ps.sum())

    def isclose(self, other, tol=1e-12):
        keys = set(self.pmf) | set(other.pmf)
        return all(isclose(self(k), other(k), abs_tol=tol) for k in keys)

    def __str__(self):
        body = ", ".join(f"{k}: {p:.6g}" for k, p in self.pmf.items())
        return "{" + body + "}"


@dataclass(frozen=True)
class Graph:
    """Finite simple undirected graph stored as sorted adjacency tuples."""

    n: int
    adjacency: tuple

    def __post_init__(self):
        adj = tuple(tuple(sorted(int(u) for u in nb)) for nb in self.adjacency)
        if len(adj) != self.n:
            raise GraphError(f"adjacency has {len(adj)} rows for n={self.n}")
        for v, nb in enumerate(adj):
            if len(set(nb)) != len(nb):
                raise GraphError(f"duplicate neighbor at vertex {v}")
            for u in nb:
                if u == v:
                    raise GraphError(f"self-loop at vertex {v}")
                if not 0 <= u < self.n:
                    raise GraphError(f"neighbor id {u} out of range")
        for v, nb in enumerate(adj):
            for u in nb:
                if v not in adj[u]:
                    raise GraphError(f"asymmetric adjacency between {v} and {u}")
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_edges(cls, n, edges):
        adj = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        return cls(n, tuple(tuple(a) for a in adj))

    @classmethod
    def complete(cls, n):
        return cls.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])

    @property
    def degrees(self):
        return np.array([len(nb) for nb in self.adjacency], dtype=np.int64)

    @property
    def max_degree(self):
        return int(self.degrees.max()) if self.n else 0

    def edges(self):
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    def neighbors(self, v):
        return self.adjacency[v]

    def padded_neighbors(self, width=None):
        """Neighbor ids as an ``(n, width)`` array, padded with -1."""
        width = self.max_degree if width is None else width
        out = np.full((self.n, width), -1, dtype=np.int64)
        for v, nb in enumerate(self.adjacency):
            if len(nb) > width:
                raise GraphError(f"vertex {v} has degree {len(nb)} > {width}")
            out[v, : len(nb)] = nb
        return out

    def to_edgelist(self):
        edges = self.edges()
        lines = [f"{self.n} {len(edges)}"] + [f"{u} {v}" for u, v in edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text):
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise GraphError("edge list must start with a line 'n m'")
        n, m = (int(x) for x in rows[0])
        if len(rows) - 1 != m:
            raise GraphError(f"edge list header declares {m} edges, found {len(rows) - 1}")
        edges = []
        for i, row in enumerate(rows[1:], start=2):
            if len(row) != 2:
                raise GraphError(f"malformed edge on line {i}: {' '.join(row)!r}")
            u, v = int(row[0]), int(row[1])
            if u >= v:
                raise GraphError(f"edge on line {i} must satisfy u < v")
            edges.append((u, v))
        return cls.from_edges(n, edges)


def read_edgelist(path):
    with open(path, encoding="utf-8") as fh:
        return Graph.from_edgelist(fh.read())


def write_edgelist(graph, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(graph.to_edgelist())


def validate_graphical(seq):
    """Erdos-Gallai test: can ``seq`` be the degree sequence of a simple graph?"""
    d = sorted((int(x) for x in seq), reverse=True)
    if not d:
        raise GraphError("degree sequence must be non-empty")
    if d[-1] < 0 or sum(d) % 2:
        return False
    n = len(d)
    prefix = 0
    for k in range(1, n + 1):
        prefix += d[k - 1]
        tail = sum(min(x, k) for x in d[k:])
        if prefix > k * (k - 1) + tail:
            return False
    return True


def _match_stubs(degrees, rng):
    stubs = np.repeat(np.arange(len(degrees)), degrees)
    stubs = stubs[rng.permutation(len(stubs))]
    u, v = stubs[0::2], stubs[1::2]
    return np.minimum(u, v), np.maximum(u, v)


def sample_configuration_model(degrees, rng, mode="reject", max_attempts=10**6):
    """Sample a graph with the given degree sequence by half-edge matching.

    ``mode="reject"`` repeats the uniform matching until it is simple, giving
    the uniform law over simple graphs with exactly these degrees.
    ``mode="erase"`` matches once and then drops self-loops and collapses
    multi-edges, so degrees may decrease.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    n = len(degrees)
    if n == 0:
        raise GraphError("degree sequence must be non-empty")
    if mode == "reject":
        if not validate_graphical(degrees):
            raise GraphError("degree sequence is not graphical")
        for _ in range(max_attempts):
            u, v = _match_stubs(degrees, rng)
            if np.any(u == v):
                continue
            keys = u * n + v
            if len(np.unique(keys)) != len(keys):
                continue
            return Graph.from_edges(n, zip(u.tolist(), v.tolist()))
        raise GraphError(f"no simple matching found in {max_attempts} attempts")
    if mode == "erase":
        if degrees.sum() % 2:
            raise GraphError("degree sum must be even")
        u, v = _match_stubs(degrees, rng)
        keep = u != v
        keys = np.unique(u[keep] * n + v[keep])
        return Graph.from_edges(n, zip((keys // n).tolist(), (keys % n).tolist()))
    raise ValueError(f"unknown mode {mode!r}")


def sample_degree_sequence(theta, n, rng):
    """Draw ``n`` i.i.d. degrees from ``theta``; redraw the last until the sum is even."""
    degrees = np.asarray(theta.sample(rng, size=n), dtype=np.int64)
    # an all-even support always yields an even sum
    while degrees.sum() % 2:
        degrees[-1] = theta.sample(rng)
    return degrees


def random_regular_graph(n, d, rng, mode="reject", max_attempts=10**6):
    if n * d % 2:
        raise GraphError("n * d must be even")
    return sample_configuration_model([d] * n, rng, mode=mode, max_attempts=max_attempts)


def empirical_degree_distribution(graph):
    if graph.n == 0:
        raise GraphError("empty graph has no degree distribution")
    ks, counts = np.unique(graph.degrees, return_counts=True)
    return DegreeDistribution.from_counts(dict(zip(ks.tolist(), counts.tolist())))


def size_biased(theta):
    """Offspring law of non-root UGW vertices: k -> (k+1) theta(k+1) / mean."""
    mean = theta.mean
    if mean <= 0:
        raise GraphError("size-biasing needs a distribution with positive mean")
    return DegreeDistribution.from_counts({k - 1: k * p / mean for k, p in theta.pmf.items() if k >= 1})


@dataclass
class RootedTree:
    """Finite rooted tree with Ulam-Harris labels."""

    children: dict = field(default_factory=lambda: {(): 0})
    depth: int = 0

    @property
    def vertices(self):
        return list(self.children)

    def parent(self, label):
        if not label:
            return None
        return label[:-1]

    def child_labels(self, label):
        return [label + (i,) for i in range(1, self.children[label] + 1)]

    def degree(self, label):
        return self.children[label] + (1 if label else 0)

    def __len__(self):
        return len(self.children)

    def to_graph(self):
        """Relabel to a :class:`Graph` in breadth-first order (root is 0)."""
        order = sorted(self.children, key=lambda lab: (len(lab), lab))
        index = {lab: i for i, lab in enumerate(order)}
        edges = [(index[lab[:-1]], index[lab]) for lab in order if lab]
        return Graph.from_edges(len(order), edges), order


def sample_ugw(theta, depth, rng):
    """Unimodular Galton-Watson tree truncated after ``depth`` generations."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    offspring = size_biased(theta) if theta.mean > 0 else None
    tree = RootedTree(children={(): 0}, depth=depth)
    frontier = [()]
    for gen in range(depth):
        nxt = []
        for label in frontier:
            law = theta if gen == 0 else offspring
            k = int(law.sample(rng)) if law is not None else 0
            tree.children[label] = k
            for i in range(1, k + 1):
                tree.children[label + (i,)] = 0
                nxt.append(label + (i,))
        frontier = nxt
    return tree
