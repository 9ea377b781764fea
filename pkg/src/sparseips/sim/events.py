"""Exact event-driven simulation on finite graphs by Poisson thinning.

Each vertex carries a candidate Poisson clock at its envelope rate
``rate_bound(d_v + 1, T)``; a candidate at time ``t`` is accepted with
probability (total rate at the left limit) / envelope and the jump size is
drawn in proportion to the individual rates. The superposition of the
per-vertex clocks is generated in one vectorized batch per time window.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..errors import GraphError, ModelError
from ..lfode.configs import LawVector, enumerate_configs
from ..graphs import empirical_degree_distribution

__all__ = [
    "EventLog",
    "Marginal",
    "simulate",
    "empirical_measure",
    "neighborhood_empirical_measure",
    "state_counts_on_grid",
]


@dataclass
class EventLog:
    initial: np.ndarray
    times: np.ndarray
    vertices: np.ndarray
    jumps: np.ndarray
    horizon: float

    def __len__(self):
        return len(self.times)

    def states_at(self, t):
        """Configuration at time ``t``; jumps at exactly ``t`` are included (cadlag)."""
        x = np.array(self.initial, copy=True)
        k = int(np.searchsorted(self.times, t, side="right"))
        np.add.at(x, self.vertices[:k], self.jumps[:k])
        return x

    def jump_counts(self):
        return np.bincount(self.vertices, minlength=len(self.initial))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "vertex", "jump"])
        for t, v, j in zip(self.times.tolist(), self.vertices.tolist(), self.jumps.tolist()):
            w.writerow([repr(t), v, j])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, initial, horizon):
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            np.asarray(initial, dtype=np.int64),
            np.array([float(r["time"]) for r in rows]),
            np.array([int(r["vertex"]) for r in rows], dtype=np.int64),
            np.array([int(r["jump"]) for r in rows], dtype=np.int64),
            float(horizon),
        )


@dataclass
class Marginal:
    time: float
    dist: np.ndarray


def simulate(graph, model, init, T, rng, check_acyclic=True, window=10**6):
    """Sample the jump process on ``graph`` over ``[0, T]``.

    ``init`` lists one state code per vertex. Raises :class:`ModelError` if a
    rate exceeds the envelope or a jump leaves the state space.
    """
    if check_acyclic:
        model.order
    n = graph.n
    state = [int(s) for s in np.asarray(init).tolist()]
    if len(state) != n:
        raise ValueError(f"init has {len(state)} entries for {n} vertices")
    valid = set(model.states)
    for s in state:
        if s not in valid:
            raise ModelError(f"initial state {s} not in the state space")
    adj = graph.adjacency
    env = np.array([float(model.rate_bound(len(adj[v]) + 1, T)) for v in range(n)])
    total_env = env.sum()
    times, verts, jumps = [], [], []
    if total_env <= 0 or T <= 0:
        return _log(init, times, verts, jumps, T)

    rate = model.rate
    jset = model.jumps
    homogeneous = model.time_homogeneous
    cache = [None] * n
    env_l = env.tolist()
    p_vertex = env / total_env

    def rates_of(v, t):
        a = state[v]
        nb = tuple(state[w] for w in adj[v])
        rs = [rate(j, t, a, nb) for j in jset]
        tot = sum(rs)
        if tot > env_l[v] * (1 + 1e-12):
            raise ModelError(f"rate {tot:g} exceeds envelope {env_l[v]:g} at vertex {v}, t={t:g}, a={a}, x={nb}")
        return tot, rs

    # windows keep each batch of candidates near `window` in size
    n_windows = max(1, int(np.ceil(total_env * T / window)))
    edges = np.linspace(0.0, T, n_windows + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        k = rng.poisson(total_env * (hi - lo))
        ct = rng.uniform(lo, hi, size=k)
        cv = rng.choice(n, size=k, p=p_vertex)
        cu = rng.random(k)
        order = np.lexsort((cv, ct))
        for t, v, u in zip(ct[order].tolist(), cv[order].tolist(), cu[order].tolist()):
            if homogeneous:
                cached = cache[v]
                if cached is None:
                    cached = cache[v] = rates_of(v, t)
            else:
                cached = rates_of(v, t)
            tot, rs = cached
            threshold = u * env_l[v]
            if threshold >= tot:
                continue
            # reuse the accepted uniform to pick the jump size
            acc = 0.0
            for j, r in zip(jset, rs):
                acc += r
                if threshold < acc:
                    break
            new = state[v] + j
            if new not in valid:
                raise ModelError(f"jump {j} from state {state[v]} leaves the state space at vertex {v}")
            state[v] = new
            times.append(t)
            verts.append(v)
            jumps.append(j)
            if homogeneous:
                cache[v] = None
                for w in adj[v]:
                    cache[w] = None
    return _log(init, times, verts, jumps, T)


def _log(init, times, verts, jumps, T):
    return EventLog(
        np.asarray(init, dtype=np.int64).copy(),
        np.array(times, dtype=float),
        np.array(verts, dtype=np.int64),
        np.array(jumps, dtype=np.int64),
        float(T),
    )


def empirical_measure(log, t, model):
    """Fraction of vertices in each state at time ``t``."""
    x = log.states_at(t)
    idx = np.array([model.index[s] for s in x.tolist()], dtype=np.int64)
    return Marginal(float(t), np.bincount(idx, minlength=model.m) / len(x))


def state_counts_on_grid(log, grid, model):
    """Number of vertices in each state at every grid time, shape (len(grid), m)."""
    x = np.array([model.index[s] for s in log.initial.tolist()], dtype=np.int64)
    counts = np.bincount(x, minlength=model.m).astype(np.int64)
    out = np.empty((len(grid), model.m), dtype=np.int64)
    k = 0
    idx = model.index
    ev_t, ev_v, ev_j = log.times.tolist(), log.vertices.tolist(), log.jumps.tolist()
    cur = [model.states[i] for i in x.tolist()]
    for g, tg in enumerate(np.asarray(grid, dtype=float).tolist()):
        while k < len(ev_t) and ev_t[k] <= tg:
            v = ev_v[k]
            counts[idx[cur[v]]] -= 1
            cur[v] += ev_j[k]
            counts[idx[cur[v]]] += 1
            k += 1
        out[g] = counts
    return out


def neighborhood_empirical_measure(graph, log, t, model, d_max=None, space=None):
    """Empirical law of (own state, neighbor multiset) over vertices at time ``t``.

    Returned as a :class:`LawVector` on ``space`` (by default the canonical
    classes of the graph's empirical degree distribution).
    """
    if space is None:
        space = enumerate_configs(empirical_degree_distribution(graph), model)
    d_max = space.d_max if d_max is None else d_max
    if graph.max_degree > d_max:
        raise GraphError(f"graph degree {graph.max_degree} exceeds d_max={d_max}")
    x = np.array([model.index[s] for s in log.states_at(t).tolist()], dtype=np.int64)
    classes = _classes_of(graph, x, space)
    if np.any(classes < 0):
        raise GraphError("a vertex degree is outside the support of the configuration space")
    return LawVector(space, np.bincount(classes, minlength=len(space)) / graph.n)


def _classes_of(graph, x, space, nb=None):
    nb = graph.padded_neighbors(space.d_max) if nb is None else nb
    nb_states = np.where(nb >= 0, x[np.maximum(nb, 0)], -1)
    counts = (nb_states[:, :, None] == np.arange(space.m)).sum(axis=1)
    return space.lookup(x, counts)
