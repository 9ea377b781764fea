"""Forward Kolmogorov equation of the full chain on a tiny graph.

Used as an exact oracle for :func:`simulate`. The global law lives on
``m ** n`` configurations, so the vertex count is capped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from ..errors import StateSpaceError
from ..lfode.integrator import clamp_and_normalize, dopri5, output_grid

__all__ = ["MasterSolution", "exact_master_equation"]


@dataclass
class MasterSolution:
    t: np.ndarray
    vertex_marginals: np.ndarray  # (len(t), n, m)
    joint: Optional[np.ndarray]  # (len(t), m ** n) or None when too large
    stats: dict

    @property
    def mean_marginals(self):
        """Expected empirical measure, shape (len(t), m)."""
        return self.vertex_marginals.mean(axis=1)


def _product_law(init_dist, n, m, digits, index):
    def as_vec(q):
        if isinstance(q, dict):
            v = np.zeros(m)
            for s, p in q.items():
                v[index[s]] = p
            return v
        return np.asarray(q, dtype=float)

    per_vertex = isinstance(init_dist, (list, tuple)) and any(isinstance(q, dict) for q in init_dist)
    if not per_vertex and (isinstance(init_dist, dict) or np.ndim(init_dist) == 1):
        qs = [as_vec(init_dist)] * n
    else:
        qs = [as_vec(q) for q in init_dist]
        if len(qs) != n:
            raise ValueError(f"need one initial law per vertex, got {len(qs)} for {n}")
    p = np.ones(digits.shape[0])
    for v in range(n):
        p *= qs[v][digits[:, v]]
    return p


def exact_master_equation(graph, model, init_dist, T, dt_out, cap=6, max_states=10**6,
                          rtol=1e-8, atol=1e-10, keep_joint_below=10**5):
    """Integrate the global forward equation from a product initial law.

    ``init_dist`` is one state law (mapping or vector) shared by all
    vertices, or a list with one law per vertex.
    """
    n, m = graph.n, model.m
    if n > cap:
        raise StateSpaceError(f"{n} vertices exceeds the cap of {cap}")
    size = m**n
    if size > max_states:
        raise StateSpaceError(f"{size} global states exceeds {max_states}")
    place = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    codes = np.arange(size, dtype=np.int64)
    digits = (codes[:, None] // place[None, :]) % m
    states = np.array(model.states)

    # local configurations (own state, neighbor counts) for every (config, vertex)
    src_list, tgt_list, key_list, jidx_list = [], [], [], []
    local_keys = {}
    for v in range(n):
        nb = list(graph.adjacency[v])
        counts = np.zeros((size, m), dtype=np.int64)
        for w in nb:
            counts[codes, digits[:, w]] += 1
        own = digits[:, v]
        key_arr = own * (n + 1) ** m + counts @ ((n + 1) ** np.arange(m))
        uniq, inv = np.unique(key_arr, return_inverse=True)
        kid = np.empty(len(uniq), dtype=np.int64)
        for u, kk in enumerate(uniq.tolist()):
            if kk not in local_keys:
                row = int(np.flatnonzero(key_arr == kk)[0])
                nb_states = tuple(int(states[x]) for x in range(m) for _ in range(counts[row, x]))
                local_keys[kk] = (len(local_keys), int(states[own[row]]), nb_states)
            kid[u] = local_keys[kk][0]
        for ji, j in enumerate(model.jumps):
            dest = np.array([model.index.get(int(s) + j, -1) for s in states])
            ok = dest[own] >= 0
            src_list.append(codes[ok])
            tgt_list.append(codes[ok] + (dest[own[ok]] - own[ok]) * place[v])
            key_list.append(kid[inv[ok]])
            jidx_list.append(np.full(ok.sum(), ji))
    src = np.concatenate(src_list)
    tgt = np.concatenate(tgt_list)
    key = np.concatenate(key_list)
    jid = np.concatenate(jidx_list)
    table = sorted(local_keys.values())

    def local_rates(t):
        R = np.empty((len(model.jumps), len(table)))
        for ji, j in enumerate(model.jumps):
            for k, a, nb in table:
                R[ji, k] = model.rate(j, t, a, nb)
        return R

    def generator(t):
        w = local_rates(t)[jid, key]
        nz = w > 0
        flow = sparse.csr_matrix((w[nz], (tgt[nz], src[nz])), shape=(size, size))
        out = np.bincount(src[nz], w[nz], size)
        return (flow - sparse.diags(out)).tocsr()

    if model.time_homogeneous:
        A = generator(0.0)
        rhs = lambda t, p: A @ p
    else:
        rhs = lambda t, p: generator(t) @ p

    p0 = _product_law(init_dist, n, m, digits, model.index)
    grid = output_grid(T, dt_out)
    traj = dopri5(rhs, p0, T, rtol=rtol, atol=atol, grid=grid, post_step=clamp_and_normalize)
    tg, P = traj.grid()
    vm = np.zeros((len(tg), n, m))
    for v in range(n):
        for x in range(m):
            vm[:, v, x] = P[:, digits[:, v] == x].sum(axis=1)
    joint = P if size <= keep_joint_below else None
    return MasterSolution(tg, vm, joint, traj.stats)
