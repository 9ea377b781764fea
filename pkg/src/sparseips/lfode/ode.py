"""Forward equations for the law of the root and its neighbors.

In the canonical basis the system is the forward equation of a Markov
chain on classes ``(root, neighbor multiset)``:

* the root in state ``a`` jumps by ``j`` at the model rate evaluated on the
  class;
* each neighbor in state ``x`` of a root in state ``y`` jumps by ``j`` at
  the conditional rate ``gamma[j, x, y]``: the degree-weighted mean rate of
  a root in state ``x`` given that one of its neighbors is in state ``y``
  (zero when no mass conditions on that pair).

Summed over a class, ``k * 1{b_1 = y}`` with exchangeable slots is the
number of neighbors in state ``y``, which is why ``gamma`` is weighted by
neighbor counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ModelError
from ..models.base import STAR, evaluate_rate
from .configs import LawVector, enumerate_configs
from .integrator import clamp_and_normalize, dopri5, output_grid, rk4

__all__ = ["LocalFieldODE", "ODESolution", "psi", "ode_rhs", "integrate"]


class LocalFieldODE:
    """Right-hand side of the neighborhood forward equation for one (model, theta)."""

    def __init__(self, model, theta, space=None):
        self.model = model
        self.theta = theta
        self.space = space if space is not None else enumerate_configs(theta, model)
        sp = self.space
        self.n = len(sp)
        self._rate_cache = None

        # root moves: class i -> class with root + j and the same counts
        self.root_moves = []
        # neighbor moves: one neighbor in state x -> x + j
        self.nb_moves = []
        for j in model.jumps:
            src, tgt = [], []
            nsrc, ntgt, nx, ncnt = [], [], [], []
            for i in range(self.n):
                r, c = int(sp.root[i]), sp.counts[i]
                dest = sp.state_index.get(sp.states[r] + j)
                if dest is not None:
                    src.append(i)
                    tgt.append(sp.index_of(dest, c))
                for x in np.flatnonzero(c):
                    y = sp.state_index.get(sp.states[x] + j)
                    if y is None:
                        continue
                    c2 = c.copy()
                    c2[x] -= 1
                    c2[y] += 1
                    nsrc.append(i)
                    ntgt.append(sp.index_of(r, c2))
                    nx.append(x)
                    ncnt.append(c[x])
            self.root_moves.append((np.array(src, dtype=np.int64), np.array(tgt, dtype=np.int64)))
            self.nb_moves.append(
                (
                    np.array(nsrc, dtype=np.int64),
                    np.array(ntgt, dtype=np.int64),
                    np.array(nx, dtype=np.int64),
                    np.array(ncnt, dtype=float),
                )
            )
        self._nb_root = [sp.root[s] for s, _, _, _ in self.nb_moves]

    def rates(self, t):
        """Model rate of every jump for the root of every class, shape (J, n)."""
        if self.model.time_homogeneous and self._rate_cache is not None:
            return self._rate_cache
        sp = self.space
        R = np.zeros((len(self.model.jumps), self.n))
        for ji, j in enumerate(self.model.jumps):
            for i in range(self.n):
                a = sp.states[sp.root[i]]
                r = evaluate_rate(self.model, j, t, a, sp.neighbor_states(i))
                if r > 0 and a + j not in sp.state_index:
                    raise ModelError(f"positive rate for jump {j} leaving the state space from {a}")
                R[ji, i] = r
        if self.model.time_homogeneous:
            self._rate_cache = R
        return R

    def neighbor_rates(self, t, p, R=None):
        """Conditional neighbor rates ``gamma[j, x, y]``, shape (J, m, m)."""
        R = self.rates(t) if R is None else R
        sp = self.space
        w = np.maximum(p, 0.0)
        H = sp.root_onehot
        den = H.T @ (sp.counts * w[:, None])
        num = H.T[None] @ ((R * w[None, :])[:, :, None] * sp.counts[None])
        with np.errstate(invalid="ignore", divide="ignore"):
            gamma = np.where(den[None] > 0, num / den[None], 0.0)
        return gamma

    def rhs(self, t, p):
        R = self.rates(t)
        gamma = self.neighbor_rates(t, p, R)
        out = np.zeros(self.n)
        for ji in range(len(self.model.jumps)):
            src, tgt = self.root_moves[ji]
            flux = R[ji, src] * p[src]
            nsrc, ntgt, nx, ncnt = self.nb_moves[ji]
            nflux = p[nsrc] * ncnt * gamma[ji, nx, self._nb_root[ji]]
            out += np.bincount(tgt, flux, self.n) - np.bincount(src, flux, self.n)
            out += np.bincount(ntgt, nflux, self.n) - np.bincount(nsrc, nflux, self.n)
        return out

    def psi(self, t, f, a, v, ell, j):
        """Jump intensity of slot ``v`` in ordered configuration ``a``, shifted by ``-ell``.

        Slot 0 returns the model rate at ``a - ell * e_root`` (zero off the
        configuration space); slot ``v >= 1`` returns the conditional rate of
        a root in state ``a_v - ell`` given a neighbor in state ``a_root``,
        with the convention 0/0 = 0.
        """
        sp = self.space
        a = tuple(a)
        if j not in self.model.jumps or a[v] is STAR:
            return 0.0
        if v == 0:
            shifted = (a[0] - ell,) + a[1:]
            if sp.canonical(shifted) < 0:
                return 0.0
            return evaluate_rate(self.model, j, t, shifted[0], shifted[1:])
        x = sp.state_index.get(a[v] - ell)
        y = sp.state_index.get(a[0])
        if x is None or y is None:
            return 0.0
        values = f.values if isinstance(f, LawVector) else np.asarray(f)
        gamma = self.neighbor_rates(t, values)
        return float(gamma[self.model.jumps.index(j), x, y])


def _system_for(space):
    system = getattr(space, "_system", None)
    if system is None:
        if space.model is None:
            raise ValueError("configuration space carries no model")
        system = LocalFieldODE(space.model, space.theta, space)
        space._system = system
    return system


def psi(t, f, a, v, ell, j):
    """Psi functional for a law ``f`` over a model-bound configuration space."""
    return _system_for(f.space).psi(t, f, a, v, ell, j)


def ode_rhs(t, p):
    """Time derivative of the class masses of ``p``."""
    return _system_for(p.space).rhs(t, p.values)


@dataclass
class ODESolution:
    space: object
    t: np.ndarray
    values: np.ndarray
    on_grid: np.ndarray
    stats: dict

    def law(self, i):
        return LawVector(self.space, self.values[i])

    def marginals(self):
        """Root marginals at every stored time, shape (len(t), m)."""
        return self.values @ self.space.root_onehot

    def grid(self):
        return self.t[self.on_grid], self.values[self.on_grid]

    def grid_marginals(self):
        return self.t[self.on_grid], self.marginals()[self.on_grid]


def integrate(model, theta, p0, T, rtol=1e-6, atol=1e-8, grid_step=None, method="dopri5", h=1e-2,
              require_acyclic=True):
    """Solve the neighborhood forward equation on ``[0, T]`` from ``p0``.

    ``method="rk4"`` switches to the fixed-step fallback with step ``h``.
    After every accepted step entries in ``[-1e-10, 0)`` are zeroed and the
    law is renormalized; the number of such events and the clamped mass are
    reported in ``stats``.
    """
    if require_acyclic:
        model.order  # raises CycleError
    space = p0.space
    if space.theta is not theta and not space.theta.isclose(theta):
        raise ValueError("p0 lives on a configuration space for a different theta")
    system = LocalFieldODE(model, theta, space)
    grid = output_grid(T, grid_step)
    if method == "dopri5":
        traj = dopri5(system.rhs, p0.values, T, rtol=rtol, atol=atol, grid=grid, post_step=clamp_and_normalize)
    elif method == "rk4":
        traj = rk4(system.rhs, p0.values, T, h, grid=grid, post_step=clamp_and_normalize)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ODESolution(space, traj.t, traj.y, traj.on_grid, traj.stats)
