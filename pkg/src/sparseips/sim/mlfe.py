"""Particle approximation of the Markov local-field equation.

``N`` independent copies of the root-neighborhood system are advanced
together in discrete time. Root slots jump at the model rate; a neighbor
slot in state ``x`` whose root is in state ``y`` jumps at the ensemble
estimate of the degree-weighted conditional rate of a root in state ``x``
with a neighbor in state ``y``. Empty conditioning cells give rate 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lfode.configs import LawVector
from ..lfode.integrator import output_grid
from ..lfode.ode import LocalFieldODE

__all__ = ["MLFEResult", "mlfe_ensemble"]


@dataclass
class MLFEResult:
    space: object
    t: np.ndarray
    values: np.ndarray  # (len(t), n_classes) empirical class frequencies

    def law(self, i):
        return LawVector(self.space, self.values[i])

    def marginals(self):
        return self.values @ self.space.root_onehot


def _initial_copies(p0, N, rng):
    sp = p0.space
    w = np.maximum(p0.values, 0.0)
    cls = rng.choice(len(sp), size=N, p=w / w.sum())
    root = sp.root[cls].copy()
    slots = np.full((N, sp.d_max), -1, dtype=np.int64)
    for i, c in enumerate(cls.tolist()):
        nb = np.repeat(np.arange(sp.m), sp.counts[c])
        slots[i, : len(nb)] = rng.permutation(nb)
    return root, slots


def mlfe_ensemble(theta, model, p0, N, dt, T, rng, grid_step=None, max_step_prob=0.1):
    """Run the ensemble and return empirical class laws on the output grid.

    Each step freezes all rates at the left limit and lets every slot jump
    with probability ``1 - exp(-rate * dt)``.
    """
    if N < 1:
        raise ValueError("need at least one copy")
    space = p0.space
    if dt * model.rate_bound(space.d_max + 1, T) > max_step_prob:
        raise ValueError(f"dt={dt} too large: dt * max envelope rate exceeds {max_step_prob}")
    system = LocalFieldODE(model, theta, space)
    jumps = np.array(model.jumps)
    J, m = len(jumps), space.m
    # dest[ji, x]: index of states[x] + j, or -1
    dest = np.array([[space.state_index.get(s + j, -1) for s in space.states] for j in model.jumps])

    root, slots = _initial_copies(p0, N, rng)
    grid = output_grid(T, grid_step)
    n_steps = int(round(T / dt))
    record_at = {int(round(g / dt)): gi for gi, g in enumerate(grid)}
    values = np.zeros((len(grid), len(space)))
    times = np.asarray(grid, dtype=float)
    occupied = slots >= 0
    safe = np.where(occupied, slots, 0)
    counts = (np.where(occupied, slots, -1)[:, :, None] == np.arange(m)).sum(axis=1)
    allowed = dest >= 0  # (J, m)

    for step in range(n_steps + 1):
        t = step * dt
        cls = space.lookup(root, counts)
        freq = np.bincount(cls, minlength=len(space)) / N
        if step in record_at:
            values[record_at[step]] = freq
        if step == n_steps:
            break
        R = system.rates(t)
        R = np.where(allowed[:, space.root], R, 0.0)  # (J, classes)
        # the class-level estimate equals the copy-level one, weights are frequencies
        gamma = system.neighbor_rates(t, freq, R)
        gamma = np.where(allowed[:, :, None], gamma, 0.0)  # (J, x, y)

        root_tot = R.sum(axis=0)
        nb_tot = gamma.sum(axis=0)
        p_root = -np.expm1(-root_tot * dt)[cls]  # (N,)
        p_nb = np.where(occupied, -np.expm1(-nb_tot * dt)[safe, root[:, None]], 0.0)  # (N, d)
        u = rng.random((N, space.d_max + 1))

        fire_r = np.flatnonzero(u[:, 0] < p_root)
        if len(fire_r):
            c = cls[fire_r]
            frac = u[fire_r, 0] / p_root[fire_r] * root_tot[c]
            cum = np.cumsum(R[:, c], axis=0)
            ji = np.minimum((frac[None, :] >= cum).sum(axis=0), J - 1)
            new_root = dest[ji, root[fire_r]]
        n_idx, s_idx = np.nonzero(u[:, 1:] < p_nb)
        if len(n_idx):
            x, y = slots[n_idx, s_idx], root[n_idx]
            frac = u[n_idx, s_idx + 1] / p_nb[n_idx, s_idx] * nb_tot[x, y]
            cum = np.cumsum(gamma[:, x, y], axis=0)
            ji = np.minimum((frac[None, :] >= cum).sum(axis=0), J - 1)
            nx = dest[ji, x]
            slots[n_idx, s_idx] = nx
            safe[n_idx, s_idx] = nx
            np.subtract.at(counts, (n_idx, x), 1)
            np.add.at(counts, (n_idx, nx), 1)
        if len(fire_r):
            root[fire_r] = new_root
    return MLFEResult(space, times, values)
