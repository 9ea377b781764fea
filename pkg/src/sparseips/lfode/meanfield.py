"""Mean-field baselines on the single-site law.

``kernel="annealed"``: a particle of degree ``k ~ theta`` sees ``k``
neighbors drawn i.i.d. from the current law; the expected rate is an exact
sum over neighbor multisets.

``kernel="complete"``: the complete-graph limit, in which every particle
sees the population law itself. It requires ``model.field_rate``.
"""

from __future__ import annotations

from itertools import combinations_with_replacement
from math import factorial, prod

import numpy as np

from ..models.base import evaluate_rate
from .integrator import clamp_and_normalize, dopri5, output_grid

__all__ = ["mean_field_ode", "MeanFieldRHS"]


class MeanFieldRHS:
    def __init__(self, model, theta, kernel="annealed"):
        if kernel not in ("annealed", "complete"):
            raise ValueError(f"unknown mean-field kernel {kernel!r}")
        if kernel == "complete" and model.field_rate is None:
            raise ValueError(f"model {model.name!r} has no complete-graph field rate")
        self.model = model
        self.theta = theta
        self.kernel = kernel
        m = model.m
        self.moves = []
        for j in model.jumps:
            src = [i for i, a in enumerate(model.states) if a + j in model.index]
            tgt = [model.index[model.states[i] + j] for i in src]
            self.moves.append((np.array(src, dtype=np.int64), np.array(tgt, dtype=np.int64)))
        self.blocks = []
        if kernel == "annealed":
            for k in theta.support:
                counts = []
                for combo in combinations_with_replacement(range(m), k):
                    c = [0] * m
                    for x in combo:
                        c[x] += 1
                    counts.append(c)
                counts = np.array(counts, dtype=np.int64).reshape(len(counts), m)
                coef = np.array([factorial(k) / prod(factorial(x) for x in c) for c in counts])
                self.blocks.append((theta(k), counts, coef))
        self._cache = {}

    def _rate_tables(self, t):
        if self.model.time_homogeneous and self._cache:
            return self._cache["tables"]
        tables = []
        for _, counts, _ in self.blocks:
            R = np.zeros((len(self.model.jumps), self.model.m, len(counts)))
            for ci, c in enumerate(counts):
                nb = tuple(s for x, s in enumerate(self.model.states) for _ in range(c[x]))
                for ji, j in enumerate(self.model.jumps):
                    for ai, a in enumerate(self.model.states):
                        R[ji, ai, ci] = evaluate_rate(self.model, j, t, a, nb)
            tables.append(R)
        if self.model.time_homogeneous:
            self._cache["tables"] = tables
        return tables

    def expected_rates(self, t, mu):
        """Mean rate of each jump from each state, shape (J, m)."""
        mu = np.maximum(mu, 0.0)
        if self.kernel == "complete":
            law = dict(zip(self.model.states, mu))
            return np.array(
                [[self.model.field_rate(j, t, a, law) for a in self.model.states] for j in self.model.jumps]
            )
        out = np.zeros((len(self.model.jumps), self.model.m))
        for (w, counts, coef), R in zip(self.blocks, self._rate_tables(t)):
            probs = coef * np.prod(mu[None, :] ** counts, axis=1)
            out += w * (R @ probs)
        return out

    def __call__(self, t, mu):
        E = self.expected_rates(t, mu)
        out = np.zeros_like(mu)
        for ji, (src, tgt) in enumerate(self.moves):
            flux = mu[src] * E[ji, src]
            out += np.bincount(tgt, flux, len(mu)) - np.bincount(src, flux, len(mu))
        return out


def mean_field_ode(model, theta, mu0, T, kernel="annealed", rtol=1e-6, atol=1e-8, grid_step=None):
    """Integrate the mean-field forward equation; returns a :class:`Trajectory`."""
    mu0 = np.asarray(mu0, dtype=float)
    if mu0.shape != (model.m,) or abs(mu0.sum() - 1.0) > 1e-9:
        raise ValueError("mu0 must be a probability vector over the model states")
    rhs = MeanFieldRHS(model, theta, kernel)
    return dopri5(rhs, mu0, T, rtol=rtol, atol=atol, grid=output_grid(T, grid_step), post_step=clamp_and_normalize)
