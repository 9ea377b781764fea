"""Explicit Runge-Kutta integrators for the forward equations.

``dopri5`` is the Dormand-Prince 5(4) embedded pair with a PI step-size
controller; ``rk4`` is a fixed-step classical scheme kept for debugging.
Both accept a ``post_step`` hook applied to every accepted state, used to
clamp round-off negatives and renormalize probability vectors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import IntegratorError

log = logging.getLogger(__name__)

__all__ = ["Trajectory", "dopri5", "rk4", "output_grid", "clamp_and_normalize"]

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between the 5th and embedded 4th order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    on_grid: np.ndarray
    stats: dict = field(default_factory=dict)

    def grid(self):
        """Times and states restricted to the requested output grid."""
        return self.t[self.on_grid], self.y[self.on_grid]


def output_grid(T, step):
    if step is None or step <= 0:
        return np.array([0.0, float(T)])
    n = int(np.floor(T / step + 1e-9))
    grid = np.arange(n + 1) * step
    if T - grid[-1] > 1e-9 * max(1.0, T):
        grid = np.append(grid, T)
    return grid


def clamp_and_normalize(y, stats, clamp_tol=1e-10):
    """Zero entries in ``[-clamp_tol, 0)`` and rescale to unit mass."""
    small = (y < 0) & (y >= -clamp_tol)
    if small.any():
        stats["clamp_events"] = stats.get("clamp_events", 0) + 1
        stats["clamped_mass"] = stats.get("clamped_mass", 0.0) - float(y[small].sum())
        y = np.where(small, 0.0, y)
    if (y < -clamp_tol).any():
        stats["large_negative"] = min(stats.get("large_negative", 0.0), float(y.min()))
        log.warning("entry %.3e below clamp tolerance after accepted step", y.min())
    total = y.sum()
    if total > 0:
        y = y / total
    return y


def _initial_step(f, t0, y0, f0, rtol, atol, order=5):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    d2 = np.sqrt(np.mean(((f(t0 + h0, y1) - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


def dopri5(f, y0, T, rtol=1e-6, atol=1e-8, grid=None, post_step=None, h0=None, max_steps=10**6):
    """Integrate ``y' = f(t, y)`` on ``[0, T]``.

    Steps are shortened so that every time in ``grid`` is hit exactly; the
    returned trajectory holds all accepted step ends, with ``on_grid``
    flagging the requested output times.
    """
    grid = output_grid(T, None) if grid is None else np.asarray(grid, dtype=float)
    stats = {"accepted": 0, "rejected": 0, "rhs_evals": 0}

    def rhs(t, y):
        stats["rhs_evals"] += 1
        return f(t, y)

    t = 0.0
    y = np.array(y0, dtype=float)
    if post_step is not None:
        y = post_step(y, stats)
    ts, ys, flags = [t], [y.copy()], [True]
    gi = 1 if grid[0] == 0.0 else 0
    if gi == 0:
        flags[0] = False
    k1 = rhs(t, y)
    h = h0 if h0 is not None else _initial_step(rhs, t, y, k1, rtol, atol)
    err_prev = 1e-4
    K = np.empty((7, y.size))
    while t < T - 1e-12 * max(1.0, T):
        if stats["accepted"] + stats["rejected"] >= max_steps:
            raise IntegratorError(f"exceeded {max_steps} steps at t={t:g}")
        target = grid[gi] if gi < len(grid) else T
        h_free = h
        h = min(h, target - t)
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegratorError(
                f"step size underflow at t={t:.6g} (h={h:.3e}, accepted={stats['accepted']}, rejected={stats['rejected']})"
            )
        K[0] = k1
        for s in range(1, 7):
            ys_ = y + h * np.dot(_A[s], K[:s])
            K[s] = rhs(t + _C[s] * h, ys_)
        y_new = y + h * (_B @ K)
        err_vec = h * (_E @ K) / (atol + rtol * np.maximum(np.abs(y), np.abs(y_new)))
        err = float(np.sqrt(np.mean(err_vec**2)))
        if not np.isfinite(err):
            stats["rejected"] += 1
            h *= 0.2
            continue
        if err <= 1.0:
            landed = abs((t + h) - target) <= 1e-12 * max(1.0, T)
            t = target if landed else t + h
            y = y_new if post_step is None else post_step(y_new, stats)
            # FSAL: the last stage is f at the new point unless post_step changed y
            k1 = K[6] if post_step is None else rhs(t, y)
            stats["accepted"] += 1
            ts.append(t)
            ys.append(y.copy())
            on = landed and gi < len(grid)
            flags.append(on)
            if on:
                gi += 1
            fac = 0.9 * max(err, 1e-10) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            # a step clipped to reach a grid time should not shrink the next one
            h = max(h * min(5.0, max(0.2, fac)), h_free if h < h_free else 0.0)
            err_prev = max(err, 1e-4)
        else:
            stats["rejected"] += 1
            h *= max(0.2, 0.9 * err ** (-1 / 5))
    return Trajectory(np.array(ts), np.array(ys), np.array(flags), stats)


def rk4(f, y0, T, h, grid=None, post_step=None):
    """Fixed-step classical Runge-Kutta; steps are shortened to hit grid times."""
    grid = output_grid(T, None) if grid is None else np.asarray(grid, dtype=float)
    stats = {"accepted": 0, "rejected": 0, "rhs_evals": 0}
    t = 0.0
    y = np.array(y0, dtype=float)
    if post_step is not None:
        y = post_step(y, stats)
    ts, ys, flags = [t], [y.copy()], [grid[0] == 0.0]
    gi = 1 if grid[0] == 0.0 else 0
    while t < T - 1e-12 * max(1.0, T):
        target = grid[gi] if gi < len(grid) else T
        step = min(h, target - t)
        k1 = f(t, y)
        k2 = f(t + step / 2, y + step / 2 * k1)
        k3 = f(t + step / 2, y + step / 2 * k2)
        k4 = f(t + step, y + step * k3)
        stats["rhs_evals"] += 4
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if post_step is not None:
            y = post_step(y, stats)
        landed = abs(t + step - target) <= 1e-12 * max(1.0, T)
        t = target if landed else t + step
        stats["accepted"] += 1
        ts.append(t)
        ys.append(y.copy())
        flags.append(landed and gi < len(grid))
        if landed and gi < len(grid):
            gi += 1
    return Trajectory(np.array(ts), np.array(ys), np.array(flags), stats)
