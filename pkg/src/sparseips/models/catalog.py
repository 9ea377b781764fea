"""Built-in example dynamics.

State codes are small integers. The seizure model packs its product state
``(stage, excitability)`` into ``2 * stage + type`` with ``type = 0`` for
excitatory (``+alpha_plus``) and ``type = 1`` for inhibitory
(``-alpha_minus``) neurons, so the single jump ``(1, 0)`` becomes ``+2``.
"""

from __future__ import annotations

import math

from ..errors import ConfigError
from .base import ModelSpec

__all__ = ["builtin", "BUILTINS"]

_ALIASES = {
    "β": "beta",
    "γ": "gamma",
    "σ": "sigma",
    "α": "alpha",
    "α+": "alpha_plus",
    "α₊": "alpha_plus",
    "α-": "alpha_minus",
    "α₋": "alpha_minus",
    "β1": "beta1",
    "β2": "beta2",
}


def _get(params, key, default=None, positive=False):
    if key in params:
        value = params[key]
    elif default is not None:
        value = default
    else:
        raise ConfigError(f"missing parameter {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"parameter {key!r} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value < 0 or (positive and value == 0):
        raise ConfigError(f"parameter {key!r} must be {'positive' if positive else 'non-negative'}")
    return value


def sir(params):
    beta, gamma = _get(params, "beta"), _get(params, "gamma")

    def rate(j, t, a, nb):
        if a == 0:
            return beta * nb.count(1)
        if a == 1:
            return gamma
        return 0.0

    return ModelSpec(
        name="sir",
        states=(0, 1, 2),
        labels=("S", "I", "R"),
        jumps=(1,),
        rate=rate,
        declared_edges={(0, 1), (1, 2)},
        rate_bound=lambda d, t: max(beta * (d - 1), gamma),
        params={"beta": beta, "gamma": gamma},
    )


def sis(params):
    """Two-state flip S <-> I. Cyclic on purpose: used to exercise the checks."""
    beta, gamma = _get(params, "beta", 1.0), _get(params, "gamma", 1.0)

    def rate(j, t, a, nb):
        if a == 0 and j == 1:
            return beta * nb.count(1)
        if a == 1 and j == -1:
            return gamma
        return 0.0

    return ModelSpec(
        name="sis",
        states=(0, 1),
        labels=("S", "I"),
        jumps=(1, -1),
        rate=rate,
        declared_edges={(0, 1), (1, 0)},
        rate_bound=lambda d, t: max(beta * (d - 1), gamma),
        params={"beta": beta, "gamma": gamma},
    )


def seir(params):
    beta, sigma, gamma = _get(params, "beta"), _get(params, "sigma"), _get(params, "gamma")

    def rate(j, t, a, nb):
        if a == 0:
            return beta * nb.count(2)
        if a == 1:
            return sigma
        if a == 2:
            return gamma
        return 0.0

    return ModelSpec(
        name="seir",
        states=(0, 1, 2, 3),
        labels=("S", "E", "I", "R"),
        jumps=(1,),
        rate=rate,
        declared_edges={(0, 1), (1, 2), (2, 3)},
        rate_bound=lambda d, t: max(beta * (d - 1), sigma, gamma),
        params={"beta": beta, "sigma": sigma, "gamma": gamma},
    )


def two_strain_sir(params):
    b1, b2, gamma = _get(params, "beta1"), _get(params, "beta2"), _get(params, "gamma")

    # S=0, I1=1, I2=2, R=3: S->I1 and I2->R are +1, S->I2 and I1->R are +2
    def rate(j, t, a, nb):
        if a == 0:
            return b1 * nb.count(1) if j == 1 else b2 * nb.count(2)
        if a == 1 and j == 2:
            return gamma
        if a == 2 and j == 1:
            return gamma
        return 0.0

    return ModelSpec(
        name="two_strain_sir",
        states=(0, 1, 2, 3),
        labels=("S", "I1", "I2", "R"),
        jumps=(1, 2),
        rate=rate,
        declared_edges={(0, 1), (0, 2), (1, 3), (2, 3)},
        rate_bound=lambda d, t: max(max(b1, b2) * (d - 1), gamma),
        params={"beta1": b1, "beta2": b2, "gamma": gamma},
    )


def seizure(params):
    a_plus = _get(params, "alpha_plus")
    a_minus = _get(params, "alpha_minus")
    beta = _get(params, "beta")
    cap = _get(params, "recovery_cap", 5.0, positive=True)

    def rate(j, t, a, nb):
        if j != 2:
            return 0.0
        stage, kind = divmod(a, 2)
        if stage == 2:
            return 0.0
        # inhibition from susceptible inhibitory neighbors (code 1)
        inhib = a_minus * nb.count(1)
        if stage == 0:
            excit = a_plus if kind == 0 else -a_minus
            seizing = nb.count(2) + nb.count(3)
            return max(0.0, excit + beta * seizing - inhib)
        den = len(nb) - (1.0 + inhib)
        if den <= 0:
            return cap
        return min(cap, max(0.0, (1.0 + inhib) / den))

    return ModelSpec(
        name="seizure",
        states=(0, 1, 2, 3, 4, 5),
        labels=("S+", "S-", "I+", "I-", "R+", "R-"),
        jumps=(2,),
        rate=rate,
        declared_edges={(0, 2), (1, 3), (2, 4), (3, 5)},
        rate_bound=lambda d, t: max(a_plus + beta * (d - 1), cap),
        params={"alpha_plus": a_plus, "alpha_minus": a_minus, "beta": beta, "recovery_cap": cap},
    )


def voter(params):
    """Entrenched majority voter: undecided (0) adopts the strict neighbor majority."""

    def rate(j, t, a, nb):
        if a != 0:
            return 0.0
        blue, red = nb.count(1), nb.count(-1)
        if j == 1:
            return 1.0 if blue > red else 0.0
        if j == -1:
            return 1.0 if red > blue else 0.0
        return 0.0

    def field_rate(j, t, a, mu):
        if a != 0:
            return 0.0
        if j == 1:
            return 1.0 if mu[1] > mu[-1] else 0.0
        return 1.0 if mu[-1] > mu[1] else 0.0

    return ModelSpec(
        name="voter",
        states=(-1, 0, 1),
        labels=("red", "undecided", "blue"),
        jumps=(1, -1),
        rate=rate,
        declared_edges={(0, 1), (0, -1)},
        rate_bound=lambda d, t: 1.0,
        field_rate=field_rate,
        params={},
    )


_LINKS = {
    "identity": lambda x: x,
    "relu": lambda x: max(0.0, x),
    "softplus": lambda x: math.log1p(math.exp(-abs(x))) + max(x, 0.0),
}


def hawkes_threshold(params):
    """Counts-driven Hawkes intensity ``f(u + alpha * sum of neighbor counts)``, capped at M."""
    if "M" not in params:
        raise ConfigError("missing parameter 'M'")
    M = params["M"]
    if isinstance(M, bool) or not isinstance(M, int) or M < 1:
        raise ConfigError("parameter 'M' must be a positive integer")
    alpha = _get(params, "alpha")
    base = _get(params, "u")
    link = params.get("f", "identity")
    if link not in _LINKS:
        raise ConfigError(f"parameter 'f' must be one of {sorted(_LINKS)}, got {link!r}")
    f = _LINKS[link]

    def rate(j, t, a, nb):
        if a >= M:
            return 0.0
        return f(base + alpha * sum(nb))

    return ModelSpec(
        name="hawkes_threshold",
        states=tuple(range(M + 1)),
        jumps=(1,),
        rate=rate,
        declared_edges={(k, k + 1) for k in range(M)},
        rate_bound=lambda d, t: f(base + alpha * M * max(d - 1, 0)),
        params={"M": M, "alpha": alpha, "u": base, "f": link},
    )


BUILTINS = {
    "sir": sir,
    "seir": seir,
    "two_strain_sir": two_strain_sir,
    "seizure": seizure,
    "voter": voter,
    "hawkes_threshold": hawkes_threshold,
    "sis": sis,
}


def builtin(name, params=None):
    """Construct one of the catalog models by name."""
    if name not in BUILTINS:
        raise ConfigError(f"unknown builtin model {name!r}; choose from {sorted(BUILTINS)}")
    params = {_ALIASES.get(k, k): v for k, v in dict(params or {}).items()}
    return BUILTINS[name](params)
