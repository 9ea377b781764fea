"""Writing a model in YAML, checking it, and solving it.

The rate language is a small arithmetic subset: parameters, t, d (degree
plus one), count(state) over the neighbors, max, min and ind(condition).
"""

import numpy as np

from sparseips.cli import cmd_check
from sparseips.graphs import DegreeDistribution
from sparseips.lfode import build_initial_law, integrate
from sparseips.models import builtin
from sparseips.models.config import parse_model_config
from sparseips.sim import mlfe_ensemble

doc = """
custom: lockdown_sir
states: [0, 1, 2]
labels: [S, I, R]
jumps: [1]
params: {beta: 1.2, gamma: 0.4}
rates:
  - {state: 0, jump: 1, expr: "beta * count(1) * (1 - 0.8 * ind(t >= 2))"}
  - {state: 1, jump: 1, expr: "gamma"}
rate_bound: "max(beta * (d - 1), gamma)"
"""
model = parse_model_config(doc)
print(model.name, "states", model.labels)

# contacts drop by 80% from t=2 on
# check: transition graph, acyclicity and a rate audit against the bound
with open("lockdown_sir.yaml", "w") as fh:
    fh.write(doc)
print("exit code", cmd_check("lockdown_sir.yaml", probes=500))

# a cyclic model is rejected before anything is integrated
bad = doc.replace("jumps: [1]", "jumps: [1, -1]")
bad = bad.replace('  - {state: 1, jump: 1, expr: "gamma"}',
                  '  - {state: 1, jump: 1, expr: "gamma"}\n  - {state: 1, jump: -1, expr: "0.1"}')
with open("cyclic.yaml", "w") as fh:
    fh.write(bad)
print("exit code", cmd_check("cyclic.yaml", probes=200))

# solve on a mixed-degree graph and cross-check against the particle ensemble
theta = DegreeDistribution({2: 0.5, 3: 0.5})
p0 = build_initial_law(theta, {0: 0.9, 1: 0.1, 2: 0.0}, model.states)
ode = integrate(model, theta, p0, 5.0, grid_step=0.5)
ens = mlfe_ensemble(theta, model, p0, 5000, 2e-3, 5.0, np.random.default_rng(1), grid_step=0.5)
t, f = ode.grid_marginals()
for k in range(0, len(t), 2):
    print(f"t={t[k]:.1f}  ODE {f[k].round(3)}  ensemble {ens.marginals()[k].round(3)}")

# without the lockdown: the builtin sir
plain = integrate(builtin("sir", {"beta": 1.2, "gamma": 0.4}), theta, p0, 5.0, grid_step=0.5)
print("removed at T, lockdown vs none:", f[-1, 2].round(3), plain.grid_marginals()[1][-1, 2].round(3))
