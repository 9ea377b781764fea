"""Experiment documents and the simulate / solve / compare pipelines.

An experiment is one YAML document::

    schema_version: 1
    name: sir_triangle
    model: {name: sir, params: {beta: 1.0, gamma: 0.5}}   # or {config: sir.yaml}
    graph: {kind: regular, n: 400, degree: 3}
    init: {S: 0.9, I: 0.1}
    horizon: 5.0
    replicas: 500
    seed: 1
    grid_step: 0.25
    solver: {rtol: 1.0e-6, atol: 1.0e-8}

Graph kinds are ``regular`` (``n``, ``degree``), ``degrees`` (explicit
``degrees`` list), ``theta`` (``theta`` mapping degree -> probability and
``n``) and ``edgelist`` (``path``). Random kinds draw a fresh graph for every
replica unless ``resample: false``.

Replica ``i`` draws everything from ``SeedSequence([seed, i])`` so results do
not depend on how replicas are spread over worker processes.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, GraphError
from .graphs import (
    DegreeDistribution,
    empirical_degree_distribution,
    random_regular_graph,
    read_edgelist,
    sample_configuration_model,
    sample_degree_sequence,
    validate_graphical,
)
from .lfode import build_initial_law, enumerate_configs, integrate, mean_field_ode, output_grid
from .models import model_from_mapping
from .models.config import load_yaml
from .sim import mlfe_ensemble, simulate, state_counts_on_grid
from .sim.events import _classes_of

SCHEMA_VERSION = 1
GRAPH_KINDS = ("regular", "degrees", "theta", "edgelist")

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentSpec",
    "load_experiment",
    "total_variation",
    "SimulationSummary",
    "SolveResult",
    "run_replicas",
    "solve_experiment",
    "compare",
    "write_marginals_csv",
    "write_law_csv",
    "write_classes_csv",
    "read_marginals_csv",
]


def total_variation(p, q, axis=-1):
    """Half the L1 distance between probability vectors (along ``axis``)."""
    return 0.5 * np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum(axis=axis)


@dataclass
class ExperimentSpec:
    name: str
    model: dict
    graph: dict
    init: dict
    horizon: float
    replicas: int
    seed: int
    grid_step: float = 0.1
    rtol: float = 1e-6
    atol: float = 1e-8
    mean_field: str = "annealed"
    mlfe: dict = field(default_factory=lambda: {"N": 10**4, "dt": 1e-3})
    base_dir: str = "."
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version!r}")
        if not isinstance(self.replicas, int) or self.replicas < 1:
            raise ConfigError("replicas must be a positive integer")
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if self.seed is None or isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not self.grid_step > 0:
            raise ConfigError("grid_step must be positive")
        if self.graph.get("kind") not in GRAPH_KINDS:
            raise ConfigError(f"graph kind must be one of {GRAPH_KINDS}")
        if self.mean_field not in ("annealed", "complete"):
            raise ConfigError("mean_field must be 'annealed' or 'complete'")

    @classmethod
    def from_mapping(cls, doc, base_dir="."):
        missing = [k for k in ("name", "model", "graph", "init", "horizon", "replicas", "seed") if k not in doc]
        if missing:
            raise ConfigError(f"experiment is missing {', '.join(missing)}")
        solver = doc.get("solver") or {}
        try:
            return cls(
                name=str(doc["name"]),
                model=dict(doc["model"]),
                graph=dict(doc["graph"]),
                init=dict(doc["init"]),
                horizon=float(doc["horizon"]),
                replicas=doc["replicas"],
                seed=doc["seed"],
                grid_step=float(doc.get("grid_step", 0.1)),
                rtol=float(solver.get("rtol", 1e-6)),
                atol=float(solver.get("atol", 1e-8)),
                mean_field=str(doc.get("mean_field", "annealed")),
                mlfe=dict(doc.get("mlfe") or {"N": 10**4, "dt": 1e-3}),
                base_dir=str(base_dir),
                schema_version=doc.get("schema_version", SCHEMA_VERSION),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment field: {exc}") from None

    def to_mapping(self):
        return {
            "schema_version": self.schema_version,
            "name": self.name,
            "model": self.model,
            "graph": self.graph,
            "init": self.init,
            "horizon": self.horizon,
            "replicas": self.replicas,
            "seed": self.seed,
            "grid_step": self.grid_step,
            "solver": {"rtol": self.rtol, "atol": self.atol},
            "mean_field": self.mean_field,
            "mlfe": self.mlfe,
        }

    def _path(self, p):
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def build_model(self):
        if "config" in self.model:
            return model_from_mapping(load_yaml(self._path(self.model["config"]).read_text(encoding="utf-8")))
        return model_from_mapping(self.model)

    def init_vector(self, model):
        q = np.zeros(model.m)
        for key, p in self.init.items():
            if isinstance(key, str) and key in model.labels:
                q[model.index[model.state_from_label(key)]] = float(p)
            else:
                try:
                    q[model.index[int(key)]] = float(p)
                except (KeyError, ValueError):
                    raise ConfigError(f"init refers to unknown state {key!r}") from None
        if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
            raise ConfigError("init must be a probability vector over the model states")
        return q / q.sum()

    @property
    def resample(self):
        return bool(self.graph.get("resample", self.graph["kind"] != "edgelist"))

    def theta(self):
        """Degree distribution used by the ODE for this graph source."""
        g = self.graph
        kind = g["kind"]
        if kind == "regular":
            return DegreeDistribution.delta(int(g["degree"]))
        if kind == "degrees":
            return DegreeDistribution.from_counts(dict(enumerate(np.bincount(np.asarray(g["degrees"], dtype=int)).tolist())))
        if kind == "theta":
            return DegreeDistribution({int(k): float(v) for k, v in g["theta"].items()})
        return empirical_degree_distribution(read_edgelist(self._path(g["path"])))

    def sample_graph(self, rng):
        g = self.graph
        kind = g["kind"]
        mode = g.get("mode", "reject")
        if kind == "regular":
            return random_regular_graph(int(g["n"]), int(g["degree"]), rng, mode=mode)
        if kind == "degrees":
            degrees = [int(d) for d in g["degrees"]]
            if mode == "reject" and not validate_graphical(degrees):
                raise GraphError("degree sequence is not graphical")
            return sample_configuration_model(degrees, rng, mode=mode)
        if kind == "theta":
            degrees = sample_degree_sequence(self.theta(), int(g["n"]), rng)
            return sample_configuration_model(degrees, rng, mode=mode)
        return read_edgelist(self._path(g["path"]))

    def fixed_graph(self):
        """The shared graph when ``resample`` is off."""
        return self.sample_graph(np.random.default_rng(np.random.SeedSequence([self.seed])))


def load_experiment(path):
    path = Path(path)
    doc = load_yaml(path.read_text(encoding="utf-8"))
    return ExperimentSpec.from_mapping(doc, base_dir=path.parent)


# ---------------------------------------------------------------- simulation

@dataclass
class SimulationSummary:
    grid: np.ndarray
    states: tuple
    labels: tuple
    mean: np.ndarray  # (len(grid), m)
    stderr: np.ndarray
    replicas: int
    neighborhood: np.ndarray = None  # (len(grid), n_classes) or None
    space: object = None
    event_logs: list = None


def _replica(spec, i, graph, neighborhood, space, keep_log):
    model = spec.build_model()
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, i]))
    if graph is None:
        graph = spec.sample_graph(rng)
    q = spec.init_vector(model)
    init = np.asarray(model.states)[rng.choice(model.m, size=graph.n, p=q)]
    log = simulate(graph, model, init, spec.horizon, rng)
    grid = _grid(spec)
    frac = state_counts_on_grid(log, grid, model) / graph.n
    nb = None
    if neighborhood:
        if graph.max_degree > space.d_max:
            raise GraphError(f"graph degree {graph.max_degree} exceeds the support of theta")
        padded = graph.padded_neighbors(space.d_max)
        nb = np.empty((len(grid), len(space)))
        for g, t in enumerate(grid):
            x = np.array([model.index[s] for s in log.states_at(t).tolist()], dtype=np.int64)
            cls = _classes_of(graph, x, space, padded)
            if np.any(cls < 0):
                raise GraphError("a vertex degree is outside the support of theta")
            nb[g] = np.bincount(cls, minlength=len(space)) / graph.n
    return i, frac, nb, (log if keep_log else None)


def _replica_batch(doc, base_dir, indices, graph, neighborhood, keep_log):
    spec = ExperimentSpec.from_mapping(doc, base_dir)
    space = enumerate_configs(spec.theta(), spec.build_model()) if neighborhood else None
    return [_replica(spec, i, graph, neighborhood, space, keep_log) for i in indices]


def _grid(spec):
    return output_grid(spec.horizon, spec.grid_step)


def run_replicas(spec, threads=1, neighborhood=True, keep_logs=False):
    """Simulate ``spec.replicas`` independent replicas and average them.

    Sums are accumulated in replica order, so the result is identical for
    every ``threads`` value.
    """
    model = spec.build_model()
    model.order  # fail fast on a cyclic transition graph
    graph = None if spec.resample else spec.fixed_graph()
    R = spec.replicas
    threads = max(1, int(threads or 1))
    doc = spec.to_mapping()
    if threads == 1 or R == 1:
        results = _replica_batch(doc, spec.base_dir, range(R), graph, neighborhood, keep_logs)
    else:
        chunks = [list(range(k, R, threads)) for k in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_replica_batch, doc, spec.base_dir, c, graph, neighborhood, keep_logs) for c in chunks
            ]
            results = [r for f in futures for r in f.result()]
    results.sort(key=lambda r: r[0])

    fracs = np.stack([r[1] for r in results])
    mean = fracs.mean(axis=0)
    stderr = fracs.std(axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.zeros_like(mean)
    nb = np.mean([r[2] for r in results], axis=0) if neighborhood else None
    space = enumerate_configs(spec.theta(), model) if neighborhood else None
    logs = [r[3] for r in results] if keep_logs else None
    return SimulationSummary(_grid(spec), model.states, model.labels, mean, stderr, R, nb, space, logs)


# ------------------------------------------------------------------- solving

@dataclass
class SolveResult:
    grid: np.ndarray
    states: tuple
    labels: tuple
    space: object
    law: np.ndarray  # (len(grid), n_classes)
    marginals: np.ndarray  # (len(grid), m)
    mean_field: np.ndarray = None
    mlfe: np.ndarray = None
    stats: dict = None


def solve_experiment(spec, mean_field=False, mlfe=False, method="dopri5"):
    model = spec.build_model()
    theta = spec.theta()
    q = spec.init_vector(model)
    space = enumerate_configs(theta, model)
    p0 = build_initial_law(theta, q, space=space)
    sol = integrate(model, theta, p0, spec.horizon, rtol=spec.rtol, atol=spec.atol,
                    grid_step=spec.grid_step, method=method)
    grid, law = sol.grid()
    out = SolveResult(grid, model.states, model.labels, space, law, law @ space.root_onehot, stats=sol.stats)
    if mean_field:
        _, out.mean_field = mean_field_ode(model, theta, q, spec.horizon, kernel=spec.mean_field, rtol=spec.rtol,
                                           atol=spec.atol, grid_step=spec.grid_step).grid()
    if mlfe:
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2**31]))
        res = mlfe_ensemble(theta, model, p0, int(spec.mlfe.get("N", 10**4)), float(spec.mlfe.get("dt", 1e-3)),
                            spec.horizon, rng, grid_step=spec.grid_step)
        out.mlfe = res.marginals()
    return out


def compare(sim, sol):
    """TV distance time series between simulation and ODE (and mean field)."""
    if len(sim.grid) != len(sol.grid) or not np.allclose(sim.grid, sol.grid):
        raise ValueError("simulation and solution grids differ")
    tv = {"tv_ode": np.clip(total_variation(sim.mean, sol.marginals), 0.0, 1.0)}
    if sol.mean_field is not None:
        tv["tv_mean_field"] = np.clip(total_variation(sim.mean, sol.mean_field), 0.0, 1.0)
    return tv


# ---------------------------------------------------------------- CSV output

def _fmt(x):
    return repr(float(x))


def write_marginals_csv(path, grid, labels, columns):
    """Long-format marginals; ``columns`` maps column name -> (len(grid), m) array."""
    names = list(columns)
    buf = io.StringIO()
    buf.write(",".join(["time", "state", *names]) + "\n")
    for g, t in enumerate(grid):
        for x, lab in enumerate(labels):
            buf.write(",".join([_fmt(t), lab, *(_fmt(columns[c][g, x]) for c in names)]) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_marginals_csv(path):
    """Inverse of :func:`write_marginals_csv`: (grid, labels, columns)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    names = lines[0].split(",")[2:]
    rows = [ln.split(",") for ln in lines[1:] if ln]
    times, labels = [], []
    for r in rows:
        t = float(r[0])
        if not times or times[-1] != t:
            times.append(t)
        if r[1] not in labels:
            labels.append(r[1])
    vals = np.array([[float(v) for v in r[2:]] for r in rows]).reshape(len(times), len(labels), len(names))
    return np.array(times), tuple(labels), {n: vals[:, :, k] for k, n in enumerate(names)}


def write_law_csv(path, grid, law):
    buf = io.StringIO()
    buf.write("time,class_index,probability\n")
    for g, t in enumerate(grid):
        ts = _fmt(t)
        for i, v in enumerate(law[g]):
            buf.write(f"{ts},{i},{_fmt(v)}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_classes_csv(path, space):
    buf = io.StringIO()
    buf.write("class_index,config\n")
    for i in range(len(space)):
        buf.write(f'{i},"{space.describe(i)}"\n')
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def default_threads():
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
