"""Thin command-line adapter over :mod:`sparseips.experiments`.

Verbs: ``check``, ``simulate``, ``solve``, ``compare``, ``mlfe``. Every verb
is also callable as a function (``cmd_check`` ...) returning an exit code.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import CycleError, SparseIPSError
from .models import audit_rates, check_acyclic, transition_graph
from .models.config import parse_model_config
from .svg import Series, save_plot

__all__ = ["main", "build_parser", "cmd_check", "cmd_simulate", "cmd_solve", "cmd_compare", "cmd_mlfe"]


def _error_block(kind, message, **extra):
    lines = ["error:", f"  kind: {kind}", f"  message: {message!r}"]
    lines += [f"  {k}: {v!r}" for k, v in extra.items()]
    return "\n".join(lines)


def cmd_check(path, seed=0, probes=1000, out=sys.stdout):
    """Static and probe-based checks of a model document."""
    try:
        model = parse_model_config(Path(path).read_text(encoding="utf-8"))
    except (OSError, SparseIPSError) as exc:
        extra = {k: getattr(exc, k) for k in ("line", "column") if getattr(exc, k, None) is not None}
        print(_error_block(type(exc).__name__, str(exc), **extra), file=out)
        return 2
    rng = np.random.default_rng(seed)
    ok = True
    print(f"model: {model.name}", file=out)
    print("states: " + ", ".join(f"{model.label(s)}={s}" for s in model.states), file=out)
    print("jumps: " + ", ".join(str(j) for j in model.jumps), file=out)
    print("transition graph:", file=out)
    for a, b in sorted(model.declared_edges):
        print(f"  {model.label(a)} -> {model.label(b)}", file=out)
    try:
        tg = transition_graph(model, probes=probes, rng=rng)
        order = check_acyclic(tg)
        print("order: " + ",".join(model.label(s) for s in order), file=out)
    except CycleError as exc:
        ok = False
        print("order: none", file=out)
        cyc = list(exc.cycle)
        if len(cyc) > 1 and cyc[0] == cyc[-1]:
            cyc = cyc[:-1]
        print(_error_block("CycleError", str(exc), cycle=",".join(model.label(s) for s in cyc)), file=out)
    except SparseIPSError as exc:
        ok = False
        print(_error_block(type(exc).__name__, str(exc)), file=out)
    violations = audit_rates(model, probes=probes, rng=rng)
    print(f"probes: {probes}", file=out)
    if violations:
        ok = False
        print(f"rate audit: {len(violations)} violation(s)", file=out)
        for v in violations[:10]:
            print(f"  {v}", file=out)
        print(_error_block("RateAudit", violations[0]), file=out)
    else:
        print("rate audit: pass", file=out)
    print("result: " + ("pass" if ok else "fail"), file=out)
    return 0 if ok else 1


def _spec(args):
    spec = ex.load_experiment(args.experiment)
    if args.seed is not None:
        spec.seed = args.seed
    if args.grid_step is not None:
        spec.grid_step = args.grid_step
    return spec


def _out(args):
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_sim(spec, sim, d, events=False):
    ex.write_marginals_csv(d / f"{spec.name}_sim_marginals.csv", sim.grid, sim.labels,
                           {"probability": sim.mean, "stderr": sim.stderr})
    if sim.neighborhood is not None:
        ex.write_law_csv(d / f"{spec.name}_sim_neighborhood.csv", sim.grid, sim.neighborhood)
        ex.write_classes_csv(d / f"{spec.name}_classes.csv", sim.space)
    if events and sim.event_logs:
        for i, log in enumerate(sim.event_logs):
            (d / f"{spec.name}_events_{i}.csv").write_text(log.to_csv(), encoding="utf-8")


def _write_solve(spec, sol, d):
    ex.write_law_csv(d / f"{spec.name}_ode_law.csv", sol.grid, sol.law)
    ex.write_classes_csv(d / f"{spec.name}_classes.csv", sol.space)
    cols = {"probability": sol.marginals}
    if sol.mean_field is not None:
        cols["mean_field"] = sol.mean_field
    if sol.mlfe is not None:
        cols["mlfe"] = sol.mlfe
    ex.write_marginals_csv(d / f"{spec.name}_ode_marginals.csv", sol.grid, sol.labels, cols)


def cmd_simulate(args):
    spec = _spec(args)
    sim = ex.run_replicas(spec, threads=args.threads, neighborhood=not args.no_neighborhood, keep_logs=args.events)
    _write_sim(spec, sim, _out(args), events=args.events)
    return 0


def cmd_solve(args):
    spec = _spec(args)
    sol = ex.solve_experiment(spec, mean_field=args.mean_field, mlfe=args.mlfe,
                              method="rk4" if args.rk4 else "dopri5")
    _write_solve(spec, sol, _out(args))
    st = sol.stats or {}
    print(f"{spec.name}: {len(sol.space)} classes, {st.get('accepted', '?')} steps, "
          f"{st.get('clamp_events', 0)} clamp events", file=sys.stderr)
    return 0


def cmd_compare(args):
    spec = _spec(args)
    d = _out(args)
    cached = d / f"{spec.name}_sim_marginals.csv"
    if args.cache and cached.exists():
        grid, labels, cols = ex.read_marginals_csv(cached)
        sim = ex.SimulationSummary(grid, (), labels, cols["probability"], cols["stderr"], spec.replicas)
    else:
        sim = ex.run_replicas(spec, threads=args.threads, neighborhood=False)
        _write_sim(spec, sim, d)
    sol = ex.solve_experiment(spec, mean_field=args.mean_field)
    _write_solve(spec, sol, d)
    tv = ex.compare(sim, sol)

    lines = ["time," + ",".join(tv)]
    for g, t in enumerate(sol.grid):
        lines.append(",".join([repr(float(t))] + [repr(float(tv[k][g])) for k in tv]))
    (d / f"{spec.name}_tv.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    series = []
    for x, lab in enumerate(sol.labels):
        series.append(Series(f"{lab} sim", sim.grid, sim.mean[:, x], color=x))
        series.append(Series(f"{lab} ODE", sol.grid, sol.marginals[:, x], color=x, style="dashed"))
        if sol.mean_field is not None:
            series.append(Series(f"{lab} MF", sol.grid, sol.mean_field[:, x], color=x, style="dotted"))
    save_plot(d / f"{spec.name}_fractions.svg", series, title=spec.name, ylabel="fraction", ylim=(0.0, 1.0))
    tv_series = [Series(k, sol.grid, v, color=i) for i, (k, v) in enumerate(tv.items())]
    save_plot(d / f"{spec.name}_tv.svg", tv_series, title=f"{spec.name} TV distance", ylabel="TV")
    for k, v in tv.items():
        print(f"{spec.name}: sup_t {k} = {v.max():.4f}")
    return 0


def cmd_mlfe(args):
    spec = _spec(args)
    if args.N is not None:
        spec.mlfe["N"] = args.N
    if args.dt is not None:
        spec.mlfe["dt"] = args.dt
    model = spec.build_model()
    theta = spec.theta()
    space = ex.enumerate_configs(theta, model)
    p0 = ex.build_initial_law(theta, spec.init_vector(model), space=space)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2**31]))
    res = ex.mlfe_ensemble(theta, model, p0, int(spec.mlfe["N"]), float(spec.mlfe["dt"]), spec.horizon, rng,
                           grid_step=spec.grid_step)
    d = _out(args)
    ex.write_law_csv(d / f"{spec.name}_mlfe_law.csv", res.t, res.values)
    ex.write_classes_csv(d / f"{spec.name}_classes.csv", space)
    ex.write_marginals_csv(d / f"{spec.name}_mlfe_marginals.csv", res.t, model.labels,
                           {"probability": res.marginals()})
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="sparseips", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=None, help="override the experiment seed")
    p.add_argument("--threads", type=int, default=ex.default_threads(), help="worker processes for replicas")
    p.add_argument("--out-dir", default=".", help="directory for CSV and SVG output")
    p.add_argument("--grid-step", type=float, default=None, help="override the output grid step")
    sub = p.add_subparsers(dest="verb", required=True)

    c = sub.add_parser("check", help="check a model document")
    c.add_argument("model")
    c.add_argument("--probes", type=int, default=1000)

    s = sub.add_parser("simulate", help="simulate replicas on finite graphs")
    s.add_argument("experiment")
    s.add_argument("--events", action="store_true", help="also write per-replica event logs")
    s.add_argument("--no-neighborhood", action="store_true", help="skip neighborhood measures")

    v = sub.add_parser("solve", help="integrate the neighborhood ODE")
    v.add_argument("experiment")
    v.add_argument("--mean-field", action="store_true")
    v.add_argument("--mlfe", action="store_true")
    v.add_argument("--rk4", action="store_true", help="fixed-step fallback integrator")

    k = sub.add_parser("compare", help="simulation vs ODE (and mean field)")
    k.add_argument("experiment")
    k.add_argument("--mean-field", action="store_true")
    k.add_argument("--cache", action="store_true", help="reuse simulation marginals already in --out-dir")

    m = sub.add_parser("mlfe", help="run the particle ensemble")
    m.add_argument("experiment")
    m.add_argument("--N", type=int, default=None)
    m.add_argument("--dt", type=float, default=None)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "check":
            return cmd_check(args.model, seed=args.seed or 0, probes=args.probes)
        return {"simulate": cmd_simulate, "solve": cmd_solve, "compare": cmd_compare, "mlfe": cmd_mlfe}[args.verb](args)
    except (OSError, SparseIPSError, ValueError) as exc:
        extra = {k: getattr(exc, k) for k in ("line", "column") if getattr(exc, k, None) is not None}
        print(_error_block(type(exc).__name__, str(exc), **extra), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
