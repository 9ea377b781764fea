"""YAML model documents and the small rate-expression language.

A document either selects a catalog model::

    name: sir
    params: {beta: 1.0, gamma: 0.5}

or defines a custom one::

    custom: sis
    states: [0, 1]
    labels: [S, I]
    jumps: [1, -1]
    params: {beta: 1.0}
    rate_bound: "1 + beta * d"
    rates:
      - {state: 0, jump: 1, expr: "beta * count(1)"}
      - {state: 1, jump: -1, expr: "1"}

Rate expressions may use ``t``, ``a``, ``d`` (degree), ``count(x)``,
``max``, ``min``, ``ind(cond)``, comparisons, ``+ - * /`` and any key of
``params``. Negative rate values are clamped to zero. The rate bound may
use ``d`` and ``t`` only (plus params).
"""

from __future__ import annotations

import ast
import operator

import yaml

from ..errors import ConfigError
from .base import ModelSpec
from .catalog import builtin

__all__ = ["compile_expression", "parse_model_config", "model_from_mapping", "load_yaml"]

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_CMPOPS = {
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
}
_FUNCS = {"max": 0, "min": 0, "ind": 1, "indicator": 1, "count": 1}


def _fail(msg, node, source):
    raise ConfigError(f"{msg} in expression {source!r}", line=node.lineno, column=node.col_offset + 1)


def compile_expression(source, symbols, constants=None):
    """Compile ``source`` into ``f(env) -> float``.

    ``symbols`` names the variables provided in ``env`` at call time;
    ``constants`` are folded in at compile time. ``count(x)`` reads
    ``env["count"]``, a callable.
    """
    constants = dict(constants or {})
    try:
        tree = ast.parse(str(source).strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {source!r}: {exc.msg}", line=exc.lineno, column=exc.offset) from None

    def build(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            value = float(node.value)
            return lambda env: value
        if isinstance(node, ast.Name):
            name = node.id
            if name in constants:
                value = float(constants[name])
                return lambda env: value
            if name in symbols:
                return lambda env: env[name]
            _fail(f"unknown symbol {name!r}", node, source)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda env: -inner(env)
            return inner
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op, left, right = _BINOPS[type(node.op)], build(node.left), build(node.right)

            def binop(env):
                lv, rv = left(env), right(env)
                if op is operator.truediv and rv == 0:
                    return 0.0 if lv == 0 else float("inf") * (1 if lv > 0 else -1)
                return op(lv, rv)

            return binop
        if isinstance(node, ast.Compare):
            parts = [build(node.left)] + [build(c) for c in node.comparators]
            ops = [_CMPOPS.get(type(o)) for o in node.ops]
            if None in ops:
                _fail("unsupported comparison", node, source)

            def compare(env):
                vals = [p(env) for p in parts]
                return float(all(op(x, y) for op, x, y in zip(ops, vals, vals[1:])))

            return compare
        if isinstance(node, ast.BoolOp):
            parts = [build(v) for v in node.values]
            if isinstance(node.op, ast.And):
                return lambda env: float(all(p(env) for p in parts))
            return lambda env: float(any(p(env) for p in parts))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            fname = node.func.id
            if node.keywords:
                _fail("keyword arguments are not supported", node, source)
            args = [build(a) for a in node.args]
            arity = _FUNCS[fname]
            if (arity and len(args) != arity) or (not arity and len(args) < 1):
                _fail(f"wrong number of arguments to {fname}()", node, source)
            if fname == "count":
                if "count" not in symbols:
                    _fail("count() is not available here", node, source)
                arg = args[0]
                return lambda env: float(env["count"](arg(env)))
            if fname in ("ind", "indicator"):
                arg = args[0]
                return lambda env: float(arg(env) != 0)
            agg = max if fname == "max" else min
            return lambda env: agg(f(env) for f in args)
        _fail(f"unsupported syntax {type(node).__name__}", node, source)

    return build(tree.body)


def load_yaml(text):
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(
            f"YAML parse error: {exc.problem or exc}",
            line=mark.line + 1 if mark else None,
            column=mark.column + 1 if mark else None,
        ) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML parse error: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("document must be a mapping")
    return doc


def parse_model_config(text):
    """Build a :class:`ModelSpec` from a YAML model document."""
    return model_from_mapping(load_yaml(text))


def model_from_mapping(doc):
    if "name" in doc and "custom" not in doc:
        return builtin(doc["name"], doc.get("params") or {})
    if "custom" not in doc:
        raise ConfigError("model document needs a 'name' or 'custom' key")
    return _custom_model(doc)


def _custom_model(doc):
    for key in ("states", "jumps", "rates", "rate_bound"):
        if key not in doc:
            raise ConfigError(f"custom model is missing {key!r}")
    try:
        states = tuple(int(s) for s in doc["states"])
        jumps = tuple(int(j) for j in doc["jumps"])
    except (TypeError, ValueError):
        raise ConfigError("'states' and 'jumps' must be lists of integers") from None
    params = dict(doc.get("params") or {})
    for key in ("t", "a", "d", "count"):
        if key in params:
            raise ConfigError(f"parameter name {key!r} is reserved")

    table = {}
    edges = set()
    time_homogeneous = True
    for entry in doc["rates"]:
        try:
            a, j, expr = int(entry["state"]), int(entry["jump"]), entry["expr"]
        except (KeyError, TypeError, ValueError):
            raise ConfigError("each rate entry needs integer 'state', 'jump' and an 'expr'") from None
        if a not in states or j not in jumps:
            raise ConfigError(f"rate entry for state {a}, jump {j} is outside the declared sets")
        if a + j not in states:
            raise ConfigError(f"jump {j} from state {a} leaves the state space")
        if (a, j) in table:
            raise ConfigError(f"duplicate rate entry for state {a}, jump {j}")
        table[a, j] = compile_expression(expr, {"t", "a", "d", "count"}, params)
        names = {n.id for n in ast.walk(ast.parse(str(expr).strip(), mode="eval")) if isinstance(n, ast.Name)}
        time_homogeneous = time_homogeneous and "t" not in names
        edges.add((a, a + j))

    bound = compile_expression(doc["rate_bound"], {"d", "t"}, params)

    def rate(j, t, a, nb):
        f = table.get((a, j))
        if f is None:
            return 0.0
        env = {"t": t, "a": a, "d": len(nb), "count": nb.count}
        return max(0.0, f(env))

    return ModelSpec(
        name=str(doc["custom"]),
        states=states,
        labels=tuple(doc.get("labels") or ()),
        jumps=jumps,
        rate=rate,
        declared_edges=edges,
        rate_bound=lambda d, t: bound({"d": d, "t": t}),
        time_homogeneous=time_homogeneous,
        params=params,
    )
