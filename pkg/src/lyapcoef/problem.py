"""Problem files: a single JSON document describing the model and the analysis.

Schema (keys lowercase)::

    {"variables": ["x", "y"],
     "parameters": {"mu": 0.0},                      optional
     "equations": ["-y + mu*x", "x"],
     "equilibrium": {"values": [0, 0]} | {"guess": [0.1, 0]},   default origin
     "order": 1 | 2 | 3 | 4,                          default 1
     "options": {"eig_tol": 1e-8, "res_tol": 1e-10}}  optional
"""
from __future__ import annotations

import json
import numbers
from dataclasses import dataclass, replace

from .errors import ParseError, ProblemIOError, SchemaError
from .expr import VectorFieldSpec, parse

TOP_KEYS = ("variables", "parameters", "equations", "equilibrium", "order", "options")
OPTION_KEYS = ("eig_tol", "res_tol")


@dataclass(frozen=True)
class ProblemSpec:
    spec: VectorFieldSpec
    mu: tuple
    level: int = 1
    values: tuple = None
    guess: tuple = None
    eig_tol: float = None
    res_tol: float = None

    @property
    def start(self):
        return self.values if self.values is not None else self.guess

    def with_parameter(self, name, value):
        try:
            i = self.spec.parameters.index(name)
        except ValueError:
            raise SchemaError(f"unknown parameter '{name}'", "parameters") from None
        mu = list(self.mu)
        mu[i] = float(value)
        return replace(self, mu=tuple(mu))

    def with_start(self, x, newton=True):
        x = tuple(float(v) for v in x)
        return replace(self, values=None, guess=x) if newton else replace(self, values=x, guess=None)


def _is_number(v):
    return isinstance(v, numbers.Real) and not isinstance(v, bool)


def _names(obj, path):
    if not isinstance(obj, list) or not obj:
        raise SchemaError("must be a non-empty list of strings", path)
    for i, v in enumerate(obj):
        if not isinstance(v, str) or not v.isidentifier():
            raise SchemaError(f"entry {i} is not an identifier", path)
    return obj


def _numbers(obj, path, length):
    if not isinstance(obj, list) or not all(_is_number(v) for v in obj):
        raise SchemaError("must be a list of numbers", path)
    if len(obj) != length:
        raise SchemaError(f"has {len(obj)} entries, expected {length}", path)
    return tuple(float(v) for v in obj)


def problem_from_dict(doc) -> ProblemSpec:
    if not isinstance(doc, dict):
        raise SchemaError("problem must be a JSON object")
    for key in doc:
        if key not in TOP_KEYS:
            raise SchemaError(f"unknown key '{key}'", key)
    for key in ("variables", "equations"):
        if key not in doc:
            raise SchemaError("required key missing", key)

    variables = _names(doc["variables"], "variables")
    equations = doc["equations"]
    if not isinstance(equations, list) or not all(isinstance(e, str) for e in equations):
        raise SchemaError("must be a list of strings", "equations")
    if len(equations) != len(variables):
        raise SchemaError(
            f"equations has {len(equations)} entries but variables has {len(variables)}", "equations"
        )
    if len(variables) < 2:
        raise SchemaError("at least two variables are required", "variables")

    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise SchemaError("must be an object of name: number", "parameters")
    for name, v in params.items():
        if not name.isidentifier():
            raise SchemaError(f"'{name}' is not an identifier", "parameters")
        if not _is_number(v):
            raise SchemaError("value must be a number", f"parameters.{name}")
    names = list(variables) + list(params)
    if len(set(names)) != len(names):
        raise SchemaError("variable and parameter names must be unique", "variables")

    level = doc.get("order", 1)
    if not isinstance(level, int) or isinstance(level, bool) or not 1 <= level <= 4:
        raise SchemaError("level must be 1..4", "order")

    n = len(variables)
    values = guess = None
    eq = doc.get("equilibrium", {"values": [0.0] * n})
    if not isinstance(eq, dict) or len(eq) != 1 or next(iter(eq)) not in ("values", "guess"):
        raise SchemaError("must be {\"values\": [...]} or {\"guess\": [...]}", "equilibrium")
    if "values" in eq:
        values = _numbers(eq["values"], "equilibrium.values", n)
    else:
        guess = _numbers(eq["guess"], "equilibrium.guess", n)

    opts = doc.get("options", {})
    if not isinstance(opts, dict):
        raise SchemaError("must be an object", "options")
    for key, v in opts.items():
        if key not in OPTION_KEYS:
            raise SchemaError(f"unknown key '{key}'", f"options.{key}")
        if not _is_number(v) or v <= 0:
            raise SchemaError("must be a positive number", f"options.{key}")

    exprs = []
    for i, src in enumerate(equations):
        try:
            exprs.append(parse(src, variables, list(params)))
        except ParseError as exc:
            raise ParseError(exc.message, exc.line, exc.column, where=f"equations[{i}]") from None
    spec = VectorFieldSpec(tuple(variables), tuple(params), tuple(exprs), tuple(equations))
    return ProblemSpec(
        spec,
        tuple(float(v) for v in params.values()),
        level,
        values,
        guess,
        opts.get("eig_tol"),
        opts.get("res_tol"),
    )


def load_problem(path) -> ProblemSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemIOError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return problem_from_dict(doc)
