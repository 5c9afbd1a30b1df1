"""Small expression language for vector-field components.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | base ('^' signed-integer)?
    base   := number | identifier | identifier '(' expr ')' | '(' expr ')'

Trees are immutable.  Sums and products are stored n-ary (flattened) so
that long polynomials stay shallow; the simplifying constructors below are
the only way nodes are built by the parser and by :func:`differentiate`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError, ParseError

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

KINDS = (
    "constant",
    "variable",
    "parameter",
    "negate",
    "add",
    "subtract",
    "multiply",
    "divide",
    "power",
    "call",
)


@dataclass(frozen=True, eq=True)
class Expression:
    kind: str
    children: tuple = ()
    value: float = 0.0
    index: int = -1
    name: str = ""
    func: str = ""
    exponent: int = 0
    _hash: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        h = hash((self.kind, self.children, self.value, self.index, self.func, self.exponent))
        object.__setattr__(self, "_hash", h)

    def __hash__(self):
        return self._hash

    @property
    def is_constant(self):
        return self.kind == "constant"

    def __str__(self):
        return to_string(self)


# -- constructors with simplification ---------------------------------------

ZERO = Expression("constant", value=0.0)
ONE = Expression("constant", value=1.0)


def const(v: float) -> Expression:
    v = float(v)
    if v == 0.0:
        return ZERO
    if v == 1.0:
        return ONE
    return Expression("constant", value=v)


def var(index: int, name: str = "") -> Expression:
    return Expression("variable", index=index, name=name or f"x{index}")


def param(index: int, name: str = "") -> Expression:
    return Expression("parameter", index=index, name=name or f"mu{index}")


def neg(e: Expression) -> Expression:
    if e.kind == "constant":
        return const(-e.value)
    if e.kind == "negate":
        return e.children[0]
    return Expression("negate", (e,))


def add(*terms: Expression) -> Expression:
    flat = []
    c = 0.0
    for t in terms:
        parts = t.children if t.kind == "add" else (t,)
        for s in parts:
            if s.kind == "constant":
                c += s.value
            else:
                flat.append(s)
    if c != 0.0:
        flat.append(const(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Expression("add", tuple(flat))


def sub(a: Expression, b: Expression) -> Expression:
    if b.kind == "constant" and b.value == 0.0:
        return a
    if a.kind == "constant" and a.value == 0.0:
        return neg(b)
    if a.kind == "constant" and b.kind == "constant":
        return const(a.value - b.value)
    return Expression("subtract", (a, b))


def mul(*factors: Expression) -> Expression:
    flat = []
    c = 1.0
    for f in factors:
        parts = f.children if f.kind == "multiply" else (f,)
        for s in parts:
            if s.kind == "constant":
                c *= s.value
            else:
                flat.append(s)
    if c == 0.0:
        return ZERO
    if not flat:
        return const(c)
    if c != 1.0:
        flat.insert(0, const(c))
    if len(flat) == 1:
        return flat[0]
    return Expression("multiply", tuple(flat))


def div(a: Expression, b: Expression) -> Expression:
    if a.kind == "constant" and a.value == 0.0:
        return ZERO
    if b.kind == "constant":
        if b.value == 1.0:
            return a
        if b.value != 0.0:
            return mul(const(1.0 / b.value), a) if a.kind != "constant" else const(a.value / b.value)
    return Expression("divide", (a, b))


def power(base: Expression, k: int) -> Expression:
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return base
    if base.kind == "constant" and not (base.value == 0.0 and k < 0):
        return const(base.value ** k)
    if base.kind == "power":
        return power(base.children[0], base.exponent * k)
    return Expression("power", (base,), exponent=k)


def call(func: str, arg: Expression) -> Expression:
    if func not in FUNCTIONS:
        raise ValueError(f"unknown function {func!r}")
    if arg.kind == "constant":
        # fold only where the value is defined; otherwise keep the node so the
        # evaluator reports the domain error with context
        try:
            return const(_apply(func, arg.value))
        except (ValueError, ZeroDivisionError):
            pass
    return Expression("call", (arg,), func=func)


def _apply(func, x):
    if func == "sin":
        return math.sin(x)
    if func == "cos":
        return math.cos(x)
    if func == "exp":
        return math.exp(x)
    if func == "log":
        if x <= 0.0:
            raise ValueError("log of non-positive value")
        return math.log(x)
    if func == "sqrt":
        if x < 0.0:
            raise ValueError("sqrt of negative value")
        return math.sqrt(x)
    raise ValueError(func)


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


class _Parser:
    def __init__(self, source, variables, parameters):
        self.src = source
        self.vars = {name: i for i, name in enumerate(variables)}
        self.params = {name: i for i, name in enumerate(parameters)}
        self.toks = self._lex()
        self.i = 0

    def _loc(self, pos):
        line = self.src.count("\n", 0, pos) + 1
        col = pos - (self.src.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def error(self, message, pos):
        raise ParseError(message, *self._loc(pos))

    def _lex(self):
        toks = []
        pos = 0
        while pos < len(self.src):
            m = _TOKEN.match(self.src, pos)
            if m is None:
                self.error(f"unexpected character {self.src[pos]!r}", pos)
            if m.lastgroup != "ws":
                toks.append(_Tok(m.lastgroup, m.group(), pos))
            pos = m.end()
        toks.append(_Tok("eof", "", len(self.src)))
        return toks

    @property
    def tok(self):
        return self.toks[self.i]

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def parse(self):
        if self.tok.kind == "eof":
            self.error("empty expression", 0)
        e = self.expr()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}", self.tok.pos)
        return e

    def expr(self):
        terms = [self.term()]
        signs = [1]
        while self.tok.kind == "op" and self.tok.text in "+-":
            signs.append(1 if self.tok.text == "+" else -1)
            self.i += 1
            terms.append(self.term())
        if len(terms) == 1:
            return terms[0]
        if len(terms) == 2 and signs[1] < 0:
            return sub(terms[0], terms[1])
        return add(*(t if s > 0 else neg(t) for t, s in zip(terms, signs)))

    def term(self):
        e = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self):
        if self.accept("-"):
            return neg(self.factor())
        b = self.base()
        if self.accept("^"):
            return power(b, self.exponent())
        return b

    def exponent(self):
        pos = self.tok.pos
        sign = 1
        if self.accept("-"):
            sign = -1
        elif self.accept("+"):
            pass
        t = self.tok
        if t.kind != "number":
            self.error("exponent must be a signed integer", t.pos)
        if not t.text.isdigit():
            self.error("general real exponents are not supported", t.pos)
        self.i += 1
        k = sign * int(t.text)
        if self.accept("^"):
            # right-associative integer tower
            k = k ** self.exponent()
            if not float(k).is_integer():
                self.error("exponent tower does not yield an integer", pos)
            k = int(k)
        return k

    def base(self):
        t = self.tok
        if t.kind == "number":
            self.i += 1
            return const(float(t.text))
        if t.kind == "ident":
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(t)
            if t.text in self.vars:
                return var(self.vars[t.text], t.text)
            if t.text in self.params:
                return param(self.params[t.text], t.text)
            if t.text in FUNCTIONS:
                self.error(f"function {t.text!r} requires an argument", t.pos)
            self.error(f"unknown identifier {t.text!r}", t.pos)
        if self.accept("("):
            e = self.expr()
            if not self.accept(")"):
                self.error("expected ')'", self.tok.pos)
            return e
        if t.kind == "eof":
            self.error("expected expression", t.pos)
        self.error(f"unexpected {t.text!r}", t.pos)

    def call(self, name_tok):
        self.i += 1  # '('
        if name_tok.text not in FUNCTIONS:
            self.error(f"unknown function {name_tok.text!r}", name_tok.pos)
        args = []
        while True:
            if self.tok.kind == "eof" or (self.tok.kind == "op" and self.tok.text in "),"):
                self.error("expected expression or ')'", self.tok.pos)
            args.append(self.expr())
            if self.accept(")"):
                break
            if not self.accept(","):
                self.error("expected ',' or ')'", self.tok.pos)
        if len(args) != 1:
            self.error(f"{name_tok.text} takes 1 argument, got {len(args)}", name_tok.pos)
        return call(name_tok.text, args[0])


def parse(source: str, variables: Sequence[str], parameters: Sequence[str] = ()) -> Expression:
    """Parse `source` into an :class:`Expression`.

    Raises :class:`ParseError` carrying a 1-based line and column.
    """
    if not source or not source.strip():
        raise ParseError("empty expression", 1, 1)
    return _Parser(source, list(variables), list(parameters)).parse()


# -- differentiation ---------------------------------------------------------

def differentiate(e: Expression, wrt: int, cache: dict = None) -> Expression:
    """Exact derivative of `e` with respect to variable `wrt`.

    `cache` may be shared between calls (for instance across the repeated
    differentiations of one Taylor extraction) so subtrees common to several
    derivatives are differentiated once.  It holds references to the nodes it
    keys, so ids stay valid while it is alive.
    """
    memo = {} if cache is None else cache

    def d(x):
        key = (id(x), wrt)
        hit = memo.get(key)
        if hit is not None:
            return hit[1]
        r = _d(x)
        memo[key] = (x, r)
        return r

    def _d(x):
        k = x.kind
        if k == "constant" or k == "parameter":
            return ZERO
        if k == "variable":
            return ONE if x.index == wrt else ZERO
        if k == "negate":
            return neg(d(x.children[0]))
        if k == "add":
            return add(*(d(c) for c in x.children))
        if k == "subtract":
            return sub(d(x.children[0]), d(x.children[1]))
        if k == "multiply":
            cs = x.children
            terms = []
            for i, c in enumerate(cs):
                dc = d(c)
                if dc.kind == "constant" and dc.value == 0.0:
                    continue
                terms.append(mul(*cs[:i], dc, *cs[i + 1:]))
            return add(*terms)
        if k == "divide":
            a, b = x.children
            da, db = d(a), d(b)
            return sub(div(da, b), div(mul(a, db), power(b, 2)))
        if k == "power":
            a = x.children[0]
            da = d(a)
            if da.kind == "constant" and da.value == 0.0:
                return ZERO
            return mul(const(x.exponent), power(a, x.exponent - 1), da)
        if k == "call":
            a = x.children[0]
            da = d(a)
            if da.kind == "constant" and da.value == 0.0:
                return ZERO
            f = x.func
            if f == "sin":
                return mul(call("cos", a), da)
            if f == "cos":
                return neg(mul(call("sin", a), da))
            if f == "exp":
                return mul(x, da)
            if f == "log":
                return div(da, a)
            if f == "sqrt":
                return div(da, mul(const(2.0), x))
        raise ValueError(f"bad node kind {k!r}")

    return d(e)


# -- evaluation --------------------------------------------------------------

def evaluate(e: Expression, x: Sequence[float], mu: Sequence[float] = (), cache: dict = None) -> float:
    """Evaluate in double precision; children are visited left to right.

    Shared subtrees are evaluated once.  `cache` may be shared between calls
    at the same point ``(x, mu)``; never reuse it at another point.
    """
    memo = {} if cache is None else cache

    def ev(n):
        hit = memo.get(id(n))
        if hit is not None:
            return hit[1]
        v = _ev(n)
        memo[id(n)] = (n, v)
        return v

    def _ev(n):
        k = n.kind
        if k == "constant":
            return n.value
        if k == "variable":
            return x[n.index]
        if k == "parameter":
            return mu[n.index]
        if k == "add":
            s = 0.0
            for c in n.children:
                s += ev(c)
            return s
        if k == "multiply":
            s = 1.0
            for c in n.children:
                s *= ev(c)
            return s
        if k == "negate":
            return -ev(n.children[0])
        if k == "subtract":
            a = ev(n.children[0])
            return a - ev(n.children[1])
        if k == "divide":
            a = ev(n.children[0])
            b = ev(n.children[1])
            if b == 0.0:
                raise DomainError("division by zero", to_string(n))
            return a / b
        if k == "power":
            a = ev(n.children[0])
            if a == 0.0 and n.exponent < 0:
                raise DomainError("division by zero", to_string(n))
            return a ** n.exponent
        if k == "call":
            a = ev(n.children[0])
            try:
                return _apply(n.func, a)
            except ValueError as exc:
                raise DomainError(str(exc), to_string(n)) from None
            except OverflowError:
                raise DomainError("overflow", to_string(n)) from None
        raise ValueError(f"bad node kind {k!r}")

    return float(ev(e))


# -- printing ----------------------------------------------------------------

_PREC = {"add": 1, "subtract": 1, "multiply": 2, "divide": 2, "negate": 3, "power": 4}


def _num(v):
    return repr(float(v)).replace("inf", "1e999")


def to_string(e: Expression) -> str:
    def p(n, parent):
        s = show(n)
        if _PREC.get(n.kind, 5) < parent or (n.kind == "constant" and n.value < 0 and parent > 1):
            return f"({s})"
        return s

    def show(n):
        k = n.kind
        if k == "constant":
            return _num(n.value)
        if k in ("variable", "parameter"):
            return n.name
        if k == "negate":
            return "-" + p(n.children[0], 4)
        if k == "add":
            out = p(n.children[0], 1)
            for c in n.children[1:]:
                if c.kind == "negate":
                    out += " - " + p(c.children[0], 2)
                else:
                    out += " + " + p(c, 2 if c.kind == "constant" and c.value < 0 else 1)
            return out
        if k == "subtract":
            return f"{p(n.children[0], 1)} - {p(n.children[1], 2)}"
        if k == "multiply":
            return "*".join(p(c, 2) for c in n.children)
        if k == "divide":
            return f"{p(n.children[0], 2)}/{p(n.children[1], 3)}"
        if k == "power":
            ex = str(n.exponent) if n.exponent >= 0 else f"-{-n.exponent}"
            return f"{p(n.children[0], 5)}^{ex}"
        if k == "call":
            return f"{n.func}({show(n.children[0])})"
        raise ValueError(k)

    return show(e)


# -- vector field ------------------------------------------------------------

@dataclass(frozen=True)
class VectorFieldSpec:
    """Parsed model ``x' = f(x, mu)``."""

    variables: tuple
    parameters: tuple
    equations: tuple
    sources: tuple = ()

    def __post_init__(self):
        n = len(self.variables)
        if n < 2:
            raise ValueError("at least two phase variables are required")
        names = list(self.variables) + list(self.parameters)
        if len(set(names)) != len(names):
            raise ValueError("variable and parameter names must be unique")
        if len(self.equations) != n:
            raise ValueError(f"{len(self.equations)} equations for {n} variables")

    @property
    def n(self):
        return len(self.variables)

    @property
    def m(self):
        return len(self.parameters)

    @classmethod
    def from_strings(cls, variables, equations, parameters=()):
        variables = tuple(variables)
        parameters = tuple(parameters)
        exprs = tuple(parse(src, variables, parameters) for src in equations)
        return cls(variables, parameters, exprs, tuple(equations))

    def rhs(self, x, mu=()):
        return [evaluate(e, x, mu) for e in self.equations]

    def jacobian_exprs(self):
        return [[differentiate(e, j) for j in range(self.n)] for e in self.equations]
