"""Closed-form center-manifold coefficients, used as an oracle for the engine.

Every coefficient below is written out term by term as a sum of multilinear
forms ``B .. N`` applied to ``q``, ``qb = conj(q)``, ``hJK`` and
``hbJK = conj(hJK)``.  The symbols are the ``1/(j! k!)`` normalized
coefficients.  A disagreement with :func:`lyapcoef.hopf.center_manifold`
points either at a transcription slip here or at a bug in the engine.

Also here: an independent scalar normal-form reduction for planar systems
(:func:`planar_oracle`) and the generator of planar normal-form test systems
(:func:`normal_form_system`).
"""
from __future__ import annotations

import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import PreconditionError
from .expr import VectorFieldSpec
from .hopf import BivariatePolyVec, compose_field
from .linalg import CriticalPair, bordered_solve, inner, solve_complex
from .mlforms import HomogeneousModel, apply_form, jacobian

FORM_ORDER = {"B": 2, "C": 3, "D": 4, "E": 5, "K": 6, "L": 7, "M": 8, "N": 9}

# nonlinear parts only; G-coupling terms are added explicitly in paper_table
TERMS = {
    "h40": "3B(h20,h20) + 4 B(q,h30)+ 6 C(q,q,h20)+ D(q,q,q,q)",
    "h31": "3 B(q,h21) + B(qb, h30) + 3 B(h20,h11) + 3 C(q,q,h11) +3 C(q,qb,h20) + D(q,q,q,qb)",
    "h22": "D(q,q,qb, qb) + 4 C(q, qb, h11) + C(qb, qb, h20) + C(q,q,hb20) + 2 B(h11,h11) "
           "+ 2 B(q,hb21) + 2 B(qb, h21)+ B(hb20,h20)",
    "H32": "6 B(h11,h21)+ B(hb20,h30) + 3 B(hb21,h20)+ 3 B(q,h22) + 2 B(qb, h31) +6 C(q,h11,h11) "
           "+ 3 C(q, hb20, h20)+ 3 C(q,q,hb21) +6 C(q,qb, h21) + 6 C(qb, h20, h11) + C(qb, qb, h30) "
           "+ D(q,q,q,hb20) + 6 D(q,q,qb,h11) + 3 D(q, qb,qb, h20) + E(q,q,q,qb,qb)",
    "h41": "4B(h11,h30)+ 6 B(h20,h21) + 4 B(q,h31) + B(qb,h40) + 12 C(q,h11,h20) + 6 C(q,q,h21) "
           "+ 4 C(q,qb, h30) + 3 C(qb, h20,h20) + 4 D(q,q,q,h11) + 6 D(q,q,qb, h20) + E(q,q,q,q,qb)",
    "h42": "8 B(h11,h31) + 6 B(h20,h22) + B(hb20,h40) + 6 B(h21,h21) + 4 B(hb21,h30) + 4 B(q,h32) "
           "+ 2 B(qb, h41) + 12 C(h11,h11,h20) + 3 C(h20,h20,hb20) + 24 C(q,h11,h21) + 12 C(q,h20,hb21) "
           "+ 4 C(q,hb20,h30) + 6 C(q,q,h22) + 8 C(q,qb,h31) + 8 C(qb, h11,h30) + 12 C(qb, h20,h21) "
           "+ C(qb, qb, h40) + 12 D(q,q,h11,h11) + 6 D(q,q,h20,hb20) + 4 D(q,q,q,hb21) + 12 D(q,q,qb,h21) "
           "+ 24 D(q,qb,h11,h20) + 4 D(q,qb,qb,h30) + 3 D(qb,qb, h20,h20) + E(q,q,q,q,hb20) "
           "+ 8 E(q,q,q,qb, h11) + 6 E(q,q,qb,qb,h20) + K(q,q,q,q,qb,qb)",
    "h33": "9 B(h11,h22) + 3 B(h20,hb31) + 3 B(hb20,h31) + 9 B(h21,hb21) + B(hb30,h30) + 3 B(q,hb32) "
           "+ 3 B(qb,h32) + 6 C(h11,h11,h11) + 9 C(h11,hb20,h20) + 18 C(q,h11,hb21) + 3 C(q,h20,hb30) "
           "+ 9 C(q,hb20,h21) + 3 C(q,q,hb31) + 9 C(q,qb,h22) + 18 C(qb,h11,h21) + 9 C(qb,h20,hb21) "
           "+ 3 C(qb, hb20,h30) + 3 C(qb,qb, h31) + 9 D(q,q,hb20,h11) + D(q,q,q,hb30) + 9 D(q,q,qb,hb21) "
           "+ 18 D(q,qb, h11,h11) + 9 D(q,qb, hb20, h20) + 9 D(q,qb,qb, h21) + 9 D(qb,qb, h11, h20) "
           "+ 3 E(q,q,q,qb,hb20) + 9 E(q,q,qb,qb, h11) + 3 E(q,qb,qb,qb, h20) + K(q,q,q,qb,qb, qb)",
    "H43": "12 B(h11,h32) + 6 B(h20,hb32) + 3 B(hb20,h41) + 18 B(h21,h22) + 12 B(hb21,h31) "
           "+ 4 B(h30,hb31) + B(hb30,h40) + 4 B(q,h33) + 3 B(qb, h42) + 36 C(h11,h11,h21) "
           "+ 36 C(h11,h20,hb21) + 12 C(h11,hb20,h30) + 3 C(h20,h20,hb30) + 18 C(h20,hb20,h21) "
           "+ 36 C(q,h11,h22) + 12 C(q,h20,hb31) + 12 C(q,hb20,h31) + 36 C(q,h21,hb21) + 4 C(q,h30,hb30) "
           "+ 6 C(q,q,hb32) + 12 C(q,qb,h32) + 24 C(qb,h11,h31) + 18 C(qb,h20,h22) + 3 C(qb,hb20,h40) "
           "+ 18 C(qb,h21,h21) + 12 C(qb,hb21,h30) + 3 C(qb, qb, h41) + 24 D(q,h11,h11,h11) "
           "+ 36 D(q,h11,h20,hb20) + 36 D(q,q,h11,hb21) + 6 D(q,q,h20,hb30) + 18 D(q,q,hb20,h21) "
           "+ 4 D(q,q,q,hb31) + 18 D(q,q,qb,h22) + 72 D(q,qb, h11,h21) + 36 D(q,qb,h20,hb21) "
           "+ 12 D(q,qb,hb20,h30) + 12 D(q,qb,qb, h31) + 36 D(qb,h11,h11,h20) + 9 D(qb,h20,h20,hb20) "
           "+ 12 D(qb,qb,h11,h30) + 18 D(qb,qb,h20,h21) + D(qb,qb, qb,h40) + 12 E(q,q,q,h11,hb20) "
           "+ E(q,q,q,q,hb30) + 12 E(q,q,q,qb,hb21) + 36 E(q,q,qb,h11,h11) + 18 E(q,q,qb,h20,hb20) "
           "+ 18 E(q,q,qb,qb, h21) + 36 E(q,qb,qb,h11,h20) + 4 E(q,qb,qb,qb, h30) + 3 E(qb, qb, qb, h20,h20) "
           "+ 3 K(q,q,q,q,qb,hb20) + 12 K(q,q,q,qb,qb, h11) + 6 K(q,q,qb,qb,qb,h20) + L(q,q,q,q,qb,qb,qb)",
    "H54": "20 B(h11,h43) + 10 B(h20,hb43) + 6 B(hb20,h52) + 40 B(h21,h33) +30 B(hb21,h42) + 60 B(h22,h32) "
           "+ 10 B(h30,hb42) + 4 B(hb30,h51) + 40 B(h31,hb32) + 20 B(hb31,h41) + 5 B(h40,hb41) + B(hb40,h50) "
           "+ 5 B(q,h44) + 4 B(qb,h53) + 120 C(h11,h11,h32) + 60 C(h11,hb20,h41) + 360 C(h11,h21,h22) "
           "+ 240 C(h11,hb21,h31) + 80 C(h11,h30,hb31) + 20 C(h11,hb30,h40) + 120 C(h20,h11,hb32) "
           "+ 15 C(h20,h20,hb41) + 60 C(h20,hb20,h32) + 120 C(h20,h21,hb31) + 180 C(h20,hb21,h22) "
           "+ 10 C(h20,h30,hb40) + 40 C(h20,hb30,h31) + 3 C(hb20,hb20,h50) + 120 C(hb20,h21,h31) "
           "+ 30 C(hb20,hb21,h40) + 60 C(hb20,h30,h22) + 180 C(h21,h21,hb21) + 60 C(hb21,hb21,h30) "
           "+ 40 C(h30,h21,hb30) + 80 C(q,h11,h33) + 30 C(q,h20,hb42) + 30 C(q,hb20,h42) "
           "+ 120 C(q,h21,hb32) + 120 C(q,hb21,h32) + 90 C(q,h22,h22) + 20 C(q,h30,hb41) "
           "+ 20 C(q,hb30,h41) + 80 C(q,h31,hb31) + 5 C(q,h40,hb40) + 10 C(q,q,hb43) + 20 C(q,qb,h43) "
           "+ 60 C(qb,h11,h42) + 40 C(qb,h20,h33) + 12 C(qb,hb20,h51) + 120 C(qb,h21,h32) "
           "+ 60 C(qb,hb21,h41) + 40 C(qb,h30,hb32) + 4 C(qb,hb30,h50) + 120 C(qb,h31,h22) "
           "+ 20 C(qb,h40,hb31) + 6 C(qb,qb,h52) + 240 D(h11,h11,h11,h21) + 120 D(h11,h11,hb20,h30) "
           "+ 360 D(h20,h11,h11,hb21) + 360 D(h20,h11,hb20,h21) + 60 D(h20,h20,h11,hb30) "
           "+ 90 D(h20,h20,hb20,hb21) + 30 D(h20,hb20,hb20,h30) + 360 D(q,h11,h11,h22) "
           "+ 240 D(q,h11,hb20,h31) + 720 D(q,h11,h21,hb21) + 80 D(q,h11,h30,hb30) "
           "+ 240 D(q,h20,h11,hb31) + 15 D(q,h20,h20,hb40) + 180 D(q,h20,hb20,h22) "
           "+ 120 D(q,h20,h21,hb30) + 180 D(q,h20,hb21,hb21) + 15 D(q,hb20,hb20,h40) "
           "+ 180 D(q,hb20,hb20,h21) + 120 D(q,hb20,h30,hb21) + 120 D(q,q,h11,hb32) "
           "+ 30 D(q,q,h20,hb41) + 60 D(q,q,hb20,h32) + 120 D(q,q,h21,hb31) + 180 D(q,q,hb21,h22) "
           "+ 10 D(q,q,h30,hb40) + 40 D(q,q,hb30,h31) + 10 D(q,q,q,hb42) + 40 D(q,q,qb,h33) "
           "+ 240 D(q,qb,h11,h32) + 120 D(q,qb,h20,hb32) + 60 D(q,qb,hb20,h41) + 360 D(q,qb,h21,h22) "
           "+ 240 D(q,qb,hb21,h31) + 80 D(q,qb,h30,hb31) + 20 D(q,qb,hb30,h40) + 30 D(q,qb,qb,h42) "
           "+ 240 D(qb,h11,h11,h31) + 60 D(qb,h11,hb20,h40) + 360 D(qb,h11,h21,h21) "
           "+ 240 D(qb,h11,h30,hb21) + 360 D(qb,h20,h11,h22) + 60 D(qb,h20,h20,hb31) "
           "+ 120 D(qb,h20,hb20,h31) + 360 D(qb,h20,h21,hb21) + 40 D(qb,h20,h30,hb30) "
           "+ 120 D(qb,hb20,h30,h21) + 60 D(qb,qb,h11,h41) + 60 D(qb,qb,h20,h32) + 6 D(qb,qb,h20,h50) "
           "+ 120 D(qb,qb,h21,h31) + 30 D(qb,qb,hb1,h40) + 60 D(qb,qb,h30,h22) + 4 D(qb,qb,qb,h51) "
           "+ 120 E(q,h11,h11,h11,h11) + 360 E(q,h20,h11,h11,hb20) + 45 E(q,h20,h20,hb20,hb20) "
           "+ 360 E(q,q,h11,h11,hb21) + 360 E(q,q,h11,hb20,h21) + 120 E(q,q,h20,h11,hb30) "
           "+ 180 E(q,q,h20,hb20,hb21) + 30 E(q,q,hb20,hb20,h30) + 80 E(q,q,q,h11,hb31) "
           "+ 10 E(q,q,q,h20,hb40) + 60 E(q,q,q,hb20,h22) + 40 E(q,q,q,h21,hb30) + 60 E(q,q,q,hb21,hb21) "
           "+ 5 E(q,q,q,q,hb41) + 40 E(q,q,q,qb,hb32) + 360 E(q,q,qb,h11,h22) + 120 E(q,q,qb,h20,hb31) "
           "+ 120 E(q,q,qb,hb20,h31) + 360 E(q,q,qb,h21,hb21) + 40 E(q,q,qb,h30,hb30) "
           "+ 60 E(q,q,qb,qb,h32) + 720 E(q,qb,h11,h11,h21) + 240 E(q,qb,h11,hb20,h30) "
           "+ 720 E(q,qb,h20,h11,hb21) + 60 E(q,qb,h20,h20,hb30) + 360 E(q,qb,h20,hb20,h21) "
           "+ 240 E(q,qb,qb,h11,h31) + 180 E(q,qb,qb,h20,h22) + 30 E(q,qb,qb,hb20,h40) "
           "+ 180 E(q,qb,qb,h21,h21) + 120 E(q,qb,qb,h30,hb21) + 20 E(q,qb,qb,qb,h41) "
           "+ 240 E(qb,h20,h11,h11,h11) + 180 E(qb,h20,h20,h11,hb20) + 120 E(qb,qb,h11,h11,h30) "
           "+ 360 E(qb,qb,h20,h11,h21) + 90 E(qb,qb,h20,h20,hb21) + 60 E(qb,qb,h20,hb20,h30) "
           "+ 20 E(qb,qb,qb,h11,h40) + 40 E(qb,qb,qb,h20,h31) + 40 E(qb,qb,qb,h30,h21) + E(qb,qb,qb,qb,h50) "
           "+ 120 K(q,q,q,h11,h11,hb20) + 30 K(q,q,q,h20,hb20,hb20) + 20 K(q,q,q,q,h11,hb30) "
           "+ 30 K(q,q,q,q,hb20,hb21) + K(q,q,q,q,q,hb40) + 20 K(q,q,q,q,qb,hb31) "
           "+ 240 K(q,q,q,qb,h11,hb21) + 40 K(q,q,q,qb,h20,hb30) + 120 K(q,q,q,qb,hb20,h21) "
           "+ 60 K(q,q,q,qb,qb,h22) + 240 K(q,q,qb,h11,h11,h11) + 360 K(q,q,qb,h20,h11,hb20) "
           "+ 360 K(q,q,qb,qb,h11,h21) + 180 K(q,q,qb,qb,h20,hb21) + 60 K(q,q,qb,qb,hb20,h30) "
           "+ 40 K(q,q,qb,qb,qb,h31) + 360 K(q,qb,qb,h20,h11,h11) + 90 K(q,qb,qb,h20,h20,hb20) "
           "+ 80 K(q,qb,qb,qb,h11,h30) + 120 K(q,qb,qb,qb,h20,h21) + 5 K(q,qb,qb,qb,qb,h40) "
           "+ 60 K(qb,qb,qb,h20,h20,h11) + 10 K(qb,qb,qb,qb,h20,h30) + 3 L(q,q,q,q,q,hb20,hb20) "
           "+ 4 L(q,q,q,q,q,qb,hb30) + 60 L(q,q,q,q,qb,h11,hb20) + 30 L(q,q,q,q,qb,qb,hb21) "
           "+ 120 L(q,q,q,qb,qb,h11,h11) + 60 L(q,q,q,qb,qb,h20,hb20) + 40 L(q,q,q,qb,qb,qb,h21) "
           "+ 120 L(q,q,qb,qb,qb,h20,h11) + 10 L(q,q,qb,qb,qb,qb,h30) + 15 L(q,qb,qb,qb,qb,h20,h20) "
           "+ 6 M(q,q,q,q,q,qb,qb,hb20) + 20 M(q,q,q,q,qb,qb,qb,h11) + 10 M(q,q,q,qb,qb,qb,qb,h20) "
           "+ N(q,q,q,q,q,qb,qb,qb,qb)",
}

# corrections to the term lists above; each was located by comparing with
# :func:`expected_terms` and restores the multinomial weight or bidegree
ERRATA = {
    "h33": {"add": ["D(qb,qb,qb,h30)"]},
    "H54": {"replace": [
        ("180 D(q,hb20,hb20,h21)", "180 D(q,hb20,h21,h21)"),
        ("6 D(qb,qb,h20,h50)", "6 D(qb,qb,hb20,h50)"),
        ("30 D(qb,qb,hb1,h40)", "30 D(qb,qb,hb21,h40)"),
    ]},
}


def term_list(name, literal=False):
    """Term sum for `name` with :data:`ERRATA` applied unless `literal`."""
    text = TERMS[name]
    if not literal and name in ERRATA:
        fix = ERRATA[name]
        for old, new in fix.get("replace", ()):
            if old not in text:
                raise KeyError(f"erratum target {old!r} not in {name}")
            text = text.replace(old, new)
        for extra in fix.get("add", ()):
            text = text + " + " + extra
    return parse_terms(text)


_TERM = re.compile(r"([+-])?\s*(\d*)\s*([BCDEKLMN])\(([^)]*)\)")

# h's the closed-form chain defines; everything else in an assembly is undefined
DEFINED = ("11", "20", "30", "21", "40", "31", "22", "32", "41", "42", "33", "43")


def parse_terms(text):
    """``[(coefficient, form letter, (symbol, ...)), ...]`` from a term sum."""
    out = []
    pos = 0
    for m in _TERM.finditer(text):
        if text[pos:m.start()].strip():
            raise ValueError(f"unparsed text {text[pos:m.start()]!r}")
        pos = m.end()
        sign = -1 if m.group(1) == "-" else 1
        coef = sign * int(m.group(2) or 1)
        args = tuple(a.strip() for a in m.group(4).split(","))
        if len(args) != FORM_ORDER[m.group(3)]:
            raise ValueError(f"arity mismatch in {m.group()!r}")
        out.append((coef, m.group(3), args))
    if text[pos:].strip():
        raise ValueError(f"unparsed text {text[pos:]!r}")
    return out


def symbol_degree(sym):
    """``(j, k)`` bidegree of a symbol, or None when it is not well formed."""
    if sym == "q":
        return (1, 0)
    if sym == "qb":
        return (0, 1)
    m = re.fullmatch(r"h(b?)(\d)(\d)", sym)
    if not m:
        return None
    j, k = int(m.group(2)), int(m.group(3))
    return (k, j) if m.group(1) else (j, k)


def _symbol(a, b):
    if (a, b) == (1, 0):
        return "q"
    if (a, b) == (0, 1):
        return "qb"
    return f"h{a}{b}" if a >= b else f"hb{b}{a}"


def expected_terms(j, k):
    """Exact nonlinear part of the ``w^j wb^k`` coefficient, normalized by ``j! k!``.

    Returns ``{(form letter, sorted symbols): weight}``.  A multiset of
    arguments ``h_(a_i b_i)`` with multiplicities ``m_t`` enters with weight
    ``j! k! / (prod m_t! prod a_i! b_i!)``.
    """
    out = {}
    parts = [(a, b) for a in range(j + 1) for b in range(k + 1) if a + b >= 1 and (a, b) != (j, k)]
    top = math.factorial(j) * math.factorial(k)

    def rec(rem, start, chosen):
        if rem == (0, 0):
            r = len(chosen)
            if r < 2:
                return
            den = 1
            for mult in Counter(chosen).values():
                den *= math.factorial(mult)
            for a, b in chosen:
                den *= math.factorial(a) * math.factorial(b)
            key = ("BCDEKLMN"[r - 2], tuple(sorted(_symbol(a, b) for a, b in chosen)))
            out[key] = out.get(key, 0) + Fraction(top, den)
            return
        for i in range(start, len(parts)):
            a, b = parts[i]
            if a <= rem[0] and b <= rem[1]:
                rec((rem[0] - a, rem[1] - b), i, chosen + [(a, b)])

    rec((j, k), 0, [])
    return out


def collect_terms(terms):
    """``{(form letter, sorted symbols): weight}`` for a parsed term list."""
    out = {}
    for coef, form, args in terms:
        key = (form, tuple(sorted(args)))
        out[key] = out.get(key, 0) + coef
    return {k: v for k, v in out.items() if v != 0}


def evaluate_terms(model, terms, symbols):
    total = np.zeros(model.n, dtype=complex)
    for coef, form, args in terms:
        total += coef * apply_form(model, FORM_ORDER[form], *[symbols[a] for a in args])
    return total


@dataclass
class PaperCoeffs:
    h: dict
    G: dict
    bordered: dict = field(default_factory=dict)

    def __getitem__(self, name):
        if name.startswith("G"):
            return self.G[name]
        return self.h[name]


def paper_table(model: HomogeneousModel, pair: CriticalPair, literal=False) -> PaperCoeffs:
    """h11 .. h43 and G21, G32, G43 from the closed-form chain.

    With `literal` the term lists are used as written: :data:`ERRATA` is not
    applied and the ``-2 h11 (G21 + conj G21)`` contribution to h22 is left
    out, which is only correct when ``l1 = 0``.
    """
    if model.max_order < 7:
        raise PreconditionError("closed-form chain needs a model of order >= 7")
    A = jacobian(model)
    n = model.n
    w0 = pair.omega0
    q, p = pair.q, pair.p
    I = np.eye(n)
    S = {"q": q, "qb": np.conj(q)}
    G = {}
    bordered = {}

    def put(name, v):
        S["h" + name] = v
        S["hb" + name] = np.conj(v)

    def B(*a):
        return apply_form(model, 2, *a)

    def C(*a):
        return apply_form(model, 3, *a)

    def solve(freq, rhs):
        return solve_complex(freq * 1j * w0 * I - A, rhs)

    def resonant(name, calH):
        Gv = inner(p, calH)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sol = bordered_solve(A, w0, p, q, calH - Gv * q, scale=float(np.linalg.norm(calH)))
        G["G" + name] = Gv
        bordered[name] = sol
        put(name, sol.h)

    def terms(name):
        return evaluate_terms(model, term_list(name, literal), S)

    qb = S["qb"]
    put("11", solve(0, B(q, qb)))
    put("20", solve(2, B(q, q)))
    put("30", solve(3, 3 * B(q, S["h20"]) + C(q, q, q)))
    resonant("21", C(q, q, qb) + B(qb, S["h20"]) + 2 * B(q, S["h11"]))
    G21 = G["G21"]
    put("40", solve(4, terms("h40")))
    put("31", solve(2, terms("h31") - 3 * G21 * S["h20"]))
    rhs22 = terms("h22")
    if not literal:
        rhs22 = rhs22 - 2 * S["h11"] * (G21 + np.conj(G21))
    put("22", solve(0, rhs22))
    resonant("32", terms("H32") - 6 * G21 * S["h21"] - 3 * np.conj(G21) * S["h21"])
    G32 = G["G32"]
    put("41", solve(3, terms("h41") - 6 * G21 * S["h30"]))
    put("42", solve(2, terms("h42") - 4 * (G32 * S["h20"] + 3 * G21 * S["h31"] + np.conj(G21) * S["h31"])))
    put("33", solve(0, terms("h33") - 3 * (G32 + np.conj(G32)) * S["h11"]
                    - 9 * (G21 + np.conj(G21)) * S["h22"]))
    resonant("43", terms("H43") - 6 * (2 * G32 * S["h21"] + np.conj(G32) * S["h21"]
                                       + 3 * G21 * S["h32"] + 2 * np.conj(G21) * S["h32"]))
    h = {name: S["h" + name] for name in DEFINED}
    return PaperCoeffs(h, G, bordered)


@dataclass
class PartialH54:
    value: np.ndarray
    used: list
    undefined: list
    inconsistent: list


def h54_partial(model: HomogeneousModel, coeffs: PaperCoeffs, pair: CriticalPair, literal=False) -> PartialH54:
    """Sum of the degree-(5,4) assembly terms that only involve defined h's.

    Terms that reference h50, h51, h52, h53, h44 are set aside as
    ``undefined``; terms with a malformed symbol or whose bidegree is not
    (5, 4) are set aside as ``inconsistent``.
    """
    if model.max_order < 9:
        raise PreconditionError("degree-(5,4) assembly needs a model of order 9")
    S = {"q": pair.q, "qb": np.conj(pair.q)}
    for name, v in coeffs.h.items():
        S["h" + name] = v
        S["hb" + name] = np.conj(v)
    used, undefined, inconsistent = [], [], []
    for term in term_list("H54", literal):
        degs = [symbol_degree(a) for a in term[2]]
        if any(d is None for d in degs) or tuple(map(sum, zip(*degs))) != (5, 4):
            inconsistent.append(term)
        elif any(a not in S for a in term[2]):
            undefined.append(term)
        else:
            used.append(term)
    return PartialH54(evaluate_terms(model, used, S), used, undefined, inconsistent)


def engine_h54_restricted(model: HomogeneousModel, table) -> np.ndarray:
    """Engine's degree-(5,4) nonlinear assembly with h50, h51, h52, h53, h44 removed."""
    H = table.H.truncated(9)
    for j, k in ((5, 0), (5, 1), (5, 2), (5, 3), (4, 4)):
        H[j, k] = 0.0
        H[k, j] = 0.0
    for j in range(10):
        for k in range(10 - j):
            if j + k >= 8 and (j, k) != (4, 4):
                H[j, k] = 0.0
    F = compose_field(model, H, 9)
    return F[5, 4] * (math.factorial(5) * math.factorial(4))


# -- planar scalar reduction -------------------------------------------------

def _smul(P, Q, D):
    """Truncated product of scalar bivariate series stored as (D+1, D+1) arrays."""
    out = np.zeros_like(P)
    for a, b in zip(*np.nonzero(P)):
        if a + b > D:
            continue
        out[a : D + 1, b : D + 1] += P[a, b] * Q[: D + 1 - a, : D + 1 - b]
    jj, kk = np.indices(out.shape)
    out[jj + kk > D] = 0.0
    return out


def planar_oracle(model: HomogeneousModel, pair: CriticalPair, level=None) -> dict:
    """Resonant coefficients ``{k: G_(k+1,k)}`` of a planar system by scalar normal form.

    The field is complexified as ``z = <p, x>``, ``x = z q + conj(z q)``; the
    scalar equation ``z' = i w0 z + sum f_jk z^j conj(z)^k`` is then reduced by
    a near-identity change ``z = w + phi(w, conj w)`` with no resonant terms in
    ``phi``.
    """
    if model.n != 2:
        raise PreconditionError(f"planar oracle needs n = 2, got n = {model.n}")
    if level is None:
        level = min(4, (model.max_order - 1) // 2)
    D = 2 * level + 1
    if model.max_order < D:
        raise PreconditionError(f"level {level} needs model order {D}")
    w0 = pair.omega0
    q, p = pair.q, pair.p
    qb = np.conj(q)

    f = np.zeros((D + 1, D + 1), dtype=complex)
    for r in range(2, D + 1):
        for j in range(r + 1):
            k = r - j
            v = apply_form(model, r, *([q] * j + [qb] * k))
            f[j, k] = inner(p, v) / (math.factorial(j) * math.factorial(k))

    phi = np.zeros((D + 1, D + 1), dtype=complex)
    phi[1, 0] = 1.0
    g = {}
    for d in range(2, D + 1):
        z = phi.copy()
        zb = np.conj(phi.T)
        # f(z, zb) through degree d using powers of the current transformation
        zp = [np.zeros_like(z) for _ in range(d + 1)]
        zbp = [np.zeros_like(z) for _ in range(d + 1)]
        zp[0][0, 0] = 1.0
        zbp[0][0, 0] = 1.0
        for e in range(1, d + 1):
            zp[e] = _smul(zp[e - 1], z, d)
            zbp[e] = _smul(zbp[e - 1], zb, d)
        S = np.zeros_like(z)
        for j in range(d + 1):
            for k in range(d + 1 - j):
                if j + k >= 2 and f[j, k] != 0:
                    S += f[j, k] * _smul(zp[j], zbp[k], d)
        for j in range(d, -1, -1):
            k = d - j
            rhs = S[j, k]
            for m, gm in g.items():
                if m <= min(j, k):
                    rhs -= phi[j - m, k - m] * ((j - m) * gm + (k - m) * np.conj(gm))
            if j == k + 1:
                g[k] = rhs
                phi[j, k] = 0.0
            else:
                phi[j, k] = rhs / (1j * w0 * (j - k - 1))
    return {k: g[k] * math.factorial(k + 1) * math.factorial(k) for k in sorted(g)}


# -- planar normal-form systems ----------------------------------------------

def _num(v):
    if isinstance(v, str):
        return f"({v})"
    v = float(v)
    return f"({v!r})" if v < 0 else repr(v)


def normal_form_system(omega0, c, *, eta=0.0, parameters=(), variables=("x", "y")) -> VectorFieldSpec:
    """Planar field whose complexification ``w = x + i y`` is
    ``w' = (eta + i omega0) w + sum_k c_k w |w|^(2k)``.

    Entries of `c` are complex numbers or ``(re, im)`` pairs; either part may
    be an expression string in `parameters`.  `eta` may also be a string.
    """
    if not isinstance(omega0, str) and omega0 <= 0:
        raise ValueError("omega0 must be positive")
    x, y = variables
    w = _num(omega0)
    fx = [f"{_num(eta)}*{x}", f"-{w}*{y}"]
    fy = [f"{w}*{x}", f"{_num(eta)}*{y}"]
    for k, ck in enumerate(c, start=1):
        if isinstance(ck, tuple):
            a, b = ck
        else:
            a, b = complex(ck).real, complex(ck).imag
        if not isinstance(a, str) and not isinstance(b, str) and a == 0 and b == 0:
            continue
        r = f"({x}^2 + {y}^2)" + (f"^{k}" if k > 1 else "")
        fx.append(f"{r}*({_num(a)}*{x} - {_num(b)}*{y})")
        fy.append(f"{r}*({_num(b)}*{x} + {_num(a)}*{y})")
    return VectorFieldSpec.from_strings(variables, [" + ".join(fx), " + ".join(fy)], parameters)
