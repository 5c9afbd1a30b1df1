"""Truncated multivariate Taylor series and their propagation through expression trees.

A series in ``n`` variables truncated at total degree ``D`` is a dense real
vector over all multi-indices ``|alpha| <= D`` (graded, lexicographically
descending inside a degree).  Entry ``alpha`` of the series of ``f`` around a
point is ``d^alpha f / alpha!`` there, so propagating series through an
expression tree applies the differentiation rules to all orders at once.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .expr import Expression, to_string


def _multi_indices(n, order):
    if n == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in _multi_indices(n - 1, order - first):
            yield (first,) + rest


class SeriesSpace:
    """Index bookkeeping for series in `n` variables to total degree `degree`."""

    def __init__(self, n, degree):
        self.n = n
        self.degree = degree
        self.alphas = [a for d in range(degree + 1) for a in _multi_indices(n, d)]
        self.index = {a: k for k, a in enumerate(self.alphas)}
        self.size = len(self.alphas)
        E = np.array(self.alphas, dtype=np.int64).reshape(self.size, n)
        deg = E.sum(axis=1)
        # pairs (i, j) with alpha_i + alpha_j in range, grouped by i (CSR rows)
        I, J = np.nonzero(deg[:, None] + deg[None, :] <= degree)
        base = (degree + 1) ** np.arange(n, dtype=np.int64)
        codes = E @ base
        order = np.argsort(codes)
        K = order[np.searchsorted(codes[order], codes[I] + codes[J])]
        self._I = I.astype(np.intp)
        self._J = J.astype(np.intp)
        self._K = K.astype(np.intp)
        self._ptr = np.searchsorted(self._I, np.arange(self.size + 1))

    def constant(self, c):
        s = np.zeros(self.size)
        s[0] = c
        return s

    def variable(self, i, x0):
        s = self.constant(x0)
        if self.degree >= 1:
            s[self.index[tuple(int(k == i) for k in range(self.n))]] = 1.0
        return s

    def mul(self, a, b):
        ia = np.flatnonzero(a)
        ib = np.flatnonzero(b)
        if len(ib) < len(ia):
            a, b, ia = b, a, ib
        if len(ia) * self.size * 4 < len(self._I):
            # few nonzeros in one factor: shift-and-add its rows
            out = np.zeros(self.size)
            for i in ia:
                lo, hi = self._ptr[i], self._ptr[i + 1]
                out[self._K[lo:hi]] += a[i] * b[self._J[lo:hi]]
            return out
        return np.bincount(self._K, weights=a[self._I] * b[self._J], minlength=self.size)

    def compose(self, coefs, a):
        """``sum_k coefs[k] (a - a0)^k`` by Horner's rule."""
        t = a.copy()
        t[0] = 0.0
        out = self.constant(coefs[-1])
        for c in reversed(coefs[:-1]):
            out = self.mul(out, t)
            out[0] += c
        return out

    def reciprocal(self, a, where):
        a0 = a[0]
        if a0 == 0.0:
            raise DomainError("division by zero", _where(where))
        coefs = [(-1) ** k / a0 ** (k + 1) for k in range(self.degree + 1)]
        return self.compose(coefs, a)

    def power(self, a, k, where):
        if k < 0:
            return self.power(self.reciprocal(a, where), -k, where)
        out = self.constant(1.0)
        base = a
        while k:
            if k & 1:
                out = self.mul(out, base)
            k >>= 1
            if k:
                base = self.mul(base, base)
        return out

    def function(self, func, a, where):
        a0 = float(a[0])
        D = self.degree
        fact = [math.factorial(k) for k in range(D + 1)]
        if func == "exp":
            e = math.exp(a0)
            coefs = [e / fact[k] for k in range(D + 1)]
        elif func == "sin":
            coefs = [math.sin(a0 + k * math.pi / 2) / fact[k] for k in range(D + 1)]
            coefs[0] = math.sin(a0)
        elif func == "cos":
            coefs = [math.cos(a0 + k * math.pi / 2) / fact[k] for k in range(D + 1)]
            coefs[0] = math.cos(a0)
        elif func == "log":
            if a0 <= 0.0:
                raise DomainError("log of non-positive value", _where(where))
            coefs = [math.log(a0)] + [(-1) ** (k + 1) / (k * a0 ** k) for k in range(1, D + 1)]
        elif func == "sqrt":
            if a0 < 0.0:
                raise DomainError("sqrt of negative value", _where(where))
            if a0 == 0.0:
                if np.any(a[1:] != 0.0):
                    raise DomainError("sqrt is not differentiable at 0", _where(where))
                return self.constant(0.0)
            coefs = [_binom_half(k) * a0 ** (0.5 - k) for k in range(D + 1)]
        else:
            raise ValueError(f"unknown function {func!r}")
        return self.compose(coefs, a)


def _where(node):
    # printing is deferred to the error path; trees can be large
    return to_string(node) if isinstance(node, Expression) else node


@lru_cache(maxsize=None)
def space(n, degree):
    return SeriesSpace(n, degree)


def _binom_half(k):
    out = 1.0
    for j in range(k):
        out *= (0.5 - j) / (j + 1)
    return out


def expression_series(e: Expression, sp: SeriesSpace, x0, mu, cache=None):
    """Taylor series of `e` around ``(x0, mu)`` in the phase variables."""
    memo = {} if cache is None else cache

    def ev(node):
        hit = memo.get(id(node))
        if hit is not None:
            return hit[1]
        v = _ev(node)
        memo[id(node)] = (node, v)
        return v

    def _ev(node):
        k = node.kind
        if k == "constant":
            return sp.constant(node.value)
        if k == "variable":
            return sp.variable(node.index, x0[node.index])
        if k == "parameter":
            return sp.constant(mu[node.index])
        if k == "negate":
            return -ev(node.children[0])
        if k == "add":
            out = ev(node.children[0]).copy()
            for c in node.children[1:]:
                out += ev(c)
            return out
        if k == "subtract":
            return ev(node.children[0]) - ev(node.children[1])
        if k == "multiply":
            out = ev(node.children[0])
            for c in node.children[1:]:
                out = sp.mul(out, ev(c))
            return out
        if k == "divide":
            a = ev(node.children[0])
            return sp.mul(a, sp.reciprocal(ev(node.children[1]), node))
        if k == "power":
            return sp.power(ev(node.children[0]), node.exponent, node)
        if k == "call":
            return sp.function(node.func, ev(node.children[0]), node)
        raise ValueError(f"bad node kind {k!r}")

    return ev(e)
