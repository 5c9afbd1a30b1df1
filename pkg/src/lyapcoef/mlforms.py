"""Taylor data of a vector field at an equilibrium and its multilinear forms.

Coefficients are stored in Taylor convention: for component ``i`` and
multi-index ``alpha`` the stored number is ``d^alpha F_i(0) / alpha!``.  The
symmetric derivative tensor entry at any index tuple whose multiset is
``alpha`` is therefore ``alpha! * c[i][alpha]``; :func:`apply_form` evaluates
the complex-multilinear extension of that tensor.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import EquilibriumResidualError, OrderError
from .expr import ZERO, VectorFieldSpec, differentiate, evaluate
from .series import expression_series
from .series import space as series_space

MAX_ORDER = 9
# dense tensors are materialized only up to this many index tuples
DENSE_LIMIT = 300_000


def multi_indices(n, order):
    """All exponent tuples of length `n` and total degree `order`, lexicographically descending."""
    if n == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in multi_indices(n - 1, order - first):
            yield (first,) + rest


def factorial_multi(alpha):
    return math.prod(math.factorial(a) for a in alpha)


@dataclass(frozen=True, eq=False)
class HomogeneousModel:
    """Sparse Taylor coefficients of ``F(x) = f(x0 + x, mu0)``.

    ``coeffs[i]`` maps multi-index tuples (1 <= |alpha| <= max_order) to the
    nonzero scaled coefficient.  ``f0`` is the field value at the expansion
    point, kept only as a diagnostic.
    """

    n: int
    max_order: int
    coeffs: tuple
    f0: np.ndarray = None
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_coefficients(cls, n, coeffs, max_order, f0=None):
        clean = []
        for comp in coeffs:
            d = {}
            for alpha, c in comp.items():
                alpha = tuple(int(a) for a in alpha)
                if len(alpha) != n:
                    raise ValueError(f"multi-index {alpha} has wrong length")
                r = sum(alpha)
                if r < 1 or r > max_order:
                    continue
                if c != 0.0:
                    d[alpha] = float(c)
            clean.append(d)
        if len(clean) != n:
            raise ValueError("one coefficient map per component is required")
        f0 = np.zeros(n) if f0 is None else np.asarray(f0, dtype=float)
        return cls(n, int(max_order), tuple(clean), f0)

    @property
    def A(self):
        return jacobian(self)

    @property
    def scale(self):
        """Largest coefficient magnitude, floored at one."""
        m = max((abs(c) for comp in self.coeffs for c in comp.values()), default=0.0)
        return max(1.0, m)

    def order_block(self, r):
        """Dense arrays ``(exps, C)`` for the order-`r` terms: exps is (K, n), C is (n, K)."""
        key = ("block", r)
        if key not in self._cache:
            alphas = sorted({a for comp in self.coeffs for a in comp if sum(a) == r}, reverse=True)
            exps = np.array(alphas, dtype=int).reshape(len(alphas), self.n)
            C = np.zeros((self.n, len(alphas)))
            for i, comp in enumerate(self.coeffs):
                for k, a in enumerate(alphas):
                    C[i, k] = comp.get(a, 0.0)
            self._cache[key] = (exps, C)
        return self._cache[key]

    def nonlinear_terms(self):
        """List of ``(alpha, coefficient vector)`` for 2 <= |alpha| <= max_order."""
        key = "nonlinear"
        if key not in self._cache:
            alphas = sorted({a for comp in self.coeffs for a in comp if sum(a) >= 2},
                            key=lambda a: (sum(a), tuple(-x for x in a)))
            self._cache[key] = [
                (a, np.array([comp.get(a, 0.0) for comp in self.coeffs])) for a in alphas
            ]
        return self._cache[key]

    def restrict_order(self, max_order):
        """Copy truncated to `max_order`."""
        return HomogeneousModel.from_coefficients(self.n, self.coeffs, max_order, self.f0)

    def __call__(self, x):
        """Evaluate the truncated Taylor polynomial (without the constant term)."""
        x = np.asarray(x)
        out = np.zeros(self.n, dtype=np.result_type(x, float))
        for i, comp in enumerate(self.coeffs):
            for a, c in comp.items():
                out[i] += c * np.prod(x ** np.array(a))
        return out


def taylor_model(spec: VectorFieldSpec, equilibrium, parameters=(), max_order=3, tol=None, method="series"):
    """Taylor coefficients of `spec` at `equilibrium` through `max_order`.

    ``method="series"`` propagates truncated Taylor series through each
    expression tree (every node visited once); ``method="symbolic"`` builds
    every partial derivative by repeated symbolic differentiation and evaluates
    it at the point.  Both apply the same derivative rules; the symbolic route
    swells quickly for composite expressions at high order.  Raises
    :class:`EquilibriumResidualError` if the point is not an equilibrium to
    within `tol` (default ``1e-10 * (1 + |J|)``).
    """
    if not 1 <= max_order <= MAX_ORDER:
        raise OrderError(f"max order must be in 1..{MAX_ORDER}, got {max_order}")
    x0 = [float(v) for v in equilibrium]
    mu = [float(v) for v in parameters]
    n = spec.n
    if len(x0) != n:
        raise ValueError(f"equilibrium has {len(x0)} entries, expected {n}")
    if len(mu) != spec.m:
        raise ValueError(f"{len(mu)} parameter values given, expected {spec.m}")

    if method == "series":
        coeffs, f0 = _series_coefficients(spec, x0, mu, max_order)
    elif method == "symbolic":
        coeffs, f0 = _symbolic_coefficients(spec, x0, mu, max_order)
    else:
        raise ValueError(f"unknown method {method!r}")

    model = HomogeneousModel.from_coefficients(n, coeffs, max_order, f0)
    J = jacobian(model)
    if tol is None:
        tol = 1e-10 * (1.0 + np.linalg.norm(J, np.inf))
    res = float(np.max(np.abs(f0)))
    if res > tol:
        raise EquilibriumResidualError(
            f"|f(x0)|_inf = {res:.3e} exceeds equilibrium tolerance {tol:.3e}"
        )
    return model


def _series_coefficients(spec, x0, mu, max_order):
    sp = series_space(spec.n, max_order)
    cache = {}
    coeffs = []
    f0 = np.zeros(spec.n)
    for i, e in enumerate(spec.equations):
        s = expression_series(e, sp, x0, mu, cache)
        f0[i] = s[0]
        coeffs.append({a: float(s[k]) for k, a in enumerate(sp.alphas) if k and s[k] != 0.0})
    return coeffs, f0


def _symbolic_coefficients(spec, x0, mu, max_order):
    n = spec.n
    coeffs = []
    f0 = np.zeros(n)
    # one derivative cache and one value cache per extraction: derivatives of
    # different orders share most of their subtrees
    dcache, vcache = {}, {}
    for i, e in enumerate(spec.equations):
        f0[i] = evaluate(e, x0, mu, vcache)
        comp = {}
        # walk multi-indices as a tree: children of alpha raise variables >= its
        # last nonzero slot, so each partial is differentiated exactly once
        stack = [((0,) * n, e, 0)]
        while stack:
            alpha, d_expr, last = stack.pop()
            r = sum(alpha)
            if r >= max_order:
                continue
            for v in range(last, n):
                child = differentiate(d_expr, v, dcache)
                if child is ZERO or (child.kind == "constant" and child.value == 0.0):
                    continue
                beta = alpha[:v] + (alpha[v] + 1,) + alpha[v + 1:]
                val = evaluate(child, x0, mu, vcache)
                if val != 0.0:
                    comp[beta] = val / factorial_multi(beta)
                stack.append((beta, child, v))
        coeffs.append(comp)
    return coeffs, f0


def jacobian(model: HomogeneousModel) -> np.ndarray:
    """First-order block, rows = components, columns = variables."""
    n = model.n
    A = np.zeros((n, n))
    for i, comp in enumerate(model.coeffs):
        for j in range(n):
            A[i, j] = comp.get(tuple(1 if k == j else 0 for k in range(n)), 0.0)
    return A


@lru_cache(maxsize=None)
def _index_table(n, r):
    """For every index tuple in [0,n)^r: the multi-index it represents."""
    idx = np.indices((n,) * r).reshape(r, -1).T
    counts = np.stack([(idx == v).sum(axis=1) for v in range(n)], axis=1)
    return counts


def _dense_tensor(model, r):
    key = ("tensor", r)
    if key not in model._cache:
        n = model.n
        counts = _index_table(n, r)
        T = np.zeros((n, counts.shape[0]))
        # encode multi-indices as integers to look coefficients up vectorized
        base = (r + 1) ** np.arange(n)
        codes = counts @ base
        for i, comp in enumerate(model.coeffs):
            items = [(a, c) for a, c in comp.items() if sum(a) == r]
            if not items:
                continue
            keys = np.array([np.dot(a, base) for a, _ in items])
            vals = np.array([c * factorial_multi(a) for a, c in items])
            order = np.argsort(keys)
            keys, vals = keys[order], vals[order]
            pos = np.searchsorted(keys, codes)
            pos = np.clip(pos, 0, len(keys) - 1)
            hit = keys[pos] == codes
            T[i, hit] = vals[pos[hit]]
        model._cache[key] = T.reshape((n,) + (n,) * r)
    return model._cache[key]


def _form_dense(model, r, args):
    T = _dense_tensor(model, r)
    for a in reversed(args):
        T = T @ a
    return T


def _form_sparse(model, r, args):
    n = model.n
    out = np.zeros(n, dtype=complex)
    X = np.array(args)  # (r, n)

    for i, comp in enumerate(model.coeffs):
        for alpha, c in comp.items():
            if sum(alpha) != r:
                continue
            memo = {}

            # sum over assignments of argument slots s.. to variables with
            # remaining multiplicities `rem`
            def S(s, rem):
                if s == r:
                    return 1.0
                hit = memo.get((s, rem))
                if hit is not None:
                    return hit
                tot = 0.0
                for v in range(n):
                    if rem[v]:
                        nxt = rem[:v] + (rem[v] - 1,) + rem[v + 1:]
                        tot += X[s, v] * S(s + 1, nxt)
                memo[(s, rem)] = tot
                return tot

            out[i] += c * factorial_multi(alpha) * S(0, alpha)
    return out


def apply_form(model: HomogeneousModel, r: int, *args, method="auto") -> np.ndarray:
    """Symmetric order-`r` derivative form of the model applied to `r` complex vectors.

    ``apply_form(m, 2, x, y)`` is ``B(x, y)``, order 3 is ``C``, ... order 9 is ``N``.
    ``method`` selects the direct tensor sum ("dense") or the multiplicity-aware
    sparse sum ("sparse"); "auto" picks dense when the tensor is small.
    """
    if len(args) == 1 and isinstance(args[0], (list, tuple)) and len(args[0]) == r and r > 1:
        args = tuple(args[0])
    if len(args) != r:
        raise ValueError(f"order {r} form takes {r} arguments, got {len(args)}")
    if r > model.max_order:
        raise OrderError(f"form of order {r} requested but model holds order {model.max_order}")
    args = [np.asarray(a, dtype=complex) for a in args]
    if r == 1:
        return jacobian(model) @ args[0]
    if method == "auto":
        method = "dense" if model.n ** r <= DENSE_LIMIT else "sparse"
    if method == "dense":
        return _form_dense(model, r, args)
    return _form_sparse(model, r, args)


def form_by_name(model):
    """Dictionary of the named forms ``B, C, D, E, K, L, M, N`` as callables."""
    names = "BCDEKLMN"
    return {name: (lambda *a, _r=r: apply_form(model, _r, *a)) for r, name in zip(range(2, 10), names)}


def all_multi_indices(n, max_order, min_order=1):
    return list(itertools.chain.from_iterable(multi_indices(n, r) for r in range(min_order, max_order + 1)))
