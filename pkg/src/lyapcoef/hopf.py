"""Center-manifold coefficients and Lyapunov coefficients by coefficient matching.

The immersion is stored in Taylor convention,

    H(w, wb) = sum a_jk w^j wb^k,      a_10 = q,  a_01 = conj(q),

and the restricted dynamics as

    w' = i w0 w + sum_m g_m w^(m+1) wb^m.

The customary normalization uses ``h_jk = j! k! a_jk`` and
``G_(m+1,m) = (m+1)! m! g_m``, so that ``l_m = Re g_m``:
``l1 = Re G21 / 2``, ``l2 = Re G32 / 12``, ``l3 = Re G43 / 144``,
``l4 = Re G54 / 2880``.

Matching the coefficient of ``w^j wb^k`` in ``H_w w' + H_wb wb' = F(H)`` gives

    ((j-k) i w0 - A) a_jk = N_jk - sum_m a_(j-m,k-m) ((j-m) g_m + (k-m) conj(g_m)),

where ``N_jk`` collects the nonlinear terms of ``F(H)`` built from lower
degrees.  For ``j = k+1`` the ``m = k`` term is ``g_k q`` and the system is
singular; it is solved with the bordered matrix.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .equilibrium import newton
from .errors import OrderError, PreconditionError, ResonanceError, SingularMatrixError
from .linalg import CriticalPair, bordered_solve, critical_pair, eigen_all, inner, solve_complex, track_eigenvalue
from .mlforms import HomogeneousModel, jacobian, taylor_model

MAX_LEVEL = 4
# l_k normalizations: l_k = Re G_(k+1,k) / ((k+1)! k!)
G_FACTOR = {k: math.factorial(k + 1) * math.factorial(k) for k in range(1, MAX_LEVEL + 1)}


class BivariatePolyVec:
    """Truncated vector-valued series in ``(w, wb)``: ``sum c_jk w^j wb^k`` with ``j + k <= degree``."""

    def __init__(self, n, degree, data=None):
        self.n = n
        self.degree = degree
        if data is None:
            data = np.zeros((n, degree + 1, degree + 1), dtype=complex)
        self.data = data
        self._mask()

    def _mask(self):
        D = self.degree
        jj, kk = np.indices((D + 1, D + 1))
        self.data[:, jj + kk > D] = 0.0
        self.data[np.abs(self.data) < 1e-300] = 0.0

    def __getitem__(self, jk):
        j, k = jk
        if j + k > self.degree:
            return np.zeros(self.n, dtype=complex)
        return self.data[:, j, k]

    def __setitem__(self, jk, value):
        j, k = jk
        if j + k > self.degree:
            raise IndexError(f"({j},{k}) exceeds degree {self.degree}")
        self.data[:, j, k] = value

    def items(self):
        for d in range(self.degree + 1):
            for j in range(d, -1, -1):
                v = self.data[:, j, d - j]
                if np.any(v != 0):
                    yield (j, d - j), v

    def truncated(self, degree):
        data = np.zeros((self.n, degree + 1, degree + 1), dtype=complex)
        D = min(degree, self.degree)
        data[:, : D + 1, : D + 1] = self.data[:, : D + 1, : D + 1]
        return BivariatePolyVec(self.n, degree, data)

    def copy(self):
        return BivariatePolyVec(self.n, self.degree, self.data.copy())


def linear_immersion(q, degree):
    q = np.asarray(q, dtype=complex)
    H = BivariatePolyVec(len(q), degree)
    H[1, 0] = q
    H[0, 1] = np.conj(q)
    return H


def _tmul(P, Q, D, mask):
    out = convolve2d(P, Q)[: D + 1, : D + 1]
    out[mask] = 0.0
    return out


def compose_field(model: HomogeneousModel, H: BivariatePolyVec, degree=None) -> BivariatePolyVec:
    """``F(H(w, wb))`` truncated to total degree `degree`."""
    D = H.degree if degree is None else degree
    if np.any(H.data[:, 0, 0] != 0):
        raise ValueError("immersion must not have a constant term")
    if D > H.degree:
        H = H.truncated(D)
    n = model.n
    jj, kk = np.indices((D + 1, D + 1))
    mask = jj + kk > D
    comps = [H.data[v, : D + 1, : D + 1] for v in range(n)]

    out = np.zeros((n, D + 1, D + 1), dtype=complex)
    A = jacobian(model)
    out += np.tensordot(A, np.array(comps), axes=1)

    monos = {}
    unit = [tuple(1 if i == v else 0 for i in range(n)) for v in range(n)]
    for v in range(n):
        monos[unit[v]] = comps[v]

    def mono(alpha):
        m = monos.get(alpha)
        if m is None:
            v = max(i for i, a in enumerate(alpha) if a)
            parent = alpha[:v] + (alpha[v] - 1,) + alpha[v + 1:]
            m = _tmul(mono(parent), comps[v], D, mask)
            monos[alpha] = m
        return m

    for alpha, cvec in model.nonlinear_terms():
        if sum(alpha) > D:
            break
        out += cvec[:, None, None] * mono(alpha)[None, :, :]
    return BivariatePolyVec(n, D, out)


@dataclass
class CenterManifoldTable:
    """Center-manifold coefficients and resonant normal-form coefficients."""

    level: int
    pair: CriticalPair
    H: BivariatePolyVec
    g: dict
    scale: float = 1.0
    solved: list = field(default_factory=list)
    per_jk: dict = field(default_factory=dict)
    bordered: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    master_residual: float = 0.0

    @property
    def omega0(self):
        return self.pair.omega0

    def h(self, j, k):
        """``h_jk`` in the ``1/(j! k!)`` convention."""
        return self.H[j, k] * (math.factorial(j) * math.factorial(k))

    def G(self, k):
        """``G_(k+1,k)``."""
        return self.g[k] * G_FACTOR[k]

    @property
    def Gs(self):
        return {f"{k + 1}{k}": self.G(k) for k in sorted(self.g)}

    def h_table(self):
        return {jk: self.h(*jk) for jk in self.solved}


def _couplings(H, g, j, k, skip_resonant):
    """``sum_m a_(j-m,k-m) ((j-m) g_m + (k-m) conj(g_m))`` over known `g`."""
    total = 0.0
    for m in range(1, min(j, k) + 1):
        if m not in g:
            continue
        if skip_resonant and m == k and j == k + 1:
            continue
        coef = (j - m) * g[m] + (k - m) * np.conj(g[m])
        if coef != 0:
            total = total + H[j - m, k - m] * coef
    return total


def resonance_check(A, omega0, pairs, tol=None):
    """Raise :class:`ResonanceError` if some ``(j-k) i w0`` is (close to) an eigenvalue of `A`."""
    lam = np.linalg.eigvals(A)
    if tol is None:
        tol = 1e-8 * (1.0 + np.linalg.norm(A, np.inf))
    for j, k in pairs:
        sigma = (j - k) * 1j * omega0
        d = np.min(np.abs(lam - sigma))
        if d <= tol:
            raise ResonanceError(
                f"resonance: ({j}-{k}) i w0 = {sigma:.6g} is within {d:.3e} of an eigenvalue of A"
            )


def center_manifold(model: HomogeneousModel, pair: CriticalPair, level: int, *, resonance_tol=None) -> CenterManifoldTable:
    """Solve the homological equation degree by degree up to ``G_(level+1, level)``.

    All h_jk with ``2 <= j + k <= 2 level`` are computed.  At degree
    ``2 level + 1`` the resonant coefficient is obtained by projection and, for
    levels below 4, ``h_(level+1, level)`` as well.
    """
    if not 1 <= level <= MAX_LEVEL:
        raise PreconditionError(f"level must be 1..{MAX_LEVEL}, got {level}")
    top = 2 * level + 1
    if model.max_order < top:
        raise OrderError(f"level {level} needs model order {top}, model has {model.max_order}")
    n = model.n
    A = jacobian(model)
    w0 = pair.omega0
    q, p = pair.q, pair.p

    needed = [(d - k, k) for d in range(2, top) for k in range(0, d // 2 + 1) if d - k != k + 1]
    resonance_check(A, w0, needed, resonance_tol)

    H = linear_immersion(q, top)
    g = {}
    table = CenterManifoldTable(level, pair, H, g, scale=model.scale)
    eye = np.eye(n)

    for d in range(2, top + 1):
        F = compose_field(model, H, d)
        for k in range(d // 2, -1, -1):
            j = d - k
            if j < k:
                continue
            resonant = j == k + 1
            if d == top and not resonant:
                continue
            R = F[j, k] - _couplings(H, g, j, k, skip_resonant=True)
            fac = math.factorial(j) * math.factorial(k)
            if resonant:
                calH = R * fac
                G = inner(p, calH)
                g[k] = G / fac
                if d == top and level == MAX_LEVEL:
                    continue
                rhs = calH - G * q
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    sol = bordered_solve(A, w0, p, q, rhs, scale=float(np.linalg.norm(calH)))
                table.warnings.extend(str(c.message) for c in caught)
                a = sol.h / fac
                table.bordered[(j, k)] = {
                    "s": abs(sol.s),
                    "residual": sol.residual,
                    "orthogonality": abs(inner(p, sol.h)),
                    "rhs_norm": float(np.linalg.norm(rhs)),
                }
            else:
                try:
                    a = solve_complex((j - k) * 1j * w0 * eye - A, R)
                except SingularMatrixError as exc:
                    raise ResonanceError(f"h_{j}{k}: {exc}") from None
            if j == k:
                a = a.real.astype(complex)
            H[j, k] = a
            if j != k:
                H[k, j] = np.conj(a)
            table.solved.append((j, k))

    _master_residual(model, table)
    return table


def homological_residual(model, table):
    """Per-(j,k) norm of ``H_w w' + H_wb wb' - F(H)`` (Taylor convention)."""
    H, g = table.H, table.g
    w0 = table.pair.omega0
    D = H.degree
    F = compose_field(model, H, D)
    out = {}
    for j, k in table.solved:
        for jj, kk in {(j, k), (k, j)}:
            lhs = (jj - kk) * 1j * w0 * H[jj, kk] + _couplings(H, g, jj, kk, skip_resonant=False)
            out[(jj, kk)] = float(np.linalg.norm(lhs - F[jj, kk]))
    if table.level == MAX_LEVEL and MAX_LEVEL in g:
        k = MAX_LEVEL
        j = k + 1
        lhs = _couplings(H, g, j, k, skip_resonant=False)
        out[(j, k)] = abs(inner(table.pair.p, lhs - F[j, k]))
    return out


def _master_residual(model, table):
    table.per_jk = homological_residual(model, table)
    table.master_residual = max(table.per_jk.values(), default=0.0)


@dataclass
class LyapunovSet:
    l: dict
    G: dict
    caveats: list = field(default_factory=list)

    def __getitem__(self, k):
        return self.l[k]


def lyapunov(table: CenterManifoldTable, level=None, threshold=1e-6) -> LyapunovSet:
    """``l_k = Re G_(k+1,k) / ((k+1)! k!)`` for ``k <= level``.

    A caveat is recorded for ``l_k`` whenever some lower ``|l_j|`` exceeds
    ``threshold`` times the coefficient scale: the higher coefficient then has
    no bearing on the local phase portrait.
    """
    if level is None:
        level = table.level
    if level > table.level:
        raise PreconditionError(f"table computed to level {table.level}, {level} requested")
    l = {k: float(table.G(k).real) / G_FACTOR[k] for k in range(1, level + 1)}
    G = {k: table.G(k) for k in range(1, level + 1)}
    caveats = []
    lim = threshold * table.scale
    for k in range(2, level + 1):
        big = [j for j in range(1, k) if abs(l[j]) > lim]
        if big:
            caveats.append(
                f"l{k} reported while |l{big[0]}| = {abs(l[big[0]]):.3e} > {lim:.1e}"
            )
    return LyapunovSet(l, G, caveats)


# -- transversality ----------------------------------------------------------

FD_STEP = 1e-5
RANK_TOL = 1e-6


@dataclass
class TransversalityResult:
    """Jacobian of ``mu -> (eta, l1, .., l_(level-1))`` at ``mu0``; rows in that order."""

    rows: list
    parameters: list
    jacobian: np.ndarray
    singular_values: np.ndarray
    ratio: float
    full_rank: bool
    omega0: float
    steps: list


def tracked_coefficients(spec, x, mu, target, level):
    """``(eigenvalue, [l1 .. l_level])`` at a possibly off-critical point.

    The pair is built around the eigenvalue of ``A(mu)`` nearest `target`;
    its real part is the crossing parameter eta.
    """
    model = taylor_model(spec, x, mu, max_order=max(1, 2 * level + 1))
    lam = track_eigenvalue(jacobian(model), target)
    if level == 0:
        return lam, []
    pair = critical_pair(jacobian(model), eigenvalue=lam)
    table = center_manifold(model, pair, level)
    return lam, [lyapunov(table).l[k] for k in range(1, level + 1)]


def transversality(spec, equilibrium, mu0, level, *, refine=True, step=FD_STEP, rank_tol=RANK_TOL):
    """Finite-difference regularity check of ``mu -> (eta, l1, .., l_(level-1))``.

    At every perturbed parameter the equilibrium is continued by Newton from
    the one at `mu0` (when `refine`); eta is the real part of the eigenvalue
    nearest ``i w0(mu0)``.  Central differences use the step
    ``step * (1 + |mu_i|)``; the map is regular iff
    ``sigma_min / sigma_max > rank_tol``.
    """
    if not 1 <= level <= MAX_LEVEL:
        raise PreconditionError(f"level must be 1..{MAX_LEVEL}, got {level}")
    m = spec.m
    if m < level:
        raise PreconditionError(f"transversality at level {level} needs at least {level} parameters, model has {m}")
    mu0 = np.array(mu0, dtype=float)
    x0 = np.array(equilibrium, dtype=float)
    if refine:
        x0, _ = newton(spec, x0, mu0)
    model = taylor_model(spec, x0, mu0, max_order=1)
    A = jacobian(model)
    pair = critical_pair(A, eigen_all(A))
    target = 1j * pair.omega0
    sub = level - 1

    def point(mu):
        x = newton(spec, x0, mu)[0] if refine else x0
        lam, ls = tracked_coefficients(spec, x, mu, target, sub)
        return np.array([lam.real] + ls)

    J = np.zeros((level, m))
    steps = []
    for i in range(m):
        h = step * (1.0 + abs(mu0[i]))
        up, dn = mu0.copy(), mu0.copy()
        up[i] += h
        dn[i] -= h
        J[:, i] = (point(up) - point(dn)) / (2 * h)
        steps.append(h)
    sv = np.linalg.svd(J, compute_uv=False)
    ratio = float(sv.min() / sv.max()) if sv.max() > 0 else 0.0
    rows = ["eta"] + [f"l{k}" for k in range(1, level)]
    return TransversalityResult(rows, list(spec.parameters), J, sv, ratio, ratio > rank_tol, pair.omega0, steps)
