"""Dense complex linear algebra around the critical eigenpair."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    EigenvalueError,
    ExtraCriticalEigenvalueError,
    NoCriticalPairError,
    SingularMatrixError,
    TrackingError,
)

CRITICAL = "critical-pair"
ZERO_OTHER = "zero-real-part-other"
STABLE = "stable"
UNSTABLE = "unstable"

# |q|_2 = 1/sqrt(2): in the plane of a rotation-like pair x = wq + conj(wq) has |x| = |w|
Q_NORM = 1.0 / math.sqrt(2.0)


class CompatibilityWarning(UserWarning):
    """Right side of a bordered system is not orthogonal to the adjoint vector."""


def purity_tolerance(A, rel=1e-8):
    return rel * (1.0 + np.linalg.norm(A, np.inf))


def solve_complex(M, b):
    """Solve ``M x = b`` by LU with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot is below ``1e-14 |M|``.
    """
    M = np.asarray(M, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    norm = np.linalg.norm(M, np.inf)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    pivot = np.min(np.abs(np.diag(lu))) if M.shape[0] else 1.0
    if pivot <= 1e-14 * norm or norm == 0.0:
        raise SingularMatrixError(f"pivot {pivot:.3e} below 1e-14 * |M| = {1e-14 * norm:.3e}")
    return scipy.linalg.lu_solve((lu, piv), b)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    classes: tuple
    tol: float

    def __iter__(self):
        return iter(zip(self.eigenvalues, self.classes))

    @property
    def critical(self):
        """Eigenvalue with positive imaginary part of the critical pair, or None."""
        for lam, c in self:
            if c == CRITICAL and lam.imag > 0:
                return lam
        return None


def eigen_all(A, tol=None) -> Spectrum:
    """All eigenvalues of the real matrix `A`, sorted and classified.

    Order: descending real part, then descending imaginary part.  An eigenvalue
    counts as having zero real part when ``|Re| <= tol`` (default
    ``1e-8 (1 + |A|_inf)``).  The first such conjugate pair with nonzero
    frequency is the critical pair; every other zero-real-part eigenvalue is
    flagged ``zero-real-part-other``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
        raise ValueError("eigen_all needs a square matrix of size >= 2")
    if tol is None:
        tol = purity_tolerance(A)
    try:
        lam = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueError(f"QR iteration failed (|A| = {np.linalg.norm(A):.3e}): {exc}") from None
    lam = np.asarray(lam, dtype=complex)
    order = sorted(range(len(lam)), key=lambda k: (-lam[k].real, -lam[k].imag))
    lam = lam[order]

    zero = [k for k in range(len(lam)) if abs(lam[k].real) <= tol]
    pair = set()
    for k in zero:
        if lam[k].imag > tol:
            mate = min((j for j in zero if j != k), key=lambda j: abs(lam[j] - np.conj(lam[k])), default=None)
            if mate is not None and abs(lam[mate] - np.conj(lam[k])) <= tol:
                pair = {k, mate}
            break
    classes = []
    for k, z in enumerate(lam):
        if k in pair:
            classes.append(CRITICAL)
        elif k in zero:
            classes.append(ZERO_OTHER)
        elif z.real < 0:
            classes.append(STABLE)
        else:
            classes.append(UNSTABLE)
    return Spectrum(lam, tuple(classes), float(tol))


@dataclass(frozen=True)
class CriticalPair:
    """``A q = i w0 q``, ``A^T p = -i w0 p``, ``<p, q> = 1``.

    ``eigenvalue`` is the computed eigenvalue the pair was built from; its real
    part is zero to within the purity tolerance at a Hopf point and equals the
    crossing speed parameter away from it.
    """

    omega0: float
    q: np.ndarray
    p: np.ndarray
    eigenvalue: complex = 0j

    def regauged(self, gamma):
        """Same pair with ``q -> gamma q`` and ``p -> p / conj(gamma)``."""
        gamma = complex(gamma)
        return CriticalPair(self.omega0, self.q * gamma, self.p / np.conj(gamma), self.eigenvalue)


def inner(p, y):
    """``<p, y> = sum conj(p_i) y_i``."""
    return complex(np.vdot(p, y))


def _inverse_iteration(M, shift, iters=4):
    n = M.shape[0]
    B = M - shift * np.eye(n)
    norm = np.linalg.norm(B, np.inf) + abs(shift) + 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(B)
    d = np.abs(np.diag(lu))
    if np.min(d) == 0.0:
        # exact eigenvalue as shift: perturb so the factorization is usable
        B = B - 1e-14 * norm * np.eye(n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(B)
    x = np.ones(n, dtype=complex) + 0.37j * np.arange(1, n + 1) / n
    x /= np.linalg.norm(x)
    for _ in range(iters):
        y = scipy.linalg.lu_solve((lu, piv), x)
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise EigenvalueError("inverse iteration broke down")
        x = y / nrm
    return x


def fix_gauge(q):
    """Scale to ``|q|_2 = 1/sqrt(2)`` with the leading largest component real positive."""
    q = np.asarray(q, dtype=complex)
    q = q / np.linalg.norm(q) * Q_NORM
    mags = np.abs(q)
    k = int(np.argmax(mags >= (1.0 - 1e-9) * mags.max()))
    q = q * (np.conj(q[k]) / abs(q[k]))
    q[k] = abs(q[k])
    return q


def critical_pair(A, spectrum=None, eigenvalue=None) -> CriticalPair:
    """Normalized eigenvectors of the critical pair of `A`.

    With `eigenvalue` given the pair is built around that eigenvalue (used away
    from the Hopf point, where no eigenvalue is exactly imaginary); otherwise
    the spectrum must contain exactly one critical pair and nothing else on the
    imaginary axis.
    """
    A = np.asarray(A, dtype=float)
    if eigenvalue is None:
        if spectrum is None:
            spectrum = eigen_all(A)
        others = [lam for lam, c in spectrum if c == ZERO_OTHER]
        lam = spectrum.critical
        if lam is None:
            if others:
                raise NoCriticalPairError(
                    "no purely imaginary pair with nonzero frequency; zero-real-part eigenvalues: "
                    + ", ".join(f"{z:.6g}" for z in others)
                )
            raise NoCriticalPairError("no eigenvalue pair on the imaginary axis")
        if others:
            raise ExtraCriticalEigenvalueError(
                "other eigenvalues with zero real part besides the critical pair: "
                + ", ".join(f"{z:.6g}" for z in others)
            )
        shift = 1j * lam.imag
    else:
        lam = complex(eigenvalue)
        if lam.imag <= 0:
            raise NoCriticalPairError("tracked eigenvalue must have positive imaginary part")
        shift = lam
    omega0 = float(lam.imag)

    q = fix_gauge(_inverse_iteration(A.astype(complex), shift))
    p = _inverse_iteration(A.T.astype(complex), np.conj(shift))
    p = p / np.conj(inner(p, q))
    return CriticalPair(omega0, q, p, complex(lam))


def track_eigenvalue(A, target, ambiguity=1.1):
    """Eigenvalue of `A` nearest to `target` (a complex number with positive imaginary part).

    Raises :class:`TrackingError` if a second candidate lies within 10% of the
    nearest distance, or if the nearest eigenvalue is real.
    """
    lam = np.linalg.eigvals(np.asarray(A, dtype=float))
    dist = np.abs(lam - target)
    order = np.argsort(dist, kind="stable")
    best = lam[order[0]]
    if best.imag <= 0:
        raise TrackingError(f"eigenvalue nearest to {target:.6g} is {best:.6g}, not part of a complex pair")
    if len(lam) > 1:
        d0, d1 = dist[order[0]], dist[order[1]]
        if d1 <= ambiguity * d0 and d0 > 0:
            raise TrackingError(
                f"ambiguous eigenvalue tracking near {target:.6g}: {best:.6g} and {lam[order[1]]:.6g}"
            )
    return complex(best)


@dataclass
class BorderedSolution:
    h: np.ndarray
    s: complex
    defect: float = 0.0
    residual: float = 0.0
    rhs_norm: float = 0.0
    warnings: list = field(default_factory=list)


def bordered_matrix(A, omega0, p, q):
    n = A.shape[0]
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[:n, :n] = 1j * omega0 * np.eye(n) - A
    M[:n, n] = q
    M[n, :n] = np.conj(p)
    return M


def bordered_solve(A, omega0, p, q, rhs, scale=None) -> BorderedSolution:
    """Solve ``[[i w0 I - A, q], [p^H, 0]] (h, s) = (rhs, 0)``.

    When ``<p, rhs> = 0`` the returned ``h`` solves the singular system
    ``(i w0 I - A) h = rhs`` with ``<p, h> = 0`` and ``s`` vanishes; in general
    ``s = <p, rhs>``.  A defect above ``1e-8 * max(|rhs|, scale)`` triggers a
    :class:`CompatibilityWarning`; `scale` is the size of the quantity `rhs`
    was projected from, so that a right side that is pure roundoff passes.
    """
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=complex)
    n = A.shape[0]
    M = bordered_matrix(A, omega0, p, q)
    try:
        sol = solve_complex(M, np.append(rhs, 0.0))
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"bordered matrix is singular, critical pair invalid: {exc}") from None
    h, s = sol[:n], complex(sol[n])
    out = BorderedSolution(h, s)
    rnorm = float(np.linalg.norm(rhs))
    out.rhs_norm = rnorm
    out.defect = abs(inner(p, rhs))
    out.residual = float(np.linalg.norm((1j * omega0 * np.eye(n) - A) @ h - rhs))
    if out.defect > 1e-8 * max(rnorm, scale or 0.0):
        msg = f"bordered right side not orthogonal to p: |<p, rhs>| = {out.defect:.3e}"
        out.warnings.append(msg)
        warnings.warn(msg, CompatibilityWarning, stacklevel=2)
    return out
