"""Newton refinement of equilibria with the symbolic Jacobian."""
from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import NewtonError
from .expr import VectorFieldSpec, evaluate

MAX_ITER = 50


def _jacobian(jac_exprs, x, mu):
    return np.array([[evaluate(e, x, mu) for e in row] for row in jac_exprs])


def newton(spec: VectorFieldSpec, guess, parameters=(), tol=1e-12, maxiter=MAX_ITER, jac_exprs=None):
    """Solve ``f(x, mu) = 0`` from `guess`.

    Converged when ``|f|_inf <= tol * (1 + |J|_inf)``.  Returns ``(x, history)``
    where history lists the residual norm before each step.
    """
    x = np.array(guess, dtype=float)
    mu = [float(v) for v in parameters]
    if jac_exprs is None:
        jac_exprs = spec.jacobian_exprs()
    history = []
    for _ in range(maxiter + 1):
        f = np.array(spec.rhs(x, mu))
        J = _jacobian(jac_exprs, x, mu)
        res = float(np.max(np.abs(f)))
        history.append(res)
        if not np.isfinite(res):
            raise NewtonError("Newton iteration produced a non-finite residual", history)
        if res <= tol * (1.0 + np.linalg.norm(J, np.inf)):
            return x, history
        if len(history) > maxiter:
            break
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(J, check_finite=False)
        pivot = np.min(np.abs(np.diag(lu)))
        if pivot <= 1e-14 * max(np.linalg.norm(J, np.inf), 1e-300):
            raise NewtonError(f"singular Jacobian at iterate {x.tolist()}", history)
        x = x - scipy.linalg.lu_solve((lu, piv), f)
    raise NewtonError(f"Newton did not converge in {maxiter} iterations", history)
