"""Generators shared by the test modules."""
import numpy as np

from lyapcoef.expr import VectorFieldSpec
from lyapcoef.mlforms import HomogeneousModel, all_multi_indices
from lyapcoef.paper_formulas import normal_form_system
from lyapcoef.problem import ProblemSpec


def hopf_matrix(rng, n, omega=None):
    """Random real n x n matrix with eigenvalues +-i omega and the rest off the imaginary axis."""
    omega = rng.uniform(0.5, 2.0) if omega is None else omega
    D = np.zeros((n, n))
    D[0, 1], D[1, 0] = -omega, omega
    i = 2
    while i < n:
        if i + 1 < n and rng.random() < 0.5:
            a, b = -rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0)
            D[i:i + 2, i:i + 2] = [[a, -b], [b, a]]
            i += 2
        else:
            D[i, i] = rng.choice([-1, 1]) * rng.uniform(0.5, 3.0)
            i += 1
    while True:
        T = rng.normal(size=(n, n))
        if np.linalg.cond(T) < 50:
            return T @ D @ np.linalg.inv(T), omega


def random_model(rng, n, order, scale=0.5, density=1.0, A=None):
    """HomogeneousModel with a Hopf Jacobian and random coefficients of orders 2..order."""
    if A is None:
        A, _ = hopf_matrix(rng, n)
    coeffs = [{} for _ in range(n)]
    for i in range(n):
        for j in range(n):
            coeffs[i][tuple(int(k == j) for k in range(n))] = A[i, j]
        for a in all_multi_indices(n, order, 2):
            if rng.random() < density:
                coeffs[i][a] = rng.normal() * scale
    return HomogeneousModel.from_coefficients(n, coeffs, order)


def names(n):
    return [f"x{i + 1}" for i in range(n)]


def linear_spec(A):
    n = A.shape[0]
    xs = names(n)
    eqs = [" + ".join(f"({float(A[i, j])!r})*{xs[j]}" for j in range(n)) for i in range(n)]
    return VectorFieldSpec.from_strings(xs, eqs)


def polynomial_spec(model):
    """Spec whose Taylor data at the origin is exactly `model`."""
    xs = names(model.n)
    eqs = []
    for comp in model.coeffs:
        terms = []
        for a, c in sorted(comp.items()):
            mono = "*".join(f"{xs[j]}^{e}" if e > 1 else xs[j] for j, e in enumerate(a) if e)
            terms.append(f"({float(c)!r})*{mono}")
        eqs.append(" + ".join(terms) if terms else "0")
    return VectorFieldSpec.from_strings(xs, eqs)


def push_forward(spec, T):
    """Spec of ``y' = T f(T^-1 y)`` for the sources of `spec`."""
    n = spec.n
    Tinv = np.linalg.inv(T)
    ys = [f"y{i + 1}" for i in range(n)]
    subs = ["(" + " + ".join(f"({float(Tinv[i, j])!r})*{ys[j]}" for j in range(n)) + ")" for i in range(n)]
    comps = []
    for src in spec.sources:
        # substitute whole identifiers; the normal-form sources use x, y, z
        out = []
        for tok in _tokens(src):
            out.append(subs[spec.variables.index(tok)] if tok in spec.variables else tok)
        comps.append("(" + "".join(out) + ")")
    eqs = [" + ".join(f"({float(T[i, j])!r})*{comps[j]}" for j in range(n)) for i in range(n)]
    return VectorFieldSpec.from_strings(ys, eqs, spec.parameters)


def _tokens(src):
    import re
    return re.findall(r"[A-Za-z_]\w*|[^A-Za-z_]+", src)


def embed3(spec):
    """Planar spec extended by ``z' = -z``."""
    return VectorFieldSpec.from_strings(list(spec.variables) + ["z"], list(spec.sources) + ["-z"], spec.parameters)


def problem(spec, level, values=None, mu=()):
    values = tuple([0.0] * spec.n) if values is None else tuple(values)
    return ProblemSpec(spec, tuple(mu), level, values=values)


def nf_problem(c, level, omega0=1.0):
    return problem(normal_form_system(omega0, c), level)


def lower_imaginary(rng, level):
    """c_1..c_level with c_1..c_(level-1) purely imaginary, c_level generic."""
    c = [complex(0, rng.uniform(-2, 2)) for _ in range(level - 1)]
    c.append(complex(rng.uniform(-2, 2), rng.uniform(-2, 2)))
    return c
