import itertools
import math

import numpy as np
import pytest

from lyapcoef.errors import EquilibriumResidualError, OrderError
from lyapcoef.expr import VectorFieldSpec
from lyapcoef.mlforms import apply_form, jacobian, taylor_model

from support import names, polynomial_spec, random_model


def _homogeneous_part(model, r, x):
    out = np.zeros(model.n, dtype=complex)
    for i, comp in enumerate(model.coeffs):
        for a, c in comp.items():
            if sum(a) == r:
                out[i] += c * np.prod(np.asarray(x) ** np.array(a))
    return out


def _cvec(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


@pytest.mark.parametrize("r", range(2, 8))
def test_diagonal_form_is_factorial_times_homogeneous_part(r):
    # F_r(x) = sum c_alpha x^alpha, so the symmetric form at (x, .., x) is r! F_r(x)
    rng = np.random.default_rng(r)
    model = random_model(rng, 3, 7)
    x = _cvec(rng, 3)
    assert np.allclose(apply_form(model, r, *([x] * r)), math.factorial(r) * _homogeneous_part(model, r, x),
                       rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("r", [2, 3, 5])
def test_forms_are_symmetric_multilinear_and_real(r):
    rng = np.random.default_rng(10 + r)
    model = random_model(rng, 3, 5)
    args = [_cvec(rng, 3) for _ in range(r)]
    base = apply_form(model, r, *args)
    for perm in list(itertools.permutations(range(r)))[:12]:
        assert np.allclose(apply_form(model, r, *[args[k] for k in perm]), base, rtol=1e-13, atol=1e-13)
    a, b = complex(0.3, -1.1), complex(-2.0, 0.5)
    y = _cvec(rng, 3)
    lhs = apply_form(model, r, a * args[0] + b * y, *args[1:])
    rhs = a * base + b * apply_form(model, r, y, *args[1:])
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
    assert np.allclose(apply_form(model, r, *[np.conj(v) for v in args]), np.conj(base), rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("r", [2, 4, 6, 9])
def test_dense_and_sparse_contractions_agree(r):
    rng = np.random.default_rng(20 + r)
    model = random_model(rng, 3, 9, density=0.4)
    args = [_cvec(rng, 3) for _ in range(r)]
    d = apply_form(model, r, *args, method="dense")
    s = apply_form(model, r, *args, method="sparse")
    assert np.allclose(d, s, rtol=1e-11, atol=1e-11 * np.linalg.norm(d))


def test_forms_match_finite_differences_of_the_field():
    spec = VectorFieldSpec.from_strings(
        ["x", "y", "z"],
        ["-y + x*sin(z) + exp(x*y) - 1", "x + y*cos(x + z) - y", "-z + log(1 + x^2) + x*y*z"],
    )
    x0 = np.zeros(3)
    model = taylor_model(spec, x0, max_order=3)
    rng = np.random.default_rng(3)
    u, v = rng.normal(size=3), rng.normal(size=3)
    h = 1e-4

    def f(x):
        return np.array(spec.rhs(x))

    # d^2/ds dt f(x0 + s u + t v) at 0
    fd = (f(h * u + h * v) - f(h * u - h * v) - f(-h * u + h * v) + f(-h * u - h * v)) / (4 * h * h)
    assert np.allclose(apply_form(model, 2, u, v).real, fd, atol=1e-6)
    fd1 = (f(h * u) - f(-h * u)) / (2 * h)
    assert np.allclose(jacobian(model) @ u, fd1, atol=1e-7)
    # third directional derivative along u
    t = 1e-3
    fd3 = (f(2 * t * u) - 2 * f(t * u) + 2 * f(-t * u) - f(-2 * t * u)) / (2 * t ** 3)
    assert np.allclose(apply_form(model, 3, u, u, u).real, fd3, atol=1e-4)


def test_polynomial_round_trip_is_exact():
    rng = np.random.default_rng(4)
    model = random_model(rng, 3, 5)
    again = taylor_model(polynomial_spec(model), [0, 0, 0], max_order=5)
    for a, b in zip(model.coeffs, again.coeffs):
        assert set(a) == set(b)
        for k in a:
            assert b[k] == pytest.approx(a[k], rel=1e-13, abs=1e-14)


def test_series_is_exact_for_shifted_polynomial():
    # (x + 1)^5 expanded at x = -1 is x^5; all lower coefficients vanish
    spec = VectorFieldSpec.from_strings(["x", "y"], ["(x + 1)^5 - y", "x + 1"])
    m = taylor_model(spec, [-1.0, 0.0], max_order=6)
    assert m.coeffs[0] == {(5, 0): 1.0, (0, 1): -1.0}


def test_series_and_symbolic_agree_at_high_order():
    spec = VectorFieldSpec.from_strings(
        names(3),
        ["-x2 + x1*exp(x3)/(2 + x2)", "x1 + sin(x1*x2) - x2", "-x3 + sqrt(4 + x1)*x2^2 - 2*x2^2"],
    )
    s = taylor_model(spec, [0, 0, 0], max_order=6)
    t = taylor_model(spec, [0, 0, 0], max_order=6, method="symbolic")
    for cs, ct in zip(s.coeffs, t.coeffs):
        for k in set(cs) | set(ct):
            assert cs.get(k, 0.0) == pytest.approx(ct.get(k, 0.0), rel=1e-9, abs=1e-12)


def test_taylor_polynomial_approximates_field_with_expected_order():
    spec = VectorFieldSpec.from_strings(["x", "y"], ["-y + sin(x)*exp(y) - x", "x + log(1 + y) - y"])
    m = taylor_model(spec, [0, 0], max_order=5)
    d = np.array([0.6, -0.8])
    errs = []
    for t in (0.1, 0.05):
        errs.append(np.linalg.norm(m(t * d) - np.array(spec.rhs(t * d))))
    # remainder is O(t^6)
    assert errs[1] <= errs[0] / 2 ** 5.5


def test_non_equilibrium_is_rejected():
    spec = VectorFieldSpec.from_strings(["x", "y"], ["-y + 1e-3", "x"])
    with pytest.raises(EquilibriumResidualError):
        taylor_model(spec, [0, 0])


def test_order_limits():
    rng = np.random.default_rng(5)
    model = random_model(rng, 2, 3)
    with pytest.raises(OrderError):
        apply_form(model, 4, *([np.ones(2)] * 4))
    spec = VectorFieldSpec.from_strings(["x", "y"], ["-y", "x"])
    with pytest.raises(OrderError):
        taylor_model(spec, [0, 0], max_order=10)
