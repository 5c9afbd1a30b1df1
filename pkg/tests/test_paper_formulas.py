import numpy as np
import pytest

from lyapcoef.errors import PreconditionError
from lyapcoef.hopf import center_manifold
from lyapcoef.linalg import critical_pair
from lyapcoef.mlforms import jacobian, taylor_model
from lyapcoef.paper_formulas import (
    DEFINED, ERRATA, TERMS, collect_terms, engine_h54_restricted, expected_terms, h54_partial,
    normal_form_system, paper_table, planar_oracle, term_list,
)

from support import random_model


def _jk(name):
    return int(name[1]), int(name[2])


@pytest.mark.parametrize("name", sorted(TERMS))
def test_corrected_term_lists_equal_exact_expansion(name):
    assert collect_terms(term_list(name)) == expected_terms(*_jk(name))


@pytest.mark.parametrize("name", sorted(TERMS))
def test_literal_lists_differ_only_where_corrected(name):
    literal = collect_terms(term_list(name, literal=True)) == expected_terms(*_jk(name))
    assert literal == (name not in ERRATA)


def test_expected_terms_small_cases():
    # degree (2, 1): C(q,q,qb) + B(qb,h20) + 2 B(q,h11)
    assert expected_terms(2, 1) == {
        ("C", ("q", "q", "qb")): 1,
        ("B", ("h20", "qb")): 1,
        ("B", ("h11", "q")): 2,
    }
    assert expected_terms(3, 0) == {("C", ("q", "q", "q")): 1, ("B", ("h20", "q")): 3}


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_closed_form_chain_matches_engine(seed):
    rng = np.random.default_rng(300 + seed)
    model = random_model(rng, 3, 7)
    pair = critical_pair(jacobian(model))
    table = center_manifold(model, pair, 3)
    pc = paper_table(model, pair)
    for name in DEFINED:
        assert _rel(pc[name], table.h(*_jk("h" + name))) <= 1e-9, name
    for k in (1, 2, 3):
        assert abs(pc[f"G{k + 1}{k}"] - table.G(k)) <= 1e-9 * abs(table.G(k))


def test_literal_chain_is_exact_when_first_coefficient_vanishes_up_to_h22():
    # c1 imaginary: l1 = 0, so the dropped G21 term in h22 is zero; h33 still lacks a term
    spec = normal_form_system(1.0, [0.7j, complex(0.3, 0.2), complex(-0.4, 0.5)])
    model = taylor_model(spec, [0, 0], max_order=7)
    pair = critical_pair(jacobian(model))
    fixed = paper_table(model, pair)
    literal = paper_table(model, pair, literal=True)
    assert np.allclose(literal["22"], fixed["22"], atol=1e-14)
    rng = np.random.default_rng(5)
    generic = random_model(rng, 3, 7)
    gp = critical_pair(jacobian(generic))
    a, b = paper_table(generic, gp), paper_table(generic, gp, literal=True)
    assert _rel(b["22"], a["22"]) > 1e-6
    assert _rel(b["33"], a["33"]) > 1e-6


def test_h54_partial_matches_restricted_engine():
    rng = np.random.default_rng(6)
    model = random_model(rng, 3, 9)
    pair = critical_pair(jacobian(model))
    table = center_manifold(model, pair, 4)
    part = h54_partial(model, paper_table(model.restrict_order(7), pair), pair)
    assert not part.inconsistent
    assert part.undefined
    want = engine_h54_restricted(model, table)
    assert np.linalg.norm(part.value - want) <= 1e-9 * np.linalg.norm(want)


def test_literal_h54_flags_inconsistent_terms():
    rng = np.random.default_rng(7)
    model = random_model(rng, 2, 9)
    pair = critical_pair(jacobian(model))
    part = h54_partial(model, paper_table(model.restrict_order(7), pair), pair, literal=True)
    bad = {str(t[2]) for t in part.inconsistent}
    assert len(part.inconsistent) == 3
    assert any("hb1" in s for s in bad)


@pytest.mark.parametrize("seed", range(4))
def test_planar_oracle_matches_engine(seed):
    rng = np.random.default_rng(400 + seed)
    model = random_model(rng, 2, 9)
    pair = critical_pair(jacobian(model))
    table = center_manifold(model, pair, 4)
    g = planar_oracle(model, pair)
    assert sorted(g) == [1, 2, 3, 4]
    for k in g:
        assert abs(g[k] - table.G(k)) <= 1e-9 * abs(table.G(k))


def test_planar_oracle_rejects_higher_dimension():
    rng = np.random.default_rng(8)
    model = random_model(rng, 3, 3)
    with pytest.raises(PreconditionError):
        planar_oracle(model, critical_pair(jacobian(model)))


def test_chain_needs_order_seven():
    rng = np.random.default_rng(9)
    model = random_model(rng, 2, 5)
    with pytest.raises(PreconditionError):
        paper_table(model, critical_pair(jacobian(model)))


def test_normal_form_system_with_parameter_expressions():
    spec = normal_form_system(2.0, [("a - 1", 0.5)], eta="b", parameters=("a", "b"))
    assert spec.parameters == ("a", "b")
    # w' = (b + 2i) w + (a - 1 + 0.5 i) w |w|^2 at w = 1 (x = 1, y = 0)
    fx, fy = spec.rhs([1.0, 0.0], [3.0, 0.25])
    assert (fx, fy) == pytest.approx((0.25 + 2.0, 2.0 + 0.5))
