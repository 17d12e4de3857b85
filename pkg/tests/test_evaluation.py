import random

import pytest

from plcore.evaluation import EvaluationError, holds, holds_tuple, solutions, tarski_solutions
from plcore.formula import FormulaPool, Var, parse_positive
from plcore.hom import find_hom

from conftest import EDGE_SIG


def test_u3_point_in_p0(u3):
    assert holds(u3, parse_positive("P0(x)", u3.signature), {"x": 0})


def test_u3_no_overlap(u3):
    assert not holds(u3, parse_positive("exists x. P0(x) & P1(x)", u3.signature))


def test_edge_has_no_midpoint(edge):
    phi = parse_positive("exists z. E(x,z) & E(z,y)", EDGE_SIG)
    assert not holds(edge, phi, {"x": 0, "y": 1})


def test_solutions_of_p1(u3):
    assert solutions(u3, parse_positive("P1(x)", u3.signature)) == [(1,)]


def test_solutions_of_reflexive_equality(d2):
    assert solutions(d2, parse_positive("x=x", d2.signature)) == [(0,), (1,), (2,), (3,)]


def test_solutions_out_degree(edge):
    assert solutions(edge, parse_positive("exists y. E(x,y)", EDGE_SIG)) == [(0,)]


def test_missing_free_variable_rejected(edge):
    phi = parse_positive("E(x,y)", EDGE_SIG)
    with pytest.raises(EvaluationError):
        holds_tuple(edge, phi, (0,), (Var("x", "s"),))
    with pytest.raises(EvaluationError):
        holds_tuple(edge, phi, (0, 7))


def test_pool_formulas_agree_with_tarski(tiny_digraphs):
    pool = FormulaPool(EDGE_SIG, 1, 2, 2)
    for m in tiny_digraphs:
        for pp in pool:
            assert solutions(m, pp) == tarski_solutions(m, pp)


def test_disjunctions_agree_with_tarski(small_digraphs):
    texts = [
        "exists y. (E(x,y) | E(y,x))",
        "E(x,y) | (exists z. E(x,z) & E(z,y))",
        "(E(x,x) | x=y) & E(y,y)",
    ]
    for text in texts:
        phi = parse_positive(text, EDGE_SIG)
        for m in small_digraphs:
            assert solutions(m, phi) == tarski_solutions(m, phi)


def test_positive_formulas_go_up_along_homomorphisms(small_digraphs):
    rng = random.Random(7)
    pool = list(FormulaPool(EDGE_SIG, 1, 2, 2).formulas(("s", "s")))
    for _ in range(60):
        m = rng.choice(small_digraphs)
        n = rng.choice(small_digraphs)
        homs = find_hom(m, n, mode="all", limit=5)
        for h in homs:
            for pp in rng.sample(pool, 8):
                for t in solutions(m, pp):
                    img = tuple(h("s", e) for e in t)
                    assert holds_tuple(n, pp, img, pp.vars_free)
