import pytest

from plcore.evaluation import solution_set, tarski_solutions
from plcore.formula import (
    And,
    Atom,
    Exists,
    FormulaError,
    FormulaPool,
    HuSentence,
    NormalFormTooLarge,
    Or,
    free_vars,
    parse,
    parse_hu,
    parse_pool_budget,
    parse_positive,
    pp_normal_form,
    to_text,
)
from plcore.structure import Signature

from conftest import EDGE_SIG

ABC = Signature.single({"A": 1, "B": 1, "C": 1})


def test_parse_atom():
    phi = parse("E(x,y)", EDGE_SIG)
    assert isinstance(phi, Atom)
    assert [v.name for v in phi.args] == ["x", "y"]


def test_parse_exists_conjunction():
    phi = parse("exists y. E(x,y) & E(y,x)", EDGE_SIG)
    assert isinstance(phi, Exists)
    assert [v.name for v in phi.vars] == ["y"]
    assert isinstance(phi.body, And)
    assert [v.name for v in free_vars(phi)] == ["x"]


def test_parse_hu_sentence(t3):
    s = parse_hu("forall x. ~(P0(x) & P1(x))", t3.signature)
    assert isinstance(s, HuSentence)
    pps = pp_normal_form(s.forbidden(), ())
    assert len(pps) == 1
    assert len(pps[0].atoms) == 2


def test_parse_errors_carry_position():
    with pytest.raises(FormulaError) as exc:
        parse("E(x,", EDGE_SIG)
    assert exc.value.pos is not None
    with pytest.raises(FormulaError):
        parse("F(x)", EDGE_SIG)
    with pytest.raises(FormulaError):
        parse("E(x)", EDGE_SIG)
    with pytest.raises(FormulaError):
        parse_positive("forall x. ~(E(x,x))", EDGE_SIG)
    with pytest.raises(FormulaError):
        parse_hu("forall x. ~(E(x,y))", EDGE_SIG)


def test_sort_inference_rejects_mixed_sorts():
    sig = Signature(("a", "b"), (("P", ("a",)), ("Q", ("b",))))
    with pytest.raises(FormulaError):
        parse("P(x) & Q(x)", sig)


def test_print_parse_round_trip():
    for text in [
        "E(x,y)",
        "exists y. E(x,y) & E(y,x)",
        "(E(x,y) | E(y,x)) & E(x,x)",
        "true",
        "false",
        "x=y",
        "exists y z. E(x,y) & (E(y,z) | z=x)",
    ]:
        phi = parse(text, EDGE_SIG)
        assert parse(to_text(phi), EDGE_SIG) == phi


def test_normal_form_of_pp_is_singleton():
    phi = parse("exists y. E(x,y) & E(y,x)", EDGE_SIG)
    assert len(pp_normal_form(phi)) == 1


def test_normal_form_distributes():
    phi = parse("(A(x) | B(x)) & C(x)", ABC)
    got = sorted(str(p) for p in pp_normal_form(phi))
    assert got == ["A(x) & C(x)", "B(x) & C(x)"]


def test_normal_form_pushes_disjunction_out_of_exists(small_digraphs):
    phi = parse("exists y. (E(x,y) | E(y,x))", EDGE_SIG)
    pps = pp_normal_form(phi)
    assert sorted(str(p) for p in pps) == ["exists y0. E(x,y0)", "exists y0. E(y0,x)"]
    for m in small_digraphs:
        union = set()
        for p in pps:
            union |= solution_set(m, p, free_vars(phi))
        assert union == set(tarski_solutions(m, phi))


def test_normal_form_cap():
    parts = " & ".join("(E(x,y) | E(y,x))" for _ in range(13))
    with pytest.raises(NormalFormTooLarge):
        pp_normal_form(parse(parts, EDGE_SIG), cap=4096)


def test_pool_budget_parsing():
    assert parse_pool_budget("atoms:2,bvars:1") == {"atoms": 2, "bvars": 1}
    with pytest.raises(FormulaError):
        parse_pool_budget("depth:3")
    with pytest.raises(FormulaError):
        parse_pool_budget("atoms:x")


def test_pool_listing_is_stable():
    a = [(len(p.vars_free), str(p)) for p in FormulaPool(EDGE_SIG, 1, 2, 2)]
    b = [(len(p.vars_free), str(p)) for p in FormulaPool(EDGE_SIG, 1, 2, 2)]
    assert a == b
    assert len(a) == len(set(a))


def test_pool_uses_every_bound_variable():
    for pp in FormulaPool(EDGE_SIG, 2, 2, 1):
        used = {v for a in pp.atoms for v in a.vars()}
        assert set(pp.vars_bound) <= used


def test_pool_small_listing():
    pool = FormulaPool(Signature.single({"P": 1}), 0, 1, 1)
    assert [str(p) for p in pool.formulas(("s",))] == ["x0=x0", "P(x0)"]


def test_or_printing_inside_and():
    phi = And((Or((parse("A(x)", ABC), parse("B(x)", ABC))), parse("C(x)", ABC)))
    assert to_text(phi) == "(A(x) | B(x)) & C(x)"
