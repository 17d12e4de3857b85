import pytest

from plcore.catalog import digraph
from plcore.evaluation import holds_tuple, solution_set, tarski
from plcore.formula import FormulaPool
from plcore.hom import hom_exists, is_core, is_isomorphic
from plcore.structure import Signature, structure
from plcore.theory import (
    HuTheory,
    InequalityNotDefinable,
    TheoryError,
    enumerate_models,
    find_inequality_definition,
    find_universal,
    hausdorff_probe,
    is_model,
    jcp_check,
    pc_check,
    pc_survey,
    pu_consequences,
    violated_axiom,
)

from conftest import EDGE_SIG, iso_classes_by_oracle


def test_u3_models_t3(u3, t3):
    assert is_model(u3, t3)


def test_overlap_violates_t3(t3):
    m = structure(t3.signature, 1, {"P0": [(0,)], "P1": [(0,)]})
    assert not is_model(m, t3)
    assert "P0" in str(violated_axiom(m, t3))


def test_triangle_violates_dag(dag4):
    assert not is_model(digraph(3, [(0, 1), (1, 2), (2, 0)]), dag4)


def test_is_model_matches_direct_axiom_check(tiny_digraphs, dag4):
    for m in tiny_digraphs:
        direct = all(not tarski(m, ax.forbidden(), {}) for ax in dag4.axioms)
        assert is_model(m, dag4) == direct


def test_t3_one_element_models(t3):
    assert len(enumerate_models(t3, 1)) == 4


def test_empty_theory_one_unary():
    t = HuTheory(Signature.single({"P": 1}), ())
    assert len(enumerate_models(t, 1)) == 2


def test_dag_models_up_to_two(dag4, tiny_digraphs):
    want = iso_classes_by_oracle(
        [m for m in tiny_digraphs if not any(a == b or (b, a) in m.tables["E"] for a, b in m.tables["E"])]
    )
    got = enumerate_models(dag4, 2)
    assert len(got) == len(want) == 3
    for m in got:
        assert any(is_isomorphic(m, w) for w in want)


def test_pc_u3(u3, t3):
    v = pc_check(u3, t3, 4)
    assert v.yes


def test_pc_u3_below_certified_bound(u3, t3):
    assert pc_check(u3, t3, 3).unknown


def test_pc_single_edge_dag(edge, dag4):
    v = pc_check(edge, dag4, 3)
    assert v.no
    w = v.witness
    free = w.formula.vars_free
    assert not holds_tuple(edge, w.formula, w.tuple.elems, free)
    assert holds_tuple(w.counter_model, w.formula, w.hom.apply(w.tuple).elems, free)
    assert is_model(w.counter_model, dag4)


def test_pc_extra_point_fails(u3, t3):
    m = u3.add_elements("s")
    v = pc_check(m, t3, 4)
    assert v.no
    assert v.witness.hom.target.size() <= 4


def test_pc_requires_model(t3):
    bad = structure(t3.signature, 1, {"P0": [(0,)], "P1": [(0,)]})
    with pytest.raises(TheoryError):
        pc_check(bad, t3, 3)


def test_universal_t3(u3, t3):
    v = find_universal(t3, 4)
    assert v.yes
    assert is_isomorphic(v.value, u3)


def test_universal_properties(t3):
    u = find_universal(t3, 4).value
    assert is_model(u, t3)
    assert is_core(u)
    assert all(hom_exists(m, u) for m in enumerate_models(t3, 4))


def test_universal_d2(d2, d2_theory):
    v = find_universal(d2_theory, 5)
    assert v.yes
    assert is_isomorphic(v.value, d2)
    assert pc_check(d2, d2_theory, 5).yes


def test_d2_fragment_alone_is_not_the_whole_theory(d2):
    frag = pu_consequences(d2, FormulaPool(d2.signature, 1, 2, 0))
    # I00(a), I11(b), S(a,b) is a model of the one-variable fragment but not of the structure's theory
    odd = structure(d2.signature, 2, {"I00": [(0,)], "I11": [(1,)], "S": [(0, 1)]})
    assert is_model(odd, frag)
    assert not hom_exists(odd, d2)


def test_universal_dag_unknown(dag4):
    assert find_universal(dag4, 3).unknown


def test_inequality_u3(u3):
    pool = FormulaPool(u3.signature, 0, 2, 2)
    phi = find_inequality_definition(u3, pool)["s"]
    assert solution_set(u3, phi) == {(a, b) for a in range(3) for b in range(3) if a != b}
    for part in phi.parts:
        assert all(a != b for a, b in solution_set(u3, part, phi_vars(phi)))
    got = {frozenset(str(a) for a in p.parts) for p in phi.parts}
    assert got == {
        frozenset({f"P{i}(x0)", f"P{j}(x1)"}) for i in range(3) for j in range(3) if i != j
    }


def phi_vars(phi):
    from plcore.formula import free_vars

    return free_vars(phi)


def test_inequality_single_point():
    m = structure(EDGE_SIG, 1)
    phi = find_inequality_definition(m, FormulaPool(EDGE_SIG, 1, 2, 2))["s"]
    assert phi.parts == ()


def test_inequality_d2(d2):
    pool = FormulaPool(d2.signature, 1, 2, 2)
    phi = find_inequality_definition(d2, pool)["s"]
    assert solution_set(d2, phi) == {(a, b) for a in range(4) for b in range(4) if a != b}
    texts = {str(p) for p in phi.parts}
    assert "S(x0,x1)" in texts


def test_inequality_not_definable_on_empty_structure():
    m = structure(Signature.single({"P": 1}), 2)
    with pytest.raises(InequalityNotDefinable):
        find_inequality_definition(m, FormulaPool(m.signature, 1, 2, 2))


def test_jcp_t3(t3):
    assert jcp_check(t3, 2).yes


def test_jcp_fails_without_common_continuation():
    sig = Signature.single({"A": 1, "B": 1})
    t = HuTheory.parse(sig, ["forall x. ~(A(x) & B(x))", "forall x y. ~(A(x) & B(y))"])
    v = jcp_check(t, 2)
    assert v.no
    a, b, _, _ = v.witness
    assert {len(a.tables["A"]) + len(a.tables["B"]), len(b.tables["A"]) + len(b.tables["B"])} == {1}


def test_jcp_dag(dag4):
    assert jcp_check(dag4, 2).yes


def test_pc_models_of_t3_are_unique(t3, u3):
    yes = [m for m, v in pc_survey(t3, 4) if v.yes]
    assert len(yes) == 1
    assert is_isomorphic(yes[0], u3)


def test_hausdorff_u3(u3):
    v = hausdorff_probe(u3, FormulaPool(u3.signature, 1, 2, 1))
    assert v.yes
    assert len(v.value) == 3


def test_theory_json_round_trip(t3, d2_theory):
    for t in (t3, d2_theory):
        again = HuTheory.from_json(t.to_json())
        assert [str(a) for a in again.axioms] == [str(a) for a in t.axioms]
        assert again.template == t.template


def test_forbidden_structures_are_cores(dag4):
    sizes = [f.size() for f in dag4.forbidden()]
    assert sizes == [1, 2, 3, 4]
