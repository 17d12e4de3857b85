import itertools

import pytest

from plcore.catalog import doubled_interval, linear_order
from plcore.formula import And, Atom, Eq, Exists, FormulaError, Var
from plcore.hom import Hom, automorphisms
from plcore.morley import (
    Forall,
    Not,
    elementary_check,
    fo_free_vars,
    fo_holds,
    fo_pool,
    fo_solutions,
    fo_text,
    morleyize,
    same_automorphisms,
    tp_expand,
)
from plcore.typespace import PoolBudgetExceeded

X, Y, Z = (Var(n, "s") for n in "xyz")


@pytest.fixture(scope="module")
def chain_pool():
    c = linear_order(3)
    return fo_pool(c.signature, rank=2, arity=2, references=[c])


def self_maps(m):
    n = m.universe["s"]
    for img in itertools.product(range(n), repeat=n):
        yield {"s": img}


def test_fo_text_and_free_vars():
    f = Forall((Y,), Not(And((Atom("L", (X, Y)), Eq(X, Y)))))
    assert fo_text(f) == "forall y. ~(L(x,y) & x=y)"
    assert fo_free_vars(f) == (X,)


def test_fo_holds_least_element(chain3):
    least = Forall((Y,), Not(Atom("L", (Y, X))))
    assert fo_solutions(chain3, least, (X,)) == {(0,)}
    assert fo_holds(chain3, Exists((X,), least), {})


def test_pool_masks_match_oracle(chain3, chain_pool):
    assert len(chain_pool) == 104
    for e in chain_pool:
        sols = fo_solutions(chain3, e.formula, e.vars)
        bits = 0
        for j, vals in enumerate(itertools.product(range(3), repeat=len(e.vars))):
            if vals in sols:
                bits |= 1 << j
        assert bits == e.mask, e.text()


def test_pool_is_closed_under_negation(chain_pool):
    by_arity = {}
    for e in chain_pool:
        by_arity.setdefault(len(e.vars), set()).add(e.mask)
    for a, masks in by_arity.items():
        full = (1 << 3 ** a) - 1
        assert all(full ^ m in masks for m in masks)


def test_pool_budget():
    c = linear_order(3)
    with pytest.raises(PoolBudgetExceeded):
        fo_pool(c.signature, rank=2, arity=2, references=[c], max_formulas=10)


def test_pool_needs_references(chain3):
    with pytest.raises(ValueError):
        fo_pool(chain3.signature)


def test_morleyize_trivial_formula(chain3):
    mp, manifest = morleyize(chain3, [(Eq(X, X), (X,))])
    assert mp.tables["R0"] == {(0,), (1,), (2,)}
    assert manifest == {"R0": {"formula": "x=x", "vars": [["x", "s"]]}}


def test_only_identity_is_elementary(chain3, chain_pool):
    good = [h for h in self_maps(chain3) if elementary_check(h, chain3, chain3, chain_pool)]
    assert good == [{"s": (0, 1, 2)}]


def test_elementary_iff_morleyized_hom(chain3, chain_pool):
    mp, _ = morleyize(chain3, chain_pool)
    for h in self_maps(chain3):
        assert elementary_check(h, chain3, chain3, chain_pool) == Hom(mp, mp, h).is_homomorphism()


def test_elementary_maps_are_injective(chain3, chain_pool):
    for h in self_maps(chain3):
        if elementary_check(h, chain3, chain3, chain_pool):
            assert len(set(h["s"])) == 3


def test_betweenness(chain3):
    between = Exists((Z,), And((Atom("L", (X, Z)), Atom("L", (Z, Y)))))
    assert fo_solutions(chain3, between, (X, Y)) == {(0, 2)}
    # 0 < 1 in the 2-chain maps to 0 < 2, a homomorphism that is not elementary
    c2 = linear_order(2)
    h = Hom(c2, chain3, {"s": (0, 2)})
    assert h.is_homomorphism()
    assert not elementary_check(h, c2, chain3, [(Not(between), (X, Y))])


def test_automorphisms_are_elementary():
    d2 = doubled_interval()
    pool = fo_pool(d2.signature, rank=1, arity=1, references=[d2])
    for a in automorphisms(d2):
        assert elementary_check(a, d2, d2, pool)


def test_tp_expand_u3(u3):
    exp = tp_expand(u3, [["P0(x)", "P1(x)"], ["x=x"]])
    assert exp.tables["Sigma0"] == frozenset()
    assert exp.tables["Sigma1"] == {(0,), (1,), (2,)}
    assert same_automorphisms(u3, exp)


def test_tp_expand_d2_keeps_automorphisms(d2):
    names = d2.signature.names
    sigmas = [[f"{r}(x)"] for r in names if d2.signature.arity(r) == ("s",)]
    sigmas.append(["exists z. S(x,z) & S(z,y)"])
    exp = tp_expand(d2, sigmas)
    assert same_automorphisms(d2, exp)


def test_tp_expand_name_clash():
    c = linear_order(2, rel="Sigma0")
    exp = tp_expand(c, [["x=x"]])
    assert "Sigma0_" in exp.signature.names


def test_tp_expand_mixed_sorts(u3):
    with pytest.raises(FormulaError):
        tp_expand(u3, [[And((Eq(X, X), Eq(Var("x", "t"), Var("x", "t"))))]])
