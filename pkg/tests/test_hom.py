from plcore.catalog import digraph
from plcore.formula import FormulaPool
from plcore.evaluation import holds_tuple
from plcore.hom import (
    automorphisms,
    canonical_form,
    core_of_structure,
    find_hom,
    identity,
    immersion_witness,
    is_core,
    is_immersion,
    is_isomorphic,
    naive_homs,
    Hom,
)
from plcore.structure import Signature, structure

from conftest import EDGE_SIG


def _with_free_point(u3):
    return u3.add_elements("s")


def test_u3_is_rigid(u3):
    homs = find_hom(u3, u3, mode="all")
    assert len(homs) == 1
    assert homs[0] == identity(u3)
    assert len(naive_homs(u3, u3)) == 1


def test_edge_into_two_cycle(edge):
    two_cycle = digraph(2, [(0, 1), (1, 0)])
    assert find_hom(edge, two_cycle, mode="count") == 2
    assert len(naive_homs(edge, two_cycle)) == 2


def test_triangle_into_edge(edge):
    tri = digraph(3, [(0, 1), (1, 2), (2, 0)])
    assert find_hom(tri, edge, mode="all") == []


def test_pin_and_limit():
    loop = digraph(1, [(0, 0)])
    path = digraph(3, [(0, 1), (1, 2)])
    assert find_hom(path, loop, mode="count") == 1
    full = digraph(3, [(a, b) for a in range(3) for b in range(3)])
    assert find_hom(path, full, mode="count") == 27
    assert find_hom(path, full, mode="count", pin={("s", 0): 2}) == 9
    assert len(find_hom(path, full, mode="all", limit=4)) == 4


def test_homs_match_naive_on_tiny_digraphs(tiny_digraphs):
    for a in tiny_digraphs:
        for b in tiny_digraphs:
            fast = sorted(h.key() for h in find_hom(a, b, mode="all"))
            slow = sorted(h.key() for h in naive_homs(a, b))
            assert fast == slow


def test_identity_is_immersion(d2):
    assert is_immersion(identity(d2))


def test_edge_into_path_is_not_immersion(edge):
    # a -> c -> b together with a -> b, so the endpoints carry the edge
    path2 = digraph(3, [(0, 2), (2, 1), (0, 1)])
    h = Hom(edge, path2, {"s": (0, 1)})
    assert h.is_homomorphism()
    assert not is_immersion(h)
    w = immersion_witness(h)
    assert str(w.formula) == "exists y0. E(x0,y0) & E(y0,x1)"
    assert w.tuple.elems == (0, 1)
    assert holds_tuple(path2, w.formula, w.image.elems, w.formula.vars_free)
    assert not holds_tuple(edge, w.formula, w.tuple.elems, w.formula.vars_free)


def test_u3_into_u3_plus_point_is_immersion(u3):
    big = _with_free_point(u3)
    assert is_immersion(Hom(u3, big, {"s": (0, 1, 2)}))
    assert immersion_witness(Hom(u3, big, {"s": (0, 1, 2)})) is None


def _pp_preserved_and_reflected(h, pool):
    a, b = h.source, h.target
    for pp in pool:
        sorts = tuple(v.sort for v in pp.vars_free)
        for t in a.tuples(sorts):
            img = tuple(h(s, e) for s, e in zip(sorts, t))
            if holds_tuple(b, pp, img, pp.vars_free) and not holds_tuple(a, pp, t, pp.vars_free):
                return False
    return True


def test_immersion_matches_pp_reflection(tiny_digraphs):
    # pool with up to 2 bound variables covers every failure on these sizes
    pool = list(FormulaPool(EDGE_SIG, 2, 4, 2))
    checked = 0
    for a in tiny_digraphs[:6]:
        for b in tiny_digraphs:
            for h in find_hom(a, b, mode="all"):
                assert is_immersion(h) == _pp_preserved_and_reflected(h, pool)
                checked += 1
    assert checked > 50


def test_rigid_structure_is_own_core(u3):
    core, ret = core_of_structure(u3)
    assert core == u3
    assert ret == identity(u3)


def test_core_drops_free_point(u3):
    core, ret = core_of_structure(_with_free_point(u3))
    assert core == u3
    assert ret.key() == ((0, 1, 2, 0),)


def test_symmetric_square_core_is_edge():
    sq = digraph(4, [(i, (i + 1) % 4) for i in range(4)] + [((i + 1) % 4, i) for i in range(4)])
    core, _ = core_of_structure(sq)
    assert core.size() == 2
    assert is_isomorphic(core, digraph(2, [(0, 1), (1, 0)]))


def _oracle_core_size(a):
    return min(len(set(h.map["s"])) for h in naive_homs(a, a))


def test_core_size_matches_oracle(small_digraphs):
    for a in small_digraphs:
        core, ret = core_of_structure(a)
        assert core.size() == _oracle_core_size(a)
        assert ret.is_homomorphism()
        assert is_core(core)
        again, _ = core_of_structure(core)
        assert again == core


def test_u3_automorphisms(u3):
    assert len(automorphisms(u3)) == 1


def test_d2_automorphisms(d2):
    auts = automorphisms(d2)
    assert len(auts) == 4
    keys = {h.key() for h in auts}
    for g in auts:
        assert g.inverse().key() in keys
        for h in auts:
            assert g.after(h).key() in keys


def test_empty_structure_has_all_permutations():
    sig = Signature.single({"P": 1})
    assert len(automorphisms(structure(sig, 4))) == 24


def test_canonical_form_detects_isomorphism(small_digraphs):
    from conftest import iso_classes_by_oracle

    three = [m for m in small_digraphs if m.size() == 3]
    oracle = len(iso_classes_by_oracle(three))
    assert oracle == 104
    assert len({canonical_form(m) for m in three}) == oracle
