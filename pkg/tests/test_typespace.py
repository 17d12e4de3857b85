import itertools

import pytest

from plcore.evaluation import holds_tuple
from plcore.formula import FormulaPool, parse_positive
from plcore.hom import Hom
from plcore.structure import SortedTuple, validate_structure
from plcore.typespace import (
    TypeSpaceError,
    build_typespace,
    conjoin_descriptors,
    d_relation,
    descriptor,
    formula_in_type,
    generate_descriptors,
    merge_descriptor,
    pattern_structure,
    project,
    restrict,
    separating_formula,
    type_equal,
)

S1 = ("s",)
S2 = ("s", "s")


def one(e):
    return SortedTuple(S1, (e,))


def test_type_equal_reflexive(u3):
    assert type_equal(u3, None, one(1), one(1))


def test_d2_swap_merges_types(d2):
    assert type_equal(d2, {}, one(0), one(1))
    assert not type_equal(d2, {}, one(0), one(2))


def test_u3_types_over_itself_differ(u3):
    assert not type_equal(u3, None, one(0), one(1))


def test_typespace_sizes(u3, d2):
    assert build_typespace(u3, None, 1).size(S1) == 3
    assert build_typespace(d2, None, 1).size(S1) == 4
    assert build_typespace(d2, {"s": [0, 1]}, 1).size(S1) == 3
    assert build_typespace(d2, {}, 1).size(S1) == 2


def test_typespace_needs_universal_model(edge):
    # the edge maps onto a single point? no: it has the non-injective endomorphism only with a loop
    loop_and_point = edge.add_elements("s")
    with pytest.raises(TypeSpaceError):
        build_typespace(loop_and_point.with_tables(loop_and_point.signature, {"E": [(0, 0), (1, 2)]}), {}, 1)


def test_immersed_base_option(d2):
    with pytest.raises(TypeSpaceError):
        build_typespace(d2, {"s": [0, 1]}, 1, require_immersed_base=True)
    assert build_typespace(d2, None, 1, require_immersed_base=True).size(S1) == 4


def test_formula_in_type(u3, d2):
    ts = build_typespace(u3, None, 1)
    eq = parse_positive("x=y", u3.signature)
    assert formula_in_type(ts, eq, (2,), ts.iota("s", 2))
    assert not formula_in_type(ts, parse_positive("P0(x)", u3.signature), (), ts.iota("s", 1))
    td = build_typespace(d2, {"s": [0, 1]}, 1)
    assert formula_in_type(td, parse_positive("I00(x)", d2.signature), (), td.iota("s", 1))


def test_d_relation_examples(u3):
    ts = build_typespace(u3, None, 1)
    d = descriptor(u3.signature, ["x=y"], "P0(y)", [["x"]], ["y"])
    assert d_relation(ts, d) == {(ts.iota("s", 0).index,)}
    d = descriptor(u3.signature, ["P0(x)"], "y=y", [["x"]], ["y"])
    assert d_relation(ts, d) == {(ts.iota("s", 0).index,)}
    d = descriptor(u3.signature, ["P0(x)"], "P0(y) & P1(y)", [["x"]], ["y"])
    assert d_relation(ts, d) == {(i,) for i in range(3)}


def test_d_relation_matches_definition(u3):
    ts = build_typespace(u3, None, 2)
    d = descriptor(u3.signature, ["P0(x) | x=y", "P1(z)"], "P0(y) | P1(y)", [["x"], ["z"]], ["y"])
    phis = d.phis
    want = set()
    for a, b in itertools.product(range(3), repeat=2):
        ok = all(
            holds_tuple(u3, phis[0], (a, c), d.xvars[0] + d.params)
            or holds_tuple(u3, phis[1], (b, c), d.xvars[1] + d.params)
            for c in range(3)
            if holds_tuple(u3, d.alpha, (c,), d.params)
        )
        if ok:
            want.add((ts.iota("s", a).index, ts.iota("s", b).index))
    assert d_relation(ts, d) == want


def test_project(u3):
    ts = build_typespace(u3, None, 2)
    p = ts.point_of(S2, (0, 1))
    assert project(ts, p, (0, 1)) == p
    assert project(ts, p, (0,)) == ts.iota("s", 0)
    with pytest.raises(TypeSpaceError):
        project(ts, p, ())


def test_restrict_identity(d2):
    ts = build_typespace(d2, None, 1)
    r = restrict(ts, ts)
    assert r[S1] == (0, 1, 2, 3)


def test_restrict_merges_over_smaller_base(d2):
    big = build_typespace(d2, None, 2)
    small = build_typespace(d2, {"s": [0, 1]}, 2)
    r = restrict(big, small)
    assert len(set(r[S1])) == 3
    assert r[S1][2] == r[S1][3]
    for p in big.points[S2]:
        for pos in [(0,), (1,)]:
            q = project(big, p, pos)
            assert r[S1][q.index] == project(small, small.points[S2][r[S2][p.index]], pos).index


def test_restrict_is_a_homomorphism_of_pattern_structures(d2):
    pool = FormulaPool(d2.signature, 0, 1, 2)
    big = build_typespace(d2, None, 1)
    small = build_typespace(d2, {"s": [0, 1]}, 1)
    descs = generate_descriptors(big, pool, max_args=1, max_params=1)
    pb = pattern_structure(big, pool, descriptors=descs)
    ps = pattern_structure(small, pool, descriptors=descs)
    r = restrict(big, small)
    h = Hom(pb.structure, ps.structure, {"[s]": r[S1]})
    assert h.is_homomorphism()


def test_pattern_structure_u3_separates_points(u3):
    ts = build_typespace(u3, None, 1)
    ps = pattern_structure(ts, FormulaPool(u3.signature, 0, 1, 1), max_args=1, max_params=0)
    profiles = {
        tuple(((i,) in ps.structure.tables[name]) for name in ps.structure.signature.names)
        for i in range(3)
    }
    assert len(profiles) == 3


def test_pattern_structure_empty_pool(u3):
    ts = build_typespace(u3, None, 1)
    ps = pattern_structure(ts, FormulaPool(u3.signature, 0, 0, 0))
    assert ps.structure.signature.names == ()


def test_pattern_structure_d2_with_projections(d2):
    ts = build_typespace(d2, None, 2)
    ps = pattern_structure(ts, FormulaPool(d2.signature, 1, 1, 2), with_pi=True, max_args=1)
    st = ps.structure
    assert st.universe == {"[s]": 4, "[s,s]": 16}
    assert validate_structure(st) == []
    pis = [n for n in st.signature.names if n.startswith("pi")]
    assert len(pis) == 2
    for n in pis:
        assert len(st.tables[n]) == 16
    man = ps.manifest()
    assert {r["kind"] for r in man["relations"]} == {"D", "pi"}


def test_iota_correspondence(d2):
    ts = build_typespace(d2, None, 1)
    assert sorted(ts.iota("s", e).index for e in range(4)) == [0, 1, 2, 3]


def _merged_argument_mismatches(ts, descs):
    bad = 0
    for d in descs:
        if len(d.phis) != 2 or d.arg_sorts[0] != d.arg_sorts[1]:
            continue
        merged = merge_descriptor(d, [[0, 1]])
        diag = {(p,) for p, q in d_relation(ts, d) if p == q}
        bad += diag != set(d_relation(ts, merged))
    return bad


def test_repeated_argument_equals_disjunction(u3, d2):
    for u in (u3, d2):
        ts = build_typespace(u, None, 1)
        descs = generate_descriptors(ts, FormulaPool(u.signature, 0, 1, 2), max_args=2, max_params=1)
        assert _merged_argument_mismatches(ts, descs) == 0


def test_conjunction_of_descriptors(u3, d2):
    for u in (u3, d2):
        ts = build_typespace(u, None, 1)
        pool = FormulaPool(u.signature, 0, 2, 2)
        eps, ev = separating_formula(u, "s", pool)
        descs = generate_descriptors(ts, FormulaPool(u.signature, 0, 1, 2), max_args=1, max_params=1)
        for d1, d2_ in itertools.islice(itertools.combinations(descs, 2), 40):
            c = conjoin_descriptors(d1, d2_, eps, ev)
            assert d_relation(ts, c) == d_relation(ts, d1) & d_relation(ts, d2_)


def test_separating_formula_needs_two_points():
    from plcore.structure import Signature, structure

    m = structure(Signature.single({"E": 2}), 1, {"E": [(0, 0)]})
    assert separating_formula(m, "s", FormulaPool(m.signature, 1, 2, 2)) is None


def test_pool_growth_keeps_tables(u3):
    ts = build_typespace(u3, None, 1)
    small = generate_descriptors(ts, FormulaPool(u3.signature, 0, 1, 2), max_args=1)
    big = generate_descriptors(ts, FormulaPool(u3.signature, 1, 2, 2), max_args=1)
    assert {d_relation(ts, d) for d in small} <= {d_relation(ts, d) for d in big}
