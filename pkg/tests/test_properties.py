"""Property tests over random small digraphs and random positive formulas."""

import itertools

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from plcore.evaluation import solution_set, tarski, tarski_solutions
from plcore.formula import And, Atom, Eq, Exists, Or, Var, free_vars, parse, pp_normal_form, to_text
from plcore.hom import automorphisms, core_of_structure, find_hom, hom_exists
from plcore.structure import FinStructure, Signature, SortedTuple, canonical_query
from plcore.typespace import build_typespace, restrict, type_equal

SIG = Signature.single({"E": 2, "P": 1})
VARS = [Var(n, "s") for n in ("x", "y", "z", "w")]
FREE = tuple(VARS[:2])

settings.register_profile("plcore", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("plcore")


@st.composite
def structures(draw, max_size=3):
    n = draw(st.integers(1, max_size))
    pairs = list(itertools.product(range(n), repeat=2))
    edges = draw(st.sets(st.sampled_from(pairs)))
    marked = draw(st.sets(st.integers(0, n - 1)))
    return FinStructure(SIG, {"s": n}, {"E": edges, "P": {(e,) for e in marked}})


def atoms():
    v = st.sampled_from(VARS)
    return st.one_of(
        st.builds(lambda a, b: Atom("E", (a, b)), v, v),
        st.builds(lambda a: Atom("P", (a,)), v),
        st.builds(Eq, v, v),
    )


def _exists(var, body):
    return Exists((var,), body)


formulas = st.recursive(
    atoms(),
    lambda inner: st.one_of(
        st.builds(lambda a, b: And((a, b)), inner, inner),
        st.builds(lambda a, b: Or((a, b)), inner, inner),
        st.builds(_exists, st.sampled_from(VARS[2:]), inner),
    ),
    max_leaves=5,
)


def close(phi):
    """Bind every free variable other than ``x`` and ``y``."""
    extra = tuple(v for v in free_vars(phi) if v not in FREE)
    return Exists(extra, phi) if extra else phi


@given(formulas)
def test_print_parse_round_trip(phi):
    text = to_text(phi)
    again = parse(text, SIG)
    assert to_text(again) == text


@given(formulas.map(close), structures())
def test_normal_form_matches_tarski(phi, m):
    dnf = pp_normal_form(phi, FREE)
    direct = set(tarski_solutions(m, phi, FREE))
    via_nf = set()
    for pp in dnf:
        via_nf |= set(tarski_solutions(m, pp, FREE))
    assert via_nf == direct
    assert solution_set(m, phi, FREE) == direct


@given(formulas.map(close), structures(), structures())
def test_positive_formulas_are_preserved(phi, a, b):
    for h in find_hom(a, b, mode="all", limit=20):
        for vals in solution_set(a, phi, FREE):
            img = {v: h("s", e) for v, e in zip(FREE, vals)}
            assert tarski(b, phi, img)


@given(structures(), st.data())
def test_canonical_query_matches_pinned_hom(a, data):
    n = a.universe["s"]
    marked = tuple(data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=2)))
    q = canonical_query(a, SortedTuple(("s",) * len(marked), marked))
    b = data.draw(structures())
    for t in itertools.product(range(b.universe["s"]), repeat=len(marked)):
        pin = {}
        ok = True
        for e, f in zip(marked, t):
            if pin.get(("s", e), f) != f:
                ok = False
            pin[("s", e)] = f
        expect = ok and hom_exists(a, b, pin=pin)
        assert tarski(b, q, dict(zip(q.vars_free, t))) == expect


@given(structures())
def test_automorphisms_form_a_group(m):
    auts = automorphisms(m)
    keys = {h.key() for h in auts}
    assert any(all(h.map[s] == tuple(range(m.universe[s])) for s in h.map) for h in auts)
    for g in auts:
        assert g.inverse().key() in keys
        for h in auts:
            assert g.after(h).key() in keys


@given(structures(), st.data())
def test_type_equal_is_an_equivalence(m, data):
    n = m.universe["s"]
    base = data.draw(st.sets(st.integers(0, n - 1)))
    base = {"s": sorted(base)}
    elems = [SortedTuple(("s",), (e,)) for e in range(n)]
    eq = {(a.elems, b.elems) for a in elems for b in elems if type_equal(m, base, a, b)}
    for a in elems:
        assert (a.elems, a.elems) in eq
    for p, q in eq:
        assert (q, p) in eq
        for q2, r in eq:
            if q2 == q:
                assert (p, r) in eq


@given(structures(), st.data())
def test_restriction_respects_types(m, data):
    u, _ = core_of_structure(m, certify_bound=0)
    n = u.universe["s"]
    big = sorted(data.draw(st.sets(st.integers(0, n - 1))))
    small = [e for e in big if data.draw(st.booleans())]
    ts_big = build_typespace(u, {"s": big}, 1)
    ts_small = build_typespace(u, {"s": small}, 1)
    r = restrict(ts_big, ts_small)
    x = ("s",)
    for e in range(n):
        i = ts_big.point_of(x, (e,)).index
        assert r[x][i] == ts_small.point_of(x, (e,)).index
