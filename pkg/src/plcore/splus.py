"""Spaces of positive types realised in continuations of a model.

A pointed model ``(N, h, a)`` is a model ``N`` of the theory, a
homomorphism ``h: M -> N`` and a tuple ``a`` of ``N``.  Its type over ``M``
is the set of ``phi(x, c)`` with ``N ⊨ phi(a, h(c))``.  One type lies below
another when some ``g: N -> N'`` has ``g ∘ h = h'`` and ``g(a) = a'``.

Relations here come from descriptors read the other way round: the
relation holds of ``(p_0..p_{n-1})`` when no ``c`` in ``alpha(M)`` makes every
``phi_i(x, c)`` belong to ``p_i``.  These relations are antitone in each
argument, so the type of a tuple of fresh unrelated points, which lies
below every other type, absorbs everything and the core collapses to a
single point per sort.
"""

import itertools
from dataclasses import dataclass

from .evaluation import holds_tuple, solution_set
from .hom import Hom, canonical_form, core_with_embedding, hom_exists, identity
from .structure import FinStructure, SortedTuple
from .theory import TheoryError, enumerate_models, is_model
from .typespace import _assemble, _table_from_masks, generate_descriptors, sort_name


@dataclass(frozen=True)
class PointedModel:
    model: object
    h: Hom
    point: SortedTuple

    def describe(self):
        return {
            "size": dict(self.model.universe),
            "image": self.h.to_json(),
            "point": list(self.point.elems),
            "model": self.model.to_json(),
        }


def below(p, q):
    """The type of ``p`` is contained in the type of ``q``."""
    if p.point.sorts != q.point.sorts:
        return False
    pin = {}
    for s in p.h.map:
        for c, img in enumerate(p.h.map[s]):
            want = q.h(s, c)
            if pin.get((s, img), want) != want:
                return False
            pin[(s, img)] = want
    for s, e, f in zip(p.point.sorts, p.point.elems, q.point.elems):
        if pin.get((s, e), f) != f:
            return False
        pin[(s, e)] = f
    return hom_exists(p.model, q.model, pin=pin)


def pointed_core(n, h, a):
    """Shrink ``n`` to a minimal retract fixing the image of ``h`` and ``a``."""
    fixed = {(s, v) for s, row in h.map.items() for v in row} | set(a.pairs())
    core, ret, _ = core_with_embedding(n, fixed=fixed, certify_bound=0)
    h2 = ret.after(h)
    a2 = ret.apply(a)
    return PointedModel(core, Hom(h.source, core, h2.map), a2)


class SPlusSpace:
    """Classes of pointed models of arity ``1..arity`` up to mutual domination."""

    def __init__(self, m, arity, sorts, points, order):
        self.m = m
        self.arity = arity
        self.sorts = sorts
        self.points = points  # sort -> list of PointedModel (pointed cores)
        self.order = order  # sort -> set of (i, j) with points i below j
        self._masks = {}

    def __repr__(self):
        sizes = ", ".join(f"{sort_name(x)}:{len(self.points[x])}" for x in self.sorts)
        return f"SPlusSpace({sizes})"

    @property
    def param_base_sorts(self):
        return self.m.signature.sorts

    def base_tuples(self, sorts):
        return list(self.m.tuples(tuple(sorts)))

    def least(self, x):
        """Index of the point below all others, or ``None``."""
        n = len(self.points[x])
        for i in range(n):
            if all((i, j) in self.order[x] for j in range(n)):
                return i
        return None

    def maximal(self, x):
        n = len(self.points[x])
        return [i for i in range(n) if not any((i, j) in self.order[x] and i != j for j in range(n))]

    def class_of(self, pm):
        """Index of the class containing the pointed model ``pm``."""
        x = pm.point.sorts
        for i, q in enumerate(self.points[x]):
            if below(pm, q) and below(q, pm):
                return i
        return None

    def mask(self, phi, xvars, params):
        key = (phi, tuple(xvars), tuple(params))
        if key not in self._masks:
            x = tuple(v.sort for v in xvars)
            free = tuple(xvars) + tuple(params)
            cs = self.base_tuples(v.sort for v in params)
            out = []
            for pm in self.points[x]:
                bits = 0
                for j, c in enumerate(cs):
                    img = tuple(pm.h(v.sort, e) for v, e in zip(params, c))
                    if holds_tuple(pm.model, phi, pm.point.elems + img, free):
                        bits |= 1 << j
                out.append(bits)
            self._masks[key] = tuple(out)
        return self._masks[key]

    def alpha_mask(self, alpha, params):
        key = ("alpha", alpha, tuple(params))
        if key not in self._masks:
            sols = solution_set(self.m, alpha, tuple(params))
            bits = 0
            for j, c in enumerate(self.base_tuples(v.sort for v in params)):
                if c in sols:
                    bits |= 1 << j
            self._masks[key] = bits
        return self._masks[key]

    def table(self, desc):
        return r_relation(self, desc)

    def point_labels(self, x):
        return [pm.describe() for pm in self.points[x]]


def one_point_extensions(m, t, isolated=0):
    """``m`` itself and every model extending ``m`` by one fresh element.

    The fresh element may take part in any facts with the old elements, so
    this covers every type over ``m`` realised one step away from ``m``.
    With ``isolated=k`` the family also holds ``m`` plus ``k`` fresh points of
    each sort in no facts at all, which realises the tuple of unrelated
    points in arities up to ``k``.  The homomorphism is always the inclusion.
    """
    out = [(m, identity(m))]
    for s in m.signature.sorts:
        if isolated:
            n = m.add_elements(s, isolated)
            if is_model(n, t):
                out.append((n, Hom(m, n, {r: tuple(range(m.universe[r])) for r in m.signature.sorts})))
    for s in m.signature.sorts:
        fresh = m.universe[s]
        universe = dict(m.universe)
        universe[s] += 1
        facts = []
        for name, ar in m.signature.relations:
            ranges = [range(universe[r]) for r in ar]
            for args in itertools.product(*ranges):
                if any(r == s and e == fresh for r, e in zip(ar, args)):
                    facts.append((name, args))
        for chosen in itertools.product((False, True), repeat=len(facts)):
            tables = {name: set(rows) for name, rows in m.tables.items()}
            for on, (name, args) in zip(chosen, facts):
                if on:
                    tables[name].add(args)
            n = FinStructure(m.signature, universe, tables)
            if is_model(n, t):
                out.append((n, Hom(m, n, {r: tuple(range(m.universe[r])) for r in m.signature.sorts})))
    return out


def build_splus(m, t, n, k, models=None):
    """Pointed models of ``t`` over ``m`` with tuples of length ``1..k``.

    Continuations are all models with at most ``|m| + n`` elements per sort
    together with every homomorphism from ``m``; ``models`` may instead give
    an explicit list of ``(N, h)`` pairs.  Each pointed model is reduced to
    its pointed core and the classes are ordered by core size, then by a
    canonical code.
    """
    if not is_model(m, t):
        raise TheoryError("the base structure is not a model of the theory")
    if models is None:
        from .hom import find_hom

        cap = max(m.universe.values(), default=0) + n
        models = [(N, h) for N in enumerate_models(t, cap) for h in find_hom(m, N, mode="all")]
    sorts = []
    for r in range(1, k + 1):
        sorts.extend(itertools.product(m.signature.sorts, repeat=r))
    m_elems = list(m.elements())
    points = {}
    order = {}
    for x in sorts:
        found = {}
        for N, h in models:
            for a in N.tuples(x):
                pm = pointed_core(N, h, SortedTuple(x, a))
                marks = [[(s, pm.h(s, e)) for s, e in m_elems], list(pm.point.pairs())]
                key = canonical_form(pm.model, marks)
                if key not in found:
                    found[key] = pm
        keys = sorted(found, key=lambda kk: (sum(kk[0]), kk))
        pts = [found[kk] for kk in keys]
        rel = set()
        for i, p in enumerate(pts):
            for j, q in enumerate(pts):
                if i == j or below(p, q):
                    rel.add((i, j))
        # pointed cores are unique up to isomorphism, so mutual domination
        # between different codes signals a bug
        for i, j in rel:
            if i != j and (j, i) in rel:
                raise AssertionError("two pointed cores dominate each other")
        points[x] = pts
        order[x] = rel
    return SPlusSpace(m, k, sorts, points, order)


def r_relation(sp, desc):
    amask = sp.alpha_mask(desc.alpha, desc.params)
    masks = [sp.mask(f, xs, desc.params) for f, xs in zip(desc.phis, desc.xvars)]
    return _table_from_masks(masks, amask, covering=False)


def splus_pattern(sp, pool, max_args=1, max_params=1, max_descriptors=200000):
    descs = generate_descriptors(sp, pool, max_args, max_params, max_descriptors)
    return _assemble(sp, descs, False, "R")


def splus_core(sp, pool, max_args=1, max_params=1, max_descriptors=200000):
    """``(pattern, core, retraction, kept)`` for the S⁺ pattern structure."""
    ps = splus_pattern(sp, pool, max_args, max_params, max_descriptors)
    core, ret, kept = core_with_embedding(ps.structure, certify_bound=0)
    return ps, core, ret, kept
