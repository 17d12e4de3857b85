"""Cores of theories computed from pattern structures on type spaces.

The pattern structure on the type space of the universal model is reduced
to its minimal retract.  With projection graphs included this retract is
the whole type space, its automorphisms match those of the model, and
repeating the construction on the core gives back a copy of the core.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

from .formula import FormulaPool
from .hom import Hom, automorphisms, core_with_embedding, hom_exists, find_hom, is_core, is_immersion
from .theory import TheoryError, is_model, pu_consequences
from .typespace import build_typespace, pattern_structure, sort_name


class CoreResult(NamedTuple):
    core: object  # FinStructure
    retraction: Hom
    pattern: object  # PatternStructure
    kept: dict  # pattern sort name -> list of point indices forming the core

    @property
    def is_full(self):
        return self.core.universe == self.pattern.structure.universe


def _pool(signature, pool):
    if isinstance(pool, (str, dict)):
        return FormulaPool.from_budget(signature, pool)
    return pool


def core_of_theory(t, u, pool, k=2, with_pi=False, max_args=2, max_params=1,
                   max_descriptors=200000, certify=True):
    """Core of ``t`` read off the type space of its universal model ``u``.

    ``u`` must be a model of ``t`` all of whose endomorphisms are
    automorphisms (as certified by ``find_universal``).
    """
    if certify:
        if not is_model(u, t):
            raise TheoryError("the proposed universal model is not a model of the theory")
        if not is_core(u):
            raise TheoryError("the proposed universal model has a non-surjective endomorphism")
    pool = _pool(u.signature, pool)
    ts = build_typespace(u, None, k)
    ps = pattern_structure(ts, pool, with_pi=with_pi, max_args=max_args, max_params=max_params,
                           max_descriptors=max_descriptors)
    core, ret, kept = core_with_embedding(ps.structure, certify_bound=0)
    return CoreResult(core, ret, ps, kept)


core_of_T = core_of_theory


def inclusion(result):
    """The inclusion of the core into the pattern structure."""
    return Hom(result.core, result.pattern.structure, result.kept)


def atomic_homogeneous(j):
    """Every pair of elements with the same pp type (homomorphisms both
    ways pinning one to the other) is related by an automorphism."""
    elems = list(j.elements())
    for a in elems:
        for b in elems:
            if a >= b or a[0] != b[0]:
                continue
            if hom_exists(j, j, pin={a: b[1]}) and hom_exists(j, j, pin={b: a[1]}):
                if not find_hom(j, j, pin={a: b[1]}, injective=True):
                    return False
    return True


def core_invariants(result):
    j = result.core
    return {
        "immerses": is_immersion(inclusion(result)),
        "endomorphisms_are_automorphisms": is_core(j),
        "atomic_homogeneous": atomic_homogeneous(j),
        "full": result.is_full,
    }


@dataclass
class AutComparison:
    order_model: int
    order_core: int
    full: bool
    isomorphism: list = field(default_factory=list)  # pairs (sigma, sigma on types)
    injective: bool = False
    homomorphic: bool = False
    surjective: bool = False

    @property
    def ok(self):
        return self.full and self.injective and self.homomorphic and self.surjective

    def to_json(self):
        return {
            "order_model": self.order_model,
            "order_core": self.order_core,
            "full": self.full,
            "isomorphism": self.ok,
            "pairs": [[s.to_json(), t.to_json()] for s, t in self.isomorphism],
        }


def lift_automorphism(sigma, pattern, target=None):
    """``sigma`` acting on the type space: the type of ``a`` goes to the type
    of ``sigma(a)``."""
    ts = pattern.space
    mapping = {}
    for x in ts.sorts:
        mapping[sort_name(x)] = [
            ts.point_of(x, tuple(sigma(s, e) for s, e in zip(x, p.rep.elems))).index
            for p in ts.points[x]
        ]
    st = pattern.structure
    return Hom(st, target or st, mapping)


def aut_compare(u, result):
    """Compare ``Aut(u)`` with the automorphisms of the core by lifting each
    automorphism of ``u`` to the type space."""
    auts_u = automorphisms(u)
    auts_j = automorphisms(result.core)
    rep = AutComparison(len(auts_u), len(auts_j), result.is_full)
    if not rep.full:
        return rep
    lifted = [lift_automorphism(s, result.pattern) for s in auts_u]
    rep.isomorphism = list(zip(auts_u, lifted))
    keys = [h.key() for h in lifted]
    rep.injective = len(set(keys)) == len(keys)
    rep.surjective = set(keys) == {h.key() for h in auts_j}
    index = {a.key(): i for i, a in enumerate(auts_u)}
    hom_ok = all(h.is_homomorphism() and h.is_injective() for h in lifted)
    for i, a in enumerate(auts_u):
        for j, b in enumerate(auts_u):
            ab = a.after(b)
            if lifted[index[ab.key()]].key() != lifted[i].after(lifted[j]).key():
                hom_ok = False
    rep.homomorphic = hom_ok
    return rep


@dataclass
class RepeatedCoreReport:
    first_size: dict
    second_size: dict
    theory_axioms: int
    certified_universal: bool
    bijection: dict  # (sort, id) in the first core -> (sort name, point index) in the second
    bijective: bool
    aut_first: int
    aut_second: int
    aut_isomorphic: bool
    second: CoreResult = None

    @property
    def ok(self):
        return self.certified_universal and self.bijective and self.aut_isomorphic

    def to_json(self):
        return {
            "first_size": self.first_size,
            "second_size": self.second_size,
            "theory_axioms": self.theory_axioms,
            "certified_universal": self.certified_universal,
            "bijective": self.bijective,
            "aut_first": self.aut_first,
            "aut_second": self.aut_second,
            "aut_isomorphic": self.aut_isomorphic,
            "bijection": [[list(a), list(b)] for a, b in sorted(self.bijection.items())],
        }


def repeated_core_check(core, pool2, k2=1, max_args=2, max_params=1, max_descriptors=200000):
    """Run the core construction a second time, on the core itself.

    The core is a finite structure whose endomorphisms are all
    automorphisms, so it is the universal model of its own h-universal
    theory; the pool's closed consequences are recorded as a finite axiom
    fragment.  The second core is compared with the first through the map
    sending an element to its type.
    """
    if hasattr(core, "core"):
        core = core.core
    pool2 = _pool(core.signature, pool2)
    frag = pu_consequences(core, pool2)
    certified = is_core(core)
    ts2 = build_typespace(core, None, k2)
    ps2 = pattern_structure(ts2, pool2, with_pi=True, max_args=max_args, max_params=max_params,
                            max_descriptors=max_descriptors)
    c2, r2, kept2 = core_with_embedding(ps2.structure, certify_bound=0)
    second = CoreResult(c2, r2, ps2, kept2)
    bij = {}
    for s, e in core.elements():
        p = ts2.iota(s, e)
        bij[(s, e)] = (sort_name(p.sort), p.index)
    unary = [sort_name((s,)) for s in core.signature.sorts]
    targets = {(n, i) for n in unary for i in kept2[n]}
    values = set(bij.values())
    bijective = len(values) == len(bij) and values == targets
    auts1 = automorphisms(core)
    auts2 = automorphisms(c2)
    iso = False
    if second.is_full and len(auts1) == len(auts2):
        lifted = {lift_automorphism(a, ps2).key() for a in auts1}
        iso = lifted == {a.key() for a in auts2}
    return RepeatedCoreReport(
        first_size=dict(core.universe),
        second_size=dict(c2.universe),
        theory_axioms=len(frag.axioms),
        certified_universal=certified and is_model(core, frag),
        bijection=bij,
        bijective=bijective,
        aut_first=len(auts1),
        aut_second=len(auts2),
        aut_isomorphic=iso,
        second=second,
    )
