"""h-universal theories, their finite models and bounded model-theoretic checks.

An h-universal theory is a list of sentences ``forall x. ~phi(x)`` with
``phi`` positive.  After normalisation each sentence forbids finitely many
pp structures: a finite structure is a model iff none of them maps into it.

A theory may instead carry a ``template`` structure; then it stands for the
full h-universal theory of that finite structure, whose models are exactly
the structures that map into the template.  The listed axioms are then only
a finite fragment kept for display.
"""

import itertools
import json
from dataclasses import dataclass, field

from .evaluation import holds_pp, solution_set
from .formula import (
    FormulaError,
    Or,
    hu_forbidding,
    parse_hu,
    pp_normal_form,
)
from .hom import (
    canonical_form,
    core_of_structure,
    find_hom,
    hom_exists,
    immersion_witness,
    is_core,
)
from .structure import (
    FinStructure,
    Signature,
    canonical_query,
    disjoint_union,
    quotient,
    SortedTuple,
    structure_of_pp,
)


class TheoryError(ValueError):
    pass


class InequalityNotDefinable(ValueError):
    def __init__(self, sort, pair):
        self.sort = sort
        self.pair = pair
        super().__init__(f"no pool formula separates {pair} in sort {sort!r}")


@dataclass
class Verdict:
    """Outcome of a bounded check.

    ``status`` is ``"yes"``, ``"no"`` or ``"unknown"``.  ``value`` carries a
    found object (e.g. the universal model), ``witness`` the reason for a
    ``"no"``, and ``bound`` the search bound behind a bounded answer.
    """

    status: str
    value: object = None
    witness: object = None
    bound: object = None
    detail: dict = field(default_factory=dict)

    @property
    def yes(self):
        return self.status == "yes"

    @property
    def no(self):
        return self.status == "no"

    @property
    def unknown(self):
        return self.status == "unknown"


class HuTheory:
    def __init__(self, signature, axioms=(), template=None):
        self.signature = signature
        self.axioms = tuple(axioms)
        if template is not None and template.signature != signature:
            raise TheoryError("template structure has a different signature")
        self.template = template
        self._forbidden = None

    def __repr__(self):
        return f"HuTheory({len(self.axioms)} axioms{', template' if self.template else ''})"

    @classmethod
    def parse(cls, signature, lines, template=None):
        axioms = []
        for i, text in enumerate(lines):
            try:
                axioms.append(parse_hu(text, signature))
            except FormulaError as exc:
                raise TheoryError(f"axiom #{i}: {exc}") from None
        return cls(signature, axioms, template)

    def forbidden(self):
        """Cores of the pp structures whose presence violates an axiom."""
        if self._forbidden is None:
            seen = {}
            for ax in self.axioms:
                for pp in pp_normal_form(ax.forbidden(), ()):
                    m, _ = structure_of_pp(pp, self.signature)
                    c, _ = core_of_structure(m, certify_bound=0)
                    seen.setdefault(canonical_form(c), c)
            self._forbidden = [seen[k] for k in sorted(seen, key=lambda k: (sum(k[0]), k))]
        return self._forbidden

    def max_forbidden_size(self):
        return max((f.size() for f in self.forbidden()), default=0)

    def to_json(self):
        obj = {
            "signature": self.signature.to_json(),
            "axioms": [str(a) for a in self.axioms],
        }
        if self.template is not None:
            obj["template"] = self.template.to_json()
        return obj

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "signature" not in obj:
            raise TheoryError("theory must be an object with 'signature' and 'axioms'")
        sig = Signature.from_json(obj["signature"])
        template = None
        if "template" in obj:
            template = FinStructure.from_json(obj["template"])
        return cls.parse(sig, obj.get("axioms", []), template)


def load_theory(path):
    with open(path) as fh:
        return HuTheory.from_json(json.load(fh))


def is_model(m, t):
    if m.signature != t.signature:
        raise TheoryError("structure and theory have different signatures")
    if t.template is not None:
        return hom_exists(m, t.template)
    return not any(hom_exists(f, m) for f in t.forbidden())


def violated_axiom(m, t):
    """First axiom false in ``m`` (as text), or ``None``."""
    for ax in t.axioms:
        for pp in pp_normal_form(ax.forbidden(), ()):
            if holds_pp(m, pp, ()):
                return str(ax)
    return None


# ---------------------------------------------------------------------------
# model enumeration


def enumerate_models(t, n, min_size=1):
    """Models with every sort of size ``min_size..n``, one per isomorphism class.

    Ordered by total size, then by size vector, then by discovery order of a
    deterministic include/exclude search over the possible facts.
    """
    sig = t.signature
    size_vectors = list(itertools.product(range(min_size, n + 1), repeat=len(sig.sorts)))
    size_vectors.sort(key=lambda v: (sum(v), v))
    seen = set()
    out = []
    for vec in size_vectors:
        universe = dict(zip(sig.sorts, vec))
        slots = [
            (name, row)
            for name, arity in sig.relations
            for row in itertools.product(*(range(universe[s]) for s in arity))
        ]
        for m in _extend(t, universe, slots, 0, {name: [] for name in sig.names}):
            code = canonical_form(m)
            if code not in seen:
                seen.add(code)
                out.append(m)
    return out


def _extend(t, universe, slots, i, tables):
    if i == len(slots):
        yield FinStructure(t.signature, universe, tables)
        return
    name, row = slots[i]
    tables[name].append(row)
    m = FinStructure(t.signature, universe, tables)
    if is_model(m, t):
        yield from _extend(t, universe, slots, i + 1, tables)
    tables[name].pop()
    yield from _extend(t, universe, slots, i + 1, tables)


# ---------------------------------------------------------------------------
# positive closedness


@dataclass(frozen=True)
class PcWitness:
    formula: object
    tuple: SortedTuple
    counter_model: FinStructure
    hom: object

    def describe(self):
        img = list(self.hom.apply(self.tuple).elems)
        size = self.counter_model.size()
        return (
            f"{self.formula} fails at {list(self.tuple.elems)} but holds at its image {img}"
            f" in a continuation with {size} element{'s' if size != 1 else ''}"
        )


def _ordered_map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def pc_check(m, t, n, models=None, jobs=1):
    """Bounded test that ``m`` is positively closed in ``t``.

    ``"no"`` comes with a pp witness and is always correct.  ``"yes"`` is
    only issued when ``n >= |m| + s`` (``s`` the largest forbidden structure)
    and every model of size at most ``n`` continues into a model no larger
    than ``m``; otherwise the answer is ``"unknown"``.  With a template the
    answer is exact.
    """
    if not is_model(m, t):
        raise TheoryError("structure is not a model of the theory")
    if t.template is not None:
        for h in find_hom(m, t.template, mode="all"):
            w = immersion_witness(h)
            if w is not None:
                return Verdict("no", witness=PcWitness(w.formula, w.tuple, t.template, h))
        return Verdict("yes", detail={"exact": True})
    if models is None:
        models = enumerate_models(t, n)

    def first_failure(N):
        for h in find_hom(m, N, mode="all"):
            w = immersion_witness(h)
            if w is not None:
                return PcWitness(w.formula, w.tuple, N, h)
        return None

    for w in _ordered_map(first_failure, models, jobs):
        if w is not None:
            return Verdict("no", witness=w, bound=n)
    need = m.size() + t.max_forbidden_size()
    small = [N for N in models if N.size() <= m.size()] + [m]
    bounded = all(any(hom_exists(N, W) for W in small) for N in models)
    detail = {"required_bound": need, "window_bounded": bounded, "models_checked": len(models)}
    if n >= need and bounded:
        return Verdict("yes", bound=n, detail=detail)
    return Verdict("unknown", bound=n, detail=detail)


def find_universal(t, n, jobs=1):
    """Search the models of size at most ``n`` for the universal pc model.

    A candidate must be a core (every endomorphism is an automorphism),
    receive a homomorphism from every enumerated model, and pass
    :func:`pc_check`.  With a template the answer is the core of the
    template, which is exact.
    """
    if t.template is not None:
        core, _ = core_of_structure(t.template, certify_bound=0)
        return Verdict("yes", value=core, detail={"exact": True})
    models = enumerate_models(t, n)
    for u in models:
        if not is_core(u):
            continue
        if not all(hom_exists(N, u) for N in models):
            continue
        v = pc_check(u, t, n, models=models, jobs=jobs)
        if v.yes:
            return Verdict("yes", value=u, bound=n, detail=dict(v.detail, models=len(models)))
    return Verdict("unknown", bound=n, detail={"models": len(models)})


def pc_survey(t, n, jobs=1):
    """``[(model, verdict)]`` for every model of size at most ``n``."""
    models = enumerate_models(t, n)
    return [(m, pc_check(m, t, n, models=models, jobs=jobs)) for m in models]


# ---------------------------------------------------------------------------
# definable inequality


def find_inequality_definition(u, pool):
    """Per sort, a disjunction of pool formulas defining ``x != y`` in ``u``.

    Pool formulas in two free variables of the sort are scanned in pool
    order; one is kept if it has no solution on the diagonal and covers a
    pair not yet covered.  Raises :class:`InequalityNotDefinable` naming an
    uncovered pair when the pool runs out.
    """
    out = {}
    for s in u.signature.sorts:
        n = u.universe[s]
        todo = {(a, b) for a in range(n) for b in range(n) if a != b}
        chosen = []
        for phi in pool.formulas((s, s)):
            if not todo:
                break
            sols = solution_set(u, phi)
            if any(a == b for a, b in sols):
                continue
            if sols & todo:
                chosen.append(phi)
                todo -= sols
        if todo:
            raise InequalityNotDefinable(s, min(todo))
        out[s] = Or(tuple(p.to_formula() for p in chosen))
    return out


# ---------------------------------------------------------------------------
# joint continuation


def _partitions(n):
    """Restricted growth strings of length ``n``."""
    if n == 0:
        yield ()
        return

    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for c in range(top + 2):
            prefix.append(c)
            yield from rec(prefix, max(top, c))
            prefix.pop()

    yield from rec([0], 0)


def joint_continuation(a, b, t):
    """A model receiving homomorphisms from both ``a`` and ``b``, or ``None``.

    Any joint continuation contains a homomorphic image of ``a ⊔ b``, and
    models are closed under taking such images with fewer facts, so trying
    every quotient of the disjoint union decides the question exactly.
    """
    d = disjoint_union(a, b)
    if is_model(d, t):
        return d
    sorts = d.signature.sorts
    per_sort = [list(_partitions(d.universe[s])) for s in sorts]
    for choice in itertools.product(*per_sort):
        classes = {}
        for s, rgs in zip(sorts, choice):
            for e, c in enumerate(rgs):
                classes[(s, e)] = c
        q = quotient(d, classes)
        if is_model(q, t):
            return q
    return None


def jcp_check(t, n):
    """Joint continuation for every pair of models of size at most ``n``."""
    if t.template is not None:
        return Verdict("yes", value=t.template, detail={"exact": True})
    models = enumerate_models(t, n)
    for i, a in enumerate(models):
        for b in models[i:]:
            if joint_continuation(a, b, t) is None:
                sa = canonical_query(a, SortedTuple((), ()))
                sb = canonical_query(b, SortedTuple((), ()))
                return Verdict("no", witness=(a, b, sa, sb), bound=n)
    return Verdict("yes", bound=n, detail={"models": len(models)})


# ---------------------------------------------------------------------------
# extracted theories and Hausdorff probe


def pu_consequences(m, pool):
    """h-universal sentences from the pool's closed formulas that are false in ``m``."""
    axioms = []
    seen = set()
    for pp in pool.formulas(()):
        if holds_pp(m, pp, ()):
            continue
        q, _ = structure_of_pp(pp, m.signature)
        c, _ = core_of_structure(q, certify_bound=0)
        key = canonical_form(c)
        if key in seen:
            continue
        seen.add(key)
        axioms.append(hu_forbidding(pp))
    return HuTheory(m.signature, axioms)


def theory_of(m, pool):
    """The full h-universal theory of ``m`` with a finite axiom fragment."""
    frag = pu_consequences(m, pool)
    return HuTheory(m.signature, frag.axioms, template=m)


def hausdorff_probe(u, pool, arity=1):
    """For each pair of distinct types over the empty set, look for positive
    formulas ``phi``, ``psi`` (disjunctions of pool formulas) with
    ``phi | psi`` valid in ``u``, ``phi`` outside the first type and ``psi``
    outside the second.

    The largest candidate for ``phi`` is the disjunction of every pool
    formula missing from the first type, so the search is exact for the
    pool.  The reported disjunctions keep only the disjuncts needed.
    """
    from .typespace import build_typespace

    ts = build_typespace(u, {}, arity)
    found = []
    missing = []
    for x in ts.sorts:
        pts = ts.points[x]
        cands = [(phi, solution_set(u, phi)) for phi in pool.formulas(x)]
        full = {tuple(t) for t in u.tuples(x)}
        for i, p in enumerate(pts):
            for j in range(i + 1, len(pts)):
                q = pts[j]
                outside_p = [(f, s) for f, s in cands if p.rep.elems not in s]
                outside_q = [(f, s) for f, s in cands if q.rep.elems not in s]
                cover_p = set().union(*(s for _, s in outside_p))
                cover_q = set().union(*(s for _, s in outside_q))
                rec = (x, p.rep.elems, q.rep.elems)
                if cover_p | cover_q != full:
                    missing.append(rec)
                    continue
                phi = _greedy_cover(outside_p, full - cover_q)
                rest = full - set().union(*(cands_s for _, cands_s in phi))
                psi = _greedy_cover(outside_q, rest)
                found.append(rec + (_disjunction(phi), _disjunction(psi)))
    status = "yes" if not missing else "unknown"
    return Verdict(status, value=found, witness=missing or None)


def _greedy_cover(cands, target):
    chosen = []
    todo = set(target)
    for f, s in cands:
        if not todo:
            break
        if s & todo:
            chosen.append((f, s))
            todo -= s
    return chosen


def _disjunction(chosen):
    parts = tuple(f.to_formula() for f, _ in chosen)
    return parts[0] if len(parts) == 1 else Or(parts)
