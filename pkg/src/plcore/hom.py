"""Homomorphisms between finite structures.

The search is plain backtracking over the source elements in ascending order
with forward checking: after each assignment every fact touching the new
element narrows the candidate sets of the still unassigned elements of that
fact.  Values are tried in ascending order, so ``mode="all"`` lists maps in
lexicographic order of their value vectors.
"""

import itertools
from dataclasses import dataclass

from .structure import SortedTuple, StructureError, canonical_query


class Hom:
    """A sort-preserving map given as ``{sort: tuple_of_images}``."""

    __slots__ = ("source", "target", "map")

    def __init__(self, source, target, mapping):
        self.source = source
        self.target = target
        self.map = {s: tuple(mapping[s]) for s in source.signature.sorts}

    def __call__(self, sort, e):
        return self.map[sort][e]

    def __eq__(self, other):
        return isinstance(other, Hom) and self.map == other.map

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        body = "; ".join(f"{s}: {list(v)}" for s, v in self.map.items())
        return f"Hom({body})"

    def key(self):
        return tuple(self.map[s] for s in self.source.signature.sorts)

    def apply(self, tup):
        return SortedTuple(tup.sorts, tuple(self.map[s][e] for s, e in tup.pairs()))

    def after(self, first):
        """``self ∘ first``."""
        return Hom(
            first.source,
            self.target,
            {s: tuple(self.map[s][v] for v in first.map[s]) for s in first.map},
        )

    def is_injective(self):
        return all(len(set(v)) == len(v) for v in self.map.values())

    def is_surjective(self):
        return all(set(self.map[s]) == set(range(self.target.universe[s])) for s in self.map)

    def image(self):
        return {s: sorted(set(v)) for s, v in self.map.items()}

    def inverse(self):
        inv = {}
        for s, v in self.map.items():
            row = [None] * self.target.universe[s]
            for i, j in enumerate(v):
                row[j] = i
            inv[s] = tuple(row)
        return Hom(self.target, self.source, inv)

    def is_homomorphism(self):
        for name, arity in self.source.signature.relations:
            tgt = self.target.tables[name]
            for row in self.source.tables[name]:
                if tuple(self.map[s][v] for s, v in zip(arity, row)) not in tgt:
                    return False
        return True

    def to_json(self):
        return {s: list(v) for s, v in self.map.items()}


def identity(a):
    return Hom(a, a, {s: tuple(range(n)) for s, n in a.universe.items()})


def _check_signatures(a, b):
    if a.signature != b.signature:
        raise StructureError("homomorphism search needs structures over the same signature")


def iter_homs(a, b, pin=None, injective=False, avoid=None, domains=None):
    """Generate homomorphisms ``a -> b``.

    ``pin`` maps source elements ``(sort, id)`` to forced target ids,
    ``avoid`` is a set of target elements ``(sort, id)`` that may not be hit,
    ``domains`` optionally restricts individual source elements.
    """
    _check_signatures(a, b)
    sig = a.signature
    for name, arity in sig.relations:
        if not arity and a.tables[name] and not b.tables[name]:
            return
    elems = list(a.elements())
    n = len(elems)
    pos_of = {e: i for i, e in enumerate(elems)}
    sort_of = [s for s, _ in elems]
    avoid = avoid or ()
    dom = []
    for s, _ in elems:
        d = set(range(b.universe[s]))
        d.difference_update(v for (t, v) in avoid if t == s)
        dom.append(d)
    for e, v in (pin or {}).items():
        if e not in pos_of:
            raise StructureError(f"pinned element {e} is not in the source")
        dom[pos_of[e]] &= {v}
    for e, vs in (domains or {}).items():
        dom[pos_of[e]] &= set(vs)
    cons = []
    by_var = [[] for _ in range(n)]
    for name, arity in sig.relations:
        if not arity:
            continue
        rows = a.tables[name]
        if not rows:
            continue
        btab = b.tables[name]
        if not btab:
            return
        proj = [set() for _ in arity]
        for row in btab:
            for p, v in enumerate(row):
                proj[p].add(v)
        for row in rows:
            vs = tuple(pos_of[(s, v)] for s, v in zip(arity, row))
            for p, x in enumerate(vs):
                dom[x] &= proj[p]
            ci = len(cons)
            cons.append((name, vs))
            for x in set(vs):
                by_var[x].append(ci)
    if any(not d for d in dom):
        return
    index = b.position_index()
    tables = b.tables
    assign = [None] * n
    used = {s: set() for s in sig.sorts} if injective else None

    def propagate(x):
        changed = []
        for ci in by_var[x]:
            name, vs = cons[ci]
            if all(assign[y] is not None for y in vs):
                if tuple(assign[y] for y in vs) not in tables[name]:
                    return False, changed
                continue
            best = None
            for p, y in enumerate(vs):
                if assign[y] is not None:
                    lst = index.get((name, p, assign[y]), ())
                    if best is None or len(lst) < len(best):
                        best = lst
            if best is None:
                continue
            allowed = {}
            for row in best:
                ok = True
                seen = {}
                for p, y in enumerate(vs):
                    val = row[p]
                    if assign[y] is not None:
                        if assign[y] != val:
                            ok = False
                            break
                    elif y in seen:
                        if seen[y] != val:
                            ok = False
                            break
                    else:
                        if val not in dom[y]:
                            ok = False
                            break
                        seen[y] = val
                if ok:
                    for y, val in seen.items():
                        allowed.setdefault(y, set()).add(val)
            if not allowed and any(assign[y] is None for y in vs):
                return False, changed
            for y in set(vs):
                if assign[y] is None:
                    new = dom[y] & allowed.get(y, set())
                    if not new:
                        return False, changed
                    if len(new) != len(dom[y]):
                        changed.append((y, dom[y]))
                        dom[y] = new
        return True, changed

    def rec(i):
        if i == n:
            yield tuple(assign)
            return
        s = sort_of[i]
        for v in sorted(dom[i]):
            if injective and v in used[s]:
                continue
            assign[i] = v
            if injective:
                used[s].add(v)
            ok, changed = propagate(i)
            if ok:
                yield from rec(i + 1)
            for y, old in reversed(changed):
                dom[y] = old
            if injective:
                used[s].discard(v)
            assign[i] = None

    for vec in rec(0):
        mapping = {s: [] for s in sig.sorts}
        for (s, _), v in zip(elems, vec):
            mapping[s].append(v)
        yield Hom(a, b, mapping)


def find_hom(a, b, pin=None, mode="first", limit=None, **kw):
    """Homomorphisms ``a -> b``.

    ``mode="first"`` returns a list with at most one map, ``"all"`` every map
    (up to ``limit``) and ``"count"`` just the number of maps.
    """
    gen = iter_homs(a, b, pin=pin, **kw)
    if mode == "first":
        return list(itertools.islice(gen, 1))
    if mode == "all":
        return list(itertools.islice(gen, limit) if limit is not None else gen)
    if mode == "count":
        return sum(1 for _ in (itertools.islice(gen, limit) if limit is not None else gen))
    raise ValueError(f"unknown mode {mode!r}")


def hom_exists(a, b, pin=None, **kw):
    return next(iter_homs(a, b, pin=pin, **kw), None) is not None


def naive_homs(a, b):
    """Every homomorphism by trying all maps; used as an oracle."""
    _check_signatures(a, b)
    sorts = a.signature.sorts
    choices = [itertools.product(range(b.universe[s]), repeat=a.universe[s]) for s in sorts]
    out = []
    for combo in itertools.product(*(list(c) for c in choices)):
        h = Hom(a, b, dict(zip(sorts, combo)))
        if h.is_homomorphism():
            out.append(h)
    return out


# ---------------------------------------------------------------------------
# immersions


def retraction(h):
    """A map ``g: target -> source`` with ``g ∘ h = id``, or ``None``."""
    pin = {}
    for s, row in h.map.items():
        for e, img in enumerate(row):
            key = (s, img)
            if key in pin and pin[key] != e:
                return None
            pin[key] = e
    found = find_hom(h.target, h.source, pin=pin)
    return found[0] if found else None


def is_immersion(h):
    """Finite immersion test: ``h`` is an immersion iff it has a retraction."""
    return retraction(h) is not None


@dataclass(frozen=True)
class Witness:
    """A pp formula true of ``image`` in the target but false of ``tuple`` in the source."""

    formula: object
    tuple: SortedTuple
    image: SortedTuple

    def describe(self):
        return f"{self.formula} at {list(self.tuple.elems)}"


def immersion_witness(h):
    """Explain why ``h`` is not an immersion, or return ``None`` if it is one.

    The witness comes from the canonical query of a smallest failing
    substructure of the target, with atoms dropped greedily while it still
    separates the two sides.
    """
    from .evaluation import holds_pp
    from .formula import Eq, PPFormula, Var

    a, b = h.source, h.target
    for s, row in h.map.items():
        seen = {}
        for e, img in enumerate(row):
            if img in seen:
                v0, v1 = Var("x0", s), Var("x1", s)
                phi = PPFormula((v0, v1), (), (Eq(v0, v1),))
                return Witness(phi, SortedTuple((s, s), (seen[img], e)), SortedTuple((s, s), (img, img)))
            seen[img] = e
    if is_immersion(h):
        return None
    src = list(a.elements())
    img = [(s, h(s, e)) for s, e in src]
    marked = set(img)
    keep = {s: set(range(n)) for s, n in b.universe.items()}

    def fails(keep_now):
        sub, new = b.induced(keep_now)
        hh = Hom(a, sub, {s: [new[(s, h(s, e))] for e in range(a.universe[s])] for s in a.universe})
        return not is_immersion(hh)

    for s, e in sorted(b.elements(), reverse=True):
        if (s, e) in marked:
            continue
        trial = {t: set(v) for t, v in keep.items()}
        trial[s].discard(e)
        if fails(trial):
            keep = trial
    sub, new = b.induced(keep)
    marks = SortedTuple(tuple(s for s, _ in img), tuple(new[x] for x in img))
    phi = canonical_query(sub, marks)
    src_tuple = SortedTuple(tuple(s for s, _ in src), tuple(e for _, e in src))
    img_tuple = SortedTuple(marks.sorts, tuple(v for _, v in img))

    def separates(f):
        return holds_pp(b, f, img_tuple.elems) and not holds_pp(a, f, src_tuple.elems)

    atoms = list(phi.atoms)
    i = 0
    while i < len(atoms):
        trial = atoms[:i] + atoms[i + 1 :]
        f = _tidy(PPFormula(phi.vars_free, phi.vars_bound, tuple(trial)))
        if separates(f):
            atoms = trial
        else:
            i += 1
    phi = _tidy(PPFormula(phi.vars_free, phi.vars_bound, tuple(atoms)))
    # keep only the free variables that occur, renamed x0, x1, ...
    used = [v for v in phi.vars_free if any(v in at.vars() for at in phi.atoms)]
    ren = {v: Var(f"x{i}", v.sort) for i, v in enumerate(used)}
    bren = {v: Var(f"y{i}", v.sort) for i, v in enumerate(phi.vars_bound)}
    ren.update(bren)
    from .formula import Atom

    def rn(at):
        if isinstance(at, Eq):
            return Eq(ren[at.left], ren[at.right])
        return Atom(at.rel, tuple(ren[v] for v in at.args))

    idx = [phi.vars_free.index(v) for v in used]
    out = PPFormula(tuple(ren[v] for v in used), tuple(bren.values()), tuple(rn(at) for at in phi.atoms))
    return Witness(
        out,
        SortedTuple(tuple(src_tuple.sorts[i] for i in idx), tuple(src_tuple.elems[i] for i in idx)),
        SortedTuple(tuple(img_tuple.sorts[i] for i in idx), tuple(img_tuple.elems[i] for i in idx)),
    )


def _tidy(phi):
    from .formula import PPFormula

    used = {v for at in phi.atoms for v in at.vars()}
    return PPFormula(phi.vars_free, tuple(v for v in phi.vars_bound if v in used), phi.atoms)


# ---------------------------------------------------------------------------
# cores and automorphisms


def is_core(a, fixed=()):
    """True when every endomorphism fixing ``fixed`` is surjective."""
    pin = {e: e[1] for e in fixed}
    for s, e in a.elements():
        if (s, e) in pin:
            continue
        if hom_exists(a, a, pin=pin, avoid={(s, e)}):
            return False
    return True


def core_with_embedding(a, fixed=(), certify_bound=8):
    """Minimal retract of ``a`` (fixing ``fixed`` pointwise).

    Returns ``(core, retraction, kept)`` where ``kept`` lists, per sort, the
    ids of ``a`` that make up the core (core id ``i`` is ``kept[sort][i]``).
    Elements are eliminated highest index first.
    """
    fixed = set(fixed)
    keep = {s: list(range(n)) for s, n in a.universe.items()}
    r = {e: e for e in a.elements()}
    while True:
        sub, old2new = a.induced(keep)
        new2old = {(s, i): (s, old) for (s, old), i in old2new.items()}
        pin = {(s, old2new[(s, e)]): old2new[(s, e)] for s, e in fixed}
        step = None
        for s, i in sorted(sub.elements(), key=lambda x: (-x[1], x[0])):
            if (s, i) in pin:
                continue
            found = find_hom(sub, sub, pin=pin, avoid={(s, i)})
            if found:
                step = found[0]
                break
        if step is None:
            break
        r = {e: new2old[(t[0], step(t[0], old2new[t]))] for e, t in r.items()}
        keep = {s: sorted(new2old[(s, j)][1] for j in set(step.map[s])) for s in keep}
    core, old2new = a.induced(keep)
    # r restricted to the core is an automorphism of the core; undo it
    sigma = Hom(core, core, {s: [old2new[r[(s, keep[s][i])]] for i in range(len(keep[s]))] for s in keep})
    sigma_inv = sigma.inverse()
    ret = Hom(
        a,
        core,
        {s: [sigma_inv(s, old2new[r[(s, e)]]) for e in range(a.universe[s])] for s in keep},
    )
    if a.size() <= certify_bound and not fixed:
        _certify_minimal(a, core.size())
    return core, ret, keep


def core_of_structure(a, fixed=(), certify_bound=8):
    """``(core, retraction)``; the core is an induced substructure of ``a``."""
    core, ret, _ = core_with_embedding(a, fixed, certify_bound)
    return core, ret


def _certify_minimal(a, core_size):
    elems = list(a.elements())
    for k in range(core_size):
        for subset in itertools.combinations(elems, k):
            keep = {s: [e for t, e in subset if t == s] for s in a.universe}
            sub, new = a.induced(keep)
            pin = {x: new[x] for x in subset}
            if hom_exists(a, sub, pin=pin):
                raise AssertionError(f"retract of size {k} below computed core size {core_size}")


def automorphisms(a, limit=None):
    return find_hom(a, a, mode="all", limit=limit, injective=True)


def isomorphism(a, b):
    """An isomorphism ``a -> b`` or ``None``."""
    if a.signature != b.signature or a.universe != b.universe:
        return None
    if any(len(a.tables[n]) != len(b.tables[n]) for n in a.signature.names):
        return None
    found = find_hom(a, b, injective=True)
    return found[0] if found else None


def is_isomorphic(a, b):
    return isomorphism(a, b) is not None


# ---------------------------------------------------------------------------
# canonical forms


def _refine(a, marks):
    """Isomorphism-invariant colour per element by iterated refinement."""
    sig = a.signature
    sort_index = {s: i for i, s in enumerate(sig.sorts)}
    mark_of = {}
    for k, group in enumerate(marks):
        for p, e in enumerate(group):
            mark_of.setdefault(e, []).append((k, p))
    colour = {e: (sort_index[e[0]], tuple(mark_of.get(e, ()))) for e in a.elements()}
    facts = []
    for name, arity in sig.relations:
        for row in a.tables[name]:
            facts.append((name, tuple(zip(arity, row))))
    incident = {e: [] for e in colour}
    for f in facts:
        for p, e in enumerate(f[1]):
            incident[e].append((f, p))
    while True:
        ranks = {c: i for i, c in enumerate(sorted(set(colour.values())))}
        ranked = {e: ranks[c] for e, c in colour.items()}
        new = {}
        for e in colour:
            sig_e = sorted((f[0], p, tuple(ranked[x] for x in f[1])) for f, p in incident[e])
            new[e] = (ranked[e], tuple(sig_e))
        new_ranks = {c: i for i, c in enumerate(sorted(set(new.values())))}
        new_ranked = {e: new_ranks[c] for e, c in new.items()}
        if len(set(new_ranked.values())) == len(set(ranked.values())):
            return new_ranked
        colour = new_ranked


def canonical_form(a, marks=()):
    """A hashable code equal for two structures iff they are isomorphic.

    ``marks`` is a sequence of element sequences that must be preserved
    position by position (used for pointed structures).
    """
    sig = a.signature
    colour = _refine(a, marks)
    groups = {}
    for e, c in colour.items():
        groups.setdefault((c, e[0]), []).append(e)
    ordered = sorted(groups)
    perms = [list(itertools.permutations(groups[k])) for k in ordered]
    best = None
    for choice in itertools.product(*perms):
        label = {}
        counters = {s: 0 for s in sig.sorts}
        for block in choice:
            for s, e in block:
                label[(s, e)] = counters[s]
                counters[s] += 1
        code = tuple(
            tuple(sorted(tuple(label[(s, v)] for s, v in zip(arity, row)) for row in a.tables[name]))
            for name, arity in sig.relations
        )
        if best is None or code < best:
            best = code
    mark_code = ()
    if marks:
        # marks are individualised by colour, so their labels are fixed
        label = {}
        counters = {s: 0 for s in sig.sorts}
        for k in ordered:
            for s, e in groups[k]:
                label[(s, e)] = counters[s]
                counters[s] += 1
        mark_code = tuple(tuple(label[e] for e in group) for group in marks)
    return (tuple(a.universe[s] for s in sig.sorts), best, mark_code)
