"""Type spaces over a base inside a finite universal model.

For a universal model ``u`` and a base set ``B`` of its elements, two tuples
have the same type over ``B`` when each is sent to the other by an
endomorphism of ``u`` fixing ``B`` pointwise.  A type space collects these
classes for every tuple sort of length at most ``k``; each class is
represented by its lexicographically least tuple.

Relations on a type space come from descriptors ``(phi_0..phi_{n-1}; alpha)``:
the relation holds of ``(p_0..p_{n-1})`` when for every parameter tuple ``c``
in ``alpha(B)`` some ``phi_i(x, c)`` belongs to ``p_i``.  Formula membership
is evaluated on class representatives, and per formula it is packed into one
bit mask over the parameter tuples, so relation tables reduce to bit
operations.
"""

import itertools
from dataclasses import dataclass
from typing import NamedTuple

from .evaluation import holds_tuple, solution_set
from .formula import TRUE, And, Eq, Or, Var, free_vars, substitute, to_text
from .hom import hom_exists, iter_homs
from .structure import FinStructure, Signature, SortedTuple


class TypeSpaceError(ValueError):
    pass


class PoolBudgetExceeded(TypeSpaceError):
    pass


class TypePoint(NamedTuple):
    sort: tuple
    index: int
    rep: SortedTuple


def sort_name(x):
    return "[" + ",".join(x) + "]"


def _normalise_base(u, base):
    if base is None:
        base = {s: range(n) for s, n in u.universe.items()}
    if not isinstance(base, dict):
        grouped = {}
        for s, e in base:
            grouped.setdefault(s, set()).add(e)
        base = grouped
    out = {}
    for s in u.signature.sorts:
        ids = sorted(set(base.get(s, ())))
        for e in ids:
            if not 0 <= e < u.universe[s]:
                raise TypeSpaceError(f"base element {e} out of range for sort {s!r}")
        out[s] = ids
    extra = set(base) - set(u.signature.sorts)
    if extra:
        raise TypeSpaceError(f"base names unknown sort {sorted(extra)[0]!r}")
    return out


def base_is_immersed(u, base):
    """True when the induced substructure on ``base`` is a retract of ``u``
    by a retraction fixing it, i.e. the inclusion is an immersion."""
    base = _normalise_base(u, base)
    sub, new = u.induced(base)
    pin = {(s, e): new[(s, e)] for s in base for e in base[s]}
    return hom_exists(u, sub, pin=pin)


def type_equal(u, base, a, a2):
    """Same type over ``base``: base-fixing endomorphisms both ways."""
    base = _normalise_base(u, base)
    if a.sorts != a2.sorts:
        return False
    fix = {(s, e): e for s in base for e in base[s]}

    def reach(x, y):
        pin = dict(fix)
        for s, e, f in zip(x.sorts, x.elems, y.elems):
            if pin.get((s, e), f) != f:
                return False
            pin[(s, e)] = f
        return hom_exists(u, u, pin=pin)

    return reach(a, a2) and reach(a2, a)


class TypeSpace:
    """Types of tuples of length ``1..arity`` over ``base`` realised in ``u``."""

    def __init__(self, u, base, arity, sorts, points, index, group_order):
        self.u = u
        self.base = base
        self.arity = arity
        self.sorts = sorts
        self.points = points
        self._index = index
        self.group_order = group_order
        self._masks = {}
        self._base_tuples = {}

    def __repr__(self):
        sizes = ", ".join(f"{sort_name(x)}:{len(self.points[x])}" for x in self.sorts)
        return f"TypeSpace({sizes})"

    def size(self, x=None):
        if x is None:
            return sum(len(p) for p in self.points.values())
        return len(self.points[tuple(x)])

    def point_of(self, sorts, elems):
        sorts, elems = tuple(sorts), tuple(elems)
        try:
            return self.points[sorts][self._index[(sorts, elems)]]
        except KeyError:
            raise TypeSpaceError(f"no type for tuple {elems} of sort {sorts}") from None

    def iota(self, s, e):
        """The type of the single element ``e``."""
        return self.point_of((s,), (e,))

    def base_tuples(self, sorts):
        sorts = tuple(sorts)
        if sorts not in self._base_tuples:
            self._base_tuples[sorts] = list(itertools.product(*(self.base[s] for s in sorts)))
        return self._base_tuples[sorts]

    # formula membership --------------------------------------------------

    def mask(self, phi, xvars, params):
        """Per point of the sort of ``xvars``: bit mask of base parameter
        tuples ``c`` with ``phi(rep, c)`` true."""
        key = (phi, tuple(xvars), tuple(params))
        if key not in self._masks:
            x = tuple(v.sort for v in xvars)
            sols = solution_set(self.u, phi, tuple(xvars) + tuple(params))
            cs = self.base_tuples(v.sort for v in params)
            out = []
            for p in self.points[x]:
                bits = 0
                for j, c in enumerate(cs):
                    if p.rep.elems + c in sols:
                        bits |= 1 << j
                out.append(bits)
            self._masks[key] = tuple(out)
        return self._masks[key]

    def alpha_mask(self, alpha, params):
        key = ("alpha", alpha, tuple(params))
        if key not in self._masks:
            sols = solution_set(self.u, alpha, tuple(params))
            bits = 0
            for j, c in enumerate(self.base_tuples(v.sort for v in params)):
                if c in sols:
                    bits |= 1 << j
            self._masks[key] = bits
        return self._masks[key]

    @property
    def param_base_sorts(self):
        return self.u.signature.sorts

    def table(self, desc):
        return d_relation(self, desc)

    def point_labels(self, x):
        return [list(p.rep.elems) for p in self.points[x]]


def build_typespace(u, base, arity, require_immersed_base=False):
    """Quotient of ``u``-tuples of length ``1..arity`` by type over ``base``.

    The classes are the orbits of the group of base-fixing endomorphisms;
    for a universal model every such endomorphism is an automorphism, and a
    :class:`TypeSpaceError` is raised if one is not.
    """
    if arity < 1:
        raise TypeSpaceError("arity must be at least 1")
    base = _normalise_base(u, base)
    if require_immersed_base and not base_is_immersed(u, base):
        raise TypeSpaceError("base is not immersed in the model")
    fix = {(s, e): e for s in base for e in base[s]}
    group = []
    for h in iter_homs(u, u, pin=fix):
        if not h.is_injective():
            raise TypeSpaceError(
                "the model has a non-injective endomorphism fixing the base; "
                "type spaces need a universal model"
            )
        group.append(h)
    sorts = []
    for n in range(1, arity + 1):
        sorts.extend(itertools.product(u.signature.sorts, repeat=n))
    points = {}
    index = {}
    for x in sorts:
        pts = []
        for t in u.tuples(x):
            if (x, t) in index:
                continue
            i = len(pts)
            pts.append(TypePoint(x, i, SortedTuple(x, t)))
            for g in group:
                index[(x, tuple(g(s, e) for s, e in zip(x, t)))] = i
        points[x] = pts
    return TypeSpace(u, base, arity, sorts, points, index, len(group))


def formula_in_type(ts, phi, params, p, free=None):
    """``phi(x, c) ∈ p`` for parameters ``c`` from the base."""
    params = tuple(params)
    free = tuple(free) if free is not None else free_vars(phi)
    n = len(p.rep.elems)
    for v, c in zip(free[n:], params):
        if c not in ts.base[v.sort]:
            raise TypeSpaceError(f"parameter {c} is not in the base")
    return holds_tuple(ts.u, phi, p.rep.elems + params, free)


def project(ts, p, positions):
    """Restriction of the type ``p`` to the variables at ``positions``."""
    positions = tuple(positions)
    if not positions or any(not 0 <= i < len(p.sort) for i in positions):
        raise TypeSpaceError(f"bad projection positions {positions}")
    return ts.point_of(tuple(p.sort[i] for i in positions), tuple(p.rep.elems[i] for i in positions))


def restrict(big, small):
    """Restriction map from types over a base to types over a smaller base.

    Both spaces must live in the same model; returns ``{sort: tuple}``
    sending point indices of ``big`` to point indices of ``small``.
    """
    if big.u is not small.u and big.u != small.u:
        raise TypeSpaceError("restriction needs type spaces in the same model")
    for s in small.base:
        if not set(small.base[s]) <= set(big.base[s]):
            raise TypeSpaceError("the smaller base is not contained in the larger one")
    if small.arity < big.arity:
        raise TypeSpaceError("the smaller base needs at least the same arity")
    return {
        x: tuple(small.point_of(x, p.rep.elems).index for p in big.points[x]) for x in big.sorts
    }


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class Descriptor:
    """``phis[i]`` has free variables ``xvars[i] + params``; ``alpha`` has ``params``."""

    phis: tuple
    xvars: tuple
    params: tuple
    alpha: object

    @property
    def arg_sorts(self):
        return tuple(tuple(v.sort for v in xs) for xs in self.xvars)

    def to_json(self):
        return {
            "phis": [to_text(p) for p in self.phis],
            "xvars": [[v.name for v in xs] for xs in self.xvars],
            "params": [v.name for v in self.params],
            "alpha": to_text(self.alpha),
        }

    def __str__(self):
        return f"[{'; '.join(to_text(p) for p in self.phis)} / {to_text(self.alpha)}]"


def descriptor(signature, phis, alpha, xvars, params):
    """Build a descriptor from text; ``xvars``/``params`` name the variables."""
    from .formula import parse_positive

    def sorted_vars(names, formula_list):
        out = []
        for name in names:
            found = None
            for f in formula_list:
                for v in free_vars(f):
                    if v.name == name:
                        found = v
            if found is None:
                if len(signature.sorts) != 1:
                    raise TypeSpaceError(f"cannot infer the sort of {name!r}")
                found = Var(name, signature.sorts[0])
            out.append(found)
        return tuple(out)

    fs = [parse_positive(p, signature) for p in phis]
    a = parse_positive(alpha, signature)
    ps = sorted_vars(params, fs + [a])
    xs = tuple(sorted_vars(names, [f]) for names, f in zip(xvars, fs))
    return Descriptor(tuple(fs), xs, ps, a)


def _combos(sizes):
    return itertools.product(*(range(n) for n in sizes))


def d_relation(ts, desc):
    """Table of the descriptor on ``ts`` as a set of point-index tuples."""
    amask = ts.alpha_mask(desc.alpha, desc.params)
    masks = [ts.mask(f, xs, desc.params) for f, xs in zip(desc.phis, desc.xvars)]
    return _table_from_masks(masks, amask, covering=True)


def _table_from_masks(masks, amask, covering):
    """``covering``: OR of masks contains ``amask``.  Otherwise: AND of masks
    is disjoint from ``amask``."""
    out = set()
    if covering:

        def rec(i, rem, prefix):
            if i == len(masks):
                if rem == 0:
                    out.add(tuple(prefix))
                return
            for p, m in enumerate(masks[i]):
                rest = rem & ~m
                if i == len(masks) - 1 and rest:
                    continue
                prefix.append(p)
                rec(i + 1, rest, prefix)
                prefix.pop()

        rec(0, amask, [])
    else:

        def rec(i, acc, prefix):
            if i == len(masks):
                if acc & amask == 0:
                    out.add(tuple(prefix))
                return
            for p, m in enumerate(masks[i]):
                prefix.append(p)
                rec(i + 1, acc & m, prefix)
                prefix.pop()

        rec(0, -1, [])
    return frozenset(out)


def _rename_pool_formula(pp, n_x):
    """Pool formula over ``x0..`` -> (formula, xvars, params) with the
    variables past the first ``n_x`` renamed to parameters ``c0..``."""
    free = pp.vars_free
    phi = pp.to_formula()
    xv = free[:n_x]
    ren = {v: Var(f"c{i}", v.sort) for i, v in enumerate(free[n_x:])}
    if ren:
        phi = substitute(phi, ren)
    return phi, tuple(xv), tuple(ren.values())


def _canonical_params(sorts):
    return tuple(Var(f"c{i}", s) for i, s in enumerate(sorts))


def _param_sort_tuples(space, max_params):
    for m in range(max_params + 1):
        yield from itertools.product(space.param_base_sorts, repeat=m)


def generate_descriptors(space, pool, max_args=2, max_params=1, max_descriptors=200000,
                         dedupe="table"):
    """Descriptors from the pool, deduplicated by their table on ``space``.

    ``dedupe="formula"`` only drops pool formulas with the same extension on
    ``space`` and keeps every combination of the rest; ``dedupe="none"``
    returns every syntactic candidate.  Property checks use these.

    Argument sort lists are non-decreasing, of length at most ``max_args``
    and total arity at most ``max(space.arity, max_args)``.  Each ``phi`` is
    a pool formula whose first free variables range over its argument and
    whose remaining ones are the shared parameters.  Raises
    :class:`PoolBudgetExceeded` if more than ``max_descriptors`` candidates
    would have to be tabulated.
    """
    if dedupe not in ("table", "formula", "none"):
        raise ValueError(f"unknown dedupe mode {dedupe!r}")
    by_mask = dedupe != "none"
    sorts = list(space.sorts)
    arity_cap = max(space.arity, max_args)
    arg_lists = []
    for n in range(1, max_args + 1):
        for combo in itertools.combinations_with_replacement(range(len(sorts)), n):
            xs = tuple(sorts[i] for i in combo)
            if sum(len(x) for x in xs) <= arity_cap:
                arg_lists.append(xs)
    plan = []
    total = 0
    for psorts in _param_sort_tuples(space, max_params):
        params = _canonical_params(psorts)
        # the trivial condition is always available, even without closed pool formulas
        alphas = {space.alpha_mask(TRUE, params): TRUE}
        for i, pp in enumerate(pool.formulas(psorts)):
            a, _, _ = _rename_pool_formula(pp, 0)
            alphas.setdefault(space.alpha_mask(a, params) if by_mask else (i,), a)
        phis = {}
        for x in sorts:
            seen = {}
            for i, pp in enumerate(pool.formulas(tuple(x) + tuple(psorts))):
                f, xv, _ = _rename_pool_formula(pp, len(x))
                seen.setdefault(space.mask(f, xv, params) if by_mask else (i,), (f, xv))
            phis[x] = list(seen.values())
        for xs in arg_lists:
            count = len(alphas)
            for x in xs:
                count *= len(phis[x])
            total += count
            plan.append((xs, params, list(alphas.values()), phis))
    if total > max_descriptors:
        raise PoolBudgetExceeded(
            f"pool yields {total} descriptor candidates, above the limit of {max_descriptors}"
        )
    out = []
    seen = set()
    for xs, params, alphas, phis in plan:
        lists = [phis[x] for x in xs]
        for alpha in alphas:
            for choice in itertools.product(*(range(len(lst)) for lst in lists)):
                if any(
                    xs[i] == xs[i + 1] and choice[i] > choice[i + 1] for i in range(len(xs) - 1)
                ):
                    continue
                picked = [lists[i][j] for i, j in enumerate(choice)]
                desc = Descriptor(
                    tuple(f for f, _ in picked), tuple(xv for _, xv in picked), params, alpha
                )
                if dedupe == "table":
                    key = (xs, space.table(desc))
                    if key in seen:
                        continue
                    seen.add(key)
                out.append(desc)
    return out


# ---------------------------------------------------------------------------
# pattern structures


class PatternStructure:
    """A finite structure on the points of a space, with a manifest
    explaining every relation symbol."""

    def __init__(self, space, structure, relations):
        self.space = space
        self.structure = structure
        self.relations = relations  # list of (name, kind, payload)

    def __repr__(self):
        return f"PatternStructure({self.structure!r}, {len(self.relations)} relations)"

    def sort_of(self, x):
        return sort_name(x)

    def element(self, p):
        return (sort_name(p.sort), p.index)

    def manifest(self):
        sorts = {
            sort_name(x): {"tuple_sorts": list(x), "points": self.space.point_labels(x)}
            for x in self.space.sorts
        }
        rels = []
        for name, kind, payload in self.relations:
            entry = {"name": name, "kind": kind}
            if kind == "pi":
                src, positions = payload
                entry.update(
                    {
                        "from": sort_name(src),
                        "to": sort_name(tuple(src[i] for i in positions)),
                        "positions": list(positions),
                    }
                )
            else:
                entry["args"] = [sort_name(x) for x in payload.arg_sorts]
                entry.update(payload.to_json())
            rels.append(entry)
        return {"sorts": sorts, "relations": rels}


def _assemble(space, descriptors, with_pi, kind):
    rel_specs = []
    tables = {}
    for i, desc in enumerate(descriptors):
        name = f"{kind}{i}"
        rel_specs.append((name, tuple(sort_name(x) for x in desc.arg_sorts)))
        tables[name] = space.table(desc)
    relations = [(f"{kind}{i}", kind, d) for i, d in enumerate(descriptors)]
    if with_pi:
        j = 0
        for x in space.sorts:
            for r in range(1, len(x)):
                for positions in itertools.combinations(range(len(x)), r):
                    name = f"pi{j}"
                    j += 1
                    x2 = tuple(x[i] for i in positions)
                    rel_specs.append((name, (sort_name(x), sort_name(x2))))
                    tables[name] = {
                        (p.index, project(space, p, positions).index) for p in space.points[x]
                    }
                    relations.append((name, "pi", (x, positions)))
    sig = Signature(tuple(sort_name(x) for x in space.sorts), tuple(rel_specs))
    universe = {sort_name(x): len(space.points[x]) for x in space.sorts}
    return PatternStructure(space, FinStructure(sig, universe, tables), relations)


def pattern_structure(ts, pool, with_pi=False, descriptors=None, max_args=2, max_params=1,
                      max_descriptors=200000):
    """Finite structure on the points of ``ts`` interpreting pool descriptors,
    plus the graphs of the projections when ``with_pi`` is set."""
    if descriptors is None:
        descriptors = generate_descriptors(ts, pool, max_args, max_params, max_descriptors)
    return _assemble(ts, descriptors, with_pi, "D")


# ---------------------------------------------------------------------------
# constructions on descriptors


def merge_descriptor(desc, groups):
    """Collapse argument positions: ``groups`` is a list of index lists, each
    of one sort; the result has one argument per group whose formula is the
    disjunction of the group's formulas (over the first member's variables)."""
    phis = []
    xvars = []
    for g in groups:
        first = desc.xvars[g[0]]
        parts = []
        for i in g:
            if desc.arg_sorts[i] != desc.arg_sorts[g[0]]:
                raise TypeSpaceError("merged positions must share a sort")
            parts.append(substitute(desc.phis[i], dict(zip(desc.xvars[i], first))))
        phis.append(parts[0] if len(parts) == 1 else Or(tuple(parts)))
        xvars.append(first)
    return Descriptor(tuple(phis), tuple(xvars), desc.params, desc.alpha)


def conjoin_descriptors(d1, d2, eps, eps_vars):
    """A single descriptor equivalent to the conjunction of ``d1`` and ``d2``.

    ``eps`` is a pp formula in ``eps_vars = (u, v)`` that never holds with
    ``u = v`` but has a solution; with fresh parameters ``z1, z2``::

        theta_i = (phi_i & z1=z2) | (psi_i & eps(z1, z2))
        delta   = (alpha & z1=z2) | (beta & eps(z1, z2))
    """
    if d1.arg_sorts != d2.arg_sorts:
        raise TypeSpaceError("conjoined descriptors need the same argument sorts")
    taken = set()
    for d in (d1, d2):
        for f in d.phis + (d.alpha,):
            taken |= {v.name for v in free_vars(f)}
    n1 = len(d1.params)
    p1 = tuple(Var(f"c{i}", v.sort) for i, v in enumerate(d1.params))
    p2 = tuple(Var(f"c{n1 + i}", v.sort) for i, v in enumerate(d2.params))
    s = eps_vars[0].sort
    z1 = Var(f"c{n1 + len(p2)}", s)
    z2 = Var(f"c{n1 + len(p2) + 1}", s)
    e = substitute(eps, {eps_vars[0]: z1, eps_vars[1]: z2})
    same = Eq(z1, z2)
    thetas = []
    for f1, x1, f2, x2 in zip(d1.phis, d1.xvars, d2.phis, d2.xvars):
        a = substitute(f1, dict(zip(d1.params, p1)))
        b = substitute(f2, dict(list(zip(d2.params, p2)) + list(zip(x2, x1))))
        thetas.append(Or((And((a, same)), And((b, e)))))
    alpha = substitute(d1.alpha, dict(zip(d1.params, p1)))
    beta = substitute(d2.alpha, dict(zip(d2.params, p2)))
    delta = Or((And((alpha, same)), And((beta, e))))
    return Descriptor(tuple(thetas), d1.xvars, p1 + p2 + (z1, z2), delta)


def separating_formula(u, sort, pool):
    """A pool formula ``eps(x0, x1)`` with a solution in ``u`` but none on the
    diagonal, or ``None``."""
    for pp in pool.formulas((sort, sort)):
        sols = solution_set(u, pp)
        if sols and all(a != b for a, b in sols):
            return pp.to_formula(), pp.vars_free
    return None
