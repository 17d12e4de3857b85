"""Positive Morleyzation of finite structures and the type expansion.

Every first-order formula ``phi(x)`` from a finite pool becomes a relation
symbol interpreted by its solution set.  A map between two structures is
then a homomorphism of the expansions exactly when it preserves the pool
formulas in both directions, provided the pool is closed under negation.

Full first-order formulas only live in this module.  They reuse the
positive AST nodes and add :class:`Not` and :class:`Forall`.
"""

import itertools
from dataclasses import dataclass

from .evaluation import solution_set
from .formula import And, Atom, Eq, Exists, FormulaError, Or, Var, free_vars, parse_positive
from .hom import Hom, automorphisms
from .structure import FinStructure, Signature
from .typespace import PoolBudgetExceeded


@dataclass(frozen=True, repr=False)
class Not:
    body: object

    def __str__(self):
        return fo_text(self)

    def __repr__(self):
        return f"<{fo_text(self)}>"


@dataclass(frozen=True, repr=False)
class Forall:
    vars: tuple
    body: object

    def __str__(self):
        return fo_text(self)

    def __repr__(self):
        return f"<{fo_text(self)}>"


def fo_text(f):
    """Printer for first-order formulas; ``~`` binds tighter than ``&``."""

    def go(f, ctx):
        if isinstance(f, Atom):
            return f"{f.rel}({','.join(v.name for v in f.args)})"
        if isinstance(f, Eq):
            return f"{f.left.name}={f.right.name}"
        if isinstance(f, Not):
            return f"~{go(f.body, 3)}"
        if isinstance(f, (And, Or)):
            if not f.parts:
                return "true" if isinstance(f, And) else "false"
            if len(f.parts) == 1:
                return go(f.parts[0], ctx)
            op, mine = (" & ", 2) if isinstance(f, And) else (" | ", 1)
            s = op.join(go(p, mine) for p in f.parts)
            return f"({s})" if ctx > mine or (ctx == 2 and mine == 1) else s
        if isinstance(f, (Exists, Forall)):
            q = "exists" if isinstance(f, Exists) else "forall"
            s = f"{q} {' '.join(v.name for v in f.vars)}. {go(f.body, 0)}"
            return f"({s})" if ctx else s
        raise TypeError(f"cannot print {f!r}")

    return go(f, 0)


def fo_free_vars(f):
    out = []

    def walk(f, bound):
        if isinstance(f, (Atom, Eq)):
            for v in f.vars():
                if v not in bound and v not in out:
                    out.append(v)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p, bound)
        elif isinstance(f, Not):
            walk(f.body, bound)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body, bound | set(f.vars))
        else:
            raise TypeError(f"not a formula: {f!r}")

    walk(f, frozenset())
    return tuple(out)


def fo_holds(m, f, asg):
    """Tarski truth by exhaustive assignment; ``asg`` maps ``Var`` to ids."""
    if isinstance(f, Atom):
        return tuple(asg[v] for v in f.args) in m.tables[f.rel]
    if isinstance(f, Eq):
        return asg[f.left] == asg[f.right]
    if isinstance(f, Not):
        return not fo_holds(m, f.body, asg)
    if isinstance(f, And):
        return all(fo_holds(m, p, asg) for p in f.parts)
    if isinstance(f, Or):
        return any(fo_holds(m, p, asg) for p in f.parts)
    if isinstance(f, (Exists, Forall)):
        ranges = [range(m.universe[v.sort]) for v in f.vars]
        test = any if isinstance(f, Exists) else all
        return test(
            fo_holds(m, f.body, {**asg, **dict(zip(f.vars, vals))})
            for vals in itertools.product(*ranges)
        )
    raise TypeError(f"not a formula: {f!r}")


def fo_solutions(m, f, free):
    free = tuple(free)
    ranges = [range(m.universe[v.sort]) for v in free]
    return frozenset(
        vals for vals in itertools.product(*ranges) if fo_holds(m, f, dict(zip(free, vals)))
    )


@dataclass(frozen=True)
class FoEntry:
    formula: object
    vars: tuple
    mask: int = 0  # truth values on the reference structures, from the pool algebra

    @property
    def sorts(self):
        return tuple(v.sort for v in self.vars)

    def text(self):
        return fo_text(self.formula)


class _Layout:
    """Bit positions for assignments of a sort tuple across reference structures."""

    def __init__(self, refs, xs):
        self.refs = refs
        self.xs = xs
        self.blocks = []
        off = 0
        for r in refs:
            n = 1
            for s in xs:
                n *= r.universe[s]
            self.blocks.append((off, n))
            off += n
        self.full = (1 << off) - 1

    def assignments(self):
        for r, (off, _) in zip(self.refs, self.blocks):
            for j, vals in enumerate(itertools.product(*(range(r.universe[s]) for s in self.xs))):
                yield r, off + j, vals


def _positions(a, xs):
    vs = a.vars()
    return tuple(int(v.name[1:]) for v in vs)


def _atom_true(ref, a, pos, vals):
    args = tuple(vals[i] for i in pos)
    if isinstance(a, Eq):
        return args[0] == args[1]
    return args in ref.tables[a.rel]


def _quantify(inner, outer, mask, s, exists):
    out = 0
    for (off_o, n_o), (off_i, _), r in zip(outer.blocks, inner.blocks, outer.refs):
        k = r.universe[s]
        block = (1 << k) - 1
        for j in range(n_o):
            bits = (mask >> (off_i + j * k)) & block
            if (bits != 0) if exists else (bits == block):
                out |= 1 << (off_o + j)
    return out


def fo_pool(signature, rank=2, arity=2, references=(), width=2, max_formulas=50000):
    """First-order formulas of quantifier rank ``<= rank`` in ``1..arity`` free
    variables, one per truth table on the reference structures.

    Literals are atoms, equalities and their negations; at rank 0 these are
    combined by conjunction and disjunction of up to ``width`` literals.  A
    rank ``r`` formula is a rank ``r-1`` formula, or a quantified rank ``r-1``
    formula in one more variable, or its negation.  The pool is closed
    under negation up to equivalence on the references.
    """
    refs = tuple(references)
    if not refs:
        raise ValueError("at least one reference structure is needed")
    memo = {}

    def atoms(xs):
        vs = [Var(f"x{i}", s) for i, s in enumerate(xs)]
        out = []
        for name, ar in signature.relations:
            choices = [[v for v in vs if v.sort == s] for s in ar]
            for args in itertools.product(*choices):
                out.append(Atom(name, tuple(args)))
        for a, b in itertools.combinations(vs, 2):
            if a.sort == b.sort:
                out.append(Eq(a, b))
        return out

    def level(r, xs):
        if (r, xs) in memo:
            return memo[(r, xs)]
        lay = _Layout(refs, xs)
        entries = {}

        def add(mask, f):
            if mask not in entries:
                entries[mask] = f
                if len(entries) > max_formulas:
                    raise PoolBudgetExceeded(f"more than {max_formulas} formulas at rank {r}")

        if r == 0:
            add(lay.full, And(()))
            add(0, Or(()))
            lits = []
            for a in atoms(xs):
                mask = 0
                pos = _positions(a, xs)
                for ref, bit, vals in lay.assignments():
                    if _atom_true(ref, a, pos, vals):
                        mask |= 1 << bit
                lits.append((mask, a))
                lits.append((lay.full ^ mask, Not(a)))
            for mask, f in lits:
                add(mask, f)
            if width >= 2:
                for (m1, f1), (m2, f2) in itertools.combinations(lits, 2):
                    add(m1 & m2, And((f1, f2)))
                    add(m1 | m2, Or((f1, f2)))
        else:
            for mask, f in level(r - 1, xs).items():
                add(mask, f)
            for s in signature.sorts:
                ys = xs + (s,)
                v = Var(f"x{len(xs)}", s)
                inner_lay = _Layout(refs, ys)
                quantified = []
                for mask, f in level(r - 1, ys).items():
                    if v not in fo_free_vars(f):
                        continue
                    quantified.append((_quantify(inner_lay, lay, mask, s, True), Exists((v,), f)))
                    quantified.append((_quantify(inner_lay, lay, mask, s, False), Forall((v,), f)))
                for mask, f in quantified:
                    add(mask, f)
                for mask, f in quantified:
                    add(lay.full ^ mask, Not(f))
        memo[(r, xs)] = entries
        return entries

    pool = []
    for a in range(1, arity + 1):
        for xs in itertools.product(signature.sorts, repeat=a):
            vs = tuple(Var(f"x{i}", s) for i, s in enumerate(xs))
            for mask, f in level(rank, xs).items():
                pool.append(FoEntry(f, vs, mask))
    return pool


def _entries(pool):
    out = []
    for e in pool:
        if isinstance(e, FoEntry):
            out.append(e)
        elif isinstance(e, tuple):
            out.append(FoEntry(e[0], tuple(e[1])))
        else:
            out.append(FoEntry(e, fo_free_vars(e)))
    return out


def morleyize(m, pool, prefix="R"):
    """``(M^p, manifest)``: relation ``R{i}`` holds the solutions of pool entry ``i``."""
    entries = _entries(pool)
    rels = []
    tables = {}
    manifest = {}
    for i, e in enumerate(entries):
        name = f"{prefix}{i}"
        rels.append((name, e.sorts))
        tables[name] = fo_solutions(m, e.formula, e.vars)
        manifest[name] = {"formula": e.text(), "vars": [[v.name, v.sort] for v in e.vars]}
    sig = Signature(m.signature.sorts, tuple(rels))
    return FinStructure(sig, m.universe, tables), manifest


def _as_map(h, m):
    if isinstance(h, Hom):
        return h.map
    return {s: tuple(h[s]) for s in m.signature.sorts}


def elementary_check(h, m, n, pool):
    """``h`` preserves every pool formula in both directions."""
    hm = _as_map(h, m)
    for e in _entries(pool):
        sol_m = fo_solutions(m, e.formula, e.vars)
        sol_n = fo_solutions(n, e.formula, e.vars)
        for vals in itertools.product(*(range(m.universe[s]) for s in e.sorts)):
            img = tuple(hm[s][x] for s, x in zip(e.sorts, vals))
            if (vals in sol_m) != (img in sol_n):
                return False
    return True


def tp_expand(m, sigmas, prefix="Sigma"):
    """Add one relation per set of positive formulas, holding its common solutions.

    Each set is given as formula texts or ASTs in shared free variables;
    the relation's argument order is the order of first occurrence.
    """
    rels = []
    tables = {}
    taken = set(m.signature.names)
    for i, sigma in enumerate(sigmas):
        phis = [parse_positive(f, m.signature) if isinstance(f, str) else f for f in sigma]
        free = []
        for phi in phis:
            for v in free_vars(phi):
                if v in free:
                    continue
                clash = [w for w in free if w.name == v.name]
                if clash:
                    raise FormulaError(
                        f"variable {v.name!r} used with sorts {clash[0].sort!r} and {v.sort!r}"
                    )
                free.append(v)
        free = tuple(free)
        rows = None
        for phi in phis:
            sols = solution_set(m, phi, free)
            rows = sols if rows is None else rows & sols
        if rows is None:
            rows = frozenset(itertools.product(*(range(m.universe[v.sort]) for v in free)))
        name = f"{prefix}{i}"
        while name in taken:
            name += "_"
        taken.add(name)
        rels.append((name, tuple(v.sort for v in free)))
        tables[name] = rows
    sig = m.signature.extend(rels)
    return m.with_tables(sig, tables)


def same_automorphisms(a, b):
    """``a`` and ``b`` share a universe and have the same automorphisms."""
    ka = {h.key() for h in automorphisms(a)}
    kb = {h.key() for h in automorphisms(b)}
    return ka == kb
