"""Evaluation of positive formulas in finite structures.

A formula is brought into pp normal form and each disjunct is answered by a
homomorphism search from its canonical structure, with the free variables
pinned to the assignment.  Results are cached on ``(structure, formula)``.
"""

import functools
import itertools

from .formula import And, Atom, Eq, Exists, Or, PPFormula, free_vars, pp_normal_form
from .hom import hom_exists, iter_homs
from .structure import StructureError, structure_of_pp


class EvaluationError(ValueError):
    pass


@functools.lru_cache(maxsize=65536)
def _compiled(phi, free, signature):
    missing = [v.name for v in free_vars(phi) if v not in free]
    if missing:
        raise EvaluationError(f"free variable {missing[0]!r} has no position")
    parts = []
    for pp in pp_normal_form(phi, free):
        parts.append(structure_of_pp(pp, signature))
    return tuple(parts)


def _check_tuple(m, free, values):
    if len(values) != len(free):
        raise EvaluationError(f"expected {len(free)} values, got {len(values)}")
    for v, e in zip(free, values):
        if v.sort not in m.universe:
            raise EvaluationError(f"variable {v.name!r} has unknown sort {v.sort!r}")
        if not 0 <= e < m.universe[v.sort]:
            raise EvaluationError(f"value {e} out of range for {v.name!r} of sort {v.sort!r}")


def holds_tuple(m, phi, values, free=None):
    """``m ⊨ phi(values)`` with the free variables listed in ``free`` (default:
    order of first occurrence)."""
    free = tuple(free) if free is not None else free_vars(phi)
    values = tuple(values)
    _check_tuple(m, free, values)
    return _holds_cached(m, phi, free, values)


@functools.lru_cache(maxsize=262144)
def _holds_cached(m, phi, free, values):
    try:
        parts = _compiled(phi, free, m.signature)
    except StructureError as exc:
        raise EvaluationError(str(exc)) from None
    for q, marked in parts:
        pin = {}
        ok = True
        for (s, e), val in zip(marked.pairs(), values):
            if pin.get((s, e), val) != val:
                ok = False
                break
            pin[(s, e)] = val
        if ok and hom_exists(q, m, pin=pin):
            return True
    return False


def holds(m, phi, asg=None):
    """``m ⊨ phi[asg]`` where ``asg`` maps variables (or their names) to ids."""
    asg = dict(asg or {})
    free = free_vars(phi) if not isinstance(phi, PPFormula) else phi.vars_free
    values = []
    for v in free:
        if v in asg:
            values.append(asg[v])
        elif v.name in asg:
            values.append(asg[v.name])
        else:
            raise EvaluationError(f"no value for free variable {v.name!r}")
    return holds_tuple(m, phi, values, free)


def holds_pp(m, pp, values):
    return holds_tuple(m, pp, values, pp.vars_free)


def solutions(m, phi, free=None):
    """All satisfying tuples, ascending, as plain id tuples over ``free``."""
    free = tuple(free) if free is not None else (
        phi.vars_free if isinstance(phi, PPFormula) else free_vars(phi)
    )
    return _solutions_cached(m, phi, free)


@functools.lru_cache(maxsize=65536)
def _solutions_cached(m, phi, free):
    try:
        parts = _compiled(phi, free, m.signature)
    except StructureError as exc:
        raise EvaluationError(str(exc)) from None
    out = set()
    for q, marked in parts:
        for h in iter_homs(q, m):
            out.add(tuple(h(s, e) for s, e in marked.pairs()))
    return sorted(out)


def solution_set(m, phi, free=None):
    return frozenset(solutions(m, phi, free))


def clear_caches():
    _compiled.cache_clear()
    _holds_cached.cache_clear()
    _solutions_cached.cache_clear()


# ---------------------------------------------------------------------------
# direct recursive evaluation, used as an oracle


def tarski(m, phi, asg):
    """Evaluate by the textbook recursive clauses, without normal forms."""
    if isinstance(phi, PPFormula):
        phi = phi.to_formula()
    if isinstance(phi, Atom):
        return tuple(asg[v] for v in phi.args) in m.tables[phi.rel]
    if isinstance(phi, Eq):
        return asg[phi.left] == asg[phi.right]
    if isinstance(phi, And):
        return all(tarski(m, p, asg) for p in phi.parts)
    if isinstance(phi, Or):
        return any(tarski(m, p, asg) for p in phi.parts)
    if isinstance(phi, Exists):
        ranges = [range(m.universe[v.sort]) for v in phi.vars]
        for vals in itertools.product(*ranges):
            inner = dict(asg)
            inner.update(zip(phi.vars, vals))
            if tarski(m, phi.body, inner):
                return True
        return False
    raise TypeError(f"not a positive formula: {phi!r}")


def tarski_solutions(m, phi, free=None):
    free = tuple(free) if free is not None else (
        phi.vars_free if isinstance(phi, PPFormula) else free_vars(phi)
    )
    out = []
    for vals in itertools.product(*(range(m.universe[v.sort]) for v in free)):
        if tarski(m, phi, dict(zip(free, vals))):
            out.append(vals)
    return out
