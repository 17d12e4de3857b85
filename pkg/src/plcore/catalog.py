"""Small named structures and theories used throughout the examples and tests."""

from .structure import Signature, structure
from .theory import HuTheory, theory_of
from .formula import FormulaPool


def disjoint_subsets_signature(k=3):
    return Signature.single({f"P{i}": 1 for i in range(k)})


def disjoint_subsets_theory(k=3):
    """Unary predicates ``P0..P{k-1}`` that are pairwise disjoint."""
    sig = disjoint_subsets_signature(k)
    lines = [
        f"forall x. ~(P{i}(x) & P{j}(x))" for i in range(k) for j in range(i + 1, k)
    ]
    return HuTheory.parse(sig, lines)


def disjoint_subsets_model(k=3):
    """``k`` points, point ``i`` alone in ``P{i}``."""
    sig = disjoint_subsets_signature(k)
    return structure(sig, k, {f"P{i}": [(i,)] for i in range(k)})


DOUBLED_ELEMENTS = ((0, 0), (0, 1), (1, 0), (1, 1))


def doubled_interval():
    """Four points ``(i, b)`` with ids ``2*i + b``.

    ``I00`` holds the points with first coordinate 0, ``I11`` those with
    first coordinate 1, and ``S`` swaps the second coordinate.
    """
    sig = Signature.single({"I00": 1, "I11": 1, "S": 2})
    ident = {p: i for i, p in enumerate(DOUBLED_ELEMENTS)}
    tables = {
        "I00": [(ident[p],) for p in DOUBLED_ELEMENTS if p[0] == 0],
        "I11": [(ident[p],) for p in DOUBLED_ELEMENTS if p[0] == 1],
        "S": [(ident[p], ident[(p[0], 1 - p[1])]) for p in DOUBLED_ELEMENTS],
    }
    return structure(sig, 4, tables)


def doubled_interval_theory(atoms=2, bvars=1):
    """The h-universal theory of :func:`doubled_interval`, exact via its template."""
    d2 = doubled_interval()
    return theory_of(d2, FormulaPool(d2.signature, bvars, atoms, 0))


def cycle_sentence(n):
    xs = [f"x{i}" for i in range(n)]
    atoms = [f"E({xs[i]},{xs[(i + 1) % n]})" for i in range(n)]
    return f"forall {' '.join(xs)}. ~({' & '.join(atoms)})"


def dag_theory(max_cycle=4):
    """Directed graphs without cycles of length at most ``max_cycle``."""
    sig = Signature.single({"E": 2})
    return HuTheory.parse(sig, [cycle_sentence(n) for n in range(1, max_cycle + 1)])


def digraph(n, edges):
    return structure(Signature.single({"E": 2}), n, {"E": list(edges)})


def linear_order(n, rel="L"):
    """``0 < 1 < ... < n-1`` as a strict order."""
    sig = Signature.single({rel: 2})
    return structure(sig, n, {rel: [(i, j) for i in range(n) for j in range(n) if i < j]})


def empty_theory(signature):
    return HuTheory(signature, ())
