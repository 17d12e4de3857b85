"""Finite multi-sorted relational structures.

Elements of each sort are dense integers ``0..n-1``.  An element is referred
to by the pair ``(sort, id)``.  Structures are immutable and hashable so they
can be used as cache keys.
"""

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple


class StructureError(ValueError):
    """Raised for malformed signatures, structures or structure files."""


@dataclass(frozen=True)
class Signature:
    sorts: tuple
    relations: tuple  # of (name, arity) with arity a tuple of sort names

    def __post_init__(self):
        object.__setattr__(self, "sorts", tuple(self.sorts))
        rels = tuple((name, tuple(arity)) for name, arity in self.relations)
        object.__setattr__(self, "relations", rels)
        if len(set(self.sorts)) != len(self.sorts):
            raise StructureError("duplicate sort name")
        names = [r[0] for r in rels]
        if len(set(names)) != len(names):
            dup = sorted(n for n in set(names) if names.count(n) > 1)
            raise StructureError(f"duplicate relation name {dup[0]!r}")
        for name, arity in rels:
            for s in arity:
                if s not in self.sorts:
                    raise StructureError(f"relation {name!r} uses undeclared sort {s!r}")
        object.__setattr__(self, "_arity", dict(rels))

    @classmethod
    def single(cls, relations, sort="s"):
        """One-sorted signature from ``{name: arity_int}`` pairs."""
        if isinstance(relations, Mapping):
            relations = relations.items()
        return cls((sort,), tuple((n, (sort,) * k) for n, k in relations))

    def arity(self, name):
        try:
            return self._arity[name]
        except KeyError:
            raise StructureError(f"unknown relation {name!r}") from None

    def has(self, name):
        return name in self._arity

    @property
    def names(self):
        return tuple(r[0] for r in self.relations)

    def extend(self, relations):
        return Signature(self.sorts, self.relations + tuple(relations))

    def to_json(self):
        return {
            "sorts": list(self.sorts),
            "relations": [{"name": n, "arity": list(a)} for n, a in self.relations],
        }

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(
                tuple(obj["sorts"]),
                tuple((r["name"], tuple(r["arity"])) for r in obj["relations"]),
            )
        except (KeyError, TypeError) as exc:
            raise StructureError(f"malformed signature: {exc}") from None


class SortedTuple(NamedTuple):
    sorts: tuple
    elems: tuple

    def __len__(self):
        return len(self.elems)

    def pairs(self):
        return tuple(zip(self.sorts, self.elems))


class FinStructure:
    """A finite structure: per-sort universe sizes and one table per relation.

    The constructor does not validate; use :func:`validate_structure` or the
    JSON loader, which rejects anything that fails validation.
    """

    __slots__ = ("signature", "universe", "tables", "_hash", "_index")

    def __init__(self, signature, universe, tables=None):
        tables = dict(tables or {})
        self.signature = signature
        self.universe = {s: int(universe.get(s, 0)) for s in signature.sorts}
        self.tables = {
            name: frozenset(tuple(t) for t in tables.get(name, ()))
            for name in signature.names
        }
        extra = set(tables) - set(signature.names)
        if extra:
            raise StructureError(f"table for unknown relation {sorted(extra)[0]!r}")
        self._hash = None
        self._index = None

    def __eq__(self, other):
        if not isinstance(other, FinStructure):
            return NotImplemented
        return (
            self.signature == other.signature
            and self.universe == other.universe
            and self.tables == other.tables
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(
                (
                    self.signature,
                    tuple(self.universe.items()),
                    tuple(self.tables.items()),
                )
            )
        return self._hash

    def __repr__(self):
        sizes = ",".join(f"{s}:{n}" for s, n in self.universe.items())
        facts = sum(len(t) for t in self.tables.values())
        return f"FinStructure({sizes}; {facts} facts)"

    def size(self, sort=None):
        if sort is None:
            return sum(self.universe.values())
        return self.universe[sort]

    def elements(self):
        for s in self.signature.sorts:
            for i in range(self.universe[s]):
                yield (s, i)

    def table(self, name):
        return self.tables[name]

    def sorted_table(self, name):
        return sorted(self.tables[name])

    def holds_atom(self, name, args):
        return tuple(args) in self.tables[name]

    def tuples(self, sorts):
        """All tuples of the given sort sequence, ascending lexicographically."""
        return itertools.product(*(range(self.universe[s]) for s in sorts))

    def position_index(self):
        """``(relation, position, value) -> list of tuples``; built lazily."""
        if self._index is None:
            idx = {}
            for name, rows in self.tables.items():
                for row in rows:
                    for pos, v in enumerate(row):
                        idx.setdefault((name, pos, v), []).append(row)
            self._index = idx
        return self._index

    def induced(self, keep):
        """Induced substructure on ``keep`` (sort -> ids).

        Returns ``(sub, old_to_new)`` where ``old_to_new`` maps ``(sort, old)``
        to the new id; new ids follow the ascending order of old ids.
        """
        keep = {s: sorted(set(keep.get(s, ()))) for s in self.signature.sorts}
        new = {(s, old): i for s in keep for i, old in enumerate(keep[s])}
        tables = {}
        for name, arity in self.signature.relations:
            rows = []
            for row in self.tables[name]:
                key = [new.get((s, v)) for s, v in zip(arity, row)]
                if None not in key:
                    rows.append(tuple(key))
            tables[name] = rows
        sub = FinStructure(self.signature, {s: len(v) for s, v in keep.items()}, tables)
        return sub, new

    def with_tables(self, signature, extra_tables):
        tables = dict(self.tables)
        tables.update(extra_tables)
        return FinStructure(signature, self.universe, tables)

    def reduct(self, signature):
        return FinStructure(
            signature, self.universe, {n: self.tables[n] for n in signature.names}
        )

    def add_elements(self, sort, count=1):
        universe = dict(self.universe)
        universe[sort] += count
        return FinStructure(self.signature, universe, self.tables)

    def to_json(self):
        obj = self.signature.to_json()
        obj["universe"] = dict(self.universe)
        obj["tables"] = {n: [list(t) for t in self.sorted_table(n)] for n in self.signature.names}
        return obj

    def dumps(self):
        return dumps_json(self.to_json())

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise StructureError("structure must be a JSON object")
        sig = Signature.from_json(obj)
        universe = obj.get("universe", {})
        if not isinstance(universe, dict):
            raise StructureError("'universe' must map sorts to sizes")
        for s in universe:
            if s not in sig.sorts:
                raise StructureError(f"universe names undeclared sort {s!r}")
        tables = obj.get("tables", {})
        for name in tables:
            if not sig.has(name):
                raise StructureError(f"table for unknown relation {name!r}")
        m = cls(sig, universe, {n: [tuple(r) for r in rows] for n, rows in tables.items()})
        problems = validate_structure(m)
        if problems:
            raise StructureError("; ".join(problems))
        return m


def dumps_json(obj):
    """Compact deterministic JSON, one trailing newline."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True) + "\n"


def validate_structure(m):
    """List of human-readable violations; empty when the structure is valid."""
    problems = []
    for s, n in m.universe.items():
        if not isinstance(n, int) or n < 0:
            problems.append(f"universe of sort {s!r} has invalid size {n!r}")
    for name, arity in m.signature.relations:
        for idx, row in enumerate(sorted(m.tables[name], key=repr)):
            if len(row) != len(arity):
                problems.append(
                    f"relation {name!r} tuple #{idx} {list(row)}: expected arity {len(arity)}"
                )
                continue
            for pos, (s, v) in enumerate(zip(arity, row)):
                if not isinstance(v, int) or isinstance(v, bool):
                    problems.append(
                        f"relation {name!r} tuple #{idx} {list(row)}: position {pos} is not an integer id"
                    )
                elif not 0 <= v < m.universe[s]:
                    problems.append(
                        f"relation {name!r} tuple #{idx} {list(row)}: position {pos} out of range for sort {s!r}"
                    )
    return problems


def load_structure(path):
    with open(path) as fh:
        obj = json.load(fh)
    return FinStructure.from_json(obj)


def disjoint_union(a, b):
    """``a`` followed by a shifted copy of ``b`` (same signature)."""
    if a.signature != b.signature:
        raise StructureError("disjoint union needs equal signatures")
    universe = {s: a.universe[s] + b.universe[s] for s in a.signature.sorts}
    tables = {}
    for name, arity in a.signature.relations:
        shifted = [
            tuple(v + a.universe[s] for s, v in zip(arity, row)) for row in b.tables[name]
        ]
        tables[name] = list(a.tables[name]) + shifted
    return FinStructure(a.signature, universe, tables)


def quotient(m, classes):
    """Image of ``m`` under the map sending ``(sort, id)`` to ``classes[(sort, id)]``.

    ``classes`` must be onto ``0..k-1`` within each sort.
    """
    universe = {}
    for (s, _), c in classes.items():
        universe[s] = max(universe.get(s, 0), c + 1)
    tables = {
        name: {tuple(classes[(s, v)] for s, v in zip(arity, row)) for row in m.tables[name]}
        for name, arity in m.signature.relations
    }
    return FinStructure(m.signature, universe, tables)


# ---------------------------------------------------------------------------
# canonical queries and back


def canonical_query(a, marked):
    """The pp formula describing ``a`` with the marked elements as free variables.

    Marked positions become free variables ``x0, x1, ...``; every unmarked
    element becomes a bound variable ``y0, y1, ...`` in ascending order.  If
    the same element is marked twice the extra occurrence is tied with an
    equality atom.
    """
    from .formula import Atom, Eq, PPFormula, Var

    if not isinstance(marked, SortedTuple):
        marked = SortedTuple(*marked)
    names = {}
    free = []
    atoms = []
    for i, (s, e) in enumerate(marked.pairs()):
        v = Var(f"x{i}", s)
        free.append(v)
        if (s, e) in names:
            atoms.append(Eq(names[(s, e)], v))
        else:
            names[(s, e)] = v
    bound = []
    for s, e in a.elements():
        if (s, e) not in names:
            v = Var(f"y{len(bound)}", s)
            bound.append(v)
            names[(s, e)] = v
    for name, arity in a.signature.relations:
        for row in a.sorted_table(name):
            atoms.append(Atom(name, tuple(names[(s, e)] for s, e in zip(arity, row))))
    return PPFormula(tuple(free), tuple(bound), tuple(atoms))


def structure_of_pp(phi, signature):
    """Canonical structure of a pp formula.

    Variables are identified along equality atoms; the free variables become
    the marked tuple.  Returns ``(structure, marked)``.
    """
    from .formula import Atom, Eq

    order = list(phi.vars_free) + [v for v in phi.vars_bound if v not in phi.vars_free]
    seen = set(order)
    for at in phi.atoms:
        for v in at.vars():
            if v not in seen:
                seen.add(v)
                order.append(v)
    parent = {v: v for v in order}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for at in phi.atoms:
        if isinstance(at, Eq):
            if at.left.sort != at.right.sort:
                raise StructureError(
                    f"equality between sorts {at.left.sort!r} and {at.right.sort!r}"
                )
            ra, rb = find(at.left), find(at.right)
            if ra != rb:
                parent[rb] = ra
    ids = {}
    counts = {s: 0 for s in signature.sorts}
    for v in order:
        if v.sort not in counts:
            raise StructureError(f"variable {v.name!r} has unknown sort {v.sort!r}")
        r = find(v)
        if r not in ids:
            ids[r] = counts[r.sort]
            counts[r.sort] += 1
    tables = {n: set() for n in signature.names}
    for at in phi.atoms:
        if isinstance(at, Atom):
            arity = signature.arity(at.rel)
            if len(arity) != len(at.args) or any(
                s != v.sort for s, v in zip(arity, at.args)
            ):
                raise StructureError(f"atom {at} does not match arity of {at.rel!r}")
            tables[at.rel].add(tuple(ids[find(v)] for v in at.args))
    m = FinStructure(signature, counts, tables)
    marked = SortedTuple(
        tuple(v.sort for v in phi.vars_free), tuple(ids[find(v)] for v in phi.vars_free)
    )
    return m, marked


def structure(sig, universe, tables=None):
    """Shorthand: ``universe`` may be an int for one-sorted signatures."""
    if isinstance(universe, int):
        if len(sig.sorts) != 1:
            raise StructureError("integer universe needs a one-sorted signature")
        universe = {sig.sorts[0]: universe}
    return FinStructure(sig, universe, tables or {})


def all_structures(sig, size):
    """Every labelled structure with ``size`` elements in each sort."""
    universe = {s: size for s in sig.sorts}
    slots = [
        (name, row)
        for name, arity in sig.relations
        for row in itertools.product(*(range(size) for _ in arity))
    ]
    for bits in itertools.product((0, 1), repeat=len(slots)):
        tables = {n: [] for n in sig.names}
        for b, (name, row) in zip(bits, slots):
            if b:
                tables[name].append(row)
        yield FinStructure(sig, universe, tables)


def element_list(m):
    return list(m.elements())


def iter_sort_tuples(sig_sorts, max_len):
    """Sort sequences of length 1..max_len in length-then-lexicographic order."""
    for n in range(1, max_len + 1):
        for combo in itertools.product(sig_sorts, repeat=n):
            yield combo


def from_tuples(sig, universe, facts: Iterable):
    """Build from ``(name, row)`` pairs."""
    tables = {n: [] for n in sig.names}
    for name, row in facts:
        tables[name].append(tuple(row))
    return structure(sig, universe, tables)
