"""Positive formulas: AST, text syntax, pp normal form and formula pools.

Grammar accepted by :func:`parse`::

    formula := quant | disj
    quant   := ("exists" | "forall") varlist "." formula
    disj    := conj ("|" conj)*
    conj    := neg ("&" neg)*
    neg     := "~" atom | "~" "(" formula ")" | atom | "(" formula ")"
    atom    := NAME "(" varlist ")" | var "=" var | "true" | "false"

``forall`` and ``~`` are only allowed in the shape ``forall v1 .. vn. ~(...)``,
which denotes an h-universal sentence.  A variable may carry an explicit sort
as ``x:s``; otherwise its sort is inferred from the atoms it occurs in.
"""

import itertools
import re
from dataclasses import dataclass

from .structure import StructureError


class FormulaError(ValueError):
    """Syntax or typing error; ``pos`` is the character offset when known."""

    def __init__(self, message, pos=None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


class NormalFormTooLarge(FormulaError):
    pass


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True, order=True)
class Var:
    name: str
    sort: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, repr=False)
class Atom:
    rel: str
    args: tuple

    def vars(self):
        return self.args

    def __str__(self):
        return f"{self.rel}({','.join(v.name for v in self.args)})"


@dataclass(frozen=True, repr=False)
class Eq:
    left: Var
    right: Var

    def vars(self):
        return (self.left, self.right)

    def __str__(self):
        return f"{self.left.name}={self.right.name}"


@dataclass(frozen=True, repr=False)
class And:
    parts: tuple

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Or:
    parts: tuple

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Exists:
    vars: tuple
    body: object

    def __str__(self):
        return to_text(self)


TRUE = And(())
FALSE = Or(())


def conj(*parts):
    return And(tuple(parts))


def disj(*parts):
    return Or(tuple(parts))


@dataclass(frozen=True, repr=False)
class PPFormula:
    """``exists vars_bound. AND(atoms)`` with free variables ``vars_free``."""

    vars_free: tuple
    vars_bound: tuple
    atoms: tuple

    def to_formula(self):
        body = self.atoms[0] if len(self.atoms) == 1 else And(tuple(self.atoms))
        return Exists(tuple(self.vars_bound), body) if self.vars_bound else body

    def __str__(self):
        return to_text(self.to_formula())


@dataclass(frozen=True, repr=False)
class HuSentence:
    """``forall vars. ~body`` with ``body`` positive and free only in ``vars``."""

    vars: tuple
    body: object

    def __str__(self):
        inner = to_text(self.body)
        if not self.vars:
            return f"~({inner})"
        return f"forall {' '.join(v.name for v in self.vars)}. ~({inner})"

    def forbidden(self):
        """The closed positive formula whose truth violates the sentence."""
        return Exists(self.vars, self.body) if self.vars else self.body


# ---------------------------------------------------------------------------
# traversal helpers


def free_vars(phi):
    """Free variables in order of first occurrence."""
    out = []
    seen = set()

    def walk(f, bound):
        if isinstance(f, (Atom, Eq)):
            for v in f.vars():
                if v not in bound and v not in seen:
                    seen.add(v)
                    out.append(v)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p, bound)
        elif isinstance(f, Exists):
            walk(f.body, bound | set(f.vars))
        elif isinstance(f, PPFormula):
            walk(f.to_formula(), bound)
        else:
            raise TypeError(f"not a positive formula: {f!r}")

    walk(phi, frozenset())
    return tuple(out)


def all_var_names(phi):
    names = set()

    def walk(f):
        if isinstance(f, (Atom, Eq)):
            names.update(v.name for v in f.vars())
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p)
        elif isinstance(f, Exists):
            names.update(v.name for v in f.vars)
            walk(f.body)

    walk(phi)
    return names


def relations_used(phi):
    out = set()

    def walk(f):
        if isinstance(f, Atom):
            out.add(f.rel)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p)
        elif isinstance(f, Exists):
            walk(f.body)

    walk(phi)
    return out


for _cls in (Atom, Eq, And, Or, Exists, PPFormula, HuSentence):
    _cls.__repr__ = lambda self: f"<{self}>"


class _Fresh:
    def __init__(self, taken):
        self.taken = set(taken)
        self.n = 0

    def __call__(self, sort, stem="v"):
        while True:
            name = f"{stem}{self.n}"
            self.n += 1
            if name not in self.taken:
                self.taken.add(name)
                return Var(name, sort)


def substitute(phi, mapping, taken=()):
    """Replace free variables along ``mapping``; bound variables that would
    capture a substituted variable are renamed apart."""
    targets = {v.name for v in mapping.values()}
    fresh = _Fresh(all_var_names(phi) | targets | set(taken))

    def walk(f, env):
        if isinstance(f, Atom):
            return Atom(f.rel, tuple(env.get(v, v) for v in f.args))
        if isinstance(f, Eq):
            return Eq(env.get(f.left, f.left), env.get(f.right, f.right))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(walk(p, env) for p in f.parts))
        if isinstance(f, Exists):
            env = dict(env)
            new_vars = []
            for v in f.vars:
                if v.name in targets:
                    w = fresh(v.sort, "b")
                    env[v] = w
                    new_vars.append(w)
                else:
                    env.pop(v, None)
                    new_vars.append(v)
            return Exists(tuple(new_vars), walk(f.body, env))
        raise TypeError(f"not a positive formula: {f!r}")

    return walk(phi, dict(mapping))


# ---------------------------------------------------------------------------
# printing


def to_text(phi, annotate=False):
    """Render in the concrete syntax accepted by :func:`parse`."""

    def vname(v):
        return f"{v.name}:{v.sort}" if annotate else v.name

    def go(f, ctx):
        # ctx: 0 top, 1 inside disjunction, 2 inside conjunction
        if isinstance(f, Atom):
            return f"{f.rel}({','.join(vname(v) for v in f.args)})"
        if isinstance(f, Eq):
            return f"{vname(f.left)}={vname(f.right)}"
        if isinstance(f, PPFormula):
            return go(f.to_formula(), ctx)
        if isinstance(f, And):
            if not f.parts:
                return "true"
            if len(f.parts) == 1:
                return go(f.parts[0], ctx)
            s = " & ".join(go(p, 2) for p in f.parts)
            return s
        if isinstance(f, Or):
            if not f.parts:
                return "false"
            if len(f.parts) == 1:
                return go(f.parts[0], ctx)
            s = " | ".join(go(p, 1) for p in f.parts)
            return f"({s})" if ctx == 2 else s
        if isinstance(f, Exists):
            if not f.vars:
                return go(f.body, ctx)
            s = f"exists {' '.join(vname(v) for v in f.vars)}. {go(f.body, 0)}"
            return f"({s})" if ctx else s
        if isinstance(f, HuSentence):
            return str(f)
        raise TypeError(f"cannot print {f!r}")

    return go(phi, 0)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[().,&|~=:]))")


def _tokenize(text):
    pos = 0
    toks = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaError(f"unexpected character {text[pos]!r}", pos)
        start = m.start("name") if m.group("name") else m.start("op")
        toks.append((m.group("name") or m.group("op"), start))
        pos = m.end()
    toks.append(("<end>", len(text)))
    return toks


_KEYWORDS = {"exists", "forall", "true", "false"}


class _Parser:
    def __init__(self, text, signature):
        self.text = text
        self.sig = signature
        self.toks = _tokenize(text)
        self.i = 0
        self.binder_count = 0
        self.constraints = {}  # binder id -> set of sorts
        self.unify = []  # pairs of binder ids
        self.names = {}  # binder id -> name
        self.annot = {}

    # token helpers
    def peek(self):
        return self.toks[self.i][0]

    def pos(self):
        return self.toks[self.i][1]

    def take(self, expected=None):
        tok, pos = self.toks[self.i]
        if expected is not None and tok != expected:
            shown = "end of input" if tok == "<end>" else repr(tok)
            raise FormulaError(f"expected {expected!r} but found {shown}", pos)
        self.i += 1
        return tok

    def new_binder(self, name):
        b = self.binder_count
        self.binder_count += 1
        self.constraints[b] = set()
        self.names[b] = name
        return b

    # grammar
    def parse_top(self):
        env_free = {}
        if self.peek() in ("forall", "~"):
            node = self.parse_hu(env_free)
        else:
            node = self.parse_formula({}, env_free)
        if self.peek() != "<end>":
            raise FormulaError(f"unexpected {self.peek()!r}", self.pos())
        return node

    def parse_hu(self, env_free):
        bvars = []
        env = {}
        while self.peek() == "forall":
            self.take()
            for name, pos in self.parse_varlist():
                b = self.new_binder(name)
                env[name] = b
                bvars.append(b)
            self.take(".")
        if self.peek() != "~":
            raise FormulaError("'forall' must be followed by '~(...)'", self.pos())
        self.take("~")
        if self.peek() == "(":
            self.take("(")
            body = self.parse_formula(env, env_free)
            self.take(")")
        else:
            body = self.parse_atom(env, env_free)
        return ("hu", bvars, body)

    def parse_varlist(self):
        out = []
        while True:
            tok, pos = self.toks[self.i]
            if not re.match(r"[A-Za-z_]", tok) or tok in _KEYWORDS:
                if not out:
                    raise FormulaError("expected a variable", pos)
                return out
            self.take()
            if self.peek() == ":":
                self.take()
                sort = self.take()
                self.annot[(tok, pos)] = sort
            out.append((tok, pos))
            if self.peek() == ",":
                self.take()

    def parse_formula(self, env, env_free):
        if self.peek() == "exists":
            self.take()
            env = dict(env)
            binders = []
            for name, pos in self.parse_varlist():
                b = self.new_binder(name)
                if (name, pos) in self.annot:
                    self.constraints[b].add(self.annot[(name, pos)])
                env[name] = b
                binders.append(b)
            self.take(".")
            body = self.parse_formula(env, env_free)
            return ("exists", binders, body)
        if self.peek() == "forall":
            raise FormulaError("'forall' is only allowed in 'forall ... ~(...)' sentences", self.pos())
        return self.parse_disj(env, env_free)

    def parse_disj(self, env, env_free):
        parts = [self.parse_conj(env, env_free)]
        while self.peek() == "|":
            self.take()
            parts.append(self.parse_conj(env, env_free))
        return parts[0] if len(parts) == 1 else ("or", parts)

    def parse_conj(self, env, env_free):
        parts = [self.parse_neg(env, env_free)]
        while self.peek() == "&":
            self.take()
            parts.append(self.parse_neg(env, env_free))
        return parts[0] if len(parts) == 1 else ("and", parts)

    def parse_neg(self, env, env_free):
        if self.peek() == "~":
            raise FormulaError("negation is only allowed in 'forall ... ~(...)' sentences", self.pos())
        if self.peek() == "(":
            self.take()
            f = self.parse_formula(env, env_free)
            self.take(")")
            return f
        if self.peek() == "exists":
            return self.parse_formula(env, env_free)
        return self.parse_atom(env, env_free)

    def var_ref(self, name, pos, env, env_free):
        if name in env:
            b = env[name]
        elif name in env_free:
            b = env_free[name]
        else:
            b = self.new_binder(name)
            env_free[name] = b
        if self.peek() == ":":
            self.take()
            self.constraints[b].add(self.take())
        return b

    def parse_atom(self, env, env_free):
        tok, pos = self.toks[self.i]
        if tok == "true":
            self.take()
            return ("and", [])
        if tok == "false":
            self.take()
            return ("or", [])
        if not re.match(r"[A-Za-z_]", tok) or tok in _KEYWORDS:
            shown = "end of input" if tok == "<end>" else repr(tok)
            raise FormulaError(f"expected an atom but found {shown}", pos)
        self.take()
        if self.peek() == "(":
            self.take()
            args = []
            if self.peek() != ")":
                for name, p in self.parse_varlist():
                    b = self.var_ref(name, p, env, env_free)
                    if (name, p) in self.annot:
                        self.constraints[b].add(self.annot[(name, p)])
                    args.append(b)
            self.take(")")
            if self.sig is not None:
                if not self.sig.has(tok):
                    raise FormulaError(f"unknown relation {tok!r}", pos)
                arity = self.sig.arity(tok)
                if len(arity) != len(args):
                    raise FormulaError(
                        f"relation {tok!r} expects {len(arity)} arguments, got {len(args)}", pos
                    )
                for s, b in zip(arity, args):
                    self.constraints[b].add(s)
            return ("atom", tok, args, pos)
        left = self.var_ref(tok, pos, env, env_free)
        self.take("=")
        rtok, rpos = self.toks[self.i]
        if not re.match(r"[A-Za-z_]", rtok) or rtok in _KEYWORDS:
            raise FormulaError("expected a variable after '='", rpos)
        self.take()
        right = self.var_ref(rtok, rpos, env, env_free)
        self.unify.append((left, right, pos))
        return ("eq", left, right)

    # sort resolution
    def resolve(self):
        parent = list(range(self.binder_count))

        def find(b):
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            return b

        for a, b, _ in self.unify:
            parent[find(b)] = find(a)
        groups = {}
        for b in range(self.binder_count):
            groups.setdefault(find(b), set()).update(self.constraints[b])
        sorts = {}
        for b in range(self.binder_count):
            cands = groups[find(b)]
            if len(cands) > 1:
                raise FormulaError(
                    f"variable {self.names[b]!r} used at incompatible sorts {sorted(cands)}"
                )
            if cands:
                s = next(iter(cands))
            elif self.sig is not None and len(self.sig.sorts) == 1:
                s = self.sig.sorts[0]
            else:
                raise FormulaError(f"cannot infer the sort of variable {self.names[b]!r}")
            if self.sig is not None and s not in self.sig.sorts:
                raise FormulaError(f"unknown sort {s!r}")
            sorts[b] = s
        return sorts

    def build(self, node, sorts):
        def v(b):
            return Var(self.names[b], sorts[b])

        kind = node[0]
        if kind == "atom":
            return Atom(node[1], tuple(v(b) for b in node[2]))
        if kind == "eq":
            return Eq(v(node[1]), v(node[2]))
        if kind == "and":
            return And(tuple(self.build(p, sorts) for p in node[1]))
        if kind == "or":
            return Or(tuple(self.build(p, sorts) for p in node[1]))
        if kind == "exists":
            return Exists(tuple(v(b) for b in node[1]), self.build(node[2], sorts))
        if kind == "hu":
            return HuSentence(tuple(v(b) for b in node[1]), self.build(node[2], sorts))
        raise AssertionError(kind)


def parse(text, signature=None):
    """Parse a positive formula or an h-universal sentence.

    With a signature, relation names, arities and sorts are checked.
    """
    p = _Parser(text, signature)
    tree = p.parse_top()
    sorts = p.resolve()
    out = p.build(tree, sorts)
    if isinstance(out, HuSentence):
        stray = [v.name for v in free_vars(out.body) if v not in out.vars]
        if stray:
            raise FormulaError(f"h-universal sentence has free variable {stray[0]!r}")
    return out


def parse_positive(text, signature=None):
    phi = parse(text, signature)
    if isinstance(phi, HuSentence):
        raise FormulaError("expected a positive formula, got an h-universal sentence")
    return phi


def parse_hu(text, signature=None):
    phi = parse(text, signature)
    if not isinstance(phi, HuSentence):
        raise FormulaError("expected a sentence of the form 'forall ... ~(...)'")
    return phi


# ---------------------------------------------------------------------------
# pp normal form

DEFAULT_DISJUNCT_CAP = 4096


def pp_normal_form(phi, free=None, cap=DEFAULT_DISJUNCT_CAP):
    """Equivalent list of pp formulas (a disjunction), all over ``free``.

    Bound variables are renamed apart first so that pulling quantifiers out
    of conjunctions cannot capture anything.  Raises
    :class:`NormalFormTooLarge` past ``cap`` disjuncts.
    """
    if isinstance(phi, PPFormula):
        if free is None or tuple(free) == phi.vars_free:
            return [phi]
        phi = phi.to_formula()
    if free is None:
        free = free_vars(phi)
    free = tuple(free)
    fresh = _Fresh(all_var_names(phi) | {v.name for v in free})

    def nf(f, env):
        if isinstance(f, Atom):
            return [((), (Atom(f.rel, tuple(env.get(v, v) for v in f.args)),))]
        if isinstance(f, Eq):
            return [((), (Eq(env.get(f.left, f.left), env.get(f.right, f.right)),))]
        if isinstance(f, Or):
            out = []
            for p in f.parts:
                out.extend(nf(p, env))
                if len(out) > cap:
                    raise NormalFormTooLarge(f"pp normal form exceeds {cap} disjuncts")
            return out
        if isinstance(f, And):
            acc = [((), ())]
            for p in f.parts:
                sub = nf(p, env)
                if len(acc) * len(sub) > cap:
                    raise NormalFormTooLarge(f"pp normal form exceeds {cap} disjuncts")
                acc = [(b1 + b2, a1 + a2) for b1, a1 in acc for b2, a2 in sub]
            return acc
        if isinstance(f, Exists):
            env = dict(env)
            new = []
            for v in f.vars:
                w = fresh(v.sort, "y")
                env[v] = w
                new.append(w)
            return [(tuple(new) + b, a) for b, a in nf(f.body, env)]
        raise TypeError(f"not a positive formula: {f!r}")

    return [PPFormula(free, b, a) for b, a in nf(phi, {})]


# ---------------------------------------------------------------------------
# formula pools


def parse_pool_budget(text):
    """``"atoms:2,bvars:1"`` -> dict; unknown keys are rejected."""
    allowed = {"atoms", "bvars", "free", "args", "params"}
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if ":" not in part:
            raise FormulaError(f"bad pool budget entry {part!r}")
        k, v = part.split(":", 1)
        k = k.strip()
        if k not in allowed:
            raise FormulaError(f"unknown pool budget key {k!r}")
        try:
            out[k] = int(v)
        except ValueError:
            raise FormulaError(f"pool budget {k!r} must be an integer") from None
        if out[k] < 0:
            raise FormulaError(f"pool budget {k!r} must be non-negative")
    return out


class FormulaPool:
    """Deterministic enumeration of pp formulas within a syntactic budget.

    Formulas have free variables ``x0..`` (of the requested sorts) and bound
    variables ``y0..``.  Every bound variable is used, bound variables of the
    same sort first occur in index order, and atoms are a strictly increasing
    selection from a fixed atom list, so each formula appears once up to
    these symmetries.  Reflexive equalities only appear alone and give the
    formula ``true``.
    """

    def __init__(self, signature, max_bound_vars=1, max_atoms=2, max_free_arity=2):
        self.signature = signature
        self.max_bound_vars = max_bound_vars
        self.max_atoms = max_atoms
        self.max_free_arity = max_free_arity
        self._cache = {}

    @classmethod
    def from_budget(cls, signature, budget, free_default=2):
        if isinstance(budget, str):
            budget = parse_pool_budget(budget)
        return cls(
            signature,
            max_bound_vars=budget.get("bvars", 1),
            max_atoms=budget.get("atoms", 2),
            max_free_arity=budget.get("free", free_default),
        )

    def describe(self):
        return {
            "atoms": self.max_atoms,
            "bvars": self.max_bound_vars,
            "free": self.max_free_arity,
        }

    def free_sort_tuples(self):
        for n in range(self.max_free_arity + 1):
            yield from itertools.product(self.signature.sorts, repeat=n)

    def __iter__(self):
        for sorts in self.free_sort_tuples():
            yield from self.formulas(sorts)

    def formulas(self, free_sorts):
        free_sorts = tuple(free_sorts)
        if free_sorts not in self._cache:
            self._cache[free_sorts] = list(self._generate(free_sorts))
        return self._cache[free_sorts]

    def _generate(self, free_sorts):
        if self.max_atoms == 0:
            return
        sig = self.signature
        free = tuple(Var(f"x{i}", s) for i, s in enumerate(free_sorts))
        sort_index = {s: i for i, s in enumerate(sig.sorts)}
        for nb in range(self.max_bound_vars + 1):
            for bsorts in itertools.combinations_with_replacement(sig.sorts, nb):
                bsorts = tuple(sorted(bsorts, key=sort_index.get))
                bound = tuple(Var(f"y{i}", s) for i, s in enumerate(bsorts))
                variables = free + bound
                by_sort = {}
                for v in variables:
                    by_sort.setdefault(v.sort, []).append(v)
                atoms = []
                for name, arity in sig.relations:
                    for args in itertools.product(*(by_sort.get(s, []) for s in arity)):
                        atoms.append(Atom(name, tuple(args)))
                for i, a in enumerate(variables):
                    for b in variables[i + 1 :]:
                        if a.sort == b.sort:
                            atoms.append(Eq(a, b))
                if nb == 0 and free:
                    yield PPFormula(free, (), (Eq(free[0], free[0]),))
                if nb == 1 and not free:
                    yield PPFormula(free, bound, (Eq(bound[0], bound[0]),))
                for k in range(1, self.max_atoms + 1):
                    for combo in itertools.combinations(atoms, k):
                        if nb and not self._bound_ok(combo, bound):
                            continue
                        yield PPFormula(free, bound, combo)

    @staticmethod
    def _bound_ok(combo, bound):
        first = {}
        pos = 0
        for at in combo:
            for v in at.vars():
                if v in bound and v not in first:
                    first[v] = pos
                pos += 1
        if len(first) != len(bound):
            return False
        for a, b in zip(bound, bound[1:]):
            if a.sort == b.sort and first[a] > first[b]:
                return False
        return True


def sentence_of(pp):
    """Close a pp formula by quantifying its free variables."""
    return PPFormula((), tuple(pp.vars_free) + tuple(pp.vars_bound), pp.atoms)


def hu_forbidding(pp):
    """The h-universal sentence ``forall vars. ~matrix`` that forbids ``pp``."""
    variables = tuple(pp.vars_free) + tuple(pp.vars_bound)
    matrix = pp.atoms[0] if len(pp.atoms) == 1 else And(tuple(pp.atoms))
    return HuSentence(variables, matrix)


def check_against(phi, signature):
    """Raise :class:`FormulaError` if ``phi`` does not fit ``signature``."""

    def walk(f):
        if isinstance(f, Atom):
            if not signature.has(f.rel):
                raise FormulaError(f"unknown relation {f.rel!r}")
            arity = signature.arity(f.rel)
            if tuple(v.sort for v in f.args) != arity:
                raise FormulaError(f"atom {f} does not match the arity of {f.rel!r}")
        elif isinstance(f, Eq):
            if f.left.sort != f.right.sort:
                raise FormulaError(f"equality {f} between different sorts")
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p)
        elif isinstance(f, Exists):
            walk(f.body)
        elif isinstance(f, PPFormula):
            for a in f.atoms:
                walk(a)
        elif isinstance(f, HuSentence):
            walk(f.body)
        else:
            raise FormulaError(f"not a formula: {f!r}")

    try:
        walk(phi)
    except StructureError as exc:
        raise FormulaError(str(exc)) from None
