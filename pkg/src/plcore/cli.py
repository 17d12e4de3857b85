"""Command-line entry point: ``plcore <command> ...``.

Exit codes: 0 on success, 1 on bad input, 2 when ``--strict`` is given and
a bounded check ends in ``unknown``.  Files are written atomically and all
output is deterministic.
"""

import argparse
import json
import os
import sys
import tempfile

from . import __version__
from .corecalc import aut_compare, core_invariants, core_of_theory, repeated_core_check
from .evaluation import EvaluationError, solutions
from .formula import FormulaError, FormulaPool, free_vars, parse_positive, to_text
from .hom import automorphisms, core_with_embedding, find_hom
from .morley import fo_pool, morleyize, tp_expand
from .splus import build_splus, one_point_extensions, splus_core
from .structure import FinStructure, StructureError
from .theory import (
    HuTheory,
    InequalityNotDefinable,
    TheoryError,
    find_universal,
    hausdorff_probe,
    jcp_check,
    pc_check,
)
from .typespace import TypeSpaceError, build_typespace, pattern_structure, sort_name


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# file handling


def _read_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"{path}: cannot read: {exc.strerror or exc}") from None
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None


def _line_of(text, needle):
    if needle:
        at = text.find(json.dumps(needle)[1:-1])
        if at >= 0:
            return text.count("\n", 0, at) + 1
    return None


def load_structure_file(path):
    obj, _ = _read_json(path)
    try:
        return FinStructure.from_json(obj)
    except StructureError as exc:
        raise CliError(f"{path}: {exc}") from None


def load_theory_file(path):
    obj, text = _read_json(path)
    if isinstance(obj, dict) and isinstance(obj.get("axioms"), list):
        for i, ax in enumerate(obj["axioms"]):
            try:
                sig = HuTheory.from_json({"signature": obj.get("signature"), "axioms": []}).signature
                HuTheory.parse(sig, [ax])
            except (TheoryError, StructureError, FormulaError, TypeError) as exc:
                line = _line_of(text, ax if isinstance(ax, str) else None)
                where = f"{path}:{line}" if line else path
                raise CliError(f"{where}: axiom #{i}: {exc}") from None
    try:
        return HuTheory.from_json(obj)
    except (TheoryError, StructureError, FormulaError, TypeError) as exc:
        raise CliError(f"{path}: {exc}") from None


def write_atomic(path, text):
    """Write via a temporary file in the same directory and rename."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".plcore-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _pool(sig, text, free_default=2):
    try:
        return FormulaPool.from_budget(sig, text, free_default=free_default)
    except FormulaError as exc:
        raise CliError(f"--pool: {exc}") from None


def _descriptor_budget(text):
    from .formula import parse_pool_budget

    b = parse_pool_budget(text)
    return b.get("args", 2), b.get("params", 1)


def _parse_pin(text, a):
    """``"0:2,1:0"`` or with sorts ``"s.0:2"``."""
    pin = {}
    if not text:
        return pin
    default = a.signature.sorts[0] if len(a.signature.sorts) == 1 else None
    for part in filter(None, (p.strip() for p in text.split(","))):
        try:
            src, dst = part.split(":")
            if "." in src:
                s, e = src.split(".")
            else:
                if default is None:
                    raise ValueError("sort required for multi-sorted structures")
                s, e = default, src
            pin[(s, int(e))] = int(dst)
        except ValueError as exc:
            raise CliError(f"--pin: bad entry {part!r}: {exc}") from None
    return pin


def _tuple_line(vals):
    return " ".join(str(v) for v in vals)


def _status_code(args, verdict):
    return 2 if args.strict and verdict.unknown else 0


# ---------------------------------------------------------------------------
# commands


def cmd_eval(args, out):
    path = args.structure_opt or args.structure
    if not path:
        raise CliError("eval needs a structure file")
    m = load_structure_file(path)
    try:
        phi = parse_positive(args.formula, m.signature)
    except FormulaError as exc:
        raise CliError(f"--formula: {exc}") from None
    free = free_vars(phi)
    if args.vars:
        names = [v.strip() for v in args.vars.split(",") if v.strip()]
        by_name = {v.name: v for v in free}
        extra = [n for n in names if n not in by_name]
        if extra or len(names) != len(free):
            raise CliError(f"--vars must list exactly the free variables {[v.name for v in free]}")
        free = tuple(by_name[n] for n in names)
    rows = solutions(m, phi, free)
    if not free:
        out.write("true\n" if rows else "false\n")
    else:
        for r in rows:
            out.write(_tuple_line(r) + "\n")
    return 0, {"formula": to_text(phi), "vars": [v.name for v in free], "solutions": [list(r) for r in rows]}


def cmd_hom(args, out):
    a = load_structure_file(args.source)
    b = load_structure_file(args.target)
    pin = _parse_pin(args.pin, a)
    if args.count:
        n = find_hom(a, b, pin=pin, mode="count", injective=args.injective)
        out.write(f"{n}\n")
        return 0, {"count": n}
    homs = find_hom(a, b, pin=pin, mode="all" if args.all else "first", injective=args.injective)
    if not homs:
        out.write("none\n")
    for h in homs:
        out.write(json.dumps(h.to_json(), sort_keys=True) + "\n")
    return 0, {"homomorphisms": [h.to_json() for h in homs]}


def cmd_core_structure(args, out):
    a = load_structure_file(args.structure)
    core, ret, kept = core_with_embedding(a)
    text = core.dumps()
    if args.out:
        write_atomic(args.out, text)
    else:
        out.write(text)
    return 0, {"core": core.to_json(), "retraction": ret.to_json(), "kept": kept}


def cmd_auts(args, out):
    a = load_structure_file(args.structure)
    auts = automorphisms(a)
    out.write(f"{len(auts)}\n")
    for h in auts:
        out.write(json.dumps(h.to_json(), sort_keys=True) + "\n")
    return 0, {"order": len(auts), "automorphisms": [h.to_json() for h in auts]}


def cmd_pc_check(args, out):
    m = load_structure_file(args.structure)
    t = load_theory_file(args.theory)
    v = pc_check(m, t, args.bound, jobs=args.jobs)
    out.write(v.status + "\n")
    rep = {"status": v.status, "bound": args.bound, "detail": v.detail}
    if v.witness is not None:
        out.write("witness: " + v.witness.describe() + "\n")
        rep["witness"] = {
            "formula": str(v.witness.formula),
            "tuple": list(v.witness.tuple.elems),
            "continuation": v.witness.counter_model.to_json(),
            "hom": v.witness.hom.to_json(),
        }
    return _status_code(args, v), rep


def cmd_universal(args, out):
    t = load_theory_file(args.theory)
    v = find_universal(t, args.bound, jobs=args.jobs)
    if v.yes:
        out.write(v.value.dumps())
    else:
        out.write(f"{v.status}: no universal model found among models of size <= {args.bound}\n")
    rep = {"status": v.status, "bound": args.bound, "detail": v.detail}
    if v.value is not None:
        rep["universal"] = v.value.to_json()
        if args.out:
            write_atomic(args.out, v.value.dumps())
    return _status_code(args, v), rep


def cmd_jcp(args, out):
    t = load_theory_file(args.theory)
    v = jcp_check(t, args.bound)
    out.write(v.status + "\n")
    rep = {"status": v.status, "bound": args.bound, "detail": v.detail}
    if v.no:
        a, b, _, _ = v.witness
        out.write("no joint continuation for:\n" + a.dumps() + b.dumps())
        rep["witness"] = [a.to_json(), b.to_json()]
    return _status_code(args, v), rep


def cmd_hausdorff(args, out):
    u = load_structure_file(args.structure)
    pool = _pool(u.signature, args.pool)
    v = hausdorff_probe(u, pool, args.arity)
    out.write(v.status + "\n")
    for x, p, q, phi, psi in v.value:
        out.write(f"{sort_name(x)} {list(p)} {list(q)}: phi = {phi}; psi = {psi}\n")
    for x, p, q in v.witness or ():
        out.write(f"{sort_name(x)} {list(p)} {list(q)}: no separating pair in the pool\n")
    rep = {
        "status": v.status,
        "separated": [[list(x), list(p), list(q), str(a), str(b)] for x, p, q, a, b in v.value],
        "unseparated": [[list(x), list(p), list(q)] for x, p, q in v.witness or ()],
    }
    return _status_code(args, v), rep


def _load_base(path, u):
    if not path:
        return None
    obj, _ = _read_json(path)
    if isinstance(obj, dict):
        return {s: list(v) for s, v in obj.items()}
    if isinstance(obj, list):
        return [tuple(p) for p in obj]
    raise CliError(f"{path}: base must map sorts to id lists or list [sort, id] pairs")


def cmd_typespace(args, out):
    u = load_structure_file(args.structure)
    base = _load_base(args.base, u)
    pool = _pool(u.signature, args.pool, free_default=args.arity + 1)
    max_args, max_params = _descriptor_budget(args.pool)
    ts = build_typespace(u, base, args.arity, require_immersed_base=args.require_immersed)
    sizes = {sort_name(x): ts.size(x) for x in ts.sorts}
    for name, n in sizes.items():
        out.write(f"{name} {n}\n")
    rep = {"sizes": sizes, "pool": pool.describe()}
    if args.emit_pattern:
        ps = pattern_structure(ts, pool, with_pi=args.pi, max_args=max_args, max_params=max_params)
        write_atomic(args.emit_pattern, ps.structure.dumps())
        manifest = args.manifest or _sidecar(args.emit_pattern)
        write_atomic(manifest, _dump(ps.manifest()))
        rep["pattern_relations"] = len(ps.relations)
    return 0, rep


def _sidecar(path):
    root, ext = os.path.splitext(path)
    return f"{root}.manifest{ext or '.json'}"


def _core_report(t, u, args):
    pool = _pool(u.signature, args.pool, free_default=args.arity + 1)
    max_args, max_params = _descriptor_budget(args.pool)
    res = core_of_theory(t, u, pool, k=args.arity, with_pi=args.pi, max_args=max_args,
                         max_params=max_params)
    sizes = {n: len(v) for n, v in res.kept.items()}
    rep = {
        "universal": u.to_json(),
        "pool": pool.describe(),
        "descriptor_budget": {"args": max_args, "params": max_params},
        "type_space_size": dict(res.pattern.structure.universe),
        "core_size": sizes,
        "kept": res.kept,
        "aut_order": len(automorphisms(res.core)),
        "certifications": core_invariants(res),
        "stabilized": None,
    }
    if args.pi:
        rep["aut_comparison"] = aut_compare(u, res).to_json()
    if args.stabilize:
        bigger = FormulaPool(u.signature, pool.max_bound_vars, pool.max_atoms + 1, pool.max_free_arity)
        res2 = core_of_theory(t, u, bigger, k=args.arity, with_pi=args.pi, max_args=max_args,
                              max_params=max_params, certify=False)
        rep["stabilized"] = {n: len(v) for n, v in res2.kept.items()} == sizes
    if args.repeat:
        rep["repeated"] = repeated_core_check(res, _pool(res.core.signature, args.repeat_pool, 2),
                                              k2=args.repeat_arity).to_json()
    if args.manifest:
        write_atomic(args.manifest, _dump(res.pattern.manifest()))
    return res, rep


def cmd_core(args, out):
    t = load_theory_file(args.theory)
    if args.universal:
        u = load_structure_file(args.universal)
    else:
        v = find_universal(t, args.bound, jobs=args.jobs)
        if not v.yes:
            out.write(f"{v.status}: no universal model found among models of size <= {args.bound}\n")
            return _status_code(args, v), {"status": v.status, "bound": args.bound}
        u = v.value
    res, rep = _core_report(t, u, args)
    out.write("core size: " + " ".join(f"{n}={k}" for n, k in rep["core_size"].items()) + "\n")
    out.write(f"aut order: {rep['aut_order']}\n")
    for key, ok in rep["certifications"].items():
        out.write(f"{key}: {'yes' if ok else 'no'}\n")
    if "aut_comparison" in rep:
        out.write(f"aut isomorphism: {'yes' if rep['aut_comparison']['isomorphism'] else 'no'}\n")
    if "repeated" in rep:
        r = rep["repeated"]
        ok = r["certified_universal"] and r["bijective"] and r["aut_isomorphic"]
        out.write(f"repeated core agrees: {'yes' if ok else 'no'}\n")
    if args.out:
        write_atomic(args.out, res.core.dumps())
    return 0, rep


def cmd_splus(args, out):
    m = load_structure_file(args.structure)
    t = load_theory_file(args.theory)
    if args.bound < 1:
        raise CliError("--bound must be at least 1")
    models = one_point_extensions(m, t, isolated=args.arity) if args.one_point else None
    sp = build_splus(m, t, args.bound, args.arity, models=models)
    sizes = {sort_name(x): len(sp.points[x]) for x in sp.sorts}
    for name, n in sizes.items():
        out.write(f"{name} {n}\n")
    rep = {"sizes": sizes, "least": {sort_name(x): sp.least(x) for x in sp.sorts}}
    if args.core:
        pool = _pool(m.signature, args.pool, free_default=args.arity + 1)
        max_args, max_params = _descriptor_budget(args.pool)
        ps, core, _, kept = splus_core(sp, pool, max_args=max_args, max_params=max_params)
        csize = {n: len(v) for n, v in kept.items()}
        out.write("core size: " + " ".join(f"{n}={k}" for n, k in csize.items()) + "\n")
        rep.update({"core_size": csize, "kept": kept, "pool": pool.describe(),
                    "relations": len(ps.relations)})
    return 0, rep


def cmd_morleyize(args, out):
    m = load_structure_file(args.structure)
    pool = fo_pool(m.signature, args.rank, args.arity, [m])
    mp, manifest = morleyize(m, pool)
    if args.out:
        write_atomic(args.out, mp.dumps())
    else:
        out.write(mp.dumps())
    if args.manifest:
        write_atomic(args.manifest, _dump(manifest))
    return 0, {"relations": len(manifest), "manifest": manifest}


def cmd_tpexpand(args, out):
    m = load_structure_file(args.structure)
    obj, _ = _read_json(args.sigmas)
    if not isinstance(obj, list) or not all(isinstance(s, list) for s in obj):
        raise CliError(f"{args.sigmas}: expected a list of lists of formula strings")
    try:
        mt = tp_expand(m, obj)
    except (FormulaError, EvaluationError) as exc:
        raise CliError(f"{args.sigmas}: {exc}") from None
    if args.out:
        write_atomic(args.out, mt.dumps())
    else:
        out.write(mt.dumps())
    return 0, {"added": len(obj)}


# ---------------------------------------------------------------------------
# argument parsing


def _globals(parser, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--jobs", type=int, default=d(1), help="worker threads (output order is fixed)")
    parser.add_argument("--strict", action="store_true", default=d(False),
                        help="exit 2 when a bounded check ends in 'unknown'")
    parser.add_argument("--report", default=d(None), help="write a JSON report to this file")


def build_parser():
    p = argparse.ArgumentParser(prog="plcore", description="Positive logic on finite structures.")
    p.add_argument("--version", action="version", version=f"plcore {__version__}")
    _globals(p, False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, True)
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    s = add("eval", cmd_eval, "solutions of a positive formula")
    s.add_argument("structure", nargs="?")
    s.add_argument("--structure", dest="structure_opt")
    s.add_argument("--formula", required=True)
    s.add_argument("--vars", help="comma-separated order of the free variables")

    s = add("hom", cmd_hom, "homomorphisms between two structures")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--pin")
    s.add_argument("--all", action="store_true")
    s.add_argument("--count", action="store_true")
    s.add_argument("--injective", action="store_true")

    s = add("core-structure", cmd_core_structure, "minimal retract of a structure")
    s.add_argument("structure")
    s.add_argument("--out")

    s = add("auts", cmd_auts, "automorphism group")
    s.add_argument("structure")

    s = add("pc-check", cmd_pc_check, "bounded positive-closedness test")
    s.add_argument("structure")
    s.add_argument("theory")
    s.add_argument("--bound", type=int, required=True)

    s = add("universal", cmd_universal, "search for the universal pc model")
    s.add_argument("theory")
    s.add_argument("--bound", type=int, required=True)
    s.add_argument("--out")

    s = add("jcp", cmd_jcp, "joint continuation property up to a bound")
    s.add_argument("theory")
    s.add_argument("--bound", type=int, required=True)

    s = add("hausdorff", cmd_hausdorff, "separate types by pool formulas")
    s.add_argument("structure")
    s.add_argument("--pool", default="atoms:2,bvars:1")
    s.add_argument("--arity", type=int, default=1)

    s = add("typespace", cmd_typespace, "type space of a structure over a base")
    s.add_argument("structure")
    s.add_argument("--base")
    s.add_argument("--arity", type=int, default=1)
    s.add_argument("--pool", default="atoms:2,bvars:1")
    s.add_argument("--pi", action="store_true", help="include projection graphs")
    s.add_argument("--require-immersed", action="store_true")
    s.add_argument("--emit-pattern")
    s.add_argument("--manifest")

    s = add("core", cmd_core, "core of a theory via its universal model")
    s.add_argument("theory")
    s.add_argument("--bound", type=int, default=4)
    s.add_argument("--arity", type=int, default=1)
    s.add_argument("--pool", default="atoms:2,bvars:1")
    s.add_argument("--pi", action="store_true")
    s.add_argument("--universal", help="use this structure instead of searching")
    s.add_argument("--stabilize", action="store_true", help="recompute with one more atom and compare")
    s.add_argument("--repeat", action="store_true", help="run the construction again on the core")
    s.add_argument("--repeat-pool", default="atoms:1,bvars:0",
                   help="pool for the second run, over the core's signature")
    s.add_argument("--repeat-arity", type=int, default=1)
    s.add_argument("--manifest")
    s.add_argument("--out")

    s = add("splus", cmd_splus, "space of realised positive types over a model")
    s.add_argument("structure")
    s.add_argument("theory")
    s.add_argument("--bound", type=int, default=3)
    s.add_argument("--arity", type=int, default=1)
    s.add_argument("--pool", default="atoms:2,bvars:1,args:1")
    s.add_argument("--core", action="store_true")
    s.add_argument("--one-point", action="store_true",
                   help="continuations are the one-point extensions of M plus unrelated "
                        "fresh points (ignores --bound)")

    s = add("morleyize", cmd_morleyize, "expand by first-order definable relations")
    s.add_argument("structure")
    s.add_argument("--rank", type=int, default=2)
    s.add_argument("--arity", type=int, default=2)
    s.add_argument("--out")
    s.add_argument("--manifest")

    s = add("tpexpand", cmd_tpexpand, "expand by common solutions of formula sets")
    s.add_argument("structure")
    s.add_argument("sigmas")
    s.add_argument("--out")
    return p


def run(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 1
    try:
        code, rep = args.fn(args, out)
        if args.report:
            write_atomic(args.report, _dump(rep))
        return code
    except CliError as exc:
        err.write(f"plcore: error: {exc}\n")
    except InequalityNotDefinable as exc:
        err.write(f"plcore: error: {exc}\n")
    except (StructureError, FormulaError, TheoryError, TypeSpaceError, EvaluationError) as exc:
        err.write(f"plcore: error: {exc}\n")
    except OSError as exc:
        err.write(f"plcore: error: {exc.filename or ''}: {exc.strerror or exc}\n")
    return 1


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
