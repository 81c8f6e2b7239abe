"""Command-line front end.

Every command prints a versioned header line, then its result in a
line-oriented form.  Exit status: 0 on success (or EQUAL), 1 when a check
fails, 2 for usage, input and bound errors.  Error messages start with
``error[io]``, ``error[parse]`` or ``error[bounds]``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .compiler import CompilerError, compile_family, decode_output, diagonalize_copy, extract_definition
from .core import (CodingError, FiniteStructure, NumberedEnumeration, StagedStructure, StructureError,
                   format_structure, parse_structure, positive_diagram)
from .formula import FormulaError, define_relation, format_family, parse_families, sat_stage
from .generic import (UNDECIDED, EmptySpec, FormulaSpec, GenericError, HitSpec, OperatorSpec, ProbeSpec,
                      build_generic)
from .interp import (InterpretationError, check_claims, check_equivalence_axioms, extract_interpretation,
                     functor_pair, parse_interpretation, realize_interpretation)
from .jump import (CATALOG_VERSION, formula_catalog, jump_commutes_check, positive_jump_stage, sigmac1_to_sigmap1,
                   sigmap1_to_sigmac1, totalize)
from .operator import (CatalogOperator, OperatorError, decode_axioms, encode_operator, format_operator,
                       parse_operator)
from .suites import FAULTS, SUITES, run_suite

DEFAULT_STAGE = 64


class UsageError(Exception):
    def __init__(self, kind, msg):
        super().__init__(msg)
        self.kind = kind


def _default_stage() -> int:
    raw = os.environ.get("EMT_STAGE_DEFAULT", "")
    if not raw:
        return DEFAULT_STAGE
    if not raw.isdigit():
        raise UsageError("bounds", f"EMT_STAGE_DEFAULT must be a natural number, got {raw!r}")
    return int(raw)


def _stage(args) -> int:
    return _default_stage() if args.stage is None else args.stage


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError("io", f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str, text: str):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError("io", f"cannot write {path}: {exc.strerror or exc}") from None


def _ints(text: str | None) -> tuple[int, ...]:
    if not text:
        return ()
    try:
        vals = tuple(int(tok) for tok in text.replace(",", " ").split())
    except ValueError:
        raise UsageError("parse", f"expected natural numbers, got {text!r}") from None
    if any(v < 0 for v in vals):
        raise UsageError("bounds", f"expected natural numbers, got {text!r}")
    return vals


def _structure(path: str, stage: int | None = None) -> FiniteStructure:
    try:
        s = parse_structure(_read(path))
    except StructureError as exc:
        raise UsageError("parse", f"{path}: {exc}") from None
    if isinstance(s, StagedStructure):
        return s.at(s.default_stage if stage is None else stage)
    return s


def _family(path: str, name: str | None, allow_negation=False):
    try:
        fams = parse_families(_read(path), allow_negation)
    except FormulaError as exc:
        raise UsageError("parse", f"{path}: {exc}") from None
    if not fams:
        raise UsageError("parse", f"{path}: no family defined")
    if name is None:
        return next(iter(fams.values()))
    if name not in fams:
        raise UsageError("parse", f"{path}: no family named {name!r} (have {', '.join(fams)})")
    return fams[name]


def _tuples(rel) -> list[str]:
    return [" ".join(map(str, t)) if t else "()" for t in sorted(rel, key=lambda t: (len(t), t))]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_eval(args, out):
    s = _structure(args.structure)
    fam = _family(args.formula, args.family)
    tup = _ints(args.tuple)
    if not fam.covers(len(tup)):
        raise UsageError("bounds", f"family {fam.name} has no formula of arity {len(tup)}")
    out.append("TRUE" if sat_stage(s, fam.formula(len(tup)), tup, _ints(args.params), _stage(args)) else "FALSE")
    return 0


def cmd_define(args, out):
    s = _structure(args.structure)
    fam = _family(args.formula, args.family)
    rel = define_relation(s, fam, _ints(args.params), args.max_len, _stage(args))
    out.append(f"count: {len(rel)}")
    out.extend(f"tuple: {t}" for t in _tuples(rel))
    return 0


def cmd_compile(args, out):
    s = _structure(args.structure)
    fam = _family(args.formula, args.family)
    bound = s.size if args.element_bound is None else args.element_bound
    op = compile_family(fam, _ints(args.params), bound, _stage(args), s.signature, args.max_len)
    text = format_operator(op)
    out.append(f"axioms: {len(op)}")
    out.append(f"element-bound: {bound}")
    if args.output:
        _write(args.output, text)
        out.append(f"written: {args.output}")
    else:
        out.extend(text.splitlines())
    return 0


def _operator(spec: str):
    if spec.isdigit():
        return CatalogOperator(int(spec))
    return parse_operator(_read(spec))


def cmd_extract(args, out):
    s = _structure(args.structure)
    op = _operator(args.operator)
    fam = extract_definition(s, op, _ints(args.base), args.stage, args.max_len)
    out.append(f"base: {' '.join(map(str, _ints(args.base))) or '-'}")
    out.extend(format_family(fam).splitlines())
    return 0


def cmd_diagonalize(args, out):
    s = _structure(args.structure)
    fam = _family(args.formula, args.family)
    R = define_relation(s, fam, _ints(args.params), args.max_len, _stage(args))
    adversaries = [_operator(a) for a in args.adversary]
    res = diagonalize_copy(s, R, adversaries, args.stage)
    out.append(f"enumeration: {' '.join(map(str, res.g.values))}")
    out.extend(res.transcript)
    for rep in res.reports:
        line = f"adversary {rep.index}: {rep.verdict}"
        if rep.verdict == "DEFEATED":
            line += f" index={' '.join(map(str, rep.witness))} witness={' '.join(map(str, rep.certificate.witness))}"
        out.append(line)
    return 0


def cmd_apply(args, out):
    op = _operator(args.operator)
    if args.structure:
        X = positive_diagram(_structure(args.structure)).codes
    else:
        X = frozenset(_ints(args.input))
    res = op.apply(X, args.stage)
    out.append(f"count: {len(res)}")
    out.extend(f"code: {c}" for c in sorted(res))
    if args.structure and args.decode:
        out.extend(f"tuple: {t}" for t in _tuples(decode_output(res)))
    return 0


def cmd_catalog(args, out):
    if args.encode:
        op = parse_operator(_read(args.encode))
        out.append(f"index: {encode_operator([(ax.premises, ax.conclusion) for ax in op.axioms()])}")
        return 0
    if args.decode is not None:
        for d, x in decode_axioms(args.decode):
            out.append(f"axiom {'self' if x < 0 else x} : {' '.join(map(str, d))}".rstrip())
        return 0
    if args.index is None:
        raise UsageError("parse", "catalog needs --index i,j, --encode FILE or --decode E")
    i, j = (_ints(args.index) + (None, None))[:2]
    if j is None:
        raise UsageError("parse", "--index expects two numbers i,j")
    sig = _structure(args.structure).signature if args.structure else _signature(args.signature)
    out.append(f"catalog-version: {CATALOG_VERSION}")
    out.append(f"formula: {formula_catalog(i, j, sig)}")
    return 0


def _signature(text):
    from .core import Signature

    rels = []
    for tok in (text or "").split():
        name, _, ar = tok.partition("/")
        if not ar.isdigit():
            raise UsageError("parse", f"bad relation declaration {tok!r}")
        rels.append((name, int(ar)))
    try:
        return Signature(tuple(rels))
    except StructureError as exc:
        raise UsageError("parse", str(exc)) from None


def cmd_jump(args, out):
    s = _structure(args.structure)
    approx = positive_jump_stage(s, args.depth, _stage(args), args.max_len)
    text = format_structure(approx.structure())
    for i, (c, p) in enumerate(zip(approx.confirmed, approx.pending)):
        out.append(f"slice {i}: confirmed={len(c)} pending={len(p)}")
    if args.output:
        _write(args.output, text)
        out.append(f"written: {args.output}")
    else:
        out.extend(text.splitlines())
    return 0


def cmd_commute(args, out):
    s = _structure(args.structure)
    f = NumberedEnumeration(_ints(args.enum))
    res = jump_commutes_check(s, f, args.depth, _stage(args), args.max_len)
    if res.equal:
        out.append("EQUAL")
        return 0
    out.append("DIFF")
    out.extend(f"left-only: {c}" for c in sorted(res.left_only))
    out.extend(f"right-only: {c}" for c in sorted(res.right_only))
    return 1


def cmd_totalize(args, out):
    text = format_structure(totalize(_structure(args.structure)))
    if args.output:
        _write(args.output, text)
        out.append(f"written: {args.output}")
    else:
        out.extend(text.splitlines())
    return 0


def cmd_translate(args, out):
    s = _structure(args.structure)
    fam = _family(args.formula, args.family, allow_negation=True)
    res = sigmap1_to_sigmac1(fam, s.signature) if args.reverse else sigmac1_to_sigmap1(fam, s.signature)
    out.extend(format_family(res).splitlines())
    return 0


def _dense_specs(text, s):
    specs = []
    for item in filter(None, (p.strip() for p in text.split(","))):
        if item.startswith("builtin:"):
            name = item[len("builtin:"):]
            if name == "empty":
                specs.append(EmptySpec())
            elif name[:1] in "DR" and name[1:].isdigit():
                specs.append(HitSpec(int(name[1:])) if name[0] == "D" else ProbeSpec(int(name[1:])))
            else:
                raise UsageError("parse", f"unknown builtin spec {name!r}")
        elif item.startswith("op:"):
            specs.append(OperatorSpec(parse_operator(_read(item[3:]))))
        else:
            path, _, name = item.partition(":")
            specs.append(FormulaSpec(_family(path, name or None)))
    return specs


def cmd_generic(args, out):
    s = _structure(args.structure)
    specs = _dense_specs(args.dense or "", s)
    run = build_generic(s, specs, args.steps, args.stage)
    out.extend(run.transcript)
    for k, (spec, v) in enumerate(zip(specs, run.final)):
        out.append(f"spec {k} {spec.label}: {v}")
    out.append(f"enumeration: {' '.join(map(str, run.g.values))}")
    return 1 if UNDECIDED in run.final else 0


def cmd_interpret(args, out):
    s = _structure(args.structure)
    I = parse_interpretation(_read(args.interp))
    r = realize_interpretation(I, s, args.max_len, args.stage)
    for k, members in enumerate(r.tau):
        out.append(f"class {k}: " + " | ".join(" ".join(map(str, t)) for t in members))
    text = format_structure(r.structure)
    if args.output:
        _write(args.output, text)
        out.append(f"written: {args.output}")
    else:
        out.extend(text.splitlines())
    return 0


def cmd_functor_extract(args, out):
    s = _structure(args.structure)
    I = parse_interpretation(_read(args.interp))
    fp = functor_pair(I, s.signature)
    ex = extract_interpretation(fp, s, args.tuple_bound, args.stage)
    out.append(f"dom: {len(ex.dom)}")
    out.append(f"sim: {len(ex.sim)}")
    out.append(f"nsim: {len(ex.nsim)}")
    out.append(f"undecided: {len(ex.undecided)}")
    rep = check_equivalence_axioms(ex)
    rep.violations += check_claims(ex, fp).violations
    out.append(f"violations: {len(rep.violations)}")
    out.extend(f"violation: {v}" for v in rep.violations[:20])
    out.extend(format_structure(ex.quotient).splitlines())
    return 0 if rep.ok and not ex.undecided else 1


def cmd_check(args, out):
    ok, text = run_suite(args.suite, args.seed, args.inject_fault, args.scale)
    out.extend(text.rstrip("\n").splitlines())
    return 0 if ok else 1


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error[usage]: {message}", file=sys.stderr)
        sys.exit(2)


def _nat(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a natural number, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a natural number, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="emt", description="Positive computable structure theory at desk scale.")
    p.add_argument("--version", action="version", version=f"emt {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.set_defaults(func=func)
        return sp

    def fam_args(sp, structure=True):
        if structure:
            sp.add_argument("--structure", required=True, help="structure file (.pstruct)")
        sp.add_argument("--formula", required=True, help="formula file (.spf)")
        sp.add_argument("--family", help="family name (default: first in file)")
        sp.add_argument("--params", help="parameter values")

    stage_help = "stage bound (default: EMT_STAGE_DEFAULT or 64)"

    sp = add("eval", cmd_eval, "Evaluate a family's formula on one tuple (sat_stage).")
    fam_args(sp)
    sp.add_argument("--tuple", default="", help="elements, space or comma separated")
    sp.add_argument("--stage", type=_nat, help=stage_help)

    sp = add("define", cmd_define, "List the relation a family defines (define_relation).")
    fam_args(sp)
    sp.add_argument("--max-len", type=_nat, default=3)
    sp.add_argument("--stage", type=_nat, help=stage_help)

    sp = add("compile", cmd_compile, "Compile a family into an enumeration operator (compile_family).")
    fam_args(sp)
    sp.add_argument("--element-bound", type=_nat, help="witness range (default: structure size)")
    sp.add_argument("--max-len", type=_nat, default=3)
    sp.add_argument("--stage", type=_nat, help=stage_help)
    sp.add_argument("-o", "--output", help="write the operator (.eop) here")

    sp = add("extract", cmd_extract, "Extract a defining family from an operator (extract_definition).")
    sp.add_argument("--structure", required=True)
    sp.add_argument("--operator", required=True, help=".eop file or catalog index")
    sp.add_argument("--base", default="", help="base tuple")
    sp.add_argument("--max-len", type=_nat, default=3)
    sp.add_argument("--stage", type=_nat, help="operator stage (default: all axioms)")

    sp = add("diagonalize", cmd_diagonalize, "Build a copy defeating adversary operators (diagonalize_copy).")
    fam_args(sp)
    sp.add_argument("--adversary", action="append", default=[], help=".eop file or catalog index (repeatable)")
    sp.add_argument("--max-len", type=_nat, default=3)
    sp.add_argument("--stage", type=_nat, help=stage_help)

    sp = add("apply", cmd_apply, "Apply an operator to a code set or a structure's diagram (apply).")
    sp.add_argument("--operator", required=True, help=".eop file or catalog index")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--input", help="codes, space or comma separated")
    g.add_argument("--structure", help="use the positive diagram of this structure")
    sp.add_argument("--decode", action="store_true", help="also print output codes as tuples")
    sp.add_argument("--stage", type=_nat, help="operator stage (default: all axioms)")

    sp = add("catalog", cmd_catalog, "Print catalog formulas, or convert operators to and from indices.")
    sp.add_argument("--index", help="i,j: formula i with j free variables (formula_catalog)")
    sp.add_argument("--structure", help="take the signature from this structure")
    sp.add_argument("--signature", default="E/2", help="signature, e.g. 'E/2 P/1' (default E/2)")
    sp.add_argument("--encode", help="operator file to encode as a catalog index")
    sp.add_argument("--decode", type=_nat, help="catalog index to decode into axioms")

    sp = add("jump", cmd_jump, "Stage approximation of the positive jump (positive_jump_stage).")
    sp.add_argument("--structure", required=True)
    sp.add_argument("--depth", type=_nat, default=5)
    sp.add_argument("--stage", type=_nat, help=stage_help)
    sp.add_argument("--max-len", type=_nat, default=2)
    sp.add_argument("-o", "--output")

    sp = add("commute-check", cmd_commute, "Compare pullback-then-jump with jump-then-pullback (jump_commutes_check).")
    sp.add_argument("--structure", required=True)
    sp.add_argument("--enum", required=True, help="enumeration prefix, e.g. '1 0 2'")
    sp.add_argument("--depth", type=_nat, default=5)
    sp.add_argument("--stage", type=_nat, help=stage_help)
    sp.add_argument("--max-len", type=_nat, default=2)

    sp = add("totalize", cmd_totalize, "Expand a structure by the complements of its relations (totalize).")
    sp.add_argument("--structure", required=True)
    sp.add_argument("-o", "--output")

    sp = add("translate", cmd_translate, "Replace negated atoms by complement relations (sigmac1_to_sigmap1).")
    fam_args(sp)
    sp.add_argument("--reverse", action="store_true", help="translate back (sigmap1_to_sigmac1)")

    sp = add("generic", cmd_generic, "Build an enumeration deciding the listed sets (build_generic).")
    sp.add_argument("--structure", required=True)
    sp.add_argument("--dense", default="", help="comma list: file.spf[:family], op:file.eop, builtin:D<n>, "
                                                 "builtin:R<e>, builtin:empty")
    sp.add_argument("--steps", type=_nat)
    sp.add_argument("--stage", type=_nat, help="stage bound (default: exact)")

    sp = add("interpret", cmd_interpret, "Realize an interpretation on a structure (realize_interpretation).")
    sp.add_argument("--structure", required=True)
    sp.add_argument("--interp", required=True, help="interpretation file (.spi)")
    sp.add_argument("--max-len", type=_nat)
    sp.add_argument("--stage", type=_nat, help="stage bound (default: exact)")
    sp.add_argument("-o", "--output")

    sp = add("functor-extract", cmd_functor_extract,
             "Extract Dom, sim, nsim and relations from an interpretation's functor pair (extract_interpretation).")
    sp.add_argument("--structure", required=True)
    sp.add_argument("--interp", required=True)
    sp.add_argument("--tuple-bound", type=_nat, default=2)
    sp.add_argument("--stage", type=_nat, help="stage bound (default: exact)")

    sp = add("check", cmd_check, "Run a property suite over a seeded corpus (run_suite).")
    sp.add_argument("suite", choices=SUITES + ("all",))
    sp.add_argument("--seed", type=_nat, default=0)
    sp.add_argument("--scale", type=_nat, default=1, help="corpus size multiplier")
    sp.add_argument("--inject-fault", choices=FAULTS, help="corrupt the objects under test")
    return p


_ERROR_KINDS = (
    (OSError, "io"),
    (FormulaError, "parse"),
    (OperatorError, "parse"),
    (InterpretationError, "parse"),
    (CodingError, "bounds"),
    (StructureError, "bounds"),
    (CompilerError, "bounds"),
    (GenericError, "bounds"),
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = [f"# emt {__version__} catalog-v{CATALOG_VERSION} {args.command}"]
    try:
        status = args.func(args, out)
    except UsageError as exc:
        print(f"error[{exc.kind}]: {exc}", file=sys.stderr)
        return 2
    except tuple(cls for cls, _ in _ERROR_KINDS) as exc:
        kind = next(k for cls, k in _ERROR_KINDS if isinstance(exc, cls))
        print(f"error[{kind}]: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write("\n".join(out) + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
