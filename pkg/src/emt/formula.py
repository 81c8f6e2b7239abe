"""Positive existential formula families: AST, parser, printer and evaluation.

A formula is a stream of disjuncts, each an existentially quantified
conjunction of atoms.  The stream is an explicit list followed by any number
of generators; a generator is a template with one integer parameter ``n``
that yields one disjunct per value of ``n``.  Stream position ``j`` is the
disjunct's stage: ``sat_stage(..., stage)`` only consults positions ``<= stage``.

Variables are ``x1, x2, ...`` (free, one per tuple entry), ``z1, z2, ...``
(parameters) and bound variables declared after ``exists``.  Inside
templates ``x[e]``, ``z[e]`` and ``y[e]`` take index expressions built from
integers, ``+ - *``, the generator variable, ``rep`` variables and ``a``
(the arity of the formula being expanded).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .core import EQ, NEQ, REL_OFFSET, FiniteStructure, Signature, StructureError, check_elements

EQ_REL = "="
NEQ_REL = "neq"


class FormulaError(ValueError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, msg, line=0, col=0):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {msg}" if line else msg)


# --------------------------------------------------------------------------
# concrete AST
# --------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Var:
    sort: str  # 'x' free, 'z' parameter, 'y' bound
    index: int  # 0-based

    def __str__(self):
        return f"{self.sort}{self.index + 1}"


@dataclass(frozen=True, order=True)
class Atom:
    rel: str
    args: tuple[Var, ...]
    negated: bool = False

    def __str__(self):
        neg = "!" if self.negated else ""
        if self.rel == EQ_REL:
            return f"{neg}{self.args[0]} = {self.args[1]}"
        return f"{neg}{self.rel}({','.join(map(str, self.args))})"

    def vars(self):
        return self.args


@dataclass(frozen=True)
class Disjunct:
    bound_count: int
    atoms: tuple[Atom, ...]

    def __post_init__(self):
        for at in self.atoms:
            for v in at.args:
                if v.sort == "y" and v.index >= self.bound_count:
                    raise FormulaError(f"bound variable {v} exceeds the {self.bound_count} declared")

    def __str__(self):
        body = " & ".join(map(str, self.atoms)) if self.atoms else "true"
        if self.bound_count:
            names = ", ".join(f"y{i + 1}" for i in range(self.bound_count))
            return f"exists {names} . {body}"
        return body

    def max_free(self) -> int:
        return max((v.index + 1 for at in self.atoms for v in at.args if v.sort == "x"), default=0)

    def max_param(self) -> int:
        return max((v.index + 1 for at in self.atoms for v in at.args if v.sort == "z"), default=0)

    def has_negation(self) -> bool:
        return any(at.negated for at in self.atoms)


def canonical_disjunct(d: Disjunct) -> Disjunct:
    """Renumber bound variables by first use and sort atoms; drops unused bound slots."""
    order: dict[int, int] = {}
    for at in d.atoms:
        for v in at.args:
            if v.sort == "y" and v.index not in order:
                order[v.index] = len(order)

    def rn(v):
        return Var("y", order[v.index]) if v.sort == "y" else v

    atoms = sorted({Atom(a.rel, tuple(rn(v) for v in a.args), a.negated) for a in d.atoms})
    return Disjunct(len(order), tuple(atoms))


# --------------------------------------------------------------------------
# template AST (generators and arity-dependent lines)
# --------------------------------------------------------------------------
# index expressions: ('num', k) | ('id', name) | (op, left, right) with op in '+-*'

def _eval_expr(e, env):
    tag = e[0]
    if tag == "num":
        return e[1]
    if tag == "id":
        return env[e[1]]
    a, b = _eval_expr(e[1], env), _eval_expr(e[2], env)
    return a + b if tag == "+" else a - b if tag == "-" else a * b


_PREC = {"+": 1, "-": 1, "*": 2}


def _fmt_expr(e, prec=0, right=False):
    tag = e[0]
    if tag == "num":
        return str(e[1])
    if tag == "id":
        return e[1]
    p = _PREC[tag]
    s = f"{_fmt_expr(e[1], p)}{tag}{_fmt_expr(e[2], p, True)}"
    if p < prec or (right and p == prec):
        s = f"({s})"
    return s


def _expr_ids(e):
    if e[0] == "id":
        return {e[1]}
    if e[0] == "num":
        return set()
    return _expr_ids(e[1]) | _expr_ids(e[2])


@dataclass(frozen=True)
class VarT:
    sort: str  # 'x', 'z' or 'b' (bound, by declared name)
    expr: tuple | None  # 1-based index expression; None for a plain bound name
    name: str = ""

    def __str__(self):
        if self.sort == "b":
            return self.name if self.expr is None else f"{self.name}[{_fmt_expr(self.expr)}]"
        if self.expr[0] == "num":
            return f"{self.sort}{self.expr[1]}"
        return f"{self.sort}[{_fmt_expr(self.expr)}]"


@dataclass(frozen=True)
class AtomT:
    rel: str
    args: tuple[VarT, ...]
    negated: bool = False

    def __str__(self):
        neg = "!" if self.negated else ""
        if self.rel == EQ_REL:
            return f"{neg}{self.args[0]} = {self.args[1]}"
        return f"{neg}{self.rel}({','.join(map(str, self.args))})"


@dataclass(frozen=True)
class RepT:
    var: str
    lo: tuple
    hi: tuple
    body: tuple  # of AtomT / RepT

    def __str__(self):
        inner = " & ".join(map(str, self.body))
        if len(self.body) != 1 or isinstance(self.body[0], RepT):
            inner = f"({inner})"
        return f"rep {self.var}={_fmt_expr(self.lo)}..{_fmt_expr(self.hi)} : {inner}"


@dataclass(frozen=True)
class BoundT:
    name: str
    lo: tuple | None = None
    hi: tuple | None = None

    def __str__(self):
        if self.lo is None:
            return self.name
        return f"{self.name}[{_fmt_expr(self.lo)}..{_fmt_expr(self.hi)}]"


class _Unsat(Exception):
    """An index left its range; the expanded disjunct is unsatisfiable."""


@dataclass(frozen=True)
class Template:
    bound: tuple[BoundT, ...]
    body: tuple  # of AtomT / RepT

    def __str__(self):
        body = " & ".join(map(str, self.body)) if self.body else "true"
        if self.bound:
            return f"exists {', '.join(map(str, self.bound))} . {body}"
        return body

    def expand(self, env: dict, arity: int, param_count: int) -> Disjunct | None:
        slots: dict[str, tuple[int, int, int]] = {}
        count = 0
        for b in self.bound:
            if b.lo is None:
                slots[b.name] = (count, 0, 0)
                count += 1
            else:
                lo, hi = _eval_expr(b.lo, env), _eval_expr(b.hi, env)
                width = max(hi - lo + 1, 0)
                slots[b.name] = (count, lo, hi)
                count += width

        def var(v: VarT, env):
            if v.sort == "b":
                base, lo, hi = slots[v.name]
                if v.expr is None:
                    return Var("y", base)
                k = _eval_expr(v.expr, env)
                if not lo <= k <= hi:
                    raise _Unsat
                return Var("y", base + k - lo)
            k = _eval_expr(v.expr, env)
            limit = arity if v.sort == "x" else param_count
            if not 1 <= k <= limit:
                raise _Unsat
            return Var(v.sort, k - 1)

        atoms: list[Atom] = []

        def walk(items, env):
            for it in items:
                if isinstance(it, RepT):
                    lo, hi = _eval_expr(it.lo, env), _eval_expr(it.hi, env)
                    for i in range(lo, hi + 1):
                        walk(it.body, {**env, it.var: i})
                else:
                    atoms.append(Atom(it.rel, tuple(var(v, env) for v in it.args), it.negated))

        try:
            walk(self.body, env)
        except _Unsat:
            return None
        return Disjunct(count, tuple(atoms))


@dataclass(frozen=True)
class Generator:
    name: str
    var: str
    start: int
    template: Template

    def __str__(self):
        return f"generator {self.name}({self.var} in {self.start}..): {self.template}"

    def expand(self, n: int, arity: int, param_count: int) -> Disjunct | None:
        return _expand_cached(self.template, self.var, n, arity, param_count)


@lru_cache(maxsize=65536)
def _expand_cached(template, var, n, arity, param_count):
    return template.expand({var: n, "a": arity}, arity, param_count)


# --------------------------------------------------------------------------
# formulas and families
# --------------------------------------------------------------------------

def _usable(d: Disjunct | None, free_count: int, param_count: int) -> Disjunct | None:
    if d is None or d.max_free() > free_count or d.max_param() > param_count:
        return None
    return d


@dataclass(frozen=True)
class SigmaP1Formula:
    """The formula of one arity: explicit disjuncts first, then generators round-robin."""

    free_count: int
    param_count: int = 0
    explicit: tuple = ()  # of Disjunct | None (None = unsatisfiable placeholder)
    generators: tuple[Generator, ...] = ()

    @property
    def length(self) -> int | None:
        return None if self.generators else len(self.explicit)

    def disjunct(self, j: int) -> Disjunct | None:
        if j < len(self.explicit):
            return _usable(self.explicit[j], self.free_count, self.param_count)
        if not self.generators:
            raise IndexError(j)
        k = j - len(self.explicit)
        g = self.generators[k % len(self.generators)]
        return _usable(g.expand(g.start + k // len(self.generators), self.free_count, self.param_count),
                       self.free_count, self.param_count)

    def disjuncts(self, stage: int) -> Iterator[tuple[int, Disjunct]]:
        """Usable disjuncts with stream position ``<= stage``."""
        top = stage + 1 if self.length is None else min(stage + 1, self.length)
        for j in range(top):
            d = self.disjunct(j)
            if d is not None:
                yield j, d

    def __str__(self):
        parts = [str(d) if d is not None else "false" for d in self.explicit]
        parts += [str(g) for g in self.generators]
        return " | ".join(f"({p})" for p in parts) if parts else "false"


@dataclass(frozen=True)
class Line:
    arities: tuple[int, ...] | None  # None means every arity
    item: object  # Disjunct | Template | Generator


@dataclass(frozen=True)
class SigmaP1Family:
    name: str
    param_count: int = 0
    lines: tuple[Line, ...] = ()

    def covers(self, arity: int) -> bool:
        return any(ln.arities is None or arity in ln.arities for ln in self.lines)

    @property
    def arities(self) -> tuple[int, ...] | None:
        if any(ln.arities is None for ln in self.lines):
            return None
        return tuple(sorted({a for ln in self.lines for a in ln.arities}))

    def formula(self, arity: int) -> SigmaP1Formula:
        return _family_formula(self, arity)

    def has_negation(self) -> bool:
        for ln in self.lines:
            item = ln.item
            if isinstance(item, Disjunct) and item.has_negation():
                return True
            if isinstance(item, (Template, Generator)) and "!" in str(item):
                return True
        return False


@lru_cache(maxsize=4096)
def _family_formula(fam: SigmaP1Family, arity: int) -> SigmaP1Formula:
    explicit, gens = [], []
    for ln in fam.lines:
        if ln.arities is not None and arity not in ln.arities:
            continue
        item = ln.item
        if isinstance(item, Generator):
            gens.append(item)
        elif isinstance(item, Template):
            explicit.append(item.expand({"a": arity}, arity, fam.param_count))
        else:
            explicit.append(item)
    return SigmaP1Formula(arity, fam.param_count, tuple(explicit), tuple(gens))


def family_from_disjuncts(name: str, by_arity: dict, param_count: int = 0) -> SigmaP1Family:
    """Build a family from concrete disjunct lists keyed by arity (``None`` = every arity)."""
    lines = []
    for arity in sorted(by_arity, key=lambda a: (a is None, a or 0)):
        ar = None if arity is None else (arity,)
        for d in by_arity[arity]:
            lines.append(Line(ar, d))
    return SigmaP1Family(name, param_count, tuple(lines))


def formula_family(name: str, formulas: dict[int, SigmaP1Formula], param_count: int = 0) -> SigmaP1Family:
    lines = []
    for arity in sorted(formulas):
        f = formulas[arity]
        for d in f.explicit:
            lines.append(Line((arity,), d if d is not None else Disjunct(0, (Atom(NEQ_REL, (Var("x", 0), Var("x", 0))),))))
        for g in f.generators:
            lines.append(Line((arity,), g))
    return SigmaP1Family(name, param_count, tuple(lines))


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<neg>->|¬|~|!)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<dots>\.\.)
  | (?P<sym>[()\[\],.&=:+\-*|])
""", re.VERBOSE)

_FREE = re.compile(r"^([xz])(\d+)$")
_RESERVED = {"exists", "rep", "true", "eq", "neq", "in", "not", "forall", "a"}


class _Parser:
    def __init__(self, text, line, col0, allow_negation):
        self.line = line
        self.allow_negation = allow_negation
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, col0 + pos + 1)
            kind = m.lastgroup
            if kind != "ws":
                val = m.group()
                if kind == "id" and val in ("not", "forall"):
                    kind = "neg" if val == "not" else "forall"
                self.toks.append((kind, val, col0 + pos + 1))
            pos = m.end()
        self.toks.append(("eof", "", col0 + len(text) + 1))
        self.i = 0

    def err(self, msg, tok=None):
        tok = tok or self.toks[self.i]
        return FormulaSyntaxError(msg, self.line, tok[2])

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, val):
        t = self.next()
        if t[1] != val:
            raise self.err(f"expected {val!r}, found {t[1] or 'end of line'!r}", t)
        return t

    def check_positive(self, t):
        if t[0] == "forall":
            raise self.err("universal quantifiers are not allowed", t)
        if t[0] == "neg":
            if t[1] == "->":
                raise self.err("implication is not allowed in positive formulas", t)
            if not self.allow_negation:
                raise self.err(f"negation {t[1]!r} is not allowed in positive formulas", t)

    def done(self):
        t = self.peek()
        if t[0] != "eof":
            raise self.err(f"unexpected {t[1]!r}")

    # expressions ------------------------------------------------------
    def expr(self, scope):
        left = self.term(scope)
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            left = (op, left, self.term(scope))
        return left

    def term(self, scope):
        left = self.factor(scope)
        while self.peek()[1] == "*":
            self.next()
            left = ("*", left, self.factor(scope))
        return left

    def factor(self, scope):
        t = self.next()
        if t[0] == "num":
            return ("num", int(t[1]))
        if t[0] == "id":
            if t[1] not in scope:
                raise self.err(f"unknown index variable {t[1]!r}", t)
            return ("id", t[1])
        if t[1] == "(":
            e = self.expr(scope)
            self.expect(")")
            return e
        raise self.err(f"expected an index expression, found {t[1] or 'end of line'!r}", t)

    # disjunct templates ---------------------------------------------------
    def template(self, scope):
        bound: list[BoundT] = []
        t = self.peek()
        if t[0] == "forall":
            self.check_positive(t)
        if t[1] == "exists":
            self.next()
            while True:
                nt = self.next()
                if nt[0] != "id" or nt[1] in _RESERVED or _FREE.match(nt[1]) or nt[1] in scope:
                    raise self.err(f"bad bound variable name {nt[1]!r}", nt)
                if any(b.name == nt[1] for b in bound):
                    raise self.err(f"bound variable {nt[1]!r} declared twice", nt)
                if self.peek()[1] == "[":
                    self.next()
                    lo = self.expr(scope)
                    self.expect("..")
                    hi = self.expr(scope)
                    self.expect("]")
                    bound.append(BoundT(nt[1], lo, hi))
                else:
                    bound.append(BoundT(nt[1]))
                if self.peek()[1] == ",":
                    self.next()
                    continue
                break
            self.expect(".")
        names = {b.name: b for b in bound}
        if self.peek()[1] == "true":
            self.next()
            body = ()
        else:
            body = tuple(self.conj(scope, names))
        self.done()
        return Template(tuple(bound), body)

    def conj(self, scope, names):
        items = [self.item(scope, names)]
        while self.peek()[1] == "&":
            self.next()
            items.append(self.item(scope, names))
        t = self.peek()
        if t[0] == "neg" or t[0] == "forall":
            self.check_positive(t)
        if t[1] == "|":
            raise self.err("disjunction inside a disjunct; use separate disjunct lines")
        return items

    def item(self, scope, names):
        t = self.peek()
        if t[1] == "rep":
            self.next()
            var = self.next()
            if var[0] != "id" or var[1] in scope or var[1] in names or var[1] in _RESERVED:
                raise self.err(f"bad repetition variable {var[1]!r}", var)
            self.expect("=")
            lo = self.expr(scope)
            self.expect("..")
            hi = self.expr(scope)
            self.expect(":")
            inner = scope | {var[1]}
            if self.peek()[1] == "(":
                self.next()
                body = self.conj(inner, names)
                self.expect(")")
            else:
                body = [self.item(inner, names)]
            return RepT(var[1], lo, hi, tuple(body))
        return self.atom(scope, names)

    def atom(self, scope, names):
        negated = False
        t = self.peek()
        if t[0] in ("neg", "forall"):
            self.check_positive(t)
            self.next()
            negated = True
            nt = self.peek()
            if nt[1] == "(" or nt[1] in ("exists", "rep") or nt[0] == "neg":
                raise self.err("negation may only be applied to an atom", nt)
        t = self.peek()
        if t[0] == "id" and self.peek(1)[1] == "(" and not _FREE.match(t[1]) and t[1] not in names:
            self.next()
            self.expect("(")
            args = [self.var(scope, names)]
            while self.peek()[1] == ",":
                self.next()
                args.append(self.var(scope, names))
            self.expect(")")
            rel = t[1]
            if rel == "eq":
                rel = EQ_REL
            if rel in (EQ_REL, NEQ_REL) and len(args) != 2:
                raise self.err(f"{t[1]} takes two arguments", t)
            return AtomT(rel, tuple(args), negated)
        left = self.var(scope, names)
        self.expect("=")
        right = self.var(scope, names)
        return AtomT(EQ_REL, (left, right), negated)

    def var(self, scope, names):
        t = self.next()
        if t[0] != "id":
            raise self.err(f"expected a variable, found {t[1] or 'end of line'!r}", t)
        m = _FREE.match(t[1])
        if m:
            k = int(m.group(2))
            if k < 1:
                raise self.err(f"variable indices start at 1, got {t[1]}", t)
            return VarT(m.group(1), ("num", k))
        if t[1] in ("x", "z") and self.peek()[1] == "[":
            self.next()
            e = self.expr(scope)
            self.expect("]")
            return VarT(t[1], e)
        if t[1] in names:
            b = names[t[1]]
            if b.lo is None:
                return VarT("b", None, t[1])
            self.expect("[")
            e = self.expr(scope)
            self.expect("]")
            return VarT("b", e, t[1])
        raise self.err(f"undeclared variable {t[1]!r}", t)


def _closed(template: Template) -> bool:
    ids = set()
    for b in template.bound:
        if b.lo is not None:
            ids |= _expr_ids(b.lo) | _expr_ids(b.hi)

    def walk(items, bound_ids):
        nonlocal ids
        for it in items:
            if isinstance(it, RepT):
                ids |= (_expr_ids(it.lo) | _expr_ids(it.hi)) - bound_ids
                walk(it.body, bound_ids | {it.var})
            else:
                for v in it.args:
                    if v.expr is not None:
                        ids |= _expr_ids(v.expr) - bound_ids

    walk(template.body, set())
    return not ids


def _concrete(template: Template, param_count: int, line: int) -> Disjunct:
    d = template.expand({}, 10 ** 9, param_count)
    if d is None:
        raise FormulaSyntaxError("index out of range in disjunct", line, 1)
    return d


def parse_families(text: str, allow_negation: bool = False) -> dict[str, SigmaP1Family]:
    """Parse every ``family`` block of a formula file, keyed by name."""
    families: dict[str, SigmaP1Family] = {}
    order: list[str] = []
    state: dict | None = None

    def finish():
        if state is not None:
            families[state["name"]] = SigmaP1Family(state["name"], state["params"], tuple(state["lines"]))

    # join continuation lines (leading whitespace) onto their directive
    logical: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line[0].isspace() and logical:
            n0, prev = logical[-1]
            logical[-1] = (n0, prev + " " + line.strip())
        else:
            logical.append((lineno, line.strip()))

    for lineno, line in logical:
        head, _, rest = line.partition(" ")
        rest_col = len(head) + 2
        if head == "family":
            finish()
            name = rest.strip()
            if not name.isidentifier():
                raise FormulaSyntaxError(f"bad family name {name!r}", lineno, rest_col)
            if name in families or name in order:
                raise FormulaSyntaxError(f"family {name!r} defined twice", lineno, rest_col)
            order.append(name)
            state = {"name": name, "params": 0, "arities": None, "lines": []}
            continue
        if state is None:
            raise FormulaSyntaxError(f"{head!r} before any 'family' line", lineno, 1)
        if head == "params":
            if state["lines"]:
                raise FormulaSyntaxError("'params' must precede the disjuncts", lineno, 1)
            if not rest.strip().isdigit():
                raise FormulaSyntaxError(f"bad parameter count {rest.strip()!r}", lineno, rest_col)
            state["params"] = int(rest)
        elif head == "arity":
            spec = rest.replace(",", " ").split()
            if spec == ["uniform"]:
                state["arities"] = None
            elif spec and all(tok.isdigit() for tok in spec):
                state["arities"] = tuple(sorted({int(tok) for tok in spec}))
            else:
                raise FormulaSyntaxError(f"bad arity list {rest.strip()!r}", lineno, rest_col)
        elif head == "disjunct":
            p = _Parser(rest, lineno, rest_col - 1, allow_negation)
            t = p.template(frozenset({"a"}))
            item = _concrete(t, state["params"], lineno) if _closed(t) else t
            if isinstance(item, Disjunct):
                if item.max_param() > state["params"]:
                    raise FormulaSyntaxError(f"parameter z{item.max_param()} beyond declared {state['params']}", lineno, 1)
            state["lines"].append(Line(state["arities"], item))
        elif head == "generator":
            m = re.match(r"\s*([A-Za-z_]\w*)\s*\(\s*([A-Za-z_]\w*)\s+in\s+(\d+)\s*\.\.\s*\)\s*:", rest)
            if not m:
                raise FormulaSyntaxError("expected 'generator <name>(<var> in <start>..): <template>'", lineno, rest_col)
            var = m.group(2)
            if var in _RESERVED or _FREE.match(var):
                raise FormulaSyntaxError(f"bad generator variable {var!r}", lineno, rest_col)
            body = rest[m.end():]
            p = _Parser(body, lineno, rest_col - 1 + m.end(), allow_negation)
            t = p.template(frozenset({"a", var}))
            state["lines"].append(Line(state["arities"], Generator(m.group(1), var, int(m.group(3)), t)))
        else:
            raise FormulaSyntaxError(f"unknown directive {head!r}", lineno, 1)
    finish()
    return {name: families[name] for name in order}


def parse_family(text: str, name: str | None = None, allow_negation: bool = False) -> SigmaP1Family:
    fams = parse_families(text, allow_negation)
    if not fams:
        raise FormulaSyntaxError("no family defined")
    if name is None:
        return next(iter(fams.values()))
    if name not in fams:
        raise FormulaError(f"no family named {name!r} (have {', '.join(fams)})")
    return fams[name]


def parse_disjunct(text: str, param_count: int = 0, allow_negation: bool = False) -> Disjunct:
    t = _Parser(text, 1, 0, allow_negation).template(frozenset({"a"}))
    if not _closed(t):
        raise FormulaSyntaxError("disjunct uses index expressions; wrap it in a family")
    return _concrete(t, param_count, 1)


def format_family(fam: SigmaP1Family) -> str:
    out = [f"family {fam.name}"]
    if fam.param_count:
        out.append(f"params {fam.param_count}")
    current: object = "unset"
    for ln in fam.lines:
        if ln.arities != current:
            if not (current == "unset" and ln.arities is None):
                out.append("arity uniform" if ln.arities is None else "arity " + " ".join(map(str, ln.arities)))
            current = ln.arities
        if isinstance(ln.item, Generator):
            out.append(str(ln.item))
        else:
            out.append(f"disjunct {ln.item}")
    return "\n".join(out) + "\n"


def format_families(fams: Iterable[SigmaP1Family]) -> str:
    return "\n".join(format_family(f) for f in fams)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def _atom_rows(d: Disjunct, relations: tuple, free_count: int, param_count: int):
    sig = Signature(relations)
    width = max([len(at.args) for at in d.atoms] + [2])
    rows = np.zeros((len(d.atoms), _kernels.VARS + width), dtype=np.int64)

    def slot(v: Var):
        if v.sort == "x":
            return v.index
        if v.sort == "z":
            return free_count + v.index
        return free_count + param_count + v.index

    for r, at in enumerate(d.atoms):
        if at.rel == EQ_REL:
            kind = EQ
        elif at.rel == NEQ_REL:
            kind = NEQ
        else:
            try:
                i = sig.index(at.rel)
            except StructureError:
                raise FormulaError(f"relation {at.rel!r} is not in the signature") from None
            if sig.arity(i) != len(at.args):
                raise FormulaError(f"{at.rel} has arity {sig.arity(i)}, used with {len(at.args)} arguments")
            kind = i + REL_OFFSET
        slots = [slot(v) for v in at.args]
        rows[r, _kernels.KIND] = kind
        rows[r, _kernels.NEG] = int(at.negated)
        rows[r, _kernels.LEVEL] = max(slots) if slots else 0
        rows[r, _kernels.ARITY] = len(slots)
        rows[r, _kernels.VARS:_kernels.VARS + len(slots)] = slots
    rows.setflags(write=False)
    return rows


def disjunct_mask(s: FiniteStructure, d: Disjunct, free_count: int, params: Sequence[int],
                  assignment: Sequence[int] | None = None, backend=None) -> np.ndarray:
    """Mask over ``n ** free_count`` tuples satisfying ``d`` (or a single bool mask when pinned)."""
    p = len(params)
    rows = _atom_rows(d, s.signature.relations, free_count, p)
    nvars = free_count + p + d.bound_count
    fixed = np.full(max(nvars, 1), -1, dtype=np.int64)
    fixed[free_count:free_count + p] = params
    n_out = free_count
    if assignment is not None:
        fixed[:free_count] = assignment
        n_out = 0
    table, offsets = s.tables
    return _kernels.search_answers(s.size, table, offsets, s.labels, rows, nvars, fixed, n_out, backend)


def _check_call(s, phi_free, phi_params, assignment, params):
    if assignment is not None and len(assignment) != phi_free:
        raise FormulaError(f"formula has {phi_free} free variables, got a tuple of length {len(assignment)}")
    if len(params) != phi_params:
        raise FormulaError(f"formula takes {phi_params} parameters, got {len(params)}")
    check_elements(s, params)
    if assignment is not None:
        check_elements(s, assignment)


def sat_stage(s: FiniteStructure, phi: SigmaP1Formula, assignment: Sequence[int],
              params: Sequence[int] = (), stage: int = 0, backend=None) -> bool:
    assignment, params = tuple(assignment), tuple(params)
    _check_call(s, phi.free_count, phi.param_count, assignment, params)
    for _, d in phi.disjuncts(stage):
        if disjunct_mask(s, d, phi.free_count, params, assignment, backend)[0]:
            return True
    return False


def formula_mask(s: FiniteStructure, phi: SigmaP1Formula, params: Sequence[int] = (), stage: int = 0,
                 backend=None) -> np.ndarray:
    params = tuple(params)
    _check_call(s, phi.free_count, phi.param_count, None, params)
    mask = np.zeros(s.size ** phi.free_count, dtype=np.bool_)
    for _, d in phi.disjuncts(stage):
        mask |= disjunct_mask(s, d, phi.free_count, params, None, backend)
    return mask


def mask_tuples(mask: np.ndarray, n: int, arity: int) -> set[tuple[int, ...]]:
    out = set()
    for idx in np.nonzero(mask)[0]:
        idx = int(idx)
        t = []
        for _ in range(arity):
            idx, r = divmod(idx, n)
            t.append(r)
        out.add(tuple(reversed(t)))
    return out


def satisfying_tuples(s, phi, params=(), stage=0, backend=None) -> set[tuple[int, ...]]:
    return mask_tuples(formula_mask(s, phi, params, stage, backend), s.size, phi.free_count)


def define_relation(s: FiniteStructure, fam: SigmaP1Family, params: Sequence[int] = (), max_len: int = 3,
                    stage: int = 0, backend=None) -> frozenset:
    """All tuples of length ``<= max_len`` satisfying the family's formula of their length."""
    out: set = set()
    for arity in range(max_len + 1):
        if fam.covers(arity):
            out |= satisfying_tuples(s, fam.formula(arity), params, stage, backend)
    return frozenset(out)


def sigma1p_type(s: FiniteStructure, abar: Sequence[int], catalog_depth: int, stage: int) -> frozenset:
    """Catalog indices ``i <= catalog_depth`` whose formula of arity ``len(abar)`` holds of ``abar``."""
    from .jump import formula_catalog

    abar = tuple(abar)
    check_elements(s, abar)
    out = set()
    for i in range(catalog_depth + 1):
        if sat_stage(s, formula_catalog(i, len(abar), s.signature), abar, (), stage):
            out.add(i)
    return frozenset(out)
