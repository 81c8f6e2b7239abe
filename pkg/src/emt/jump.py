"""Formula catalog, Kleene slices, the positive jump and related codings.

Catalog order (version 1).  For a signature and a number ``j`` of free
variables, formula 0 is ``false`` and formula 1 is ``true``.  After that
formulas with finitely many disjuncts are listed by total atom count ``t``;
within one ``t`` by the number of disjuncts, then by the nondecreasing
sequence of disjunct sizes, then lexicographically by disjunct ranks.  The
disjuncts of one size are listed as strictly increasing atom sequences in a
fixed atom order (``=``, ``neq``, then relations in signature order; args
compared by ``x1 < x2 < ... < y1 < y2 < ...``), bound variables introduced
in order of first appearance.  ``=`` and ``neq`` atoms take sorted args.
Disjuncts of equal size inside one formula have strictly increasing rank.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator


from .core import (CodingError, FiniteStructure, NumberedEnumeration, Signature,
                   positive_diagram, pullback_structure)
from .formula import (EQ_REL, NEQ_REL, Atom, AtomT, Disjunct, FormulaError, Generator, Line, RepT,
                      SigmaP1Family, SigmaP1Formula, Template, Var, formula_mask, mask_tuples)

CATALOG_VERSION = 1


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------

def _var_key(v: Var):
    return (0 if v.sort == "x" else 1, v.index)


def _atom_key(at: Atom, order: dict):
    return (order[at.rel], tuple(_var_key(v) for v in at.args))


class _Walk:
    """Lazy, memoized grammar walk for one (signature, free-variable count)."""

    def __init__(self, relations: tuple, j: int):
        self.relations = relations
        self.j = j
        self.rels = [(EQ_REL, 2), (NEQ_REL, 2)] + list(relations)
        self.order = {name: k for k, (name, _) in enumerate(self.rels)}
        self.sized: dict[int, list[Disjunct]] = {}
        self.formulas: list[SigmaP1Formula] = [SigmaP1Formula(j, 0, ()), SigmaP1Formula(j, 0, (Disjunct(0, ()),))]
        self._gen = self._formulas()

    def _atoms_over(self, bound: int):
        pool = [Var("x", i) for i in range(self.j)] + [Var("y", i) for i in range(bound)]
        out = []
        for name, arity in self.rels:
            for args in itertools.product(pool, repeat=arity):
                if name in (EQ_REL, NEQ_REL) and _var_key(args[0]) > _var_key(args[1]):
                    continue
                out.append(Atom(name, args))
        out.sort(key=lambda a: _atom_key(a, self.order))
        return out

    def disjuncts(self, m: int) -> list[Disjunct]:
        if m in self.sized:
            return self.sized[m]
        maxar = max(a for _, a in self.rels)
        atoms = self._atoms_over(m * maxar)
        out = []

        def rec(start, chosen, used):
            if len(chosen) == m:
                out.append(Disjunct(used, tuple(chosen)))
                return
            for k in range(start, len(atoms)):
                at = atoms[k]
                nu = used
                ok = True
                for v in at.args:
                    if v.sort == "y":
                        if v.index > nu:
                            ok = False
                            break
                        if v.index == nu:
                            nu += 1
                if ok:
                    rec(k + 1, chosen + [at], nu)

        rec(0, [], 0)
        self.sized[m] = out
        return out

    def _formulas(self) -> Iterator[SigmaP1Formula]:
        t = 1
        while True:
            for k in range(1, t + 1):
                for parts in _partitions(t, k):
                    groups = [(size, sum(1 for p in parts if p == size)) for size in sorted(set(parts))]
                    choices = [list(itertools.combinations(range(len(self.disjuncts(size))), cnt))
                               for size, cnt in groups]
                    for combo in itertools.product(*choices):
                        ds = []
                        for (size, _), ranks in zip(groups, combo):
                            ds.extend(self.disjuncts(size)[r] for r in ranks)
                        yield SigmaP1Formula(self.j, 0, tuple(ds))
            t += 1

    def get(self, i: int) -> SigmaP1Formula:
        while len(self.formulas) <= i:
            self.formulas.append(next(self._gen))
        return self.formulas[i]


def _partitions(t: int, k: int, least: int = 1):
    """Nondecreasing sequences of ``k`` positive parts summing to ``t``."""
    if k == 1:
        if t >= least:
            yield (t,)
        return
    for first in range(least, t // k + 1):
        for rest in _partitions(t - first, k - 1, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _walk(relations: tuple, j: int) -> _Walk:
    return _Walk(relations, j)


def formula_catalog(i: int, j: int, signature: Signature) -> SigmaP1Formula:
    """The ``i``-th formula with ``j`` free variables over ``signature``."""
    if i < 0 or j < 0:
        raise FormulaError("catalog indices are natural numbers")
    return _walk(signature.relations, j).get(i)


def catalog_index_of(phi_disjuncts, j: int, signature: Signature, limit: int = 100_000) -> int | None:
    """Index of the catalog formula with exactly these disjuncts (as a set), scanning up to ``limit``."""
    target = frozenset(phi_disjuncts)
    w = _walk(signature.relations, j)
    for i in range(limit + 1):
        if frozenset(w.get(i).explicit) == target and len(w.get(i).explicit) == len(target):
            return i
    return None


def normalize_disjunct(d: Disjunct, signature: Signature) -> Disjunct:
    """Catalog normal form: sorted args on symmetric atoms, atoms sorted, bound vars by first appearance.

    Tries every renaming of bound variables and keeps the least form that
    introduces them in order, so alpha-variants share one normal form.
    """
    order = {name: k for k, (name, _) in enumerate([(EQ_REL, 2), (NEQ_REL, 2)] + list(signature.relations))}
    used = sorted({v.index for at in d.atoms for v in at.args if v.sort == "y"})
    best = None
    for perm in itertools.permutations(range(len(used))):
        ren = {old: Var("y", perm[k]) for k, old in enumerate(used)}
        atoms = set()
        for at in d.atoms:
            args = tuple(ren[v.index] if v.sort == "y" else v for v in at.args)
            if at.rel in (EQ_REL, NEQ_REL) and _var_key(args[0]) > _var_key(args[1]):
                args = (args[1], args[0])
            atoms.add(Atom(at.rel, args))
        seq = sorted(atoms, key=lambda a: _atom_key(a, order))
        nu, ok = 0, True
        for at in seq:
            for v in at.args:
                if v.sort == "y":
                    if v.index > nu:
                        ok = False
                    elif v.index == nu:
                        nu += 1
        if ok:
            key = tuple(_atom_key(a, order) for a in seq)
            if best is None or key < best[0]:
                best = (key, Disjunct(len(used), tuple(seq)))
    if best is None:
        raise FormulaError("no normal form")  # pragma: no cover - identity order always qualifies
    return best[1]


# --------------------------------------------------------------------------
# Kleene slices and the positive jump
# --------------------------------------------------------------------------

def _tuples_upto(n: int, max_len: int):
    for k in range(max_len + 1):
        yield from itertools.product(range(n), repeat=k)


def kleene_slice_stage(s: FiniteStructure, i: int, stage: int, max_len: int | None = None) -> frozenset:
    """Tuples of length ``<= min(stage, max_len)`` satisfying catalog formula ``i`` of their length."""
    top = stage if max_len is None else min(stage, max_len)
    out: set = set()
    for k in range(top + 1):
        phi = formula_catalog(i, k, s.signature)
        out |= mask_tuples(formula_mask(s, phi, (), stage), s.size, k)
    return frozenset(out)


@dataclass(frozen=True)
class PositiveJumpApprox:
    base: FiniteStructure
    depth: int
    stage: int
    max_len: int
    confirmed: tuple[frozenset, ...]  # per slice i <= depth
    pending: tuple[frozenset, ...]

    def structure(self) -> FiniteStructure:
        """The base expanded by relations ``coK<i>_<k>`` (pending tuples of length ``k >= 1``)."""
        rels, facts = [], []
        for i, pend in enumerate(self.pending):
            for k in range(1, self.max_len + 1):
                rels.append((f"coK{i}_{k}", k))
                facts.append(frozenset(t for t in pend if len(t) == k))
        sig = self.base.signature.extend(rels)
        return FiniteStructure(sig, self.base.size, self.base.facts + tuple(facts), self.base.congruence)


def positive_jump_stage(s: FiniteStructure, depth: int, stage: int, max_len: int = 2) -> PositiveJumpApprox:
    """Split each slice ``i <= depth`` into confirmed members and pending non-members at ``stage``."""
    universe = frozenset(_tuples_upto(s.size, max_len))
    conf, pend = [], []
    for i in range(depth + 1):
        k = kleene_slice_stage(s, i, stage, max_len)
        conf.append(k)
        pend.append(universe - k)
    return PositiveJumpApprox(s, depth, stage, max_len, tuple(conf), tuple(pend))


def catalog_stabilization_stage(depth: int, max_len: int, signature: Signature) -> int:
    """A stage after which every slice ``i <= depth`` is exact (longest disjunct list in play)."""
    top = 0
    for i in range(depth + 1):
        for k in range(max_len + 1):
            top = max(top, len(formula_catalog(i, k, signature).explicit))
    return max(top - 1, max_len)


@dataclass(frozen=True)
class CommuteResult:
    equal: bool
    left_only: frozenset
    right_only: frozenset


def jump_commutes_check(s: FiniteStructure, f: NumberedEnumeration, depth: int, stage: int,
                        max_len: int = 2, m: int | None = None) -> CommuteResult:
    """Compare the diagram of the pulled-back jump with the jump of the pullback."""
    pj = positive_jump_stage(s, depth, stage, max_len).structure()
    left = positive_diagram(pullback_structure(f, pj, m)).codes
    pb = pullback_structure(f, s, m)
    right = positive_diagram(positive_jump_stage(pb, depth, stage, max_len).structure()).codes
    return CommuteResult(left == right, frozenset(left - right), frozenset(right - left))


# --------------------------------------------------------------------------
# totalization and the negated-atom translation
# --------------------------------------------------------------------------

def co_name(name: str) -> str:
    return f"co{name}"


def totalize(s: FiniteStructure) -> FiniteStructure:
    """Expand by literal complements, interleaved: ``R_0, coR_0, R_1, coR_1, ...``."""
    rels, facts = [], []
    for (name, arity), rel in zip(s.signature.relations, s.facts):
        everything = set(itertools.product(range(s.size), repeat=arity))
        rels += [(name, arity), (co_name(name), arity)]
        facts += [rel, frozenset(everything - rel)]
    return FiniteStructure(Signature(tuple(rels)), s.size, tuple(facts), s.congruence)


def _positive_atom(rel, negated, positive_names):
    if not negated:
        return rel, False
    if rel == EQ_REL:
        return NEQ_REL, False
    if rel == NEQ_REL:
        return EQ_REL, False
    if rel not in positive_names:
        raise FormulaError(f"negated atom over unknown relation {rel!r}")
    return co_name(rel), False


def _map_family(fam: SigmaP1Family, fn) -> SigmaP1Family:
    def tmpl_items(items):
        out = []
        for it in items:
            if isinstance(it, RepT):
                out.append(RepT(it.var, it.lo, it.hi, tuple(tmpl_items(it.body))))
            else:
                rel, neg = fn(it.rel, it.negated)
                out.append(AtomT(rel, it.args, neg))
        return out

    def conv(item):
        if isinstance(item, Disjunct):
            atoms = []
            for a in item.atoms:
                rel, neg = fn(a.rel, a.negated)
                atoms.append(Atom(rel, a.args, neg))
            return Disjunct(item.bound_count, tuple(atoms))
        if isinstance(item, Template):
            return Template(item.bound, tuple(tmpl_items(item.body)))
        return Generator(item.name, item.var, item.start, conv(item.template))

    return SigmaP1Family(fam.name, fam.param_count, tuple(Line(ln.arities, conv(ln.item)) for ln in fam.lines))


def sigmac1_to_sigmap1(fam: SigmaP1Family, signature: Signature) -> SigmaP1Family:
    """Replace ``!R`` by ``coR``, ``!x = y`` by ``neq(x,y)`` and ``!neq(x,y)`` by ``x = y``.

    The result is negation-free and is read over :func:`totalize`'s signature.
    """
    names = {n for n, _ in signature.relations}
    return _map_family(fam, lambda rel, neg: _positive_atom(rel, neg, names))


def sigmap1_to_sigmac1(fam: SigmaP1Family, signature: Signature) -> SigmaP1Family:
    """Inverse translation: ``coR`` back to ``!R``; ``=`` and ``neq`` stay positive (normal form)."""
    back = {co_name(n): n for n, _ in signature.relations}

    def fn(rel, neg):
        if rel in back:
            return back[rel], True
        return rel, neg

    return _map_family(fam, fn)


# --------------------------------------------------------------------------
# sequence codings
# --------------------------------------------------------------------------

def encode_seq_relation(pairs, n: int) -> frozenset:
    """Code a set of ``(i, abar)`` as the tuples ``b^i c abar`` for all ``b != c``."""
    if n < 2:
        raise CodingError("the sequence coding needs at least two elements")
    out = set()
    for i, abar in pairs:
        abar = tuple(abar)
        if any(not 0 <= a < n for a in abar):
            raise CodingError(f"tuple {abar} leaves the universe of size {n}")
        for b in range(n):
            for c in range(n):
                if b != c:
                    out.add((b,) * i + (c,) + abar)
    return frozenset(out)


def decode_seq_relation(rel, n: int, tail: int = 0, strict: bool = True) -> frozenset:
    """Recover ``(i, abar)`` pairs from coded tuples, where ``abar`` has length ``tail``.

    The split point is ambiguous without knowing ``len(abar)``, so it is
    passed in.  In strict mode every ``b != c`` variant must be present.
    """
    if n < 2:
        raise CodingError("the sequence coding needs at least two elements")
    rel = frozenset(map(tuple, rel))
    found = set()
    for t in rel:
        head = len(t) - tail
        if head < 1:
            raise CodingError(f"tuple {t} is too short for a tail of length {tail}")
        i = head - 1
        prefix, c = t[:i], t[i]
        if i and (len(set(prefix)) != 1 or prefix[0] == c):
            raise CodingError(f"tuple {t} is not of the form b..bc followed by the tail")
        found.add((i, t[head:]))
    out = frozenset(found)
    if strict and encode_seq_relation(out, n) != rel:
        raise CodingError("coded relation is not closed under the choice of b != c")
    return out


def encode_number_set(X, n: int) -> frozenset:
    return encode_seq_relation(((i, ()) for i in X), n)


def decode_number_set(rel, n: int, strict: bool = True) -> frozenset:
    return frozenset(i for i, _ in decode_seq_relation(rel, n, 0, strict))


def seq_relation_code(direction: str, payload, n: int, tail: int = 0):
    if direction == "encode":
        return encode_seq_relation(payload, n)
    if direction == "decode":
        return decode_seq_relation(payload, n, tail)
    raise ValueError(f"direction must be 'encode' or 'decode', got {direction!r}")
