"""Enumeration operators: axioms, staged application, the index catalog and K.

An operator is a set of axioms ``<D, x>``; applied to a set ``X`` it
outputs every ``x`` with ``D`` a subset of ``X``.  Every axiom carries a
stage label and stage ``s`` of an operator exposes the axioms labelled
``<= s``.  Catalog operators label an axiom by its own code; explicit
operators (files, compiled families) by their position in the list.

Catalog indices.  ``e`` is read as ``tuplecode(c_0, ..., c_{k-1})`` and each
``c = pair(head, tuplecode(D))`` with ``D`` strictly increasing.  ``head = 0``
makes the axiom conclude ``e`` itself; ``head = m + 1`` concludes ``m``.
Codes that do not decode this way are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

from .core import CodingError, is_tuplecode, pair, tuplecode, unpair, untuple


class OperatorError(ValueError):
    pass


SELF = -1


@dataclass(frozen=True, order=True)
class Axiom:
    premises: frozenset
    conclusion: int
    stage: int = 0

    def __str__(self):
        return f"<{{{', '.join(map(str, sorted(self.premises)))}}}, {self.conclusion}>"


class EnumOperator:
    """Base class; subclasses provide ``axioms(stage)`` or override ``apply``."""

    name = "operator"
    finite = True

    def axioms(self, stage: int | None = None) -> tuple[Axiom, ...]:
        raise NotImplementedError

    def apply(self, X, stage: int | None = None) -> frozenset:
        X = _materialize(X, stage)
        return frozenset(ax.conclusion for ax in self.axioms(stage) if ax.premises <= X)

    def __call__(self, X, stage=None):
        return self.apply(X, stage)


def _materialize(X, stage):
    if isinstance(X, (set, frozenset)):
        return frozenset(X)
    if hasattr(X, "stage"):
        if stage is None:
            if hasattr(X, "codes"):
                return frozenset(X.codes)
            raise OperatorError("a stage bound is required to apply an operator to a staged set")
        return frozenset(X.stage(stage))
    if callable(X):
        if stage is None:
            raise OperatorError("a stage bound is required to apply an operator to a staged set")
        return frozenset(X(stage))
    return frozenset(X)


class ExplicitOperator(EnumOperator):
    """A finite operator given by a list of axioms, staged by list position."""

    def __init__(self, axioms: Iterable, name: str = "explicit"):
        out = []
        for i, ax in enumerate(axioms):
            if isinstance(ax, Axiom):
                out.append(Axiom(frozenset(ax.premises), ax.conclusion, i))
            else:
                d, x = ax
                out.append(Axiom(frozenset(d), x, i))
        self._axioms = tuple(out)
        self.name = name

    def axioms(self, stage=None):
        if stage is None:
            return self._axioms
        return self._axioms[: max(stage + 1, 0)]

    def __len__(self):
        return len(self._axioms)

    def __repr__(self):
        return f"ExplicitOperator({len(self._axioms)} axioms)"

    def catalog_index(self) -> int:
        return encode_operator([(ax.premises, ax.conclusion) for ax in self._axioms])


class CatalogOperator(EnumOperator):
    def __init__(self, e: int):
        if e < 0:
            raise OperatorError("operator indices are natural numbers")
        self.e = e
        self.name = f"catalog[{e}]"
        self._axioms = decode_operator(e)

    def axioms(self, stage=None):
        if stage is None:
            return self._axioms
        return tuple(ax for ax in self._axioms if ax.stage <= stage)

    def __repr__(self):
        return f"CatalogOperator({self.e})"


class ProceduralOperator(EnumOperator):
    """An operator whose axioms are produced on demand for the set at hand.

    ``rule(X)`` yields axioms whose premises are subsets of ``X``; it must
    be monotone in ``X``.  Used for the operators built from interpretations.
    """

    finite = False

    def __init__(self, rule: Callable[[frozenset], Iterable[Axiom]], name: str = "procedural"):
        self.rule = rule
        self.name = name

    def axioms(self, stage=None):
        raise OperatorError(f"{self.name} has no finite axiom list; apply it to a set instead")

    def apply(self, X, stage=None):
        X = _materialize(X, stage)
        return frozenset(ax.conclusion for ax in self.rule(X) if ax.premises <= X)


class DropAxioms(EnumOperator):
    """Fault wrapper: forgets the axioms for which ``drop`` is true."""

    def __init__(self, inner: EnumOperator, drop: Callable[[Axiom], bool], name="faulty"):
        self.inner, self.drop, self.name = inner, drop, name
        self.finite = inner.finite

    def axioms(self, stage=None):
        return tuple(ax for ax in self.inner.axioms(stage) if not self.drop(ax))

    def apply(self, X, stage=None):
        if self.inner.finite:
            return super().apply(X, stage)
        X = _materialize(X, stage)
        return frozenset(ax.conclusion for ax in self.inner.rule(X)
                         if ax.premises <= X and not self.drop(ax))


def apply(op: EnumOperator, X, stage: int | None = None) -> frozenset:
    return op.apply(X, stage)


# --------------------------------------------------------------------------
# catalog coding
# --------------------------------------------------------------------------

def encode_axiom(premises: Iterable[int], conclusion: int) -> int:
    """Code one axiom; ``conclusion = SELF`` refers to the enclosing index."""
    d = sorted(set(premises))
    head = 0 if conclusion == SELF else conclusion + 1
    if conclusion < SELF:
        raise CodingError(f"bad conclusion {conclusion}")
    return pair(head, tuplecode(d))


def encode_operator(axioms: Iterable[tuple[Iterable[int], int]]) -> int:
    return tuplecode(tuple(encode_axiom(d, x) for d, x in axioms))


def _decode_axiom_code(c: int):
    head, tc = unpair(c)
    if not is_tuplecode(tc):
        return None
    d = untuple(tc)
    if any(d[i] >= d[i + 1] for i in range(len(d) - 1)):
        return None
    return head, d


@lru_cache(maxsize=1 << 16)
def _decode_raw(e: int) -> tuple[int, ...]:
    k, payload = unpair(e)
    if k == 0:
        return ()
    codes = untuple(e)
    return tuple(c for c in codes if _decode_axiom_code(c) is not None)


@lru_cache(maxsize=1 << 16)
def decode_operator(e: int) -> tuple[Axiom, ...]:
    out = []
    for c in _decode_raw(e):
        head, d = _decode_axiom_code(c)
        out.append(Axiom(frozenset(d), e if head == 0 else head - 1, c))
    return tuple(out)


def decode_axioms(e: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Raw decoding of ``e``: ``(premises, conclusion)`` with ``SELF`` kept symbolic."""
    out = []
    for c in _decode_raw(e):
        head, d = _decode_axiom_code(c)
        out.append((d, SELF if head == 0 else head - 1))
    return tuple(out)


def canonical_index(e: int) -> int:
    """The index obtained by dropping every malformed axiom code from ``e``."""
    return tuplecode(_decode_raw(e))


def catalog_operator(e: int) -> CatalogOperator:
    return CatalogOperator(e)


def check_bound_convention(op: EnumOperator, stage: int) -> bool:
    return all(ax.stage <= stage for ax in op.axioms(stage))


# --------------------------------------------------------------------------
# K and the enumeration jump
# --------------------------------------------------------------------------

def in_kleene_set(x: int, X: frozenset, stage: int | None = None) -> bool:
    return x in catalog_operator(x).apply(X, stage)


def kleene_set_stage(X, stage: int) -> frozenset:
    """``{x <= stage : x in catalog_operator(x) applied to X at this stage}``."""
    X = _materialize(X, stage)
    return frozenset(x for x in range(stage + 1) if in_kleene_set(x, X, stage))


@dataclass(frozen=True)
class JumpApprox:
    stage: int
    confirmed: frozenset  # members of K found so far
    candidates: frozenset  # x <= stage not (yet) in K
    join: frozenset  # X (+) candidates: 2a for X, 2k + 1 for candidates


def enumeration_jump_stage(X, stage: int) -> JumpApprox:
    """Stage approximation of ``X (+) complement(K_X)``.

    Every axiom of catalog operator ``x`` has a code below ``x``, so for
    finite ``X`` membership of each ``x <= stage`` is already final.
    """
    X = _materialize(X, stage)
    k = kleene_set_stage(X, stage)
    cand = frozenset(range(stage + 1)) - k
    join = frozenset([2 * a for a in X] + [2 * c + 1 for c in cand])
    return JumpApprox(stage, k, cand, join)


# --------------------------------------------------------------------------
# operator files
# --------------------------------------------------------------------------

def parse_operator(text: str) -> ExplicitOperator:
    """Read ``axiom <x> : <d1> <d2> ...`` lines; ``#`` starts a comment."""
    axioms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head != "axiom" or ":" not in rest:
            raise OperatorError(f"line {lineno}: expected 'axiom <x> : <premises>'")
        concl, _, prem = rest.partition(":")
        try:
            x = int(concl)
            d = [int(tok) for tok in prem.split()]
        except ValueError:
            raise OperatorError(f"line {lineno}: axiom fields must be natural numbers") from None
        if x < 0 or any(v < 0 for v in d):
            raise OperatorError(f"line {lineno}: axiom fields must be natural numbers")
        axioms.append((frozenset(d), x))
    return ExplicitOperator(axioms, "file")


def format_operator(op: EnumOperator, stage: int | None = None) -> str:
    lines = []
    for ax in op.axioms(stage):
        prem = " ".join(map(str, sorted(ax.premises)))
        lines.append(f"axiom {ax.conclusion} :{' ' + prem if prem else ''}")
    return "\n".join(lines) + ("\n" if lines else "")
