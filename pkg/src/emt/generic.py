"""Injective tuples, dense-set specifications and generic enumerations.

A specification picks out a set ``S`` of injective tuples over a finite
structure; it is always used through its closure under extension, so a
tuple is in ``S`` when one of its initial segments is.  A tuple *decides*
``S`` when it is in it, or when none of its injective extensions is.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .compiler import _violation
from .core import FiniteStructure, NumberedEnumeration, check_elements, partial_pullback
from .formula import SigmaP1Family, sat_stage
from .operator import EnumOperator, catalog_operator

IN, AVOIDED, UNDECIDED = "IN", "AVOIDED", "UNDECIDED"


class GenericError(ValueError):
    pass


def is_injective(sigma: Sequence[int]) -> bool:
    """``sigma(i) != sigma(j)`` for all ``i != j < len(sigma)``."""
    return all(sigma[i] != sigma[j] for i in range(len(sigma)) for j in range(len(sigma)) if i != j)


def check_injective(s: FiniteStructure, gamma) -> tuple[int, ...]:
    gamma = tuple(gamma)
    check_elements(s, gamma)
    if not is_injective(gamma):
        raise GenericError(f"tuple {gamma} repeats an element")
    return gamma


class DenseSetSpec:
    """Base class: subclasses implement ``member(s, gamma, stage)`` on the raw set."""

    label = "spec"

    def member(self, s: FiniteStructure, gamma: tuple, stage) -> bool:
        raise NotImplementedError

    def contains(self, s, gamma, stage=None) -> bool:
        """Membership in the closure under extension."""
        return any(self.member(s, gamma[:k], stage) for k in range(len(gamma) + 1))


@dataclass(frozen=True)
class FormulaSpec(DenseSetSpec):
    family: SigmaP1Family
    params: tuple = ()

    @property
    def label(self):
        return f"formula:{self.family.name}"

    def member(self, s, gamma, stage):
        if not self.family.covers(len(gamma)):
            return False
        phi = self.family.formula(len(gamma))
        if stage is None:
            if phi.length is None:
                raise GenericError(f"family {self.family.name} has generators; give a stage bound")
            stage = phi.length
        return sat_stage(s, phi, gamma, self.params, stage)


@dataclass(frozen=True)
class OperatorSpec(DenseSetSpec):
    """Tuples whose pulled-back diagram makes ``op`` output something (or ``target``)."""

    op: EnumOperator
    target: int | None = None

    @property
    def label(self):
        return f"operator:{self.op.name}" + ("" if self.target is None else f"->{self.target}")

    def member(self, s, gamma, stage):
        out = self.op.apply(partial_pullback(s, gamma), stage)
        return bool(out) if self.target is None else self.target in out

    def contains(self, s, gamma, stage=None):
        return self.member(s, gamma, stage)


@dataclass(frozen=True)
class HitSpec(DenseSetSpec):
    """``D_n``: tuples with ``n`` as an entry."""

    n: int

    @property
    def label(self):
        return f"D{self.n}"

    def member(self, s, gamma, stage):
        return self.n in gamma

    def contains(self, s, gamma, stage=None):
        return self.n in gamma


@dataclass(frozen=True)
class ProbeSpec(DenseSetSpec):
    """``R_e``: tuples whose pulled-back diagram puts ``e`` into the output of operator ``e``."""

    e: int

    @property
    def label(self):
        return f"R{self.e}"

    def member(self, s, gamma, stage):
        return self.e in catalog_operator(self.e).apply(partial_pullback(s, gamma), stage)

    def contains(self, s, gamma, stage=None):
        return self.member(s, gamma, stage)


@dataclass(frozen=True)
class EmptySpec(DenseSetSpec):
    label = "empty"

    def member(self, s, gamma, stage):
        return False

    def contains(self, s, gamma, stage=None):
        return False


@dataclass(frozen=True)
class ForcingSpec(DenseSetSpec):
    """Tuples that force against ``R`` for ``op`` (the forcing set of the compiler module)."""

    op: EnumOperator
    R: frozenset

    @property
    def label(self):
        return f"forcing:{self.op.name}"

    def member(self, s, gamma, stage):
        return _violation(s, self.op, self.R, gamma, stage) is not None

    def contains(self, s, gamma, stage=None):
        return self.member(s, gamma, stage)


# --------------------------------------------------------------------------
# deciding and extending
# --------------------------------------------------------------------------

def _maximal_extensions(s, gamma):
    rest = [a for a in range(s.size) if a not in gamma]
    for tail in itertools.permutations(rest):
        yield gamma + tail


def decides(gamma, S: DenseSetSpec, s: FiniteStructure, stage=None) -> str:
    gamma = check_injective(s, gamma)
    if S.contains(s, gamma, stage):
        return IN
    if any(S.contains(s, q, stage) for q in _maximal_extensions(s, gamma)):
        return UNDECIDED
    return AVOIDED


@dataclass(frozen=True)
class Extension:
    base: tuple
    extension: tuple | None
    checked: tuple = ()

    @property
    def found(self):
        return self.extension is not None


def extension_search(p, S: DenseSetSpec, s: FiniteStructure, stage=None) -> Extension:
    """Least injective ``q`` strictly extending ``p`` (by length, then entries) with ``q`` in ``S``."""
    p = check_injective(s, p)
    rest = [a for a in range(s.size) if a not in p]
    maximal = tuple(_maximal_extensions(s, p)) if len(p) < s.size else ()
    if not any(S.contains(s, q, stage) for q in maximal):
        return Extension(p, None, maximal)
    for length in range(len(p) + 1, s.size + 1):
        for tail in itertools.permutations(rest, length - len(p)):
            q = p + tail
            if S.contains(s, q, stage):
                return Extension(p, q)
    raise AssertionError("unreachable: a maximal extension is in the set")


def verify_extension(cert: Extension, S: DenseSetSpec, s: FiniteStructure, stage=None) -> bool:
    if cert.found:
        q = cert.extension
        return (len(q) > len(cert.base) and q[: len(cert.base)] == cert.base and is_injective(q)
                and S.contains(s, q, stage))
    if len(cert.base) < s.size and set(cert.checked) != set(_maximal_extensions(s, cert.base)):
        return False
    return not any(S.contains(s, q, stage) for q in cert.checked)


# --------------------------------------------------------------------------
# generic enumerations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GenericRun:
    g: NumberedEnumeration
    transcript: tuple[str, ...]
    verdicts: tuple[str, ...]  # per spec, as recorded at its step
    final: tuple[str, ...]  # per spec, decided by the whole enumeration


def build_generic(s: FiniteStructure, specs: Sequence[DenseSetSpec], steps: int | None = None,
                  stage=None) -> GenericRun:
    """Meet ``D_0, spec_0, D_1, spec_1, ...`` in turn, then append any elements still missing.

    At a ``D_k`` step the prefix gains ``k`` if it lacks it.  At a spec step
    a prefix that does not yet decide the spec moves to the least extension
    inside it, or stays put when none exists.
    """
    n = s.size
    rounds = max(n, len(specs)) if steps is None else steps
    p: tuple[int, ...] = ()
    log = [f"start size={n} specs={len(specs)}"]
    verdicts = [UNDECIDED] * len(specs)
    for k in range(rounds):
        if k < n and k not in p:
            p = p + (k,)
        log.append(f"D{k}: prefix={' '.join(map(str, p)) or '-'}")
        if k < len(specs):
            S = specs[k]
            v = decides(p, S, s, stage)
            if v == UNDECIDED:
                ext = extension_search(p, S, s, stage)
                p = ext.extension
                v = decides(p, S, s, stage)
            verdicts[k] = v
            log.append(f"S{k} {S.label}: {v} prefix={' '.join(map(str, p)) or '-'}")
    p = p + tuple(a for a in range(n) if a not in p)
    log.append(f"final: {' '.join(map(str, p)) or '-'}")
    final = tuple(decides(p, S, s, stage) for S in specs)
    return GenericRun(NumberedEnumeration(p), tuple(log), tuple(verdicts), final)


def jump_probe(s: FiniteStructure, e: int, prefix, stage=None) -> str:
    """Whether the prefix puts ``e`` into its own output (IN), never can (AVOIDED), or not yet."""
    return decides(prefix, ProbeSpec(e), s, stage)
