"""Signatures, finite structures and the number-theoretic codings.

Fact codes follow one fixed layout: ``pair(kind, tuplecode(args))`` where
kind 0 is equality, kind 1 inequality and kind ``i + 2`` relation ``R_i``.
A positive diagram is the set of codes of all true facts of these three
sorts, which is the kind-tagged form of ``(=) + (!=) + R_0 + R_1 + ...``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import isqrt
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

EQ = 0
NEQ = 1
REL_OFFSET = 2


class CodingError(ValueError):
    pass


class StructureError(ValueError):
    pass


# --------------------------------------------------------------------------
# codings
# --------------------------------------------------------------------------

def pair(x: int, y: int) -> int:
    """Cantor pairing ``(x + y)(x + y + 1)/2 + y``."""
    if x < 0 or y < 0:
        raise CodingError(f"pair of negative numbers ({x}, {y})")
    s = x + y
    return s * (s + 1) // 2 + y


def unpair(z: int) -> tuple[int, int]:
    if z < 0:
        raise CodingError(f"unpair of negative number {z}")
    w = (isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def tuplecode(t: Iterable[int]) -> int:
    """Code a finite sequence as ``pair(length, payload)``.

    The payload is 0 for the empty tuple, the sole entry for a 1-tuple and
    the right-nested pairing ``pair(t0, pair(t1, ... t_{k-1}))`` otherwise.
    """
    t = tuple(t)
    k = len(t)
    if k and min(t) < 0:
        raise CodingError(f"tuple {t} has a negative entry")
    payload = t[-1] if k else 0
    for v in reversed(t[:-1]):
        s = v + payload  # pair(v, payload), inlined: this is the hot loop
        payload = s * (s + 1) // 2 + payload
    return pair(k, payload)


def untuple(code: int, strict: bool = True) -> tuple[int, ...]:
    """Inverse of :func:`tuplecode`.

    The only codes that are not images of a tuple are ``pair(0, p)`` with
    ``p > 0``; those raise in strict mode and decode to ``()`` otherwise.
    """
    k, payload = unpair(code)
    if k == 0:
        if payload and strict:
            raise CodingError(f"{code} is not a tuple code (length 0, payload {payload})")
        return ()
    out = []
    for i in range(k - 1):
        if payload == 0:  # unpair(0) = (0, 0): the rest is all zeros
            out.extend([0] * (k - i))
            return tuple(out)
        w = (isqrt(8 * payload + 1) - 1) // 2  # unpair, inlined
        y = payload - w * (w + 1) // 2
        out.append(w - y)
        payload = y
    out.append(payload)
    return tuple(out)


def is_tuplecode(code: int) -> bool:
    k, payload = unpair(code)
    return k > 0 or payload == 0


def join_even(a: int) -> int:
    return 2 * a


def join_odd(a: int) -> int:
    return 2 * a + 1


def join(xs: Iterable[int], ys: Iterable[int]) -> frozenset[int]:
    """``X (+) Y`` with X on the even numbers and Y on the odd ones."""
    return frozenset(itertools.chain((2 * x for x in xs), (2 * y + 1 for y in ys)))


def split_join(codes: Iterable[int]) -> tuple[frozenset[int], frozenset[int]]:
    evens, odds = set(), set()
    for c in codes:
        (odds if c & 1 else evens).add(c >> 1)
    return frozenset(evens), frozenset(odds)


# --------------------------------------------------------------------------
# signatures and structures
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    relations: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        rels = tuple((str(n), int(a)) for n, a in self.relations)
        object.__setattr__(self, "relations", rels)
        names = [n for n, _ in rels]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate relation names in {names}")
        for name, arity in rels:
            if arity < 1:
                raise StructureError(f"relation {name} must have positive arity, got {arity}")
            if name in ("eq", "neq"):
                raise StructureError(f"relation name {name!r} is reserved")

    def __len__(self):
        return len(self.relations)

    @cached_property
    def _index(self):
        return {n: i for i, (n, _) in enumerate(self.relations)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise StructureError(f"unknown relation {name!r}") from None

    def arity(self, i: int) -> int:
        return self.relations[i][1]

    def name(self, i: int) -> str:
        return self.relations[i][0]

    def kind_arity(self, kind: int) -> int:
        if kind in (EQ, NEQ):
            return 2
        i = kind - REL_OFFSET
        if not 0 <= i < len(self.relations):
            raise CodingError(f"fact kind {kind} outside signature of {len(self.relations)} relations")
        return self.relations[i][1]

    def extend(self, extra: Iterable[tuple[str, int]]) -> "Signature":
        return Signature(self.relations + tuple(extra))


@dataclass(frozen=True)
class FiniteStructure:
    """A relational structure on ``{0..size-1}``.

    ``congruence`` (optional) gives, for each element, the least element of
    its equality class.  It is set on pullbacks along non-injective
    enumerations, where equality is interpreted as the pulled-back ``=``.
    """

    signature: Signature
    size: int
    facts: tuple[frozenset, ...] = ()
    congruence: tuple[int, ...] | None = None

    def __post_init__(self):
        facts = tuple(frozenset(tuple(int(v) for v in t) for t in rel) for rel in self.facts)
        if not facts and len(self.signature):
            facts = tuple(frozenset() for _ in self.signature.relations)
        object.__setattr__(self, "facts", facts)
        if self.size < 0:
            raise StructureError("negative universe size")
        if len(facts) != len(self.signature):
            raise StructureError(f"{len(facts)} fact sets for {len(self.signature)} relations")
        for (name, arity), rel in zip(self.signature.relations, facts):
            for t in rel:
                if len(t) != arity:
                    raise StructureError(f"fact {name}{t} has length {len(t)}, arity is {arity}")
                if any(not 0 <= v < self.size for v in t):
                    raise StructureError(f"fact {name}{t} leaves universe of size {self.size}")
        if self.congruence is not None:
            cong = tuple(int(v) for v in self.congruence)
            object.__setattr__(self, "congruence", cong)
            if len(cong) != self.size or any(not 0 <= c <= i or cong[c] != c for i, c in enumerate(cong)):
                raise StructureError("congruence must map each element to the least element of its class")

    @classmethod
    def build(cls, relations: Sequence[tuple[str, int]], size: int, facts: dict | None = None,
              congruence=None) -> "FiniteStructure":
        sig = Signature(tuple(relations))
        facts = facts or {}
        unknown = set(facts) - {n for n, _ in sig.relations}
        if unknown:
            raise StructureError(f"facts for undeclared relations {sorted(unknown)}")
        rels = tuple(frozenset(map(tuple, facts.get(n, ()))) for n, _ in sig.relations)
        return cls(sig, size, rels, congruence)

    def relation(self, name: str) -> frozenset:
        return self.facts[self.signature.index(name)]

    @cached_property
    def labels(self) -> np.ndarray:
        if self.congruence is None:
            return np.arange(self.size, dtype=np.int64)
        return np.array(self.congruence, dtype=np.int64)

    def label(self, a: int) -> int:
        return a if self.congruence is None else self.congruence[a]

    @cached_property
    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense relation tables, flattened and concatenated, plus offsets."""
        n = self.size
        offsets = np.zeros(max(len(self.signature), 1), dtype=np.int64)
        chunks = []
        pos = 0
        for i, ((_, arity), rel) in enumerate(zip(self.signature.relations, self.facts)):
            offsets[i] = pos
            chunk = np.zeros(n ** arity, dtype=np.bool_)
            for t in rel:
                idx = 0
                for v in t:
                    idx = idx * n + v
                chunk[idx] = True
            chunks.append(chunk)
            pos += chunk.shape[0]
        table = np.concatenate(chunks) if chunks else np.zeros(1, dtype=np.bool_)
        return table, offsets

    def fact_count(self) -> int:
        return sum(len(r) for r in self.facts)

    def with_facts(self, signature: Signature, facts: Sequence[frozenset]) -> "FiniteStructure":
        return FiniteStructure(signature, self.size, tuple(facts), self.congruence)

    def describe(self) -> str:
        parts = [f"n={self.size}"]
        for (name, _), rel in zip(self.signature.relations, self.facts):
            parts.append(f"{name}={sorted(rel)}")
        return " ".join(parts)


def check_elements(s: FiniteStructure, abar: Sequence[int]) -> None:
    for a in abar:
        if not 0 <= a < s.size:
            raise StructureError(f"element {a} is not in the universe {{0..{s.size - 1}}}")


# --------------------------------------------------------------------------
# facts and diagrams
# --------------------------------------------------------------------------

def encode_fact(kind: int, args: Sequence[int], signature: Signature | None = None) -> int:
    args = tuple(args)
    if kind < 0:
        raise CodingError(f"negative fact kind {kind}")
    if kind in (EQ, NEQ):
        expected = 2
    elif signature is not None:
        expected = signature.kind_arity(kind)
    else:
        expected = len(args)
    if len(args) != expected:
        raise CodingError(f"fact kind {kind} expects {expected} arguments, got {len(args)}")
    return pair(kind, tuplecode(args))


def decode_fact(code: int, signature: Signature | None = None) -> tuple[int, tuple[int, ...]]:
    kind, tc = unpair(code)
    args = untuple(tc)
    if signature is not None or kind in (EQ, NEQ):
        expected = 2 if kind in (EQ, NEQ) else signature.kind_arity(kind)
        if len(args) != expected:
            raise CodingError(f"code {code}: kind {kind} with {len(args)} arguments")
    return kind, args


@dataclass(frozen=True)
class PositiveDiagram:
    """A finite positive diagram, enumerated in ascending code order.

    ``stage(s)`` is the part enumerated by stage ``s``: the codes ``<= s``.
    """

    codes: frozenset

    def stage(self, s: int) -> frozenset:
        return frozenset(c for c in self.codes if c <= s)

    @property
    def complete_stage(self) -> int:
        return max(self.codes, default=0)

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.codes))

    def __len__(self):
        return len(self.codes)

    def __contains__(self, code):
        return code in self.codes


def _fact_codes(s: FiniteStructure, elements: Sequence[int] | None, rel_limit: int | None):
    elems = range(s.size) if elements is None else sorted(set(elements))
    codes = set()
    for a in elems:
        for b in elems:
            kind = EQ if s.label(a) == s.label(b) else NEQ
            codes.add(pair(kind, tuplecode((a, b))))
    present = set(elems)
    limit = len(s.signature) if rel_limit is None else min(rel_limit, len(s.signature))
    for i in range(limit):
        for t in s.facts[i]:
            if elements is None or all(v in present for v in t):
                codes.add(pair(i + REL_OFFSET, tuplecode(t)))
    return codes


def positive_diagram(s: FiniteStructure) -> PositiveDiagram:
    return PositiveDiagram(frozenset(_fact_codes(s, None, None)))


def restriction_diagram(s: FiniteStructure, abar: Sequence[int]) -> frozenset:
    """Diagram of the substructure on the entries of ``abar``.

    Only the relations with index ``< len(abar)`` are kept.
    """
    check_elements(s, abar)
    if not abar:
        return frozenset()
    return frozenset(_fact_codes(s, abar, len(abar)))


def partial_pullback(s: FiniteStructure, abar: Sequence[int]) -> frozenset:
    """Pull the restricted diagram of ``abar`` back to index positions."""
    abar = tuple(abar)
    check_elements(s, abar)
    L = len(abar)
    codes = set()
    for p in range(L):
        lp = s.label(abar[p])
        for q in range(L):
            kind = EQ if lp == s.label(abar[q]) else NEQ
            codes.add(pair(kind, tuplecode((p, q))))
    positions: dict[int, list[int]] = {}
    for p, a in enumerate(abar):
        positions.setdefault(a, []).append(p)
    for i in range(min(L, len(s.signature))):
        for t in s.facts[i]:
            slots = [positions.get(v) for v in t]
            if any(sl is None for sl in slots):
                continue
            for idx in itertools.product(*slots):
                codes.add(pair(i + REL_OFFSET, tuplecode(idx)))
    return frozenset(codes)


def index_copy(s: FiniteStructure, abar: Sequence[int]) -> FiniteStructure:
    """The structure induced on positions ``0..len(abar)-1`` by ``abar``."""
    abar = tuple(abar)
    check_elements(s, abar)
    positions: dict[int, list[int]] = {}
    for p, a in enumerate(abar):
        positions.setdefault(a, []).append(p)
    facts = []
    for rel in s.facts:
        out = set()
        for t in rel:
            slots = [positions.get(v) for v in t]
            if all(sl is not None for sl in slots):
                out.update(itertools.product(*slots))
        facts.append(frozenset(out))
    labels = [s.label(a) for a in abar]
    first: dict[int, int] = {}
    cong = tuple(first.setdefault(lab, p) for p, lab in enumerate(labels))
    identity = all(c == p for p, c in enumerate(cong))
    return FiniteStructure(s.signature, len(abar), tuple(facts), None if identity else cong)


# --------------------------------------------------------------------------
# enumerations and pullbacks
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NumberedEnumeration:
    """A map from indices to universe elements.

    ``values`` is an explicit prefix; indices past it repeat the prefix
    cyclically, so the map is total and surjective as soon as the prefix is.
    """

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if any(v < 0 for v in self.values):
            raise StructureError("enumeration values must be natural numbers")

    def __call__(self, k: int) -> int:
        if not self.values:
            raise StructureError("empty enumeration has no values")
        return self.values[k % len(self.values)]

    def prefix(self, m: int) -> tuple[int, ...]:
        return tuple(self(k) for k in range(m))

    @classmethod
    def identity(cls, n: int) -> "NumberedEnumeration":
        return cls(tuple(range(n)))

    @classmethod
    def parse(cls, text: str) -> "NumberedEnumeration":
        return cls(tuple(int(tok) for tok in text.replace(",", " ").split()))

    def is_injective(self) -> bool:
        return len(set(self.values)) == len(self.values)


def pullback_structure(f: NumberedEnumeration, s: FiniteStructure, stage: int | None = None) -> FiniteStructure:
    """``f^{-1}(s)`` on the first ``m`` indices, equality as an explicit congruence."""
    m = len(f.values) if stage is None else stage
    vals = f.prefix(m)
    for k, v in enumerate(vals):
        if v >= s.size:
            raise StructureError(f"f({k}) = {v} is outside the universe of size {s.size}")
    hit = {s.label(v) for v in vals}
    for a in range(s.size):
        if s.label(a) not in hit:
            raise StructureError(f"enumeration misses element {a} within the first {m} indices")
    copy = index_copy(s, vals)
    if copy.congruence is None:
        copy = FiniteStructure(copy.signature, copy.size, copy.facts, tuple(range(copy.size)))
    return copy


def canonical_copy(pb: FiniteStructure) -> FiniteStructure:
    """Quotient by the congruence, keeping the least element of each class."""
    if pb.congruence is None:
        return FiniteStructure(pb.signature, pb.size, pb.facts)
    reps = sorted(set(pb.congruence))
    classes: dict[int, list[int]] = {}
    for a, c in enumerate(pb.congruence):
        classes.setdefault(c, []).append(a)
    new = {r: i for i, r in enumerate(reps)}
    facts = []
    for (name, _), rel in zip(pb.signature.relations, pb.facts):
        image = set()
        for t in rel:
            image.add(tuple(pb.congruence[v] for v in t))
        for lt in image:
            for t in itertools.product(*(classes[v] for v in lt)):
                if t not in rel:
                    raise StructureError(f"congruence does not respect {name}: {lt} holds but {t} does not")
        facts.append(frozenset(tuple(new[v] for v in lt) for lt in image))
    return FiniteStructure(pb.signature, len(reps), tuple(facts))


# --------------------------------------------------------------------------
# isomorphisms
# --------------------------------------------------------------------------

def _element_profile(s: FiniteStructure):
    prof = [[0] * sum(a for _, a in s.signature.relations) for _ in range(s.size)]
    col = 0
    for (_, arity), rel in zip(s.signature.relations, s.facts):
        for t in rel:
            for p, v in enumerate(t):
                prof[v][col + p] += 1
        col += arity
    return [tuple(p) for p in prof]


def iter_isomorphisms(a: FiniteStructure, b: FiniteStructure) -> Iterator[tuple[int, ...]]:
    """Yield every isomorphism ``a -> b`` as a tuple ``h`` with ``h[x]`` the image of ``x``.

    Plain backtracking with degree profiles for pruning; both structures must
    be congruence-free (quotient first with :func:`canonical_copy`).
    """
    if a.congruence is not None or b.congruence is not None:
        a, b = canonical_copy(a), canonical_copy(b)
    if a.signature.relations != b.signature.relations or a.size != b.size:
        return
    if [len(r) for r in a.facts] != [len(r) for r in b.facts]:
        return
    pa, pb = _element_profile(a), _element_profile(b)
    if sorted(pa) != sorted(pb):
        return
    n = a.size
    incident_a = [[[] for _ in range(n)] for _ in a.facts]
    incident_b = [[[] for _ in range(n)] for _ in b.facts]
    for i, rel in enumerate(a.facts):
        for t in rel:
            for v in set(t):
                incident_a[i][v].append(t)
    for i, rel in enumerate(b.facts):
        for t in rel:
            for v in set(t):
                incident_b[i][v].append(t)
    h = [-1] * n
    inv = [-1] * n

    def consistent(x: int) -> bool:
        for i, rel_b in enumerate(b.facts):
            for t in incident_a[i][x]:
                if all(h[v] >= 0 for v in t) and tuple(h[v] for v in t) not in rel_b:
                    return False
            for t in incident_b[i][h[x]]:
                if all(inv[v] >= 0 for v in t) and tuple(inv[v] for v in t) not in a.facts[i]:
                    return False
        return True

    def extend(x: int):
        if x == n:
            yield tuple(h)
            return
        for y in range(n):
            if inv[y] >= 0 or pb[y] != pa[x]:
                continue
            h[x], inv[y] = y, x
            if consistent(x):
                yield from extend(x + 1)
            h[x], inv[y] = -1, -1

    yield from extend(0)


def find_isomorphism(a: FiniteStructure, b: FiniteStructure) -> tuple[int, ...] | None:
    return next(iter_isomorphisms(a, b), None)


def automorphisms(s: FiniteStructure) -> list[tuple[int, ...]]:
    return list(iter_isomorphisms(s, s))


def is_isomorphism(h: Sequence[int], a: FiniteStructure, b: FiniteStructure) -> bool:
    h = tuple(h)
    if a.size != b.size or len(h) != a.size or sorted(h) != list(range(b.size)):
        return False
    if a.signature.relations != b.signature.relations:
        return False
    for ra, rb in zip(a.facts, b.facts):
        if {tuple(h[v] for v in t) for t in ra} != set(rb):
            return False
    return True


def transport(s: FiniteStructure, h: Sequence[int]) -> FiniteStructure:
    """The isomorphic copy of ``s`` obtained by renaming ``x`` to ``h[x]``."""
    facts = tuple(frozenset(tuple(h[v] for v in t) for t in rel) for rel in s.facts)
    return FiniteStructure(s.signature, s.size, facts)


# --------------------------------------------------------------------------
# staged structures
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StagedStructure:
    """A monotone sequence of finite structures, each induced in the next."""

    generator: Callable[[int], FiniteStructure] = field(compare=False)
    name: str = "staged"
    default_stage: int = 0

    def at(self, stage: int) -> FiniteStructure:
        return self.generator(stage)


def cycles_graph(bits: str, count: int | None = None) -> FiniteStructure:
    """Graph with a looped hub and one directed cycle of length ``k+1`` for each ``k < count``.

    The hub (element 0) has an edge to the least element of cycle ``k``
    exactly when ``bits[k] == '1'``.  Bits past the string are 0.
    """
    if any(ch not in "01" for ch in bits):
        raise StructureError(f"cycle bits must be 0/1, got {bits!r}")
    count = len(bits) if count is None else count
    edges = {(0, 0)}
    nxt = 1
    for k in range(count):
        members = list(range(nxt, nxt + k + 1))
        for j, v in enumerate(members):
            edges.add((v, members[(j + 1) % len(members)]))
        if k < len(bits) and bits[k] == "1":
            edges.add((0, members[0]))
        nxt += k + 1
    return FiniteStructure.build([("E", 2)], nxt, {"E": edges})


def cycles_staged(bits: str) -> StagedStructure:
    return StagedStructure(lambda s: cycles_graph(bits, s), name=f"cycles {bits}", default_stage=len(bits))


# --------------------------------------------------------------------------
# structure files
# --------------------------------------------------------------------------

def parse_structure(text: str) -> FiniteStructure | StagedStructure:
    """Read the line-oriented structure format.

    Directives: ``signature E/2 P/1``, ``universe 3``, ``fact E 0 1`` and
    ``builtin cycles <bits>``; ``#`` starts a comment.
    """
    relations: list[tuple[str, int]] = []
    size = None
    facts: dict[str, set] = {}
    builtin = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "signature":
                for tok in rest:
                    name, _, ar = tok.partition("/")
                    if not name.isidentifier() or not ar:
                        raise StructureError(f"bad relation declaration {tok!r}")
                    relations.append((name, int(ar)))
            elif head == "universe":
                size = int(rest[0])
            elif head == "fact":
                facts.setdefault(rest[0], set()).add(tuple(int(v) for v in rest[1:]))
            elif head == "builtin":
                if rest[:1] != ["cycles"] or len(rest) not in (2, 3):
                    raise StructureError(f"unknown builtin {' '.join(rest)!r}")
                builtin = rest[1:]
            else:
                raise StructureError(f"unknown directive {head!r}")
        except (ValueError, IndexError) as exc:
            raise StructureError(f"line {lineno}: {exc}") from None
    if builtin is not None:
        bits = builtin[0]
        if len(builtin) == 2:
            return cycles_graph(bits, int(builtin[1]))
        return cycles_staged(bits)
    if size is None:
        raise StructureError("missing 'universe' directive")
    return FiniteStructure.build(relations, size, facts)


def format_structure(s: FiniteStructure) -> str:
    lines = []
    if len(s.signature):
        lines.append("signature " + " ".join(f"{n}/{a}" for n, a in s.signature.relations))
    lines.append(f"universe {s.size}")
    for (name, _), rel in zip(s.signature.relations, s.facts):
        for t in sorted(rel):
            lines.append(" ".join(["fact", name, *map(str, t)]))
    return "\n".join(lines) + "\n"
