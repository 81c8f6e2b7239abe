"""Positive interpretations, the functors they induce, and the way back.

An interpretation defines, inside a structure ``B``, a domain of tuples of
one fixed length, its complement, an equivalence ``sim`` with its
complement ``nsim``, and one relation per target symbol.  Realizing it
lists the domain tuples in canonical order (largest entry, then
lexicographic), numbers the ``sim`` classes by first appearance and reads
the relations off the classes.

An interpretation also yields a pair of operators: the object operator maps
a diagram to the diagram of the realized structure, the morphism operator
maps ``P(C) (+) Graph(f) (+) P(D)`` to the graph of the induced map.  From
such a pair, ``extract_interpretation`` recovers domain, ``sim``, ``nsim``
and relations by searching padding tuples and permutations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (EQ, REL_OFFSET, FiniteStructure, Signature, canonical_copy, find_isomorphism,
                   is_isomorphism, is_tuplecode, pair, partial_pullback, positive_diagram, unpair, untuple)
from .formula import SigmaP1Family, formula_mask, parse_family
from .operator import Axiom, EnumOperator, ProceduralOperator


class InterpretationError(ValueError):
    pass


def canonical_key(t: tuple) -> tuple:
    return (max(t) if t else -1, t)


@dataclass(frozen=True)
class PositiveInterpretation:
    length: int
    dom: SigmaP1Family
    codom: SigmaP1Family
    sim: SigmaP1Family
    nsim: SigmaP1Family
    rels: tuple  # of (name, arity, SigmaP1Family)
    name: str = "interpretation"

    @property
    def target_signature(self) -> Signature:
        return Signature(tuple((n, a) for n, a, _ in self.rels))

    def quantifier_free(self) -> bool:
        fams = [self.dom, self.codom, self.sim, self.nsim] + [f for _, _, f in self.rels]
        for fam, ar in zip(fams, [self.length] * 2 + [2 * self.length] * 2 + [a * self.length for _, a, _ in self.rels]):
            phi = fam.formula(ar)
            if phi.generators or any(d is not None and d.bound_count for d in phi.explicit):
                return False
        return True


# --------------------------------------------------------------------------
# interpretation files
# --------------------------------------------------------------------------

def parse_interpretation(text: str, allow_negation: bool = False) -> PositiveInterpretation:
    """Sections ``dom``, ``codom``, ``sim``, ``nsim`` and ``rel <name>/<arity>`` hold formula lines.

    ``interpretation <name>`` and ``length <d>`` (domain tuple length, default 1)
    may precede the sections.  Free variables of a ``rel`` section of arity
    ``k`` are the ``k * d`` entries of the related tuples, concatenated.
    """
    name, length = "interpretation", 1
    sections: list[tuple[str, int | None, list[tuple[int, str]]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        words = line.split()
        head = words[0]
        if head == "interpretation" and not sections:
            name = words[1] if len(words) > 1 else name
        elif head == "length" and not sections:
            try:
                length = int(words[1])
            except (IndexError, ValueError):
                raise InterpretationError(f"line {lineno}: bad length") from None
        elif head in ("dom", "codom", "sim", "nsim") and len(words) == 1:
            sections.append((head, None, []))
        elif head == "rel":
            if len(words) != 2 or "/" not in words[1]:
                raise InterpretationError(f"line {lineno}: expected 'rel <name>/<arity>'")
            rname, _, ar = words[1].partition("/")
            if not rname.isidentifier() or not ar.isdigit() or int(ar) < 1:
                raise InterpretationError(f"line {lineno}: bad relation {words[1]!r}")
            sections.append((rname, int(ar), []))
        else:
            if not sections:
                raise InterpretationError(f"line {lineno}: formula line outside a section")
            sections[-1][2].append((lineno, line))
    fams = {}
    rels = []
    for sec, ar, lines in sections:
        if ar is None:
            arity = length if sec in ("dom", "codom") else 2 * length
            key = sec
        else:
            arity = ar * length
            key = ("rel", sec)
        body = "\n".join(["#"] * (lines[0][0] - 2 if lines else 0) + [f"family {sec}", f"arity {arity}"]
                         + [ln for _, ln in lines])
        fam = parse_family(body, allow_negation=allow_negation)
        if key in fams:
            raise InterpretationError(f"section {sec} given twice")
        fams[key] = fam
        if ar is not None:
            rels.append((sec, ar, fam))
    for need in ("dom", "codom", "sim", "nsim"):
        if need not in fams:
            raise InterpretationError(f"missing section {need!r}")
    return PositiveInterpretation(length, fams["dom"], fams["codom"], fams["sim"], fams["nsim"], tuple(rels), name)


def simple_interpretation(length: int, dom: str, codom: str, sim: str, nsim: str, rels: dict, name="interp"):
    """Build an interpretation from one-line disjunct bodies (``|`` separates disjuncts)."""
    def fam(label, arity, body):
        lines = [f"family {label}", f"arity {arity}"] + [f"disjunct {part.strip()}" for part in body.split("|") if part.strip()]
        return parse_family("\n".join(lines))

    rel_list = tuple((rn, ar, fam(rn, ar * length, body)) for rn, (ar, body) in rels.items())
    return PositiveInterpretation(length, fam("dom", length, dom), fam("codom", length, codom),
                                  fam("sim", 2 * length, sim), fam("nsim", 2 * length, nsim), rel_list, name)


def identity_interpretation(signature: Signature) -> PositiveInterpretation:
    rels = {}
    for rn, ar in signature.relations:
        args = ",".join(f"x{i + 1}" for i in range(ar))
        rels[rn] = (ar, f"{rn}({args})")
    return simple_interpretation(1, "x1 = x1", "neq(x1,x1)", "x1 = x2", "neq(x1,x2)", rels, "identity")


# --------------------------------------------------------------------------
# realization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RealizedStructure:
    structure: FiniteStructure
    tau: tuple  # class index -> tuple of member dom tuples (canonical order)
    class_of: dict = field(compare=False, hash=False)


def _tuple_set(s, fam, arity, stage):
    phi = fam.formula(arity)
    if stage is None:
        if phi.length is None:
            raise InterpretationError(f"family {fam.name} has generators; give a stage bound")
        stage = phi.length
    return formula_mask(s, phi, (), stage)


def _index(t, n):
    idx = 0
    for v in t:
        idx = idx * n + v
    return idx


def realize_interpretation(I: PositiveInterpretation, B: FiniteStructure, max_len: int | None = None,
                           stage=None, check: bool = True) -> RealizedStructure:
    d, n = I.length, B.size
    if max_len is not None and d > max_len:
        raise InterpretationError(f"domain tuples have length {d} > max_len {max_len}")
    all_tuples = sorted(itertools.product(range(n), repeat=d), key=canonical_key)
    dom_mask = _tuple_set(B, I.dom, d, stage)
    dom = [t for t in all_tuples if dom_mask[_index(t, n)]]
    if check:
        codom_mask = _tuple_set(B, I.codom, d, stage)
        for t in all_tuples:
            if bool(dom_mask[_index(t, n)]) == bool(codom_mask[_index(t, n)]):
                raise InterpretationError(f"dom and codom do not partition tuples at {t}")
    sim_mask = _tuple_set(B, I.sim, 2 * d, stage)

    def sim(u, v):
        return bool(sim_mask[_index(u + v, n)])

    if check:
        nsim_mask = _tuple_set(B, I.nsim, 2 * d, stage)
        for u in dom:
            if not sim(u, u):
                raise InterpretationError(f"sim is not reflexive at ({u}, {u})")
            for v in dom:
                if sim(u, v) != (not nsim_mask[_index(u + v, n)]):
                    raise InterpretationError(f"nsim is not the complement of sim at ({u}, {v})")
                if sim(u, v) and not sim(v, u):
                    raise InterpretationError(f"sim is not symmetric at ({u}, {v})")
        for u in dom:
            for v in dom:
                if sim(u, v):
                    for w in dom:
                        if sim(v, w) and not sim(u, w):
                            raise InterpretationError(f"sim is not transitive at ({u}, {w}) via {v}")
    class_of: dict = {}
    reps: list[list] = []
    for u in dom:
        for k, members in enumerate(reps):
            if sim(members[0], u):
                class_of[u] = k
                members.append(u)
                break
        else:
            class_of[u] = len(reps)
            reps.append([u])
    facts = []
    for rname, ar, fam in I.rels:
        mask = _tuple_set(B, fam, ar * d, stage)
        rel = set()
        count = 0
        for combo in itertools.product(dom, repeat=ar):
            flat = tuple(v for u in combo for v in u)
            if mask[_index(flat, n)]:
                count += 1
                rel.add(tuple(class_of[u] for u in combo))
        if check:
            expected = sum(int(np.prod([len(reps[c]) for c in ct])) for ct in rel)
            if expected != count:
                for ct in sorted(rel):
                    for combo in itertools.product(*(reps[c] for c in ct)):
                        flat = tuple(v for u in combo for v in u)
                        if not mask[_index(flat, n)]:
                            raise InterpretationError(f"relation {rname} is not closed under sim at {combo}")
        facts.append(frozenset(rel))
    st = FiniteStructure(I.target_signature, len(reps), tuple(facts))
    return RealizedStructure(st, tuple(tuple(m) for m in reps), class_of)


def functor_on_morphism(I: PositiveInterpretation, B1: FiniteStructure, B2: FiniteStructure, h: Sequence[int],
                        max_len=None, stage=None) -> tuple[int, ...]:
    """The map between realizations induced by an isomorphism ``h: B1 -> B2``."""
    h = tuple(h)
    if not is_isomorphism(h, B1, B2):
        raise InterpretationError(f"{list(h)} is not an isomorphism")
    r1 = realize_interpretation(I, B1, max_len, stage)
    r2 = realize_interpretation(I, B2, max_len, stage)
    out = []
    for members in r1.tau:
        image = tuple(h[v] for v in members[0])
        if image not in r2.class_of:
            raise InterpretationError(f"image {image} of a domain tuple is outside the domain")
        out.append(r2.class_of[image])
    return tuple(out)


# --------------------------------------------------------------------------
# the functor pair of an interpretation
# --------------------------------------------------------------------------

def join3(x: Iterable[int], graph: Iterable[int], y: Iterable[int]) -> frozenset:
    """``(X (+) G) (+) Y``: X on 4k, G on 4k + 2, Y on 2k + 1."""
    return frozenset([4 * a for a in x] + [4 * g + 2 for g in graph] + [2 * b + 1 for b in y])


def split3(codes: Iterable[int]):
    x, g, y = set(), set(), set()
    for c in codes:
        if c & 1:
            y.add(c >> 1)
        elif c & 3 == 0:
            x.add(c >> 2)
        else:
            g.add(c >> 2)
    return frozenset(x), frozenset(g), frozenset(y)


def graph_codes(mapping: dict | Sequence[int]) -> frozenset:
    items = mapping.items() if isinstance(mapping, dict) else enumerate(mapping)
    return frozenset(pair(i, j) for i, j in items)


def decode_graph(codes: Iterable[int]) -> dict:
    out: dict = {}
    for c in codes:
        i, j = unpair(c)
        out.setdefault(i, set()).add(j)
    return out


def decode_diagram(codes: Iterable[int], signature: Signature) -> FiniteStructure:
    """Read a (possibly partial) positive diagram back into a structure."""
    codes = frozenset(codes)
    elems, eqs, facts = set(), [], [set() for _ in signature.relations]
    for c in codes:
        kind, tc = unpair(c)
        if not is_tuplecode(tc):
            continue
        args = untuple(tc)
        if kind == EQ and len(args) == 2:
            if args[0] == args[1]:
                elems.add(args[0])
            else:
                eqs.append(args)
        elif kind >= REL_OFFSET:
            i = kind - REL_OFFSET
            if i < len(signature) and signature.arity(i) == len(args):
                facts[i].add(args)
    n = max(elems) + 1 if elems else 0
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in eqs:
        if a < n and b < n:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    cong = tuple(find(a) for a in range(n))
    facts = [frozenset(t for t in rel if all(v < n for v in t)) for rel in facts]
    identity = all(c == a for a, c in enumerate(cong))
    return FiniteStructure(signature, n, tuple(facts), None if identity else cong)


@dataclass
class FunctorPair:
    psi: EnumOperator
    psistar: EnumOperator
    source: Signature
    target: Signature
    name: str = "functor"


def functor_pair(I: PositiveInterpretation, source: Signature) -> FunctorPair:
    """Object and morphism operators realizing the interpretation.

    Both are monotone on diagrams of substructures when every formula of
    the interpretation is quantifier-free; with quantifiers, realizing a
    substructure can renumber classes, which the extraction checks expose.
    """
    cache: dict = {}

    def realize(codes):
        codes = frozenset(codes)
        if codes not in cache:
            cache[codes] = realize_interpretation(I, decode_diagram(codes, source), check=False)
        return cache[codes]

    def psi_rule(X):
        r = realize(X)
        for c in positive_diagram(r.structure).codes:
            yield Axiom(X, c)

    def psistar_rule(Z):
        x, g, y = split3(Z)
        r1, r2 = realize(x), realize(y)
        f = decode_graph(g)
        for i, members in enumerate(r1.tau):
            for u in members:
                images = [f.get(v) for v in u]
                if any(im is None for im in images):
                    continue
                for v in itertools.product(*images):
                    k = r2.class_of.get(tuple(v))
                    if k is not None:
                        yield Axiom(Z, pair(i, k))

    return FunctorPair(ProceduralOperator(psi_rule, f"psi[{I.name}]"),
                       ProceduralOperator(psistar_rule, f"psistar[{I.name}]"), source, I.target_signature, I.name)


def apply_object(fp: FunctorPair, s: FiniteStructure) -> FiniteStructure:
    return decode_diagram(fp.psi.apply(positive_diagram(s).codes), fp.target)


def apply_morphism(fp: FunctorPair, s1: FiniteStructure, h: Sequence[int], s2: FiniteStructure) -> dict:
    oracle = join3(positive_diagram(s1).codes, graph_codes(tuple(h)), positive_diagram(s2).codes)
    return decode_graph(fp.psistar.apply(oracle))


# --------------------------------------------------------------------------
# fault injection for functor pairs
# --------------------------------------------------------------------------

class _Faulty(EnumOperator):
    finite = False

    def __init__(self, inner, transform, name):
        self.inner, self.transform, self.name = inner, transform, name

    def axioms(self, stage=None):
        return self.inner.axioms(stage)

    def apply(self, X, stage=None):
        X = frozenset(X)
        return frozenset(self.transform(X, self.inner.apply(X, stage)))


FAULT_CLASSES = ("drop-identity", "extra-output", "permuted-morphism", "drop-fact")


def inject_fault(fp: FunctorPair, fault: str, reference: FiniteStructure | None = None, which: int = 0) -> FunctorPair:
    """A corrupted copy of ``fp``.

    drop-identity: the morphism operator never outputs ``(which, which)``.
    extra-output: it also outputs ``(i, i + 1)`` for each ``(i, i)`` it emits.
    permuted-morphism: on non-identity graphs, classes 0 and 1 of the target swap.
    drop-fact: the object operator loses one relation fact on the diagram of ``reference``.
    """
    if fault == "drop-identity":
        bad = pair(which, which)
        star = _Faulty(fp.psistar, lambda Z, out: out - {bad}, "drop-identity")
        return FunctorPair(fp.psi, star, fp.source, fp.target, fp.name + "+drop-identity")
    if fault == "extra-output":
        def extra(Z, out):
            res = set(out)
            for c in out:
                i, j = unpair(c)
                if i == j:
                    res.add(pair(i, j + 1))
            return res
        return FunctorPair(fp.psi, _Faulty(fp.psistar, extra, "extra-output"), fp.source, fp.target,
                           fp.name + "+extra-output")
    if fault == "permuted-morphism":
        def permute(Z, out):
            g = decode_graph(split3(Z)[1])
            if all(js == {i} for i, js in g.items()):
                return out
            swap = {0: 1, 1: 0}
            res = set()
            for c in out:
                i, j = unpair(c)
                res.add(pair(i, swap.get(j, j)))
            return res
        return FunctorPair(fp.psi, _Faulty(fp.psistar, permute, "permuted-morphism"), fp.source, fp.target,
                           fp.name + "+permuted-morphism")
    if fault == "drop-fact":
        if reference is None:
            raise ValueError("drop-fact needs a reference structure")
        ref = positive_diagram(reference).codes

        def drop(X, out):
            if X != ref:
                return out
            rel = sorted(c for c in out if unpair(c)[0] >= REL_OFFSET)
            return set(out) - set(rel[which % len(rel)] for _ in [0] if rel)
        return FunctorPair(_Faulty(fp.psi, drop, "drop-fact"), fp.psistar, fp.source, fp.target,
                           fp.name + "+drop-fact")
    raise ValueError(f"unknown fault class {fault!r}")


# --------------------------------------------------------------------------
# extraction
# --------------------------------------------------------------------------

@dataclass
class ExtractedInterpretation:
    structure: FiniteStructure
    tuples: tuple  # the tuples b searched, canonical order
    dom: tuple  # (b, i) pairs, canonical order
    sim: frozenset
    nsim: frozenset
    undecided: frozenset
    classes: dict  # (b, i) -> class index (union of sim, first appearance)
    quotient: FiniteStructure
    rels: dict  # name -> set of class tuples
    segments: dict  # i -> least m with (B|m, i) in dom


def _injective_tuples(n: int, bound: int):
    out = []
    for k in range(bound + 1):
        out.extend(itertools.permutations(range(n), k))
    return out


def extract_interpretation(fp: FunctorPair, B: FiniteStructure, tuple_bound: int = 2, stage=None,
                           pad_limit: int | None = None) -> ExtractedInterpretation:
    """Materialize Dom, sim, nsim and the relations from the functor pair on ``B``.

    Tuples range over injective tuples of length ``<= tuple_bound`` plus every
    initial segment ``(0, ..., m-1)``.  Padding tuples are the orderings of
    the remaining elements (at most ``pad_limit`` of them when given).
    """
    n = B.size
    tuples = set(_injective_tuples(n, min(tuple_bound, n)))
    tuples.update(tuple(range(m)) for m in range(n + 1))
    tuples = tuple(sorted(tuples, key=lambda t: (len(t), t)))
    diag_cache: dict = {}
    star_cache: dict = {}

    def P(u):
        if u not in diag_cache:
            diag_cache[u] = partial_pullback(B, u)
        return diag_cache[u]

    def star(u1, sigma, u2):
        key = (u1, sigma, u2)
        if key not in star_cache:
            out = fp.psistar.apply(join3(P(u1), graph_codes(sigma), P(u2)), stage)
            star_cache[key] = decode_graph(out)
        return star_cache[key]

    dom = []
    for b in tuples:
        g = star(b, tuple(range(len(b))), b)
        for i in sorted(g):
            if i in g[i]:
                dom.append((b, i))
    dom_by_tuple: dict = {}
    for b, i in dom:
        dom_by_tuple.setdefault(b, []).append(i)

    sim, nsim = set(), set()
    for b, c in itertools.product(dom_by_tuple, repeat=2):
        bset, cset = set(b), set(c)
        b1 = tuple(v for v in b if v not in cset)
        c1 = tuple(v for v in c if v not in bset)
        rest = [v for v in range(n) if v not in bset | cset]
        pads = itertools.permutations(rest)
        if pad_limit is not None:
            pads = itertools.islice(pads, pad_limit)
        for d in pads:
            u1, u2 = b + c1 + d, c + b1 + d
            pos2 = {v: q for q, v in enumerate(u2)}
            sigma = tuple(pos2[v] for v in u1)
            inv = tuple(sorted(range(len(sigma)), key=lambda p: sigma[p]))
            out1, out2 = star(u1, sigma, u2), star(u2, inv, u1)
            for i in dom_by_tuple[b]:
                for j in dom_by_tuple[c]:
                    if j in out1.get(i, ()) and i in out2.get(j, ()):
                        sim.add(((b, i), (c, j)))
                    if any(k != j for k in out1.get(i, ())) or any(l != i for l in out2.get(j, ())):
                        nsim.add(((b, i), (c, j)))
    dom_t = tuple(dom)
    undecided = frozenset((x, y) for x in dom_t for y in dom_t if (x, y) not in sim and (x, y) not in nsim)

    # classes: union-find over sim, numbered by first appearance
    parent = {x: x for x in dom_t}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order = {x: k for k, x in enumerate(dom_t)}
    for x, y in sim:
        rx, ry = find(x), find(y)
        if rx != ry:
            if order[rx] < order[ry]:
                parent[ry] = rx
            else:
                parent[rx] = ry
    class_index: dict = {}
    classes = {}
    for x in dom_t:
        r = find(x)
        if r not in class_index:
            class_index[r] = len(class_index)
        classes[x] = class_index[r]

    segments = {}
    for m in range(n + 1):
        seg = tuple(range(m))
        for i in dom_by_tuple.get(seg, []):
            segments.setdefault(i, m)
    rels = {name: set() for name, _ in fp.target.relations}
    for m in range(n + 1):
        seg = tuple(range(m))
        if seg not in dom_by_tuple:
            continue
        image = decode_diagram(fp.psi.apply(P(seg), stage), fp.target)
        for (name, _), facts in zip(fp.target.relations, image.facts):
            for t in facts:
                if all((seg, j) in classes for j in t):
                    rels[name].add(tuple(classes[(seg, j)] for j in t))
    quotient = FiniteStructure(fp.target, len(class_index),
                               tuple(frozenset(rels[name]) for name, _ in fp.target.relations))
    return ExtractedInterpretation(B, tuples, dom_t, frozenset(sim), frozenset(nsim), undecided, classes,
                                   quotient, rels, segments)


@dataclass
class Report:
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def add(self, msg):
        self.violations.append(msg)


def check_equivalence_axioms(ex: ExtractedInterpretation, samples: int | None = None) -> Report:
    """Reflexivity, symmetry, transitivity of sim and the sim/nsim partition of Dom x Dom."""
    rep = Report()
    dom = ex.dom if samples is None else ex.dom[:samples]
    sim, nsim = ex.sim, ex.nsim
    for x in dom:
        if (x, x) not in sim:
            rep.add(f"sim not reflexive at {x}")
    for x in dom:
        for y in dom:
            if (x, y) in sim and (y, x) not in sim:
                rep.add(f"sim not symmetric at {x}, {y}")
            if (x, y) in sim and (x, y) in nsim:
                rep.add(f"sim and nsim overlap at {x}, {y}")
            if (x, y) not in sim and (x, y) not in nsim:
                rep.add(f"neither sim nor nsim at {x}, {y}")
    succ: dict = {}
    for x, y in sim:
        succ.setdefault(x, set()).add(y)
    for x in dom:
        for y in succ.get(x, ()):
            for z in succ.get(y, ()):
                if z not in succ.get(x, ()):
                    rep.add(f"sim not transitive at {x}, {z} via {y}")
    return rep


def check_claims(ex: ExtractedInterpretation, fp: FunctorPair) -> Report:
    """Initial segments reach every class index; sub-tuple coherence of sim."""
    rep = Report()
    B = ex.structure
    full = apply_object(fp, B)
    for i in range(full.size):
        if i not in ex.segments:
            rep.add(f"no initial segment puts index {i} into Dom")
    for (b, i) in ex.dom:
        for (c, j) in ex.dom:
            if len(b) <= len(c) and c[: len(b)] == b:
                if i == j and ((b, i), (c, j)) not in ex.sim:
                    rep.add(f"({b},{i}) not sim to its extension ({c},{j})")
                if i != j and ((b, i), (c, j)) in ex.sim:
                    rep.add(f"({b},{i}) sim ({c},{j}) across an extension with i != j")
    return rep


def functor_report(fp: FunctorPair, B: FiniteStructure, copies: Sequence[Sequence[int]]) -> Report:
    """Check the pair behaves as a functor on copies of ``B`` along the given permutations."""
    from .core import NumberedEnumeration, pullback_structure

    rep = Report()
    structs = [canonical_copy(pullback_structure(NumberedEnumeration(tuple(p)), B)) for p in copies]
    images = [apply_object(fp, s) for s in structs]
    for k, (s, img) in enumerate(zip(structs, images)):
        g = apply_morphism(fp, s, tuple(range(s.size)), s)
        if any(g.get(i) != {i} for i in range(img.size)) or set(g) - set(range(img.size)):
            rep.add(f"copy {k}: identity not sent to identity")
    maps = {}
    for a, b in itertools.product(range(len(structs)), repeat=2):
        pa, pb = copies[a], copies[b]
        inv_b = {v: q for q, v in enumerate(pb)}
        h = tuple(inv_b[pa[x]] for x in range(len(pa)))
        g = apply_morphism(fp, structs[a], h, structs[b])
        if any(len(g.get(i, ())) != 1 for i in range(images[a].size)):
            rep.add(f"copies {a}->{b}: morphism image is not a function")
            continue
        f = tuple(next(iter(g[i])) for i in range(images[a].size))
        maps[(a, b)] = f
        if images[a].congruence is None and images[b].congruence is None:
            if not is_isomorphism(f, images[a], images[b]):
                rep.add(f"copies {a}->{b}: induced map is not an isomorphism")
    for a, b, c in itertools.product(range(len(structs)), repeat=3):
        if (a, b) in maps and (b, c) in maps and (a, c) in maps:
            comp = tuple(maps[(b, c)][maps[(a, b)][i]] for i in range(len(maps[(a, b)])))
            if comp != maps[(a, c)]:
                rep.add(f"copies {a}->{b}->{c}: composition not preserved")
    return rep


def lambda_map(ex: ExtractedInterpretation, fp: FunctorPair) -> tuple[int, ...]:
    """``i`` goes to the class of ``(B|m, i)`` for the least ``m`` putting it in Dom."""
    full = apply_object(fp, ex.structure)
    out = []
    for i in range(full.size):
        if i not in ex.segments:
            raise InterpretationError(f"index {i} is never reached by an initial segment")
        out.append(ex.classes[(tuple(range(ex.segments[i])), i)])
    return tuple(out)


def induced_morphism(ex: ExtractedInterpretation, h: Sequence[int]) -> tuple[int, ...]:
    """The map on classes of the extracted quotient induced by an automorphism ``h``."""
    h = tuple(h)
    size = ex.quotient.size
    out = [-1] * size
    dom = set(ex.dom)
    for x in ex.dom:
        b, i = x
        y = (tuple(h[v] for v in b), i)
        if y in dom:
            q = ex.classes[x]
            if out[q] == -1:
                out[q] = ex.classes[y]
            elif out[q] != ex.classes[y]:
                raise InterpretationError(f"automorphism image of class {q} is ambiguous")
    if -1 in out:
        raise InterpretationError("automorphism image undefined on some class")
    return tuple(out)


def check_naturality(fp: FunctorPair, ex: ExtractedInterpretation, automorphisms: Sequence[Sequence[int]],
                     lam: Sequence[int] | None = None) -> Report:
    """Check ``Lambda`` is an isomorphism and ``Lambda . F(h) = I(h) . Lambda`` for each automorphism."""
    rep = Report()
    B = ex.structure
    full = apply_object(fp, B)
    try:
        lam = tuple(lam) if lam is not None else lambda_map(ex, fp)
    except InterpretationError as exc:
        rep.add(str(exc))
        return rep
    if not is_isomorphism(lam, full, ex.quotient):
        rep.add("Lambda is not an isomorphism onto the extracted quotient")
    for h in automorphisms:
        g = apply_morphism(fp, B, h, B)
        try:
            ih = induced_morphism(ex, h)
        except InterpretationError as exc:
            rep.add(str(exc))
            continue
        for i in range(full.size):
            js = g.get(i, set())
            if len(js) != 1:
                rep.add(f"h={list(h)}: F(h) undefined or multivalued at {i}")
                continue
            j = next(iter(js))
            if lam[j] != ih[lam[i]]:
                rep.add(f"h={list(h)}: square fails at {i} ({lam[j]} != {ih[lam[i]]})")
    return rep


def round_trip_isomorphic(ex: ExtractedInterpretation, fp: FunctorPair) -> bool:
    full = canonical_copy(apply_object(fp, ex.structure))
    return find_isomorphism(full, ex.quotient) is not None


# --------------------------------------------------------------------------
# composition of interpretations
# --------------------------------------------------------------------------

@dataclass
class BiInterpretationReport:
    forward_iso: bool
    backward_iso: bool
    forward_map: tuple | None
    backward_map: tuple | None
    forward_map_is_iso: bool | None
    backward_map_is_iso: bool | None

    @property
    def ok(self):
        return (self.forward_iso and self.backward_iso and self.forward_map_is_iso is not False
                and self.backward_map_is_iso is not False)


def _composite(I1, I2, S, stage):
    r1 = realize_interpretation(I1, S, stage=stage)
    r2 = realize_interpretation(I2, r1.structure, stage=stage)
    iso = find_isomorphism(r2.structure, S) is not None
    flat = None
    flat_iso = None
    if I1.length == 1 and I2.length == 1 and r2.structure.size == S.size:
        flat = tuple(r1.tau[r2.tau[k][0][0]][0][0] for k in range(r2.structure.size))
        flat_iso = is_isomorphism(flat, r2.structure, S)
    return iso, flat, flat_iso


def biinterp_compose_check(I_ab: PositiveInterpretation, I_ba: PositiveInterpretation, A: FiniteStructure,
                           B: FiniteStructure, stage=None) -> BiInterpretationReport:
    """Realize ``I_ab`` (defines B inside A) then ``I_ba`` (defines A inside B), and the other way round."""
    f_iso, f_map, f_ok = _composite(I_ab, I_ba, A, stage)
    b_iso, b_map, b_ok = _composite(I_ba, I_ab, B, stage)
    return BiInterpretationReport(f_iso, b_iso, f_map, b_map, f_ok, b_ok)
