"""Seeded random corpora for the check suites and the acceptance tests.

Every generator draws from a ``random.Random`` passed in by the caller, so
a seed fixes the whole corpus.  Sizes stay small: universes of at most six
elements, at most ``n`` relation symbols, arities at most three.
"""

from __future__ import annotations

import itertools
import random
from typing import Sequence

from .core import FiniteStructure, NumberedEnumeration, Signature, cycles_graph, tuplecode
from .formula import EQ_REL, NEQ_REL, Atom, Disjunct, SigmaP1Family, Var, family_from_disjuncts
from .interp import PositiveInterpretation, identity_interpretation, simple_interpretation
from .operator import ExplicitOperator

GRAPH1 = FiniteStructure.build([("E", 2)], 3, {"E": [(0, 1), (1, 2)]})
TWO_EDGES = FiniteStructure.build([("E", 2)], 4, {"E": [(0, 1), (1, 0), (2, 3), (3, 2)]})


def rng_for(seed: int, label: str) -> random.Random:
    """Independent stream per (seed, label), stable across Python versions."""
    return random.Random(f"{seed}:{label}")


def random_signature(rng: random.Random, n: int, max_rels: int = 3, max_arity: int = 3) -> Signature:
    k = rng.randint(1, max(1, min(n, max_rels)))
    return Signature(tuple((f"R{i}", rng.randint(1, max_arity)) for i in range(k)))


def random_structure(rng: random.Random, n: int | None = None, sig: Signature | None = None,
                     density: float | None = None, max_n: int = 6) -> FiniteStructure:
    n = rng.randint(2, max_n) if n is None else n
    sig = random_signature(rng, n) if sig is None else sig
    facts = []
    for _, ar in sig.relations:
        p = rng.uniform(0.15, 0.5) if density is None else density
        rel = frozenset(t for t in itertools.product(range(n), repeat=ar) if rng.random() < p)
        facts.append(rel)
    return FiniteStructure(sig, n, tuple(facts))


def random_graph(rng: random.Random, n: int, density: float = 0.35) -> FiniteStructure:
    return random_structure(rng, n, Signature((("E", 2),)), density)


def random_permutation(rng: random.Random, n: int) -> tuple[int, ...]:
    p = list(range(n))
    rng.shuffle(p)
    return tuple(p)


def random_enumeration(rng: random.Random, n: int, repeats: int = 2) -> NumberedEnumeration:
    """A surjective prefix: a permutation with up to ``repeats`` extra entries inserted."""
    vals = list(random_permutation(rng, n))
    for _ in range(rng.randint(0, repeats)):
        vals.insert(rng.randint(0, len(vals)), rng.randrange(n))
    return NumberedEnumeration(tuple(vals))


def _random_atom(rng, sig: Signature, pool: Sequence[Var]) -> Atom:
    choice = rng.random()
    if choice < 0.15:
        return Atom(EQ_REL, (rng.choice(pool), rng.choice(pool)))
    if choice < 0.3:
        a = rng.choice(pool)
        others = [v for v in pool if v != a] or [a]
        return Atom(NEQ_REL, (a, rng.choice(others)))
    name, ar = rng.choice(sig.relations)
    return Atom(name, tuple(rng.choice(pool) for _ in range(ar)))


def random_disjunct(rng, sig: Signature, arity: int, max_bound: int = 2, max_atoms: int = 3,
                    params: int = 0) -> Disjunct:
    bound = rng.randint(0, max_bound)
    pool = ([Var("x", i) for i in range(arity)] + [Var("y", i) for i in range(bound)]
            + [Var("z", i) for i in range(params)])
    if not pool:
        pool = [Var("y", 0)]
        bound = 1
    atoms = tuple(_random_atom(rng, sig, pool) for _ in range(rng.randint(0, max_atoms)))
    used = {v.index for at in atoms for v in at.args if v.sort == "y"}
    remap = {old: new for new, old in enumerate(sorted(used))}
    atoms = tuple(Atom(a.rel, tuple(Var("y", remap[v.index]) if v.sort == "y" else v for v in a.args))
                  for a in atoms)
    return Disjunct(len(used), atoms)


def random_family(rng, sig: Signature, arity: int | None = None, max_disjuncts: int = 8, max_bound: int = 2,
                  max_atoms: int = 3, params: int = 0, name: str = "phi") -> SigmaP1Family:
    arity = rng.randint(1, 3) if arity is None else arity
    k = rng.randint(0, max_disjuncts)
    ds = [random_disjunct(rng, sig, arity, max_bound, max_atoms, params) for _ in range(k)]
    return family_from_disjuncts(name, {arity: ds}, param_count=params)


def family_arity(fam: SigmaP1Family) -> int:
    ar = fam.arities
    return ar[0] if ar else 0


def unconditional_operator(tuples: Sequence[Sequence[int]], name="unconditional") -> ExplicitOperator:
    """Emits each index tuple from the empty premise set."""
    return ExplicitOperator([(frozenset(), tuplecode(tuple(t))) for t in tuples], name)


def random_interpretation(rng, sig: Signature) -> PositiveInterpretation:
    """One of a few quantifier-free shapes over ``sig``."""
    kind = rng.choice(["identity", "reverse", "pairs", "loops"])
    if kind == "identity":
        return identity_interpretation(sig)
    rels = {}
    if kind == "reverse":
        for name, ar in sig.relations:
            args = ",".join(f"x{ar - i}" for i in range(ar))
            rels[name] = (ar, f"{name}({args})")
        return simple_interpretation(1, "x1 = x1", "neq(x1,x1)", "x1 = x2", "neq(x1,x2)", rels, "reverse")
    if kind == "loops":
        # the unary relations of the diagonal: R(x,...,x)
        for name, ar in sig.relations:
            rels[f"d{name}"] = (1, f"{name}({','.join(['x1'] * ar)})")
        return simple_interpretation(1, "x1 = x1", "neq(x1,x1)", "x1 = x2", "neq(x1,x2)", rels, "loops")
    # ordered pairs of distinct elements, related when their first entries are
    for name, ar in sig.relations:
        if ar <= 2:
            args = ",".join(f"x{1 + 2 * i}" for i in range(ar))
            rels[f"p{name}"] = (ar, f"{name}({args})")
    rels["first"] = (2, "x1 = x3")
    return simple_interpretation(2, "neq(x1,x2)", "x1 = x2", "x1 = x3 & x2 = x4", "neq(x1,x3) | neq(x2,x4)",
                                 rels, "pairs")


def directed_cycle(n: int) -> FiniteStructure:
    return FiniteStructure.build([("E", 2)], n, {"E": [(i, (i + 1) % n) for i in range(n)]})


def fixture_structures() -> list[FiniteStructure]:
    return [GRAPH1, TWO_EDGES, cycles_graph("1010", 3)]


def symmetric_structures() -> list[FiniteStructure]:
    """Small structures with non-trivial automorphism groups."""
    empty3 = FiniteStructure.build([("E", 2)], 3, {})
    star = FiniteStructure.build([("E", 2), ("P", 1)], 4, {"E": [(0, 1), (0, 2), (0, 3)], "P": [(0,)]})
    return [TWO_EDGES, directed_cycle(3), directed_cycle(4), directed_cycle(5), empty3, star]
