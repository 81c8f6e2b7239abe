import itertools

import pytest
from hypothesis import given, settings, strategies as st

from emt.compiler import compile_family, operator_relation
from emt.corpus import GRAPH1, TWO_EDGES, rng_for
from emt.formula import parse_family
from emt.generic import (AVOIDED, IN, UNDECIDED, EmptySpec, FormulaSpec, ForcingSpec, GenericError, HitSpec,
                         OperatorSpec, ProbeSpec, build_generic, decides, extension_search, is_injective,
                         jump_probe, verify_extension)
from emt.suites import generic_case

EDGE = parse_family("family edge\narity 2\ndisjunct E(x1,x2)\n")
LOOP = parse_family("family loop\narity 1\ndisjunct E(x1,x1)\n")


def _brute_decides(gamma, S, s):
    if S.contains(s, gamma):
        return IN
    rest = [a for a in range(s.size) if a not in gamma]
    for k in range(1, len(rest) + 1):
        for tail in itertools.permutations(rest, k):
            if S.contains(s, gamma + tail):
                return UNDECIDED
    return AVOIDED


def test_is_injective():
    assert is_injective(()) and is_injective((2, 0, 1))
    assert not is_injective((1, 0, 1))
    with pytest.raises(GenericError):
        decides((0, 0), HitSpec(1), GRAPH1)


def test_decides_examples():
    assert decides((2,), HitSpec(2), GRAPH1) == IN
    assert decides((0,), HitSpec(2), GRAPH1) == UNDECIDED
    assert decides((0, 1, 2), HitSpec(5), GRAPH1) == AVOIDED
    assert decides((), EmptySpec(), GRAPH1) == AVOIDED
    assert decides((0, 1), FormulaSpec(EDGE), GRAPH1) == IN
    # (1, 0) then 2 gives E(1,2) only at positions (0, 2): no pair prefix is an edge
    assert decides((1, 0), FormulaSpec(EDGE), GRAPH1) == AVOIDED
    assert decides((), FormulaSpec(LOOP), GRAPH1) == AVOIDED


@settings(max_examples=40, deadline=None)
@given(st.permutations(range(4)), st.integers(min_value=0, max_value=4), st.sampled_from(["hit", "edge", "op"]))
def test_decides_matches_brute_force(perm, k, kind):
    s = TWO_EDGES
    S = {"hit": HitSpec(3), "edge": FormulaSpec(EDGE),
         "op": OperatorSpec(compile_family(EDGE, (), 4, 10, s.signature))}[kind]
    gamma = tuple(perm[:k])
    assert decides(gamma, S, s) == _brute_decides(gamma, S, s)


def test_extension_search_and_certificates():
    S = FormulaSpec(EDGE)
    ext = extension_search((2,), S, GRAPH1)
    assert not ext.found and verify_extension(ext, S, GRAPH1)
    ext = extension_search((1,), S, GRAPH1)
    assert ext.found and ext.extension == (1, 2)
    assert verify_extension(ext, S, GRAPH1)
    bogus = type(ext)((1,), (1, 0))
    assert not verify_extension(bogus, S, GRAPH1)


def test_build_generic_meets_every_spec():
    op = compile_family(EDGE, (), 3, 10, GRAPH1.signature)
    specs = [HitSpec(2), FormulaSpec(EDGE), OperatorSpec(op), ProbeSpec(274), EmptySpec(),
             ForcingSpec(op, operator_relation(op, GRAPH1))]
    run = build_generic(GRAPH1, specs)
    assert all(v in (IN, AVOIDED) for v in run.verdicts)
    assert all(v in (IN, AVOIDED) for v in run.final)
    assert sorted(run.g.values) == [0, 1, 2]
    assert run.transcript[0].startswith("start") and run.transcript[-1].startswith("final")
    # a correct compiled operator cannot be forced against
    assert run.final[-1] == AVOIDED


def test_jump_probe():
    # 274 emits 5 unconditionally; 5 is not 274, so the probe never succeeds
    assert jump_probe(GRAPH1, 274, ()) == AVOIDED
    from emt.operator import SELF, encode_operator
    e = encode_operator([((), SELF)])
    assert jump_probe(GRAPH1, e, ()) == IN


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_generic_runs(seed):
    assert generic_case(rng_for(seed, "generic-unit"), max_n=5, max_specs=10) == []
