import pytest
from hypothesis import given, settings, strategies as st

from emt.compiler import (CompilerError, compile_family, decode_output, diagonalize_copy, extract_definition,
                          forcing_search, operator_relation, replay_defeat, verify_certificate)
from emt.core import positive_diagram, tuplecode
from emt.corpus import GRAPH1, TWO_EDGES, random_family, random_structure, rng_for, unconditional_operator
from emt.formula import define_relation, parse_family
from emt.suites import brute_force_defeatable

from oracles import define

LOOP = parse_family("family loop\narity 1\ndisjunct E(x1,x1)\n")
PATH2 = parse_family("family path2\narity 2\ndisjunct exists y1 . E(x1,y1) & E(y1,x2)\n")
NEQ = parse_family("family d\narity 2\ndisjunct neq(x1,x2)\n")


def test_compiled_axioms_for_loop():
    op = compile_family(LOOP, (), 2, 10, GRAPH1.signature)
    assert [(sorted(ax.premises), ax.conclusion) for ax in op.axioms()] == [([18], 1), ([403], 4)]


def test_compiled_equals_defined_on_fixtures():
    for fam in (LOOP, PATH2, NEQ):
        for s in (GRAPH1, TWO_EDGES):
            op = compile_family(fam, (), s.size, 10, s.signature)
            assert operator_relation(op, s) == define_relation(s, fam, (), 3, 10)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_compiled_equals_brute_force(seed):
    rng = rng_for(seed, "compile")
    s = random_structure(rng, max_n=4)
    fam = random_family(rng, s.signature)
    op = compile_family(fam, (), s.size, 10, s.signature)
    assert operator_relation(op, s) == define(s, fam, (), 3, 10)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6), st.permutations(range(4)))
def test_compiled_relation_transports_along_isomorphisms(seed, p):
    from emt.core import transport
    rng = rng_for(seed, "transport")
    s = random_structure(rng, 4)
    fam = random_family(rng, s.signature, max_disjuncts=3)
    op = compile_family(fam, (), 4, 10, s.signature)
    moved = operator_relation(op, transport(s, p))
    assert moved == {tuple(p[a] for a in t) for t in operator_relation(op, s)}


def test_parameter_count_checked():
    with pytest.raises(CompilerError):
        compile_family(LOOP, (0,), 2, 10, GRAPH1.signature)


def test_decode_output_filters_long_and_out_of_range():
    codes = {tuplecode((0, 1)), tuplecode((5,)), tuplecode((0, 1, 2, 0)), 2}
    assert decode_output(codes, size=3, max_len=3) == {(0, 1)}


def test_correct_operator_unforceable_and_extractable():
    R = define_relation(GRAPH1, PATH2, (), 3, 10)
    op = compile_family(PATH2, (), 3, 10, GRAPH1.signature)
    cert = forcing_search(GRAPH1, op, R)
    assert not cert.found and verify_certificate(cert, GRAPH1, op, R)
    fam = extract_definition(GRAPH1, op, (), max_len=3)
    assert define_relation(GRAPH1, fam, (), 3, 10) == R


def test_wrong_operator_defeated_with_replayable_witness():
    R = define_relation(GRAPH1, LOOP, (), 3, 10)  # empty: GRAPH1 has no loops
    op = unconditional_operator([(0, 1)])
    res = diagonalize_copy(GRAPH1, R, [op])
    rep = res.reports[0]
    assert rep.verdict == "DEFEATED"
    assert verify_certificate(rep.certificate, GRAPH1, op, R)
    assert replay_defeat(GRAPH1, R, op, res.g, rep.witness)
    assert sorted(res.g.values) == [0, 1, 2]


def test_extract_refuses_forceable_base():
    op = unconditional_operator([(0,)])
    with pytest.raises(CompilerError):
        extract_definition(GRAPH1, op, (), max_len=1)


def test_tampered_certificate_rejected():
    R = define_relation(GRAPH1, PATH2, (), 3, 10)
    op = compile_family(PATH2, (), 3, 10, GRAPH1.signature)
    cert = forcing_search(GRAPH1, op, R)
    from dataclasses import replace
    assert not verify_certificate(replace(cert, checked=cert.checked[1:]), GRAPH1, op, R)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_diagonalize_agrees_with_brute_force(seed):
    rng = rng_for(seed, "diag")
    s = random_structure(rng, max_n=4)
    fam = random_family(rng, s.signature, max_disjuncts=3, max_bound=1)
    R = define_relation(s, fam, (), 3, 10)
    k = fam.arities[0] if fam.arities else 1
    op = unconditional_operator([tuple(rng.randrange(s.size) for _ in range(k))])
    res = diagonalize_copy(s, R, [op])
    rep = res.reports[0]
    want = brute_force_defeatable(s, op, R, ())
    assert (rep.verdict == "DEFEATED") == want


def test_operator_relation_uses_full_diagram():
    op = compile_family(LOOP, (), 3, 10, GRAPH1.signature)
    assert op.apply(positive_diagram(GRAPH1).codes) == frozenset()


def test_defeated_when_only_copies_moving_zero_disagree():
    # the adversary always names position 0; only copies not starting with 0 refute it
    R = {(0,)}
    op = unconditional_operator([(0,)])
    res = diagonalize_copy(GRAPH1, R, [op])
    assert res.reports[0].verdict == "DEFEATED"
    assert res.g(0) != 0
    assert replay_defeat(GRAPH1, R, op, res.g, res.reports[0].witness)


def test_no_adversaries_gives_identity_order():
    res = diagonalize_copy(GRAPH1, set(), [])
    assert res.g.values == (0, 1, 2) and res.reports == ()
