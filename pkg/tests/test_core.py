import pytest
from hypothesis import given, strategies as st

from emt.core import (CodingError, FiniteStructure, NumberedEnumeration, Signature, StructureError, automorphisms,
                      canonical_copy, cycles_graph, decode_fact, encode_fact, find_isomorphism, format_structure,
                      is_isomorphism, join, pair, parse_structure, partial_pullback, positive_diagram,
                      pullback_structure, split_join, transport, tuplecode, unpair, untuple)
from emt.corpus import GRAPH1, TWO_EDGES, directed_cycle

from oracles import isomorphic

nat = st.integers(min_value=0, max_value=10 ** 12)


def test_golden_codes():
    assert pair(0, 1) == 2
    assert pair(2, 12) == 117
    assert tuplecode((0, 1)) == 12
    assert encode_fact(2, (0, 1)) == 117
    assert encode_fact(0, (0, 0)) == 9


def test_pair_enumerates_antidiagonals():
    seen = [unpair(z) for z in range(10)]
    assert seen == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]


@given(nat, nat)
def test_pair_unpair(x, y):
    assert unpair(pair(x, y)) == (x, y)


@given(st.integers(min_value=0, max_value=10 ** 15))
def test_unpair_pair(z):
    assert pair(*unpair(z)) == z


@given(st.lists(st.integers(min_value=0, max_value=500), max_size=7))
def test_tuple_roundtrip(t):
    assert untuple(tuplecode(t)) == tuple(t)


@given(st.lists(st.integers(min_value=0, max_value=50), min_size=1, max_size=4))
def test_tuplecode_injective_across_lengths(t):
    # zero padding must change the code
    assert tuplecode(t) != tuplecode(t + [0])


def test_untuple_rejects_non_codes():
    bad = pair(0, 3)
    with pytest.raises(CodingError):
        untuple(bad)
    assert untuple(bad, strict=False) == ()


def test_negative_inputs_rejected():
    with pytest.raises(CodingError):
        pair(-1, 0)
    with pytest.raises(CodingError):
        unpair(-5)


@given(st.integers(min_value=0, max_value=6), st.lists(st.integers(min_value=0, max_value=40), min_size=1, max_size=3))
def test_fact_roundtrip(kind, args):
    if kind < 2:
        args = (args * 2)[:2]
    assert decode_fact(encode_fact(kind, args)) == (kind, tuple(args))


def test_fact_arity_checked_against_signature():
    sig = Signature((("E", 2), ("P", 1)))
    with pytest.raises(CodingError):
        encode_fact(3, (0, 1), sig)
    with pytest.raises(CodingError):
        encode_fact(0, (1,))


def test_join_split():
    assert split_join(join({0, 3}, {1})) == ({0, 3}, {1})


def test_positive_diagram_counts():
    d = positive_diagram(GRAPH1)
    # n^2 eq/neq facts plus the two edges
    assert len(d) == 9 + 2
    assert encode_fact(2, (0, 1)) in d
    assert encode_fact(1, (0, 1)) in d
    assert encode_fact(0, (2, 2)) in d
    assert d.stage(9) == {c for c in d if c <= 9}


def test_partial_pullback_positions():
    codes = partial_pullback(GRAPH1, (1, 2))
    assert encode_fact(2, (0, 1)) in codes
    assert encode_fact(2, (1, 0)) not in codes
    # relations with index >= len(abar) are left out
    assert partial_pullback(GRAPH1, (1,)) == {encode_fact(0, (0, 0))}


def test_structure_validation():
    with pytest.raises(StructureError):
        FiniteStructure.build([("E", 2)], 2, {"E": [(0, 5)]})
    with pytest.raises(StructureError):
        FiniteStructure.build([("E", 2)], 2, {"E": [(0,)]})


def test_pullback_with_repeats_is_isomorphic():
    f = NumberedEnumeration((2, 0, 2, 1, 0))
    pb = pullback_structure(f, GRAPH1)
    assert pb.size == 5
    assert isomorphic(canonical_copy(pb), GRAPH1)


def test_pullback_needs_surjection():
    with pytest.raises(StructureError):
        pullback_structure(NumberedEnumeration((0, 1)), GRAPH1)


def test_automorphism_counts():
    assert len(automorphisms(TWO_EDGES)) == 8
    assert len(automorphisms(directed_cycle(5))) == 5
    assert automorphisms(GRAPH1) == [(0, 1, 2)]


@given(st.permutations(range(5)))
def test_transport_gives_isomorphic_copy(p):
    s = directed_cycle(5)
    t = transport(s, p)
    assert is_isomorphism(p, s, t)
    h = find_isomorphism(s, t)
    assert h is not None and is_isomorphism(h, s, t)


def test_find_isomorphism_rejects_non_isomorphic():
    assert find_isomorphism(directed_cycle(4), TWO_EDGES) is None


def test_cycles_graph_shape():
    g = cycles_graph("1010", 4)
    assert g.size == 1 + 1 + 2 + 3 + 4
    E = g.relation("E")
    assert (0, 0) in E and (0, 1) in E and (0, 4) in E
    assert (0, 2) not in E


def test_structure_text_roundtrip():
    for s in (GRAPH1, TWO_EDGES):
        assert parse_structure(format_structure(s)) == s
    with pytest.raises(StructureError):
        parse_structure("signature E/2\nfact E 0 1\n")
    with pytest.raises(StructureError):
        parse_structure("universe 2\nbogus\n")


def test_staged_cycles():
    staged = parse_structure("builtin cycles 10\n")
    assert staged.at(3) == cycles_graph("10", 3)
    assert staged.at(1).size == 2
