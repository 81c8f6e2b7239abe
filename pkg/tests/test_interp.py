from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from emt.core import FiniteStructure, automorphisms, find_isomorphism, positive_diagram
from emt.corpus import GRAPH1, TWO_EDGES, directed_cycle, random_interpretation, random_structure, rng_for
from emt.interp import (FAULT_CLASSES, InterpretationError, apply_morphism, apply_object, biinterp_compose_check,
                        check_claims, check_equivalence_axioms, check_naturality, decode_diagram, decode_graph,
                        extract_interpretation, functor_on_morphism, functor_pair, graph_codes,
                        identity_interpretation, inject_fault, join3, parse_interpretation, realize_interpretation,
                        round_trip_isomorphic, simple_interpretation, split3)
from emt.suites import fault_detected, genuine_pair_case

from oracles import isomorphic

DATA = Path(__file__).resolve().parents[1] / "data"


def _load(name):
    return parse_interpretation((DATA / name).read_text())


def test_identity_realizes_source():
    for s in (GRAPH1, TWO_EDGES):
        r = realize_interpretation(identity_interpretation(s.signature), s)
        assert r.structure == s


def test_reverse_file():
    r = realize_interpretation(_load("reverse.spi"), GRAPH1)
    assert r.structure.relation("E") == {(1, 0), (2, 1)}


def test_pairs_file():
    I = _load("pairs.spi")
    assert I.length == 2 and I.quantifier_free()
    r = realize_interpretation(I, GRAPH1)
    assert r.structure.size == 6
    # class k holds one ordered pair; E joins pairs whose first entries are joined
    firsts = [m[0][0] for m in r.tau]
    assert r.structure.relation("E") == {(i, j) for i in range(6) for j in range(6) if (firsts[i], firsts[j]) in
                                         GRAPH1.relation("E")}


def test_bad_interpretations_rejected():
    bad_sim = simple_interpretation(1, "x1 = x1", "neq(x1,x1)", "E(x1,x2)", "neq(x1,x1)", {}, "bad")
    with pytest.raises(InterpretationError, match="reflexive|complement"):
        realize_interpretation(bad_sim, GRAPH1)
    overlap = simple_interpretation(1, "x1 = x1", "x1 = x1", "x1 = x2", "neq(x1,x2)", {}, "overlap")
    with pytest.raises(InterpretationError, match="partition"):
        realize_interpretation(overlap, GRAPH1)
    # classes {0,1} and {2} under "same E-out-degree" style sim break closure of E
    coarse = simple_interpretation(1, "x1 = x1", "neq(x1,x1)", "x1 = x2 | E(x1,x1) & E(x2,x2) | neq(x1,x1)",
                                   "neq(x1,x2)", {"E": (2, "E(x1,x2)")}, "coarse")
    with pytest.raises(InterpretationError):
        realize_interpretation(coarse, FiniteStructure.build([("E", 2)], 3, {"E": [(0, 0), (1, 1), (0, 2)]}))
    with pytest.raises(InterpretationError):
        parse_interpretation("interpretation x\ndom\ndisjunct x1 = x1\n")


def test_functor_on_morphism_is_isomorphism():
    I = _load("pairs.spi")
    h = (1, 0, 3, 2)
    out = functor_on_morphism(I, TWO_EDGES, TWO_EDGES, h)
    r = realize_interpretation(I, TWO_EDGES)
    from emt.core import is_isomorphism
    assert is_isomorphism(out, r.structure, r.structure)
    with pytest.raises(InterpretationError):
        functor_on_morphism(I, TWO_EDGES, TWO_EDGES, (1, 2, 3, 0))


@given(st.frozensets(st.integers(0, 50)), st.frozensets(st.integers(0, 50)), st.frozensets(st.integers(0, 50)))
def test_join3_split3(x, g, y):
    assert split3(join3(x, g, y)) == (x, g, y)


def test_graph_and_diagram_coding():
    assert decode_graph(graph_codes((2, 0, 1))) == {0: {2}, 1: {0}, 2: {1}}
    assert decode_diagram(positive_diagram(TWO_EDGES).codes, TWO_EDGES.signature) == TWO_EDGES


def test_functor_pair_objects_and_morphisms():
    I = _load("reverse.spi")
    fp = functor_pair(I, GRAPH1.signature)
    assert apply_object(fp, GRAPH1) == realize_interpretation(I, GRAPH1).structure
    assert apply_morphism(fp, TWO_EDGES, (2, 3, 0, 1), TWO_EDGES) == {0: {2}, 1: {3}, 2: {0}, 3: {1}}


def test_extraction_on_symmetric_structure():
    I = _load("pairs.spi")
    fp = functor_pair(I, TWO_EDGES.signature)
    ex = extract_interpretation(fp, TWO_EDGES, 2)
    assert check_equivalence_axioms(ex).ok
    assert check_claims(ex, fp).ok
    assert not ex.undecided
    assert round_trip_isomorphic(ex, fp)
    assert check_naturality(fp, ex, automorphisms(TWO_EDGES)).ok
    assert isomorphic(ex.quotient, realize_interpretation(I, TWO_EDGES).structure)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_genuine_pairs_have_no_violations(seed):
    rng = rng_for(seed, "interp-unit")
    s = random_structure(rng, max_n=4)
    I = random_interpretation(rng, s.signature)
    assert genuine_pair_case(I, s, copies=4, rng=rng) == []


@pytest.mark.parametrize("fault", FAULT_CLASSES)
def test_faults_detected_on_cycle(fault):
    s = directed_cycle(4)
    assert fault_detected(identity_interpretation(s.signature), s, fault, which=1, copies=6)


def test_unknown_fault():
    fp = functor_pair(identity_interpretation(GRAPH1.signature), GRAPH1.signature)
    with pytest.raises(ValueError):
        inject_fault(fp, "bogus")
    with pytest.raises(ValueError):
        inject_fault(fp, "drop-fact")


def test_biinterpretation_composites():
    I = _load("reverse.spi")
    rep = biinterp_compose_check(I, I, GRAPH1, realize_interpretation(I, GRAPH1).structure)
    assert rep.ok and rep.forward_map is not None
    loops = simple_interpretation(1, "x1 = x1", "neq(x1,x1)", "x1 = x2", "neq(x1,x2)", {"E": (2, "E(x1,x1)")})
    # collapsing edges to loops loses information: the composite is not isomorphic
    rep = biinterp_compose_check(loops, loops, GRAPH1, realize_interpretation(loops, GRAPH1).structure)
    assert not rep.forward_iso


def test_quantified_interpretations_are_flagged():
    I = simple_interpretation(1, "x1 = x1", "neq(x1,x1)", "x1 = x2", "neq(x1,x2)",
                              {"O": (1, "exists y1 . E(x1,y1)")})
    assert not I.quantifier_free()
    assert find_isomorphism(realize_interpretation(I, GRAPH1).structure,
                            FiniteStructure.build([("O", 1)], 3, {"O": [(0,), (1,)]})) is not None
