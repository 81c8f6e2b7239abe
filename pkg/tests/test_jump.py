import pytest
from hypothesis import given, settings, strategies as st

from emt.core import CodingError, Signature, transport
from emt.corpus import GRAPH1, TWO_EDGES, directed_cycle, random_enumeration, random_structure, rng_for
from emt.formula import define_relation, parse_family
from emt.jump import (catalog_index_of, catalog_stabilization_stage, decode_number_set, decode_seq_relation,
                      encode_number_set, encode_seq_relation, formula_catalog, jump_commutes_check,
                      kleene_slice_stage, positive_jump_stage, sigmac1_to_sigmap1, sigmap1_to_sigmac1, totalize)
from emt.suites import completeness_case

from oracles import define

EDGE = Signature((("E", 2),))


def test_catalog_is_positive_and_deterministic():
    for i in range(200):
        for j in range(3):
            phi = formula_catalog(i, j, EDGE)
            assert phi.length is not None
            assert all(not d.has_negation() for _, d in phi.disjuncts(phi.length))
            assert str(phi) == str(formula_catalog(i, j, EDGE))


def test_catalog_known_entry():
    assert str(formula_catalog(17, 2, EDGE)) == "(E(x1,x2))"
    phi = formula_catalog(17, 2, EDGE)
    assert catalog_index_of(phi.explicit, 2, EDGE, 100) is not None


def test_slices_invariant_under_automorphisms():
    s = TWO_EDGES
    swap = (2, 3, 0, 1)
    for i in range(30):
        sl = kleene_slice_stage(s, i, 8, 2)
        assert {tuple(swap[a] for a in t) for t in sl} == sl


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6), st.permutations(range(4)))
def test_slices_transport(seed, p):
    rng = rng_for(seed, "slices")
    s = random_structure(rng, 4)
    i = rng.randrange(100)
    moved = kleene_slice_stage(transport(s, p), i, 8, 2)
    assert moved == {tuple(p[a] for a in t) for t in kleene_slice_stage(s, i, 8, 2)}


def test_slices_grow_with_stage():
    prev = frozenset()
    for stage in range(6):
        cur = kleene_slice_stage(GRAPH1, 40, stage, 2)
        assert prev <= cur
        prev = cur


def test_positive_jump_partitions_tuples():
    pj = positive_jump_stage(GRAPH1, 5, 16, 2)
    for conf, pend in zip(pj.confirmed, pj.pending):
        assert not conf & pend
        assert len(conf) + len(pend) == 1 + 3 + 9
    names = [n for n, _ in pj.structure().signature.relations]
    assert names[:1] == ["E"] and "coK0_1" in names and "coK5_2" in names
    assert not any(n.endswith("_0") for n in names)


def test_stabilization_stage_makes_slices_exact():
    st_ = catalog_stabilization_stage(6, 2, EDGE)
    assert positive_jump_stage(GRAPH1, 6, st_, 2).confirmed == positive_jump_stage(GRAPH1, 6, st_ + 10, 2).confirmed


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_commutation_random(seed):
    rng = rng_for(seed, "commute")
    s = random_structure(rng, max_n=4)
    f = random_enumeration(rng, s.size)
    res = jump_commutes_check(s, f, rng.randint(0, 8), rng.randint(0, 64))
    assert res.equal, (res.left_only, res.right_only)


def test_commutation_cycles_fixture():
    from emt.core import cycles_graph
    g = cycles_graph("1010", 3)
    assert jump_commutes_check(g, random_enumeration(rng_for(0, "c"), g.size), 4, 32).equal


def test_completeness_on_fixtures():
    for s in (GRAPH1, TWO_EDGES, directed_cycle(4)):
        assert completeness_case(s) == []


def test_totalize():
    t = totalize(GRAPH1)
    assert [n for n, _ in t.signature.relations] == ["E", "coE"]
    assert len(t.relation("coE")) == 9 - 2
    assert not t.relation("E") & t.relation("coE")


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_negation_translation(seed):
    rng = rng_for(seed, "translate")
    s = random_structure(rng, max_n=4, sig=Signature((("E", 2), ("P", 1))))
    atoms = ["E(x1,x2)", "!E(x1,x2)", "!E(x2,y1)", "P(y1)", "!P(x1)", "!x1 = x2", "!neq(x1,y1)", "neq(x2,y1)"]
    body = " & ".join(rng.sample(atoms, rng.randint(1, 3)))
    fam = parse_family(f"family f\narity 2\ndisjunct exists y1 . {body}\n", allow_negation=True)
    positive = sigmac1_to_sigmap1(fam, s.signature)
    assert not positive.has_negation()
    assert define_relation(totalize(s), positive, (), 2) == define(s, fam, (), 2)
    back = sigmap1_to_sigmac1(positive, s.signature)
    assert define(s, back, (), 2) == define(s, fam, (), 2)


@given(st.frozensets(st.integers(min_value=0, max_value=63), max_size=12), st.integers(min_value=2, max_value=3))
def test_number_set_roundtrip(X, n):
    assert decode_number_set(encode_number_set(X, n), n) == X


@given(st.sets(st.tuples(st.integers(min_value=0, max_value=5),
                         st.tuples(st.integers(min_value=0, max_value=1), st.integers(min_value=0, max_value=1))),
               max_size=4))
def test_seq_relation_roundtrip(pairs):
    assert decode_seq_relation(encode_seq_relation(pairs, 2), 2, 2) == pairs


def test_seq_coding_errors():
    with pytest.raises(CodingError):
        encode_number_set({1}, 1)
    with pytest.raises(CodingError):
        decode_number_set({(0, 1, 1)}, 2)  # prefix not constant-then-different
    rel = set(encode_number_set({2}, 3))
    rel.pop()
    with pytest.raises(CodingError):
        decode_number_set(rel, 3)
    assert decode_number_set(rel, 3, strict=False) == {2}
