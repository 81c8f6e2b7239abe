import pytest
from hypothesis import given, strategies as st

from emt.operator import (SELF, Axiom, DropAxioms, ExplicitOperator, OperatorError, ProceduralOperator,
                          canonical_index, catalog_operator, check_bound_convention, decode_axioms,
                          encode_operator, enumeration_jump_stage, format_operator, in_kleene_set,
                          kleene_set_stage, parse_operator)

small_sets = st.frozensets(st.integers(min_value=0, max_value=12), max_size=5)
axiom_lists = st.lists(st.tuples(small_sets, st.integers(min_value=0, max_value=20)), max_size=5)


def test_apply_semantics():
    op = ExplicitOperator([({1, 2}, 7), (set(), 3), ({5}, 9)])
    assert op.apply({1, 2}) == {7, 3}
    assert op.apply(set()) == {3}
    # stage s sees the first s + 1 axioms
    assert op.apply({1, 2, 5}, stage=0) == {7}


@given(axiom_lists, small_sets, small_sets)
def test_monotone(axioms, X, Y):
    op = ExplicitOperator(axioms)
    assert op.apply(X) <= op.apply(X | Y)


@given(axiom_lists, small_sets)
def test_stages_are_monotone(axioms, X):
    op = ExplicitOperator(axioms)
    outs = [op.apply(X, s) for s in range(len(axioms) + 1)]
    assert all(a <= b for a, b in zip(outs, outs[1:]))
    assert outs[-1] == op.apply(X)


@given(axiom_lists)
def test_catalog_roundtrip(axioms):
    op = ExplicitOperator(axioms)
    e = op.catalog_index()
    decoded = decode_axioms(e)
    assert [(frozenset(d), x) for d, x in decoded] == [(frozenset(d), x) for d, x in axioms]
    assert canonical_index(e) == e
    assert catalog_operator(e).apply(frozenset().union(*[d for d, _ in axioms])) == {x for _, x in axioms}


@given(st.integers(min_value=0, max_value=50_000))
def test_canonical_index_idempotent(e):
    c = canonical_index(e)
    assert canonical_index(c) == c
    assert decode_axioms(c) == decode_axioms(e)


def test_self_reference():
    e = encode_operator([((), SELF)])
    assert decode_axioms(e) == (((), SELF),)
    assert in_kleene_set(e, frozenset())
    assert catalog_operator(e).apply(set()) == {e}


def test_catalog_axiom_stage_is_code_below_index():
    for e in range(0, 3000, 7):
        op = catalog_operator(e)
        assert all(ax.stage <= e for ax in op.axioms())
        assert check_bound_convention(op, e)


def test_kleene_and_jump_are_consistent():
    X = frozenset({0, 3, 9})
    k = kleene_set_stage(X, 300)
    j = enumeration_jump_stage(X, 300)
    assert j.confirmed == k
    assert j.candidates == frozenset(range(301)) - k
    assert {c // 2 for c in j.join if c % 2 == 0} == X


def test_operator_file_roundtrip():
    op = parse_operator("# comment\naxiom 12 :\naxiom 4 : 1 2\n")
    assert op.apply({1, 2}) == {12, 4}
    assert parse_operator(format_operator(op)).axioms() == op.axioms()
    with pytest.raises(OperatorError):
        parse_operator("axiom x : 1\n")
    with pytest.raises(OperatorError):
        parse_operator("rule 1 : 2\n")


def test_wrappers():
    op = ExplicitOperator([({1}, 2), ({2}, 3)])
    dropped = DropAxioms(op, lambda ax: ax.conclusion == 2)
    assert dropped.apply({1, 2}) == {3}
    proc = ProceduralOperator(lambda X: [Axiom(frozenset({x}), x + 100) for x in X])
    assert proc.apply({1, 5}) == {101, 105}
    with pytest.raises(OperatorError):
        proc.axioms()


def test_known_index():
    # 274 = tuplecode((pair(6, 0),)): one axiom with no premises concluding 5
    assert decode_axioms(274) == (((), 5),)
    assert encode_operator([((), 5)]) == 274
