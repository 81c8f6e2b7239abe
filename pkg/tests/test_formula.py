import pytest
from hypothesis import given, settings, strategies as st

from emt.core import Signature
from emt.corpus import GRAPH1, TWO_EDGES, random_family, random_structure, rng_for
from emt.formula import (FormulaError, FormulaSyntaxError, define_relation, format_family, parse_disjunct,
                         parse_families, parse_family, sat_stage, sigma1p_type)

from oracles import define

PHI = """family out_edge
arity 1
disjunct exists y1 . E(x1,y1)

family path2
arity 2
disjunct exists y1 . E(x1,y1) & E(y1,x2)
"""

REACH = """family reach
arity 2
generator walk(n in 0..): exists w[0..n] . E(x1,w[0]) & rep i = 0..n-1 : E(w[i],w[i+1]) & w[n] = x2
"""


def test_parse_and_define():
    fams = parse_families(PHI)
    assert list(fams) == ["out_edge", "path2"]
    assert define_relation(GRAPH1, fams["out_edge"], (), 1) == {(0,), (1,)}
    assert define_relation(GRAPH1, fams["path2"], (), 2) == {(0, 2)}


def test_format_roundtrip():
    for fam in parse_families(PHI + "\n" + REACH).values():
        again = parse_family(format_family(fam))
        assert again.lines == fam.lines


def test_generator_stages():
    fam = parse_family(REACH)
    phi = fam.formula(2)
    assert phi.length is None
    assert not sat_stage(GRAPH1, phi, (0, 2), (), 0)
    assert sat_stage(GRAPH1, phi, (0, 2), (), 1)


def test_negation_rejected_unless_allowed():
    with pytest.raises(FormulaSyntaxError):
        parse_disjunct("!E(x1,x2)")
    with pytest.raises(FormulaSyntaxError):
        parse_disjunct("E(x1,x2) | E(x2,x1)")
    d = parse_disjunct("!E(x1,x2)", allow_negation=True)
    assert d.has_negation()


def test_syntax_errors_have_positions():
    with pytest.raises(FormulaSyntaxError) as err:
        parse_families("family f\narity 1\ndisjunct exists y1 . E(x1,\n")
    assert err.value.line == 3


def test_unknown_family_and_params():
    with pytest.raises(FormulaError):
        parse_family(PHI, "nope")
    fam = parse_family("family p\nparams 1\narity 1\ndisjunct E(x1,z1)\n")
    assert define_relation(GRAPH1, fam, (1,), 1) == {(0,)}
    with pytest.raises(FormulaError):
        define_relation(GRAPH1, fam, (), 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_define_matches_brute_force(seed):
    rng = rng_for(seed, "formula")
    s = random_structure(rng, max_n=4)
    fam = random_family(rng, s.signature, params=rng.randint(0, 1))
    params = tuple(rng.randrange(s.size) for _ in range(fam.param_count))
    assert define_relation(s, fam, params, 3, 10) == define(s, fam, params, 3, 10)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_positive_formulas_preserved_by_extension(seed):
    # adding facts can only grow a positive definable relation
    rng = rng_for(seed, "monotone")
    s = random_structure(rng, max_n=4)
    fam = random_family(rng, s.signature)
    extra = random_structure(rng, s.size, s.signature)
    bigger = s.with_facts(s.signature, [a | b for a, b in zip(s.facts, extra.facts)])
    assert define_relation(s, fam) <= define_relation(bigger, fam)


def test_sigma1p_type_invariant_under_automorphism():
    swap = (2, 3, 0, 1)
    for a in range(4):
        assert sigma1p_type(TWO_EDGES, (a,), 40, 10) == sigma1p_type(TWO_EDGES, (swap[a],), 40, 10)


def test_signature_rejects_duplicates():
    with pytest.raises(ValueError):
        Signature((("E", 2), ("E", 1)))
