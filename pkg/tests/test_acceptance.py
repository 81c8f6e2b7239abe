"""Acceptance criteria 1-9, each at its stated scale, tolerance and time budget."""

import itertools
import subprocess
import sys
import time

import numpy as np

from emt import _kernels
from emt.core import CodingError, cycles_graph, decode_fact, encode_fact, pair, tuplecode
from emt.corpus import (fixture_structures, random_enumeration, random_interpretation, random_structure, rng_for,
                        symmetric_structures)
from emt.jump import decode_number_set, decode_seq_relation, encode_number_set, jump_commutes_check
from emt.suites import (COMPLETENESS_SCAN, commute_case, compile_case, completeness_case, diagonal_case,
                        fault_rates, generic_case, genuine_pair_case, reverse_case)

SEED = 2024


def _oracle_pair(x, y):
    # count the pairs on earlier anti-diagonals, then step along this one
    return sum(range(x + y + 1)) + y


def test_criterion_1_coding_fidelity(verdict):
    t0 = time.time()
    problems = []
    golden = [(pair(0, 1), 2), (pair(2, 12), 117), (tuplecode((0, 1)), 12),
              (encode_fact(2, (0, 1)), 117), (encode_fact(0, (0, 0)), 9)]
    problems += [f"golden {got} != {want}" for got, want in golden if got != want]
    for x, y in itertools.product(range(60), repeat=2):
        if pair(x, y) != _oracle_pair(x, y):
            problems.append(f"pair({x},{y})")
    # relation facts <i+2, <2, <a, b>>> for binary relations, against the oracle
    for i, a, b in itertools.product(range(4), range(12), range(12)):
        want = _oracle_pair(i + 2, _oracle_pair(2, _oracle_pair(a, b)))
        if encode_fact(i + 2, (a, b)) != want:
            problems.append(f"fact {i} {a} {b}")
    z = np.arange(10 ** 6, dtype=np.int64)
    xs, ys = _kernels.unpair_array(z)
    if not np.array_equal(_kernels.pair_array(xs, ys), z):
        problems.append("pair/unpair round trip fails below 10^6")
    decoded = 0
    for c in range(10 ** 6):
        try:
            kind, args = decode_fact(c)
        except CodingError:
            continue
        decoded += 1
        if encode_fact(kind, args) != c:
            problems.append(f"code {c}")
            break
    elapsed = time.time() - t0
    ok = not problems and elapsed < 10
    verdict("criterion 1 coding fidelity", ok,
            f"{decoded} fact codes round-trip, {elapsed:.1f}s" + (f", {problems[:3]}" if problems else ""))
    assert not problems
    assert elapsed < 10


def test_criterion_2_compile_and_reverse(verdict):
    t0 = time.time()
    rng = rng_for(SEED, "acceptance-compile")
    forward = [compile_case(rng, max_n=6)[2] for _ in range(100)]
    rng = rng_for(SEED, "acceptance-reverse")
    backward = [reverse_case(rng) for _ in range(20)]
    bad = [p for p in forward + backward if p]
    elapsed = time.time() - t0
    ok = not bad and elapsed < 120
    verdict("criterion 2 compile/define equivalence", ok,
            f"100 forward + 20 reverse, {len(bad)} failures, {elapsed:.1f}s")
    assert not bad, bad[:3]
    assert elapsed < 120


def test_criterion_3_diagonalization(verdict):
    t0 = time.time()
    rng = rng_for(SEED, "acceptance-diagonal")
    kinds, bad = [], []
    for _ in range(60):
        kind, problems = diagonal_case(rng)
        kinds.append(kind)
        bad += problems
    elapsed = time.time() - t0
    ok = not bad and elapsed < 60
    counts = {k: kinds.count(k) for k in sorted(set(kinds))}
    verdict("criterion 3 diagonalization", ok, f"60 cases {counts}, {len(bad)} misclassified, {elapsed:.1f}s")
    assert not bad, bad[:3]
    assert elapsed < 60


def test_criterion_4_jump_commutation(verdict):
    t0 = time.time()
    rng = rng_for(SEED, "acceptance-commute")
    bad = []
    for _ in range(200):
        bad += commute_case(rng, max_n=6)
    cyc = cycles_graph("1010", 3)
    for depth, stage in [(0, 0), (3, 16), (8, 64), (20, 128)]:
        res = jump_commutes_check(cyc, random_enumeration(rng, cyc.size), depth, stage)
        if not res.equal:
            bad.append(f"cycles fixture depth={depth} stage={stage}")
    elapsed = time.time() - t0
    ok = not bad and elapsed < 120
    verdict("criterion 4 jump commutation", ok, f"204 cases, {len(bad)} diffs, {elapsed:.1f}s")
    assert not bad, bad[:3]
    assert elapsed < 120


def test_criterion_5_kleene_completeness(verdict):
    rng = rng_for(SEED, "acceptance-completeness")
    corpus = [random_structure(rng, max_n=6) for _ in range(60)] + fixture_structures() + symmetric_structures()
    misses = [m for s in corpus for m in completeness_case(s, COMPLETENESS_SCAN)]
    rels = sum(len(s.signature) for s in corpus)
    verdict("criterion 5 kleene completeness", not misses, f"{rels} relations, {len(misses)} misses")
    assert not misses, misses[:3]


def test_criterion_6_genericity(verdict):
    rng = rng_for(SEED, "acceptance-generic")
    bad = []
    for _ in range(60):
        bad += generic_case(rng, max_n=6, max_specs=20)
    verdict("criterion 6 genericity", not bad, f"60 runs, {len(bad)} failures")
    assert not bad, bad[:3]


def test_criterion_7_interpretation_claims(verdict):
    t0 = time.time()
    rng = rng_for(SEED, "acceptance-interp")
    bad = []
    corpus = [random_structure(rng, max_n=5) for _ in range(30)] + symmetric_structures()
    for s in corpus:
        bad += genuine_pair_case(random_interpretation(rng, s.signature), s, copies=6, rng=rng)
    rates = fault_rates(SEED, 40, 3, 5)
    low = {fc: (h, n) for fc, (h, n) in rates.items() if n == 0 or h < 0.95 * n}
    elapsed = time.time() - t0
    ok = not bad and not low and elapsed < 180
    shown = ", ".join(f"{fc} {h}/{n}" for fc, (h, n) in rates.items())
    verdict("criterion 7 interpretation claims", ok,
            f"{len(corpus)} genuine pairs, {len(bad)} violations; faults {shown}; {elapsed:.1f}s")
    assert not bad, bad[:3]
    assert not low, low
    assert elapsed < 180


def test_criterion_8_number_set_codings(verdict):
    rng = rng_for(SEED, "acceptance-numbersets")
    problems = []
    for n in (2, 3):
        singles = {x: encode_number_set({x}, n) for x in range(64)}
        for x, rel in singles.items():
            # each coded tuple determines its number by its length alone, so
            # the images of distinct numbers are disjoint
            if {len(t) for t in rel} != {x + 1} or decode_number_set(rel, n) != {x}:
                problems.append(f"singleton {x} (n={n})")
            if any(decode_seq_relation([t], n, 0, strict=False) != {(x, ())} for t in rel):
                problems.append(f"tuple decode for {x} (n={n})")
        samples = [frozenset(), frozenset(range(64))]
        samples += [frozenset(x for x in range(64) if rng.random() < p) for p in (0.1, 0.5, 0.9) for _ in range(40)]
        for X in samples:
            rel = encode_number_set(X, n)
            # encoding is a union of singleton codes, which makes the
            # round trip on the singletons cover every subset
            if rel != frozenset().union(*(singles[x] for x in X)):
                problems.append(f"union law fails for {sorted(X)} (n={n})")
            if decode_number_set(rel, n) != X:
                problems.append(f"round trip fails for {sorted(X)} (n={n})")
    verdict("criterion 8 number-set codings", not problems, f"{len(problems)} failures")
    assert not problems, problems[:3]


def test_criterion_9_determinism(verdict):
    outputs = {}
    for seed in (1, 2, 3):
        runs = []
        for _ in range(2):
            proc = subprocess.run([sys.executable, "-m", "emt", "check", "all", "--seed", str(seed)],
                                  capture_output=True, timeout=300)
            runs.append((proc.returncode, proc.stdout))
        outputs[seed] = runs
    same = all(a == b for a, b in outputs.values())
    clean = all(code == 0 for runs in outputs.values() for code, _ in runs)
    verdict("criterion 9 determinism", same and clean, "3 seeds, two runs each, byte-identical" if same else "")
    assert same
    assert clean
