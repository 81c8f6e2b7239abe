"""Property suites over seeded corpora, shared by ``emt check`` and the tests.

Each case function returns a list of failure strings (empty on success),
so a suite is a list of named case batches.  Outputs never mention wall
time or the kernel backend, which keeps reports byte-identical per seed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .compiler import (compile_family, diagonalize_copy, extract_definition, operator_relation, replay_defeat,
                       verify_certificate)
from .core import (CodingError, FiniteStructure, automorphisms, canonical_copy, decode_fact,
                   encode_fact, find_isomorphism, pair, partial_pullback, pullback_structure, tuplecode, unpair, untuple)
from .corpus import (GRAPH1, TWO_EDGES, family_arity, random_enumeration, random_family, random_interpretation,
                     random_permutation, random_structure, rng_for, unconditional_operator)
from .formula import define_relation, format_family, mask_tuples, formula_mask
from .generic import (AVOIDED, IN, EmptySpec, FormulaSpec, HitSpec, OperatorSpec, ProbeSpec, build_generic)
from .interp import (FAULT_CLASSES, biinterp_compose_check, check_claims, check_equivalence_axioms,
                     check_naturality, extract_interpretation, functor_pair, functor_report, identity_interpretation,
                     inject_fault, realize_interpretation, round_trip_isomorphic)
from .jump import (decode_number_set, decode_seq_relation,
                   encode_number_set, encode_seq_relation, formula_catalog, jump_commutes_check, totalize)
from .core import cycles_graph
from .operator import DropAxioms, canonical_index, decode_axioms, encode_operator

SUITES = ("codings", "compiler", "jump", "generic", "interp", "naturality", "equivalence", "biinterp")
FAULTS = ("compile-drop",) + FAULT_CLASSES
COMPLETENESS_SCAN = 10_000


@dataclass
class CheckResult:
    name: str
    total: int = 0
    failures: list = field(default_factory=list)
    min_rate: float = 1.0  # fraction of cases that must pass

    @property
    def ok(self):
        return self.total - len(self.failures) >= self.min_rate * self.total

    def record(self, problems):
        self.total += 1
        if problems:
            self.failures.append(problems if isinstance(problems, str) else "; ".join(problems))

    def line(self, suite):
        status = "ok" if self.ok else "FAIL"
        out = f"[{suite}] {self.name}: {self.total - len(self.failures)}/{self.total} {status}"
        for msg in self.failures[:3]:
            out += f"\n    {msg}"
        return out


# --------------------------------------------------------------------------
# single-case checks (also used directly by the acceptance tests)
# --------------------------------------------------------------------------

def compile_case(rng, max_n=6, fault=None):
    s = random_structure(rng, max_n=max_n)
    fam = random_family(rng, s.signature)
    op = compile_family(fam, (), s.size, 10, s.signature)
    if fault == "compile-drop":
        op = DropAxioms(op, lambda ax: ax.stage == 0, "compile-drop")
    got = operator_relation(op, s)
    want = define_relation(s, fam, (), 3, 10)
    if got != want:
        return s, fam, [f"compiled {sorted(got)[:4]} != defined {sorted(want)[:4]} for {format_family(fam).strip()!r}"]
    return s, fam, []


def reverse_case(rng, max_n=5):
    """Compile a family, check it cannot be diagonalized against, extract and compare."""
    s = random_structure(rng, max_n=max_n)
    fam = random_family(rng, s.signature, max_disjuncts=4, max_bound=1)
    op = compile_family(fam, (), s.size, 10, s.signature)
    R = operator_relation(op, s)
    res = diagonalize_copy(s, R, [op])
    problems = []
    rep = res.reports[0]
    if rep.verdict != "UNFORCEABLE":
        return [f"correct operator reported {rep.verdict}"]
    base = rep.certificate.base
    ext = extract_definition(s, op, base, max_len=3)
    got = define_relation(s, ext, base, 3, 10 ** 6)
    if got != R:
        problems.append(f"extracted relation {sorted(got)[:4]} != operator relation {sorted(R)[:4]}")
    return problems


def brute_force_defeatable(s, op, R, base):
    """Some full ordering extending ``base`` makes the operator emit a tuple outside ``R``."""
    rest = [a for a in range(s.size) if a not in base]
    for tail in itertools.permutations(rest):
        q = tuple(base) + tail
        for c in op.apply(partial_pullback(s, q)):
            try:
                j = untuple(c)
            except CodingError:
                continue
            if all(p < len(q) for p in j) and tuple(q[p] for p in j) not in R:
                return True
    return False


def diagonal_case(rng, max_n=5):
    s = random_structure(rng, max_n=max_n)
    fam = random_family(rng, s.signature, max_disjuncts=4, max_bound=1)
    R = define_relation(s, fam, (), 3, 10)
    kind = rng.choice(["correct", "other", "unconditional"])
    if kind == "correct":
        op = compile_family(fam, (), s.size, 10, s.signature)
    elif kind == "other":
        op = compile_family(random_family(rng, s.signature, family_arity(fam), 4, 1), (), s.size, 10, s.signature)
    else:
        k = family_arity(fam)
        op = unconditional_operator([tuple(rng.randrange(s.size) for _ in range(k))])
    res = diagonalize_copy(s, R, [op])
    rep = res.reports[0]
    # the single adversary is met before any element is placed, so the
    # oracle ranges over every copy
    expected = "DEFEATED" if brute_force_defeatable(s, op, R, ()) else "UNFORCEABLE"
    problems = []
    if kind == "correct" and rep.verdict != "UNFORCEABLE":
        problems.append("correct compiled operator was not UNFORCEABLE")
    if rep.verdict != expected:
        problems.append(f"{kind} adversary: reported {rep.verdict}, brute force says {expected}")
    if not verify_certificate(rep.certificate, s, op, R):
        problems.append("certificate does not replay")
    if rep.verdict == "DEFEATED" and not replay_defeat(s, R, op, res.g, rep.witness):
        problems.append("defeat witness does not replay on the final copy")
    return kind, problems


def commute_case(rng, max_n=5, depth=None, stage=None):
    s = random_structure(rng, max_n=max_n)
    f = random_enumeration(rng, s.size)
    depth = rng.randint(0, 20) if depth is None else depth
    stage = rng.randint(0, 128) if stage is None else stage
    res = jump_commutes_check(s, f, depth, stage, max_len=2)
    if not res.equal:
        return [f"depth={depth} stage={stage} f={f.values}: {len(res.left_only)}+{len(res.right_only)} codes differ"]
    return []


def completeness_case(s: FiniteStructure, scan: int = COMPLETENESS_SCAN):
    """Each relation equals some catalog slice at its arity, found within ``scan`` indices."""
    problems = []
    for (name, ar), rel in zip(s.signature.relations, s.facts):
        for i in range(scan + 1):
            phi = formula_catalog(i, ar, s.signature)
            if phi.length is not None and mask_tuples(formula_mask(s, phi, (), phi.length), s.size, ar) == rel:
                break
        else:
            problems.append(f"no slice within {scan} equals {name}")
    return problems


def random_spec(rng, s):
    kind = rng.choice(["hit", "formula", "operator", "probe", "empty"])
    if kind == "hit":
        return HitSpec(rng.randrange(s.size + 1))
    if kind == "formula":
        return FormulaSpec(random_family(rng, s.signature, rng.randint(1, 3), 3, 1, 2))
    if kind == "operator":
        fam = random_family(rng, s.signature, rng.randint(1, 2), 2, 1, 2)
        return OperatorSpec(compile_family(fam, (), s.size, 4, s.signature, max_len=2))
    if kind == "probe":
        return ProbeSpec(rng.choice([0, 1, 2, 3, 274, rng.randrange(2000)]))
    return EmptySpec()


def generic_case(rng, max_n=6, max_specs=20):
    s = random_structure(rng, max_n=max_n)
    specs = [random_spec(rng, s) for _ in range(rng.randint(0, max_specs))]
    run = build_generic(s, specs)
    problems = []
    for k, (v, fin) in enumerate(zip(run.verdicts, run.final)):
        if v not in (IN, AVOIDED) or fin not in (IN, AVOIDED):
            problems.append(f"spec {k} ({specs[k].label}) left {v}/{fin}")
    if sorted(run.g.values) != list(range(s.size)):
        problems.append(f"enumeration {run.g.values} is not a bijection")
    elif find_isomorphism(canonical_copy(pullback_structure(run.g, s)), s) is None:
        problems.append("pullback is not isomorphic to the source")
    return problems


def interp_structures(rng, count, max_n=4):
    out = [GRAPH1, TWO_EDGES]
    while len(out) < count:
        out.append(random_structure(rng, max_n=max_n, sig=None))
    return out[:count]


def genuine_pair_case(I, s: FiniteStructure, tuple_bound=2, copies=4, rng=None):
    """Every check on a pair built from a quantifier-free interpretation; returns violations."""
    fp = functor_pair(I, s.signature)
    ex = extract_interpretation(fp, s, tuple_bound)
    problems = []
    problems += check_equivalence_axioms(ex).violations
    problems += check_claims(ex, fp).violations
    if ex.undecided:
        problems.append(f"{len(ex.undecided)} undecided pairs")
    if not round_trip_isomorphic(ex, fp):
        problems.append("extracted quotient is not isomorphic to the realized structure")
    problems += check_naturality(fp, ex, automorphisms(s)).violations
    perms = _copy_perms(s.size, copies, rng)
    problems += functor_report(fp, s, perms).violations
    return problems


def _copy_perms(n, copies, rng):
    """Distinct orderings, identity first; all of them when there are at most ``copies``."""
    total = 1
    for k in range(2, n + 1):
        total *= k
    if rng is None or total <= copies:
        return list(itertools.islice(itertools.permutations(range(n)), copies))
    perms = [tuple(range(n))]
    while len(perms) < copies:
        p = random_permutation(rng, n)
        if p not in perms:
            perms.append(p)
    return perms


def fault_detected(I, s: FiniteStructure, fault: str, which: int = 0, tuple_bound=2, copies=4, rng=None) -> bool:
    fp = functor_pair(I, s.signature)
    bad = inject_fault(fp, fault, reference=s, which=which)
    ex = extract_interpretation(bad, s, tuple_bound)
    if check_equivalence_axioms(ex).violations or ex.undecided:
        return True
    if check_claims(ex, bad).violations or not round_trip_isomorphic(ex, bad):
        return True
    if check_naturality(bad, ex, automorphisms(s)).violations:
        return True
    return bool(functor_report(bad, s, _copy_perms(s.size, copies, rng)).violations)


def fault_applicable(I, s, fault) -> bool:
    """Whether the fault can change anything: it needs classes to act on (and a fact to drop)."""
    r = realize_interpretation(I, s)
    if fault == "drop-fact":
        return r.structure.fact_count() > 0
    if fault == "permuted-morphism":
        return r.structure.size >= 2
    return r.structure.size >= 1


# --------------------------------------------------------------------------
# suites
# --------------------------------------------------------------------------

def suite_codings(seed, fault=None, scale=1):
    rng = rng_for(seed, "codings")
    res = []
    c = CheckResult("pair-roundtrip")
    bad = [z for z in range(20_000 * scale) if pair(*unpair(z)) != z]
    c.record([f"z={z}" for z in bad[:3]])
    res.append(c)
    c = CheckResult("golden-codes")
    golden = {"pair(0,1)": (pair(0, 1), 2), "pair(2,12)": (pair(2, 12), 117), "tuplecode(0,1)": (tuplecode((0, 1)), 12),
              "E(0,1)": (encode_fact(2, (0, 1)), 117), "eq(0,0)": (encode_fact(0, (0, 0)), 9)}
    for name, (got, want) in golden.items():
        c.record([] if got == want else [f"{name}={got}, expected {want}"])
    res.append(c)
    c = CheckResult("tuple-roundtrip")
    for _ in range(200 * scale):
        t = tuple(rng.randrange(50) for _ in range(rng.randint(0, 5)))
        c.record([] if untuple(tuplecode(t)) == t else [f"{t}"])
    res.append(c)
    c = CheckResult("fact-roundtrip")
    for _ in range(200 * scale):
        kind = rng.randrange(5)
        args = tuple(rng.randrange(20) for _ in range(2 if kind < 2 else rng.randint(1, 3)))
        c.record([] if decode_fact(encode_fact(kind, args)) == (kind, args) else [f"{kind}{args}"])
    res.append(c)
    c = CheckResult("operator-canonical")
    for e in range(2000 * scale):
        d = decode_axioms(e)
        c.record([] if encode_operator(d) == canonical_index(e) else [f"e={e}"])
    res.append(c)
    c = CheckResult("number-set-roundtrip")
    for _ in range(50 * scale):
        X = frozenset(x for x in range(64) if rng.random() < 0.2)
        n = rng.randint(2, 3)
        c.record([] if decode_number_set(encode_number_set(X, n), n) == X else [f"{sorted(X)}"])
    res.append(c)
    c = CheckResult("seq-roundtrip")
    for _ in range(30 * scale):
        n = rng.randint(2, 3)
        tail = rng.randint(0, 2)
        pairs = {(rng.randrange(5), tuple(rng.randrange(n) for _ in range(tail))) for _ in range(rng.randint(0, 4))}
        c.record([] if decode_seq_relation(encode_seq_relation(pairs, n), n, tail) == pairs else [f"{pairs}"])
    res.append(c)
    return res


def suite_compiler(seed, fault=None, scale=1):
    rng = rng_for(seed, "compiler")
    c1, c2, c3 = CheckResult("compile-equals-define"), CheckResult("reverse-extraction"), CheckResult("diagonalize")
    for _ in range(25 * scale):
        c1.record(compile_case(rng, fault=fault)[2])
    for _ in range(5 * scale):
        c2.record(reverse_case(rng))
    for _ in range(10 * scale):
        c3.record(diagonal_case(rng)[1])
    return [c1, c2, c3]


def suite_jump(seed, fault=None, scale=1):
    rng = rng_for(seed, "jump")
    c1, c2, c3 = CheckResult("commutation"), CheckResult("completeness"), CheckResult("totalize-counts")
    for _ in range(10 * scale):
        c1.record(commute_case(rng, max_n=4))
    cyc = cycles_graph("1010", 3)
    c1.record([] if jump_commutes_check(cyc, random_enumeration(rng, cyc.size), 3, 16).equal else ["cycles"])
    for _ in range(5 * scale):
        s = random_structure(rng, max_n=4)
        c2.record(completeness_case(s))
        t = totalize(s)
        c3.record([] if all(len(t.facts[2 * i]) + len(t.facts[2 * i + 1]) == s.size ** ar
                            for i, (_, ar) in enumerate(s.signature.relations)) else ["count identity fails"])
    return [c1, c2, c3]


def suite_generic(seed, fault=None, scale=1):
    rng = rng_for(seed, "generic")
    c = CheckResult("generic-runs")
    for _ in range(8 * scale):
        c.record(generic_case(rng, max_n=5, max_specs=8))
    return [c]


def _interp_cases(rng, count):
    for s in interp_structures(rng, count):
        yield random_interpretation(rng, s.signature), s


def suite_equivalence(seed, fault=None, scale=1):
    rng = rng_for(seed, "equivalence")
    c = CheckResult("equivalence-axioms")
    for I, s in _interp_cases(rng, 4 * scale):
        fp = functor_pair(I, s.signature)
        if fault in FAULT_CLASSES:
            fp = inject_fault(fp, fault, reference=s)
        ex = extract_interpretation(fp, s, 2)
        c.record(check_equivalence_axioms(ex).violations + check_claims(ex, fp).violations)
    return [c]


def suite_naturality(seed, fault=None, scale=1):
    rng = rng_for(seed, "naturality")
    c = CheckResult("naturality-squares")
    for I, s in _interp_cases(rng, 4 * scale):
        fp = functor_pair(I, s.signature)
        if fault in FAULT_CLASSES:
            fp = inject_fault(fp, fault, reference=s)
        ex = extract_interpretation(fp, s, 2)
        c.record(check_naturality(fp, ex, automorphisms(s)).violations)
    return [c]


def suite_biinterp(seed, fault=None, scale=1):
    rng = rng_for(seed, "biinterp")
    c = CheckResult("biinterp-composites")
    for s in interp_structures(rng, 4 * scale):
        I = random_interpretation(rng, s.signature)
        if I.name not in ("identity", "reverse"):
            I = identity_interpretation(s.signature)
        other = realize_interpretation(I, s).structure
        rep = biinterp_compose_check(I, I, s, other)
        c.record([] if rep.ok else [f"{I.name} on n={s.size}: {rep}"])
    return [c]


def fault_corpus(rng, count, min_n=3, max_n=4):
    """Structures with at least one fact, paired with random quantifier-free interpretations."""
    out = []
    while len(out) < count:
        s = random_structure(rng, rng.randint(min_n, max_n), density=rng.uniform(0.3, 0.5))
        if s.fact_count():
            out.append((random_interpretation(rng, s.signature), s))
    return out


def fault_cases(seed, per_class, min_n=3, max_n=4, copies=6):
    """Per fault class, one (detected, description) entry per applicable corpus case."""
    rng = rng_for(seed, "faults")
    out = {}
    for fc in FAULT_CLASSES:
        rows = []
        for I, s in fault_corpus(rng, per_class, min_n, max_n):
            if not fault_applicable(I, s, fc):
                continue
            which = rng.randrange(realize_interpretation(I, s).structure.size)
            hit = fault_detected(I, s, fc, which=which, copies=copies, rng=rng)
            rows.append((hit, f"{fc} (class {which}) on {I.name}, {s.describe()}"))
        out[fc] = rows
    return out


def fault_rates(seed, per_class, min_n=3, max_n=4, copies=6):
    return {fc: (sum(h for h, _ in rows), len(rows))
            for fc, rows in fault_cases(seed, per_class, min_n, max_n, copies).items()}


def suite_interp(seed, fault=None, scale=1):
    rng = rng_for(seed, "interp")
    c1 = CheckResult("genuine-pairs")
    for I, s in _interp_cases(rng, 4 * scale):
        if fault in FAULT_CLASSES:
            c1.record(["fault injected"] if fault_detected(I, s, fault, rng=rng) else [])
        else:
            c1.record(genuine_pair_case(I, s, rng=rng))
    out = [c1]
    for fc, rows in fault_cases(seed, 5 * scale).items():
        c = CheckResult(f"detect-{fc}", min_rate=0.95)
        for hit, desc in rows:
            c.record([] if hit else [f"undetected: {desc}"])
        out.append(c)
    return out


_SUITE_FUNCS = {
    "codings": suite_codings, "compiler": suite_compiler, "jump": suite_jump, "generic": suite_generic,
    "interp": suite_interp, "naturality": suite_naturality, "equivalence": suite_equivalence,
    "biinterp": suite_biinterp,
}


def run_suite(name: str, seed: int, fault: str | None = None, scale: int = 1) -> tuple[bool, str]:
    """Run one suite (or ``all``) and return (passed, report text)."""
    names = ("codings", "compiler", "jump", "generic", "interp") if name == "all" else (name,)
    if any(n not in _SUITE_FUNCS for n in names):
        raise ValueError(f"unknown suite {name!r}")
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault class {fault!r}")
    lines = [f"suite: {name} seed={seed} scale={scale} fault={fault or '-'}"]
    failed = checks = 0
    for n in names:
        for res in _SUITE_FUNCS[n](seed, fault, scale):
            checks += 1
            failed += not res.ok
            lines.append(res.line(n))
    lines.append(f"summary: {checks} checks, {failed} failed")
    return failed == 0, "\n".join(lines) + "\n"
