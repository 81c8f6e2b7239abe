"""Formula families to operators and back.

``compile_family`` turns a family into an operator reading positive
diagrams: one axiom per disjunct, free tuple and witness tuple, with the
instantiated atoms as premises and the free tuple's code as conclusion.

The other direction works relative to a finite structure.  A tuple ``q`` of
distinct elements *forces* against a relation ``R`` when the operator, fed
the pulled-back diagram of ``q``, outputs an index tuple ``j`` whose image
``q[j]`` lies outside ``R``.  ``forcing_search`` finds the least such
extension of a base tuple or certifies there is none; in the latter case
``extract_definition`` reads a defining family off the operator's axioms,
with the base tuple as parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .core import (EQ, NEQ, REL_OFFSET, FiniteStructure, NumberedEnumeration, Signature,
                   check_elements, is_tuplecode, pair, partial_pullback, positive_diagram,
                   pullback_structure, tuplecode, unpair, untuple)
from .formula import (EQ_REL, NEQ_REL, Atom, Disjunct, SigmaP1Family, Var, family_from_disjuncts)
from .operator import Axiom, EnumOperator, _materialize


class CompilerError(ValueError):
    pass


_INT64_SAFE = 1 << 62


def _max_fact_code(kind_max: int, arity: int, bound: int) -> int:
    top = max(bound - 1, 0)
    return pair(kind_max, tuplecode((top,) * arity))


@dataclass
class _Block:
    stage: int
    arity: int
    premises: np.ndarray  # (rows, atoms) indices into the vocabulary
    conclusions: np.ndarray  # (rows,) tuple codes, int64 or object


class CompiledOperator(EnumOperator):
    """Array-backed operator produced by :func:`compile_family`.

    Axioms are stored per disjunct block; an axiom's stage label is the
    index of the disjunct it came from.
    """

    def __init__(self, family, params, signature, element_bound, max_len, blocks, vocab):
        self.family = family
        self.params = tuple(params)
        self.signature = signature
        self.element_bound = element_bound
        self.max_len = max_len
        self.blocks = blocks
        self.vocab = vocab
        self.name = f"compiled[{family.name}]"
        self._vocab_list = [int(v) for v in vocab]
        self._axioms = None

    def __len__(self):
        return sum(b.conclusions.shape[0] for b in self.blocks)

    def axioms(self, stage=None):
        if self._axioms is None:
            out = []
            for b in self.blocks:
                for r in range(b.conclusions.shape[0]):
                    prem = frozenset(self._vocab_list[i] for i in b.premises[r])
                    out.append(Axiom(prem, int(b.conclusions[r]), b.stage))
            self._axioms = tuple(out)
        if stage is None:
            return self._axioms
        return tuple(ax for ax in self._axioms if ax.stage <= stage)

    def apply(self, X, stage=None):
        X = _materialize(X, stage)
        if self.vocab.dtype == object:
            present = np.array([v in X for v in self._vocab_list], dtype=np.bool_)
        else:
            xs = np.fromiter((x for x in X if 0 <= x < _INT64_SAFE), dtype=np.int64)
            present = np.isin(self.vocab, xs)
        out = set()
        for b in self.blocks:
            if stage is not None and b.stage > stage:
                continue
            if b.premises.shape[1]:
                ok = present[b.premises].all(axis=1)
            else:
                ok = np.ones(b.conclusions.shape[0], dtype=np.bool_)
            out.update(int(c) for c in np.unique(b.conclusions[ok]))
        return frozenset(out)


def _atom_kind(at: Atom, sig: Signature) -> int:
    if at.rel == EQ_REL:
        return EQ
    if at.rel == NEQ_REL:
        return NEQ
    i = sig.index(at.rel)
    if sig.arity(i) != len(at.args):
        raise CompilerError(f"{at.rel} has arity {sig.arity(i)}, used with {len(at.args)} arguments")
    return i + REL_OFFSET


def compile_family(fam: SigmaP1Family, params: Sequence[int], element_bound: int, stage: int,
                   signature: Signature, max_len: int = 3, backend=None) -> CompiledOperator:
    """Compile the disjuncts with index ``<= stage`` for tuple lengths ``<= max_len``.

    Free and witness variables range over ``{0..element_bound-1}``; axioms
    whose premises contain an impossible ``neq(u, u)`` are left out.
    """
    params = tuple(params)
    if len(params) != fam.param_count:
        raise CompilerError(f"family takes {fam.param_count} parameters, got {len(params)}")
    N = element_bound
    raw_blocks = []
    kind_max = len(signature) + REL_OFFSET
    big = False
    for arity in range(max_len + 1):
        if not fam.covers(arity):
            continue
        phi = fam.formula(arity)
        for j, d in phi.disjuncts(stage):
            if N == 0 and (arity + d.bound_count) > 0:
                continue
            nv = arity + d.bound_count
            if N ** nv > 5_000_000:
                raise CompilerError(f"disjunct {j} needs {N}^{nv} instantiations; lower the element bound")
            grid = np.indices((N,) * nv).reshape(nv, -1) if nv else np.zeros((0, 1), dtype=np.int64)
            rows = grid.shape[1]

            def col(v: Var):
                if v.sort == "x":
                    return grid[v.index]
                if v.sort == "z":
                    return np.full(rows, params[v.index], dtype=np.int64)
                return grid[arity + v.index]

            keep = np.ones(rows, dtype=np.bool_)
            cols = []
            for at in d.atoms:
                kind = _atom_kind(at, signature)
                argcols = [col(v) for v in at.args]
                if kind == NEQ:
                    keep &= argcols[0] != argcols[1]
                cols.append((kind, argcols))
                if _max_fact_code(kind_max, len(at.args), max(N, max(params, default=0) + 1)) >= _INT64_SAFE:
                    big = True
            if arity and _max_fact_code(0, arity, N) >= _INT64_SAFE:
                big = True
            concl_cols = [grid[k] for k in range(arity)]
            raw_blocks.append((j, arity, cols, concl_cols, keep, rows))

    premise_codes = []
    conclusions = []
    for j, arity, cols, concl_cols, keep, rows in raw_blocks:
        idx = np.nonzero(keep)[0]
        if big:
            pc = np.empty((idx.shape[0], len(cols)), dtype=object)
            for a, (kind, argcols) in enumerate(cols):
                for r, i in enumerate(idx):
                    pc[r, a] = pair(kind, tuplecode(int(c[i]) for c in argcols))
            cc = np.array([tuplecode(int(c[i]) for c in concl_cols) for i in idx] or [], dtype=object)
        else:
            pc = np.empty((idx.shape[0], len(cols)), dtype=np.int64)
            for a, (kind, argcols) in enumerate(cols):
                tc = _kernels.tuplecode_array([c[idx] for c in argcols], backend)
                pc[:, a] = _kernels.pair_array(np.full(idx.shape[0], kind, dtype=np.int64), tc, backend)
            if arity:
                cc = _kernels.tuplecode_array([c[idx] for c in concl_cols], backend)
            else:
                cc = np.zeros(idx.shape[0], dtype=np.int64)
        premise_codes.append(pc)
        conclusions.append((j, arity, cc))

    flat = [pc.reshape(-1) for pc in premise_codes]
    if big:
        vocab = np.array(sorted({int(v) for f in flat for v in f}), dtype=object)
        lookup = {int(v): i for i, v in enumerate(vocab)}
    else:
        vocab = np.unique(np.concatenate(flat)) if flat else np.zeros(0, dtype=np.int64)
    blocks = []
    for pc, (j, arity, cc) in zip(premise_codes, conclusions):
        if big:
            ids = np.array([[lookup[int(v)] for v in row] for row in pc], dtype=np.int64).reshape(pc.shape)
        else:
            ids = np.searchsorted(vocab, pc).astype(np.int64)
        blocks.append(_Block(j, arity, ids, cc))
    return CompiledOperator(fam, params, signature, N, max_len, blocks, vocab)


def decode_output(codes: Iterable[int], size: int | None = None, max_len: int | None = None) -> frozenset:
    """Tuples coded in an operator output; non-tuple codes and out-of-range entries are ignored."""
    out = set()
    for c in codes:
        if c < 0 or not is_tuplecode(c):
            continue
        k, _ = unpair(c)
        if max_len is not None and k > max_len:
            continue
        t = untuple(c)
        if size is not None and any(v >= size for v in t):
            continue
        out.add(t)
    return frozenset(out)


def operator_relation(op: EnumOperator, s: FiniteStructure, stage=None, max_len=None) -> frozenset:
    return decode_output(op.apply(positive_diagram(s).codes, stage), s.size, max_len)


# --------------------------------------------------------------------------
# forcing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ForcingCertificate:
    base: tuple[int, ...]
    extension: tuple[int, ...] | None = None  # q, when found
    index_tuple: tuple[int, ...] | None = None  # j with tuplecode(j) in the output
    witness: tuple[int, ...] | None = None  # q[j], outside R
    checked: tuple[tuple[int, ...], ...] = ()  # maximal extensions examined for exhaustion

    @property
    def found(self) -> bool:
        return self.extension is not None


def _extensions(base: tuple, n: int, length: int):
    rest = [a for a in range(n) if a not in base]
    for tail in itertools.permutations(rest, length - len(base)):
        yield base + tail


def _violation(s, op, R, q, stage):
    out = op.apply(partial_pullback(s, q), stage)
    for c in sorted(out):
        if not is_tuplecode(c):
            continue
        j = untuple(c)
        if any(p >= len(q) for p in j):
            continue
        w = tuple(q[p] for p in j)
        if w not in R:
            return j, w
    return None


def _check_base(s, base):
    base = tuple(base)
    check_elements(s, base)
    if len(set(base)) != len(base):
        raise CompilerError(f"base tuple {base} is not injective")
    return base


def forcing_search(s: FiniteStructure, op: EnumOperator, R, base=(), stage=None) -> ForcingCertificate:
    """Least injective ``q`` extending ``base`` (by length, then entries) that forces against ``R``.

    Output only grows along extensions, so when no maximal extension
    forces, none does; those maximal tuples form the exhaustion certificate.
    """
    base = _check_base(s, base)
    R = frozenset(map(tuple, R))
    n = s.size
    maximal = tuple(_extensions(base, n, n))
    if not any(_violation(s, op, R, q, stage) for q in maximal):
        return ForcingCertificate(base, checked=maximal)
    for length in range(len(base), n + 1):
        for q in _extensions(base, n, length):
            hit = _violation(s, op, R, q, stage)
            if hit:
                return ForcingCertificate(base, q, hit[0], hit[1])
    raise AssertionError("unreachable: a maximal extension forces")


def verify_certificate(cert: ForcingCertificate, s: FiniteStructure, op: EnumOperator, R, stage=None) -> bool:
    R = frozenset(map(tuple, R))
    n = s.size
    if cert.found:
        q = cert.extension
        if q[: len(cert.base)] != cert.base or len(set(q)) != len(q):
            return False
        out = op.apply(partial_pullback(s, q), stage)
        j = cert.index_tuple
        return (tuplecode(j) in out and all(p < len(q) for p in j)
                and tuple(q[p] for p in j) == cert.witness and cert.witness not in R)
    expected = set(_extensions(cert.base, n, n))
    if set(cert.checked) != expected:
        return False
    return not any(_violation(s, op, R, q, stage) for q in cert.checked)


# --------------------------------------------------------------------------
# extraction
# --------------------------------------------------------------------------

def _axiom_disjunct(facts, jbar, base_len, length):
    """Disjunct saying: distinct q_0..q_{length-1}, q_p = z_p on the base, ``facts`` hold, x = q[j]."""
    term: dict[int, Var] = {p: Var("z", p) for p in range(base_len)}
    atoms = set()
    for k, p in enumerate(jbar):
        xk = Var("x", k)
        if p in term:
            atoms.add(Atom(EQ_REL, (xk, term[p])))
        else:
            term[p] = xk
    referenced = sorted({p for _, args in facts for p in args if p not in term})
    padding = [p for p in range(length) if p not in term and p not in referenced]
    best = None
    for perm in (itertools.permutations(referenced) if len(referenced) <= 4 else [tuple(referenced)]):
        t = dict(term)
        for i, p in enumerate(perm):
            t[p] = Var("y", i)
        for i, p in enumerate(padding):
            t[p] = Var("y", len(referenced) + i)
        cand = set(atoms)
        for rel, args in facts:
            cand.add(Atom(rel, tuple(t[p] for p in args)))
        for p, r in itertools.combinations(range(length), 2):
            if t[p] != t[r]:
                u, v = sorted((t[p], t[r]))
                cand.add(Atom(NEQ_REL, (u, v)))
        key = tuple(sorted(cand))
        if best is None or key < best:
            best = key
    return Disjunct(len(referenced) + len(padding), best)


def _decode_premises(premises, sig: Signature):
    facts = []
    for c in premises:
        kind, tc = unpair(c)
        if not is_tuplecode(tc):
            return None
        args = untuple(tc)
        if kind in (EQ, NEQ):
            if len(args) != 2:
                return None
            if kind == EQ and args[0] != args[1]:
                return None
            if kind == NEQ and args[0] == args[1]:
                return None
            if kind == EQ:
                continue
            facts.append((NEQ_REL, args))
        else:
            i = kind - REL_OFFSET
            if i >= len(sig) or sig.arity(i) != len(args):
                return None
            facts.append((sig.name(i), args))
    return facts


def extract_definition(s: FiniteStructure, op: EnumOperator, base=(), stage=None, max_len: int = 3,
                       check: bool = True) -> SigmaP1Family:
    """Read a defining family for the operator's relation on ``s`` from its axioms.

    Requires that ``base`` admits no forcing extension against that relation;
    the base entries become the family's parameters.
    """
    base = _check_base(s, base)
    if check:
        R = operator_relation(op, s, stage)
        cert = forcing_search(s, op, R, base, stage)
        if cert.found:
            raise CompilerError(f"base {base} does not force the operator's relation: "
                                f"{cert.extension} yields {cert.witness}")
    n, sig = s.size, s.signature
    by_arity: dict[int, dict] = {}
    for ax in op.axioms(stage):
        c = ax.conclusion
        if c < 0 or not is_tuplecode(c):
            continue
        jbar = untuple(c)
        if len(jbar) > max_len:
            continue
        facts = _decode_premises(ax.premises, sig)
        if facts is None:
            continue
        rel_top = max((sig.index(r) + 1 for r, _ in facts if r != NEQ_REL), default=0)
        length = max([len(base), rel_top] + [p + 1 for p in jbar] + [p + 1 for _, a in facts for p in a])
        if length > n:
            continue
        d = _axiom_disjunct(facts, jbar, len(base), length)
        by_arity.setdefault(len(jbar), {}).setdefault(d, None)
    fam = family_from_disjuncts("extracted", {k: list(v) for k, v in sorted(by_arity.items())},
                                param_count=len(base))
    return fam


# --------------------------------------------------------------------------
# diagonalization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AdversaryReport:
    index: int
    verdict: str  # DEFEATED or UNFORCEABLE
    step: int
    certificate: ForcingCertificate

    @property
    def witness(self):
        return self.certificate.index_tuple


@dataclass(frozen=True)
class DiagonalResult:
    g: NumberedEnumeration
    reports: tuple[AdversaryReport, ...]
    transcript: tuple[str, ...] = field(default=())


def diagonalize_copy(s: FiniteStructure, R, adversaries: Sequence[EnumOperator], stage=None) -> DiagonalResult:
    """Build an injective enumeration defeating every adversary that can be defeated.

    Step ``2k`` replaces the prefix by the least forcing extension for
    adversary ``k`` when one exists; step ``2e + 1`` puts element ``e`` into
    the prefix if missing.  Adversary 0 thus starts from the empty prefix,
    so it is defeated whenever some copy makes it disagree with ``R``.
    """
    R = frozenset(map(tuple, R))
    n = s.size
    p: tuple[int, ...] = ()
    reports = []
    log = []
    steps = max(2 * n, 2 * len(adversaries) - 1)
    for t in range(steps):
        if t % 2 == 1:
            e = (t - 1) // 2
            if e < n and e not in p:
                p = p + (e,)
            log.append(f"step {t}: element {e} prefix={list(p)}")
        else:
            k = t // 2
            if k >= len(adversaries):
                continue
            cert = forcing_search(s, adversaries[k], R, p, stage)
            if cert.found:
                p = cert.extension
                reports.append(AdversaryReport(k, "DEFEATED", t, cert))
                log.append(f"step {t}: adversary {k} DEFEATED index={list(cert.index_tuple)} "
                           f"witness={list(cert.witness)} prefix={list(p)}")
            else:
                reports.append(AdversaryReport(k, "UNFORCEABLE", t, cert))
                log.append(f"step {t}: adversary {k} UNFORCEABLE checked={len(cert.checked)}")
    p = p + tuple(a for a in range(n) if a not in p)
    return DiagonalResult(NumberedEnumeration(p), tuple(reports), tuple(log))


def replay_defeat(s: FiniteStructure, R, op: EnumOperator, g: NumberedEnumeration, index_tuple, stage=None) -> bool:
    """Check that ``index_tuple`` is in the operator's output on the copy but outside the pulled-back ``R``."""
    R = frozenset(map(tuple, R))
    copy = pullback_structure(g, s)
    out = op.apply(positive_diagram(copy).codes, stage)
    j = tuple(index_tuple)
    return tuplecode(j) in out and tuple(g(p) for p in j) not in R
