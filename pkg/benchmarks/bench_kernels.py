"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each row runs the same inputs through both backends, checks the results
agree, and reports the best wall time of ``--repeat`` runs.  The first
numba call compiles (or loads the cache), so one warm-up run is discarded.
"""

import argparse
import time

import numpy as np

from emt import _kernels
from emt.compiler import compile_family
from emt.core import Signature
from emt.corpus import random_family, random_structure, rng_for
from emt.formula import formula_mask, parse_family


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def pairing_case(size):
    rng = np.random.default_rng(0)
    x = rng.integers(0, 2 ** 20, size)
    y = rng.integers(0, 2 ** 20, size)

    def run(backend):
        z = _kernels.pair_array(x, y, backend)
        return _kernels.unpair_array(z, backend)
    return run


def search_case(n, count):
    rng = rng_for(0, "bench")
    cases = []
    for _ in range(count):
        s = random_structure(rng, n)
        fam = random_family(rng, s.signature, max_bound=2, max_atoms=4)
        cases.extend((s, fam.formula(k)) for k in fam.arities)

    def run(backend):
        return [formula_mask(s, phi, (), 10, backend) for s, phi in cases]
    return run


def deep_search_case(n):
    # a path of length four through bound variables: the search tree is n^6
    fam = parse_family("family p\narity 2\n"
                       "disjunct exists y1, y2, y3 . E(x1,y1) & E(y1,y2) & E(y2,y3) & E(y3,x2)\n")
    s = random_structure(rng_for(1, "bench-deep"), n, Signature((("E", 2),)), density=0.3)

    def run(backend):
        return formula_mask(s, fam.formula(2), (), 0, backend)
    return run


def compile_case(n):
    rng = rng_for(2, "bench-compile")
    s = random_structure(rng, n)
    fam = random_family(rng, s.signature, max_disjuncts=8)

    def run(backend):
        return compile_family(fam, (), n, 10, s.signature, backend=backend).axioms()
    return run


def same(a, b):
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    if isinstance(a, (list, tuple)) and a and isinstance(a[0], np.ndarray):
        return all(np.array_equal(u, v) for u, v in zip(a, b))
    return a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.numba is None:
        print("numba is not installed; nothing to compare")
        return
    rows = [
        ("pair+unpair 10^6", pairing_case(10 ** 6)),
        ("200 random formulas n=6", search_case(6, 200)),
        ("4-step path n=12", deep_search_case(12)),
        ("4-step path n=20", deep_search_case(20)),
        ("compile family n=6", compile_case(6)),
    ]
    print(f"{'case':<26}{'numpy s':>12}{'numba s':>12}{'speedup':>10}  agree")
    for label, run in rows:
        t_np, out_np = best_of(lambda: run("numpy"), args.repeat)
        t_nb, out_nb = best_of(lambda: run("numba"), args.repeat)
        print(f"{label:<26}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}  {same(out_np, out_nb)}")


if __name__ == "__main__":
    main()
