import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emt import _kernels
from emt.compiler import compile_family
from emt.core import pair, unpair
from emt.corpus import random_family, random_structure, rng_for
from emt.formula import formula_mask

needs_numba = pytest.mark.skipif(_kernels.numba is None, reason="numba not installed")


@needs_numba
@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_search_backends_agree(seed):
    rng = rng_for(seed, "kernels")
    s = random_structure(rng, max_n=5)
    fam = random_family(rng, s.signature, params=rng.randint(0, 1))
    params = tuple(rng.randrange(s.size) for _ in range(fam.param_count))
    for k in fam.arities:
        phi = fam.formula(k)
        a = formula_mask(s, phi, params, 10, backend="numba")
        b = formula_mask(s, phi, params, 10, backend="numpy")
        assert np.array_equal(a, b)


@needs_numba
def test_compiled_axioms_backends_agree():
    rng = rng_for(0, "kernels-compile")
    for _ in range(10):
        s = random_structure(rng, max_n=4)
        fam = random_family(rng, s.signature)
        a = compile_family(fam, (), s.size, 10, s.signature, backend="numba").axioms()
        b = compile_family(fam, (), s.size, 10, s.signature, backend="numpy").axioms()
        assert a == b


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_pairing_arrays_match_scalar(backend):
    if backend == "numba" and _kernels.numba is None:
        pytest.skip("numba not installed")
    rng = np.random.default_rng(7)
    x = rng.integers(0, 2 ** 20, 5000)
    y = rng.integers(0, 2 ** 20, 5000)
    z = _kernels.pair_array(x, y, backend)
    assert [int(v) for v in z[:200]] == [pair(int(a), int(b)) for a, b in zip(x[:200], y[:200])]
    xs, ys = _kernels.unpair_array(z, backend)
    assert np.array_equal(xs, x) and np.array_equal(ys, y)
    small = np.arange(3000, dtype=np.int64)
    xs, ys = _kernels.unpair_array(small, backend)
    assert [(int(a), int(b)) for a, b in zip(xs, ys)] == [unpair(int(v)) for v in small]


def test_tuplecode_array_empty_and_single():
    assert _kernels.tuplecode_array([]).shape == (0,)
    one = _kernels.tuplecode_array([np.array([0, 3])])
    assert list(one) == [pair(1, 0), pair(1, 3)]


def test_disable_flag_selects_numpy():
    env = dict(os.environ, EMT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from emt import _kernels; print(_kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "numpy"
