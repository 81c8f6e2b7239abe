"""Numeric inner loops.

Two interchangeable implementations live here: numba-compiled loops and a
pure-numpy path.  The numba path is used when numba imports and the
``EMT_DISABLE_NUMBA`` environment variable is unset (or ``0``).  Both paths
must return identical results; ``tests/test_kernels.py`` checks that.

Atom rows handed to :func:`search_answers` have the layout::

    [kind, negated, level, arity, v0, v1, ..., v_{MAXAR-1}]

``kind`` 0 is equality, 1 inequality, ``k >= 2`` the relation with index
``k - 2``.  ``level`` is the largest variable slot the atom mentions, i.e. the
search depth at which it can first be checked.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_flag = os.environ.get("EMT_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = numba is not None and _flag in ("", "0", "false", "no")
BACKEND = "numba" if USE_NUMBA else "numpy"

KIND, NEG, LEVEL, ARITY, VARS = 0, 1, 2, 3, 4


def _maybe_njit(func):
    if numba is None:
        return func
    return numba.njit(cache=True)(func)


# --------------------------------------------------------------------------
# conjunctive search
# --------------------------------------------------------------------------

def _search_loop(n, table, offsets, eqlabel, atoms, nvars, fixed, n_out):
    size = 1
    for _ in range(n_out):
        size *= n
    mask = np.zeros(size, dtype=np.bool_)
    if nvars == 0:
        if atoms.shape[0] == 0:
            mask[0] = True
        return mask
    assign = np.full(nvars, -1, dtype=np.int64)
    level = 0
    while level >= 0:
        if level == nvars:
            idx = 0
            for p in range(n_out):
                idx = idx * n + assign[p]
            mask[idx] = True
            if n_out == 0:
                return mask
            for p in range(n_out, nvars):
                assign[p] = -1
            level = n_out - 1
            continue
        f = fixed[level]
        exhausted = False
        if f >= 0:
            if assign[level] == -1 and f < n:
                assign[level] = f
            else:
                exhausted = True
        else:
            assign[level] += 1
            if assign[level] >= n:
                exhausted = True
        if exhausted:
            assign[level] = -1
            level -= 1
            continue
        ok = True
        for r in range(atoms.shape[0]):
            if atoms[r, LEVEL] != level:
                continue
            kind = atoms[r, KIND]
            if kind == 0:
                holds = eqlabel[assign[atoms[r, VARS]]] == eqlabel[assign[atoms[r, VARS + 1]]]
            elif kind == 1:
                holds = eqlabel[assign[atoms[r, VARS]]] != eqlabel[assign[atoms[r, VARS + 1]]]
            else:
                idx = 0
                for p in range(atoms[r, ARITY]):
                    idx = idx * n + assign[atoms[r, VARS + p]]
                holds = table[offsets[kind - 2] + idx]
            if atoms[r, NEG] == 1:
                holds = not holds
            if not holds:
                ok = False
                break
        if ok:
            level += 1
    return mask


_search_numba = _maybe_njit(_search_loop)


def _search_numpy(n, table, offsets, eqlabel, atoms, nvars, fixed, n_out):
    """Level-by-level frontier expansion; same answers as the DFS loop."""
    size = n ** n_out
    rows = np.zeros((1, 0), dtype=np.int64)
    for level in range(nvars):
        f = fixed[level]
        if f >= 0:
            vals = np.array([f], dtype=np.int64) if f < n else np.zeros(0, dtype=np.int64)
        else:
            vals = np.arange(n, dtype=np.int64)
        k = rows.shape[0]
        rows = np.concatenate(
            [np.repeat(rows, len(vals), axis=0), np.tile(vals, k)[:, None]], axis=1
        )
        for r in np.nonzero(atoms[:, LEVEL] == level)[0]:
            kind = atoms[r, KIND]
            if kind == 0:
                holds = eqlabel[rows[:, atoms[r, VARS]]] == eqlabel[rows[:, atoms[r, VARS + 1]]]
            elif kind == 1:
                holds = eqlabel[rows[:, atoms[r, VARS]]] != eqlabel[rows[:, atoms[r, VARS + 1]]]
            else:
                idx = np.zeros(rows.shape[0], dtype=np.int64)
                for p in range(atoms[r, ARITY]):
                    idx = idx * n + rows[:, atoms[r, VARS + p]]
                holds = table[offsets[kind - 2] + idx]
            if atoms[r, NEG] == 1:
                holds = ~holds
            rows = rows[holds]
        if rows.shape[0] == 0:
            break
    mask = np.zeros(size, dtype=np.bool_)
    if rows.shape[0]:
        idx = np.zeros(rows.shape[0], dtype=np.int64)
        for p in range(n_out):
            idx = idx * n + rows[:, p]
        mask[idx] = True
    elif nvars == 0 and atoms.shape[0] == 0:
        mask[0] = True
    return mask


def search_answers(n, table, offsets, eqlabel, atoms, nvars, fixed, n_out, backend=None):
    """Project the satisfying assignments of a conjunction onto its first slots.

    Returns a boolean mask of length ``n ** n_out``; entry ``idx`` is set when
    the base-``n`` digits of ``idx`` (most significant first) extend to a full
    satisfying assignment.  Slots with ``fixed[v] >= 0`` are pinned.
    """
    backend = backend or BACKEND
    if backend == "numba" and numba is not None:
        return _search_numba(n, table, offsets, eqlabel, atoms, nvars, fixed, n_out)
    return _search_numpy(n, table, offsets, eqlabel, atoms, nvars, fixed, n_out)


# --------------------------------------------------------------------------
# Cantor pairing over arrays
# --------------------------------------------------------------------------

def _pair_loop(x, y):
    out = np.empty(x.shape[0], dtype=np.int64)
    for i in range(x.shape[0]):
        s = x[i] + y[i]
        out[i] = s * (s + 1) // 2 + y[i]
    return out


def _unpair_loop(z):
    xs = np.empty(z.shape[0], dtype=np.int64)
    ys = np.empty(z.shape[0], dtype=np.int64)
    for i in range(z.shape[0]):
        w = np.int64((np.sqrt(8.0 * z[i] + 1.0) - 1.0) / 2.0)
        while w * (w + 1) // 2 > z[i]:
            w -= 1
        while (w + 1) * (w + 2) // 2 <= z[i]:
            w += 1
        ys[i] = z[i] - w * (w + 1) // 2
        xs[i] = w - ys[i]
    return xs, ys


_pair_numba = _maybe_njit(_pair_loop)
_unpair_numba = _maybe_njit(_unpair_loop)


def _pair_numpy(x, y):
    s = x + y
    return s * (s + 1) // 2 + y


def _unpair_numpy(z):
    w = ((np.sqrt(8.0 * z.astype(np.float64) + 1.0) - 1.0) / 2.0).astype(np.int64)
    w -= (w * (w + 1) // 2 > z).astype(np.int64)
    w += ((w + 1) * (w + 2) // 2 <= z).astype(np.int64)
    y = z - w * (w + 1) // 2
    return w - y, y


def pair_array(x, y, backend=None):
    x = np.ascontiguousarray(x, dtype=np.int64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if (backend or BACKEND) == "numba" and numba is not None:
        return _pair_numba(x, y)
    return _pair_numpy(x, y)


def unpair_array(z, backend=None):
    z = np.ascontiguousarray(z, dtype=np.int64)
    if (backend or BACKEND) == "numba" and numba is not None:
        return _unpair_numba(z)
    return _unpair_numpy(z)


def tuplecode_array(columns, backend=None):
    """Vectorised tuple coding; ``columns`` is a list of equal-length int arrays."""
    k = len(columns)
    if k == 0:
        return np.zeros(0, dtype=np.int64)
    payload = np.ascontiguousarray(columns[-1], dtype=np.int64)
    for col in reversed(columns[:-1]):
        payload = pair_array(col, payload, backend)
    return pair_array(np.full(payload.shape[0], k, dtype=np.int64), payload, backend)
