"""Hot loops for dense truncated series over table-driven finite fields.

Two interchangeable implementations: numba-compiled loops, and a pure
numpy path that vectorizes over one operand.  Set ASDEFECT_PURE_NUMPY=1
(or run without numba installed) to force the numpy path.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from typing import Iterator

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

_FLAG = os.environ.get("ASDEFECT_PURE_NUMPY", "").strip().lower() in ("1", "true", "yes", "on")

BACKEND = "numba" if HAVE_NUMBA and not _FLAG else "numpy"


# --- numpy path -------------------------------------------------------------

def mul_numpy(a: np.ndarray, b: np.ndarray, n: int, add_t: np.ndarray, mul_t: np.ndarray) -> np.ndarray:
    out = np.zeros((n, n), dtype=np.uint16)
    if np.count_nonzero(a[:n, :n]) > np.count_nonzero(b[:n, :n]):
        a, b = b, a
    ii, jj = np.nonzero(a[:n, :n])
    for i1, j1 in zip(ii.tolist(), jj.tolist()):
        if i1 + j1 >= n:
            continue
        row = mul_t[a[i1, j1]]
        block = row[b[: n - i1, : n - j1]]
        target = out[i1:, j1:]
        target[...] = add_t[target, block]
    idx = np.arange(n)
    out[idx[:, None] + idx[None, :] >= n] = 0
    return out


def subst_numpy(
    f: np.ndarray, n_src: int, m: int, q: int, ka: int, kb: int,
    powers: np.ndarray, n_out: int, add_t: np.ndarray, mul_t: np.ndarray,
) -> np.ndarray:
    out = np.zeros((n_out, n_out), dtype=np.uint16)
    ii, jj = np.nonzero(f[:n_src, :n_src])
    for i, j in zip(ii.tolist(), jj.tolist()):
        e = m * i + q * j
        if i + j >= n_src or e >= n_out:
            continue
        k = ka * i + kb * j
        width = n_out - e
        out[e, :width] = add_t[out[e, :width], mul_t[f[i, j]][powers[k, :width]]]
    return out


# --- numba path -------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def mul_numba(a, b, n, add_t, mul_t):
        out = np.zeros((n, n), dtype=np.uint16)
        for i1 in range(n):
            for j1 in range(n - i1):
                c1 = a[i1, j1]
                if c1 == 0:
                    continue
                lim1 = n - i1 - j1
                for i2 in range(lim1):
                    for j2 in range(lim1 - i2):
                        c2 = b[i2, j2]
                        if c2 != 0:
                            out[i1 + i2, j1 + j2] = add_t[out[i1 + i2, j1 + j2], mul_t[c1, c2]]
        return out

    @njit(cache=True)
    def subst_numba(f, n_src, m, q, ka, kb, powers, n_out, add_t, mul_t):
        out = np.zeros((n_out, n_out), dtype=np.uint16)
        for i in range(n_src):
            for j in range(n_src - i):
                c = f[i, j]
                if c == 0:
                    continue
                e = m * i + q * j
                if e >= n_out:
                    continue
                k = ka * i + kb * j
                for y in range(n_out - e):
                    w = powers[k, y]
                    if w != 0:
                        out[e, y] = add_t[out[e, y], mul_t[c, w]]
        return out

else:  # pragma: no cover
    mul_numba = None
    subst_numba = None


def set_backend(name: str) -> None:
    global BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    BACKEND = name


@contextmanager
def use_backend(name: str) -> Iterator[None]:
    old = BACKEND
    set_backend(name)
    try:
        yield
    finally:
        set_backend(old)


def mul_dense(a: np.ndarray, b: np.ndarray, n: int, add_t: np.ndarray, mul_t: np.ndarray) -> np.ndarray:
    """Product of two dense coefficient arrays, truncated to total degree < n."""
    a = np.ascontiguousarray(a[:n, :n])
    b = np.ascontiguousarray(b[:n, :n])
    if BACKEND == "numba":
        return mul_numba(a, b, n, add_t, mul_t)
    return mul_numpy(a, b, n, add_t, mul_t)


def subst_dense(
    f: np.ndarray, n_src: int, m: int, q: int, ka: int, kb: int,
    powers: np.ndarray, n_out: int, add_t: np.ndarray, mul_t: np.ndarray,
) -> np.ndarray:
    """Image of f under x -> x^m * P[ka], y -> x^q * P[kb], P[k] = powers[k]."""
    f = np.ascontiguousarray(f)
    powers = np.ascontiguousarray(powers)
    if BACKEND == "numba":
        return subst_numba(f, n_src, m, q, ka, kb, powers, n_out, add_t, mul_t)
    return subst_numpy(f, n_src, m, q, ka, kb, powers, n_out, add_t, mul_t)
