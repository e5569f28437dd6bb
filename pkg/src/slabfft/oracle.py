"""Brute-force reference transforms used to verify the fast paths.

These are direct summations, thousands of times slower than the kernels,
and deliberately share no code with them.  They ship with the library (not
only the test tree) so the CLI verify command can run them.
"""

from __future__ import annotations

import numpy as np

from .kernels import Direction

__all__ = ["dft1d_naive", "dft3d_r2c_naive", "global_exchange_reference"]


def _basis(n: int, sign: float) -> np.ndarray:
    k = np.arange(n)
    return np.exp(sign * 2j * np.pi * np.outer(k, k) / n)


def dft1d_naive(x: np.ndarray, direction: Direction = Direction.FORWARD) -> np.ndarray:
    """O(n^2) summation DFT: X[k] = sum_j x[j] * exp(-+2*pi*i*j*k/n)."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[0]
    sign = -1.0 if direction is Direction.FORWARD else 1.0
    return _basis(n, sign) @ x


def dft3d_r2c_naive(f: np.ndarray) -> np.ndarray:
    """Triple-summation forward transform of a real n0 x n1 x n2 array,
    truncated to the n2/2+1 retained bins of the fast axis.

    Evaluates the full sum over all six indices in one einsum, so nothing
    of the staged fast path is reused.  Intended for grids of at most a few
    thousand points.
    """
    f = np.asarray(f, dtype=np.float64)
    n0, n1, n2 = f.shape
    e0 = _basis(n0, -1.0)
    e1 = _basis(n1, -1.0)
    k2 = np.arange(n2 // 2 + 1)
    j2 = np.arange(n2)
    e2 = np.exp(-2j * np.pi * np.outer(k2, j2) / n2)
    return np.einsum("ai,bj,ck,ijk->abc", e0, e1, e2, f.astype(np.complex128), optimize=False)


def global_exchange_reference(global_arr: np.ndarray, p: int) -> list[np.ndarray]:
    """Ground-truth axis-0/axis-1 exchange by direct index arithmetic.

    Given the full n0 x n1 x n2c array, returns for each rank the expected
    logical view after a correct exchange: expected[q][j, r, k] equals
    global_arr[r, q*(n1/p) + j, k].
    """
    n0, n1, n2c = global_arr.shape
    if n1 % p != 0:
        raise ValueError(f"p={p} does not divide n1={n1}")
    n1p = n1 // p
    views = []
    for q in range(p):
        expected = np.empty((n1p, n0, n2c), dtype=global_arr.dtype)
        for j in range(n1p):
            for r in range(n0):
                expected[j, r, :] = global_arr[r, q * n1p + j, :]
        views.append(expected)
    return views
