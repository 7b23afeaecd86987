"""Fixed-order compensated (Neumaier) summation.

Reductions over paths always run in path-index order on one thread, after
the paths themselves have been generated in parallel.  That keeps results
bit-identical for any worker count.  Means divide the compensated pair by
the count with an error-free correction step, so averaging identical values
returns that value exactly.
"""

from __future__ import annotations

import numba as nb
import numpy as np

__all__ = ["compensated_sum", "compensated_mean", "RowAccumulator"]


@nb.njit(cache=True, nogil=True)
def _neumaier(x):
    s = 0.0
    c = 0.0
    for i in range(x.shape[0]):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@nb.njit(cache=True, nogil=True)
def _two_prod_err(a, b, p):
    # Dekker: exact a*b = p + err without fma
    split = 134217729.0  # 2**27 + 1
    t = split * a
    a_hi = t - (t - a)
    a_lo = a - a_hi
    t = split * b
    b_hi = t - (t - b)
    b_lo = b - b_hi
    return ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo


@nb.njit(cache=True, nogil=True)
def _pair_div(s, c, n):
    hi = s + c
    lo = c - (hi - s) if abs(s) >= abs(c) else s - (hi - c)
    q = hi / n
    p = q * n
    if not (abs(q) < 1e290 and abs(q) > 1e-290):
        return q
    r = ((hi - p) - _two_prod_err(q, n, p)) + lo
    return q + r / n


@nb.njit(cache=True, nogil=True)
def _neumaier_pair(x):
    s = 0.0
    c = 0.0
    for i in range(x.shape[0]):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s, c


@nb.njit(cache=True, nogil=True)
def _pair_div_rows(s, c, n, out):
    for j in range(s.shape[0]):
        out[j] = _pair_div(s[j], c[j], n)


@nb.njit(cache=True, nogil=True)
def _add_rows(rows, s, c):
    # rows: (n, m); running column sums s, c of length m
    for i in range(rows.shape[0]):
        for j in range(rows.shape[1]):
            v = rows[i, j]
            t = s[j] + v
            if abs(s[j]) >= abs(v):
                c[j] += (s[j] - t) + v
            else:
                c[j] += (v - t) + s[j]
            s[j] = t


def compensated_sum(values) -> float:
    x = np.ascontiguousarray(values, dtype=np.float64).ravel()
    return float(_neumaier(x))


def compensated_mean(values) -> float:
    x = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("mean of empty sequence")
    s, c = _neumaier_pair(x)
    return float(_pair_div(s, c, float(x.size)))


class RowAccumulator:
    """Column-wise compensated sums of rows fed in order."""

    def __init__(self, width: int):
        self.count = 0
        self._s = np.zeros(width)
        self._c = np.zeros(width)

    def add(self, rows: np.ndarray) -> None:
        rows = np.ascontiguousarray(np.atleast_2d(rows), dtype=np.float64)
        if rows.shape[1] != self._s.shape[0]:
            raise ValueError("row width mismatch")
        _add_rows(rows, self._s, self._c)
        self.count += rows.shape[0]

    def total(self) -> np.ndarray:
        return self._s + self._c

    def mean(self) -> np.ndarray:
        if self.count == 0:
            raise ValueError("no rows accumulated")
        out = np.empty_like(self._s)
        _pair_div_rows(self._s, self._c, float(self.count), out)
        return out
