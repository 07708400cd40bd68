"""Numba kernels for the in-place Walsh-Hadamard butterfly.

Kept in a separate module so the on-disk JIT cache works and so the
import can fail cleanly when numba is unavailable.  The kernels apply
the unscaled +/-1 butterfly; callers apply the 1/sqrt(m) factor once.
"""

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def butterfly_1d(v):
    n = v.shape[0]
    h = 1
    while h < n:
        for i in range(0, n, 2 * h):
            for j in range(i, i + h):
                x = v[j]
                y = v[j + h]
                v[j] = x + y
                v[j + h] = x - y
        h *= 2


@numba.njit(cache=True, nogil=True)
def butterfly_2d(a):
    # butterfly along axis 0, contiguous row operations vectorize well
    n = a.shape[0]
    k = a.shape[1]
    h = 1
    while h < n:
        for i in range(0, n, 2 * h):
            for j in range(i, i + h):
                for c in range(k):
                    x = a[j, c]
                    y = a[j + h, c]
                    a[j, c] = x + y
                    a[j + h, c] = x - y
        h *= 2
