"""Fast Walsh-Hadamard transform with orthonormal scaling.

``fwht_inplace`` overwrites a length ``m = 2**l`` vector with ``H v``,
where ``H`` is the symmetric orthonormal Hadamard-Walsh matrix
``H[i, j] = (-1)**<bits(i), bits(j)> / sqrt(m)`` (0-based bit vectors).
With this scaling the transform is an involution: applying it twice
returns the input.

Two backends implement the O(m log m) butterfly:

* a numba ``@njit`` kernel (default when numba imports), and
* a pure-numpy vectorized fallback.

Set the environment variable ``LAMPLAB_NUMBA=0`` to force the numpy
path; ``LAMPLAB_NUMBA=1`` requires numba and raises if it is missing.
``benchmarks/bench_fwht.py`` compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import InvalidDimensionError

_ENV_FLAG = os.environ.get("LAMPLAB_NUMBA", "").strip().lower()

if _ENV_FLAG in ("0", "false", "no"):
    _NUMBA_KERNELS = None
elif _ENV_FLAG in ("1", "true", "yes"):
    from . import _fwht_numba as _NUMBA_KERNELS
else:
    try:
        from . import _fwht_numba as _NUMBA_KERNELS
    except ImportError:  # pragma: no cover - exercised via env flag instead
        _NUMBA_KERNELS = None


def using_numba() -> bool:
    """True when the JIT kernels are active."""
    return _NUMBA_KERNELS is not None


def _check_pow2(m: int) -> None:
    if m < 2 or (m & (m - 1)) != 0:
        raise InvalidDimensionError(f"length must be a power of two >= 2, got {m}")


def _butterfly_numpy(a: np.ndarray) -> None:
    # in-place butterfly along axis 0; works for 1-D and 2-D arrays
    n = a.shape[0]
    h = 1
    while h < n:
        b = a.reshape((-1, 2, h) + a.shape[1:])
        t = b[:, 0].copy()
        b[:, 0] += b[:, 1]
        b[:, 1] *= -1.0
        b[:, 1] += t
        h *= 2


def fwht_inplace(v: np.ndarray) -> np.ndarray:
    """Overwrite ``v`` with ``H v`` and return it.

    ``v`` must be a contiguous float64 vector whose length is a power of
    two.  The orthonormal ``1/sqrt(m)`` factor is applied once at the end.
    """
    if v.ndim != 1:
        raise InvalidDimensionError("fwht_inplace expects a 1-D vector")
    m = v.shape[0]
    _check_pow2(m)
    if _NUMBA_KERNELS is not None:
        _NUMBA_KERNELS.butterfly_1d(v)
    else:
        _butterfly_numpy(v)
    v *= 1.0 / math.sqrt(m)
    return v


def fwht(v: np.ndarray) -> np.ndarray:
    """Return ``H v`` without touching the input."""
    out = np.array(v, dtype=np.float64, copy=True)
    return fwht_inplace(out)


def fwht_cols_inplace(a: np.ndarray) -> np.ndarray:
    """Apply the transform to every column of a 2-D array, in place."""
    if a.ndim != 2:
        raise InvalidDimensionError("fwht_cols_inplace expects a 2-D array")
    m = a.shape[0]
    _check_pow2(m)
    if _NUMBA_KERNELS is not None and a.flags.c_contiguous:
        _NUMBA_KERNELS.butterfly_2d(a)
    else:
        _butterfly_numpy(a)
    a *= 1.0 / math.sqrt(m)
    return a


def hadamard_matrix(m: int) -> np.ndarray:
    """Dense orthonormal Hadamard-Walsh matrix, built by transforming I."""
    _check_pow2(m)
    h = np.eye(m)
    return fwht_cols_inplace(h)
