"""Subsampled orthogonal sensing operators.

A sensor is ``A = U P S``: keep ``n`` randomly chosen columns of an
``m x m`` orthogonal matrix ``U``.  Two ensembles are supported:

* ``hadamard`` -- ``U`` is the orthonormal Hadamard-Walsh matrix
  (``m`` must be a power of two); all products are matrix-free through
  the fast transform at O(m log m).
* ``haar`` -- ``U`` is uniform on the orthogonal group.  Only the ``n``
  kept columns are ever used by any product, so the sensor stores the
  ``m x n`` block, sampled exactly from the uniform (Haar) distribution
  on orthonormal frames via Gaussian + thin QR with a positive
  R-diagonal.

The centered Gram operator ``Psi = A A^T - kappa I`` (``kappa = n/m``)
acts as ``U Bbar U^T`` with ``Bbar`` diagonal, ``1 - kappa`` on the kept
set and ``-kappa`` elsewhere; its spectrum is ``{1 - kappa, -kappa}``
with multiplicities ``(n, m - n)``.

Indices in the public interface are 1-based; storage is 0-based.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import InvalidDimensionError, InvalidInputError, SizeLimitError
from .fwht import fwht, fwht_cols_inplace, fwht_inplace, hadamard_matrix
from .rng import sample_selection, substream

DENSE_CAP = 1 << 12
HAAR_SIZE_LIMIT = 1 << 13


class EnsembleKind(str, Enum):
    HADAMARD = "hadamard"
    HAAR = "haar"


def _check_index(i: int, m: int) -> None:
    if not 1 <= i <= m:
        raise InvalidInputError(f"index {i} out of range [1..{m}]")


def xor_index(i: int, j: int, m: int) -> int:
    """Group operation on ``[1..m]``: ``((i-1) XOR (j-1)) + 1``.

    Satisfies ``sqrt(m) * (h_i * h_j) = h_{xor_index(i, j)}`` exactly for
    the columns ``h_i`` of the Hadamard-Walsh matrix.
    """
    if m < 2 or (m & (m - 1)) != 0:
        raise InvalidDimensionError(f"m must be a power of two, got {m}")
    _check_index(i, m)
    _check_index(j, m)
    return ((i - 1) ^ (j - 1)) + 1


def hadamard_entry(i: int, j: int, m: int) -> float:
    """Entry ``(i, j)`` of the orthonormal Hadamard-Walsh matrix.

    ``(-1)**<bits(i-1), bits(j-1)> / sqrt(m)`` with 1-based ``i, j``.
    """
    if m < 2 or (m & (m - 1)) != 0:
        raise InvalidDimensionError(f"m must be a power of two, got {m}")
    _check_index(i, m)
    _check_index(j, m)
    parity = ((i - 1) & (j - 1)).bit_count() & 1
    return (-1.0 if parity else 1.0) / math.sqrt(m)


def hadamard_sign_column(j: int, m: int) -> np.ndarray:
    """Column ``j`` of ``sqrt(m) * H`` as an exact +/-1 float vector."""
    if m < 2 or (m & (m - 1)) != 0:
        raise InvalidDimensionError(f"m must be a power of two, got {m}")
    _check_index(j, m)
    v = np.bitwise_and(np.arange(m, dtype=np.int64), j - 1)
    # xor-fold popcount parity
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return 1.0 - 2.0 * (v & 1).astype(np.float64)


def _haar_stiefel(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """Exact uniform m x n orthonormal frame.

    Cholesky-QR of a Gaussian matrix: ``Q = G L^{-T}`` with
    ``L L^T = G^T G``.  This is the unique QR factor with positive
    R-diagonal, i.e. the standard Gaussian + QR construction with the
    sign correction built in, at BLAS-3 speed.  Gaussian aspect ratios
    keep the conditioning mild; a cheap probe triggers one refinement
    pass in the rare case it is not.
    """
    g = rng.standard_normal((m, n))
    q = g
    for _ in range(2):
        s = q.T @ q
        ell = scipy.linalg.cholesky(s, lower=True, check_finite=False)
        q = scipy.linalg.blas.dtrsm(1.0, ell, q, side=1, lower=1, trans_a=1)
        u = np.full(n, 1.0 / math.sqrt(n))
        err = np.abs(q.T @ (q @ u) - u).max()
        if err <= 1e-12:
            return q
    if err > 1e-12:  # pragma: no cover - defensive
        raise InvalidInputError(f"orthonormalization failed, residual {err:.2e}")
    return q


@dataclass(frozen=True)
class SubsampledSensor:
    """Matrix-free ``A = U P S`` with ``n`` of ``m`` columns kept."""

    kind: EnsembleKind
    m: int
    n: int
    selection: np.ndarray  # sorted 1-based column indices, length n
    seed: int
    haar_basis: np.ndarray | None = None  # m x n orthonormal block iff haar
    _sel0: np.ndarray = field(init=False, repr=False)
    _mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        sel0 = np.asarray(self.selection, dtype=np.int64) - 1
        mask = np.zeros(self.m)
        mask[sel0] = 1.0
        object.__setattr__(self, "_sel0", sel0)
        object.__setattr__(self, "_mask", mask)

    @property
    def kappa(self) -> float:
        return self.n / self.m


def sample_sensor(
    kind: EnsembleKind | str,
    m: int,
    n: int,
    seed: int,
    haar_size_limit: int = HAAR_SIZE_LIMIT,
) -> SubsampledSensor:
    """Draw a sensor: random column selection, plus the basis block for haar.

    Identical arguments reproduce the sensor bit for bit.
    """
    kind = EnsembleKind(kind)
    if not 0 < n < m:
        raise InvalidInputError(f"need 0 < n < m, got n={n}, m={m}")
    if kind is EnsembleKind.HADAMARD and (m < 2 or (m & (m - 1)) != 0):
        raise InvalidDimensionError(f"hadamard ensemble needs m = 2**l, got m={m}")
    selection = sample_selection(substream(seed, "selection", kind.value), m, n)
    basis = None
    if kind is EnsembleKind.HAAR:
        if m > haar_size_limit:
            raise SizeLimitError(
                f"haar ensemble capped at m <= {haar_size_limit} (asked m={m}); "
                "raise haar_size_limit explicitly for larger runs"
            )
        basis = _haar_stiefel(substream(seed, "haar-basis"), m, n)
    return SubsampledSensor(kind=kind, m=m, n=n, selection=selection, seed=seed, haar_basis=basis)


def apply_A(s: SubsampledSensor, x: np.ndarray) -> np.ndarray:
    """``A x``: scatter into the kept coordinates, then apply ``U``."""
    if x.shape != (s.n,):
        raise InvalidDimensionError(f"expected shape ({s.n},), got {x.shape}")
    if s.kind is EnsembleKind.HADAMARD:
        buf = np.zeros(s.m)
        buf[s._sel0] = x
        return fwht_inplace(buf)
    return s.haar_basis @ x


def apply_At(s: SubsampledSensor, z: np.ndarray) -> np.ndarray:
    """``A^T z``: apply ``U^T``, then gather the kept coordinates."""
    if z.shape != (s.m,):
        raise InvalidDimensionError(f"expected shape ({s.m},), got {z.shape}")
    if s.kind is EnsembleKind.HADAMARD:
        return fwht(z)[s._sel0]
    return s.haar_basis.T @ z


def apply_AAt(s: SubsampledSensor, v: np.ndarray) -> np.ndarray:
    """``A A^T v`` without forming the intermediate length-n vector twice."""
    if v.shape != (s.m,):
        raise InvalidDimensionError(f"expected shape ({s.m},), got {v.shape}")
    if s.kind is EnsembleKind.HADAMARD:
        w = fwht(v)
        w *= s._mask
        return fwht_inplace(w)
    return s.haar_basis @ (s.haar_basis.T @ v)


def dense_a(s: SubsampledSensor) -> np.ndarray:
    """Dense ``m x n`` matrix ``A`` (desk-scale sizes only)."""
    if s.m > DENSE_CAP:
        raise SizeLimitError(f"dense assembly capped at m <= {DENSE_CAP}")
    if s.kind is EnsembleKind.HADAMARD:
        return hadamard_matrix(s.m)[:, s._sel0]
    return s.haar_basis.copy()


@dataclass(frozen=True)
class PsiOperator:
    """Centered Gram operator ``Psi = A A^T - kappa I = U Bbar U^T``."""

    sensor: SubsampledSensor
    _bbar: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = self.sensor
        bbar = np.full(s.m, -s.kappa)
        bbar[s._sel0] = 1.0 - s.kappa
        object.__setattr__(self, "_bbar", bbar)

    @property
    def m(self) -> int:
        return self.sensor.m

    @property
    def kappa(self) -> float:
        return self.sensor.kappa


def apply_Psi(p: PsiOperator, v: np.ndarray) -> np.ndarray:
    """``Psi v = U (Bbar (U^T v))``, equal to ``A A^T v - kappa v``."""
    s = p.sensor
    if v.shape != (s.m,):
        raise InvalidDimensionError(f"expected shape ({s.m},), got {v.shape}")
    if s.kind is EnsembleKind.HADAMARD:
        w = fwht(v)
        w *= p._bbar
        return fwht_inplace(w)
    return s.haar_basis @ (s.haar_basis.T @ v) - s.kappa * v


def psi_entry(p: PsiOperator, a: int, b: int) -> float:
    """Single entry ``Psi[a, b]`` (1-based), computed directly.

    The hadamard path evaluates ``<bbar, h_{a xor b}> / m`` with exact
    +/-1 signs; all partial sums are exactly representable, so the
    diagonal comes out as exact 0.0.
    """
    s = p.sensor
    _check_index(a, s.m)
    _check_index(b, s.m)
    if s.kind is EnsembleKind.HADAMARD:
        col = hadamard_sign_column(xor_index(a, b, s.m), s.m)
        return float(p._bbar @ col) / s.m
    q = s.haar_basis
    val = float(q[a - 1] @ q[b - 1])
    if a == b:
        val -= s.kappa
    return val


def apply_Psi_mat(p: PsiOperator, v: np.ndarray) -> np.ndarray:
    """``Psi V`` column-wise for a 2-D block ``V``."""
    s = p.sensor
    if v.ndim != 2 or v.shape[0] != s.m:
        raise InvalidDimensionError(f"expected ({s.m}, b) block, got {v.shape}")
    if s.kind is EnsembleKind.HADAMARD:
        w = np.array(v, dtype=np.float64, copy=True, order="C")
        fwht_cols_inplace(w)
        w *= p._bbar[:, None]
        return fwht_cols_inplace(w)
    q = s.haar_basis
    return q @ (q.T @ v) - s.kappa * v


@functools.lru_cache(maxsize=2)
def _xor_table(m: int) -> np.ndarray:
    idx = np.arange(m, dtype=np.int32)
    return np.bitwise_xor.outer(idx, idx)


def dense_psi(p: PsiOperator) -> np.ndarray:
    """Dense ``m x m`` matrix ``Psi`` (desk-scale sizes only).

    Hadamard: ``Psi[a, b] = (H bbar)[a xor b] / sqrt(m)``, assembled with
    one transform and an XOR-indexed gather.
    """
    s = p.sensor
    if s.m > DENSE_CAP:
        raise SizeLimitError(f"dense assembly capped at m <= {DENSE_CAP}")
    if s.kind is EnsembleKind.HADAMARD:
        c = fwht(p._bbar)
        return c[_xor_table(s.m)] / math.sqrt(s.m)
    q = s.haar_basis
    out = q @ q.T
    out[np.diag_indices(s.m)] -= s.kappa
    return out


def dump_dense_csv(mat: np.ndarray, path: str) -> None:
    """Row-major CSV dump at 17 significant digits (debug aid)."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.atleast_2d(mat):
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")
