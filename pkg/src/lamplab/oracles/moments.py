"""Matrix moments of the centered Gram operator and their Gaussian limits.

The ``(w, pi, a)``-moment of a symmetric matrix is
``prod_{i<j} M[a_i, a_j]^{w_ij}``.  For ``M = sqrt(m) Psi`` these
converge, as ``m`` grows, to products of centered Gaussian moments with
variance ``kappa (1 - kappa)`` off the block diagonal (doubled on it for
the rotation-invariant ensemble); the structured ensemble needs the
weights disassortative and the labelling conflict-free, and gives an
exact zero whenever any weight stays inside a block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..errors import InvalidInputError
from ..rng import sample_selection, substream
from ..sensing import EnsembleKind, hadamard_sign_column, xor_index
from .partitions import Labelling, Partition, WeightedGraph, is_disassortative, wst


def matrix_moment(
    psi_dense: np.ndarray,
    w: WeightedGraph,
    pi: Partition,
    a: Labelling,
    by_blocks: bool = False,
) -> float:
    """``prod_{i<j} Psi[a_i, a_j]^{w_ij}`` on a dense matrix.

    ``by_blocks=True`` evaluates the equivalent product over block pairs
    ``prod_{s<=t} Psi[a_s, a_t]^{W_st}`` instead.
    """
    m = psi_dense.shape[0]
    a.validate_for(pi, m)
    out = 1.0
    if by_blocks:
        mat = wst(w, pi)
        r = pi.size
        for s in range(1, r + 1):
            for t in range(s, r + 1):
                p = int(mat[s - 1, t - 1])
                if p:
                    out *= psi_dense[a.block_value(pi, s) - 1, a.block_value(pi, t) - 1] ** p
        return float(out)
    for i in range(1, pi.k + 1):
        for j in range(i + 1, pi.k + 1):
            p = int(w.w[i - 1, j - 1])
            if p:
                out *= psi_dense[a.a[i - 1] - 1, a.a[j - 1] - 1] ** p
    return float(out)


def _centered_gaussian_moment(power: int, variance: float) -> float:
    """``E Z^p`` for ``Z ~ N(0, variance)``: zero when odd, else
    ``variance^{p/2} (p-1)!!``."""
    if power % 2 == 1:
        return 0.0
    half = power // 2
    dfact = 1.0
    for i in range(1, half + 1):
        dfact *= 2 * i - 1
    return variance**half * dfact


def gaussian_moment_limit(
    w: WeightedGraph,
    pi: Partition,
    kappa: float,
    kind: EnsembleKind | str,
) -> float:
    """Large-system limit of ``E M(sqrt(m) Psi; w, pi, a)``.

    For the structured (hadamard) ensemble the value is 0 unless ``w``
    is disassortative, and otherwise applies to conflict-free
    labellings.
    """
    kind = EnsembleKind(kind)
    mat = wst(w, pi)
    r = pi.size
    var = kappa * (1.0 - kappa)
    if kind is EnsembleKind.HADAMARD:
        if not is_disassortative(w, pi):
            return 0.0
        out = 1.0
        for s in range(r):
            for t in range(s + 1, r):
                out *= _centered_gaussian_moment(int(mat[s, t]), var)
        return out
    out = 1.0
    for s in range(r):
        for t in range(s, r):
            p = int(mat[s, t])
            if p:
                out *= _centered_gaussian_moment(p, 2.0 * var if s == t else var)
    return out


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    trials: int
    values: np.ndarray


def _exact_n(kappa: float | Fraction, m: int) -> int:
    n = Fraction(kappa) * m
    if n.denominator != 1:
        raise InvalidInputError(f"kappa * m must be an integer, got {kappa} * {m}")
    return int(n)


def mc_matrix_moment(
    kind: EnsembleKind | str,
    w: WeightedGraph,
    pi: Partition,
    a: Labelling,
    m: int,
    kappa: float,
    trials: int,
    seed: int = 0,
) -> MCEstimate:
    """Monte-Carlo mean of ``M(sqrt(m) Psi; w, pi, a)`` over fresh sensors.

    Only the matrix entries indexed by the labelling are realized:

    * hadamard -- ``sqrt(m) Psi[a, b] = <bbar, h_{a xor b}> / sqrt(m)``
      with exact +/-1 sign columns, one O(m) dot per entry and trial;
    * haar -- the labelled rows of the orthogonal matrix form a uniform
      orthonormal frame, sampled as a thin QR per trial.
    """
    kind = EnsembleKind(kind)
    if trials < 2:
        raise InvalidInputError("need at least 2 trials")
    n = _exact_n(kappa, m)
    if not 0 < n < m:
        raise InvalidInputError(f"kappa = {kappa} gives n = {n} outside (0, m)")
    a.validate_for(pi, m)
    mat = wst(w, pi)
    r = pi.size
    pairs = [
        (s, t)
        for s in range(1, r + 1)
        for t in range(s, r + 1)
        if mat[s - 1, t - 1] >= 1
    ]
    powers = np.array([mat[s - 1, t - 1] for (s, t) in pairs], dtype=np.int64)
    vals = np.empty(trials)
    sqm = math.sqrt(m)
    if kind is EnsembleKind.HADAMARD:
        if m < 2 or (m & (m - 1)) != 0:
            raise InvalidInputError(f"hadamard needs m = 2**l, got {m}")
        cols = np.stack(
            [
                hadamard_sign_column(
                    xor_index(a.block_value(pi, s), a.block_value(pi, t), m), m
                )
                for (s, t) in pairs
            ]
        )
        for trial in range(trials):
            rng = substream(seed, "mc-moment", kind.value, trial)
            sel0 = sample_selection(rng, m, n) - 1
            bbar = np.full(m, -kappa)
            bbar[sel0] = 1.0 - kappa
            entries = (cols @ bbar) / sqm
            vals[trial] = np.prod(entries**powers)
    else:
        for trial in range(trials):
            rng = substream(seed, "mc-moment", kind.value, trial)
            sel0 = sample_selection(rng, m, n) - 1
            g = rng.standard_normal((m, r))
            q, rmat = np.linalg.qr(g)
            q = q * np.sign(np.diag(rmat))
            entries = np.empty(len(pairs))
            for idx, (s, t) in enumerate(pairs):
                e = float(q[sel0, s - 1] @ q[sel0, t - 1])
                if s == t:
                    e -= kappa
                entries[idx] = sqm * e
            vals[trial] = np.prod(entries**powers)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(trials))
    return MCEstimate(mean=mean, stderr=stderr, trials=trials, values=vals)


def bernoulli_centered_mean(coeffs: Sequence[Fraction | int], kappa: Fraction) -> Fraction:
    """``E p(B - kappa)`` for ``B ~ Bernoulli(kappa)``, exact."""
    kappa = Fraction(kappa)
    return kappa * _poly_eval(coeffs, 1 - kappa) + (1 - kappa) * _poly_eval(coeffs, -kappa)


def _poly_eval(coeffs: Sequence[Fraction | int], x: Fraction) -> Fraction:
    out = Fraction(0)
    for c in reversed([Fraction(c) for c in coeffs]):
        out = out * x + c
    return out


def collapse_polynomial(coeffs: Sequence[Fraction | int], kappa: Fraction | float) -> float:
    """Collapse constant of a Bernoulli-centered polynomial.

    For ``p`` with ``E p(B - kappa) = 0`` (verified in exact rational
    arithmetic), ``p(Psi) = c Psi`` with ``c = p(1-kappa) - p(-kappa)``.
    Pass ``kappa`` as a Fraction for non-dyadic ratios.
    """
    kappa = Fraction(kappa)
    if not 0 < kappa < 1:
        raise InvalidInputError(f"kappa must lie in (0, 1), got {kappa}")
    mean = bernoulli_centered_mean(coeffs, kappa)
    if mean != 0:
        raise InvalidInputError(
            f"polynomial is not centered: E p(B - kappa) = {mean} != 0"
        )
    return float(_poly_eval(coeffs, 1 - kappa) - _poly_eval(coeffs, -kappa))


def centered_power(i: int, kappa: Fraction | float) -> tuple[Fraction, ...]:
    """Coefficients of ``p_i(x) = x^i - E (B - kappa)^i``, always centered."""
    if i < 1:
        raise InvalidInputError("power must be >= 1")
    kappa = Fraction(kappa)
    mu_i = kappa * (1 - kappa) ** i + (1 - kappa) * (-kappa) ** i
    coeffs = [Fraction(0)] * (i + 1)
    coeffs[0] = -mu_i
    coeffs[i] = Fraction(1)
    return tuple(coeffs)


def matrix_polynomial(coeffs: Sequence[float], mat: np.ndarray) -> np.ndarray:
    """Horner evaluation of a scalar polynomial at a dense symmetric matrix.

    Degree ``d`` costs ``d - 1`` matrix products; degree 1 costs none.
    """
    m = mat.shape[0]
    if len(coeffs) == 1:
        return np.eye(m) * float(coeffs[0])
    out = float(coeffs[-1]) * mat
    out[np.diag_indices(m)] += float(coeffs[-2])
    for c in reversed(coeffs[:-2]):
        out = out @ mat
        out[np.diag_indices(m)] += float(c)
    return out
