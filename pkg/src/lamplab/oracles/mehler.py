"""Truncated kernel expansion of weakly correlated Gaussian expectations.

For a unit-variance Gaussian vector with covariance ``Sigma`` and
polynomially bounded functions ``f_i``,

    E prod_i f_i(z_i)  ~=  sum_{||w|| <= t} (prod_i fhat_i(d_i(w))) Sigma^w / w!,

summing over weighted graphs ``w`` on ``k`` nodes with total weight at
most ``t``; ``fhat_i(j) = E f_i(Z) H_j(Z)`` are Hermite coefficients,
``d_i`` node degrees, ``Sigma^w`` and ``w!`` entrywise powers and
factorials over the edges.  The truncation error is
``O(max_{i != j} |Sigma_ij|^{t+1})``.
"""

from __future__ import annotations

import math
from typing import Callable, Iterator, Sequence

import numpy as np

from ..errors import InvalidInputError, SizeLimitError
from ..quadrature import QuadratureRule, default_rule, hermite_coeff
from ..rng import substream

MAX_NODES = 3
MAX_TOTAL_WEIGHT = 6


def weighted_graphs(k: int, total_max: int) -> Iterator[np.ndarray]:
    """All symmetric zero-diagonal weight matrices with ``||w|| <= total_max``."""
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]

    def grow(idx: int, left: int, current: np.ndarray) -> Iterator[np.ndarray]:
        if idx == len(edges):
            yield current.copy()
            return
        i, j = edges[idx]
        for v in range(left + 1):
            current[i, j] = current[j, i] = v
            yield from grow(idx + 1, left - v, current)
        current[i, j] = current[j, i] = 0

    yield from grow(0, total_max, np.zeros((k, k), dtype=np.int64))


def _validate_sigma(sigma: np.ndarray, k: int) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != (k, k):
        raise InvalidInputError(f"covariance must be {k} x {k}")
    if np.abs(np.diag(sigma) - 1.0).max() > 1e-12:
        raise InvalidInputError("covariance must have unit diagonal")
    if np.abs(sigma - sigma.T).max() > 1e-12:
        raise InvalidInputError("covariance must be symmetric")
    if np.linalg.eigvalsh(sigma).min() <= 0.0:
        raise InvalidInputError("covariance must be positive definite")
    return sigma


def hermite_truncated_product(
    fs: Sequence[Callable[[np.ndarray], np.ndarray]],
    sigma: np.ndarray,
    t: int,
    quad: QuadratureRule | None = None,
) -> float:
    """Kernel expansion of ``E prod f_i(z_i)`` truncated at total weight ``t``."""
    k = len(fs)
    if k < 1 or k > MAX_NODES:
        raise SizeLimitError(f"expansion supports 1 <= k <= {MAX_NODES} functions")
    if t < 0 or t > MAX_TOTAL_WEIGHT:
        raise SizeLimitError(f"truncation order capped at {MAX_TOTAL_WEIGHT}")
    sigma = _validate_sigma(sigma, k)
    quad = quad or default_rule()
    coeffs = [[hermite_coeff(f, j, quad) for j in range(2 * t + 1)] for f in fs]
    total = 0.0
    for w in weighted_graphs(k, t):
        term = 1.0
        for i in range(k):
            term *= coeffs[i][int(w[i].sum())]
        if term == 0.0:
            continue
        for i in range(k):
            for j in range(i + 1, k):
                pw = int(w[i, j])
                if pw:
                    term *= sigma[i, j] ** pw / math.factorial(pw)
        total += term
    return total


def mc_gaussian_product(
    fs: Sequence[Callable[[np.ndarray], np.ndarray]],
    sigma: np.ndarray,
    samples: int,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo oracle for ``E prod f_i(z_i)``: (mean, stderr)."""
    k = len(fs)
    sigma = _validate_sigma(sigma, k)
    if samples < 2:
        raise InvalidInputError("need at least 2 samples")
    chol = np.linalg.cholesky(sigma)
    rng = substream(seed, "mc-gaussian")
    z = rng.standard_normal((samples, k)) @ chol.T
    prod = np.ones(samples)
    for i, f in enumerate(fs):
        prod *= np.asarray(f(z[:, i]), dtype=np.float64)
    mean = float(prod.mean())
    stderr = float(prod.std(ddof=1) / math.sqrt(samples))
    return mean, stderr
