"""Gauss-Hermite quadrature for standard-normal expectations.

All Gaussian expectations in the package go through one rule:

    E f(Z) = int f(z) exp(-z^2/2) / sqrt(2 pi) dz  ~=  sum_i w_i f(z_i),

with nodes and weights from the probabilists' Hermite-Gauss rule,
normalized so that ``sum(w) = 1``.  The default order 200 is deliberate
overkill for the smooth denoiser integrands used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import hermite_e

from .errors import InvalidInputError


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for the standard-normal measure."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        z = self.nodes
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInputError("quadrature weights do not sum to 1")
        if abs(float(w @ z**2) - 1.0) > 1e-12:
            raise InvalidInputError("quadrature rule fails E Z^2 = 1")

    @classmethod
    def gauss_hermite(cls, order: int = 200) -> "QuadratureRule":
        if order < 2:
            raise InvalidInputError(f"order must be >= 2, got {order}")
        nodes, weights = hermite_e.hermegauss(order)
        weights = weights / math.sqrt(2.0 * math.pi)
        return cls(order=order, nodes=nodes, weights=weights)

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """E f(Z) for a vectorized function of the nodes."""
        return float(self.weights @ np.asarray(f(self.nodes), dtype=np.float64))


DEFAULT_ORDER = 200


def default_rule() -> QuadratureRule:
    return QuadratureRule.gauss_hermite(DEFAULT_ORDER)


def hermite_values(j: int, z: np.ndarray) -> np.ndarray:
    """Probabilists' Hermite polynomial ``H_j`` on a grid.

    Recurrence ``H_{j+1}(z) = z H_j(z) - j H_{j-1}(z)`` with
    ``H_0 = 1, H_1 = z``; normalization ``E H_j(Z)^2 = j!``.
    """
    if j < 0:
        raise InvalidInputError("hermite degree must be >= 0")
    prev = np.ones_like(z)
    if j == 0:
        return prev
    cur = z.copy()
    for d in range(1, j):
        prev, cur = cur, z * cur - d * prev
    return cur


def hermite_coeff(f: Callable[[np.ndarray], np.ndarray], j: int, quad: QuadratureRule) -> float:
    """Hermite coefficient ``E f(Z) H_j(Z)`` by quadrature (``j <= 12``)."""
    if j > 12:
        raise InvalidInputError(f"hermite coefficients supported for j <= 12, got {j}")
    z = quad.nodes
    vals = np.asarray(f(z), dtype=np.float64)
    return float(quad.weights @ (vals * hermite_values(j, z)))


def gauss_pair_expect(
    f1: Callable[[np.ndarray], np.ndarray],
    f2: Callable[[np.ndarray], np.ndarray],
    rho: float,
    quad: QuadratureRule,
) -> float:
    """E f1(z1) f2(z2) for a correlated unit-variance Gaussian pair.

    Tensor-product rule on the Cholesky transform of ``[[1, rho], [rho, 1]]``;
    serves as an independent oracle for truncated kernel expansions.
    """
    if not -1.0 < rho < 1.0:
        raise InvalidInputError(f"need |rho| < 1, got {rho}")
    x = quad.nodes
    w = quad.weights
    z1 = x[:, None] * np.ones_like(x)[None, :]
    z2 = rho * x[:, None] + math.sqrt(1.0 - rho * rho) * x[None, :]
    vals = np.asarray(f1(z1)) * np.asarray(f2(z2))
    return float(w @ vals @ w)
