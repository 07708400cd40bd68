"""Alternating products of the centered Gram operator and a measurement diagonal.

A word alternates polynomial factors ``p_i(Psi)`` (each ``p_i`` centered
under the shifted Bernoulli law, so that ``p_i(Psi) = c_i Psi``) with
entrywise factors ``q_i(Z)`` (even, bounded Lipschitz, Gaussian-centered),
in one of four layouts distinguished by which factor kind opens and
closes the word.  Two properties are checked numerically at desk scale:

* the normalized trace ``Tr A(Psi, Z) / m`` vanishes as ``m`` grows;
* the normalized quadratic form ``z^T A(Psi, Z) z / m`` converges, for a
  word opening and closing with ``Psi`` factors, to
  ``(1-kappa)^{#p} * prod_i qhat_i(2) * prod_i c_i``,
  identically for both ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..errors import InvalidInputError
from ..quadrature import QuadratureRule, default_rule, hermite_coeff
from ..rng import derive_seed, substream
from ..sensing import (
    DENSE_CAP,
    EnsembleKind,
    PsiOperator,
    SubsampledSensor,
    apply_A,
    apply_Psi,
    apply_Psi_mat,
    dense_psi,
    sample_sensor,
)
from .moments import _exact_n, bernoulli_centered_mean, collapse_polynomial, matrix_polynomial


@dataclass(frozen=True)
class PolySlot:
    """Polynomial factor with exact Bernoulli centering."""

    coeffs: tuple[Fraction, ...]
    kappa: Fraction

    def __post_init__(self):
        coeffs = tuple(Fraction(c) for c in self.coeffs)
        kappa = Fraction(self.kappa)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "kappa", kappa)
        mean = bernoulli_centered_mean(coeffs, kappa)
        if mean != 0:
            raise InvalidInputError(f"polynomial slot not centered: mean {mean}")

    @property
    def collapse_constant(self) -> float:
        return collapse_polynomial(self.coeffs, self.kappa)

    @property
    def float_coeffs(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.coeffs)


def identity_slot(kappa: Fraction | float) -> PolySlot:
    """The plain factor ``p(psi) = psi``."""
    return PolySlot(coeffs=(Fraction(0), Fraction(1)), kappa=Fraction(kappa))


@dataclass(frozen=True)
class FnSlot:
    """Even, Gaussian-centered entrywise factor."""

    fn: Callable[[np.ndarray], np.ndarray]
    name: str

    def validate(self, quad: QuadratureRule) -> None:
        z = quad.nodes
        vals = np.asarray(self.fn(z), dtype=np.float64)
        if np.abs(vals - np.asarray(self.fn(-z))).max() > 1e-10:
            raise InvalidInputError(f"factor {self.name!r} is not even")
        if abs(float(quad.weights @ vals)) > 1e-10:
            raise InvalidInputError(f"factor {self.name!r} is not Gaussian-centered")


def clipped_quadratic(clip_at: float = 25.0, quad: QuadratureRule | None = None) -> FnSlot:
    """``q(z) = min(z^2, clip_at) - E min(Z^2, clip_at)``: bounded, Lipschitz, even."""
    quad = quad or default_rule()
    raw = lambda z: np.minimum(np.square(z), clip_at)
    center = float(quad.weights @ raw(quad.nodes))
    return FnSlot(fn=lambda z: raw(z) - center, name=f"clipped-quadratic({clip_at})")


_LAYOUTS = {
    # type id -> (opens with p, closes with p)
    1: (True, True),
    2: (True, False),
    3: (False, False),
    4: (False, True),
}


@dataclass(frozen=True)
class AlternatingProductSpec:
    type_id: int
    ps: tuple[PolySlot, ...]
    qs: tuple[FnSlot, ...]
    kappa: Fraction

    def __post_init__(self):
        if self.type_id not in _LAYOUTS:
            raise InvalidInputError(f"type must be 1..4, got {self.type_id}")
        opens_p, closes_p = _LAYOUTS[self.type_id]
        np_, nq = len(self.ps), len(self.qs)
        if np_ < 1:
            raise InvalidInputError("need at least one polynomial factor")
        expected_q = np_ - 1 + (0 if opens_p else 1) + (0 if closes_p else 1)
        if nq != expected_q:
            raise InvalidInputError(
                f"type {self.type_id} with {np_} polynomial factors needs "
                f"{expected_q} entrywise factors, got {nq}"
            )
        for p in self.ps:
            if Fraction(p.kappa) != Fraction(self.kappa):
                raise InvalidInputError("polynomial slots must share the spec's kappa")

    @classmethod
    def create(
        cls,
        type_id: int,
        ps: Sequence[PolySlot],
        qs: Sequence[FnSlot],
        kappa: Fraction | float,
        quad: QuadratureRule | None = None,
    ) -> "AlternatingProductSpec":
        quad = quad or default_rule()
        for q in qs:
            q.validate(quad)
        return cls(type_id=type_id, ps=tuple(ps), qs=tuple(qs), kappa=Fraction(kappa))

    def tokens(self) -> list[tuple[str, PolySlot | FnSlot]]:
        """The word as an ordered factor list."""
        opens_p, _ = _LAYOUTS[self.type_id]
        ps = list(self.ps)
        qs = list(self.qs)
        out: list[tuple[str, PolySlot | FnSlot]] = []
        take_p = opens_p
        while ps or qs:
            if take_p and ps:
                out.append(("p", ps.pop(0)))
            elif not take_p and qs:
                out.append(("q", qs.pop(0)))
            take_p = not take_p
        return out


def apply_alternating(
    spec: AlternatingProductSpec,
    psi: PsiOperator,
    z: np.ndarray,
    v: np.ndarray,
) -> np.ndarray:
    """Apply the word to a vector or column block, right factor first."""
    apply_p = apply_Psi_mat if v.ndim == 2 else apply_Psi
    out = v
    for kind, slot in reversed(spec.tokens()):
        if kind == "q":
            q = slot.fn(z)
            out = out * (q[:, None] if out.ndim == 2 else q)
        else:
            coeffs = slot.float_coeffs
            acc = coeffs[-1] * out
            for c in reversed(coeffs[:-1]):
                acc = apply_p(psi, acc)
                if c:
                    acc = acc + c * out
            out = acc
    return out


def _dense_factors(spec: AlternatingProductSpec, psi_dense: np.ndarray, z: np.ndarray):
    """Fold the word into dense matrices, absorbing diagonals into neighbours."""
    mats: list[np.ndarray] = []
    pending: np.ndarray | None = None  # leading diagonal awaiting a dense factor
    for kind, slot in spec.tokens():
        if kind == "p":
            mat = matrix_polynomial(slot.float_coeffs, psi_dense)
            if pending is not None:
                mat = mat * pending[:, None]  # diag(q) @ M scales rows
                pending = None
            mats.append(mat)
        else:
            q = slot.fn(z)
            if mats:
                mats[-1] = mats[-1] * q[None, :]  # M @ diag(q) scales columns
            else:
                pending = q
    return mats


def alternating_trace(
    spec: AlternatingProductSpec,
    sensor: SubsampledSensor,
    z: np.ndarray,
    method: str = "auto",
    probe_block: int = 1024,
) -> float:
    """Normalized trace ``Tr A(Psi, Z) / m``.

    ``dense`` assembles ``Psi`` once and contracts the folded factors;
    ``probes`` pushes identity column blocks through the operator chain
    and accumulates the diagonal, never forming ``Psi``.
    """
    m = sensor.m
    if z.shape != (m,):
        raise InvalidInputError(f"expected z of shape ({m},), got {z.shape}")
    if method == "auto":
        method = "dense" if m <= DENSE_CAP else "probes"
    psi = PsiOperator(sensor)
    if method == "dense":
        mats = _dense_factors(spec, dense_psi(psi), z)
        if len(mats) == 1:
            return float(np.trace(mats[0])) / m
        left = mats[0]
        for mat in mats[1:-1]:
            left = left @ mat
        return float(np.einsum("ij,ji->", left, mats[-1])) / m
    if method != "probes":
        raise InvalidInputError(f"unknown method {method!r}")
    total = 0.0
    for start in range(0, m, probe_block):
        stop = min(start + probe_block, m)
        block = np.zeros((m, stop - start))
        block[np.arange(start, stop), np.arange(stop - start)] = 1.0
        out = apply_alternating(spec, psi, z, block)
        total += float(out[np.arange(start, stop), np.arange(stop - start)].sum())
    return total / m


def predicted_qf_limit(spec: AlternatingProductSpec, quad: QuadratureRule | None = None) -> float:
    """Limit of ``z^T A z / m`` for a word opening and closing with ``Psi``.

    ``(1-kappa)^{#p} * prod qhat_i(2) * prod collapse constants``, the
    empty entrywise product (single polynomial factor) counting as 1.
    """
    if spec.type_id != 1:
        raise InvalidInputError("the quadratic-form limit is stated for type-1 words")
    quad = quad or default_rule()
    kappa = float(spec.kappa)
    out = (1.0 - kappa) ** len(spec.ps)
    for q in spec.qs:
        out *= hermite_coeff(q.fn, 2, quad)
    for p in spec.ps:
        out *= p.collapse_constant
    return out


@dataclass(frozen=True)
class QFCheckResult:
    mean: float
    stderr: float
    predicted: float
    trials: int
    values: np.ndarray


def quadratic_form_limit_check(
    spec: AlternatingProductSpec,
    kind: EnsembleKind | str,
    m: int,
    trials: int,
    seed: int = 0,
    quad: QuadratureRule | None = None,
    haar_size_limit: int | None = None,
) -> QFCheckResult:
    """Monte-Carlo mean of ``z^T A z / m`` against the predicted limit.

    Each trial draws a fresh sensor and a fresh Gaussian signal
    ``x ~ N(0, I/kappa)``, sets ``z = A x`` and applies the word through
    the matrix-free operator pipeline.
    """
    kind = EnsembleKind(kind)
    if trials < 2:
        raise InvalidInputError("need at least 2 trials")
    quad = quad or default_rule()
    kappa = spec.kappa
    n = _exact_n(kappa, m)
    kw = {} if haar_size_limit is None else {"haar_size_limit": haar_size_limit}
    vals = np.empty(trials)
    for trial in range(trials):
        trial_seed = derive_seed(seed, "qf-check", kind.value, trial)
        sensor = sample_sensor(kind, m, n, trial_seed, **kw)
        x = substream(trial_seed, "signal").standard_normal(n) / math.sqrt(float(kappa))
        z = apply_A(sensor, x)
        out = apply_alternating(spec, PsiOperator(sensor), z, z)
        vals[trial] = float(z @ out) / m
    return QFCheckResult(
        mean=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(trials)),
        predicted=predicted_qf_limit(spec, quad),
        trials=trials,
        values=vals,
    )
