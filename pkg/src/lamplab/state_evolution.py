"""Deterministic scalar recursion predicting the iteration's dynamics.

With ``eta_bar(z) = eta(|z|) - E eta(|Z|)`` and the Gaussian moments

    m1 = E Z^2 eta_bar(|Z|),   m2 = E Z^2 eta_bar^2(|Z|),   m3 = E eta_bar^2(|Z|),

the pair ``(alpha_t, sigma2_t)`` evolves as

    alpha'  = (delta - 1) alpha m1,            delta = 1/kappa,
    sigma2' = (1/kappa - 1) (alpha^2 (m2 - m1^2) + sigma2 m3).

The predicted large-system observables are

    <zhat, z>/m -> alpha,        |zhat|^2/m -> alpha^2 + sigma2,
    <xhat, x>/m -> alpha,        |xhat|^2/m -> alpha^2 + (1-kappa) sigma2,

for every iterate t >= 1.  At t = 0 the noise part of the initialization
is an isotropic Gaussian rather than an iterate of the update, so the
projection energy differs: |xhat0|^2/m -> alpha0^2 + kappa * sigma2_0.
``se_predict_observables`` applies the t = 0 form automatically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, NumericFailureError
from .lamp import EtaFunction
from .quadrature import QuadratureRule, default_rule


@dataclass(frozen=True)
class SEState:
    alpha: float
    sigma2: float
    t: int

    def __post_init__(self):
        if self.sigma2 < 0.0:
            raise InvalidInputError(f"sigma2 must be >= 0, got {self.sigma2}")


@dataclass(frozen=True)
class EtaMoments:
    m1: float  # E Z^2 eta_bar(|Z|)
    m2: float  # E Z^2 eta_bar^2(|Z|)
    m3: float  # E eta_bar^2(|Z|)


def eta_moments(eta: EtaFunction, quad: QuadratureRule | None = None) -> EtaMoments:
    """The three Gaussian moments of the centered denoiser."""
    quad = quad or default_rule()
    z = quad.nodes
    w = quad.weights
    vals = eta.eta(np.abs(z)) - eta.gaussian_center(quad)
    z2 = z * z
    return EtaMoments(
        m1=float(w @ (z2 * vals)),
        m2=float(w @ (z2 * vals * vals)),
        m3=float(w @ (vals * vals)),
    )


def se_step(s: SEState, kappa: float, moments: EtaMoments) -> SEState:
    """One step of the recursion with ``delta = 1/kappa``."""
    if not 0.0 < kappa < 1.0:
        raise InvalidInputError(f"kappa must lie in (0, 1), got {kappa}")
    delta = 1.0 / kappa
    alpha = (delta - 1.0) * s.alpha * moments.m1
    spread = moments.m2 - moments.m1**2
    sigma2 = (delta - 1.0) * (s.alpha**2 * spread + s.sigma2 * moments.m3)
    if sigma2 < -1e-12:
        raise NumericFailureError(f"negative variance {sigma2} at t={s.t + 1}")
    return SEState(alpha=alpha, sigma2=max(sigma2, 0.0), t=s.t + 1)


@dataclass(frozen=True)
class PredictedObservables:
    zz: float
    znorm: float
    xx: float
    xnorm: float
    cos2: float


def se_predict_observables(s: SEState, kappa: float) -> PredictedObservables:
    """Large-system limits of the observables at state ``s``.

    Assumes the signal normalization ``|x|^2/m -> 1``.  The projection
    energy uses the ``t = 0`` form ``alpha^2 + kappa sigma2`` for the
    initialization and ``alpha^2 + (1-kappa) sigma2`` afterwards.
    """
    a2 = s.alpha**2
    xnorm = a2 + (kappa if s.t == 0 else 1.0 - kappa) * s.sigma2
    cos2 = a2 / xnorm if xnorm > 0.0 else 0.0
    return PredictedObservables(
        zz=s.alpha,
        znorm=a2 + s.sigma2,
        xx=s.alpha,
        xnorm=xnorm,
        cos2=cos2,
    )


def se_run(
    alpha0: float,
    sigma0: float,
    kappa: float,
    eta: EtaFunction | Sequence[EtaFunction],
    iterations: int,
    quad: QuadratureRule | None = None,
) -> list[SEState]:
    """Iterate the recursion from ``(alpha0, sigma0^2)``.

    ``sigma0`` is the noise standard deviation of the initialization,
    matching ``lamp_init``.  Moments are computed once when ``eta`` is
    time-invariant.
    """
    if iterations < 0:
        raise InvalidInputError("iterations must be >= 0")
    quad = quad or default_rule()
    states = [SEState(alpha=float(alpha0), sigma2=float(sigma0) ** 2, t=0)]
    if isinstance(eta, (list, tuple)):
        if len(eta) != iterations:
            raise InvalidInputError(f"need {iterations} denoisers, got {len(eta)}")
        per_step = [eta_moments(e, quad) for e in eta]
    else:
        per_step = [eta_moments(eta, quad)] * iterations
    for t in range(iterations):
        states.append(se_step(states[-1], kappa, per_step[t]))
    return states
