"""Linearized message passing on magnitude measurements.

The iteration estimates the signed measurements ``z = A x`` from
``y = |A x|``:

    zhat'  =  ((1/kappa) A A^T - I) (eta(Y) - c I) zhat,
    xhat'  =  A^T zhat',

where ``eta`` acts entrywise on the measurement magnitudes and ``c`` is
a centering constant.  With the spectral configuration

    eta(y) = (1/mu - T(y))^{-1},

and ``mu`` calibrated so that ``psi1(mu) = 1/(1-kappa)``, the fixed
points of the iteration realize the classical spectral estimator with
trimming function ``T``; the optimal trim is ``T(y) = 1 - 1/y^2``.

Centering modes:

* ``gaussian_expectation`` (default): ``c = E eta(|Z|)``, ``Z`` standard
  normal, by quadrature.  With this choice the update is exactly
  ``(1/kappa) Psi q(Z) zhat`` for the centered ``q(z) = eta(|z|) - c``.
* ``empirical_mean``: ``c = mean(eta(y))`` over the realized
  measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CalibrationError,
    InvalidDimensionError,
    InvalidInputError,
    NumericFailureError,
)
from .quadrature import QuadratureRule, default_rule
from .rng import substream
from .sensing import SubsampledSensor, apply_A, apply_AAt, apply_At

GAUSSIAN_CENTERING = "gaussian_expectation"
EMPIRICAL_CENTERING = "empirical_mean"


@dataclass
class TrimConfig:
    """Trimming function for the spectral denoiser.

    ``optimal`` is ``T(y) = 1 - 1/y^2``; ``tabulated`` interpolates a
    monotone piecewise-linear table.  ``mu`` is filled in by
    ``solve_mu``.
    """

    kind: str = "optimal"
    y_grid: np.ndarray | None = None
    t_values: np.ndarray | None = None
    mu: float | None = None

    def __post_init__(self):
        if self.kind not in ("optimal", "tabulated"):
            raise InvalidInputError(f"unknown trim kind {self.kind!r}")
        if self.kind == "tabulated":
            y = np.asarray(self.y_grid, dtype=np.float64)
            t = np.asarray(self.t_values, dtype=np.float64)
            if y.ndim != 1 or y.shape != t.shape or y.size < 2:
                raise InvalidInputError("tabulated trim needs matching 1-D grids")
            if not np.all(np.diff(y) > 0) or np.any(np.diff(t) < 0):
                raise InvalidInputError("tabulated trim must be on an increasing grid, monotone")
            if np.any(t >= 1.0):
                raise InvalidInputError("trim values must stay below 1")
            self.y_grid, self.t_values = y, t

    def trim(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "optimal":
            with np.errstate(divide="ignore"):
                return 1.0 - 1.0 / np.square(y)
        return np.interp(y, self.y_grid, self.t_values)

    def eta_values(self, y: np.ndarray, mu: float | None = None) -> np.ndarray:
        """Spectral denoiser ``(1/mu - T(y))^{-1}`` on magnitudes ``y >= 0``."""
        mu = self.mu if mu is None else mu
        if mu is None:
            raise CalibrationError("mu is not calibrated; run solve_mu first")
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "optimal":
            # algebraically identical, finite at y = 0
            y2 = np.square(y)
            return mu * y2 / ((1.0 - mu) * y2 + mu)
        denom = 1.0 / mu - self.trim(y)
        if np.any(denom <= 0.0) or not np.all(np.isfinite(denom)):
            raise CalibrationError(f"1/mu - T(y) must stay positive (mu={mu})")
        return 1.0 / denom


def psi1(mu: float, trim: TrimConfig, quad: QuadratureRule) -> float:
    """Calibration functional ``E[Z^2 G] / E[G]``, ``G = (1/mu - T(|Z|))^{-1}``."""
    if quad.order < 40:
        raise InvalidInputError("calibration needs quadrature order >= 40")
    if trim.kind == "optimal" and not 0.0 < mu < 1.0:
        raise CalibrationError(f"mu must lie in (0, 1), got {mu}")
    z = quad.nodes
    g = trim.eta_values(np.abs(z), mu=mu)
    if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
        raise CalibrationError(f"non-finite or non-positive integrand at mu={mu}")
    w = quad.weights
    return float((w @ (z * z * g)) / (w @ g))


def solve_mu(
    kappa: float,
    trim: TrimConfig,
    quad: QuadratureRule,
    bracket: tuple[float, float] = (1e-4, 1.0 - 1e-4),
    tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Bisect ``psi1(mu) = 1/(1-kappa)`` and store the root on the trim config."""
    if not 0.0 < kappa < 1.0:
        raise InvalidInputError(f"kappa must lie in (0, 1), got {kappa}")
    target = 1.0 / (1.0 - kappa)
    lo, hi = bracket
    flo = psi1(lo, trim, quad) - target
    fhi = psi1(hi, trim, quad) - target
    if flo == 0.0:
        trim.mu = lo
        return lo
    if fhi == 0.0:
        trim.mu = hi
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise CalibrationError(
            f"no sign change on bracket [{lo}, {hi}]: "
            f"psi1-target = ({flo:.3e}, {fhi:.3e})"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = psi1(mid, trim, quad) - target
        if abs(fmid) < tol:
            trim.mu = mid
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    raise CalibrationError(f"bisection did not reach residual {tol} in {max_iter} steps")


@dataclass
class EtaFunction:
    """Entrywise denoiser with a declared centering mode.

    ``spectral`` mode wraps a TrimConfig; ``custom`` mode wraps any
    bounded Lipschitz function of the magnitude, with declared bounds
    that are spot-checked on a grid rather than trusted.
    """

    mode: str
    trim: TrimConfig | None = None
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    sup_bound: float | None = None
    lipschitz_bound: float | None = None
    centering: str = GAUSSIAN_CENTERING
    _center_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mode not in ("spectral", "custom"):
            raise InvalidInputError(f"unknown eta mode {self.mode!r}")
        if self.centering not in (GAUSSIAN_CENTERING, EMPIRICAL_CENTERING):
            raise InvalidInputError(f"unknown centering {self.centering!r}")
        if self.mode == "spectral" and self.trim is None:
            raise InvalidInputError("spectral eta needs a TrimConfig")
        if self.mode == "custom":
            if self.fn is None or self.sup_bound is None or self.lipschitz_bound is None:
                raise InvalidInputError("custom eta needs fn, sup_bound and lipschitz_bound")
            grid = np.linspace(0.0, 20.0, 2001)
            vals = np.asarray(self.fn(grid), dtype=np.float64)
            if np.abs(vals).max() > self.sup_bound + 1e-9:
                raise InvalidInputError("custom eta exceeds its declared sup bound")
            slopes = np.abs(np.diff(vals) / np.diff(grid))
            if slopes.max() > self.lipschitz_bound + 1e-9:
                raise InvalidInputError("custom eta exceeds its declared Lipschitz bound")

    @classmethod
    def spectral(cls, trim: TrimConfig, centering: str = GAUSSIAN_CENTERING) -> "EtaFunction":
        return cls(mode="spectral", trim=trim, centering=centering)

    @classmethod
    def custom(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        sup_bound: float,
        lipschitz_bound: float,
        centering: str = GAUSSIAN_CENTERING,
    ) -> "EtaFunction":
        return cls(
            mode="custom",
            fn=fn,
            sup_bound=sup_bound,
            lipschitz_bound=lipschitz_bound,
            centering=centering,
        )

    @classmethod
    def from_table(
        cls,
        y_grid: np.ndarray,
        values: np.ndarray,
        centering: str = GAUSSIAN_CENTERING,
    ) -> "EtaFunction":
        """Piecewise-linear denoiser; bounds derived from the table."""
        y = np.asarray(y_grid, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        if y.ndim != 1 or y.shape != v.shape or y.size < 2 or not np.all(np.diff(y) > 0):
            raise InvalidInputError("eta table needs matching 1-D grids on increasing y")
        sup = float(np.abs(v).max())
        lip = float(np.abs(np.diff(v) / np.diff(y)).max())
        return cls.custom(
            fn=lambda t: np.interp(t, y, v),
            sup_bound=sup + 1e-12,
            lipschitz_bound=lip + 1e-12,
            centering=centering,
        )

    def eta(self, y: np.ndarray) -> np.ndarray:
        """Evaluate on magnitudes ``y >= 0``."""
        if self.mode == "spectral":
            return self.trim.eta_values(y)
        return np.asarray(self.fn(np.asarray(y, dtype=np.float64)), dtype=np.float64)

    def gaussian_center(self, quad: QuadratureRule) -> float:
        """``E eta(|Z|)`` by quadrature, cached per (order, mu)."""
        key = (quad.order, self.trim.mu if self.mode == "spectral" else None)
        if key not in self._center_cache:
            self._center_cache[key] = float(quad.weights @ self.eta(np.abs(quad.nodes)))
        return self._center_cache[key]

    def center_constant(self, y: np.ndarray, quad: QuadratureRule) -> float:
        if self.centering == GAUSSIAN_CENTERING:
            return self.gaussian_center(quad)
        return float(np.mean(self.eta(y)))

    def centered_fn(self, quad: QuadratureRule) -> Callable[[np.ndarray], np.ndarray]:
        """The centered even denoiser ``z -> eta(|z|) - E eta(|Z|)``."""
        c = self.gaussian_center(quad)
        return lambda z: self.eta(np.abs(z)) - c


@dataclass(frozen=True)
class LampState:
    t: int
    zhat: np.ndarray
    xhat: np.ndarray


@dataclass(frozen=True)
class Observables:
    """Normalized overlaps and energies of one iterate."""

    zz: float
    znorm: float
    xx: float
    xnorm: float
    cos2: float

    @classmethod
    def from_state(cls, state: LampState, z: np.ndarray, x: np.ndarray) -> "Observables":
        m = z.shape[0]
        zhat, xhat = state.zhat, state.xhat
        xx_dot = float(xhat @ x)
        xhat_sq = float(xhat @ xhat)
        x_sq = float(x @ x)
        denom = xhat_sq * x_sq
        cos2 = (xx_dot * xx_dot / denom) if denom > 0.0 else 0.0
        return cls(
            zz=float(zhat @ z) / m,
            znorm=float(zhat @ zhat) / m,
            xx=xx_dot / m,
            xnorm=xhat_sq / m,
            cos2=cos2,
        )


def lamp_init(
    sensor: SubsampledSensor,
    alpha0: float,
    sigma0: float,
    z: np.ndarray,
    seed: int,
) -> LampState:
    """``zhat0 = alpha0 z + sigma0 w`` with seeded Gaussian ``w``; ``xhat0 = A^T zhat0``."""
    if sigma0 < 0.0:
        raise InvalidInputError(f"sigma0 must be >= 0, got {sigma0}")
    if z.shape != (sensor.m,):
        raise InvalidDimensionError(f"expected z of shape ({sensor.m},), got {z.shape}")
    w = substream(seed, "lamp-init").standard_normal(sensor.m)
    zhat = alpha0 * z + sigma0 * w
    return LampState(t=0, zhat=zhat, xhat=apply_At(sensor, zhat))


def lamp_step(
    state: LampState,
    sensor: SubsampledSensor,
    eta: EtaFunction,
    y: np.ndarray,
    quad: QuadratureRule | None = None,
) -> LampState:
    """One update of the linearized iteration."""
    if y.shape != (sensor.m,):
        raise InvalidDimensionError(f"expected y of shape ({sensor.m},), got {y.shape}")
    quad = quad or default_rule()
    c = eta.center_constant(y, quad)
    d = eta.eta(y) - c
    u = d * state.zhat
    znew = apply_AAt(sensor, u) / sensor.kappa - u
    if not np.all(np.isfinite(znew)):
        raise NumericFailureError(f"non-finite iterate at t={state.t + 1}")
    return LampState(t=state.t + 1, zhat=znew, xhat=apply_At(sensor, znew))


@dataclass(frozen=True)
class LampTrajectory:
    """Observables of every iterate ``t = 0..T`` plus the final state."""

    observables: tuple[Observables, ...]
    final_state: LampState


def run_lamp(
    sensor: SubsampledSensor,
    x: np.ndarray,
    eta: EtaFunction | Sequence[EtaFunction],
    iterations: int,
    alpha0: float,
    sigma0: float,
    seed: int,
    quad: QuadratureRule | None = None,
) -> LampTrajectory:
    """Run ``iterations`` updates from the standard initialization.

    ``eta`` may be a single denoiser or one per step.
    """
    if iterations < 0:
        raise InvalidInputError("iterations must be >= 0")
    quad = quad or default_rule()
    etas = list(eta) if isinstance(eta, (list, tuple)) else [eta] * iterations
    if len(etas) != iterations:
        raise InvalidInputError(f"need {iterations} denoisers, got {len(etas)}")
    z = apply_A(sensor, x)
    y = np.abs(z)
    state = lamp_init(sensor, alpha0, sigma0, z, seed)
    obs = [Observables.from_state(state, z, x)]
    for t in range(iterations):
        state = lamp_step(state, sensor, etas[t], y, quad)
        obs.append(Observables.from_state(state, z, x))
    return LampTrajectory(observables=tuple(obs), final_state=state)
