"""Numerical verification suite.

Each check compares a computed quantity against an independent target
(closed form, exhaustive enumeration, high-order quadrature or a
Monte-Carlo confidence band) and emits records
``{name, status, observed, expected, tolerance}``.  All randomness
derives from the master seed, so two runs with the same seed produce
byte-identical reports.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import InvalidInputError
from .fwht import fwht, hadamard_matrix
from .oracles.alternating import (
    AlternatingProductSpec,
    alternating_trace,
    clipped_quadratic,
    identity_slot,
    quadratic_form_limit_check,
)
from .oracles.mehler import hermite_truncated_product
from .oracles.moments import (
    centered_power,
    collapse_polynomial,
    matrix_polynomial,
    mc_matrix_moment,
)
from .oracles.partitions import Labelling, Partition, WeightedGraph, count_conflict_free
from .quadrature import QuadratureRule, gauss_pair_expect
from .rng import derive_seed, substream
from .sensing import (
    EnsembleKind,
    PsiOperator,
    SubsampledSensor,
    apply_A,
    dense_psi,
    hadamard_sign_column,
    sample_sensor,
    xor_index,
)
from .signals import load_signal_gaussian


@dataclass
class CheckResult:
    name: str
    status: str
    observed: float
    expected: float
    tolerance: float

    @classmethod
    def build(cls, name: str, observed: float, expected: float, tolerance: float) -> "CheckResult":
        ok = abs(observed - expected) <= tolerance
        return cls(
            name=name,
            status="pass" if ok else "fail",
            observed=float(observed),
            expected=float(expected),
            tolerance=float(tolerance),
        )

    @classmethod
    def upper_bound(cls, name: str, observed: float, bound: float) -> "CheckResult":
        ok = observed <= bound
        return cls(
            name=name,
            status="pass" if ok else "fail",
            observed=float(observed),
            expected=0.0,
            tolerance=float(bound),
        )


def _pmap(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _check_sensing(seed: int, scale: float, threads: int) -> list[CheckResult]:
    """Fast transform vs the entrywise closed form, plus involution."""
    worst_dense = 0.0
    worst_inv = 0.0
    m = 2
    while m <= 1024:
        fast = hadamard_matrix(m)
        exact = np.stack([hadamard_sign_column(j, m) for j in range(1, m + 1)], axis=1)
        exact /= math.sqrt(m)
        worst_dense = max(worst_dense, float(np.abs(fast - exact).max()))
        v = substream(seed, "sensing-involution", m).standard_normal(m)
        worst_inv = max(worst_inv, float(np.abs(fwht(fwht(v)) - v).max()))
        m *= 2
    return [
        CheckResult.upper_bound("sensing-transform-vs-closed-form", worst_dense, 1e-12 * scale),
        CheckResult.upper_bound("sensing-involution", worst_inv, 1e-12 * scale),
    ]


def _check_xor(seed: int, scale: float, threads: int) -> list[CheckResult]:
    """sqrt(m) (h_i * h_j) = h_{i xor j}, exhaustively at m = 64."""
    m = 64
    h = hadamard_matrix(m)
    worst = 0.0
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            lhs = math.sqrt(m) * h[:, i - 1] * h[:, j - 1]
            rhs = h[:, xor_index(i, j, m) - 1]
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return [CheckResult.upper_bound("xor-identity", worst, 1e-13 * scale)]


def _both_sensors(seed: int, m: int, n: int) -> list[SubsampledSensor]:
    return [
        sample_sensor(kind, m, n, derive_seed(seed, "check-sensor", kind.value))
        for kind in (EnsembleKind.HADAMARD, EnsembleKind.HAAR)
    ]


def _check_spectrum(seed: int, scale: float, threads: int) -> list[CheckResult]:
    """Dense Psi eigenvalues are {-kappa, 1-kappa} with multiplicities (m-n, n)."""
    m, n = 256, 102
    kappa = n / m
    out = []
    for sensor in _both_sensors(seed, m, n):
        eig = np.linalg.eigvalsh(dense_psi(PsiOperator(sensor)))
        target = np.concatenate([np.full(m - n, -kappa), np.full(n, 1.0 - kappa)])
        worst = float(np.abs(np.sort(eig) - target).max())
        out.append(CheckResult.upper_bound(f"spectrum-{sensor.kind.value}", worst, 1e-8 * scale))
    return out


def _check_collapse(seed: int, scale: float, threads: int) -> list[CheckResult]:
    """p(Psi) = (p(1-kappa) - p(-kappa)) Psi for three centered polynomials."""
    m, n = 256, 102
    kappa = Fraction(n, m)
    polys = [centered_power(i, kappa) for i in (1, 2, 3)]
    out = []
    for sensor in _both_sensors(seed, m, n):
        psi = dense_psi(PsiOperator(sensor))
        worst = 0.0
        for coeffs in polys:
            c = collapse_polynomial(coeffs, kappa)
            delta = matrix_polynomial([float(x) for x in coeffs], psi) - c * psi
            worst = max(worst, float(np.abs(delta).max()))
        out.append(CheckResult.upper_bound(f"collapse-{sensor.kind.value}", worst, 1e-11 * scale))
    return out


def _check_cf_counting(seed: int, scale: float, threads: int) -> list[CheckResult]:
    """Conflict deficiency bound and monotone conflict-free fraction."""
    pi = Partition.singletons(4)
    w = WeightedGraph.line(4)
    fractions = []
    out = []
    for m in (8, 16, 32):
        res = count_conflict_free(w, pi, m)
        deficiency = res.cset_count - res.cf_count
        out.append(
            CheckResult.upper_bound(f"cf-deficiency-bound-m{m}", float(deficiency), float(res.bound))
        )
        fractions.append(res.cf_count / m**pi.size)
    monotone = all(fractions[i] < fractions[i + 1] for i in range(len(fractions) - 1))
    out.append(
        CheckResult(
            name="cf-fraction-monotone",
            status="pass" if monotone else "fail",
            observed=fractions[-1],
            expected=1.0,
            tolerance=1.0,
        )
    )
    return out


def _check_mehler(seed: int, scale: float, threads: int) -> list[CheckResult]:
    """Truncated expansion vs 2-D quadrature for clipped quadratics."""
    quad = QuadratureRule.gauss_hermite(200)
    f = lambda z: np.minimum(np.square(z), 25.0) - 1.0
    rho = 0.1
    sigma = np.array([[1.0, rho], [rho, 1.0]])
    oracle = gauss_pair_expect(f, f, rho, quad)
    err4 = abs(hermite_truncated_product([f, f], sigma, 4, quad) - oracle)
    err1 = abs(hermite_truncated_product([f, f], sigma, 1, quad) - oracle)
    return [
        CheckResult.upper_bound("mehler-truncation-error", err4, 1e-3 * scale),
        CheckResult.upper_bound("mehler-improves-with-order", err4, err1 * scale),
    ]


def _check_clt(seed: int, scale: float, threads: int) -> list[CheckResult]:
    """Moments of sqrt(m) Psi against the limiting Gaussian moments."""
    kappa = 0.5
    target = kappa * (1.0 - kappa)
    pi2 = Partition.singletons(2)
    edge2 = WeightedGraph.single_edge(2, 1, 2, 2)
    out = []

    est = mc_matrix_moment(
        "hadamard", edge2, pi2, Labelling((1, 2)), 1 << 12, kappa, 5000,
        derive_seed(seed, "clt-hadamard"),
    )
    out.append(
        CheckResult.build("clt-hadamard-edge", est.mean, target, 3.0 * est.stderr * scale)
    )

    intra_pi = Partition((1, 1))
    intra_w = WeightedGraph.single_edge(2, 1, 2, 1)
    est0 = mc_matrix_moment(
        "hadamard", intra_w, intra_pi, Labelling((3, 3)), 1 << 12, kappa, 200,
        derive_seed(seed, "clt-hadamard-intra"),
    )
    worst = float(np.abs(est0.values).max())
    out.append(CheckResult.upper_bound("clt-hadamard-intra-block-exact-zero", worst, 0.0))

    esth = mc_matrix_moment(
        "haar", edge2, pi2, Labelling((1, 2)), 1 << 10, kappa, 2000,
        derive_seed(seed, "clt-haar"),
    )
    out.append(CheckResult.build("clt-haar-edge", esth.mean, target, 3.0 * esth.stderr * scale))
    return out


def _trace_statistic(seed_val: int, kind: str, m: int, kappa: float,
                     spec: AlternatingProductSpec) -> float:
    n = int(round(kappa * m))
    sensor = sample_sensor(kind, m, n, derive_seed(seed_val, "trace-sensor"))
    x = load_signal_gaussian(n, kappa, derive_seed(seed_val, "trace-signal"))
    z = apply_A(sensor, x)
    return abs(alternating_trace(spec, sensor, z))


def _check_trace(seed: int, scale: float, threads: int) -> list[CheckResult]:
    """Normalized trace of Psi q(Z) Psi q(Z) decays with m."""
    kappa = Fraction(1, 2)
    q = clipped_quadratic()
    spec = AlternatingProductSpec.create(
        2, [identity_slot(kappa), identity_slot(kappa)], [q, q], kappa
    )
    seeds = 50
    out = []
    for kind in ("hadamard", "haar"):
        medians = {}
        for m in (1 << 8, 1 << 12):
            vals = _pmap(
                lambda s: _trace_statistic(
                    derive_seed(seed, "trace", kind, m, s), kind, m, float(kappa), spec
                ),
                list(range(seeds)),
                threads,
            )
            medians[m] = float(np.median(vals))
        out.append(
            CheckResult.upper_bound(
                f"trace-decay-ratio-{kind}", medians[1 << 12], 0.5 * medians[1 << 8] * scale
            )
        )
        out.append(
            CheckResult.upper_bound(f"trace-absolute-{kind}", medians[1 << 12], 0.05 * scale)
        )
    return out


def _check_qf(seed: int, scale: float, threads: int) -> list[CheckResult]:
    """Quadratic-form limit, variance decay and ensemble agreement."""
    quad = QuadratureRule.gauss_hermite(200)
    q = clipped_quadratic(quad=quad)

    def spec_for(m: int) -> AlternatingProductSpec:
        # nearest realizable ratio to 0.4; the slots must carry the exact
        # sensor ratio for the polynomial centering to hold
        kappa = Fraction(round(0.4 * m), m)
        return AlternatingProductSpec.create(
            1, [identity_slot(kappa), identity_slot(kappa)], [q], kappa, quad
        )

    trials = 200
    results = {}
    out = []
    for kind in ("hadamard", "haar"):
        big = quadratic_form_limit_check(
            spec_for(1 << 12), kind, 1 << 12, trials, derive_seed(seed, "qf", kind, "big"), quad
        )
        small = quadratic_form_limit_check(
            spec_for(1 << 9), kind, 1 << 9, trials, derive_seed(seed, "qf", kind, "small"), quad
        )
        results[kind] = big
        tol = max(3.0 * big.stderr, 0.05 * abs(big.predicted)) * scale
        out.append(CheckResult.build(f"qf-limit-{kind}", big.mean, big.predicted, tol))
        var_big = float(big.values.var(ddof=1))
        var_small = float(small.values.var(ddof=1))
        out.append(
            CheckResult.upper_bound(f"qf-variance-decay-{kind}", var_big, 0.5 * var_small * scale)
        )
    pooled = math.hypot(results["hadamard"].stderr, results["haar"].stderr)
    diff = abs(results["hadamard"].mean - results["haar"].mean)
    out.append(CheckResult.upper_bound("qf-ensemble-agreement", diff, 2.0 * pooled * scale))
    return out


CHECK_GROUPS: dict[str, Callable[[int, float, int], list[CheckResult]]] = {
    "sensing": _check_sensing,
    "xor": _check_xor,
    "spectrum": _check_spectrum,
    "collapse": _check_collapse,
    "cf-counting": _check_cf_counting,
    "mehler": _check_mehler,
    "clt": _check_clt,
    "trace": _check_trace,
    "qf": _check_qf,
}


def run_verify(
    seed: int = 0,
    only: str | None = None,
    tolerance_scale: float = 1.0,
    threads: int = 1,
) -> dict:
    """Run the registered checks and return the JSON-ready report."""
    if only is not None and only not in CHECK_GROUPS:
        raise InvalidInputError(
            f"unknown check {only!r}; available: {', '.join(CHECK_GROUPS)}"
        )
    groups = [only] if only else list(CHECK_GROUPS)
    checks: list[CheckResult] = []
    for name in groups:
        checks.extend(CHECK_GROUPS[name](seed, tolerance_scale, threads))
    return {
        "master_seed": seed,
        "tolerance_scale": tolerance_scale,
        "only": only,
        "checks": [asdict(c) for c in checks],
        "all_pass": all(c.status == "pass" for c in checks),
    }
