"""Reproducible universality experiments.

One experiment runs the iteration for several trials per ensemble,
records the normalized observables of every iterate next to the
deterministic prediction, and summarizes per-(ensemble, t) means with
standard errors, prediction gaps and the cross-ensemble comparison.

Seeds derive from the master seed by role, so identical configs produce
byte-identical outputs regardless of trial scheduling.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ConfigError
from .lamp import EtaFunction, TrimConfig, run_lamp, solve_mu
from .quadrature import QuadratureRule
from .rng import derive_seed
from .sensing import EnsembleKind, sample_sensor
from .signals import SE_NORMALIZATION, load_signal_gaussian, load_signal_image
from .state_evolution import se_predict_observables, se_run

OBSERVABLE_NAMES = ("zz", "znorm", "xx", "xnorm")
CSV_HEADER = "ensemble,trial,t,zz,znorm,xx,xnorm,cos2,se_alpha,se_sigma2"


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one universality run."""

    m: int
    kappa: float | None = None
    n: int | None = None
    ensembles: tuple[str, ...] = ("hadamard", "haar")
    trials: int = 10
    iterations: int = 10
    alpha0: float = 0.5
    sigma0: float = 1.0
    eta: str = "spectral"  # "spectral" or "custom:<table.json>"
    centering: str = "gaussian_expectation"
    signal: str = "gaussian"  # "gaussian" or "image:<path.pgm>"
    normalization: str = SE_NORMALIZATION
    master_seed: int = 0
    quad_order: int = 200
    threads: int = 1

    def __post_init__(self):
        if self.m < 2:
            raise ConfigError(f"m must be >= 2, got {self.m}")
        if self.n is None and self.kappa is None:
            raise ConfigError("one of n or kappa is required")
        if self.n is None:
            # nearest realizable signal dimension; the exact ratio n/m is
            # what every downstream computation uses
            self.n = int(round(self.kappa * self.m))
        if not 0 < self.n < self.m:
            raise ConfigError(f"need 0 < n < m, got n={self.n}, m={self.m}")
        self.kappa = self.n / self.m
        self.ensembles = tuple(EnsembleKind(e).value for e in self.ensembles)
        if not self.ensembles:
            raise ConfigError("at least one ensemble is required")
        if "hadamard" in self.ensembles and (self.m & (self.m - 1)) != 0:
            raise ConfigError(f"hadamard ensemble needs m = 2**l, got m={self.m}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.sigma0 < 0:
            raise ConfigError("sigma0 must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "ensembles" in raw:
            raw = dict(raw, ensembles=tuple(raw["ensembles"]))
        return cls(**raw)

    def echo(self) -> dict:
        out = asdict(self)
        out["ensembles"] = list(self.ensembles)
        return out


def build_eta(config: ExperimentConfig, quad: QuadratureRule) -> tuple[EtaFunction, float | None]:
    """Construct the denoiser; calibrate mu for the spectral mode."""
    if config.eta == "spectral":
        trim = TrimConfig(kind="optimal")
        mu = solve_mu(config.kappa, trim, quad)
        return EtaFunction.spectral(trim, centering=config.centering), mu
    if config.eta.startswith("custom:"):
        path = config.eta.split(":", 1)[1]
        with open(path, "r", encoding="utf-8") as fh:
            table = json.load(fh)
        if set(table) != {"y", "eta"}:
            raise ConfigError("eta table must contain exactly the keys 'y' and 'eta'")
        return (
            EtaFunction.from_table(
                np.asarray(table["y"], dtype=np.float64),
                np.asarray(table["eta"], dtype=np.float64),
                centering=config.centering,
            ),
            None,
        )
    raise ConfigError(f"unknown eta spec {config.eta!r}")


@dataclass(frozen=True)
class RunRecord:
    """One CSV row: observables of one iterate of one trial."""

    ensemble: str
    trial: int
    t: int
    zz: float
    znorm: float
    xx: float
    xnorm: float
    cos2: float
    se_alpha: float
    se_sigma2: float


@dataclass
class UniversalityResult:
    config: dict
    mu: float | None
    records: list[RunRecord]
    summary: dict


def _signal_for(config: ExperimentConfig, ensemble: str, trial: int, shared: np.ndarray | None):
    if shared is not None:
        return shared
    seed = derive_seed(config.master_seed, "signal", ensemble, trial)
    return load_signal_gaussian(config.n, config.kappa, seed)


def run_universality(
    config: ExperimentConfig,
    record_sink: Callable[[list[RunRecord]], None] | None = None,
) -> UniversalityResult:
    """Run all ensembles and trials; aggregate against the prediction.

    ``record_sink`` receives each trial's records as soon as the trial
    finishes (in deterministic order), so partial results survive a
    failure in a later trial.
    """
    quad = QuadratureRule.gauss_hermite(config.quad_order)
    eta, mu = build_eta(config, quad)
    se_states = se_run(config.alpha0, config.sigma0, config.kappa, eta, config.iterations, quad)
    se_pred = [se_predict_observables(s, config.kappa) for s in se_states]

    shared_signal = None
    if config.signal.startswith("image:"):
        shared_signal = load_signal_image(
            config.signal.split(":", 1)[1], config.n, config.kappa, config.normalization
        )
    elif config.signal != "gaussian":
        raise ConfigError(f"unknown signal source {config.signal!r}")

    def one_trial(ensemble: str, trial: int) -> list[RunRecord]:
        sensor = sample_sensor(
            ensemble,
            config.m,
            config.n,
            derive_seed(config.master_seed, "sensor", ensemble, trial),
            haar_size_limit=max(config.m, 1 << 13),
        )
        x = _signal_for(config, ensemble, trial, shared_signal)
        traj = run_lamp(
            sensor,
            x,
            eta,
            config.iterations,
            config.alpha0,
            config.sigma0,
            derive_seed(config.master_seed, "lamp", ensemble, trial),
            quad,
        )
        return [
            RunRecord(
                ensemble=ensemble,
                trial=trial,
                t=t,
                zz=o.zz,
                znorm=o.znorm,
                xx=o.xx,
                xnorm=o.xnorm,
                cos2=o.cos2,
                se_alpha=se_states[t].alpha,
                se_sigma2=se_states[t].sigma2,
            )
            for t, o in enumerate(traj.observables)
        ]

    jobs = [(ens, trial) for ens in config.ensembles for trial in range(config.trials)]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            per_trial = list(pool.map(lambda j: one_trial(*j), jobs))
    else:
        per_trial = [one_trial(*j) for j in jobs]

    records: list[RunRecord] = []
    for rows in per_trial:
        records.extend(rows)
        if record_sink is not None:
            record_sink(rows)

    summary = _summarize(config, records, se_states, se_pred)
    return UniversalityResult(config=config.echo(), mu=mu, records=records, summary=summary)


def _summarize(config, records, se_states, se_pred) -> dict:
    by_key: dict[tuple[str, int], list[RunRecord]] = {}
    for r in records:
        by_key.setdefault((r.ensemble, r.t), []).append(r)

    per_ensemble: dict[str, list[dict]] = {e: [] for e in config.ensembles}
    for ens in config.ensembles:
        for t in range(config.iterations + 1):
            rows = sorted(by_key[(ens, t)], key=lambda r: r.trial)
            entry: dict = {"t": t}
            pred = se_pred[t]
            for name in OBSERVABLE_NAMES + ("cos2",):
                vals = np.array([getattr(r, name) for r in rows])
                mean = float(vals.mean())
                stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
                predicted = getattr(pred, name)
                gap = abs(mean - predicted)
                entry[f"{name}_mean"] = mean
                entry[f"{name}_stderr"] = stderr
                entry[f"{name}_se"] = predicted
                entry[f"{name}_gap_over_stderr"] = gap / stderr if stderr > 0 else None
            per_ensemble[ens].append(entry)

    universality = []
    if len(config.ensembles) == 2:
        e1, e2 = config.ensembles
        for t in range(config.iterations + 1):
            row1 = per_ensemble[e1][t]
            row2 = per_ensemble[e2][t]
            entry = {"t": t}
            for name in OBSERVABLE_NAMES:
                diff = abs(row1[f"{name}_mean"] - row2[f"{name}_mean"])
                pooled = math.hypot(row1[f"{name}_stderr"], row2[f"{name}_stderr"])
                entry[f"{name}_diff"] = diff
                entry[f"{name}_pooled_stderr"] = pooled
                entry[f"{name}_gap_units"] = diff / pooled if pooled > 0 else None
            universality.append(entry)

    return {
        "se": [
            {
                "t": s.t,
                "alpha": s.alpha,
                "sigma2": s.sigma2,
                **{name: getattr(p, name) for name in OBSERVABLE_NAMES + ("cos2",)},
            }
            for s, p in zip(se_states, se_pred)
        ],
        "per_ensemble": per_ensemble,
        "universality": universality,
    }


def emit_csv(records: list[RunRecord], path: str) -> None:
    """Write records with the fixed header, 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.ensemble},{r.trial},{r.t},"
                f"{r.zz:.17g},{r.znorm:.17g},{r.xx:.17g},{r.xnorm:.17g},"
                f"{r.cos2:.17g},{r.se_alpha:.17g},{r.se_sigma2:.17g}\n"
            )


def parse_csv(path: str) -> list[RunRecord]:
    """Inverse of ``emit_csv`` (round-trips bit-exactly)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            out.append(
                RunRecord(
                    ensemble=parts[0],
                    trial=int(parts[1]),
                    t=int(parts[2]),
                    zz=float(parts[3]),
                    znorm=float(parts[4]),
                    xx=float(parts[5]),
                    xnorm=float(parts[6]),
                    cos2=float(parts[7]),
                    se_alpha=float(parts[8]),
                    se_sigma2=float(parts[9]),
                )
            )
    return out


_SVG_COLORS = {"hadamard": "#1f77b4", "haar": "#d62728"}


def emit_svg(summary: dict, path: str) -> None:
    """Self-contained line chart: mean cos^2 vs t per ensemble, error bars,
    dashed prediction line.  No external assets."""
    width, height = 640, 440
    left, right, top, bottom = 60, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom
    tmax = max(1, len(summary["se"]) - 1)

    def sx(t: float) -> float:
        return left + pw * t / tmax

    def sy(v: float) -> float:
        return top + ph * (1.0 - min(max(v, 0.0), 1.0))

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(frac)
        parts.append(
            f'<text x="{left - 8:.1f}" y="{y + 4:.1f}" font-size="12" text-anchor="end">{frac:g}</text>'
        )
        parts.append(
            f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>'
        )
    step = max(1, tmax // 10)
    for t in range(0, tmax + 1, step):
        x = sx(t)
        parts.append(
            f'<text x="{x:.1f}" y="{top + ph + 18}" font-size="12" text-anchor="middle">{t}</text>'
        )
        parts.append(
            f'<line x1="{x:.1f}" y1="{top + ph}" x2="{x:.1f}" y2="{top + ph + 4}" stroke="black"/>'
        )
    parts.append(
        f'<text x="{left + pw / 2:.1f}" y="{height - 12}" font-size="13" text-anchor="middle">iteration t</text>'
    )
    parts.append(
        f'<text x="16" y="{top + ph / 2:.1f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">squared cosine similarity</text>'
    )

    se_pts = " ".join(f"{sx(row['t']):.2f},{sy(row['cos2']):.2f}" for row in summary["se"])
    parts.append(
        f'<polyline points="{se_pts}" fill="none" stroke="black" stroke-width="1.5" '
        'stroke-dasharray="6 4"/>'
    )
    legend_y = top + 10
    parts.append(
        f'<text x="{left + pw - 150}" y="{legend_y}" font-size="12">dashed: prediction</text>'
    )
    for i, (ens, rows) in enumerate(summary["per_ensemble"].items()):
        color = _SVG_COLORS.get(ens, "#2ca02c")
        pts = " ".join(f"{sx(r['t']):.2f},{sy(r['cos2_mean']):.2f}" for r in rows)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for r in rows:
            x = sx(r["t"])
            lo = sy(r["cos2_mean"] - r["cos2_stderr"])
            hi = sy(r["cos2_mean"] + r["cos2_stderr"])
            parts.append(
                f'<line x1="{x:.2f}" y1="{lo:.2f}" x2="{x:.2f}" y2="{hi:.2f}" '
                f'stroke="{color}" stroke-width="1"/>'
            )
        legend_y += 16
        parts.append(
            f'<text x="{left + pw - 150}" y="{legend_y}" font-size="12" fill="{color}">{ens}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
