"""Command-line interface.

Subcommands:

* ``run-lamp`` -- one trajectory, CSV output;
* ``se`` -- the deterministic recursion, printed as a table;
* ``universality`` -- multi-trial, multi-ensemble comparison with CSV,
  SVG chart and JSON summary;
* ``verify`` -- the numerical check suite with a JSON report.

Exit codes: 0 success, 1 failed verification checks, 2 configuration
errors, 3 numeric failures, 4 universality gap beyond the threshold in
``--strict`` mode.  Human diagnostics go to stderr; with ``--json`` the
stdout stream carries machine-readable output only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import (
    CalibrationError,
    ConfigError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidSignalError,
    LampLabError,
    NumericFailureError,
    SizeLimitError,
)
from .experiments import (
    ExperimentConfig,
    RunRecord,
    build_eta,
    emit_csv,
    emit_svg,
    run_universality,
)
from .quadrature import QuadratureRule
from .sensing import EnsembleKind, PsiOperator, dense_a, dense_psi, dump_dense_csv, sample_sensor
from .state_evolution import se_predict_observables, se_run
from .verify import run_verify

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_GAP = 4

_CONFIG_ERRORS = (
    ConfigError,
    InvalidInputError,
    InvalidDimensionError,
    InvalidSignalError,
    SizeLimitError,
    CalibrationError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lamplab",
        description="Linearized message passing laboratory for subsampled orthogonal sensing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its keys")
    common.add_argument("--m", type=int, help="ambient dimension")
    common.add_argument("--n", type=int, help="signal dimension")
    common.add_argument("--kappa", type=float, help="sampling ratio n/m")
    common.add_argument("--iters", type=int, help="iterations (default 10)")
    common.add_argument("--alpha0", type=float, help="initial overlap (default 0.5)")
    common.add_argument("--sigma0", type=float, help="initial noise level (default 1.0)")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--eta", help="denoiser: 'spectral' or 'custom:<table.json>'")
    common.add_argument(
        "--centering", choices=["gaussian", "empirical"], help="centering constant mode"
    )
    common.add_argument("--quad-order", type=int, help="quadrature order (default 200)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="parallel trials (wall-clock only, never results)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--json", action="store_true", help="machine-readable stdout")

    p_lamp = sub.add_parser("run-lamp", parents=[common], help="run one trajectory")
    p_lamp.add_argument("--ensemble", choices=["hadamard", "haar"], help="sensing ensemble")
    p_lamp.add_argument("--signal", help="'gaussian' or 'image:<path.pgm>'")
    p_lamp.add_argument("--normalization", choices=["se", "figure1"], help="image scaling")
    p_lamp.set_defaults(func=cmd_run_lamp)

    p_se = sub.add_parser("se", parents=[common], help="state recursion table")
    p_se.set_defaults(func=cmd_se)

    p_uni = sub.add_parser("universality", parents=[common], help="ensemble comparison")
    p_uni.add_argument("--ensemble", action="append", choices=["hadamard", "haar"],
                       help="repeatable; default both")
    p_uni.add_argument("--trials", type=int, help="trials per ensemble (default 10)")
    p_uni.add_argument("--signal", help="'gaussian' or 'image:<path.pgm>'")
    p_uni.add_argument("--normalization", choices=["se", "figure1"], help="image scaling")
    p_uni.add_argument("--strict", action="store_true",
                       help="exit 4 when any gap exceeds --gap-threshold")
    p_uni.add_argument("--gap-threshold", type=float, default=3.0,
                       help="gap threshold in pooled-stderr units (default 3)")
    p_uni.set_defaults(func=cmd_universality)

    p_ver = sub.add_parser("verify", parents=[common], help="numerical check suite")
    p_ver.add_argument("--only", help="run a single check group")
    p_ver.add_argument("--tolerance-scale", type=float, default=1.0,
                       help="multiply all tolerances (0 forces failures)")
    p_ver.add_argument("--dump-dense", type=int, metavar="M",
                       help="also dump dense A and Psi at size M as CSV")
    p_ver.set_defaults(func=cmd_verify)
    return parser


_FLAG_TO_KEY = {
    "m": "m",
    "n": "n",
    "kappa": "kappa",
    "iters": "iterations",
    "trials": "trials",
    "alpha0": "alpha0",
    "sigma0": "sigma0",
    "seed": "master_seed",
    "eta": "eta",
    "signal": "signal",
    "normalization": "normalization",
    "quad_order": "quad_order",
    "threads": "threads",
}

_CENTERING = {"gaussian": "gaussian_expectation", "empirical": "empirical_mean"}


def _merged_config(args: argparse.Namespace, ensembles: tuple[str, ...]) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config!r}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    for flag, key in _FLAG_TO_KEY.items():
        val = getattr(args, flag, None)
        if val is not None:
            raw[key] = val
    centering = getattr(args, "centering", None)
    if centering is not None:
        raw["centering"] = _CENTERING[centering]
    if ensembles:
        raw["ensembles"] = ensembles
    if "m" not in raw or raw["m"] is None:
        raise ConfigError("missing required flag --m (or config key 'm')")
    return ExperimentConfig.from_dict(raw)


def _write_json(obj: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _emit_partial(records: list[RunRecord], path: str) -> None:
    if records:
        emit_csv(records, path)


def cmd_run_lamp(args: argparse.Namespace) -> int:
    ensemble = getattr(args, "ensemble", None) or "hadamard"
    config = _merged_config(args, (ensemble,))
    config.trials = 1
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "lamp.csv")
    collected: list[RunRecord] = []
    try:
        result = run_universality(config, record_sink=collected.extend)
    except LampLabError:
        _emit_partial(collected, csv_path)
        raise
    emit_csv(result.records, csv_path)
    _write_json({"config": result.config, "mu": result.mu}, os.path.join(args.out, "lamp.config.json"))
    if args.json:
        print(json.dumps({"csv": csv_path, "rows": len(result.records), "mu": result.mu}))
    else:
        print(f"wrote {csv_path} ({len(result.records)} rows)", file=sys.stderr)
    return EXIT_OK


def cmd_se(args: argparse.Namespace) -> int:
    # the recursion is dimension-free: kappa alone is enough, but a full
    # config (m with n or kappa) also works
    if args.kappa is not None and args.m is None:
        kappa = args.kappa
        if not 0.0 < kappa < 1.0:
            raise ConfigError(f"kappa must lie in (0, 1), got {kappa}")
        config = ExperimentConfig(
            m=1 << 12,
            n=round(kappa * (1 << 12)) or 1,
            iterations=args.iters if args.iters is not None else 10,
            alpha0=args.alpha0 if args.alpha0 is not None else 0.5,
            sigma0=args.sigma0 if args.sigma0 is not None else 1.0,
            eta=args.eta or "spectral",
            centering=_CENTERING[args.centering] if args.centering else "gaussian_expectation",
            quad_order=args.quad_order or 200,
        )
        config.kappa = kappa
    else:
        config = _merged_config(args, ())
        kappa = config.kappa
    quad = QuadratureRule.gauss_hermite(config.quad_order)
    eta, mu = build_eta(config, quad)
    states = se_run(config.alpha0, config.sigma0, kappa, eta, config.iterations, quad)
    preds = [se_predict_observables(s, kappa) for s in states]
    rows = [
        {"t": s.t, "alpha": s.alpha, "sigma2": s.sigma2, "cos2": p.cos2}
        for s, p in zip(states, preds)
    ]
    if args.json:
        print(json.dumps({"kappa": kappa, "mu": mu, "rows": rows}))
    else:
        print(f"{'t':>4} {'alpha':>24} {'sigma2':>24} {'cos2':>24}")
        for r in rows:
            print(f"{r['t']:>4} {r['alpha']:>24.17g} {r['sigma2']:>24.17g} {r['cos2']:>24.17g}")
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "se.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,alpha,sigma2,cos2\n")
        for r in rows:
            fh.write(f"{r['t']},{r['alpha']:.17g},{r['sigma2']:.17g},{r['cos2']:.17g}\n")
    return EXIT_OK


def cmd_universality(args: argparse.Namespace) -> int:
    ensembles = tuple(args.ensemble) if args.ensemble else ("hadamard", "haar")
    config = _merged_config(args, ensembles)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "universality.csv")
    collected: list[RunRecord] = []
    try:
        result = run_universality(config, record_sink=collected.extend)
    except LampLabError:
        _emit_partial(collected, csv_path)
        raise
    emit_csv(result.records, csv_path)
    emit_svg(result.summary, os.path.join(args.out, "universality.svg"))
    summary = {"config": result.config, "mu": result.mu, **result.summary}
    _write_json(summary, os.path.join(args.out, "summary.json"))
    worst_gap = 0.0
    for row in result.summary["universality"]:
        for key, val in row.items():
            if key.endswith("_gap_units") and val is not None:
                worst_gap = max(worst_gap, val)
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"wrote {csv_path}, universality.svg, summary.json; "
              f"worst gap {worst_gap:.3g} pooled-stderr units", file=sys.stderr)
    if args.strict and worst_gap > args.gap_threshold:
        print(f"strict mode: gap {worst_gap:.3g} exceeds threshold {args.gap_threshold}",
              file=sys.stderr)
        return EXIT_GAP
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    report = run_verify(
        seed=seed,
        only=args.only,
        tolerance_scale=args.tolerance_scale,
        threads=args.threads,
    )
    os.makedirs(args.out, exist_ok=True)
    _write_json(report, os.path.join(args.out, "verify.json"))
    if args.dump_dense:
        m = args.dump_dense
        for kind in (EnsembleKind.HADAMARD, EnsembleKind.HAAR):
            sensor = sample_sensor(kind, m, max(1, m // 2), seed)
            dump_dense_csv(dense_a(sensor), os.path.join(args.out, f"dense_a_{kind.value}.csv"))
            dump_dense_csv(
                dense_psi(PsiOperator(sensor)),
                os.path.join(args.out, f"dense_psi_{kind.value}.csv"),
            )
    for check in report["checks"]:
        print(f"[{check['status'].upper():4}] {check['name']}: observed {check['observed']:.6g} "
              f"expected {check['expected']:.6g} tol {check['tolerance']:.6g}", file=sys.stderr)
    if args.json:
        print(json.dumps(report))
    return EXIT_OK if report["all_pass"] else EXIT_CHECK_FAILED


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
