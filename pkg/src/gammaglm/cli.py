"""Command-line entry point: simulate, fit, cv, evaluate.

Every run resolves all of its settings, performs the work, and writes a
manifest JSON next to its primary output so the run can be replayed
exactly.  Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    CsvSchema,
    SimSpec,
    load_csv,
    predict_poisson_counts,
    rtmspe,
    save_csv,
    simulate_linear,
)
from .errors import (
    CsvParseError,
    InvalidScheduleError,
    InvalidTrimError,
    NumericalOverflowError,
    SeriesTruncationError,
)
from .families import Family, Theta
from .initialize import rocv_select
from .objective import emp_risk
from .pipeline import OPTIMIZERS, fit

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_NUMERIC_ERRORS = (NumericalOverflowError, SeriesTruncationError,
                   InvalidScheduleError, InvalidTrimError)
_DATA_ERRORS = (CsvParseError, FileNotFoundError, IsADirectoryError,
                PermissionError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # raise instead of exiting with argparse's code 2
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gammaglm",
                     description="Robust sparse GLM fitting via gamma-divergence.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a contaminated linear dataset")
    sim.add_argument("--family", choices=["linear"], default="linear")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--eps", type=float, default=0.2)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)

    fit_p = sub.add_parser("fit", help="fit a robust sparse GLM")
    fit_p.add_argument("--family", choices=[f.value for f in Family], required=True)
    fit_p.add_argument("--gamma", type=float, default=0.1)
    fit_p.add_argument("--lambda", dest="lam", type=float, default=1e-2)
    fit_p.add_argument("--optimizer", choices=list(OPTIMIZERS), default="2rspg")
    fit_p.add_argument("--data", required=True)
    fit_p.add_argument("--response", default="y")
    fit_p.add_argument("--offset", default=None,
                       help="offset column name (poisson)")
    fit_p.add_argument("--log-offset", action="store_true",
                       help="log-transform the offset column on load")
    fit_p.add_argument("--seed", type=int, default=0)
    fit_p.add_argument("--n-total", type=int, default=None)
    fit_p.add_argument("--n-cand", type=int, default=5)
    fit_p.add_argument("--n-post", type=int, default=None)
    fit_p.add_argument("--d-tilde", type=float, default=1.0)
    fit_p.add_argument("--sgd-batch", type=int, default=10)
    fit_p.add_argument("--pilot-size", type=int, default=200)
    fit_p.add_argument("--noise-scale", type=float, default=0.1)
    fit_p.add_argument("--out", required=True)

    cv = sub.add_parser("cv", help="select lambda by robust cross-validation")
    cv.add_argument("--family", choices=[f.value for f in Family], required=True)
    cv.add_argument("--data", required=True)
    cv.add_argument("--response", default="y")
    cv.add_argument("--offset", default=None)
    cv.add_argument("--log-offset", action="store_true")
    cv.add_argument("--grid", required=True,
                    help="comma-separated lambda values, e.g. 1e-1,1e-2,1e-3")
    cv.add_argument("--gamma", type=float, default=0.1)
    cv.add_argument("--gamma0", type=float, default=1.0)
    cv.add_argument("--folds", type=int, default=5)
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("--out", default=None)

    ev = sub.add_parser("evaluate", help="score a fitted model on a dataset")
    ev.add_argument("--model", required=True)
    ev.add_argument("--test", required=True)
    ev.add_argument("--response", default="y")
    ev.add_argument("--offset", default=None)
    ev.add_argument("--log-offset", action="store_true")
    ev.add_argument("--metric", choices=["emprisk", "exprisk", "rtmspe"],
                    required=True)
    ev.add_argument("--trim", type=float, default=0.05)
    return parser


def _schema(args, family: Family) -> CsvSchema:
    return CsvSchema(response=args.response, family=family,
                     offset=args.offset, log_offset=args.log_offset)


def _write_manifest(path: Path, command: str, settings: dict,
                    elapsed: float) -> None:
    manifest = {
        "tool": "gammaglm",
        "version": __version__,
        "command": command,
        "settings": settings,
        "elapsed_seconds": elapsed,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def write_model(path: Path, family: Family, gamma: float, lam: float,
                seed: int, report) -> None:
    theta = report.theta_hat
    lines = [
        f"family {family.value}",
        f"gamma {theta_repr(gamma)}",
        f"lambda {theta_repr(lam)}",
        f"seed {seed}",
        f"beta0 {theta_repr(theta.beta0)}",
        "beta " + ",".join(theta_repr(b) for b in theta.beta),
    ]
    if theta.sigma2 is not None:
        lines.append(f"sigma2 {theta_repr(theta.sigma2)}")
    lines.append(f"stop_index {report.stop_index}")
    lines.append(f"pg_norm {theta_repr(report.pg_norm)}")
    lines.append(f"emp_risk {theta_repr(report.emp_risk)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def theta_repr(value: float) -> str:
    return repr(float(value))


def read_model(path: Path) -> tuple[Family, float, float, Theta]:
    fields: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            key, _, value = line.partition(" ")
            fields[key] = value
    family = Family(fields["family"])
    gamma = float(fields["gamma"])
    lam = float(fields["lambda"])
    beta = np.array([float(v) for v in fields["beta"].split(",")])
    sigma2 = float(fields["sigma2"]) if "sigma2" in fields else None
    theta = Theta(float(fields["beta0"]), beta, sigma2)
    return family, gamma, lam, theta


def _cmd_simulate(args) -> int:
    start = time.perf_counter()
    spec = SimSpec(N=args.n, p=args.p, epsilon=args.eps, seed=args.seed)
    data, truth = simulate_linear(spec)
    out = Path(args.out)
    save_csv(data, out)
    out.with_suffix(out.suffix + ".truth.json").write_text(
        truth.to_json() + "\n", encoding="utf-8")
    _write_manifest(_manifest_path(out), "simulate", {
        "family": "linear", "n": args.n, "p": args.p, "eps": args.eps,
        "seed": args.seed, "out": str(out),
    }, time.perf_counter() - start)
    print(f"wrote {out} ({args.n} rows, p={args.p}) and truth sidecar")
    return EXIT_OK


def _cmd_fit(args) -> int:
    start = time.perf_counter()
    family = Family(args.family)
    data = load_csv(args.data, _schema(args, family))
    report = fit(family, data, args.gamma, args.lam, optimizer=args.optimizer,
                 seed=args.seed, n_total=args.n_total, n_cand=args.n_cand,
                 n_post=args.n_post, d_tilde=args.d_tilde,
                 sgd_batch=args.sgd_batch, pilot_size=args.pilot_size,
                 noise_scale=args.noise_scale)
    out = Path(args.out)
    write_model(out, family, args.gamma, args.lam, args.seed, report)
    _write_manifest(_manifest_path(out), "fit", {
        "family": family.value, "gamma": args.gamma, "lambda": args.lam,
        "optimizer": args.optimizer, "data": str(args.data),
        "response": args.response, "offset": args.offset,
        "log_offset": args.log_offset, "seed": args.seed,
        "n_total": args.n_total, "n_cand": args.n_cand, "n_post": args.n_post,
        "d_tilde": args.d_tilde, "sgd_batch": args.sgd_batch,
        "pilot_size": args.pilot_size, "noise_scale": args.noise_scale,
        "out": str(out),
    }, time.perf_counter() - start)
    print(f"fit {family.value} optimizer={args.optimizer} "
          f"emp_risk={report.emp_risk:.6g} stop_index={report.stop_index} "
          f"pg_norm={report.pg_norm:.6g}")
    return EXIT_OK


def _cmd_cv(args) -> int:
    start = time.perf_counter()
    family = Family(args.family)
    data = load_csv(args.data, _schema(args, family))
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip()]
    except ValueError as exc:
        raise _UsageError(f"bad --grid value: {exc}")
    lam_star, scores = rocv_select(family, data, grid, args.gamma,
                                   gamma0=args.gamma0, folds=args.folds,
                                   seed=args.seed)
    print(f"selected lambda {lam_star!r}")
    print("lambda,score")
    for lam, score in zip(grid, scores):
        print(f"{lam!r},{score!r}")
    if args.out:
        out = Path(args.out)
        payload = {"selected_lambda": lam_star,
                   "scores": dict(zip(map(repr, grid), scores))}
        out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        _write_manifest(_manifest_path(out), "cv", {
            "family": family.value, "data": str(args.data), "grid": grid,
            "gamma": args.gamma, "gamma0": args.gamma0, "folds": args.folds,
            "seed": args.seed, "out": str(out),
        }, time.perf_counter() - start)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    family, gamma, lam, theta = read_model(Path(args.model))
    data = load_csv(args.test, _schema(args, family))
    if args.metric in ("emprisk", "exprisk"):
        value = emp_risk(data, theta, gamma, lam).value
        print(f"{args.metric} {value!r}")
    else:
        if family is not Family.POISSON:
            raise _UsageError("rtmspe applies to poisson models only")
        preds = predict_poisson_counts(data, theta)
        value = rtmspe(preds, data.y, args.trim)
        print(f"rtmspe trim={args.trim} {value!r}")
    return EXIT_OK


def run(argv) -> int:
    """Parse and execute; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "cv":
            return _cmd_cv(args)
        return _cmd_evaluate(args)
    except _UsageError as exc:
        print(f"gammaglm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"gammaglm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERIC_ERRORS as exc:
        print(f"gammaglm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        print(f"gammaglm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
