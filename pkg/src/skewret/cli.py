"""Command-line pipeline: ingest, detrend, statistics, fits, tails and simulation.

Every command writes its documents into ``--out`` together with a
``manifest.json``. Output is byte-identical for identical arguments.

Exit codes: 0 success, 1 computation failure, 2 usage or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from . import __version__
from . import data, distributions as dist, fit, sde, tails
from .reference import REFERENCE_PARAMS
from .specfun import ConvergenceError, DomainError

MODEL_IDS = ("student", "half-student", "mjf1", "mjf2")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class ComputationError(Exception):
    pass


# --- small I/O helpers ------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: arrays to lists, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")


def write_table(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in row.items()})


def _versions() -> dict[str, str]:
    import numba
    import scipy

    return {"skewret": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def write_manifest(out: Path, args: argparse.Namespace, outputs: list[str]) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    write_json(
        out / "manifest.json",
        {"command": args.command, "config": config, "seed": args.seed, "versions": _versions(), "outputs": sorted(outputs)},
    )


# --- pipeline pieces ----------------------------------------------------------------


def load_increments(args: argparse.Namespace) -> np.ndarray:
    if args.input is None:
        raise UsageError("--input is required")
    path = Path(args.input)
    try:
        with path.open(newline="") as fh:
            if args.increments:
                values = np.loadtxt(fh, delimiter=",", ndmin=1, comments="#")
                if values.ndim != 1:
                    raise data.DataError("an increments file must have a single column")
                return data.daily_increments(values, args.tau)
            prices = data.load_prices(fh, args.date_col, args.price_col)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    try:
        return data.daily_increments(data.detrend(prices), args.tau)
    except data.DataError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _models(args: argparse.Namespace, default: Sequence[str]) -> list[str]:
    names = default if args.models is None else [m.strip() for m in args.models.split(",") if m.strip()]
    if not names:
        raise UsageError("--models selects no model")
    unknown = [m for m in names if m not in MODEL_IDS]
    if unknown:
        raise UsageError(f"unknown model(s) {unknown}; choose from {list(MODEL_IDS)}")
    return list(dict.fromkeys(names))


def run_stats(args, x: np.ndarray, out: Path) -> list[str]:
    try:
        st = data.empirical_stats(x)
    except data.DataError as exc:
        raise ComputationError(str(exc)) from None
    sd = math.sqrt(st.m2)
    doc = asdict(st) | {
        "n": int(len(x)),
        "tau": args.tau,
        "zeta1": (st.m1 - st.mode_smoothed) / sd if sd > 0 else math.nan,
        "zeta2": (st.m1 - st.median) / sd if sd > 0 else math.nan,
    }
    write_json(out / "stats.json", doc)
    written = ["stats.json"]
    for side in ("gains", "losses"):
        try:
            mags, cc = data.empirical_ccdf(x, side)
        except data.DataError:
            mags, cc = np.empty(0), np.empty(0)
        write_table(out / f"ccdf_{side}.csv", [{"x": float(a), "ccdf": float(c)} for a, c in zip(mags, cc)])
        written.append(f"ccdf_{side}.csv")
    return written


def run_fit(args, x: np.ndarray, out: Path) -> tuple[list[str], dict[str, dist.Model]]:
    names = _models(args, MODEL_IDS)
    fits: dict[str, dict] = {}
    summaries: dict[str, dict] = {}
    reconcile: list[dict] = []
    ok: list[fit.FitResult] = []
    for name in names:
        cfg = fit.FitConfig(
            model=name,
            optimizer=args.optimizer,
            max_iterations=args.max_iterations,
            restarts=args.restarts,
            seed=args.seed,
        )
        try:
            res = fit.fit_mle(cfg, x)
        except (fit.FitError, fit.LikelihoodError, ConvergenceError, DomainError, ArithmeticError) as exc:
            fits[name] = {"model": name, "error": str(exc)}
            continue
        ok.append(res)
        fits[name] = res.to_dict()
        try:
            summaries[name] = asdict(dist.summary_stats(res.params))
            reconcile.extend(asdict(e) for e in dist.reconcile(res.params))
        except (ArithmeticError, ConvergenceError, DomainError) as exc:
            summaries[name] = {"error": str(exc)}
    doc = {
        "fits": fits,
        "summary_stats": summaries,
        "reconcile": reconcile,
        "comparison": fit.model_comparison(ok, len(x)) if ok else [],
    }
    write_json(out / "fit.json", doc)
    rows = [{"model": r.model, **dist.params_to_dict(r.params), "log_likelihood": r.log_likelihood} for r in ok]
    by_model: dict[str, list[dict]] = {}
    for row in rows:
        by_model.setdefault(row["model"], []).append(row)
    written = ["fit.json"]
    for name, model_rows in by_model.items():
        write_table(out / f"params_{name}.csv", model_rows)
        written.append(f"params_{name}.csv")
    if not ok:
        raise ComputationError("no model could be fitted: " + "; ".join(f"{k}: {v['error']}" for k, v in fits.items()))
    return written, {r.model: r.params for r in ok}


def _overlay_ccdfs(models: dict[str, dist.Model], side: str) -> dict:
    fn = dist.ccdf_gains if side == "gains" else dist.ccdf_losses
    return {name: (lambda m: (lambda t: fn(m, t)))(model) for name, model in models.items()}


def run_tails(args, x: np.ndarray, out: Path, models: dict[str, dist.Model]) -> list[str]:
    doc = {}
    written = []
    for side in ("gains", "losses"):
        try:
            rep = tails.tail_report(x, side, args.tail_fraction, args.ci_level, _overlay_ccdfs(models, side))
        except (tails.TailError, data.DataError) as exc:
            raise ComputationError(f"{side}: {exc}") from None
        doc[side] = rep.to_dict()
        write_table(out / f"tail_{side}.csv", rep.rows())
        written.append(f"tail_{side}.csv")
    write_json(out / "tails.json", doc)
    return written + ["tails.json"]


def _fit_for_overlays(args, x: np.ndarray) -> dict[str, dist.Model]:
    if args.models is None:
        return {}
    models = {}
    for name in _models(args, ()):
        cfg = fit.FitConfig(model=name, optimizer=args.optimizer, max_iterations=args.max_iterations,
                            restarts=args.restarts, seed=args.seed)
        try:
            models[name] = fit.fit_mle(cfg, x).params
        except (fit.FitError, ArithmeticError, DomainError) as exc:
            raise ComputationError(f"fitting {name} for overlays failed: {exc}") from None
    return models


# --- commands ---------------------------------------------------------------------------


def cmd_stats(args) -> list[str]:
    return run_stats(args, load_increments(args), args.out)


def cmd_fit(args) -> list[str]:
    return run_fit(args, load_increments(args), args.out)[0]


def cmd_tails(args) -> list[str]:
    x = load_increments(args)
    return run_tails(args, x, args.out, _fit_for_overlays(args, x))


def cmd_report(args) -> list[str]:
    x = load_increments(args)
    written = run_stats(args, x, args.out)
    fit_files, models = run_fit(args, x, args.out)
    written += fit_files + run_tails(args, x, args.out, models)
    return written


def _simulation_config(args) -> sde.SdeConfig:
    theta = args.theta if args.theta is not None else REFERENCE_PARAMS["student"].theta
    alpha = args.alpha if args.alpha is not None else REFERENCE_PARAMS["student"].alpha
    steps_per_day = 1.0 / args.dt
    record = max(int(round(steps_per_day)), 1) if args.record_every is None else args.record_every
    try:
        return sde.SdeConfig.from_alpha(
            theta, alpha, gamma=args.gamma, dt=args.dt, days=args.days, burn_in_days=args.burn_in_days,
            n_paths=args.paths, seed=args.seed, positivity_scheme=args.scheme, record_every=record,
        )
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args) -> list[str]:
    cfg = _simulation_config(args)
    try:
        ens = sde.simulate(cfg)
    except sde.SimulationError as exc:
        raise ComputationError(f"{exc} (path {exc.path}, step {exc.step})") from None
    written = []
    if args.export:
        with (args.out / "ensemble.csv").open("w") as fh:
            sde.export_ensemble(ens, fh)
        written.append("ensemble.csv")
    # decorrelate by keeping one record per `spacing_days` (volatility memory ~ 1/gamma)
    per_day = 1.0 / ens.record_dt
    spacing_days = max(int(round(2.0 / cfg.gamma)), 1)
    diag: dict = {"config": asdict(cfg) | {"alpha": cfg.alpha}, "spacing_days": spacing_days}
    checks = []
    if abs(per_day - round(per_day)) < 1e-9:
        v = sde.stationary_variance_sample(ens, int(round(per_day)) * spacing_days)
        ks_v = stats.kstest(v, sde.variance_law(cfg.theta, cfg.alpha).cdf)
        diag["variance"] = {"n": int(len(v)), "ks_statistic": ks_v.statistic, "ks_pvalue": ks_v.pvalue,
                            "mean_over_theta": float(np.mean(v) / cfg.theta)}
        checks.append(ks_v.pvalue > args.alpha_level)
        try:
            r = sde.accumulated_returns(ens, args.tau, spacing=max(spacing_days // args.tau, 1))
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        model = dist.StudentTParams(cfg.theta, cfg.alpha, tau=float(args.tau))
        ks_r = stats.kstest(r, lambda t: dist.cdf_gains(model, t))
        diag["returns"] = {"tau": args.tau, "n": int(len(r)), "ks_statistic": ks_r.statistic,
                           "ks_pvalue": ks_r.pvalue, "variance_over_theta_tau": float(np.var(r) / (cfg.theta * args.tau))}
        checks.append(ks_r.pvalue > args.alpha_level)
    else:
        diag["note"] = "records do not tile whole days; diagnostics skipped"
    diag["passed"] = bool(checks) and all(checks)
    write_json(args.out / "diagnostics.json", diag)
    written.append("diagnostics.json")
    if checks and not diag["passed"]:
        args.out_written = written
        raise ComputationError("stationary diagnostics failed; see diagnostics.json")
    return written


# --- argument parsing -------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=int, default=1, help="aggregation window in trading days")
    p.add_argument("--config", type=Path, help="JSON document of option defaults; flags override it")


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="price file (date, close) or, with --increments, one increment per line")
    p.add_argument("--increments", action="store_true", help="treat --input as ready-made increments")
    p.add_argument("--date-col", default="date")
    p.add_argument("--price-col", default="close")


def _add_fit(p: argparse.ArgumentParser) -> None:
    p.add_argument("--models", help="comma-separated subset of " + ",".join(MODEL_IDS))
    p.add_argument("--optimizer", choices=("simplex", "quasi-newton"), default="simplex")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iterations", type=int, default=4000)


def _add_tails(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tail-fraction", type=float, default=0.01)
    p.add_argument("--ci-level", type=float, default=0.95)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skewret", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"skewret {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="empirical statistics and CCDF tables")
    _add_common(p), _add_data(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("fit", help="maximum-likelihood fits, summary statistics, model comparison")
    _add_common(p), _add_data(p), _add_fit(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tails", help="power-law tail fits, confidence bands and outlier p-values")
    _add_common(p), _add_data(p), _add_tails(p), _add_fit(p)
    p.set_defaults(func=cmd_tails)

    p = sub.add_parser("report", help="stats, fit and tails in one run")
    _add_common(p), _add_data(p), _add_fit(p), _add_tails(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="stochastic-volatility ensemble with stationary diagnostics")
    _add_common(p)
    p.add_argument("--theta", type=float, help="long-run variance (default: reference Student-t fit)")
    p.add_argument("--alpha", type=float, help="composite parameter 2 gamma theta / kappa^2")
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--dt", type=float, default=0.01, help="Euler step in days")
    p.add_argument("--days", type=float, help="recorded span in days (default 20/gamma)")
    p.add_argument("--burn-in-days", type=float)
    p.add_argument("--paths", type=int, default=200)
    p.add_argument("--scheme", choices=("full-truncation", "reflection"), default="full-truncation")
    p.add_argument("--record-every", type=int, help="steps per record (default: one record per day)")
    p.add_argument("--export", action="store_true", help="write ensemble.csv with every recorded point")
    p.add_argument("--alpha-level", type=float, default=0.01, help="KS p-value below which diagnostics fail")
    p.set_defaults(func=cmd_simulate)
    return parser


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config document must be a JSON object")
    defaults = {k.replace("-", "_"): v for k, v in doc.items()}
    known = set(vars(args)) - {"func", "command", "config"}
    unknown = sorted(set(defaults) - known)
    if unknown:
        raise UsageError(f"config has options not valid for {args.command!r}: {unknown}")
    # re-parse with config values as defaults so explicit flags still win
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub.choices[args.command].set_defaults(**defaults)
    args = parser.parse_args(argv)
    if isinstance(args.out, str):
        args.out = Path(args.out)
    return args


def _validate(args) -> None:
    if args.tau < 1:
        raise UsageError("--tau must be >= 1")
    if hasattr(args, "tail_fraction") and not (0 < args.tail_fraction <= 1):
        raise UsageError("--tail-fraction must lie in (0, 1]")
    if hasattr(args, "ci_level") and not (0 < args.ci_level < 1):
        raise UsageError("--ci-level must lie in (0, 1)")
    if hasattr(args, "restarts") and (args.restarts < 1 or args.max_iterations < 1):
        raise UsageError("--restarts and --max-iterations must be >= 1")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        _validate(args)
        args.out.mkdir(parents=True, exist_ok=True)
    except UsageError as exc:
        print(f"skewret: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except OSError as exc:
        print(f"skewret: error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code = EXIT_OK
    try:
        written = args.func(args)
    except UsageError as exc:
        print(f"skewret: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ComputationError as exc:
        print(f"skewret: computation failed: {exc}", file=sys.stderr)
        written = getattr(args, "out_written", [])
        code = EXIT_COMPUTE
    write_manifest(args.out, args, written + ["manifest.json"])
    return code


if __name__ == "__main__":
    sys.exit(main())
