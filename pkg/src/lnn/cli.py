"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .architecture import LnnConfig, build_architecture
from .bands import Flag
from .binary import FittedBinary, fit_binary, predict_index, predict_prob_many, score_bootstrap
from .data import DataError, Dataset, load_csv
from .localfit import fit_local_many
from .persist import load_metadata, load_model, save_model
from .regress import FitError, fit_regression, predict_many, wild_bootstrap_reg
from .simlab import ExperimentSpec, run_experiment, run_kernel_comparison, test_grid

__all__ = ["main", "run_command"]

log = logging.getLogger("lnn")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

CONFIG_KEYS = {"a", "d", "q", "s", "u_sigma", "activation", "bandwidth", "weight_matrix", "link"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON configuration file")
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0)
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else None,
                        help="worker threads (default: available cores)")
    parser.add_argument("--out", default=default, help="output path")


def _data_flags(p):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--y", dest="y_column", default="y", help="response column (default: y)")
    p.add_argument("--x", dest="x_columns", help="comma-separated regressor columns (default: all others)")
    p.add_argument("--normalize", action="store_true", help="z-score every selected column")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lnn", description="Localized neural network estimation and inference.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        return p

    p = add("fit-reg", "fit the regression model and save it as JSON")
    _data_flags(p)
    p = add("fit-bin", "fit the binary model and save it as JSON")
    _data_flags(p)
    p = add("predict", "predict from a saved model, or fit locally with --mode local")
    p.add_argument("--model", help="model JSON from fit-reg or fit-bin")
    p.add_argument("--mode", choices=("global", "local"), default="global")
    p.add_argument("--points", help="CSV of evaluation points (x columns by name)")
    p.add_argument("--data", help="CSV of points for global mode, training data for local mode")
    p.add_argument("--y", dest="y_column", default="y")
    p.add_argument("--x", dest="x_columns")
    p.add_argument("--normalize", action="store_true")
    p = add("bootstrap", "fit and compute wild-bootstrap bands at evaluation points")
    _data_flags(p)
    p.add_argument("--model-kind", choices=("reg", "bin"), default="reg")
    p.add_argument("--points", help="CSV of evaluation points (default: the test grid)")
    p.add_argument("--R", type=int, help="bootstrap replications (overrides the config)")
    p = add("fit-local", "pointwise local fits on windows around evaluation points")
    _data_flags(p)
    p.add_argument("--points", help="CSV of evaluation points (default: the test grid)")
    p.add_argument("--mode", choices=("local",), default="local")
    p.add_argument("--h", type=float, help="window half-width (default: from the config)")
    p = add("simulate", "run a Monte-Carlo experiment")
    p.add_argument("--plot", help="also write the plot-ready per-point CSV here")
    p = add("bench-kernel", "compare network and kernel-smoother coverage on simulated data")
    p = add("inspect-arch", "describe the network built from a configuration")
    p.add_argument("--T", type=int, help="sample size for the bandwidth rule")
    return parser


def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _lnn_config(cfg: dict, d: int | None = None) -> LnnConfig:
    base = {k: v for k, v in cfg.items() if k in CONFIG_KEYS}
    if d is not None:
        if "d" in base and int(base["d"]) != d:
            raise UsageError(f"config has d={base['d']} but the data have {d} regressors")
        base["d"] = d
    if "d" not in base:
        raise UsageError("the configuration needs d")
    return LnnConfig.from_dict(base)


def _load(args) -> Dataset:
    xs = args.x_columns.split(",") if args.x_columns else None
    return load_csv(args.data, args.y_column, xs, normalize=args.normalize)


def _load_points(path, names) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        missing = [n for n in names if n not in header]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        pos = [header.index(n) for n in names]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(row[p]) for p in pos])
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: bad evaluation point") from None
    return np.array(rows, dtype=float).reshape(-1, len(names))


def _fmt(v) -> str:
    v = float(v)
    return repr(v) if np.isfinite(v) else "nan"


def _write_predictions(path, points, ghat, lo, hi, flags, prob=None):
    d = points.shape[1]
    header = [f"x{k + 1}" for k in range(d)] + ["ghat"] + (["prob"] if prob is not None else []) + ["lo", "hi", "flag"]
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(points.shape[0]):
            row = [_fmt(v) for v in points[i]] + [_fmt(ghat[i])]
            if prob is not None:
                row.append(_fmt(prob[i]))
            row += [_fmt(lo[i]), _fmt(hi[i]), Flag(int(flags[i])).name.lower()]
            w.writerow(row)
    finally:
        if path:
            fh.close()


def _threads(args) -> int:
    return max(1, args.threads or os.cpu_count() or 1)


def _cmd_fit(args, cfg, binary: bool):
    data = _load(args)
    if binary and args.normalize:
        # labels stay 0/1; only the regressors are standardized
        rec = data.normalization
        y = data.y * rec["sd"][data.y_name] + rec["mean"][data.y_name]
        rec = {**rec, "mean": {**rec["mean"], data.y_name: 0.0}, "sd": {**rec["sd"], data.y_name: 1.0}}
        data = Dataset(np.rint(y), data.X, data.x_names, data.y_name, rec)
    config = _lnn_config(cfg, data.d)
    arch = build_architecture(config, data.T)
    if binary:
        model = fit_binary(data, arch, config.link, threads=_threads(args))
    else:
        model = fit_regression(data, arch, threads=_threads(args))
    out = args.out or "model.json"
    meta = {"y_name": data.y_name, "x_names": list(data.x_names), "normalization": data.normalization}
    save_model(model, out, meta)
    print(f"fitted {arch.n_cubes} cubes (M={arch.M}, h={arch.h:g}, d_q={arch.dq}); model written to {out}")
    return EXIT_OK


def _cmd_predict(args, cfg):
    if args.mode == "local":
        if not args.data or not args.points:
            raise UsageError("--mode local needs --data (training) and --points")
        data = _load(args)
        return _local(args, cfg, data, args.points, None)
    if not args.model:
        raise UsageError("predict needs --model")
    model = load_model(args.model)
    meta = load_metadata(args.model)
    src = args.points or args.data
    if not src:
        raise UsageError("predict needs --points or --data")
    names = meta.get("x_names") if meta.get("x_names") and not args.x_columns else _x_names(args, model.arch.d)
    pts = _load_points(src, names)
    norm = meta.get("normalization", {})
    # points are written in the units they were given; the model sees standardized ones
    z = pts
    if "mean" in norm:
        mu = np.array([norm["mean"][n] for n in names])
        sd = np.array([norm["sd"][n] for n in names])
        z = (pts - mu) / sd
    nan = np.full(pts.shape[0], np.nan)
    if isinstance(model, FittedBinary):
        prob, flags = predict_prob_many(model, z)
        ghat, _ = predict_index(model, z)
        _write_predictions(args.out, pts, ghat, nan, nan, flags, prob)
    else:
        ghat, flags = predict_many(model, z)
        if "mean" in norm:
            y_name = meta["y_name"]
            ghat = ghat * norm["sd"][y_name] + norm["mean"][y_name]
        _write_predictions(args.out, pts, ghat, nan, nan, flags)
    return EXIT_OK


def _x_names(args, d):
    if args.x_columns:
        names = args.x_columns.split(",")
        if len(names) != d:
            raise UsageError(f"--x names {len(names)} columns but the model has d={d}")
        return names
    return [f"x{k + 1}" for k in range(d)]


def _eval_points(args, cfg, data: Dataset):
    if getattr(args, "points", None):
        return _load_points(args.points, list(data.x_names))
    a = float(cfg.get("a", 3.0))
    return test_grid(a, int(cfg.get("L", 20)), data.d)


def _cmd_bootstrap(args, cfg):
    data = _load(args)
    config = _lnn_config(cfg, data.d)
    arch = build_architecture(config, data.T)
    R = args.R or int(cfg.get("R", 200))
    level = float(cfg.get("level", 0.95))
    pts = _eval_points(args, cfg, data)
    threads = _threads(args)
    if args.model_kind == "bin":
        model = fit_binary(data, arch, config.link, threads=threads)
        bands = score_bootstrap(model, data, R, args.seed, pts, level, threads=threads)
        prob, _ = predict_prob_many(model, pts)
        _write_predictions(args.out, pts, bands.ghat, bands.lo, bands.hi, bands.flags, prob)
    else:
        model = fit_regression(data, arch, threads=threads)
        bands = wild_bootstrap_reg(model, data, R, args.seed, pts, level, threads=threads)
        _write_predictions(args.out, pts, bands.ghat, bands.lo, bands.hi, bands.flags)
    return EXIT_OK


def _local(args, cfg, data, points_path, h):
    config = _lnn_config(cfg, data.d)
    pts = _load_points(points_path, list(data.x_names)) if points_path else _eval_points(args, cfg, data)
    if h is None:
        h = build_architecture(config, data.T).h
    ghat, flags = fit_local_many(data, pts, h, config)
    nan = np.full(pts.shape[0], np.nan)
    _write_predictions(args.out, pts, ghat, nan, nan, flags)
    return EXIT_OK


def _cmd_fit_local(args, cfg):
    data = _load(args)
    return _local(args, cfg, data, args.points, args.h)


def _cmd_simulate(args, cfg):
    spec = ExperimentSpec.from_dict(cfg)
    report = run_experiment(spec, args.seed, threads=_threads(args))
    out = Path(args.out or "sim_report.csv")
    out.write_text(report.to_csv())
    out.with_suffix(".json").write_text(report.to_json())
    if args.plot:
        Path(args.plot).write_text(report.plot_csv())
    for row in report.rows:
        log.info("T=%d u_sigma=%g: %.1fs", row.T, row.u_sigma, row.wall_time)
    print(report.to_csv(), end="")
    return EXIT_OK


def _cmd_bench_kernel(args, cfg):
    rows = run_kernel_comparison(
        d=int(cfg.get("d", 3)),
        T=int(cfg.get("T", 2400)),
        n_reps=int(cfg.get("n_reps", cfg.get("n", 30))),
        R=int(cfg.get("R", 200)),
        seed=args.seed,
        q=int(cfg.get("q", 3)),
        u_sigmas=tuple(np.atleast_1d(cfg.get("u_sigma", -0.5)).tolist()),
        a=float(cfg.get("a", 3.0)),
        level=float(cfg.get("level", 0.95)),
        threads=_threads(args),
    )
    cols = list(rows[0])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def _cmd_inspect(args, cfg):
    config = _lnn_config(cfg)
    arch = build_architecture(config, args.T)
    info = {
        "d": arch.d,
        "q": arch.q,
        "M": arch.M,
        "h": arch.h,
        "cubes": arch.n_cubes,
        "d_q": arch.dq,
        "neurons": arch.n_neurons,
        "cond_B": arch.cond,
        "gamma": arch.gamma.tolist(),
        "beta": arch.beta.tolist(),
        "multi_indices": arch.idx.array.tolist(),
        "W": arch.W.tolist(),
    }
    text = json.dumps(info, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_OK


COMMANDS = {
    "fit-reg": lambda a, c: _cmd_fit(a, c, binary=False),
    "fit-bin": lambda a, c: _cmd_fit(a, c, binary=True),
    "predict": _cmd_predict,
    "bootstrap": _cmd_bootstrap,
    "fit-local": _cmd_fit_local,
    "simulate": _cmd_simulate,
    "bench-kernel": _cmd_bench_kernel,
    "inspect-arch": _cmd_inspect,
}


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be positive")
        cfg = _read_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"lnn: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"lnn: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"lnn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, TypeError) as exc:
        print(f"lnn: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    try:
        return run_command(sys.argv[1:] if argv is None else argv)
    except BrokenPipeError:
        # output piped into a consumer that closed early (e.g. head)
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
