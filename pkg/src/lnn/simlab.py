"""Monte-Carlo experiments: data generation, evaluation grids, metrics and
table-style runs."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import lfilter

from .architecture import LnnConfig, build_architecture
from .bands import STAGE_DATA, STAGE_ERRORS, Bands, Flag
from .binary import fit_binary, score_bootstrap
from .data import Dataset
from .kernelbase import kernel_bootstrap
from .regress import FitError, fit_regression, wild_bootstrap_reg

__all__ = [
    "gen_ar1",
    "truth",
    "gen_dataset",
    "test_grid",
    "diagonal_points",
    "metrics",
    "ExperimentSpec",
    "SimRow",
    "SimReport",
    "run_experiment",
    "run_kernel_comparison",
    "rep_seed",
]

log = logging.getLogger(__name__)

AR_PHI = 0.5
AR_INNOV_VAR = 0.75


def gen_ar1(T: int, phi: float = AR_PHI, innov_var: float = AR_INNOV_VAR, seed: int = 0) -> np.ndarray:
    """Stationary AR(1): e_0 from the stationary law, then e_t = phi e_{t-1} + u_t."""
    if abs(phi) >= 1:
        raise ValueError("|phi| must be below 1")
    if innov_var <= 0:
        raise ValueError("innovation variance must be positive")
    rng = np.random.default_rng([int(seed), STAGE_ERRORS])
    e0 = rng.normal(0.0, np.sqrt(innov_var / (1 - phi * phi)))
    u = rng.normal(0.0, np.sqrt(innov_var), size=T)
    u[0] = e0
    if phi == 0:
        return u
    # the recursion is a first-order IIR filter
    return lfilter([1.0], [1.0, -phi], u)


def truth(X) -> np.ndarray:
    """g(x) = 1 + sin(mean of the coordinates)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return 1.0 + np.sin(X.mean(axis=1))


def gen_dataset(model: str, T: int, d: int, a: float = 3.0, seed: int = 0):
    """Simulated sample and the true function.

    reg: y = g(x) + e. bin: y = 1{g(x) >= e}. Regressors are iid U(-a, a).
    """
    if model not in ("reg", "bin"):
        raise ValueError("model must be 'reg' or 'bin'")
    X = np.random.default_rng([int(seed), STAGE_DATA]).uniform(-a, a, size=(T, d))
    e = gen_ar1(T, seed=seed)
    g = truth(X)
    y = g + e if model == "reg" else (g >= e).astype(float)
    return Dataset(y, X), truth


def test_grid(a: float, L: int, d: int) -> np.ndarray:
    """Cartesian grid with L equally spaced values per axis, corners included."""
    if L < 2:
        raise ValueError("L must be at least 2")
    coords = -a + (2 * a / (L - 1)) * np.arange(L)
    return np.array(list(itertools.product(coords, repeat=d)), dtype=float)


def diagonal_points(d: int, n: int = 26, start: float = -2.5, step: float = 0.2) -> np.ndarray:
    """Points (start + i*step) * 1_d, i = 0..n-1."""
    return (start + step * np.arange(n))[:, None] * np.ones((1, d))


def _band_arrays(per_rep_bands):
    if isinstance(per_rep_bands, tuple) and len(per_rep_bands) == 2:
        return np.asarray(per_rep_bands[0], float), np.asarray(per_rep_bands[1], float)
    lo = np.array([b.lo for b in per_rep_bands], dtype=float)
    hi = np.array([b.hi for b in per_rep_bands], dtype=float)
    return lo, hi


def metrics(per_rep_estimates, truths, per_rep_bands=None):
    """RMSE_g, CR_g and the interquartile-trimmed RMSE_g*.

    Estimates are (n_reps, n_points); NaN entries (failed or flagged) are
    left out of every metric. Bands are a sequence of :class:`Bands` or a
    ``(lo, hi)`` pair of arrays shaped like the estimates. RMSE_g* keeps, per
    point, the replications whose estimate lies in [Q1, Q3] of that point's
    estimates (inclusive, linear-interpolation quantiles).
    """
    est = np.atleast_2d(np.asarray(per_rep_estimates, dtype=float))
    g = np.broadcast_to(np.asarray(truths, dtype=float), est.shape)
    err2 = (est - g) ** 2
    valid = np.isfinite(est)
    rmse = float(np.sqrt(err2[valid].mean())) if valid.any() else float("nan")

    cr = float("nan")
    if per_rep_bands is not None:
        lo, hi = _band_arrays(per_rep_bands)
        ok = valid & np.isfinite(lo) & np.isfinite(hi)
        if ok.any():
            cr = float(((lo <= g) & (g <= hi))[ok].mean())

    keep = np.zeros_like(valid)
    cols = valid.any(axis=0)
    if cols.any():
        q1, q3 = np.nanquantile(est[:, cols], [0.25, 0.75], axis=0, method="linear")
        sub = est[:, cols]
        keep[:, cols] = valid[:, cols] & (sub >= q1) & (sub <= q3)
    rmse_star = float(np.sqrt(err2[keep].mean())) if keep.any() else float("nan")
    return rmse, cr, rmse_star


@dataclass(frozen=True)
class ExperimentSpec:
    """Experiment matrix: every (T, u_sigma) pair is one report row."""

    model: str = "reg"
    T_values: tuple = (800, 1600, 2400)
    d: int = 2
    q: int = 3
    u_sigmas: tuple = (-0.5,)
    a: float = 3.0
    s: float = 1.0
    L: int = 20
    n_reps: int = 50
    R: int = 200
    level: float = 0.95
    link: str = "probit"
    points: str = "grid"  # or "diagonal"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f: data[f] for f in cls.__dataclass_fields__ if f in data}
        for key in ("T_values", "u_sigmas"):
            if key in known:
                v = known[key]
                known[key] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        if "T" in data and "T_values" not in known:
            v = data["T"]
            known["T_values"] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        if "u_sigma" in data and "u_sigmas" not in known:
            v = data["u_sigma"]
            known["u_sigmas"] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        if "n" in data and "n_reps" not in known:
            known["n_reps"] = data["n"]
        return cls(**known)

    def eval_points(self) -> np.ndarray:
        if self.points == "diagonal":
            return diagonal_points(self.d)
        return test_grid(self.a, self.L, self.d)


@dataclass
class SimRow:
    model: str
    T: int
    d: int
    q: int
    u_sigma: float
    n_reps: int
    R: int
    RMSE_g: float
    RMSE_g_star: float | None
    CR_g: float
    n_failed: int = 0
    n_flagged: int = 0
    wall_time: float = 0.0


@dataclass
class SimReport:
    rows: list = field(default_factory=list)
    # per-row plot layers: points, truth, mean estimate, mean lower and upper draws
    layers: list = field(default_factory=list, repr=False)

    COLUMNS = ("model", "T", "d", "q", "u_sigma", "n_reps", "R", "RMSE_g", "RMSE_g_star", "CR_g",
               "n_failed", "n_flagged")

    def to_csv(self, include_timing: bool = False) -> str:
        cols = list(self.COLUMNS) + (["wall_time"] if include_timing else [])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.rows:
            rec = asdict(row)
            w.writerow([_fmt(rec[c]) for c in cols])
        return buf.getvalue()

    def to_json(self, include_timing: bool = False) -> str:
        rows = []
        for row in self.rows:
            rec = asdict(row)
            if not include_timing:
                rec.pop("wall_time")
            rows.append({k: _json_safe(v) for k, v in rec.items()})
        return json.dumps({"rows": rows}, indent=2, sort_keys=True) + "\n"

    def plot_csv(self) -> str:
        """Long-format table: one line per (row, point) with the three plot layers."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.layers[0]["points"].shape[1] if self.layers else 0
        w.writerow(["model", "T", "u_sigma"] + [f"x{k + 1}" for k in range(d)]
                   + ["truth", "mean_ghat", "mean_q_lo", "mean_q_hi"])
        for row, layer in zip(self.rows, self.layers):
            for j, x in enumerate(layer["points"]):
                w.writerow([row.model, row.T, _fmt(row.u_sigma)] + [_fmt(v) for v in x]
                           + [_fmt(layer[k][j]) for k in ("truth", "mean_ghat", "mean_q_lo", "mean_q_hi")])
        return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if np.isfinite(v) else "nan"
    return "" if v is None else str(v)


def rep_seed(seed: int, rep: int) -> int:
    """Seed of one replication, derived from the master seed and its index."""
    return int(np.random.SeedSequence([int(seed), int(rep)]).generate_state(1, np.uint64)[0])


def _one_rep(spec: ExperimentSpec, arch, T, pts, seed, rep):
    rs = rep_seed(seed, rep)
    data, _ = gen_dataset(spec.model, T, spec.d, spec.a, rs)
    if spec.model == "reg":
        model = fit_regression(data, arch)
        bands = wild_bootstrap_reg(model, data, spec.R, rs, pts, spec.level)
    else:
        model = fit_binary(data, arch, spec.link)
        bands = score_bootstrap(model, data, spec.R, rs, pts, spec.level)
    return bands


def _masked(bands: Bands):
    bad = bands.flags != Flag.OK
    out = {}
    for k in ("ghat", "lo", "hi", "q_lo", "q_hi"):
        arr = np.array(getattr(bands, k), dtype=float)
        arr[bad] = np.nan
        out[k] = arr
    return out, int(bad.sum())


def _run_cell(spec, T, u_sigma, seed, threads, pts):
    config = LnnConfig(a=spec.a, d=spec.d, q=spec.q, s=spec.s, u_sigma=u_sigma, link=spec.link)
    arch = build_architecture(config, T)

    def work(rep):
        try:
            return _one_rep(spec, arch, T, pts, seed, rep)
        except FitError as exc:
            log.warning("replication %d failed: %s", rep, exc)
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(spec.n_reps)))
    else:
        results = [work(r) for r in range(spec.n_reps)]
    return results


def run_experiment(spec: ExperimentSpec, seed: int, threads: int = 1) -> SimReport:
    """n replications of (simulate, fit, bootstrap) per (T, u_sigma) cell.

    Replication r of every cell uses the same derived seed, so cells differ
    only through their configuration. Failed replications are counted and
    left out; so are evaluation points whose cube is flagged.
    """
    pts = spec.eval_points()
    g = truth(pts)
    report = SimReport()
    for T in spec.T_values:
        for u in spec.u_sigmas:
            t0 = time.perf_counter()
            results = _run_cell(spec, int(T), float(u), seed, threads, pts)
            est, lo, hi, qlo, qhi = [], [], [], [], []
            n_flagged = 0
            for b in results:
                if b is None:
                    continue
                m, nf = _masked(b)
                n_flagged += nf
                est.append(m["ghat"])
                lo.append(m["lo"])
                hi.append(m["hi"])
                qlo.append(m["q_lo"])
                qhi.append(m["q_hi"])
            n_failed = sum(b is None for b in results)
            if est:
                est_a = np.array(est)
                rmse, cr, rmse_star = metrics(est_a, g, (np.array(lo), np.array(hi)))
                with warnings.catch_warnings():
                    # all-NaN columns (points flagged in every replication)
                    warnings.simplefilter("ignore", RuntimeWarning)
                    layer = {
                        "points": pts,
                        "truth": g,
                        "mean_ghat": np.nanmean(est_a, axis=0),
                        "mean_q_lo": np.nanmean(np.array(qlo), axis=0),
                        "mean_q_hi": np.nanmean(np.array(qhi), axis=0),
                    }
            else:
                rmse = cr = rmse_star = float("nan")
                nan = np.full(len(pts), np.nan)
                layer = {"points": pts, "truth": g, "mean_ghat": nan, "mean_q_lo": nan, "mean_q_hi": nan}
            report.rows.append(SimRow(
                spec.model, int(T), spec.d, spec.q, float(u), spec.n_reps, spec.R,
                rmse, rmse_star if spec.model == "bin" else None, cr,
                n_failed, n_flagged, time.perf_counter() - t0,
            ))
            report.layers.append(layer)
    return report


def run_kernel_comparison(
    d: int = 3,
    T: int = 2400,
    n_reps: int = 30,
    R: int = 200,
    seed: int = 0,
    q: int = 3,
    u_sigmas=(-0.5,),
    kernels=("epanechnikov", "uniform"),
    a: float = 3.0,
    level: float = 0.95,
    threads: int = 1,
) -> list[dict]:
    """Coverage of the network bands and of kernel-smoother bands on the
    diagonal points, all on the same simulated samples. The kernel
    bandwidth is the network's cube half-width.
    """
    pts = diagonal_points(d)
    g = truth(pts)
    archs = {u: build_architecture(LnnConfig(a=a, d=d, q=q, u_sigma=u), T) for u in u_sigmas}
    h = next(iter(archs.values())).h
    methods = [f"lnn(u_sigma={u})" for u in u_sigmas] + list(kernels)

    def work(rep):
        rs = rep_seed(seed, rep)
        data, _ = gen_dataset("reg", T, d, a, rs)
        out = {}
        for u, arch in archs.items():
            model = fit_regression(data, arch)
            out[f"lnn(u_sigma={u})"] = wild_bootstrap_reg(model, data, R, rs, pts, level)
        for k in kernels:
            out[k] = kernel_bootstrap(data, h, k, R, rs, pts, level)
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(n_reps)))
    else:
        results = [work(r) for r in range(n_reps)]
    rows = []
    for m in methods:
        masked = [_masked(res[m])[0] for res in results]
        est = np.array([x["ghat"] for x in masked])
        lo = np.array([x["lo"] for x in masked])
        hi = np.array([x["hi"] for x in masked])
        rmse, cr, _ = metrics(est, g, (lo, hi))
        rows.append({"method": m, "d": d, "T": T, "h": h, "n_reps": n_reps, "R": R, "RMSE_g": rmse, "CR_g": cr})
    return rows
