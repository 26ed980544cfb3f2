"""Least-squares estimation of the regression model, plug-in variance and
the residual wild bootstrap."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .architecture import OUTSIDE, Architecture
from .bands import STAGE_REG_BOOT, Bands, Flag, draw_multipliers, map_chunks, quantile_band
from .basis import moment_matrix
from .data import Dataset

__all__ = [
    "FitError",
    "FittedRegression",
    "fit_regression",
    "cube_solver",
    "predict",
    "predict_many",
    "residuals",
    "wild_bootstrap_reg",
    "plugin_variance",
]

COND_LIMIT = 1e12


class FitError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class FittedRegression:
    arch: Architecture
    thetas: np.ndarray  # (n_cubes, d_q); NaN rows for empty cubes
    counts: np.ndarray
    flags: np.ndarray  # per-cube Flag values
    sigma_eps2: float
    # per-cube (row indices into the training data, pseudo-inverse of the design)
    solvers: dict = field(default_factory=dict, repr=False)

    @property
    def underdetermined_flags(self) -> np.ndarray:
        return self.flags != Flag.OK


def cube_solver(F: np.ndarray, dq: int):
    """Pseudo-inverse of one cube's design and its status.

    Full-rank cubes go through a reduced QR; short or ill-conditioned ones get
    the SVD-based minimum-norm solution and are flagged.
    """
    n = F.shape[0]
    if n == 0:
        return None, Flag.EMPTY
    if n >= dq:
        Q, Rm = np.linalg.qr(F)
        diag = np.abs(np.diag(Rm))
        if diag.min() > 0 and np.linalg.cond(Rm) <= COND_LIMIT:
            return solve_triangular(Rm, Q.T), Flag.OK
    return np.linalg.pinv(F), Flag.UNDERDETERMINED


def _group_rows(cubes: np.ndarray, n_cubes: int) -> list[np.ndarray]:
    order = np.argsort(cubes, kind="stable")
    sorted_cubes = cubes[order]
    bounds = np.searchsorted(sorted_cubes, np.arange(n_cubes + 1))
    return [order[bounds[i]:bounds[i + 1]] for i in range(n_cubes)]


def fit_regression(data: Dataset, arch: Architecture, threads: int = 1) -> FittedRegression:
    if data.d != arch.d:
        raise ValueError(f"data has d={data.d} but the architecture expects d={arch.d}")
    cubes, F = arch.design(data.X)
    groups = _group_rows(np.where(cubes == OUTSIDE, arch.n_cubes, cubes), arch.n_cubes)
    if sum(len(g) for g in groups) == 0:
        raise FitError("no observations inside the domain")

    def solve(i):
        rows = groups[i]
        pinv, flag = cube_solver(F[rows], arch.dq)
        theta = np.full(arch.dq, np.nan) if pinv is None else pinv @ data.y[rows]
        return pinv, flag, theta

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, range(arch.n_cubes)))
    else:
        results = [solve(i) for i in range(arch.n_cubes)]

    thetas = np.array([r[2] for r in results]).reshape(arch.n_cubes, arch.dq)
    flags = np.array([int(r[1]) for r in results])
    counts = np.array([len(g) for g in groups])
    solvers = {i: (groups[i], results[i][0]) for i in range(arch.n_cubes) if results[i][0] is not None}

    rss, n_used, p_used = 0.0, 0, 0
    for i in np.flatnonzero(flags == Flag.OK):
        rows = groups[i]
        r = data.y[rows] - F[rows] @ thetas[i]
        rss += float(r @ r)
        n_used += len(rows)
        p_used += arch.dq
    if n_used == 0:
        raise FitError("no cube has enough observations for a full-rank fit")
    dof = n_used - p_used if n_used > p_used else max(n_used - 1, 1)
    return FittedRegression(arch, thetas, counts, flags, rss / dof, solvers)


def predict_many(model, X):
    """Estimates at the rows of X plus per-row flags.

    Outside points and points in empty cubes get NaN. Points in
    underdetermined cubes get the minimum-norm value but keep their flag.
    """
    arch = model.arch
    cubes, F = arch.design(X)
    values = np.full(cubes.shape[0], np.nan)
    flags = np.full(cubes.shape[0], int(Flag.OUTSIDE))
    inside = cubes != OUTSIDE
    cube_flags = model.flags[cubes[inside]]
    flags[inside] = cube_flags
    usable = inside.copy()
    usable[inside] = cube_flags != Flag.EMPTY
    values[usable] = np.einsum("ij,ij->i", F[usable], model.thetas[cubes[usable]])
    return values, flags


def predict(model, x):
    """Scalar estimate at one point, or the :class:`Flag` explaining why there is none."""
    values, flags = predict_many(model, np.asarray(x, dtype=float).reshape(1, -1))
    if flags[0] != Flag.OK:
        return Flag(int(flags[0]))
    return float(values[0])


def residuals(model: FittedRegression, data: Dataset) -> np.ndarray:
    """y - ghat(x); NaN for observations outside the domain or in flagged cubes."""
    values, flags = predict_many(model, data.X)
    out = data.y - values
    out[flags != Flag.OK] = np.nan
    return out


def _smoother_blocks(model, X_eval):
    """Per-cube linear maps from in-cube training responses to estimates at X_eval."""
    arch = model.arch
    cubes, F = arch.design(X_eval)
    blocks = []
    for i in np.unique(cubes[cubes != OUTSIDE]):
        if i not in model.solvers:
            continue
        rows, pinv = model.solvers[i]
        e = np.flatnonzero(cubes == i)
        blocks.append((e, rows, F[e] @ pinv))
    return blocks


def wild_bootstrap_reg(
    model: FittedRegression,
    data: Dataset,
    R: int,
    seed: int,
    eval_points,
    level: float = 0.95,
    threads: int = 1,
    multipliers=None,
) -> Bands:
    """Residual wild bootstrap bands at ``eval_points``.

    Replication r draws eta from the substream (seed, r), builds
    y* = ghat(x) + resid * eta and refits. The design is unchanged across
    replications, so each refit is the cached per-cube pseudo-inverse applied
    to y*; because the fitted values lie in the column space, ghat* - ghat is
    the smoother applied to resid * eta.

    ``multipliers(reps, T)`` may replace the normal draws (test hook).
    """
    if R < 2:
        raise ValueError("R must be at least 2")
    X_eval = np.atleast_2d(np.asarray(eval_points, dtype=float))
    ghat, flags = predict_many(model, X_eval)
    resid = np.nan_to_num(residuals(model, data))
    blocks = _smoother_blocks(model, X_eval)
    draw = multipliers or (lambda reps, n: draw_multipliers(seed, STAGE_REG_BOOT, reps, n))

    def run(reps):
        eta = draw(reps, data.T)
        out = np.zeros((X_eval.shape[0], len(reps)))
        for e, rows, S in blocks:
            out[e] = S @ (resid[rows, None] * eta[rows])
        return out

    deltas = map_chunks(run, R, threads)
    lo, hi, q_lo, q_hi = quantile_band(ghat, deltas, level)
    bad = flags == Flag.OUTSIDE
    for arr in (lo, hi, q_lo, q_hi):
        arr[bad] = np.nan
    return Bands(X_eval, ghat, lo, hi, flags, R, level, q_lo, q_hi)


def plugin_variance(model, x0, density_at_x0: float, sigma_eps2: float | None = None) -> float:
    """Asymptotic variance of the estimate at an expansion point.

    sigma_eps2 * [M^{-1}]_{11} / f(x0), where M is the moment matrix of the
    centred monomials on [-1, 1]^d. The standard error of ghat(x0) is
    sqrt(variance / (T h^d)).
    """
    if density_at_x0 <= 0:
        raise ValueError("density must be positive")
    s2 = model.sigma_eps2 if sigma_eps2 is None else sigma_eps2
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != model.arch.d:
        raise ValueError("x0 has the wrong dimension")
    Minv_11 = np.linalg.solve(moment_matrix(model.arch.idx), np.eye(model.arch.dq)[:, 0])[0]
    return float(s2 * Minv_11 / density_at_x0)
