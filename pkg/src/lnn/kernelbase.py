"""Local-constant kernel regression baseline with a residual wild bootstrap."""

from __future__ import annotations

import numpy as np

from . import _backend
from .bands import STAGE_KERNEL_BOOT, Bands, Flag, draw_multipliers, map_chunks, quantile_band
from .data import DataError, Dataset

__all__ = ["KERNELS", "EmptyWindowError", "kernel_weights", "nw_estimate", "nw_many", "kernel_bootstrap"]

KERNELS = {"uniform": 0, "epanechnikov": 1}


class EmptyWindowError(DataError):
    pass


def _code(kernel: str) -> int:
    try:
        return KERNELS[kernel]
    except KeyError:
        raise ValueError(f"kernel must be one of {sorted(KERNELS)}") from None


def kernel_weights(X, points, h: float, kernel: str = "epanechnikov") -> np.ndarray:
    """Product-kernel weights prod_k K((x_tk - x0_k)/h), shape (n_points, T)."""
    if h <= 0:
        raise ValueError("h must be positive")
    return _backend.product_kernel_weights(
        np.asarray(X, dtype=float), np.atleast_2d(np.asarray(points, dtype=float)), float(h), _code(kernel)
    )


def nw_many(data: Dataset, points, h: float, kernel: str = "epanechnikov"):
    """Estimates at several points; NaN and ``Flag.EMPTY`` where no weight is positive."""
    Wt = kernel_weights(data.X, points, h, kernel)
    total = Wt.sum(axis=1)
    ok = total > 0
    est = np.full(Wt.shape[0], np.nan)
    est[ok] = Wt[ok] @ data.y / total[ok]
    flags = np.where(ok, int(Flag.OK), int(Flag.EMPTY))
    return est, flags


def nw_estimate(data: Dataset, x0, h: float, kernel: str = "epanechnikov") -> float:
    est, flags = nw_many(data, np.asarray(x0, dtype=float).reshape(1, -1), h, kernel)
    if flags[0] != Flag.OK:
        raise EmptyWindowError(f"no observation within h={h} of {np.ravel(x0).tolist()}")
    return float(est[0])


def kernel_bootstrap(
    data: Dataset,
    h: float,
    kernel: str,
    R: int,
    seed: int,
    eval_points,
    level: float = 0.95,
    threads: int = 1,
    multipliers=None,
) -> Bands:
    """Residual wild bootstrap for the kernel smoother.

    Residuals come from the fit at the training points; y* = mhat(x_t) +
    resid_t * eta_t is smoothed again and the band is built from the
    quantiles of mhat*(x0) - mhat(x0), as for the network estimator.
    """
    if R < 2:
        raise ValueError("R must be at least 2")
    X_eval = np.atleast_2d(np.asarray(eval_points, dtype=float))
    mhat_train, _ = nw_many(data, data.X, h, kernel)
    resid = data.y - mhat_train
    ghat, flags = nw_many(data, X_eval, h, kernel)
    Wt = kernel_weights(data.X, X_eval, h, kernel)
    ok = flags == Flag.OK
    S = np.zeros_like(Wt)
    S[ok] = Wt[ok] / Wt[ok].sum(axis=1, keepdims=True)
    base = S @ mhat_train - np.nan_to_num(ghat)
    draw = multipliers or (lambda reps, n: draw_multipliers(seed, STAGE_KERNEL_BOOT, reps, n))

    def run(reps):
        eta = draw(reps, data.T)
        return base[:, None] + S @ (resid[:, None] * eta)

    deltas = map_chunks(run, R, threads)
    lo, hi, q_lo, q_hi = quantile_band(ghat, deltas, level)
    for arr in (lo, hi, q_lo, q_hi):
        arr[~ok] = np.nan
    return Bands(X_eval, ghat, lo, hi, flags, R, level, q_lo, q_hi)
