"""Pointwise estimator fitted on the window of half-width h around x0."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .architecture import LnnConfig, network_for
from .bands import Flag
from .data import DataError, Dataset
from .regress import cube_solver

__all__ = ["InsufficientDataError", "LocalFit", "fit_local", "fit_local_many"]


class InsufficientDataError(DataError):
    pass


@dataclass(frozen=True)
class LocalFit:
    ghat: float
    theta: np.ndarray
    count: int
    flag: Flag = Flag.OK

    # unpacks as (ghat, theta, count)
    def __iter__(self):
        return iter((self.ghat, self.theta, self.count))


def fit_local(data: Dataset, x0, h: float, config: LnnConfig) -> LocalFit:
    """Least squares of y on the features centred at x0, using only points
    with every |x_k - x0_k| <= h. The returned estimate is s(x0 | x0, theta).

    x0 may be anywhere in R^d; only the data in its window matter.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != data.d or config.d != data.d:
        raise ValueError("dimension mismatch between x0, data and config")
    rows = np.flatnonzero(np.all(np.abs(data.X - x0) <= h, axis=1))
    if rows.size == 0:
        raise InsufficientDataError(f"no observations within h={h} of {x0.tolist()}")
    net = network_for(config, h, x0[None, :])
    F = net.features(data.X[rows], x0)
    pinv, flag = cube_solver(F, net.dq)
    theta = pinv @ data.y[rows]
    ghat = float(net.features(x0[None, :], x0)[0] @ theta)
    return LocalFit(ghat, theta, int(rows.size), flag)


def fit_local_many(data: Dataset, points, h: float, config: LnnConfig):
    """Estimates and flags at several points; empty windows give NaN with ``Flag.EMPTY``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    ghat = np.full(points.shape[0], np.nan)
    flags = np.full(points.shape[0], int(Flag.EMPTY))
    for i, x0 in enumerate(points):
        try:
            fit = fit_local(data, x0, h, config)
        except InsufficientDataError:
            continue
        ghat[i], flags[i] = fit.ghat, int(fit.flag)
    return ghat, flags
