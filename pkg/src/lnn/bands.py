"""Shared bootstrap plumbing: status flags, seeded substreams, quantile bands."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "Flag",
    "BootstrapBand",
    "Bands",
    "substream",
    "draw_multipliers",
    "quantile_band",
    "map_chunks",
]

# replications per work item; fixed so results do not depend on thread count
CHUNK = 25

STAGE_REG_BOOT = 1
STAGE_BIN_BOOT = 2
STAGE_KERNEL_BOOT = 3
STAGE_DATA = 10
STAGE_ERRORS = 11


class Flag(IntEnum):
    OK = 0
    OUTSIDE = 1
    EMPTY = 2
    UNDERDETERMINED = 3
    SEPARATED = 4
    MAX_ITER = 5
    SINGULAR = 6


@dataclass(frozen=True)
class BootstrapBand:
    point: np.ndarray
    ghat: float
    lo: float
    hi: float
    R: int
    level: float = 0.95
    flag: Flag = Flag.OK


@dataclass(frozen=True)
class Bands:
    """Bands for many evaluation points at once (column-oriented)."""

    points: np.ndarray
    ghat: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    flags: np.ndarray
    R: int
    level: float
    q_lo: np.ndarray  # lower quantile of the bootstrap estimates themselves
    q_hi: np.ndarray

    def __len__(self):
        return self.ghat.shape[0]

    def __getitem__(self, i) -> BootstrapBand:
        return BootstrapBand(
            self.points[i], float(self.ghat[i]), float(self.lo[i]), float(self.hi[i]),
            self.R, self.level, Flag(int(self.flags[i])),
        )

    def covers(self, truth) -> np.ndarray:
        truth = np.asarray(truth, dtype=float)
        return (self.lo <= truth) & (truth <= self.hi)


def substream(seed: int, stage: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(stage), int(index)])


def draw_multipliers(seed: int, stage: int, reps: range, n: int) -> np.ndarray:
    """Standard normal multipliers, shape (n, len(reps)); column r from substream r."""
    out = np.empty((n, len(reps)))
    for col, r in enumerate(reps):
        out[:, col] = substream(seed, stage, r).standard_normal(n)
    return out


def quantile_band(ghat, deltas, level: float):
    """Band [ghat - Q_hi(delta), ghat - Q_lo(delta)] from centred draws (n_points, R)."""
    alpha = 1.0 - level
    qs = np.quantile(deltas, [alpha / 2, 1 - alpha / 2], axis=1, method="linear")
    lo = ghat - qs[1]
    hi = ghat - qs[0]
    return lo, hi, ghat + qs[0], ghat + qs[1]


def map_chunks(fn, R: int, threads: int = 1):
    """Run ``fn(range)`` over fixed-size replication chunks and stack along axis 1."""
    chunks = [range(s, min(s + CHUNK, R)) for s in range(0, R, CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, chunks))
    else:
        parts = [fn(c) for c in chunks]
    return np.concatenate(parts, axis=1)
