"""Polynomial bookkeeping: multi-indices, centred monomials, and the
matrices that relate the monomial basis to powers of affine forms."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MultiIndexSet",
    "RotationPair",
    "SingularBasisError",
    "multi_indices",
    "eval_monomials",
    "scaling_matrix",
    "expansion_matrix",
    "rotation_matrix",
    "moment_matrix",
]

ORDERING = "graded-lex"
COND_LIMIT = 1e12


class SingularBasisError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class MultiIndexSet:
    """Exponent tuples of all monomials of total degree <= q in d variables.

    Ordered by total degree, then lexicographically descending in the leading
    variable, so for d=2, q=1 the order is (0,0), (1,0), (0,1).
    """

    d: int
    q: int
    indices: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __getitem__(self, j):
        return self.indices[j]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.int64).reshape(len(self), self.d)

    @property
    def degrees(self) -> np.ndarray:
        return self.array.sum(axis=1)

    def position(self, n) -> int:
        return self._lookup()[tuple(int(v) for v in n)]

    def _lookup(self) -> dict:
        cache = self.__dict__.get("_pos")
        if cache is None:
            cache = {n: j for j, n in enumerate(self.indices)}
            object.__setattr__(self, "_pos", cache)
        return cache


def _compositions(total: int, parts: int):
    """Tuples of `parts` non-negative ints summing to `total`, lexicographically descending."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def multi_indices(d: int, q: int) -> MultiIndexSet:
    if not 1 <= d <= 16:
        raise ValueError(f"d must be in [1, 16], got {d}")
    if not 0 <= q <= 12:
        raise ValueError(f"q must be in [0, 12], got {q}")
    idx = tuple(itertools.chain.from_iterable(_compositions(k, d) for k in range(q + 1)))
    assert len(idx) == math.comb(d + q, d)
    return MultiIndexSet(d, q, idx)


def eval_monomials(x, x0, idx: MultiIndexSet) -> np.ndarray:
    """Centred monomials m(x | x0). Accepts a single point or an (n, d) array."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    single = x.ndim == 1
    z = np.atleast_2d(x - x0)
    if z.shape[1] != idx.d:
        raise ValueError(f"expected {idx.d} coordinates, got {z.shape[1]}")
    powers = z[:, :, None] ** np.arange(idx.q + 1)[None, None, :]  # (n, d, q+1)
    exps = idx.array
    out = np.ones((z.shape[0], len(idx)))
    for k in range(idx.d):
        out *= powers[:, k, exps[:, k]]
    return out[0] if single else out


def scaling_matrix(h: float, idx: MultiIndexSet) -> np.ndarray:
    if h <= 0:
        raise ValueError("h must be positive")
    return np.diag(float(h) ** (-idx.degrees.astype(float)))


def expansion_matrix(alphas, q: int, idx: MultiIndexSet) -> np.ndarray:
    """Coefficients B with [(1, z) alpha_j]^q = sum_n B[j, n] z^n."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (len(idx), idx.d + 1):
        raise ValueError(f"need {len(idx)} direction vectors of length {idx.d + 1}")
    exps = idx.array
    r0 = q - exps.sum(axis=1)
    if np.any(r0 < 0):
        raise ValueError("index set degree exceeds q")
    multinom = np.array(
        [
            math.factorial(q)
            // (math.factorial(int(r0[n])) * math.prod(math.factorial(int(v)) for v in exps[n]))
            for n in range(len(idx))
        ],
        dtype=float,
    )
    B = multinom[None, :] * alphas[:, [0]] ** r0[None, :]
    for k in range(idx.d):
        B *= alphas[:, [k + 1]] ** exps[None, :, k]
    return B


@dataclass(frozen=True)
class RotationPair:
    B: np.ndarray
    D: np.ndarray
    cond: float


def rotation_matrix(B) -> RotationPair:
    """Invert B via a pivoted LU solve, refusing ill-conditioned bases."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("B must be square")
    cond = float(np.linalg.cond(B))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularBasisError(f"expansion matrix is singular (cond={cond:.3g})")
    D = np.linalg.solve(B, np.eye(B.shape[0]))
    if np.max(np.abs(D @ B - np.eye(B.shape[0]))) >= 1e-8:
        raise SingularBasisError("inverse of expansion matrix failed the identity check")
    return RotationPair(B, D, cond)


def moment_matrix(idx: MultiIndexSet) -> np.ndarray:
    """Integral of m(x|0) m(x|0)^T over [-1, 1]^d, in closed form."""
    exps = idx.array
    total = exps[:, None, :] + exps[None, :, :]
    per_axis = np.where(total % 2 == 0, 2.0 / (total + 1.0), 0.0)
    return per_axis.prod(axis=2)
