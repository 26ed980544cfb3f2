"""Construction of the predetermined localized network.

Everything here is data-independent except the number of cubes, which the
bandwidth rule ties to the sample size.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _backend
from .activation import ActivationKind, ActivationSpec, sigmoid_derivative
from .basis import (
    MultiIndexSet,
    expansion_matrix,
    multi_indices,
    rotation_matrix,
    scaling_matrix,
)

__all__ = [
    "OUTSIDE",
    "LnnConfig",
    "Architecture",
    "univariate_coeffs",
    "default_weight_matrix",
    "direction_vectors",
    "neuron_affine_params",
    "build_partition",
    "cube_index",
    "cube_indices",
    "feature_vector",
    "bandwidth_rule",
    "build_architecture",
    "network_for",
]

OUTSIDE = -1
BANDWIDTH_MODES = ("rule", "h", "cubes")
LINKS = ("probit", "logistic")


@dataclass(frozen=True)
class LnnConfig:
    """User-facing hyperparameters.

    ``bandwidth`` is ``("rule", None)`` for the sample-size rule,
    ``("h", value)`` for an explicit half-width (rounded so that a/h is an
    integer) or ``("cubes", M)`` for an explicit number of cubes per axis.
    """

    a: float = 3.0
    d: int = 2
    q: int = 3
    s: float = 1.0
    u_sigma: float = -0.5
    activation: ActivationKind = ActivationKind.SQUASHER
    bandwidth: tuple[str, float | None] = ("rule", None)
    weight_matrix: np.ndarray | None = field(default=None, compare=False)
    link: str = "probit"

    def __post_init__(self):
        object.__setattr__(self, "activation", ActivationKind(self.activation))
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.d < 1 or self.q < 1:
            raise ValueError("d and q must be positive integers")
        if not 0 < self.s <= 1:
            raise ValueError("s must lie in (0, 1]")
        mode, value = self.bandwidth
        if mode not in BANDWIDTH_MODES:
            raise ValueError(f"bandwidth mode must be one of {BANDWIDTH_MODES}")
        if mode != "rule" and (value is None or value <= 0):
            raise ValueError(f"bandwidth mode {mode!r} needs a positive value")
        if self.link not in LINKS:
            raise ValueError(f"link must be one of {LINKS}")
        # raises InvalidExpansionPoint
        ActivationSpec(self.activation, self.u_sigma, self.q)
        if self.weight_matrix is not None:
            W = np.array(self.weight_matrix, dtype=float)
            _check_weight_matrix(W, self.d, self.q)
            W.setflags(write=False)
            object.__setattr__(self, "weight_matrix", W)

    @property
    def p(self) -> float:
        return self.q + self.s

    @property
    def activation_spec(self) -> ActivationSpec:
        return ActivationSpec(self.activation, self.u_sigma, self.q)

    def to_dict(self) -> dict[str, Any]:
        mode, value = self.bandwidth
        return {
            "a": self.a,
            "d": self.d,
            "q": self.q,
            "s": self.s,
            "u_sigma": self.u_sigma,
            "activation": self.activation.value,
            "bandwidth": {"mode": mode, "value": value},
            "weight_matrix": None if self.weight_matrix is None else self.weight_matrix.tolist(),
            "link": self.link,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], **overrides) -> "LnnConfig":
        data = {**data, **overrides}
        bw = data.get("bandwidth", {"mode": "rule", "value": None})
        if isinstance(bw, dict):
            bw = (bw.get("mode", "rule"), bw.get("value"))
        return cls(
            a=float(data.get("a", 3.0)),
            d=int(data["d"]),
            q=int(data.get("q", 3)),
            s=float(data.get("s", 1.0)),
            u_sigma=float(data.get("u_sigma", -0.5)),
            activation=data.get("activation", ActivationKind.SQUASHER.value),
            bandwidth=tuple(bw),
            weight_matrix=data.get("weight_matrix"),
            link=data.get("link", "probit"),
        )


def _check_weight_matrix(W: np.ndarray, d: int, q: int) -> None:
    dq = math.comb(d + q, d)
    if W.shape != (d + 1, dq):
        raise ValueError(f"weight matrix must be {(d + 1, dq)}, got {W.shape}")
    if np.max(np.linalg.norm(W, axis=0)) > math.sqrt(d + 1) * (1 + 1e-12):
        raise ValueError("weight matrix columns must have norm <= sqrt(d+1)")
    if len({tuple(col) for col in W.T.round(14)}) != dq:
        raise ValueError("weight matrix columns must be distinct")


def univariate_coeffs(q: int, u_sigma: float, activation=ActivationKind.SQUASHER):
    """Output weights gamma and slopes beta of the q+1 neurons reproducing z**q."""
    spec = ActivationSpec(activation, u_sigma, q)
    dq_val = float(sigmoid_derivative(u_sigma, q, spec))
    k = np.arange(1, q + 2)
    gamma = np.array(
        [(-1) ** (q + kk - 1) * math.comb(q, kk - 1) / dq_val for kk in k], dtype=float
    )
    beta = (k - 1).astype(float)
    return gamma, beta


def default_weight_matrix(d: int, q: int, idx: MultiIndexSet | None = None) -> np.ndarray:
    """Scaled exponent vectors of the terms of (1 + x_1 + ... + x_d)^q.

    Column j is aligned with the j-th multi-index n_j: (q - |n_j|, n_j).
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    idx = idx or multi_indices(d, q)
    exps = idx.array
    R = np.column_stack([q - exps.sum(axis=1), exps]).T.astype(float)
    return math.sqrt(d + 1) / q * R


def direction_vectors(W, h: float) -> np.ndarray:
    """Rows alpha_j = diag(h, 1, ..., 1) w_j / (d+1)."""
    W = np.asarray(W, dtype=float)
    scale = np.ones(W.shape[0])
    scale[0] = h
    return (scale[:, None] * W / W.shape[0]).T


def neuron_affine_params(alphas, beta, u_sigma: float) -> np.ndarray:
    """Rows pi_{(j, k)} = beta_k alpha_j + (u_sigma, 0, ..., 0), block per direction."""
    alphas = np.asarray(alphas, dtype=float)
    beta = np.asarray(beta, dtype=float)
    pis = (alphas[:, None, :] * beta[None, :, None]).reshape(-1, alphas.shape[1])
    pis[:, 0] += u_sigma
    return pis


def build_partition(a: float, M: int, d: int = 1):
    """Half-width h = a/M and the M**d cube centres in row-major order."""
    if M < 1:
        raise ValueError("M must be at least 1")
    h = a / M
    coords = -a + h * (2 * np.arange(M) + 1)
    centers = np.array(list(itertools.product(coords, repeat=d)), dtype=float)
    return h, centers


def cube_indices(X, a: float, M: int) -> np.ndarray:
    """Flat cube index per row of X, or OUTSIDE for points off [-a, a]^d.

    Bins are half-open so shared faces go to the upper cube; x = a lands in
    the last bin.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    h = a / M
    inside = np.all(np.abs(X) <= a, axis=1)
    bins = np.clip(np.floor((X + a) / (2 * h)).astype(np.int64), 0, M - 1)
    weights = M ** np.arange(X.shape[1] - 1, -1, -1, dtype=np.int64)
    flat = bins @ weights
    return np.where(inside, flat, OUTSIDE)


def cube_index(x, arch_or_a, M: int | None = None) -> int:
    if isinstance(arch_or_a, Architecture):
        a, M = arch_or_a.config.a, arch_or_a.M
    else:
        a = arch_or_a
    return int(cube_indices(np.asarray(x, dtype=float).reshape(1, -1), a, M)[0])


def bandwidth_rule(T: int, d: int, p: float, a: float):
    """h = a/M with M the integer closest to a / (2.5 T^(-1/(d + 2p - 0.5)))."""
    if T < 2:
        raise ValueError("bandwidth rule needs T >= 2")
    h1 = 2.5 * T ** (-1.0 / (d + 2.0 * p - 0.5))
    M = max(1, math.floor(a / h1 + 0.5))
    return a / M, M


@dataclass(frozen=True, eq=False)
class Architecture:
    config: LnnConfig
    idx: MultiIndexSet
    gamma: np.ndarray
    beta: np.ndarray
    W: np.ndarray
    alphas: np.ndarray
    pis: np.ndarray
    M: int
    h: float
    centers: np.ndarray
    B: np.ndarray
    D: np.ndarray
    cond: float
    H: np.ndarray

    @property
    def d(self) -> int:
        return self.config.d

    @property
    def q(self) -> int:
        return self.config.q

    @property
    def dq(self) -> int:
        return len(self.idx)

    @property
    def n_cubes(self) -> int:
        return self.M**self.d

    @property
    def n_neurons(self) -> int:
        return self.n_cubes * self.dq * (self.q + 1)

    def cube_of(self, X) -> np.ndarray:
        return cube_indices(X, self.config.a, self.M)

    def features(self, X, center) -> np.ndarray:
        """Feature rows for points X relative to a single centre."""
        Z = np.atleast_2d(np.asarray(X, dtype=float)) - np.asarray(center, dtype=float)
        act = 0 if self.config.activation is ActivationKind.SQUASHER else 1
        return _backend.feature_matrix(Z, self.pis, self.gamma, act)

    def design(self, X):
        """Cube membership plus per-row features relative to each row's own cube.

        Rows outside the domain get zero features.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cubes = self.cube_of(X)
        F = np.zeros((X.shape[0], self.dq))
        ok = cubes != OUTSIDE
        if ok.any():
            F[ok] = self.features(X[ok] - self.centers[cubes[ok]], np.zeros(self.d))
        return cubes, F


def feature_vector(x, cube_center, arch: Architecture) -> np.ndarray:
    """x-tilde for a point (or rows of points) in the cube around ``cube_center``."""
    x = np.asarray(x, dtype=float)
    F = arch.features(x, cube_center)
    return F[0] if x.ndim == 1 else F


def build_architecture(config: LnnConfig, T: int | None = None, *, M: int | None = None) -> Architecture:
    """Assemble every predetermined quantity of the network.

    The number of cubes comes from ``M`` if given, else from the config's
    bandwidth mode (the rule needs ``T``).
    """
    if M is None:
        mode, value = config.bandwidth
        if mode == "rule":
            if T is None:
                raise ValueError("the bandwidth rule needs the sample size T")
            _, M = bandwidth_rule(T, config.d, config.p, config.a)
        elif mode == "h":
            M = max(1, math.floor(config.a / value + 0.5))
        else:
            M = int(value)
    h, centers = build_partition(config.a, M, config.d)
    return network_for(config, h, centers, M)


def network_for(config: LnnConfig, h: float, centers, M: int = 1) -> Architecture:
    """Network with half-width ``h`` around the given centres."""
    idx = multi_indices(config.d, config.q)
    gamma, beta = univariate_coeffs(config.q, config.u_sigma, config.activation)
    if config.weight_matrix is not None:
        W = config.weight_matrix
    else:
        W = default_weight_matrix(config.d, config.q, idx)
    alphas = direction_vectors(W, h)
    pis = neuron_affine_params(alphas, beta, config.u_sigma)
    rot = rotation_matrix(expansion_matrix(alphas, config.q, idx))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    for arr in (gamma, beta, W, alphas, pis, centers, rot.B, rot.D):
        arr.setflags(write=False)
    return Architecture(
        config=config,
        idx=idx,
        gamma=gamma,
        beta=beta,
        W=W,
        alphas=alphas,
        pis=pis,
        M=int(M),
        h=float(h),
        centers=centers,
        B=rot.B,
        D=rot.D,
        cond=rot.cond,
        H=scaling_matrix(h, idx),
    )
