"""Sigmoidal activations and their exact higher-order derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import erf, eval_hermite, expit

__all__ = [
    "ActivationKind",
    "ActivationSpec",
    "InvalidExpansionPoint",
    "ValidationReport",
    "stirling2",
    "sigmoid",
    "sigmoid_derivative",
    "validate_u_sigma",
]

DERIVATIVE_TOL = 1e-10
STIRLING_MAX_N = 64


class ActivationKind(str, Enum):
    SQUASHER = "sigmoidal-squasher"
    ERF = "error-function"


class InvalidExpansionPoint(ValueError):
    """Raised when some derivative of the activation vanishes at ``u_sigma``."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        orders = ", ".join(str(k) for k in report.failed_orders)
        super().__init__(
            f"activation derivative(s) of order {orders} vanish at u_sigma={report.u_sigma}"
        )


@dataclass(frozen=True)
class ValidationReport:
    u_sigma: float
    q: int
    derivatives: tuple[float, ...]  # orders 1..q
    failed_orders: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.failed_orders


@dataclass(frozen=True)
class ActivationSpec:
    """Activation function together with its expansion point.

    Construction fails with :class:`InvalidExpansionPoint` unless every
    derivative of order ``1..q`` is nonzero at ``u_sigma``.
    """

    kind: ActivationKind = ActivationKind.SQUASHER
    u_sigma: float = -0.5
    q: int = 3
    report: ValidationReport = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ActivationKind(self.kind))
        if self.q < 0:
            raise ValueError("q must be non-negative")
        report = validate_u_sigma(self.kind, self.u_sigma, self.q)
        if not report.ok:
            raise InvalidExpansionPoint(report)
        object.__setattr__(self, "report", report)

    def __call__(self, x):
        return sigmoid(x, self.kind)


@lru_cache(maxsize=None)
def _stirling_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _stirling_row(n - 1)
    row = [0] * (n + 1)
    for k in range(1, n + 1):
        left = prev[k] if k < len(prev) else 0
        row[k] = k * left + prev[k - 1]
    return tuple(row)


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind S(n, k), exact integer arithmetic."""
    if not (isinstance(n, (int, np.integer)) and isinstance(k, (int, np.integer))):
        raise TypeError("n and k must be integers")
    if n < 0 or k < 0 or n > STIRLING_MAX_N:
        raise ValueError(f"stirling2 requires 0 <= n <= {STIRLING_MAX_N} and k >= 0")
    if k > n:
        return 0
    return _stirling_row(int(n))[int(k)]


def sigmoid(x, kind: ActivationKind | str = ActivationKind.SQUASHER):
    kind = ActivationKind(kind)
    if kind is ActivationKind.SQUASHER:
        return expit(x)
    return 0.5 * (1.0 + erf(x))


def sigmoid_derivative(x, n: int, spec: ActivationSpec | ActivationKind | str = ActivationKind.SQUASHER):
    """n-th derivative of the activation at ``x`` (scalar or array).

    The squasher uses the polynomial in sigma(x) with Stirling-number
    coefficients; the error-function activation uses Hermite polynomials.
    """
    if isinstance(spec, ActivationSpec):
        if n > spec.q + 1:
            raise ValueError(f"derivative order {n} exceeds q+1={spec.q + 1}")
        kind = spec.kind
    else:
        kind = ActivationKind(spec)
    if n < 0:
        raise ValueError("derivative order must be non-negative")
    if n == 0:
        return sigmoid(x, kind)
    if kind is ActivationKind.ERF:
        x = np.asarray(x, dtype=float)
        out = (-1) ** (n - 1) * eval_hermite(n - 1, x) * np.exp(-x * x) / math.sqrt(math.pi)
        return out[()] if out.ndim == 0 else out
    s = expit(np.asarray(x, dtype=float))
    # Horner over powers sigma^1..sigma^(n+1)
    acc = np.zeros_like(s)
    for k in range(n + 1, 0, -1):
        coef = (-1) ** (k + 1) * math.factorial(k - 1) * stirling2(n + 1, k)
        acc = (acc + coef) * s
    return acc[()] if acc.ndim == 0 else acc


def validate_u_sigma(
    spec: ActivationSpec | ActivationKind | str,
    u_sigma: float | None = None,
    q: int | None = None,
) -> ValidationReport:
    """Check that derivatives of order 1..q are nonzero at the expansion point.

    Accepts either a constructed spec or ``(kind, u_sigma, q)`` so that invalid
    combinations can be inspected without raising.
    """
    if isinstance(spec, ActivationSpec):
        kind, u_sigma, q = spec.kind, spec.u_sigma, spec.q
    else:
        kind = ActivationKind(spec)
        if u_sigma is None or q is None:
            raise TypeError("u_sigma and q are required when passing an activation kind")
    derivs = tuple(float(sigmoid_derivative(u_sigma, k, kind)) for k in range(1, q + 1))
    failed = tuple(k for k, v in enumerate(derivs, start=1) if abs(v) <= DERIVATIVE_TOL)
    return ValidationReport(float(u_sigma), int(q), derivs, failed)
