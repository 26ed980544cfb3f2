"""Pure numpy implementations of the inner kernels.

These define the reference semantics; ``_ckernels.pyx`` mirrors them
loop-for-loop and the test-suite checks the two against each other.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf, erfc, expit

SQUASHER = 0
ERF_ACT = 1
PROBIT = 0
LOGISTIC = 1

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def feature_matrix(Z, pis, gamma, act=SQUASHER):
    """Network features for centred inputs.

    Z : (n, d) offsets x - x0; pis : (d_q*(q+1), d+1) neuron affine parameters
    laid out block-wise per direction; gamma : (q+1,) output weights.
    Returns (n, d_q) with column j = sum_k gamma_k * sigma([1, z] . pi_{j,k}).
    """
    Z = np.ascontiguousarray(Z, dtype=float)
    pis = np.ascontiguousarray(pis, dtype=float)
    gamma = np.ascontiguousarray(gamma, dtype=float)
    nq = gamma.shape[0]
    dq = pis.shape[0] // nq
    args = pis[:, 0][None, :] + Z @ pis[:, 1:].T
    act_vals = expit(args) if act == SQUASHER else 0.5 * (1.0 + erf(args))
    return act_vals.reshape(Z.shape[0], dq, nq) @ gamma


def link_values(s, link):
    """Return (cdf, survival, pdf, pdf') of the link at s."""
    s = np.asarray(s, dtype=float)
    if link == PROBIT:
        cdf = 0.5 * erfc(-s * _INV_SQRT2)
        sf = 0.5 * erfc(s * _INV_SQRT2)
        pdf = _INV_SQRT2PI * np.exp(-0.5 * s * s)
        dpdf = -s * pdf
    else:
        cdf = expit(s)
        sf = expit(-s)
        pdf = cdf * sf
        dpdf = pdf * (sf - cdf)
    return cdf, sf, pdf, dpdf


def binary_cube_terms(F, y, theta, link, clamp):
    """Log-likelihood, score, and analytic Hessian for one cube.

    Returns (loglik, score (d_q,), hessian (d_q, d_q), n_clamped).
    """
    F = np.ascontiguousarray(F, dtype=float)
    y = np.asarray(y, dtype=float)
    s = F @ np.asarray(theta, dtype=float)
    cdf, sf, pdf, dpdf = link_values(s, link)
    n_clamped = int(np.count_nonzero((cdf < clamp) | (sf < clamp)))
    cdf = np.clip(cdf, clamp, 1.0 - clamp)
    sf = np.clip(sf, clamp, 1.0 - clamp)
    loglik = float(np.sum(y * np.log(cdf) + (1.0 - y) * np.log(sf)))
    v = cdf * sf
    resid = y - cdf
    w1 = resid * pdf / v
    w2 = -pdf * pdf / v + resid * dpdf / v - resid * pdf * pdf * (sf - cdf) / (v * v)
    score = F.T @ w1
    hess = (F * w2[:, None]).T @ F
    hess = 0.5 * (hess + hess.T)
    return loglik, score, hess, n_clamped


def product_kernel_weights(X, x0, h, kernel):
    """Product-kernel weights, shape (n_eval, n_obs). kernel 0=uniform, 1=epanechnikov."""
    X = np.asarray(X, dtype=float)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    U = (X[None, :, :] - x0[:, None, :]) / h
    inside = np.abs(U) <= 1.0
    if kernel == 0:
        k = np.where(inside, 0.5, 0.0)
    else:
        k = np.where(inside, 0.75 * (1.0 - U * U), 0.0)
    return k.prod(axis=2)
