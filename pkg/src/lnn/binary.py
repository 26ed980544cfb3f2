"""Maximum-likelihood estimation of the binary-outcome model and the
score-based wild bootstrap."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .architecture import OUTSIDE, Architecture
from .bands import STAGE_BIN_BOOT, Bands, Flag, draw_multipliers, map_chunks, quantile_band
from .data import DataError, Dataset
from .regress import FitError, _group_rows, fit_regression, predict_many

__all__ = [
    "LinkSpec",
    "NewtonOptions",
    "ConvergenceRecord",
    "FittedBinary",
    "log_likelihood",
    "score",
    "hessian",
    "fit_binary",
    "predict_prob",
    "predict_prob_many",
    "score_bootstrap",
]

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-12
_LINK_CODES = {"probit": _backend.PROBIT, "logistic": _backend.LOGISTIC}


@dataclass(frozen=True)
class LinkSpec:
    """Known CDF of the latent error with its density and density slope."""

    kind: str = "probit"

    def __post_init__(self):
        if self.kind not in _LINK_CODES:
            raise ValueError(f"unknown link {self.kind!r}")
        # the density must be the derivative of the CDF on a probe grid
        probe = np.linspace(-4, 4, 17)
        step = 1e-5
        fd = (self.cdf(probe + step) - self.cdf(probe - step)) / (2 * step)
        if not np.allclose(fd, self.pdf(probe), rtol=1e-6, atol=1e-9):
            raise ValueError("link pdf is not the derivative of its cdf")

    @property
    def code(self) -> int:
        return _LINK_CODES[self.kind]

    def values(self, s):
        return _backend.link_values(s, self.code)

    def cdf(self, s):
        return self.values(s)[0]

    def pdf(self, s):
        return self.values(s)[2]

    def pdf_derivative(self, s):
        return self.values(s)[3]


def _link(link) -> LinkSpec:
    if isinstance(link, LinkSpec):
        return link
    return LinkSpec(link or "probit")


@dataclass(frozen=True)
class NewtonOptions:
    max_iter: int = 100
    max_halvings: int = 30
    grad_tol: float = 1e-8
    step_tol: float = 1e-12
    theta_cap: float = 1e3
    mu_start: float = 1e-6
    mu_growth: float = 10.0


@dataclass
class ConvergenceRecord:
    iterations: int
    grad_norm: float
    status: Flag
    loglik: float
    history: list = field(default_factory=list)
    n_clamped: int = 0


@dataclass(frozen=True, eq=False)
class FittedBinary:
    arch: Architecture
    thetas: np.ndarray
    records: tuple
    link: LinkSpec
    counts: np.ndarray
    groups: tuple = field(repr=False, default=())

    @property
    def flags(self) -> np.ndarray:
        return np.array([int(r.status) for r in self.records])

    @property
    def sigma_eps2(self):
        return None


def _check_labels(y):
    if not np.all((y == 0) | (y == 1)):
        raise DataError("binary responses must be 0 or 1")


def _cube_rows(data: Dataset, arch: Architecture):
    cubes, F = arch.design(data.X)
    groups = _group_rows(np.where(cubes == OUTSIDE, arch.n_cubes, cubes), arch.n_cubes)
    return F, groups


def _terms(F, y, theta, link: LinkSpec):
    return _backend.binary_cube_terms(F, y, theta, link.code, PROB_CLAMP)


def log_likelihood(thetas, data: Dataset, arch: Architecture, link="probit") -> float:
    """Sum over in-domain observations of (1-y) log(1-Phi(s)) + y log Phi(s)."""
    link = _link(link)
    _check_labels(data.y)
    F, groups = _cube_rows(data, arch)
    thetas = np.asarray(thetas, dtype=float)
    total = 0.0
    for i, rows in enumerate(groups):
        if len(rows):
            total += _terms(F[rows], data.y[rows], thetas[i], link)[0]
    return total


def score(theta_i, data: Dataset, cube: int, arch: Architecture, link="probit") -> np.ndarray:
    link = _link(link)
    F, groups = _cube_rows(data, arch)
    rows = groups[cube]
    if len(rows) == 0:
        return np.zeros(arch.dq)
    return _terms(F[rows], data.y[rows], theta_i, link)[1]


def hessian(theta_i, data: Dataset, cube: int, arch: Architecture, link="probit") -> np.ndarray:
    link = _link(link)
    F, groups = _cube_rows(data, arch)
    rows = groups[cube]
    if len(rows) == 0:
        return np.zeros((arch.dq, arch.dq))
    return _terms(F[rows], data.y[rows], theta_i, link)[2]


def obs_scores(F, y, theta, link: LinkSpec) -> np.ndarray:
    """Per-observation score contributions, shape (n, d_q)."""
    s = F @ theta
    cdf, sf, pdf, _ = link.values(s)
    cdf = np.clip(cdf, PROB_CLAMP, 1 - PROB_CLAMP)
    sf = np.clip(sf, PROB_CLAMP, 1 - PROB_CLAMP)
    return ((y - cdf) * pdf / (cdf * sf))[:, None] * F


def _newton(F, y, theta0, link: LinkSpec, opts: NewtonOptions) -> tuple[np.ndarray, ConvergenceRecord]:
    """Damped Newton ascent with step halving and a Levenberg shift."""
    theta = np.array(theta0, dtype=float)
    ll, g, Hn, n_cl = _terms(F, y, theta, link)
    history = [ll]
    dq = theta.shape[0]
    status = Flag.MAX_ITER
    it = 0
    for it in range(1, opts.max_iter + 1):
        gnorm = float(np.max(np.abs(g))) / max(1.0, abs(ll))
        if gnorm < opts.grad_tol:
            status = Flag.OK
            it -= 1
            break
        A = -Hn
        mu = 0.0
        scale = max(np.trace(A) / dq, 1e-300) if np.isfinite(A).all() else 1.0
        while True:
            try:
                L = np.linalg.cholesky(A + mu * np.eye(dq))
                break
            except np.linalg.LinAlgError:
                mu = opts.mu_start * scale if mu == 0.0 else mu * opts.mu_growth
                if mu > 1e300:
                    raise
        step = np.linalg.solve(L.T, np.linalg.solve(L, g))
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            cand = theta + t * step
            ll_new = _terms(F, y, cand, link)[0]
            if ll_new >= ll:
                break
            t *= 0.5
        else:
            # no ascent along the direction: at the numerical optimum
            status = Flag.OK if gnorm < 1e-6 else Flag.MAX_ITER
            break
        theta = cand
        if np.linalg.norm(theta) > opts.theta_cap:
            theta *= opts.theta_cap / np.linalg.norm(theta)
            ll, g, Hn, n_cl = _terms(F, y, theta, link)
            history.append(ll)
            status = Flag.SEPARATED
            break
        ll, g, Hn, n_cl = _terms(F, y, theta, link)
        history.append(ll)
        if np.linalg.norm(t * step) < opts.step_tol:
            gnorm = float(np.max(np.abs(g))) / max(1.0, abs(ll))
            status = Flag.OK if gnorm < 1e-6 else Flag.MAX_ITER
            break
    gnorm = float(np.max(np.abs(g))) / max(1.0, abs(ll))
    return theta, ConvergenceRecord(it, gnorm, status, ll, history, n_cl)


def fit_binary(
    data: Dataset,
    arch: Architecture,
    link="probit",
    options: NewtonOptions | None = None,
    threads: int = 1,
) -> FittedBinary:
    """Per-cube likelihood maximisation warm-started at the least-squares fit of raw y.

    Cubes whose labels are all equal have no finite maximiser; they are
    pushed along the ascent direction until the norm cap and flagged
    ``SEPARATED``.
    """
    link = _link(link)
    opts = options or NewtonOptions()
    _check_labels(data.y)
    F, groups = _cube_rows(data, arch)
    if not any(len(g) and 0 < data.y[g].sum() < len(g) for g in groups):
        raise FitError("no cube contains both labels")
    warm = fit_regression(data, arch).thetas

    def solve(i):
        rows = groups[i]
        if len(rows) == 0:
            return np.full(arch.dq, np.nan), ConvergenceRecord(0, 0.0, Flag.EMPTY, 0.0)
        theta0 = np.nan_to_num(warm[i])
        theta, rec = _newton(F[rows], data.y[rows], theta0, link, opts)
        ysum = data.y[rows].sum()
        if ysum == 0 or ysum == len(rows):
            rec.status = Flag.SEPARATED
        return theta, rec

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, range(arch.n_cubes)))
    else:
        results = [solve(i) for i in range(arch.n_cubes)]
    thetas = np.array([r[0] for r in results]).reshape(arch.n_cubes, arch.dq)
    records = tuple(r[1] for r in results)
    counts = np.array([len(g) for g in groups])
    return FittedBinary(arch, thetas, records, link, counts, tuple(groups))


def _index_values(model: FittedBinary, X):
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


def predict_index(model: FittedBinary, X):
    """Estimates of g at the rows of X plus flags, as for the regression model."""
    return _index_values(model, np.atleast_2d(np.asarray(X, dtype=float)))


def predict_prob_many(model: FittedBinary, X, link=None):
    link = _link(link) if link is not None else model.link
    values, flags = predict_index(model, X)
    probs = np.full_like(values, np.nan)
    ok = np.isfinite(values)
    probs[ok] = link.cdf(values[ok])
    return probs, flags


def predict_prob(model: FittedBinary, x, link=None):
    probs, flags = predict_prob_many(model, np.asarray(x, dtype=float).reshape(1, -1), link)
    if flags[0] != Flag.OK:
        return Flag(int(flags[0]))
    return float(probs[0])


def _bootstrap_blocks(model: FittedBinary, data: Dataset, X_eval):
    """Per-cube maps eta -> ghat* - ghat, i.e. F_eval H^{-1} S^T."""
    arch = model.arch
    cubes_eval, F_eval = arch.design(X_eval)
    F_train, groups = _cube_rows(data, arch)
    blocks, singular = [], []
    for i in np.unique(cubes_eval[cubes_eval != OUTSIDE]):
        rec = model.records[i]
        if rec.status in (Flag.EMPTY,):
            continue
        rows = groups[i]
        Fi = F_train[rows]
        theta = model.thetas[i]
        S = obs_scores(Fi, data.y[rows], theta, model.link)
        Hn = _terms(Fi, data.y[rows], theta, model.link)[2]
        try:
            if np.linalg.cond(Hn) > 1e12:
                raise np.linalg.LinAlgError
            K = np.linalg.solve(Hn, S.T)
        except np.linalg.LinAlgError:
            singular.append(i)
            log.warning("cube %d: singular Hessian, excluded from the score bootstrap", i)
            continue
        e = np.flatnonzero(cubes_eval == i)
        blocks.append((e, rows, F_eval[e] @ K))
    return blocks, singular, cubes_eval


def score_bootstrap(
    model: FittedBinary,
    data: Dataset,
    R: int,
    seed: int,
    eval_points,
    level: float = 0.95,
    threads: int = 1,
    multipliers=None,
) -> Bands:
    """Closed-form score bootstrap: theta* = theta + H^{-1} sum_t score_t eta_t.

    No re-optimisation is done. Cubes with a singular Hessian are skipped and
    their evaluation points flagged ``SINGULAR``.
    """
    if R < 2:
        raise ValueError("R must be at least 2")
    X_eval = np.atleast_2d(np.asarray(eval_points, dtype=float))
    ghat, flags = predict_index(model, X_eval)
    blocks, singular, cubes_eval = _bootstrap_blocks(model, data, X_eval)
    draw = multipliers or (lambda reps, n: draw_multipliers(seed, STAGE_BIN_BOOT, reps, n))

    def run(reps):
        eta = draw(reps, data.T)
        out = np.zeros((X_eval.shape[0], len(reps)))
        for e, rows, G in blocks:
            out[e] = G @ eta[rows]
        return out

    deltas = map_chunks(run, R, threads)
    lo, hi, q_lo, q_hi = quantile_band(ghat, deltas, level)
    bad = np.isin(cubes_eval, singular) & (cubes_eval != OUTSIDE)
    flags = flags.copy()
    flags[bad] = int(Flag.SINGULAR)
    drop = bad | (flags == Flag.OUTSIDE) | (flags == Flag.EMPTY)
    for arr in (lo, hi, q_lo, q_hi):
        arr[drop] = np.nan
    return Bands(X_eval, ghat, lo, hi, flags, R, level, q_lo, q_hi)
