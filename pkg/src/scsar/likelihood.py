"""
Gaussian likelihoods and ML fits for the OLS, SAR, SEM and SLX families.

The spatial families are fitted by profiling: for a fixed spatial parameter
the coefficients and variance have closed forms, leaving a smooth scalar
problem on the admissible interval. The log-determinant comes from the
cached spectrum of W, ``log|I - rho W| = sum(log(1 - rho * eig))``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .errors import (
    IndexOutOfRange,
    MinVariance,
    NotApplicable,
    RankDeficientDesign,
    SingularHessian,
    SpatialParamOutOfRange,
    TooFewUnits,
)
from .weights import SpatialWeights, spectrum

__all__ = [
    "Family",
    "ClusterFit",
    "admissible_interval",
    "log_det",
    "loglik_ols",
    "loglik_sar",
    "loglik_sem",
    "loglik_slx",
    "fit",
    "fit_ols",
    "fit_sar",
    "fit_sem",
    "fit_slx",
    "concentrated_loglik",
    "unit_logliks",
    "unit_loglik",
    "std_errors",
    "lr_test",
    "min_units",
]

LOG_2PI = math.log(2.0 * math.pi)
MIN_VARIANCE = 1e-12
INTERVAL_MARGIN = 1e-6


class Family(str, enum.Enum):
    OLS = "ols"
    SAR = "sar"
    SEM = "sem"
    SLX = "slx"

    @property
    def spatial(self) -> bool:
        return self in (Family.SAR, Family.SEM)

    def __str__(self):
        return self.value


@dataclass(eq=False)
class ClusterFit:
    """
    Estimates for one family on one sample.

    ``theta`` holds the regression coefficients; for SLX it is ``2P`` long
    (own effects then lag effects) and ``dropped`` lists lag entries that
    were not estimated and are fixed at 0. ``std_errors`` is ordered
    ``[spatial_param, *theta]`` for SAR/SEM and ``theta`` otherwise.
    """

    family: Family
    spatial_param: float
    theta: np.ndarray
    sigma2: float
    loglik: float
    loglik_linear: float
    n_units: int
    logdet: float = 0.0
    std_errors: np.ndarray | None = None
    pinned: bool = False
    dropped: tuple = ()
    interval: tuple = (0.0, 0.0)

    @property
    def n_coef(self) -> int:
        return len(self.theta) - len(self.dropped)

    @property
    def n_params(self) -> int:
        """Free parameters including the variance."""
        return self.n_coef + 1 + int(self.family.spatial and not self.pinned)

    @property
    def aic(self) -> float:
        return 2.0 * self.n_params - 2.0 * self.loglik

    @property
    def aic_linear(self) -> float:
        k = self.n_params - int(self.family.spatial and not self.pinned)
        return 2.0 * k - 2.0 * self.loglik_linear

    @property
    def theta_se(self):
        if self.std_errors is None:
            return None
        return self.std_errors[1:] if self.family.spatial else self.std_errors

    @property
    def spatial_se(self):
        if self.std_errors is None or not self.family.spatial:
            return None
        return float(self.std_errors[0])


def min_units(family: Family, p: int) -> int:
    family = Family(family)
    if family is Family.OLS:
        return p + 2
    if family is Family.SLX:
        return 2 * p + 2
    return p + 3


# -- log-determinant and admissible interval ---------------------------------


def admissible_interval(w: SpatialWeights, margin: float = INTERVAL_MARGIN):
    """Closed search interval strictly inside ``(1/eig_min, 1/eig_max)``.

    Returns ``(0.0, 0.0)`` for an edgeless graph.
    """
    if w.n_edges == 0:
        return 0.0, 0.0
    ev = spectrum(w)
    return (1.0 - margin) / ev[0], (1.0 - margin) / ev[-1]


def log_det(w: SpatialWeights, rho: float) -> float:
    """``log|det(I - rho W)|`` from the spectrum; raises outside the admissible range."""
    if rho == 0.0 or w.n_edges == 0:
        return 0.0
    a = 1.0 - rho * spectrum(w)
    if np.any(a <= 0.0):
        raise SpatialParamOutOfRange(
            f"spatial parameter {rho!r} outside ({1 / spectrum(w)[0]:.6g}, {1 / spectrum(w)[-1]:.6g})"
        )
    return float(np.sum(np.log(a)))


# -- log-likelihoods ----------------------------------------------------------


def _gauss(n, sigma2, rss):
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    return -0.5 * n * (LOG_2PI + math.log(sigma2)) - rss / (2.0 * sigma2)


def loglik_ols(y, X, theta, sigma2) -> float:
    e = np.asarray(y, float) - np.asarray(X, float) @ np.asarray(theta, float)
    return _gauss(len(e), sigma2, float(e @ e))


def loglik_sar(y, X, w: SpatialWeights, rho, theta, sigma2) -> float:
    """Exact SAR log-likelihood at ``(rho, theta, sigma2)``."""
    y = np.asarray(y, float)
    ld = log_det(w, rho)
    e = y - rho * w.lag(y) - np.asarray(X, float) @ np.asarray(theta, float)
    return _gauss(len(y), sigma2, float(e @ e)) + ld


def loglik_sem(y, X, w: SpatialWeights, lam, theta, sigma2) -> float:
    """Exact SEM log-likelihood: spatially filtered residuals plus log-determinant."""
    ld = log_det(w, lam)
    u = np.asarray(y, float) - np.asarray(X, float) @ np.asarray(theta, float)
    e = u - lam * w.lag(u)
    return _gauss(len(u), sigma2, float(e @ e)) + ld


def loglik_slx(y, X, w: SpatialWeights, beta, theta_lag, sigma2) -> float:
    X = np.asarray(X, float)
    e = np.asarray(y, float) - X @ np.asarray(beta, float) - w.lag(X) @ np.asarray(theta_lag, float)
    return _gauss(len(e), sigma2, float(e @ e))


# -- fitting ------------------------------------------------------------------


def _check_design(X, n_min, what="design"):
    n, p = X.shape
    if n < n_min:
        raise TooFewUnits(f"{n} units, at least {n_min} needed")
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0) or np.linalg.matrix_rank(X / norms) < p:
        raise RankDeficientDesign(f"{what} matrix ({n}x{p}) is not of full column rank")


def _lstsq(X, y):
    return np.linalg.lstsq(X, y, rcond=None)[0]


def _check_variance(sigma2):
    if sigma2 < MIN_VARIANCE:
        raise MinVariance(f"residual variance {sigma2:.3g} below {MIN_VARIANCE:g}")


def _ols_core(y, X):
    theta = _lstsq(X, y)
    e = y - X @ theta
    rss = float(e @ e)
    sigma2 = rss / len(y)
    _check_variance(sigma2)
    return theta, sigma2, _gauss(len(y), sigma2, rss)


def _polish(deriv, x, lo, hi):
    """Refine an interior maximiser by bracketing the root of its derivative."""
    d0 = deriv(x)
    if d0 == 0.0:
        return x
    step = 1e-9 * max(hi - lo, 1e-12)
    direction = 1.0 if d0 > 0 else -1.0
    while step < hi - lo:
        z = x + direction * step
        if not lo <= z <= hi:
            return x
        if np.sign(deriv(z)) != np.sign(d0):
            a, b = sorted((x, z))
            return optimize.brentq(deriv, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        step *= 8.0
    return x


def _maximize(fun, deriv, lo, hi):
    res = optimize.minimize_scalar(
        lambda r: -fun(r), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
    )
    x = _polish(deriv, float(res.x), lo, hi)
    # the non-spatial point is always admissible; never return less than it
    if fun(0.0) > fun(x):
        x = 0.0
    return x


def concentrated_loglik(family, y, X, w: SpatialWeights):
    """
    Return ``(loglik_c, derivative)`` callables of the spatial parameter.

    Only defined for SAR and SEM.
    """
    family = Family(family)
    y = np.asarray(y, float)
    X = np.asarray(X, float)
    n = len(y)
    ev = spectrum(w)
    const = -0.5 * n * (LOG_2PI + 1.0)

    def ld(r):
        a = 1.0 - r * ev
        if np.any(a <= 0):
            return -np.inf
        return float(np.sum(np.log(a)))

    def dld(r):
        return float(-np.sum(ev / (1.0 - r * ev)))

    if family is Family.SAR:
        wy = w.lag(y)
        e0 = y - X @ _lstsq(X, y)
        e1 = wy - X @ _lstsq(X, wy)

        def rss(r):
            e = e0 - r * e1
            return float(e @ e)

        def loglik(r):
            return const - 0.5 * n * math.log(rss(r) / n) + ld(r)

        def deriv(r):
            e = e0 - r * e1
            return n * float(e @ e1) / float(e @ e) + dld(r)

    elif family is Family.SEM:
        wy = w.lag(y)
        wx = w.lag(X)

        def resid(r):
            xs = X - r * wx
            th = _lstsq(xs, y - r * wy)
            u = y - X @ th
            return u, u - r * w.lag(u)

        def loglik(r):
            e = resid(r)[1]
            return const - 0.5 * n * math.log(float(e @ e) / n) + ld(r)

        def deriv(r):
            u, e = resid(r)
            return n * float(e @ w.lag(u)) / float(e @ e) + dld(r)

    else:
        raise NotApplicable(f"no concentrated likelihood for family {family}")
    return loglik, deriv


def fit_ols(y, X, compute_se: bool = True) -> ClusterFit:
    """Closed-form OLS with the ML variance ``RSS / N``."""
    y = np.asarray(y, float)
    X = np.asarray(X, float)
    _check_design(X, X.shape[1] + 2)
    theta, sigma2, ll = _ols_core(y, X)
    f = ClusterFit(Family.OLS, 0.0, theta, sigma2, ll, ll, len(y))
    if compute_se:
        f.std_errors = std_errors(f, y, X)
    return f


def _fit_profiled(family, y, X, w, compute_se):
    y = np.asarray(y, float)
    X = np.asarray(X, float)
    n, p = X.shape
    if w.n != n:
        raise ValueError(f"weights cover {w.n} units, data has {n}")
    _check_design(X, p + 3)
    _, _, ll_lin = _ols_core(y, X)
    if w.n_edges == 0:
        theta, sigma2, _ = _ols_core(y, X)
        f = ClusterFit(family, 0.0, theta, sigma2, ll_lin, ll_lin, n, pinned=True)
    else:
        lo, hi = admissible_interval(w)
        fun, deriv = concentrated_loglik(family, y, X, w)
        r = _maximize(fun, deriv, lo, hi)
        if family is Family.SAR:
            theta = _lstsq(X, y - r * w.lag(y))
            e = y - r * w.lag(y) - X @ theta
        else:
            theta = _lstsq(X - r * w.lag(X), y - r * w.lag(y))
            u = y - X @ theta
            e = u - r * w.lag(u)
        sigma2 = float(e @ e) / n
        _check_variance(sigma2)
        ld = log_det(w, r)
        ll = _gauss(n, sigma2, float(e @ e)) + ld
        if r == 0.0:
            ll = ll_lin
        f = ClusterFit(family, r, theta, sigma2, ll, ll_lin, n, logdet=ld, interval=(lo, hi))
    if compute_se:
        f.std_errors = std_errors(f, y, X, w)
    return f


def fit_sar(y, X, w: SpatialWeights, compute_se: bool = True) -> ClusterFit:
    """ML fit of ``y = rho W y + X theta + e`` by profiling over ``rho``."""
    return _fit_profiled(Family.SAR, y, X, w, compute_se)


def fit_sem(y, X, w: SpatialWeights, compute_se: bool = True) -> ClusterFit:
    """ML fit of ``y = X theta + u, u = lambda W u + e`` by profiling over ``lambda``."""
    return _fit_profiled(Family.SEM, y, X, w, compute_se)


def _slx_design(X, w, keep_intercept_lag=False):
    p = X.shape[1]
    wx = w.lag(X)
    keep = []
    for j in range(p):
        if not keep_intercept_lag and np.all(X[:, j] == 1.0):
            continue
        if not np.any(wx[:, j]):
            continue
        keep.append(j)
    dropped = tuple(p + j for j in range(p) if j not in keep)
    return np.hstack([X, wx[:, keep]]), keep, dropped


def fit_slx(y, X, w: SpatialWeights, compute_se: bool = True, keep_intercept_lag: bool = False):
    """
    OLS on ``[X, WX]``.

    The lag of an all-ones column (the degree sequence) is dropped unless
    ``keep_intercept_lag``; lag columns that are identically zero are always
    dropped.
    """
    y = np.asarray(y, float)
    X = np.asarray(X, float)
    n, p = X.shape
    if w.n != n:
        raise ValueError(f"weights cover {w.n} units, data has {n}")
    if n < 2 * p + 2:
        raise TooFewUnits(f"{n} units, at least {2 * p + 2} needed for SLX")
    Z, keep, dropped = _slx_design(X, w, keep_intercept_lag)
    _check_design(Z, 0, "augmented SLX")
    _, _, ll_lin = _ols_core(y, X)
    coef, sigma2, ll = _ols_core(y, Z)
    theta = np.zeros(2 * p)
    theta[:p] = coef[:p]
    theta[[p + j for j in keep]] = coef[p:]
    f = ClusterFit(Family.SLX, 0.0, theta, sigma2, ll, ll_lin, n, dropped=dropped)
    if compute_se:
        f.std_errors = std_errors(f, y, X, w)
    return f


def fit(family, y, X, w: SpatialWeights, compute_se: bool = True, **kw) -> ClusterFit:
    family = Family(family)
    if family is Family.OLS:
        return fit_ols(y, X, compute_se)
    if family is Family.SAR:
        return fit_sar(y, X, w, compute_se)
    if family is Family.SEM:
        return fit_sem(y, X, w, compute_se)
    return fit_slx(y, X, w, compute_se, **kw)


# -- per-unit contributions ---------------------------------------------------


def residuals(f: ClusterFit, y, X, w: SpatialWeights | None = None) -> np.ndarray:
    """Model residuals ``e`` such that ``e ~ N(0, sigma2 I)`` under the fit."""
    y = np.asarray(y, float)
    X = np.asarray(X, float)
    p = X.shape[1]
    if f.family is Family.OLS:
        return y - X @ f.theta
    if f.family is Family.SLX:
        return y - X @ f.theta[:p] - w.lag(X) @ f.theta[p:]
    if f.family is Family.SAR:
        return y - f.spatial_param * w.lag(y) - X @ f.theta
    u = y - X @ f.theta
    return u - f.spatial_param * w.lag(u)


def unit_logliks(f: ClusterFit, y, X, w: SpatialWeights | None = None) -> np.ndarray:
    """
    Per-unit log-likelihood shares for all units of ``(y, X, w)``.

    The log-determinant of the fit is spread uniformly over the units of the
    sample it was estimated on, so on that sample the shares sum to
    ``f.loglik``.
    """
    e = residuals(f, y, X, w)
    return -0.5 * (LOG_2PI + math.log(f.sigma2)) - e * e / (2.0 * f.sigma2) + f.logdet / f.n_units


def unit_loglik(f: ClusterFit, y, X, w: SpatialWeights | None, i: int) -> float:
    n = len(y)
    if not 0 <= i < n:
        raise IndexOutOfRange(f"unit {i} outside 0..{n - 1}")
    return float(unit_logliks(f, y, X, w)[i])


# -- inference ----------------------------------------------------------------


def _param_loglik(f: ClusterFit, y, X, w):
    """Return ``(x0, loglik(x))`` over the free parameters, variance last."""
    p = X.shape[1]
    fam = f.family
    if fam is Family.OLS or (fam.spatial and f.pinned):
        x0 = np.r_[f.theta, f.sigma2]
        return x0, lambda v: loglik_ols(y, X, v[:-1], v[-1])
    if fam is Family.SAR:
        x0 = np.r_[f.spatial_param, f.theta, f.sigma2]
        return x0, lambda v: loglik_sar(y, X, w, v[0], v[1:-1], v[-1])
    if fam is Family.SEM:
        x0 = np.r_[f.spatial_param, f.theta, f.sigma2]
        return x0, lambda v: loglik_sem(y, X, w, v[0], v[1:-1], v[-1])
    free = [j for j in range(2 * p) if j not in f.dropped]

    def ll(v):
        t = np.zeros(2 * p)
        t[free] = v[:-1]
        return loglik_slx(y, X, w, t[:p], t[p:], v[-1])

    return np.r_[f.theta[free], f.sigma2], ll


def numerical_hessian(fun, x0, rel_step=1e-5, abs_step=1e-7):
    """Central-difference Hessian with per-coordinate step ``max(rel*|x|, abs)``."""
    x0 = np.asarray(x0, float)
    k = len(x0)
    h = np.maximum(rel_step * np.abs(x0), abs_step)
    f0 = fun(x0)
    H = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        H[i, i] = (fun(x0 + ei) - 2.0 * f0 + fun(x0 - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                fun(x0 + ei + ej) - fun(x0 + ei - ej) - fun(x0 - ei + ej) + fun(x0 - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def std_errors(f: ClusterFit, y, X, w: SpatialWeights | None = None) -> np.ndarray:
    """
    Standard errors from the inverse negative Hessian of the full log-likelihood.

    Reported for ``(spatial_param, theta)``; the variance is a free parameter
    of the Hessian but its SE is not reported. Entries for SLX lags that were
    not estimated are NaN, as is everything when the Hessian cannot be
    inverted.
    """
    y = np.asarray(y, float)
    X = np.asarray(X, float)
    x0, ll = _param_loglik(f, y, X, w)
    spatial = f.family.spatial
    n_out = int(spatial) + len(f.theta)
    out = np.full(n_out, np.nan)
    try:
        H = numerical_hessian(ll, x0)
        if not np.all(np.isfinite(H)):
            raise np.linalg.LinAlgError("non-finite Hessian")
        cov = np.linalg.inv(-H)
        var = np.diag(cov)[:-1]
        if np.any(var <= 0) or not np.all(np.isfinite(var)):
            raise np.linalg.LinAlgError("information matrix is not positive definite")
    except (np.linalg.LinAlgError, SpatialParamOutOfRange, ValueError) as exc:
        warnings.warn(f"standard errors unavailable: {exc}", SingularHessian, stacklevel=2)
        return out
    se = np.sqrt(var)
    if f.family is Family.SLX:
        free = [j for j in range(len(f.theta)) if j not in f.dropped]
        out[free] = se
    elif spatial and f.pinned:
        out[1:] = se
    else:
        out[:] = se
    return out


def lr_test(f: ClusterFit):
    """Likelihood-ratio test of the spatial model against its non-spatial nest (1 df)."""
    if not f.family.spatial:
        raise NotApplicable(f"LR test is defined for SAR and SEM, not {f.family}")
    stat = max(0.0, 2.0 * (f.loglik - f.loglik_linear))
    return stat, float(stats.chi2.sf(stat, 1))
