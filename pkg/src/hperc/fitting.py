"""Scaling-law fits for the critical threshold.

Per dimension::

    delta_s = (pi/2) * A * M**(-B)          (log-space least squares)

and across dimensions::

    A(D) = gamma_A - alpha_A * D**(-beta_A)  (profiled over gamma_A)
    B(D) = alpha_B * D**(-beta_B)            (log-log least squares)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFitError, FitError, InsufficientDataError, InvalidDataError
from .metric import HALF_PI

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LinearFit:
    intercept: float
    slope: float
    se_intercept: float
    se_slope: float
    cov: float
    rss: float
    r_squared: float
    n: int


def linear_fit(x, y, sigma=None) -> LinearFit:
    """Least squares y = intercept + slope * x.

    With ``sigma`` the fit is weighted by 1/sigma^2. Parameter errors come
    from the covariance matrix scaled by the reduced chi-square (so only the
    relative size of ``sigma`` matters).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    w = np.ones(n) if sigma is None else 1.0 / np.asarray(sigma, dtype=np.float64) ** 2
    X = np.column_stack([np.ones(n), x])
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ coef
    rss = float(np.sum(w * resid**2))
    dof = n - 2
    s2 = rss / dof if dof > 0 else math.nan
    cov = s2 * np.linalg.inv(X.T @ (X * w[:, None]))
    ybar = np.sum(w * y) / np.sum(w)
    tss = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    return LinearFit(
        float(coef[0]),
        float(coef[1]),
        float(math.sqrt(max(cov[0, 0], 0.0))),
        float(math.sqrt(max(cov[1, 1], 0.0))),
        float(cov[0, 1]),
        rss,
        float(r2),
        n,
    )


@dataclass(frozen=True)
class PowerLawFit:
    dim: int | None
    A: float
    B: float
    se_A: float
    se_B: float
    r_squared: float
    m_range: tuple[int, int]
    n_points: int
    cov_logA_B: float = 0.0


def fit_power_law(points, weights=None, dim: int | None = None) -> PowerLawFit:
    """Fit delta_s = (pi/2) A M^-B to (M, delta_s) pairs.

    ``weights`` are optional standard errors of delta_s; they become errors
    of log(delta_s) by first-order propagation.
    """
    pts = [(float(m), float(s)) for m, s in points]
    if len(pts) < 3:
        raise InsufficientDataError(f"power-law fit needs >= 3 points, got {len(pts)}")
    M = np.array([p[0] for p in pts])
    S = np.array([p[1] for p in pts])
    if np.any(S <= 0):
        raise InvalidDataError("every delta_s must be > 0")
    if np.any(S > HALF_PI * (1 + 1e-12)):
        raise InvalidDataError("delta_s must not exceed pi/2")
    if np.any(M < 2) or len(set(M.tolist())) != M.size:
        raise InvalidDataError("M values must be distinct and >= 2")
    sigma = None
    if weights is not None:
        se = np.asarray(weights, dtype=np.float64)
        if se.shape != S.shape or np.any(~(se > 0)):
            raise InvalidDataError("weights must be positive standard errors, one per point")
        sigma = se / S
    lf = linear_fit(np.log(M), np.log(S / HALF_PI), sigma)
    A = math.exp(lf.intercept)
    return PowerLawFit(
        dim=dim,
        A=A,
        B=-lf.slope,
        se_A=A * lf.se_intercept,
        se_B=lf.se_slope,
        r_squared=lf.r_squared,
        m_range=(int(M.min()), int(M.max())),
        n_points=int(M.size),
        cov_logA_B=-lf.cov,
    )


@dataclass(frozen=True)
class BLawFit:
    alpha_B: float
    beta_B: float
    se_alpha_B: float
    se_beta_B: float
    r_squared: float


def fit_B_law(points) -> BLawFit:
    """Fit B(D) = alpha_B D^-beta_B to (D, B) pairs by log-log least squares."""
    pts = [(float(d), float(b)) for d, b in points]
    if len(pts) < 3:
        raise InsufficientDataError(f"B-law fit needs >= 3 points, got {len(pts)}")
    D = np.array([p[0] for p in pts])
    B = np.array([p[1] for p in pts])
    if np.any(B <= 0):
        raise InvalidDataError("every B must be > 0 for a log-log fit")
    lf = linear_fit(np.log(D), np.log(B))
    alpha = math.exp(lf.intercept)
    return BLawFit(alpha, -lf.slope, alpha * lf.se_intercept, lf.se_slope, lf.r_squared)


@dataclass(frozen=True)
class ALawFit:
    gamma_A: float
    alpha_A: float
    beta_A: float
    se_gamma_A: float
    se_alpha_A: float
    se_beta_A: float
    rss: float
    profile: tuple[tuple[float, float], ...] = field(default=(), repr=False)
    # the profile minimum sits on the upper edge of the gamma scan: the data
    # prefer gamma_A -> inf, beta_A -> 0 (A linear in log D)
    at_boundary: bool = False


def _profile_rss(gamma: float, logD: np.ndarray, A: np.ndarray):
    gap = gamma - A
    if np.any(gap <= 0):
        return None
    return linear_fit(logD, np.log(gap))


def _golden_min(f, a: float, b: float, xtol: float) -> float:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return c if fc <= fd else d


def fit_A_law(
    points,
    offset_range: tuple[float, float] = (1e-6, 0.2),
    n_grid: int = 400,
    xtol: float = 1e-13,
) -> ALawFit:
    """Fit A(D) = gamma_A - alpha_A D^-beta_A to (D, A) pairs.

    For each candidate gamma_A on a log-spaced grid of offsets above max(A),
    log(gamma_A - A) is regressed on log D; the grid minimum of the residual
    sum of squares is refined by golden-section search between its
    neighbours. The error of gamma_A comes from the curvature of that
    profile, those of alpha_A and beta_A from the regression at the optimum.
    """
    pts = [(float(d), float(a)) for d, a in points]
    if len(pts) < 4:
        raise InsufficientDataError(f"A-law fit needs >= 4 points, got {len(pts)}")
    D = np.array([p[0] for p in pts])
    A = np.array([p[1] for p in pts])
    logD = np.log(D)
    if np.ptp(A) <= 1e-14 * max(1.0, abs(A).max()):
        raise DegenerateFitError(
            f"A is constant across D ({A[0]!r}); alpha_A -> 0 and beta_A is not identifiable"
        )

    top = float(A.max())
    offsets = np.geomspace(offset_range[0], offset_range[1], n_grid)
    gammas = top + offsets
    rss = np.full(n_grid, np.inf)
    for i, g in enumerate(gammas):
        lf = _profile_rss(g, logD, A)
        if lf is not None:
            rss[i] = lf.rss
    if not np.any(np.isfinite(rss)):
        raise FitError("every candidate gamma_A left some gamma_A - A <= 0")
    i = int(np.argmin(rss))
    lo = gammas[i - 1] if i > 0 else top + 0.5 * offsets[0]
    hi = gammas[i + 1] if i + 1 < n_grid else gammas[i]

    def f(g):
        lf = _profile_rss(g, logD, A)
        return math.inf if lf is None else lf.rss

    g_best = _golden_min(f, lo, hi, xtol * max(1.0, abs(top)))
    lf = _profile_rss(g_best, logD, A)
    if lf is None:
        raise FitError("refined gamma_A is infeasible")

    # curvature of the profile: d2 RSS / d gamma2
    h = max(1e-3 * (g_best - top), 1e-12)
    r0 = lf.rss
    rp, rm = f(g_best + h), f(g_best - h)
    curv = (rp - 2 * r0 + rm) / (h * h)
    dof = len(pts) - 3
    if dof > 0 and math.isfinite(curv) and curv > 0:
        se_gamma = math.sqrt(2.0 * (r0 / dof) / curv)
    else:
        se_gamma = math.nan

    at_boundary = i == n_grid - 1
    if at_boundary:
        log.warning(
            "A-law profile minimum at the scan edge gamma_A = max(A) + %g; beta_A is not determined by the data",
            offset_range[1],
        )
    alpha = math.exp(lf.intercept)
    return ALawFit(
        gamma_A=float(g_best),
        alpha_A=alpha,
        beta_A=-lf.slope,
        se_gamma_A=se_gamma,
        se_alpha_A=alpha * lf.se_intercept,
        se_beta_A=lf.se_slope,
        rss=r0,
        profile=tuple(zip(gammas.tolist(), rss.tolist())),
        at_boundary=at_boundary,
    )


@dataclass(frozen=True)
class MetaFit:
    a_law: ALawFit
    b_law: BLawFit
    dims_used: tuple[int, ...]

    def to_dict(self) -> dict:
        a, b = self.a_law, self.b_law
        return {
            "gamma_A": a.gamma_A,
            "alpha_A": a.alpha_A,
            "beta_A": a.beta_A,
            "se_gamma_A": a.se_gamma_A,
            "se_alpha_A": a.se_alpha_A,
            "se_beta_A": a.se_beta_A,
            "alpha_B": b.alpha_B,
            "beta_B": b.beta_B,
            "se_alpha_B": b.se_alpha_B,
            "se_beta_B": b.se_beta_B,
            "dims_used": list(self.dims_used),
        }


def fit_meta(fits: list[PowerLawFit]) -> MetaFit:
    dims = tuple(int(f.dim) for f in fits)
    a = fit_A_law([(f.dim, f.A) for f in fits])
    b = fit_B_law([(f.dim, f.B) for f in fits])
    return MetaFit(a, b, dims)


def reference_law_A(D: float, gamma=1.0005, alpha=0.33, beta=0.47) -> float:
    return gamma - alpha * D ** (-beta)


def reference_law_B(D: float, alpha=0.182, beta=0.522) -> float:
    return alpha * D ** (-beta)


def reference_law_errors(D: float) -> tuple[float, float]:
    """First-order standard errors of the reference A(D) and B(D) laws,
    propagated from their quoted parameter uncertainties (taken independent)."""
    lnD = math.log(D)
    t = D**-0.47
    se_A = math.sqrt(0.0005**2 + (t * 0.02) ** 2 + (0.33 * t * lnD * 0.02) ** 2)
    u = D**-0.522
    se_B = math.sqrt((u * 0.004) ** 2 + (0.182 * u * lnD * 0.004) ** 2)
    return se_A, se_B
