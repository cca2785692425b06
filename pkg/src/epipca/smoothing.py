"""Penalized-spline smoothing of individual streams against date index.

Each stream is fitted with a uniform cubic B-spline basis over the
index 1..n and a second-order difference penalty on the coefficients,
minimizing

    ||y - B beta||^2 + lambda * beta' P beta,      P = D2' D2.

The fit is computed through an orthogonal (Demmler-Reinsch style)
reparameterization: with B = QR and R^-T P R^-1 = W diag(gamma) W',
the fitted values are U diag(1/(1 + lambda*gamma)) U'y for U = QW.
This keeps extreme lambdas well conditioned (affine inputs are
reproduced exactly at any lambda, because affine coefficient vectors
lie in the penalty null space) and gives the effective degrees of
freedom as sum 1/(1 + lambda*gamma), which is exactly monotone in
lambda.

The smoothing parameter is chosen by generalized cross-validation,
GCV(lambda) = n * RSS / (n - edf)^2, minimized over a log-spaced grid
and refined by golden-section search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh, qr, solve_triangular
from scipy.optimize import minimize_scalar

from .errors import DegenerateResiduals, InvalidBasisSize, SingularSystem

_DEGREE = 3  # cubic splines throughout


@dataclass(frozen=True)
class SplineBasis:
    """Cubic B-spline design matrix and difference penalty.

    ``design`` is n x k with rows summing to 1 (partition of unity);
    ``penalty`` is the k x k second-order difference penalty whose null
    space holds constant and linear coefficient sequences.
    """

    n: int
    k: int
    design: np.ndarray
    penalty: np.ndarray


@dataclass(frozen=True)
class SmoothFit:
    """One penalized-spline fit.

    ``residuals`` is exactly ``observed - fitted``. ``edf`` is the hat
    matrix trace, in [2, k]. ``criterion_value`` is GCV at ``lambda_``.
    """

    coefficients: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    lambda_: float
    edf: float
    criterion_value: float


def build_basis(n: int, k: int) -> SplineBasis:
    """Uniform cubic B-spline basis over indices 1..n with k functions.

    Knots are equally spaced and extend three intervals beyond each end
    so the basis functions are translates of a single B-spline; this
    makes the partition of unity exact on the data range and puts
    affine functions in the penalty null space.
    """
    if n < 4 or k < 4 or k > n:
        raise InvalidBasisSize(f"need n >= 4 and 4 <= k <= n, got n={n}, k={k}")
    x = np.arange(1, n + 1, dtype=float)
    h = (n - 1) / (k - _DEGREE)
    knots = 1.0 + (np.arange(k + _DEGREE + 1) - _DEGREE) * h
    design = BSpline.design_matrix(x, knots, _DEGREE).toarray()
    d2 = np.diff(np.eye(k), n=2, axis=0)
    penalty = d2.T @ d2
    return SplineBasis(n=n, k=k, design=design, penalty=penalty)


class _Reparameterized:
    """Orthogonal reparameterization of one basis, reusable across lambdas."""

    def __init__(self, basis: SplineBasis):
        q, r = qr(basis.design, mode="economic")
        diag = np.abs(np.diag(r))
        if diag.min() <= 1e-10 * max(diag.max(), 1.0):
            raise SingularSystem("design matrix is rank deficient")
        r_inv = solve_triangular(r, np.eye(basis.k))
        s = r_inv.T @ basis.penalty @ r_inv
        gamma, w = eigh(0.5 * (s + s.T))
        # exact-zero eigenvalues for the penalty null space, so that
        # 1/(1 + lambda*gamma) is exactly 1 there at any lambda
        gamma = np.where(gamma < 1e-10 * max(gamma.max(), 1.0), 0.0, gamma)
        self.basis = basis
        self.r = r
        self.w = w
        self.gamma = gamma
        self.u = q @ w

    def fit(self, y: np.ndarray, lam: float) -> SmoothFit:
        eta = self.u.T @ y
        shrink = 1.0 / (1.0 + lam * self.gamma)
        fitted = self.u @ (shrink * eta)
        coef = solve_triangular(self.r, self.w @ (shrink * eta))
        residuals = y - fitted
        edf = float(shrink.sum())
        rss = float(residuals @ residuals)
        return SmoothFit(
            coefficients=coef,
            fitted=fitted,
            residuals=residuals,
            lambda_=float(lam),
            edf=edf,
            criterion_value=gcv_criterion(len(y), rss, edf),
        )

    def rss_edf(self, y: np.ndarray, lam: float) -> tuple[float, float]:
        eta = self.u.T @ y
        base = max(float(y @ y - eta @ eta), 0.0)  # residual outside span(U)
        miss = (1.0 - 1.0 / (1.0 + lam * self.gamma)) * eta
        rss = base + float(miss @ miss)
        edf = float((1.0 / (1.0 + lam * self.gamma)).sum())
        return rss, edf


def _fit_normal_equations(y: np.ndarray, basis: SplineBasis, lam: float) -> SmoothFit:
    # fallback for rank-deficient designs; the penalty can still make
    # the system positive definite when lam > 0
    btb = basis.design.T @ basis.design
    a = btb + lam * basis.penalty
    try:
        factor = cho_factor(a)
    except LinAlgError as exc:
        raise SingularSystem("penalized system not positive definite") from exc
    coef = cho_solve(factor, basis.design.T @ y)
    fitted = basis.design @ coef
    residuals = y - fitted
    edf = float(np.trace(cho_solve(factor, btb)))
    rss = float(residuals @ residuals)
    return SmoothFit(
        coefficients=coef,
        fitted=fitted,
        residuals=residuals,
        lambda_=float(lam),
        edf=edf,
        criterion_value=gcv_criterion(len(y), rss, edf),
    )


def fit_penalized(y: np.ndarray, basis: SplineBasis, lam: float) -> SmoothFit:
    """Penalized least-squares fit of ``y`` at a fixed smoothing parameter."""
    y = np.asarray(y, dtype=float)
    if y.shape != (basis.n,):
        raise ValueError(f"y has shape {y.shape}, basis expects ({basis.n},)")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    try:
        return _Reparameterized(basis).fit(y, lam)
    except SingularSystem:
        if lam == 0.0:
            raise
        return _fit_normal_equations(y, basis, lam)


def gcv_criterion(n: int, rss: float, edf: float) -> float:
    """Generalized cross-validation: n * RSS / (n - edf)^2."""
    return n * rss / (n - edf) ** 2


def select_lambda(
    y: np.ndarray,
    basis: SplineBasis,
    grid: np.ndarray | None = None,
    criterion=gcv_criterion,
) -> tuple[float, SmoothFit]:
    """Pick the smoothing parameter minimizing the criterion (GCV by default).

    A log-spaced grid bracket is refined by golden-section search on
    log10(lambda). ``criterion`` takes (n, rss, edf) and returns the
    value to minimize, so an alternative such as AICc can be plugged in.
    """
    y = np.asarray(y, dtype=float)
    rep = _Reparameterized(basis)
    if grid is None:
        grid = np.logspace(-8.0, 12.0, 41)

    def objective(lam: float) -> float:
        rss, edf = rep.rss_edf(y, lam)
        return criterion(len(y), rss, edf)

    vals = np.array([objective(lam) for lam in grid])
    i = int(np.argmin(vals))
    lam = float(grid[i])
    if 0 < i < len(grid) - 1:
        lo, mid, hi = np.log10(grid[i - 1]), np.log10(grid[i]), np.log10(grid[i + 1])
        try:
            res = minimize_scalar(
                lambda t: objective(10.0**t),
                bracket=(lo, mid, hi),
                method="golden",
                options={"xtol": 1e-8},
            )
            refined = float(10.0**res.x)
            if objective(refined) <= vals[i]:
                lam = refined
        except ValueError:
            pass  # flat or non-bracketing criterion curve; keep the grid minimum
    return lam, rep.fit(y, lam)


def lag1_correlation(residuals: np.ndarray) -> float:
    """Pearson correlation between residuals at t and t+1."""
    r = np.asarray(residuals, dtype=float)
    if r.ndim != 1 or len(r) < 3:
        raise DegenerateResiduals(f"need at least 3 residuals, got {r.shape}")
    mean_square = float(np.mean(r * r))
    if mean_square == 0.0:
        raise DegenerateResiduals("residuals are all zero")
    head, tail = r[:-1], r[1:]
    if np.var(head) < 1e-14 * mean_square or np.var(tail) < 1e-14 * mean_square:
        raise DegenerateResiduals("residual slice has (numerically) zero variance")
    rho = float(np.corrcoef(head, tail)[0, 1])
    return float(np.clip(rho, -1.0, 1.0))
