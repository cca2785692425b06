"""Temporal weight matrices from residual autocorrelation.

Per-stream lag-1 residual correlations are pooled into a single global
rho (the median), which defines a Toeplitz correlation matrix
T[i][j] = rho^|i-j| over the time indices. Its symmetric principal
square root Omega whitens the time axis before decomposition; the
inverse unweights loadings afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import EmptyInput, InvalidRho, NotPsd, SingularMatrix

#: rho is clamped into this range so T stays numerically positive definite
RHO_LIMIT = 0.999


@dataclass(frozen=True)
class TemporalWeight:
    """Global correlation rho with its Toeplitz matrix, square root and inverse."""

    rho: float
    n: int
    T: np.ndarray
    omega: np.ndarray
    omega_inv: np.ndarray


def median_rho(per_stream_rhos) -> float:
    """Median per-stream correlation, clamped to keep T positive definite.

    Even-length inputs take the mean of the two middle values.
    """
    rhos = np.asarray(per_stream_rhos, dtype=float)
    if rhos.size == 0:
        raise EmptyInput("no per-stream correlations supplied")
    if np.any(np.abs(rhos) > 1.0) or not np.all(np.isfinite(rhos)):
        raise InvalidRho("per-stream correlations must lie in [-1, 1]")
    return float(np.clip(np.median(rhos), -RHO_LIMIT, RHO_LIMIT))


def ar1_toeplitz(n: int, rho: float) -> np.ndarray:
    """The n x n matrix with entries rho^|i-j| (positive definite for |rho|<1)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if abs(rho) >= 1.0:
        raise InvalidRho(f"|rho| must be < 1, got {rho}")
    return toeplitz(rho ** np.arange(n, dtype=float))


def _check_symmetric(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = max(float(np.abs(m).max()), 1.0)
    if float(np.abs(m - m.T).max()) > 1e-10 * scale:
        raise ValueError(f"{name} must be symmetric")
    return m


def sqrt_psd(T: np.ndarray) -> np.ndarray:
    """Symmetric principal square root of a PSD matrix via eigendecomposition.

    Eigenvalues in [-1e-10 * max_eig, 0) are treated as rounded zeros
    and clamped; anything lower raises NotPsd.
    """
    T = _check_symmetric(T, "T")
    eigvals, q = np.linalg.eigh(T)
    top = max(float(eigvals[-1]), 0.0)
    if eigvals[0] < -1e-10 * top:
        raise NotPsd(f"eigenvalue {eigvals[0]:.3e} below PSD tolerance")
    eigvals = np.clip(eigvals, 0.0, None)
    omega = (q * np.sqrt(eigvals)) @ q.T
    return 0.5 * (omega + omega.T)


def inverse_psd(omega: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix via eigendecomposition."""
    omega = _check_symmetric(omega, "omega")
    eigvals, q = np.linalg.eigh(omega)
    if eigvals[0] <= 1e-14 * max(float(eigvals[-1]), 0.0) or eigvals[0] <= 0.0:
        raise SingularMatrix(f"matrix is singular (min eigenvalue {eigvals[0]:.3e})")
    inv = (q / eigvals) @ q.T
    return 0.5 * (inv + inv.T)


def temporal_weight(n: int, rho: float) -> TemporalWeight:
    """Build the full temporal weight bundle for a given time dimension.

    rho == 0 short-circuits to exact identity matrices so unweighted and
    trivially-weighted runs agree bit for bit.
    """
    rho = float(np.clip(rho, -RHO_LIMIT, RHO_LIMIT))
    if rho == 0.0:
        eye = np.eye(n)
        return TemporalWeight(rho=0.0, n=n, T=eye, omega=eye.copy(), omega_inv=eye.copy())
    T = ar1_toeplitz(n, rho)
    omega = sqrt_psd(T)
    omega_inv = inverse_psd(omega)
    return TemporalWeight(rho=rho, n=n, T=T, omega=omega, omega_inv=omega_inv)
