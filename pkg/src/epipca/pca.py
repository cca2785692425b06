"""SVD-based PCA with optional row/column weighting in S and T modes.

Orientation convention
----------------------
The input matrix X has dates on rows and streams on columns. S-mode
decomposes X itself: components are shared temporal trends, scores are
per-date, loadings per-stream. T-mode decomposes the transpose:
components contrast streams, scores are per-stream, loadings per-date.

Weight placement
----------------
A temporal weight is square in the number of dates and always attaches
to the time axis: it is a row weight in S-mode and (after the T-mode
transpose) a column weight in T-mode. WeightConfig stores weights in
the original X orientation (row weight n x n over dates, column weight
p x p over streams) together with which original axis carries time;
``weighted_pca`` reorients them when transposing for T-mode.

With analysis matrix A and its row/column weights R and C, the
decomposition is ``R A C = U' D' V''`` and

    scores   = A-side projections  U' D'  (equal to (R A C) V')
    loadings = C^-T V'   (the weighted axis unweighted again)

so that with identity weights everything reduces to classic PCA.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date

import numpy as np

from .data_model import CenteredMatrix
from .errors import (
    AllZero,
    ConvergenceFailure,
    DimensionMismatch,
    RankOutOfBounds,
    SingularMatrix,
    TooFewComponents,
)


@dataclass(frozen=True)
class WeightConfig:
    """Row/column weights in the original (dates x streams) orientation.

    ``time_axis`` records which original axis the temporal weight sits
    on; with date-indexed matrices this is always "rows".
    """

    row_weight: np.ndarray | None = None
    column_weight: np.ndarray | None = None
    time_axis: str = "rows"

    def __post_init__(self):
        if self.time_axis not in ("rows", "columns"):
            raise DimensionMismatch(f"time_axis must be rows|columns, got {self.time_axis!r}")


@dataclass(frozen=True)
class PcaResult:
    """Decomposition output.

    Axis meaning depends on mode: in S-mode scores rows follow
    ``dates`` and loadings rows follow ``stream_labels``; in T-mode the
    roles are swapped.
    """

    mode: str
    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    scores: np.ndarray
    loadings: np.ndarray
    variance_fraction: np.ndarray
    stream_labels: tuple[str, ...] = ()
    dates: tuple[date, ...] = ()

    @property
    def n_components(self) -> int:
        return len(self.singular_values)

    def _date_labels(self, count: int) -> tuple[str, ...]:
        if self.dates:
            return tuple(d.isoformat() for d in self.dates)
        return tuple(f"t{i}" for i in range(count))

    @property
    def score_labels(self) -> tuple[str, ...]:
        """One label per scores row: dates in S-mode, streams in T-mode."""
        if self.mode == "S":
            return self._date_labels(self.scores.shape[0])
        return self.stream_labels

    @property
    def loading_labels(self) -> tuple[str, ...]:
        """One label per loadings row: streams in S-mode, dates in T-mode."""
        if self.mode == "S":
            return self.stream_labels
        return self._date_labels(self.loadings.shape[0])


@dataclass(frozen=True)
class BiplotData:
    """Plot-ready biplot rows: loading arrows and score points on PC1/PC2."""

    arrows: list[tuple[str, float, float, float]]  # label, x, y, length
    points: list[tuple[str, float, float]]  # label, x, y


def svd_decompose(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD returning (U, D, V) with X = U diag(D) V'."""
    X = np.asarray(X, dtype=float)
    try:
        u, d, vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD did not converge: {exc}") from exc
    return u, d, vt.T


def variance_explained(singular_values: np.ndarray) -> np.ndarray:
    """Squared singular values normalized to sum to one."""
    s = np.asarray(singular_values, dtype=float)
    if np.any(s < 0):
        raise ValueError("singular values must be nonnegative")
    if np.any(np.diff(s) > 0):
        raise ValueError("singular values must be nonincreasing")
    total = float(s @ s)
    if total == 0.0:
        raise AllZero("all singular values are zero")
    return s * s / total


def _apply_weight(A: np.ndarray, weight: np.ndarray | None, side: str) -> np.ndarray:
    if weight is None:
        return A
    weight = np.asarray(weight, dtype=float)
    dim = A.shape[0] if side == "rows" else A.shape[1]
    if weight.shape != (dim, dim):
        raise DimensionMismatch(
            f"{side[:-1]} weight has shape {weight.shape}, expected ({dim}, {dim})"
        )
    return weight @ A if side == "rows" else A @ weight


def weighted_pca(
    X: CenteredMatrix | np.ndarray,
    weights: WeightConfig | None = None,
    mode: str = "S",
) -> PcaResult:
    """Weighted PCA of a centred matrix in S or T orientation.

    ``X`` is a :class:`CenteredMatrix` (or a plain array assumed
    already centred). With identity weights this reduces exactly to
    classic PCA of the analysis matrix.
    """
    if mode not in ("S", "T"):
        raise ValueError(f"mode must be 'S' or 'T', got {mode!r}")
    if isinstance(X, CenteredMatrix):
        values = X.values
        labels = X.stream_labels
        dates = X.dates
    else:
        values = np.asarray(X, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {values.shape}")
        labels = tuple(f"s{j}" for j in range(values.shape[1]))
        dates = ()
    if not np.all(np.isfinite(values)):
        raise ValueError("matrix contains non-finite values")
    weights = weights or WeightConfig()

    if mode == "S":
        analysis = values
        row_w, col_w = weights.row_weight, weights.column_weight
    else:
        analysis = values.T
        row_w = None if weights.column_weight is None else weights.column_weight.T
        col_w = None if weights.row_weight is None else weights.row_weight.T

    weighted = _apply_weight(analysis, row_w, "rows")
    weighted = _apply_weight(weighted, col_w, "columns")
    u, d, v = svd_decompose(weighted)
    scores = u * d
    if col_w is None:
        loadings = v
    else:
        try:
            loadings = np.linalg.solve(np.asarray(col_w, dtype=float).T, v)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix("column weight is singular") from exc
    return PcaResult(
        mode=mode,
        singular_values=d,
        left_vectors=u,
        right_vectors=v,
        scores=scores,
        loadings=loadings,
        variance_fraction=variance_explained(d),
        stream_labels=labels,
        dates=dates,
    )


def align_sign(result: PcaResult) -> PcaResult:
    """Flip component signs so each loading vector's largest-magnitude entry is positive.

    Scores and loadings (and the singular vectors) flip together, so
    any reconstruction is unchanged.
    """
    flips = np.ones(result.n_components)
    for j in range(result.n_components):
        col = result.loadings[:, j]
        peak = col[int(np.argmax(np.abs(col)))]
        if peak < 0:
            flips[j] = -1.0
    return replace(
        result,
        left_vectors=result.left_vectors * flips,
        right_vectors=result.right_vectors * flips,
        scores=result.scores * flips,
        loadings=result.loadings * flips,
    )


def reconstruct(result: PcaResult, k: int) -> np.ndarray:
    """Rank-k approximation of the weighted analysis matrix."""
    r = result.n_components
    if not 1 <= k <= r:
        raise RankOutOfBounds(f"k must be in 1..{r}, got {k}")
    u = result.left_vectors[:, :k]
    d = result.singular_values[:k]
    v = result.right_vectors[:, :k]
    return (u * d) @ v.T


def biplot_data(result: PcaResult) -> BiplotData:
    """Loading arrows and score points on the first two components."""
    if result.n_components < 2:
        raise TooFewComponents(
            f"biplot needs >= 2 components, result has {result.n_components}"
        )
    arrows = []
    for label, row in zip(result.loading_labels, result.loadings):
        x, y = float(row[0]), float(row[1])
        arrows.append((label, x, y, float(np.hypot(x, y))))
    points = []
    for label, row in zip(result.score_labels, result.scores):
        points.append((label, float(row[0]), float(row[1])))
    return BiplotData(arrows=arrows, points=points)
