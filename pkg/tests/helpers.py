"""Shared test utilities: matrix builders and independent oracles."""

from datetime import date, timedelta

import numpy as np

from epipca import TimeSeriesMatrix


def make_matrix(values, labels=None, start=date(2020, 4, 2)) -> TimeSeriesMatrix:
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    labels = tuple(labels) if labels is not None else tuple(f"s{j}" for j in range(p))
    dates = tuple(start + timedelta(days=i) for i in range(n))
    return TimeSeriesMatrix(dates=dates, stream_labels=labels, values=values)


def pca_eigen_oracle(weighted: np.ndarray):
    """Brute-force PCA of a (possibly pre-weighted) matrix M.

    Eigendecomposes M'M directly: singular values are the square roots
    of the eigenvalues, right vectors are the eigenvectors, scores are
    M V. Independent of the SVD route under test.
    """
    weighted = np.asarray(weighted, dtype=float)
    gram = weighted.T @ weighted
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]
    singular = np.sqrt(eigvals)
    scores = weighted @ eigvecs
    fractions = eigvals / eigvals.sum()
    return singular, scores, eigvecs, fractions


def assert_columns_match_up_to_sign(actual, expected, atol):
    """Columnwise comparison allowing an independent sign per column."""
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    assert actual.shape == expected.shape
    for j in range(actual.shape[1]):
        direct = np.abs(actual[:, j] - expected[:, j]).max()
        flipped = np.abs(actual[:, j] + expected[:, j]).max()
        assert min(direct, flipped) < atol, f"column {j}: {min(direct, flipped):.3e}"
