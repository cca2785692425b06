"""Temporally weighted S-mode / T-mode PCA for surveillance time series.

Workflow: ingest a date-indexed matrix of surveillance streams, smooth
each stream with a penalized spline, pool the lag-1 residual
correlations into a Toeplitz temporal weight matrix, whiten the time
axis with its symmetric square root, and decompose with an SVD in
either orientation. Diagnostics compare principal scores with external
indicator series and flag deviant streams.
"""

__version__ = "0.1.0"

from .data_model import (
    CenteredMatrix,
    IngestConfig,
    TimeSeriesMatrix,
    ValidationReport,
    WaveWindow,
    center_columns,
    ingest_csv,
    select_streams,
    slice_window,
    validate,
    write_csv,
)
from .diagnostics import (
    ComparisonReport,
    OutlierFlag,
    ReferenceSeries,
    compare_with_reference,
    join_by_week,
    load_reference_csv,
    spearman,
    tmode_outlier_flags,
)
from .pca import (
    BiplotData,
    PcaResult,
    WeightConfig,
    align_sign,
    biplot_data,
    reconstruct,
    svd_decompose,
    variance_explained,
    weighted_pca,
)
from .smoothing import (
    SmoothFit,
    SplineBasis,
    build_basis,
    fit_penalized,
    lag1_correlation,
    select_lambda,
)
from .synthetic import generate_synthetic
from .weighting import (
    TemporalWeight,
    ar1_toeplitz,
    inverse_psd,
    median_rho,
    sqrt_psd,
    temporal_weight,
)

__all__ = [
    "__version__",
    "CenteredMatrix",
    "IngestConfig",
    "TimeSeriesMatrix",
    "ValidationReport",
    "WaveWindow",
    "center_columns",
    "ingest_csv",
    "select_streams",
    "slice_window",
    "validate",
    "write_csv",
    "ComparisonReport",
    "OutlierFlag",
    "ReferenceSeries",
    "compare_with_reference",
    "join_by_week",
    "load_reference_csv",
    "spearman",
    "tmode_outlier_flags",
    "BiplotData",
    "PcaResult",
    "WeightConfig",
    "align_sign",
    "biplot_data",
    "reconstruct",
    "svd_decompose",
    "variance_explained",
    "weighted_pca",
    "SmoothFit",
    "SplineBasis",
    "build_basis",
    "fit_penalized",
    "lag1_correlation",
    "select_lambda",
    "generate_synthetic",
    "TemporalWeight",
    "ar1_toeplitz",
    "inverse_psd",
    "median_rho",
    "sqrt_psd",
    "temporal_weight",
]
