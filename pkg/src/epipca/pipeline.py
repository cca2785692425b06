"""End-to-end batch runner.

One declarative JSON config drives: CSV ingest, optional window/stream
subsetting per analysis, column centring, per-stream spline smoothing,
residual-correlation pooling, temporal weighting, S/T-mode PCA, sign
alignment, diagnostics, and serialized outputs (CSV + JSON report).

Analyses fail independently: a failing analysis is recorded in the
report and the remaining ones still run.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__
from .data_model import (
    CenteredMatrix,
    IngestConfig,
    TimeSeriesMatrix,
    WaveWindow,
    center_columns,
    ingest_csv,
    select_streams,
    slice_window,
)
from .diagnostics import compare_with_reference, load_reference_csv, tmode_outlier_flags
from .errors import (
    ConfigError,
    DataError,
    DegenerateResiduals,
    EpipcaError,
    NumericalError,
)
from .pca import PcaResult, WeightConfig, align_sign, biplot_data, weighted_pca
from .smoothing import build_basis, lag1_correlation, select_lambda
from .weighting import median_rho, temporal_weight

#: components below this variance fraction are omitted from report display
DISPLAY_FRACTION = 0.01

_FLOAT_FORMAT = ".12g"


def _fmt(x: float) -> str:
    return format(float(x), _FLOAT_FORMAT)


@dataclass(frozen=True)
class AnalysisSpec:
    """One configured analysis: a named subset/window/mode combination."""

    name: str
    mode: str = "S"
    weighted: bool = True
    standardize: bool = False
    streams: tuple[str, ...] | None = None
    window: WaveWindow | None = None
    basis_size: int | None = None
    compare_component: int = 1  # 1-based PC number for reference comparison

    @staticmethod
    def from_dict(raw: dict) -> "AnalysisSpec":
        allowed = {
            "name", "mode", "weighted", "standardize", "streams", "window",
            "basis_size", "compare_component",
        }
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown analysis keys: {sorted(unknown)}")
        if "name" not in raw or not str(raw["name"]).strip():
            raise ConfigError("every analysis needs a non-empty name")
        mode = raw.get("mode", "S")
        if mode not in ("S", "T"):
            raise ConfigError(f"analysis {raw['name']!r}: mode must be S or T, got {mode!r}")
        window = None
        if raw.get("window") is not None:
            w = raw["window"]
            try:
                window = WaveWindow(
                    name=w.get("name", raw["name"]),
                    start_date=date.fromisoformat(w["start"]),
                    end_date=date.fromisoformat(w["end"]),
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(
                    f"analysis {raw['name']!r}: window needs ISO start/end dates"
                ) from exc
        streams = raw.get("streams")
        compare_component = int(raw.get("compare_component", 1))
        if compare_component < 1:
            raise ConfigError(f"analysis {raw['name']!r}: compare_component is 1-based")
        return AnalysisSpec(
            name=str(raw["name"]),
            mode=mode,
            weighted=bool(raw.get("weighted", True)),
            standardize=bool(raw.get("standardize", False)),
            streams=tuple(streams) if streams is not None else None,
            window=window,
            basis_size=int(raw["basis_size"]) if raw.get("basis_size") is not None else None,
            compare_component=compare_component,
        )


@dataclass(frozen=True)
class RunConfig:
    """Parsed and validated run configuration."""

    input_path: str
    schema: IngestConfig
    analyses: tuple[AnalysisSpec, ...]
    output_dir: str
    reference_path: str | None = None
    seed: int = 0

    @staticmethod
    def from_dict(raw: dict) -> "RunConfig":
        allowed = {"input", "schema", "analyses", "output_dir", "reference", "seed"}
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("input", "output_dir"):
            if key not in raw:
                raise ConfigError(f"config is missing {key!r}")
        schema_raw = raw.get("schema", {})
        schema_allowed = {"date_column", "stream_columns", "date_min", "date_max"}
        unknown = set(schema_raw) - schema_allowed
        if unknown:
            raise ConfigError(f"unknown schema keys: {sorted(unknown)}")
        try:
            schema = IngestConfig(
                date_column=schema_raw.get("date_column", "date"),
                stream_columns=(
                    tuple(schema_raw["stream_columns"])
                    if schema_raw.get("stream_columns") is not None
                    else None
                ),
                date_min=(
                    date.fromisoformat(schema_raw["date_min"])
                    if schema_raw.get("date_min")
                    else None
                ),
                date_max=(
                    date.fromisoformat(schema_raw["date_max"])
                    if schema_raw.get("date_max")
                    else None
                ),
            )
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad schema: {exc}") from exc
        analyses = tuple(AnalysisSpec.from_dict(a) for a in raw.get("analyses", []))
        names = [a.name for a in analyses]
        if len(set(names)) != len(names):
            raise ConfigError("analysis names must be unique")
        if schema.stream_columns is not None:
            known = set(schema.stream_columns)
            for a in analyses:
                for s in a.streams or ():
                    if s not in known:
                        raise ConfigError(
                            f"analysis {a.name!r} references unknown stream {s!r}"
                        )
        return RunConfig(
            input_path=str(raw["input"]),
            schema=schema,
            analyses=analyses,
            output_dir=str(raw["output_dir"]),
            reference_path=str(raw["reference"]) if raw.get("reference") else None,
            seed=int(raw.get("seed", 0)),
        )

    def canonical_dict(self) -> dict:
        return {
            "input": self.input_path,
            "schema": {
                "date_column": self.schema.date_column,
                "stream_columns": (
                    list(self.schema.stream_columns)
                    if self.schema.stream_columns is not None
                    else None
                ),
                "date_min": self.schema.date_min.isoformat() if self.schema.date_min else None,
                "date_max": self.schema.date_max.isoformat() if self.schema.date_max else None,
            },
            "analyses": [
                {
                    "name": a.name,
                    "mode": a.mode,
                    "weighted": a.weighted,
                    "standardize": a.standardize,
                    "streams": list(a.streams) if a.streams is not None else None,
                    "window": (
                        {
                            "name": a.window.name,
                            "start": a.window.start_date.isoformat(),
                            "end": a.window.end_date.isoformat(),
                        }
                        if a.window
                        else None
                    ),
                    "basis_size": a.basis_size,
                    "compare_component": a.compare_component,
                }
                for a in self.analyses
            ],
            "output_dir": self.output_dir,
            "reference": self.reference_path,
            "seed": self.seed,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path) -> RunConfig:
    """Load and validate a JSON run configuration file."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return RunConfig.from_dict(raw)


@dataclass
class AnalysisOutcome:
    """Result bundle for one analysis (or its failure record)."""

    name: str
    result: PcaResult | None = None
    stream_rhos: dict[str, float | None] = field(default_factory=dict)
    median_rho: float | None = None
    omega_eig_range: tuple[float, float] | None = None
    comparison: dict | None = None
    outliers: list[dict] = field(default_factory=list)
    error: str | None = None
    error_kind: str | None = None
    seconds: float = 0.0


@dataclass
class RunReport:
    """Aggregated run outputs; serialized as report.json."""

    version: str
    config_hash: str
    outcomes: list[AnalysisOutcome]
    total_seconds: float

    @property
    def failures(self) -> list[AnalysisOutcome]:
        return [o for o in self.outcomes if o.error is not None]


def smooth_streams(centered: CenteredMatrix, basis_size: int | None) -> dict:
    """Fit the GCV-selected spline smooth to every stream."""
    n = len(centered.dates)
    k = basis_size if basis_size is not None else min(10, n - 1)
    basis = build_basis(n, k)
    return {
        label: select_lambda(centered.values[:, j], basis)[1]
        for j, label in enumerate(centered.stream_labels)
    }


def residual_rhos(centered: CenteredMatrix, fits: dict) -> dict[str, float | None]:
    """Lag-1 residual correlation per stream.

    Streams whose residuals are degenerate, or at rounding level
    relative to the stream (a fit artifact whose correlation would be
    meaningless), get None and are excluded from the pooled median.
    """
    rhos: dict[str, float | None] = {}
    for j, label in enumerate(centered.stream_labels):
        fit = fits[label]
        resid_rms = float(np.sqrt(np.mean(fit.residuals**2)))
        signal_rms = float(np.sqrt(np.mean(centered.values[:, j] ** 2)))
        if resid_rms <= 1e-9 * max(signal_rms, 1e-300):
            rhos[label] = None
            continue
        try:
            rhos[label] = lag1_correlation(fit.residuals)
        except DegenerateResiduals:
            rhos[label] = None
    return rhos


def estimate_stream_rhos(
    centered: CenteredMatrix, basis_size: int | None
) -> dict[str, float | None]:
    """Lag-1 residual correlation per stream after spline smoothing."""
    return residual_rhos(centered, smooth_streams(centered, basis_size))


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_result_csvs(out_dir: Path, result: PcaResult) -> None:
    """scores.csv, loadings.csv, variance.csv and (r >= 2) biplot.csv."""
    out_dir.mkdir(parents=True, exist_ok=True)
    r = result.n_components
    pcs = [f"PC{j + 1}" for j in range(r)]
    score_axis = "date" if result.mode == "S" else "stream"
    loading_axis = "stream" if result.mode == "S" else "date"
    _write_rows(
        out_dir / "scores.csv",
        [score_axis, *pcs],
        (
            [label, *(_fmt(v) for v in row)]
            for label, row in zip(result.score_labels, result.scores)
        ),
    )
    _write_rows(
        out_dir / "loadings.csv",
        [loading_axis, *pcs],
        (
            [label, *(_fmt(v) for v in row)]
            for label, row in zip(result.loading_labels, result.loadings)
        ),
    )
    _write_rows(
        out_dir / "variance.csv",
        ["component", "singular_value", "variance_fraction"],
        (
            [pcs[j], _fmt(result.singular_values[j]), _fmt(result.variance_fraction[j])]
            for j in range(r)
        ),
    )
    if r >= 2:
        table = biplot_data(result)
        rows = [
            ["arrow", label, _fmt(x), _fmt(y), _fmt(length)]
            for label, x, y, length in table.arrows
        ]
        rows += [["point", label, _fmt(x), _fmt(y), ""] for label, x, y in table.points]
        _write_rows(out_dir / "biplot.csv", ["role", "label", "pc1", "pc2", "arrow_length"], rows)


def _write_smooth_dump(out_dir: Path, centered: CenteredMatrix, fits: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = (
        [
            d.isoformat(),
            label,
            _fmt(fits[label].fitted[i]),
            _fmt(fits[label].residuals[i]),
        ]
        for label in centered.stream_labels
        for i, d in enumerate(centered.dates)
    )
    _write_rows(out_dir / "smooths.csv", ["date", "stream", "fitted", "residual"], rows)


def _run_analysis(
    base: TimeSeriesMatrix,
    spec: AnalysisSpec,
    reference,
    out_dir: Path,
    dump_smooths: bool = False,
) -> AnalysisOutcome:
    outcome = AnalysisOutcome(name=spec.name)
    started = time.perf_counter()
    matrix = base
    if spec.streams is not None:
        matrix = select_streams(matrix, spec.streams)
    if spec.window is not None:
        matrix = slice_window(matrix, spec.window)
    centered = center_columns(matrix, standardize=spec.standardize)

    weights = None
    if spec.weighted:
        fits = smooth_streams(centered, spec.basis_size)
        if dump_smooths:
            _write_smooth_dump(out_dir, centered, fits)
        outcome.stream_rhos = residual_rhos(centered, fits)
        usable = [v for v in outcome.stream_rhos.values() if v is not None]
        rho = median_rho(usable) if usable else 0.0
        outcome.median_rho = rho
        tw = temporal_weight(len(centered.dates), rho)
        eigs = np.linalg.eigvalsh(tw.omega)
        outcome.omega_eig_range = (float(eigs[0]), float(eigs[-1]))
        if rho != 0.0:
            weights = WeightConfig(row_weight=tw.omega, time_axis="rows")

    result = align_sign(weighted_pca(centered, weights, mode=spec.mode))
    outcome.result = result
    write_result_csvs(out_dir, result)

    if result.mode == "T":
        try:
            flags = tmode_outlier_flags(result, component=0)
            outcome.outliers = [
                {
                    "stream": f.label,
                    "score": f.score,
                    "deviation": f.deviation,
                    "flagged": f.flagged,
                }
                for f in flags
            ]
        except EpipcaError as exc:
            outcome.outliers = [{"error": str(exc)}]
    if reference is not None and result.mode == "S":
        comp_idx = spec.compare_component - 1
        if comp_idx < result.n_components:
            report = compare_with_reference(result, comp_idx, reference)
            outcome.comparison = {
                "component": spec.compare_component,
                "spearman_rho": report.spearman_rho,
                "n_matched": report.n_matched,
                "per_stratum_counts": report.per_stratum_counts,
            }
            _write_rows(
                out_dir / "comparison.csv",
                ["date", "score", "reference", "stratum"],
                (
                    [
                        row.date.isoformat(),
                        _fmt(row.score),
                        _fmt(row.reference) if row.reference is not None else "",
                        row.stratum,
                    ]
                    for row in report.stratified
                ),
            )
    outcome.seconds = time.perf_counter() - started
    return outcome


def _error_kind(exc: EpipcaError) -> str:
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, DataError):
        return "data"
    if isinstance(exc, NumericalError):
        return "numerical"
    return "other"


def _report_entry(outcome: AnalysisOutcome) -> dict:
    entry: dict = {"name": outcome.name, "seconds": round(outcome.seconds, 6)}
    if outcome.error is not None:
        entry["error"] = outcome.error
        entry["error_kind"] = outcome.error_kind
        return entry
    result = outcome.result
    displayed = [
        j
        for j in range(result.n_components)
        if result.variance_fraction[j] >= DISPLAY_FRACTION
    ]
    entry.update(
        {
            "mode": result.mode,
            "n": result.scores.shape[0] if result.mode == "S" else result.loadings.shape[0],
            "p": len(result.stream_labels),
            "variance_fractions": {
                f"PC{j + 1}": float(result.variance_fraction[j]) for j in displayed
            },
            "dominant_loading": {
                f"PC{j + 1}": result.loading_labels[
                    int(np.argmax(np.abs(result.loadings[:, j])))
                ]
                for j in displayed
            },
        }
    )
    if outcome.stream_rhos:
        entry["stream_rho"] = outcome.stream_rhos
        entry["median_rho"] = outcome.median_rho
        entry["omega_eigenvalue_range"] = list(outcome.omega_eig_range)
    if outcome.comparison is not None:
        entry["comparison"] = outcome.comparison
    if outcome.outliers:
        entry["tmode_outliers"] = outcome.outliers
    return entry


def run(config: RunConfig, dump_smooths: bool = False) -> RunReport:
    """Execute every configured analysis; failures do not stop the batch.

    ``dump_smooths`` additionally writes each weighted analysis's
    per-stream fitted/residual series to ``smooths.csv``.
    """
    started = time.perf_counter()
    out_root = Path(config.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    base = ingest_csv(config.input_path, config.schema)
    reference = (
        load_reference_csv(config.reference_path) if config.reference_path else None
    )
    outcomes = []
    for spec in config.analyses:
        try:
            outcome = _run_analysis(
                base, spec, reference, out_root / spec.name, dump_smooths=dump_smooths
            )
        except EpipcaError as exc:
            outcome = AnalysisOutcome(
                name=spec.name, error=str(exc), error_kind=_error_kind(exc)
            )
        outcomes.append(outcome)
    report = RunReport(
        version=__version__,
        config_hash=config.config_hash(),
        outcomes=outcomes,
        total_seconds=time.perf_counter() - started,
    )
    payload = {
        "version": report.version,
        "config_hash": report.config_hash,
        "total_seconds": round(report.total_seconds, 6),
        "analyses": [_report_entry(o) for o in outcomes],
    }
    (out_root / "report.json").write_text(json.dumps(payload, indent=2) + "\n")
    return report


def exit_code_for(report: RunReport) -> int:
    """0 on success; otherwise 2 for data failures, 3 for numerical ones."""
    kinds = {o.error_kind for o in report.failures}
    if not kinds:
        return 0
    if "config" in kinds:
        return 1
    if "data" in kinds or "other" in kinds:
        return 2
    return 3
