"""Ingestion, validation, windowing and centring of surveillance time series.

The central object is :class:`TimeSeriesMatrix`: a date-indexed n x p
matrix with one named column per surveillance stream. All operations are
pure functions returning new objects; nothing here mutates its inputs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConstantColumn,
    DataError,
    DuplicateDate,
    EmptyWindow,
    MalformedCsv,
    MissingColumn,
    NonNumericCell,
    TooFewRows,
    UnknownLabel,
)


@dataclass(frozen=True)
class IngestConfig:
    """Schema for CSV ingestion.

    date_column     name of the ISO-8601 date column
    stream_columns  ordered stream columns to keep; None keeps every
                    non-date column in header order
    date_min/max    optional inclusive date range filter
    """

    date_column: str = "date"
    stream_columns: tuple[str, ...] | None = None
    date_min: date | None = None
    date_max: date | None = None


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """Date-indexed matrix of named surveillance streams.

    Invariants enforced at construction: dates strictly increasing,
    shapes consistent, all values finite.
    """

    dates: tuple[date, ...]
    stream_labels: tuple[str, ...]
    values: np.ndarray
    meta: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values = values.reshape(len(self.dates), len(self.stream_labels))
        if len(set(self.stream_labels)) != len(self.stream_labels):
            raise DataError("stream labels must be unique")
        for a, b in zip(self.dates, self.dates[1:]):
            if a == b:
                raise DuplicateDate(f"duplicate date {b}")
            if a > b:
                raise DataError(f"dates not sorted ascending at {b}")
        if not np.all(np.isfinite(values)):
            raise NonNumericCell("matrix contains non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "stream_labels", tuple(self.stream_labels))
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.dates)

    @property
    def p(self) -> int:
        return len(self.stream_labels)


@dataclass(frozen=True)
class CenteredMatrix:
    """A column mean-centred matrix plus the statistics removed from it.

    ``base`` holds the centred (and optionally standardized) values;
    ``column_means``/``column_sds`` allow back-transformation.
    """

    base: TimeSeriesMatrix
    column_means: np.ndarray
    standardized: bool = False
    column_sds: np.ndarray | None = None

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    @property
    def dates(self) -> tuple[date, ...]:
        return self.base.dates

    @property
    def stream_labels(self) -> tuple[str, ...]:
        return self.base.stream_labels


@dataclass(frozen=True)
class WaveWindow:
    """Named inclusive date window, e.g. one epidemic wave."""

    name: str
    start_date: date
    end_date: date

    def __post_init__(self):
        if self.start_date > self.end_date:
            raise EmptyWindow(
                f"window {self.name!r}: start {self.start_date} after end {self.end_date}"
            )


@dataclass
class ValidationReport:
    """Advisory findings; never blocks or mutates the data.

    gaps       calendar days missing from the daily sequence
    negatives  (date, stream, value) entries below zero
    outliers   (date, stream, value) entries with |v - median| > 5 * MAD
    """

    gaps: list[date] = field(default_factory=list)
    negatives: list[tuple[date, str, float]] = field(default_factory=list)
    outliers: list[tuple[date, str, float]] = field(default_factory=list)

    @property
    def is_clean(self) -> bool:
        return not (self.gaps or self.negatives or self.outliers)


def _parse_iso_date(text: str, row_idx: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError as exc:
        raise MalformedCsv(f"row {row_idx}: unparseable date {text!r}") from exc


def ingest_csv(source, schema: IngestConfig = IngestConfig()) -> TimeSeriesMatrix:
    """Read a CSV extract into a date-sorted :class:`TimeSeriesMatrix`.

    ``source`` may be a path, a text stream or a binary stream of UTF-8
    CSV with a header row. Rows outside the schema's date range are
    dropped; remaining rows are sorted ascending by date.
    """
    if isinstance(source, (str, Path)):
        try:
            fh = open(source, "rb")
        except OSError as exc:
            raise DataError(f"cannot read input file {source}: {exc}") from exc
        with fh:
            m = ingest_csv(fh, schema)
        return TimeSeriesMatrix(
            dates=m.dates, stream_labels=m.stream_labels, values=m.values,
            meta=f"ingested from {source}",
        )
    if isinstance(source, (bytes, bytearray)):
        return ingest_csv(io.BytesIO(bytes(source)), schema)
    raw = source.read()
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedCsv("empty input: no header row") from None
    header = [h.strip() for h in header]
    if schema.date_column not in header:
        raise MissingColumn(f"date column {schema.date_column!r} not in header")
    date_idx = header.index(schema.date_column)
    if schema.stream_columns is None:
        labels = tuple(h for h in header if h != schema.date_column)
    else:
        labels = tuple(schema.stream_columns)
    col_idx = []
    for label in labels:
        if label not in header:
            raise MissingColumn(f"stream column {label!r} not in header")
        col_idx.append(header.index(label))

    rows: list[tuple[date, list[float]]] = []
    seen: dict[date, int] = {}
    for row_idx, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # ignore trailing blank lines
        if len(row) != len(header):
            raise MalformedCsv(
                f"row {row_idx}: expected {len(header)} fields, got {len(row)}"
            )
        d = _parse_iso_date(row[date_idx], row_idx)
        if schema.date_min is not None and d < schema.date_min:
            continue
        if schema.date_max is not None and d > schema.date_max:
            continue
        if d in seen:
            raise DuplicateDate(f"row {row_idx}: date {d} already seen on row {seen[d]}")
        seen[d] = row_idx
        vals = []
        for label, ci in zip(labels, col_idx):
            cell = row[ci].strip()
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCell(
                    f"row {row_idx}, column {label!r}: non-numeric cell {cell!r}"
                ) from None
            if not math.isfinite(v):
                raise NonNumericCell(
                    f"row {row_idx}, column {label!r}: non-finite value {cell!r}"
                )
            vals.append(v)
        rows.append((d, vals))
    if not rows:
        raise MalformedCsv("no data rows in selected date range")
    rows.sort(key=lambda r: r[0])
    dates = tuple(r[0] for r in rows)
    values = np.array([r[1] for r in rows], dtype=float)
    return TimeSeriesMatrix(dates=dates, stream_labels=labels, values=values)


def write_csv(m: TimeSeriesMatrix, target) -> None:
    """Serialize a matrix so that re-ingesting reproduces values bit-exactly.

    Floats are written with ``repr`` (shortest round-trip form).
    """
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            write_csv(m, fh)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["date", *m.stream_labels])
    for d, row in zip(m.dates, m.values):
        writer.writerow([d.isoformat(), *[repr(float(v)) for v in row]])


def slice_window(m: TimeSeriesMatrix, w: WaveWindow) -> TimeSeriesMatrix:
    """Rows with ``w.start_date <= date <= w.end_date``; labels unchanged."""
    keep = [i for i, d in enumerate(m.dates) if w.start_date <= d <= w.end_date]
    if not keep:
        raise EmptyWindow(
            f"window {w.name!r} ({w.start_date}..{w.end_date}) does not "
            f"overlap data range {m.dates[0]}..{m.dates[-1]}"
        )
    meta = f"{m.meta} [window {w.name}]".strip()
    return TimeSeriesMatrix(
        dates=tuple(m.dates[i] for i in keep),
        stream_labels=m.stream_labels,
        values=m.values[keep, :],
        meta=meta,
    )


def select_streams(m: TimeSeriesMatrix, labels: Sequence[str]) -> TimeSeriesMatrix:
    """Subset/reorder columns to ``labels``; dates unchanged."""
    for label in labels:
        if label not in m.stream_labels:
            raise UnknownLabel(f"stream {label!r} not in matrix")
    idx = [m.stream_labels.index(label) for label in labels]
    return TimeSeriesMatrix(
        dates=m.dates,
        stream_labels=tuple(labels),
        values=m.values[:, idx],
        meta=m.meta,
    )


def center_columns(m: TimeSeriesMatrix, standardize: bool = False) -> CenteredMatrix:
    """Subtract column means; optionally scale to unit sample sd.

    The removed means (and sds) are recorded for back-transformation.
    """
    if m.n < 2:
        raise TooFewRows(f"centring needs at least 2 rows, got {m.n}")
    means = m.values.mean(axis=0)
    centred = m.values - means
    sds = None
    if standardize:
        sds = m.values.std(axis=0, ddof=1)
        for j, s in enumerate(sds):
            if s == 0.0:
                raise ConstantColumn(
                    f"stream {m.stream_labels[j]!r} has zero variance; "
                    "cannot standardize"
                )
        centred = centred / sds
    base = TimeSeriesMatrix(
        dates=m.dates, stream_labels=m.stream_labels, values=centred, meta=m.meta
    )
    means = means.copy()
    means.setflags(write=False)
    if sds is not None:
        sds = sds.copy()
        sds.setflags(write=False)
    return CenteredMatrix(
        base=base, column_means=means, standardized=standardize, column_sds=sds
    )


def validate(m: TimeSeriesMatrix) -> ValidationReport:
    """Advisory screen for gaps, negative values and robust outliers."""
    report = ValidationReport()
    expected = m.dates[0]
    for d in m.dates:
        while expected < d:
            report.gaps.append(expected)
            expected += timedelta(days=1)
        expected = d + timedelta(days=1)
    for j, label in enumerate(m.stream_labels):
        col = m.values[:, j]
        med = float(np.median(col))
        mad = float(np.median(np.abs(col - med)))
        for i, v in enumerate(col):
            if v < 0:
                report.negatives.append((m.dates[i], label, float(v)))
            if abs(v - med) > 5.0 * mad:
                report.outliers.append((m.dates[i], label, float(v)))
    return report
