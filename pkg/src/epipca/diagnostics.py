"""Comparison of principal scores against external reference indicators.

Covers rank correlation with a weekly reference series (e.g. published
reproduction-number bounds), stratified join tables for coloured score
plots, and robust outlier flagging of T-mode stream scores.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DegenerateRanks,
    DuplicateDate,
    LengthMismatch,
    MalformedCsv,
    NoOverlap,
    TooFewStreams,
)
from .pca import PcaResult

#: stratum labels used by the reference-series loader
REFERENCE_STRATA = ("R<1", "R=1", "R>1", "missing")

#: label given to score dates not covered by any reference week
MISSING_STRATUM = "missing"


@dataclass(frozen=True)
class ReferenceSeries:
    """External indicator series with optional stratification labels.

    ``values`` may contain NaN for dates where the indicator exists but
    no estimate was published; such rows never count as matched.
    """

    dates: tuple[date, ...]
    values: np.ndarray
    strata: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise DuplicateDate(f"reference dates must strictly increase at {b}")
        if self.strata is not None and len(self.strata) != len(self.dates):
            raise LengthMismatch("strata must align with dates")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", values)
        if self.strata is not None:
            object.__setattr__(self, "strata", tuple(self.strata))


@dataclass(frozen=True)
class JoinedRow:
    """One daily score joined to its reference week (or to no week)."""

    date: date
    score: float
    reference: float | None
    stratum: str


@dataclass(frozen=True)
class ComparisonReport:
    """Summary of a score-vs-reference comparison.

    ``joined_table`` holds only matched rows (n_matched == its length);
    ``stratified`` holds every score date with its stratum, including
    "missing", ready for coloured plotting.
    """

    spearman_rho: float
    n_matched: int
    per_stratum_counts: dict[str, int]
    joined_table: list[JoinedRow]
    stratified: list[JoinedRow]


def spearman(a, b) -> float:
    """Rank correlation: Pearson correlation of average-ranked values."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"inputs must be equal-length vectors, got {a.shape} and {b.shape}")
    if len(a) < 3:
        raise LengthMismatch(f"need at least 3 points, got {len(a)}")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        raise DegenerateRanks("an input is constant; ranks are undefined")
    rho = float(np.corrcoef(rankdata(a), rankdata(b))[0, 1])
    return float(np.clip(rho, -1.0, 1.0))


def load_reference_csv(source) -> ReferenceSeries:
    """Read a `week_start,lower,upper` CSV into a stratified ReferenceSeries.

    The compared value is the upper bound. Strata: "R>1" when
    lower > 1, "R<1" when upper < 1, otherwise "R=1"; rows with blank
    bounds become "missing" with a NaN value.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return load_reference_csv(fh)
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MalformedCsv("empty reference file") from None
    required = ["week_start", "lower", "upper"]
    for col in required:
        if col not in header:
            raise MalformedCsv(f"reference header must contain {required}, got {header}")
    iw, il, iu = (header.index(c) for c in required)
    rows = []
    for row_idx, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        try:
            d = date.fromisoformat(row[iw].strip())
        except ValueError:
            raise MalformedCsv(f"row {row_idx}: unparseable week_start {row[iw]!r}") from None
        lo_text, up_text = row[il].strip(), row[iu].strip()
        if not lo_text or not up_text:
            rows.append((d, math.nan, MISSING_STRATUM))
            continue
        try:
            lo, up = float(lo_text), float(up_text)
        except ValueError:
            raise MalformedCsv(f"row {row_idx}: non-numeric bound") from None
        if lo > 1.0:
            stratum = "R>1"
        elif up < 1.0:
            stratum = "R<1"
        else:
            stratum = "R=1"
        rows.append((d, up, stratum))
    rows.sort(key=lambda r: r[0])
    return ReferenceSeries(
        dates=tuple(r[0] for r in rows),
        values=np.array([r[1] for r in rows]),
        strata=tuple(r[2] for r in rows),
    )


def join_by_week(
    score_dates: Sequence[date], scores, ref: ReferenceSeries
) -> list[JoinedRow]:
    """Match each daily score to the reference week containing its date.

    A reference entry published on day d covers d..d+6. Score dates
    outside every covered week get the "missing" stratum and no value.
    Raises NoOverlap when nothing matches.
    """
    scores = np.asarray(scores, dtype=float)
    if len(score_dates) != len(scores):
        raise LengthMismatch("score dates and values must align")
    ref_ordinals = np.array([d.toordinal() for d in ref.dates])
    out: list[JoinedRow] = []
    matched = 0
    for d, s in zip(score_dates, scores):
        idx = int(np.searchsorted(ref_ordinals, d.toordinal(), side="right")) - 1
        value = None
        stratum = MISSING_STRATUM
        if idx >= 0 and d.toordinal() - ref_ordinals[idx] <= 6:
            v = float(ref.values[idx])
            if math.isfinite(v):
                value = v
                matched += 1
                stratum = ref.strata[idx] if ref.strata is not None else "matched"
            elif ref.strata is not None:
                stratum = ref.strata[idx]
        out.append(JoinedRow(date=d, score=float(s), reference=value, stratum=stratum))
    if matched == 0:
        raise NoOverlap("no score date falls inside a reference week with a value")
    return out


def compare_with_reference(
    result: PcaResult, component: int, ref: ReferenceSeries
) -> ComparisonReport:
    """Join one S-mode score component to a reference and rank-correlate.

    ``component`` is zero-based (0 selects PC1).
    """
    if result.mode != "S":
        raise ValueError("reference comparison needs date-indexed (S-mode) scores")
    if not 0 <= component < result.n_components:
        raise ValueError(
            f"component must be in 0..{result.n_components - 1}, got {component}"
        )
    rows = join_by_week(result.dates, result.scores[:, component], ref)
    matched = [r for r in rows if r.reference is not None]
    rho = spearman([r.score for r in matched], [r.reference for r in matched])
    counts = Counter(r.stratum for r in rows)
    return ComparisonReport(
        spearman_rho=rho,
        n_matched=len(matched),
        per_stratum_counts=dict(counts),
        joined_table=matched,
        stratified=rows,
    )


@dataclass(frozen=True)
class OutlierFlag:
    """Per-stream deviation from the median T-mode score."""

    label: str
    score: float
    deviation: float
    flagged: bool


def tmode_outlier_flags(result: PcaResult, component: int = 0) -> list[OutlierFlag]:
    """Flag streams whose T-mode score deviates more than 3.5 MAD from the median.

    Returns every stream ordered by deviation, largest first.
    """
    if result.mode != "T":
        raise ValueError("outlier flagging needs a T-mode result")
    if not 0 <= component < result.n_components:
        raise ValueError(f"component must be in 0..{result.n_components - 1}")
    scores = result.scores[:, component]
    if len(scores) < 4:
        raise TooFewStreams(f"need at least 4 streams, got {len(scores)}")
    med = float(np.median(scores))
    dev = np.abs(scores - med)
    mad = float(np.median(dev))
    flags = [
        OutlierFlag(
            label=label,
            score=float(s),
            deviation=float(d),
            flagged=bool(d > 3.5 * mad),
        )
        for label, s, d in zip(result.score_labels, scores, dev)
    ]
    flags.sort(key=lambda f: f.deviation, reverse=True)
    return flags
