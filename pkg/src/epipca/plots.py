"""Static SVG figures rendered from run output CSVs.

Plotting is a pure function of the CSV files, so figures can be
regenerated without recomputing an analysis. Text is kept as text in
the SVG (not outlined paths) and arrows carry stable ``id`` attributes,
which makes the figures scriptable and testable.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import MissingOutput  # noqa: E402
from .pipeline import DISPLAY_FRACTION  # noqa: E402

STRATUM_COLORS = {
    "R<1": "tab:red",
    "R=1": "tab:green",
    "R>1": "teal",
    "missing": "purple",
}

_RC = {"svg.fonttype": "none", "svg.hashsalt": "epipca"}


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.exists():
        raise MissingOutput(f"expected run output {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader if row]


def plot_scores(analysis_dir: Path) -> Path:
    """Stacked line panels of the displayed score components."""
    header, rows = _read_csv(analysis_dir / "scores.csv")
    _, vrows = _read_csv(analysis_dir / "variance.csv")
    fractions = {row[0]: float(row[2]) for row in vrows}
    pcs = header[1:]
    shown = [pc for pc in pcs if fractions.get(pc, 0.0) >= DISPLAY_FRACTION]
    minimum = pcs[: min(2, len(pcs))]
    if len(shown) < len(minimum):
        shown = minimum
    labels = [row[0] for row in rows]
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(
            len(shown), 1, figsize=(8, 2.2 * len(shown)), squeeze=False, sharex=True
        )
        x = range(len(labels))
        for ax, pc in zip(axes[:, 0], shown):
            col = header.index(pc)
            ax.plot(x, [float(r[col]) for r in rows], lw=1.2)
            ax.set_title(f"{pc} ({100 * fractions.get(pc, 0.0):.1f}% of variance)")
            ax.set_ylabel(pc)
        ticks = list(x)[:: max(1, len(labels) // 8)]
        axes[-1, 0].set_xticks(ticks)
        axes[-1, 0].set_xticklabels([labels[i] for i in ticks], rotation=30, ha="right")
        fig.tight_layout()
        out = analysis_dir / "scores.svg"
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out


def plot_biplot(analysis_dir: Path) -> Path:
    """Score cloud with one labelled loading arrow per stream."""
    _, rows = _read_csv(analysis_dir / "biplot.csv")
    arrows = [r for r in rows if r[0] == "arrow"]
    points = [r for r in rows if r[0] == "point"]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 7))
        xs = [float(r[2]) for r in points]
        ys = [float(r[3]) for r in points]
        ax.scatter(xs, ys, s=8, alpha=0.5, color="grey", label="scores")
        span = max(max(map(abs, xs), default=1.0), max(map(abs, ys), default=1.0))
        arrow_span = max(
            max((abs(float(r[2])) for r in arrows), default=1.0),
            max((abs(float(r[3])) for r in arrows), default=1.0),
        )
        scale = 0.8 * span / arrow_span if arrow_span > 0 else 1.0
        tips = [(float(r[2]) * scale, float(r[3]) * scale) for r in arrows]
        for r, (x, y) in zip(arrows, tips):
            label = r[1]
            artist = ax.annotate(
                "",
                xy=(x, y),
                xytext=(0.0, 0.0),
                arrowprops={"arrowstyle": "->", "color": "tab:blue", "lw": 1.6},
            )
            artist.arrow_patch.set_gid(f"arrow-{label}")
            ax.annotate(label, xy=(x, y), fontsize=9, color="tab:blue")
        # annotations do not autoscale; widen limits so no arrow is clipped away
        extent = 1.1 * max(
            span, max((abs(x) for x, _ in tips), default=0.0), max((abs(y) for _, y in tips), default=0.0)
        )
        ax.set_xlim(-extent, extent)
        ax.set_ylim(-extent, extent)
        ax.axhline(0.0, color="black", lw=0.5)
        ax.axvline(0.0, color="black", lw=0.5)
        ax.set_xlabel("PC1")
        ax.set_ylabel("PC2")
        fig.tight_layout()
        out = analysis_dir / "biplot.svg"
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out


def plot_comparison(analysis_dir: Path) -> Path:
    """Score series coloured by reference stratum."""
    header, rows = _read_csv(analysis_dir / "comparison.csv")
    idx = {name: header.index(name) for name in ("date", "score", "stratum")}
    strata_order = list(STRATUM_COLORS)
    extra = [s for s in {r[idx["stratum"]] for r in rows} if s not in STRATUM_COLORS]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(9, 4))
        for stratum in strata_order + sorted(extra):
            sel = [(i, r) for i, r in enumerate(rows) if r[idx["stratum"]] == stratum]
            if not sel:
                continue
            ax.scatter(
                [i for i, _ in sel],
                [float(r[idx["score"]]) for _, r in sel],
                s=10,
                color=STRATUM_COLORS.get(stratum, "black"),
                label=stratum,
            )
        ticks = range(0, len(rows), max(1, len(rows) // 8))
        ax.set_xticks(list(ticks))
        ax.set_xticklabels([rows[i][idx["date"]] for i in ticks], rotation=30, ha="right")
        ax.set_ylabel("score")
        ax.legend(title="stratum")
        fig.tight_layout()
        out = analysis_dir / "comparison.svg"
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out


def emit_plots(from_dir) -> list[Path]:
    """Render every available figure for one analysis directory, or for
    each analysis subdirectory of a run directory."""
    root = Path(from_dir)
    if (root / "scores.csv").exists():
        targets = [root]
    else:
        targets = sorted(d for d in root.iterdir() if (d / "scores.csv").exists())
        if not targets:
            raise MissingOutput(f"no scores.csv under {root}")
    written = []
    for analysis_dir in targets:
        written.append(plot_scores(analysis_dir))
        if (analysis_dir / "biplot.csv").exists():
            written.append(plot_biplot(analysis_dir))
        if (analysis_dir / "comparison.csv").exists():
            written.append(plot_comparison(analysis_dir))
    return written
