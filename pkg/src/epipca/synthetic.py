"""Seeded synthetic surveillance data for tests and benchmarks.

Streams are linear mixtures of latent temporal trends plus stationary
AR(1) noise. The exact trends and mixing matrix are echoed to a
sidecar JSON so downstream checks can reconstruct the ground truth.
"""

from __future__ import annotations

import json
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .data_model import TimeSeriesMatrix, write_csv
from .errors import InvalidParams


def trend_vector(name: str, n: int) -> np.ndarray:
    """Named latent trend over indices 0..n-1.

    Supported: "linear", "quadratic", "sine:<period>", "cosine:<period>"
    (period in samples, default n/4). All trends are mean-centred.
    """
    kind, _, arg = name.partition(":")
    i = np.arange(n, dtype=float)
    if kind == "linear":
        t = np.linspace(-1.0, 1.0, n)
    elif kind == "quadratic":
        t = np.linspace(-1.0, 1.0, n) ** 2
    elif kind in ("sine", "cosine"):
        period = float(arg) if arg else n / 4.0
        if period <= 0:
            raise InvalidParams(f"period must be positive in {name!r}")
        phase = 2.0 * np.pi * i / period
        t = np.sin(phase) if kind == "sine" else np.cos(phase)
    else:
        raise InvalidParams(f"unknown trend {name!r}")
    return t - t.mean()


def ar1_noise(rng: np.random.Generator, n: int, p: int, rho: float, sd: float) -> np.ndarray:
    """Stationary AR(1) noise, marginal standard deviation ``sd`` per column."""
    z = rng.standard_normal((n, p))
    if sd == 0.0:
        return np.zeros((n, p))
    e = np.empty((n, p))
    e[0] = sd * z[0]
    scale = sd * np.sqrt(1.0 - rho * rho)
    for t in range(1, n):
        e[t] = rho * e[t - 1] + scale * z[t]
    return e


def generate_synthetic(
    seed: int,
    n: int,
    p: int,
    trends,
    rho: float,
    noise_sd: float,
    out_path,
    mixing: np.ndarray | None = None,
    start_date: date = date(2020, 1, 1),
) -> TimeSeriesMatrix:
    """Write a synthetic CSV plus a ``<out>.meta.json`` ground-truth sidecar.

    ``trends`` is a list of trend names (see :func:`trend_vector`) or
    n-vectors. ``mixing`` is an optional (n_trends x p) matrix; when
    omitted it is drawn from the seeded generator. Identical arguments
    produce a byte-identical CSV.
    """
    if n < 10 or p < 2:
        raise InvalidParams(f"need n >= 10 and p >= 2, got n={n}, p={p}")
    if abs(rho) >= 1.0:
        raise InvalidParams(f"|rho| must be < 1, got {rho}")
    if noise_sd < 0:
        raise InvalidParams(f"noise sd must be nonnegative, got {noise_sd}")
    if not trends:
        raise InvalidParams("need at least one latent trend")
    rng = np.random.default_rng(seed)
    latent = np.column_stack(
        [trend_vector(t, n) if isinstance(t, str) else np.asarray(t, dtype=float) for t in trends]
    )
    if latent.shape != (n, len(trends)):
        raise InvalidParams("trend vectors must have length n")
    if mixing is None:
        mixing = rng.standard_normal((latent.shape[1], p))
    else:
        mixing = np.asarray(mixing, dtype=float)
        if mixing.shape != (latent.shape[1], p):
            raise InvalidParams(
                f"mixing must be ({latent.shape[1]}, {p}), got {mixing.shape}"
            )
    values = latent @ mixing + ar1_noise(rng, n, p, rho, noise_sd)
    labels = tuple(f"stream_{j + 1:02d}" for j in range(p))
    dates = tuple(start_date + timedelta(days=i) for i in range(n))
    matrix = TimeSeriesMatrix(
        dates=dates, stream_labels=labels, values=values, meta=f"synthetic seed={seed}"
    )
    out_path = Path(out_path)
    write_csv(matrix, out_path)
    sidecar = {
        "seed": seed,
        "n": n,
        "p": p,
        "rho": rho,
        "noise_sd": noise_sd,
        "trend_names": [t if isinstance(t, str) else "custom" for t in trends],
        "trends": latent.T.tolist(),
        "mixing": mixing.tolist(),
        "stream_labels": list(labels),
    }
    out_path.with_suffix(out_path.suffix + ".meta.json").write_text(
        json.dumps(sidecar, indent=2) + "\n"
    )
    return matrix
