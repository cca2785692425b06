"""Command-line interface: run, synth, plot.

Exit codes: 0 success, 1 configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from datetime import date

from .errors import ConfigError, DataError, EpipcaError, NumericalError
from .pipeline import exit_code_for, load_config, run
from .synthetic import generate_synthetic


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epipca",
        description=(
            "Temporally weighted S-mode / T-mode PCA for multivariate "
            "surveillance time series"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured batch of analyses")
    p_run.add_argument("--config", required=True, help="path to a JSON run config")
    p_run.add_argument(
        "--dump-smooths",
        action="store_true",
        help="also write per-stream fitted/residual series (smooths.csv)",
    )

    p_synth = sub.add_parser("synth", help="generate seeded synthetic data")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--n", type=int, default=300, help="number of days")
    p_synth.add_argument("--p", type=int, default=4, help="number of streams")
    p_synth.add_argument(
        "--trend",
        action="append",
        default=None,
        help="latent trend spec (linear, quadratic, sine:<period>, cosine:<period>); repeatable",
    )
    p_synth.add_argument("--rho", type=float, default=0.5, help="AR(1) noise coefficient")
    p_synth.add_argument("--noise-sd", type=float, default=1.0)
    p_synth.add_argument("--start-date", default="2020-01-01")
    p_synth.add_argument("--out", required=True, help="output CSV path")

    p_plot = sub.add_parser("plot", help="render SVG figures from run outputs")
    p_plot.add_argument(
        "--from", dest="from_dir", required=True, help="analysis or run directory"
    )
    return parser


def _exit_code(exc: EpipcaError) -> int:
    if isinstance(exc, ConfigError):
        return 1
    if isinstance(exc, DataError):
        return 2
    if isinstance(exc, NumericalError):
        return 3
    return 2


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            report = run(config, dump_smooths=args.dump_smooths)
            for outcome in report.outcomes:
                if outcome.error is None:
                    print(f"[ok]   {outcome.name}")
                else:
                    print(f"[fail] {outcome.name}: {outcome.error}", file=sys.stderr)
            print(f"report: {config.output_dir}/report.json")
            return exit_code_for(report)
        if args.command == "synth":
            trends = args.trend or ["sine:100"]
            generate_synthetic(
                seed=args.seed,
                n=args.n,
                p=args.p,
                trends=trends,
                rho=args.rho,
                noise_sd=args.noise_sd,
                out_path=args.out,
                start_date=date.fromisoformat(args.start_date),
            )
            print(f"wrote {args.out} and {args.out}.meta.json")
            return 0
        if args.command == "plot":
            from .plots import emit_plots  # deferred: pulls in matplotlib

            for path in emit_plots(args.from_dir):
                print(f"wrote {path}")
            return 0
    except EpipcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
