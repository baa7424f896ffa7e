"""Command-line entry point.

Builds an experiment spec from defaults, an optional config file and
command-line overrides, runs the sweep, writes the result files and (by
default) renders figures from the results CSV.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import (
    BASELINES,
    CHANNEL_MODELS,
    MODES,
    SWEEPS,
    load_config,
    parse_pairs,
    spec_to_pairs,
)
from .errors import ConfigError
from .report import render_figures
from .runner import emit_results, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rismc",
        description=(
            "RIS downlink simulator: optimizes scattering parameters offline, "
            "sweeps power/elements/users against baselines and writes "
            "CSV results, run manifest, scattering states and figures."
        ),
    )
    parser.add_argument("--config", metavar="PATH", help="config file (key = value lines)")
    parser.add_argument("--mode", choices=MODES, help="RIS type")
    parser.add_argument("--sweep", choices=SWEEPS, help="sweep variable")
    parser.add_argument(
        "--values", metavar="CSV-LIST",
        help="sweep values (dBm for power, element counts, or user counts)",
    )
    parser.add_argument("--trials", type=int, metavar="INT", help="independent trials per cell")
    parser.add_argument("--seed", type=int, metavar="INT", help="base RNG seed")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument(
        "--baselines", metavar="CSV-LIST",
        help=f"subset of {{{','.join(BASELINES)}}}",
    )
    parser.add_argument("--channel", choices=CHANNEL_MODELS, help="channel model")
    parser.add_argument("--num-bs", type=int, metavar="INT", help="base stations (geometric model)")
    parser.add_argument(
        "--plot", action=argparse.BooleanOptionalAction, default=True,
        help="render figures from the results CSV (default: on)",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")
    return parser


_FLAG_KEYS = {
    "mode": "mode",
    "sweep": "sweep",
    "values": "values",
    "trials": "trials",
    "seed": "seed",
    "out": "out",
    "baselines": "baselines",
    "channel": "channel_model",
    "num_bs": "num_bs",
}


def spec_from_args(args) -> "ExperimentSpec":
    if args.config:
        spec = load_config(args.config)
    else:
        spec = parse_pairs({})
    overrides = {}
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = str(value)
    if overrides:
        pairs = spec_to_pairs(spec)
        pairs.update(overrides)
        spec = parse_pairs(pairs)
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        spec = spec_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    log = logging.getLogger("rismc")
    log.info(
        "running %s sweep over %s (%d values x %d baselines x %d trials)",
        spec.mode, spec.sweep, len(spec.values),
        len(spec.resolved_baselines()), spec.trials,
    )
    table = run_experiment(spec)
    paths = emit_results(table, spec.out)
    print(f"results: {paths['results']}")
    print(f"manifest: {paths['manifest']}")
    if args.plot:
        for figure in render_figures(paths["results"]):
            print(f"figure: {figure}")

    width = max(len(spec.sweep), 12)
    print(f"\n{spec.sweep:>{width}}  {'baseline':>14}  {'mean rate':>12}  {'std':>10}")
    for cell in table.cells:
        print(
            f"{cell.sweep_value:>{width}.6g}  {cell.baseline:>14}  "
            f"{cell.mean_rate():>12.4f}  {cell.std_rate():>10.4f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
