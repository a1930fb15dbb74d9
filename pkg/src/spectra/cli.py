"""Command line experiment runner.

``spectra run`` executes a scenario from a config file or a built-in
preset and writes one CSV per trial, the trial-averaged aggregate CSV,
and a manifest echoing the exact configuration, into a per-scenario
subdirectory of the output directory.  ``spectra presets`` lists the
built-in scenarios.  Exit codes: 0 success, 1 configuration problem,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .config import (
    ConfigError,
    PRESETS,
    ScenarioConfig,
    config_text,
    parse_config,
    preset_names,
    validate_config,
)
from .metrics import emit_csv
from .simulator import aggregate_traces, run_trial


@dataclass(frozen=True)
class ExperimentSpec:
    """A named scenario plus where to write its outputs."""

    name: str
    config: ScenarioConfig
    out_dir: Path


def run_experiment(spec: ExperimentSpec, quiet: bool = True) -> int:
    """Run all trials, write trial CSVs, aggregate CSV, and manifest."""
    if not spec.name:
        raise ConfigError("experiment name must be non-empty")
    validate_config(spec.config)
    target = Path(spec.out_dir) / spec.name
    target.mkdir(parents=True, exist_ok=True)

    per_trial = []
    for t in range(spec.config.trials):
        traces = run_trial(spec.config, t)
        per_trial.append(traces)
        _write_text(target / f"trial_{t:03d}.csv", emit_csv(traces))
        if not quiet:
            print(f"{spec.name}: trial {t + 1}/{spec.config.trials} done",
                  file=sys.stderr)
    aggregate = aggregate_traces(per_trial)
    _write_text(target / "aggregate.csv", emit_csv(aggregate))
    _write_text(target / "manifest.txt", _manifest_text(spec))
    if not quiet:
        print(f"{spec.name}: wrote {target}", file=sys.stderr)
    return 0


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _manifest_text(spec: ExperimentSpec) -> str:
    head = f"name = {spec.name}\nversion = {__version__}\n"
    return head + config_text(spec.config)


def list_presets() -> str:
    """Human-readable preset listing, one name plus summary per line."""
    lines = []
    for name in preset_names():
        cfg = parse_config(PRESETS[name])
        parts = [
            f"algorithm={cfg.algorithm}", f"n={cfg.n}",
            f"avg_degree={cfg.avg_degree:g}", f"k={cfg.k}",
            f"rounds={cfg.rounds}", f"trials={cfg.trials}",
        ]
        if cfg.loss_rate:
            parts.append(f"loss_rate={cfg.loss_rate:g}")
        if cfg.disturbance is not None:
            parts.append(f"disturbance@{cfg.disturbance.round}")
        if cfg.churn is not None:
            parts.append(f"churn@{cfg.churn.start}")
        lines.append(f"{name}: " + " ".join(parts))
    return "\n".join(lines) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectra",
        description="Gossip-based distributed CDF estimation experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write CSV traces")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", metavar="FILE", help="scenario config file")
    source.add_argument("--preset", metavar="NAME", help="built-in scenario")
    run.add_argument("--out", metavar="DIR", default="results",
                     help="output directory (default: results)")
    run.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed")
    run.add_argument("--trials", type=int, default=None,
                     help="override the trial count")
    run.add_argument("--quiet", action="store_true",
                     help="suppress progress output")

    sub.add_parser("presets", help="list built-in scenarios")
    return parser


def _load_run_spec(args: argparse.Namespace) -> ExperimentSpec:
    if args.preset is not None:
        if args.preset not in PRESETS:
            known = ", ".join(preset_names())
            raise ConfigError(f"unknown preset {args.preset!r}; choose from: {known}")
        name = args.preset
        config = parse_config(PRESETS[args.preset])
    else:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        name = path.stem
        config = parse_config(text)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.trials is not None:
        config = replace(config, trials=args.trials)
    validate_config(config)
    return ExperimentSpec(name=name, config=config, out_dir=Path(args.out))


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; that slot means runtime
        # failure here, so fold usage problems into the config code.
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "presets":
            print(list_presets(), end="")
            return 0
        spec = _load_run_spec(args)
        return run_experiment(spec, quiet=args.quiet)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
