"""Command-line entry point for the benchmark harness.

Subcommands:

* ``assim run --config FILE [--set key=value ...] --out DIR`` runs the
  configured experiment and writes results.csv, aggregates.csv,
  pod_decay.csv, diagnostics.csv (where applicable), timings.csv and
  run.json into DIR;
* ``assim pod-decay --config FILE [--set ...] [--out DIR]`` computes only
  the reduced-model decay curves;
* ``assim info`` prints the configuration schema.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import (
    ConfigError,
    describe_schema,
    load_config,
    run_experiment,
)

__all__ = ["main"]


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to a key = value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="assim",
        description="state-estimation benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment and write result files")
    _add_config_args(run_p)
    run_p.add_argument("--out", required=True, help="output directory")

    decay_p = sub.add_parser("pod-decay", help="emit only the reduced-model decay curves")
    _add_config_args(decay_p)
    decay_p.add_argument("--out", default=None, help="output directory (default: print)")

    sub.add_parser("info", help="print the configuration schema")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config, args.overrides)
    result = run_experiment(cfg)
    result.write(args.out)
    aggregates = result.aggregates
    print(f"{cfg['experiment']}: {len(result.rows)} rows -> {args.out}")
    header = f"{'method':>8} {'n':>4} {'m':>4} {'alpha':>6} | {'mean%':>8} {'max%':>8} {'min%':>8} {'std%':>8}"
    print(header)
    for agg in aggregates:
        print(
            f"{agg['method']:>8} {agg['n']:>4} {agg['m']:>4} {agg['alpha']:>6g} | "
            f"{100 * agg['mean']:8.3f} {100 * agg['max']:8.3f} "
            f"{100 * agg['min']:8.3f} {100 * agg['stddev']:8.3f}"
        )
    return 0


def _cmd_pod_decay(args) -> int:
    from .bench import _write_pod_decay_csv

    cfg = load_config(args.config, args.overrides)
    result = run_experiment_decay_only(cfg)
    if args.out is None:
        print("label,n,approximation_error")
        for row in result:
            print(f"{row['label']},{row['n']},{row['approximation_error']!r}")
    else:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_pod_decay_csv(result, out / "pod_decay.csv")
        print(f"pod decay -> {out / 'pod_decay.csv'}")
    return 0


def run_experiment_decay_only(cfg: dict) -> list[dict]:
    """Decay curves without running the reconstruction benchmark."""
    from .bench import (
        _grid,
        _pair,
        derive_seed,
        pod_decay_rows,
    )
    from .manifold import (
        MultiscaleSpec,
        PowerLawSpec,
        SinusoidSpec,
        sample_multiscale,
        sample_powerlaw,
        sample_sinusoids,
    )
    from .rom import pod

    grid = _grid(cfg)
    master = cfg["master_seed"]
    n_train = cfg["training.count"]
    n_values = list(range(1, max(cfg["sweep.n"]) + 1))
    experiment = cfg["experiment"]
    if experiment == "example1":
        spec = SinusoidSpec(_pair(cfg, "manifold.amplitude"), _pair(cfg, "manifold.period"))
        training = sample_sinusoids(spec, grid, n_train, derive_seed(master, "training"))
        validation = sample_sinusoids(
            spec, grid, cfg["validation.count"], derive_seed(master, "validation")
        )
        basis = pod(training, min(max(n_values), len(training)))
        labeled = {"full": (validation, basis)}
    elif experiment == "example2":
        spec = MultiscaleSpec(
            num_frequencies=cfg["manifold.num_frequencies"],
            amplitude_range=_pair(cfg, "manifold.amplitude"),
            period_range=_pair(cfg, "manifold.period"),
            phase_range=_pair(cfg, "manifold.phase"),
            jump_location_range=_pair(cfg, "manifold.jump_location"),
            jump_height_range=_pair(cfg, "manifold.jump_height"),
        )
        fast_tr, _, full_tr = sample_multiscale(spec, grid, n_train, derive_seed(master, "training"))
        fast_va, _, full_va = sample_multiscale(
            spec, grid, cfg["validation.count"], derive_seed(master, "validation")
        )
        labeled = {
            "fast": (fast_va, pod(fast_tr, min(max(n_values), len(fast_tr)))),
            "full": (full_va, pod(full_tr, min(max(n_values), len(full_tr)))),
        }
    else:
        spec = PowerLawSpec(
            peak_velocity_range=_pair(cfg, "manifold.peak_velocity"),
            flow_index_range=_pair(cfg, "manifold.flow_index"),
            radius=cfg["manifold.radius"],
        )
        training = sample_powerlaw(spec, grid, n_train, derive_seed(master, "training"))
        validation = sample_powerlaw(
            spec, grid, cfg["validation.count"], derive_seed(master, "validation")
        )
        basis = pod(training, min(max(n_values), len(training)))
        labeled = {"full": (validation, basis)}
    n_values = [n for n in n_values if n <= min(b.dimension for _, b in labeled.values())]
    return pod_decay_rows(labeled, n_values)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "pod-decay":
            return _cmd_pod_decay(args)
        if args.command == "info":
            print(describe_schema())
            return 0
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
