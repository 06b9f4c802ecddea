"""Benchmark harness: seeded synthetic experiments with CSV/JSON outputs.

Three experiments are provided:

* ``example1``: sinusoid background, biased Gaussian measurements,
  plain vs bias-corrected reconstruction over sweeps of the reduced
  dimension n, the sensor count m and the bias slope alpha;
* ``example2``: oscillation-plus-jump background, multiscale split
  reconstruction vs a plain solve on the full (slowly decaying) basis,
  plus the approximation-error decay of the two reduced models;
* ``example3_analog``: power-law flow profiles, box-constrained plain vs
  bias-corrected reconstruction of a fixed parabolic truth under biased
  noise, reported as a mean/max/min/stddev table.

Configuration is a flat ``key = value`` text format with dotted keys,
overridable one key at a time (``--set key=value`` on the CLI).  Every
per-case random stream is derived from (master_seed, case id, stage), so
results do not depend on execution order and a rerun with the same master
seed reproduces ``results.csv`` byte for byte.  Wall-clock timings are
emitted separately (``timings.csv``) to keep ``results.csv`` deterministic.
"""

from __future__ import annotations

import csv
import io
import json
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bias import NoiseModel, apply_noise, bpbdw_reconstruct
from .manifold import (
    MultiscaleSpec,
    PowerLawSpec,
    SinusoidSpec,
    SnapshotSet,
    powerlaw_profile,
    sample_multiscale,
    sample_powerlaw,
    sample_sinusoids,
)
from .multiscale import spbdw_reconstruct, step_dictionary, total_variation
from .obs import SensorArray, build_observation_space, observe
from .rom import decay_curve, pod
from .solver import compute_box, pbdw_solve, pbdw_solve_boxed
from .space import Grid, GridFunction

__all__ = [
    "ConfigError",
    "ResultRow",
    "RunResult",
    "default_config",
    "parse_config",
    "parse_overrides",
    "load_config",
    "derive_seed",
    "run_experiment",
    "run_example1",
    "run_example2",
    "run_example3_analog",
    "pod_decay_rows",
    "aggregate_rows",
    "describe_schema",
]

SCHEMA_VERSION = 1

EXPERIMENTS = ("example1", "example2", "example3_analog")

PI = np.pi


class ConfigError(ValueError):
    """Invalid benchmark configuration."""


# ---------------------------------------------------------------------------
# configuration schema
# ---------------------------------------------------------------------------

def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


_PARSERS = {
    "str": str.strip,
    "int": lambda t: int(t.strip()),
    "float": lambda t: float(t.strip()),
    "bool": _parse_bool,
    "int_list": _parse_int_list,
    "float_list": _parse_float_list,
}

# key -> (type name, {experiment: default}, help); None marks "not applicable"
_SHARED = {
    "experiment": ("str", {e: e for e in EXPERIMENTS}, "which experiment to run"),
    "master_seed": ("int", {e: 20240605 for e in EXPERIMENTS}, "root of every random stream"),
    "grid.a": ("float", {"example1": 0.0, "example2": 0.0, "example3_analog": -0.5}, "left endpoint"),
    "grid.b": ("float", {"example1": 2 * PI, "example2": 2 * PI, "example3_analog": 0.5}, "right endpoint"),
    "grid.num_points": ("int", {"example1": 512, "example2": 512, "example3_analog": 257}, "grid resolution"),
    "training.count": ("int", {"example1": 128, "example2": 256, "example3_analog": 128}, "training snapshots"),
    "validation.count": ("int", {"example1": 64, "example2": 20, "example3_analog": 40}, "benchmark cases"),
    "validation.reuse_training": ("bool", {e: False for e in EXPERIMENTS},
                                  "draw truths from the training set (diagnostics only)"),
    "sensors.kind": ("str", {e: "box_average" for e in EXPERIMENTS}, "pointwise or box_average"),
    "sensors.width": ("float", {e: 0.0 for e in EXPERIMENTS}, "box width; 0 means inter-sensor spacing"),
    "sweep.n": ("int_list", {"example1": list(range(1, 13)), "example2": [20], "example3_analog": [5]},
                "reduced dimensions to sweep"),
    "sweep.m": ("int_list", {"example1": [25], "example2": [40], "example3_analog": [20]},
                "sensor counts to sweep"),
    "noise.kind": ("str", {e: "linear_bias_gaussian" for e in EXPERIMENTS}, "noise model kind"),
    "noise.sigma": ("float", {"example1": 0.325, "example2": 0.0, "example3_analog": 2.0},
                    "Gaussian spread per raw sensor reading"),
    "noise.mc_samples": ("int", {e: 1000 for e in EXPERIMENTS}, "Monte Carlo samples for expectations"),
    "workers": ("int", {e: 1 for e in EXPERIMENTS}, "threads for the per-case loop"),
}

_EX1 = {
    "sweep.alpha": ("float_list", {"example1": [0.1]}, "bias slopes to sweep"),
    "manifold.amplitude": ("float_list", {"example1": [25.0, 40.0]}, "amplitude range"),
    "manifold.period": ("float_list", {"example1": [PI, 2 * PI]}, "period range"),
}

_EX2 = {
    "noise.alpha": ("float", {"example2": 0.0, "example3_analog": 0.15}, "bias slope"),
    "manifold.num_frequencies": ("int", {"example2": 3}, "sinusoids per snapshot"),
    "manifold.amplitude": ("float_list", {"example2": [0.4, 1.0]}, "amplitude range"),
    "manifold.period": ("float_list", {"example2": [PI / 4, PI]}, "period range"),
    "manifold.phase": ("float_list", {"example2": [0.0, 2 * PI]}, "phase range"),
    "manifold.jump_location": ("float_list", {"example2": [PI / 2, 3 * PI / 2]}, "jump location range"),
    "manifold.jump_height": ("float_list", {"example2": [2.5, 4.5]}, "jump height range"),
    "dictionary.stride": ("int", {"example2": 12}, "grid nodes between step candidates"),
    "dictionary.snap_truth": ("bool", {"example2": True},
                              "snap truth jumps onto dictionary locations"),
    "spbdw.rel_tol": ("float", {"example2": 0.05}, "greedy stopping tolerance"),
    "spbdw.max_iters": ("int", {"example2": 5}, "greedy iteration cap"),
}

_EX3 = {
    "manifold.peak_velocity": ("float_list", {"example3_analog": [40.0, 60.0]}, "peak velocity range [cm/s]"),
    "manifold.flow_index": ("float_list", {"example3_analog": [0.8, 1.2]}, "flow index range"),
    "manifold.radius": ("float", {"example3_analog": 0.5}, "tube radius [cm]"),
    "truth.peak_velocity": ("float", {"example3_analog": 50.0}, "ground-truth peak velocity"),
    "truth.flow_index": ("float", {"example3_analog": 1.0}, "ground-truth flow index"),
    "box.margin": ("float", {"example3_analog": 1.1}, "coefficient box widening factor"),
}


def _merged_schema() -> dict:
    schema: dict = {}
    for part in (_SHARED, _EX1, _EX2, _EX3):
        for key, (typ, defaults, help_) in part.items():
            if key in schema:
                prev_typ, prev_defaults, prev_help = schema[key]
                merged = dict(prev_defaults)
                merged.update(defaults)
                schema[key] = (typ, merged, prev_help)
            else:
                schema[key] = (typ, dict(defaults), help_)
    return schema


SCHEMA = _merged_schema()


def default_config(experiment: str) -> dict:
    """Fully resolved defaults for one experiment."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    cfg = {}
    for key, (_typ, defaults, _help) in SCHEMA.items():
        if experiment in defaults:
            value = defaults[experiment]
            cfg[key] = list(value) if isinstance(value, list) else value
    cfg["experiment"] = experiment
    return cfg


def _apply_entry(entries: dict, key: str, raw: str, where: str) -> None:
    if key not in SCHEMA:
        raise ConfigError(f"{where}: unknown key {key!r}")
    typ = SCHEMA[key][0]
    try:
        entries[key] = _PARSERS[typ](raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {key} = {raw!r} as {typ} ({exc})") from None


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` text into a fully resolved config."""
    entries: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        _apply_entry(entries, key.strip(), raw, f"{source}:{lineno}")
    experiment = entries.get("experiment")
    if experiment is None:
        raise ConfigError(f"{source}: missing required key 'experiment'")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"{source}: unknown experiment {experiment!r}; choose from {EXPERIMENTS}"
        )
    cfg = default_config(experiment)
    for key, value in entries.items():
        if experiment not in SCHEMA[key][1]:
            raise ConfigError(
                f"{source}: key {key!r} does not apply to experiment {experiment!r}"
            )
        cfg[key] = value
    _validate(cfg)
    return cfg


def parse_overrides(cfg: dict, pairs: list[str]) -> dict:
    """Apply ``key=value`` override strings on top of a resolved config."""
    cfg = dict(cfg)
    experiment = cfg["experiment"]
    for i, pair in enumerate(pairs, start=1):
        if "=" not in pair:
            raise ConfigError(f"--set #{i}: expected key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        key = key.strip()
        entries: dict = {}
        _apply_entry(entries, key, raw, f"--set #{i}")
        if key == "experiment":
            raise ConfigError("--set cannot change the experiment; edit the config file")
        if experiment not in SCHEMA[key][1]:
            raise ConfigError(f"--set #{i}: key {key!r} does not apply to {experiment!r}")
        cfg[key] = entries[key]
    _validate(cfg)
    return cfg


def load_config(path: str | Path, overrides: list[str] | None = None) -> dict:
    cfg = parse_config(Path(path).read_text(), source=str(path))
    if overrides:
        cfg = parse_overrides(cfg, overrides)
    return cfg


def _validate(cfg: dict) -> None:
    for key in ("sweep.n", "sweep.m"):
        if not cfg[key]:
            raise ConfigError(f"{key} must not be empty")
    if cfg["experiment"] == "example1" and not cfg["sweep.alpha"]:
        raise ConfigError("sweep.alpha must not be empty")
    if cfg["validation.count"] < 1 or cfg["training.count"] < 1:
        raise ConfigError("training.count and validation.count must be >= 1")


def describe_schema() -> str:
    """Human-readable schema listing for the CLI."""
    out = io.StringIO()
    out.write("configuration keys (flat `key = value` lines; lists are comma separated)\n\n")
    for key, (typ, defaults, help_) in SCHEMA.items():
        applies = ", ".join(sorted(defaults))
        out.write(f"  {key}  [{typ}]  {help_}\n")
        for exp in sorted(defaults):
            out.write(f"      {exp}: default = {defaults[exp]!r}\n")
        out.write(f"      applies to: {applies}\n")
    out.write(
        "\noutputs: results.csv (per-case rows), aggregates.csv, pod_decay.csv,\n"
        "diagnostics.csv (experiment-specific), timings.csv, run.json\n"
    )
    return out.getvalue()


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------

def derive_seed(master_seed: int, *parts) -> int:
    """Stable per-case seed from the master seed and a stage label.

    Strings are folded through CRC32 so the derivation does not depend on
    interpreter hash randomization or execution order.
    """
    key = ":".join(str(p) for p in parts)
    digest = zlib.crc32(key.encode())
    ss = np.random.SeedSequence([int(master_seed), digest])
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------

RESULT_FIELDS = ("case_id", "method", "n", "m", "alpha", "sigma", "error_e", "beta", "seed")


@dataclass(frozen=True)
class ResultRow:
    """One reconstruction outcome."""

    case_id: int
    method: str
    n: int
    m: int
    alpha: float
    sigma: float
    error_e: float
    beta: float
    seed: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.error_e) or self.error_e < 0:
            raise ValueError(f"error_e must be finite and nonnegative, got {self.error_e}")

    def key(self):
        return (self.case_id, self.method, self.n, self.m, self.alpha, self.sigma)


def aggregate_rows(rows: list[ResultRow]) -> list[dict]:
    """Mean/max/min/stddev of the error per (method, n, m, alpha, sigma) cell."""
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        groups.setdefault((row.method, row.n, row.m, row.alpha, row.sigma), []).append(row.error_e)
    out = []
    for key in sorted(groups):
        errors = np.asarray(groups[key])
        method, n, m, alpha, sigma = key
        out.append(
            {
                "method": method,
                "n": n,
                "m": m,
                "alpha": alpha,
                "sigma": sigma,
                "mean": float(errors.mean()),
                "max": float(errors.max()),
                "min": float(errors.min()),
                "stddev": float(errors.std()),
                "count": int(errors.size),
            }
        )
    return out


@dataclass(eq=False)
class RunResult:
    """Everything one experiment run produces."""

    config: dict
    rows: list[ResultRow]
    pod_decay: list[dict]
    diagnostics: list[dict]
    timings: list[dict]

    @property
    def aggregates(self) -> list[dict]:
        return aggregate_rows(self.rows)

    def mean_error(self, method: str, **cell) -> float:
        """Mean error of one aggregate cell; extra keys filter the cell."""
        matches = [
            agg for agg in self.aggregates
            if agg["method"] == method and all(agg[k] == v for k, v in cell.items())
        ]
        if len(matches) != 1:
            raise KeyError(f"cell (method={method}, {cell}) matched {len(matches)} aggregates")
        return matches[0]["mean"]

    def errors(self, method: str, **cell) -> list[float]:
        rows = [
            r for r in sorted(self.rows, key=ResultRow.key)
            if r.method == method and all(getattr(r, k) == v for k, v in cell.items())
        ]
        return [r.error_e for r in rows]

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_results_csv(self.rows, out / "results.csv")
        _write_aggregates_csv(self.aggregates, out / "aggregates.csv")
        if self.pod_decay:
            _write_pod_decay_csv(self.pod_decay, out / "pod_decay.csv")
        if self.diagnostics:
            _write_diagnostics_csv(self.diagnostics, out / "diagnostics.csv")
        _write_timings_csv(self.timings, out / "timings.csv")
        _write_run_json(self.config, out / "run.json")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_versioned_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_results_csv(rows: list[ResultRow], path: Path) -> None:
    ordered = sorted(rows, key=ResultRow.key)
    _write_versioned_csv(
        path,
        list(RESULT_FIELDS),
        [[getattr(r, f) for f in RESULT_FIELDS] for r in ordered],
    )


def _write_aggregates_csv(aggregates: list[dict], path: Path) -> None:
    header = ["method", "n", "m", "alpha", "sigma", "mean", "max", "min", "stddev", "count"]
    _write_versioned_csv(path, header, [[agg[k] for k in header] for agg in aggregates])


def _write_pod_decay_csv(rows: list[dict], path: Path) -> None:
    header = ["label", "n", "approximation_error"]
    _write_versioned_csv(path, header, [[r[k] for k in header] for r in rows])


def _write_diagnostics_csv(rows: list[dict], path: Path) -> None:
    header = list(rows[0].keys())
    _write_versioned_csv(path, header, [[r.get(k, "") for k in header] for r in rows])


def _write_timings_csv(rows: list[dict], path: Path) -> None:
    header = ["case_id", "method", "n", "m", "alpha", "sigma", "runtime_ms"]
    ordered = sorted(rows, key=lambda r: tuple(r[k] for k in header[:6]))
    _write_versioned_csv(path, header, [[r[k] for k in header] for r in ordered])


def _write_run_json(cfg: dict, path: Path) -> None:
    import scipy

    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "versions": {
            "assim": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------

def _map_cases(fn, items, workers: int) -> list:
    """Evaluate ``fn`` per case, possibly on a thread pool.

    Every case carries its own derived seed, so the outputs do not depend on
    scheduling; callers sort rows before emission regardless.
    """
    if workers <= 1:
        return [fn(item) for item in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _grid(cfg: dict) -> Grid:
    return Grid(cfg["grid.a"], cfg["grid.b"], cfg["grid.num_points"])


def _sensor_array(cfg: dict, m: int, grid: Grid) -> SensorArray:
    width = cfg["sensors.width"] or None
    return SensorArray.equidistant(m, grid, kind=cfg["sensors.kind"], width=width)


def _pair(cfg: dict, key: str) -> tuple[float, float]:
    values = cfg[key]
    if len(values) != 2:
        raise ConfigError(f"{key} must have exactly two entries (lo, hi), got {values}")
    return float(values[0]), float(values[1])


def _relative_error(state, truth) -> float:
    return (state - truth).norm() / truth.norm()


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------

def run_example1(cfg: dict) -> RunResult:
    """Sinusoid background: plain vs bias-corrected solve over (n, m, alpha)."""
    if cfg["experiment"] != "example1":
        raise ConfigError(f"config is for {cfg['experiment']!r}, expected 'example1'")
    grid = _grid(cfg)
    spec = SinusoidSpec(_pair(cfg, "manifold.amplitude"), _pair(cfg, "manifold.period"))
    master = cfg["master_seed"]

    training = sample_sinusoids(spec, grid, cfg["training.count"], derive_seed(master, "training"))
    n_max = max(cfg["sweep.n"])
    basis = pod(training, min(n_max, len(training)))
    if n_max > basis.dimension:
        raise ConfigError(
            f"sweep.n goes to {n_max} but only {basis.dimension} snapshots are available"
        )

    if cfg["validation.reuse_training"]:
        count = min(cfg["validation.count"], len(training))
        truths = SnapshotSet(training.snapshots[:count], training.parameters[:count], "full")
    else:
        truths = sample_sinusoids(
            spec, grid, cfg["validation.count"], derive_seed(master, "validation")
        )

    rows: list[ResultRow] = []
    timings: list[dict] = []
    sigma = cfg["noise.sigma"]
    for m in cfg["sweep.m"]:
        space = build_observation_space(_sensor_array(cfg, m, grid), grid)
        for n in cfg["sweep.n"]:
            if n > m:                        # infeasible cell, skip silently
                continue
            background = basis.subspace.truncate(n)
            for alpha in cfg["sweep.alpha"]:
                model = NoiseModel(cfg["noise.kind"], alpha, sigma, cfg["noise.mc_samples"])

                def one_case(item, m=m, n=n, alpha=alpha, model=model,
                             background=background, space=space):
                    case_id, truth = item
                    seed = derive_seed(master, "noise", case_id, "m", m, "n", n,
                                       "alpha", repr(alpha))
                    omega = observe_noisy(truth, space, model, seed)
                    out_rows, out_timings = [], []
                    for method, solve in (
                        ("pbdw", lambda: pbdw_solve(omega, background, space)),
                        ("bpbdw", lambda: bpbdw_reconstruct(omega, background, space, model, seed)),
                    ):
                        start = time.perf_counter()
                        rec = solve()
                        elapsed_ms = (time.perf_counter() - start) * 1e3
                        out_rows.append(ResultRow(case_id, method, n, m, alpha, sigma,
                                                  _relative_error(rec.state, truth),
                                                  rec.beta, seed))
                        out_timings.append({"case_id": case_id, "method": method, "n": n,
                                            "m": m, "alpha": alpha, "sigma": sigma,
                                            "runtime_ms": elapsed_ms})
                    return out_rows, out_timings

                for case_rows, case_timings in _map_cases(
                    one_case, list(enumerate(truths)), cfg["workers"]
                ):
                    rows.extend(case_rows)
                    timings.extend(case_timings)

    decay = pod_decay_rows({"full": (truths, basis)}, cfg["sweep.n"])
    return RunResult(cfg, rows, decay, [], timings)


def observe_noisy(truth, space, model: NoiseModel, seed: int):
    """Noisy observation, falling back to the exact one for a degenerate model."""
    if model.alpha == 0.0 and model.sigma == 0.0 and model.kind == "linear_bias_gaussian":
        return observe(truth, space)
    return apply_noise(truth, space, model, seed)


def run_example2(cfg: dict) -> RunResult:
    """Discontinuous background: multiscale split vs full-basis solve."""
    if cfg["experiment"] != "example2":
        raise ConfigError(f"config is for {cfg['experiment']!r}, expected 'example2'")
    grid = _grid(cfg)
    spec = MultiscaleSpec(
        num_frequencies=cfg["manifold.num_frequencies"],
        amplitude_range=_pair(cfg, "manifold.amplitude"),
        period_range=_pair(cfg, "manifold.period"),
        phase_range=_pair(cfg, "manifold.phase"),
        jump_location_range=_pair(cfg, "manifold.jump_location"),
        jump_height_range=_pair(cfg, "manifold.jump_height"),
    )
    master = cfg["master_seed"]

    fast_train, _slow_train, full_train = sample_multiscale(
        spec, grid, cfg["training.count"], derive_seed(master, "training")
    )
    n_max = max(cfg["sweep.n"])
    fast_basis = pod(fast_train, min(n_max, len(fast_train)))
    full_basis = pod(full_train, min(n_max, len(full_train)))

    fast_val, _slow_val, full_val = sample_multiscale(
        spec, grid, cfg["validation.count"], derive_seed(master, "validation")
    )

    alpha, sigma = cfg["noise.alpha"], cfg["noise.sigma"]
    model = (
        NoiseModel(cfg["noise.kind"], alpha, sigma, cfg["noise.mc_samples"])
        if (alpha != 0.0 or sigma != 0.0)
        else None
    )

    rows: list[ResultRow] = []
    timings: list[dict] = []
    diagnostics: list[dict] = []
    for m in cfg["sweep.m"]:
        space = build_observation_space(_sensor_array(cfg, m, grid), grid)
        dictionary = step_dictionary(
            grid, space, _pair(cfg, "manifold.jump_location"), cfg["dictionary.stride"]
        )
        cases = _example2_cases(cfg, dictionary, fast_val, full_val)
        for n in cfg["sweep.n"]:
            fast_bg = fast_basis.subspace.truncate(min(n, fast_basis.dimension))
            full_bg = full_basis.subspace.truncate(min(n, full_basis.dimension))

            def one_case(item, m=m, n=n, fast_bg=fast_bg, full_bg=full_bg,
                         space=space, dictionary=dictionary):
                case_id, (truth, true_location) = item
                seed = derive_seed(master, "noise", case_id, "m", m, "n", n)
                noise = model if model is not None else NoiseModel()
                omega = observe_noisy(truth, space, noise, seed)
                tv_truth = total_variation(truth)

                start = time.perf_counter()
                dec = spbdw_reconstruct(
                    omega, fast_bg, space, dictionary, model=model, seed=seed,
                    rel_tol=cfg["spbdw.rel_tol"], max_iters=cfg["spbdw.max_iters"],
                )
                split_ms = (time.perf_counter() - start) * 1e3
                start = time.perf_counter()
                rec = pbdw_solve(omega, full_bg, space)
                plain_ms = (time.perf_counter() - start) * 1e3

                estimated = dec.dominant_jump_location()
                case_rows = [
                    ResultRow(case_id, "spbdw", n, m, alpha, sigma,
                              _relative_error(dec.u_star, truth), dec.u_f.beta, seed),
                    ResultRow(case_id, "pbdw", n, m, alpha, sigma,
                              _relative_error(rec.state, truth), rec.beta, seed),
                ]
                case_timings = [
                    {"case_id": case_id, "method": "spbdw", "n": n, "m": m,
                     "alpha": alpha, "sigma": sigma, "runtime_ms": split_ms},
                    {"case_id": case_id, "method": "pbdw", "n": n, "m": m,
                     "alpha": alpha, "sigma": sigma, "runtime_ms": plain_ms},
                ]
                case_diag = {
                    "case_id": case_id,
                    "n": n,
                    "m": m,
                    "jump_location_true": true_location,
                    "jump_location_estimated": "" if estimated is None else estimated,
                    "jump_cells_off": (
                        "" if estimated is None
                        else abs(estimated - true_location) / grid.h
                    ),
                    "num_smoothers": len(dec.smoothers),
                    "tv_truth": tv_truth,
                    "tv_excess_spbdw": total_variation(dec.u_star) - tv_truth,
                    "tv_excess_pbdw": total_variation(rec.state) - tv_truth,
                }
                return case_rows, case_timings, case_diag

            for case_rows, case_timings, case_diag in _map_cases(
                one_case, list(enumerate(cases)), cfg["workers"]
            ):
                rows.extend(case_rows)
                timings.extend(case_timings)
                diagnostics.append(case_diag)

    n_values = sorted(set(range(1, min(n_max, fast_basis.dimension, full_basis.dimension) + 1)))
    decay = pod_decay_rows(
        {"fast": (fast_val, fast_basis), "full": (full_val, full_basis)}, n_values
    )
    return RunResult(cfg, rows, decay, diagnostics, timings)


def _example2_cases(cfg, dictionary, fast_val, full_val):
    """Per-case (truth, jump location); optionally snapped onto the dictionary."""
    locations = np.array([p["jump_location"] for p in dictionary.parameters])
    cases = []
    for k in range(len(full_val)):
        params = full_val.parameters[k]
        true_loc = params["jump_location"]
        if cfg["dictionary.snap_truth"]:
            true_loc = float(locations[np.argmin(np.abs(locations - true_loc))])
            height = params["jump_height"]
            grid = full_val.grid
            slow = GridFunction(grid, height * (grid.nodes >= true_loc - 1e-12).astype(float))
            truth = fast_val.snapshots[k] + slow
        else:
            truth = full_val.snapshots[k]
        cases.append((truth, true_loc))
    return cases


def run_example3_analog(cfg: dict) -> RunResult:
    """Power-law profiles: box-constrained plain vs bias-corrected solve."""
    if cfg["experiment"] != "example3_analog":
        raise ConfigError(f"config is for {cfg['experiment']!r}, expected 'example3_analog'")
    grid = _grid(cfg)
    spec = PowerLawSpec(
        peak_velocity_range=_pair(cfg, "manifold.peak_velocity"),
        flow_index_range=_pair(cfg, "manifold.flow_index"),
        radius=cfg["manifold.radius"],
    )
    master = cfg["master_seed"]

    training = sample_powerlaw(spec, grid, cfg["training.count"], derive_seed(master, "training"))
    n_max = max(cfg["sweep.n"])
    basis = pod(training, min(n_max, len(training)))
    truth = powerlaw_profile(
        grid, cfg["truth.peak_velocity"], cfg["truth.flow_index"], cfg["manifold.radius"]
    )

    alpha, sigma = cfg["noise.alpha"], cfg["noise.sigma"]
    model = NoiseModel(cfg["noise.kind"], alpha, sigma, cfg["noise.mc_samples"])

    rows: list[ResultRow] = []
    timings: list[dict] = []
    diagnostics: list[dict] = []
    for m in cfg["sweep.m"]:
        space = build_observation_space(_sensor_array(cfg, m, grid), grid)
        for n in cfg["sweep.n"]:
            background = basis.subspace.truncate(n)
            box = compute_box(training, background, cfg["box.margin"])

            def one_case(case_id, m=m, n=n, background=background, space=space, box=box):
                seed = derive_seed(master, "noise", case_id, "m", m, "n", n)
                omega = observe_noisy(truth, space, model, seed)
                case_rows, case_timings, case_diag = [], [], []
                for method, solve in (
                    ("pbdw", lambda: pbdw_solve_boxed(omega, background, space, box)),
                    ("bpbdw", lambda: bpbdw_reconstruct(omega, background, space, model, seed,
                                                        box=box)),
                ):
                    start = time.perf_counter()
                    rec = solve()
                    elapsed_ms = (time.perf_counter() - start) * 1e3
                    case_rows.append(ResultRow(case_id, method, n, m, alpha, sigma,
                                               _relative_error(rec.state, truth),
                                               rec.beta, seed))
                    case_timings.append({"case_id": case_id, "method": method, "n": n,
                                         "m": m, "alpha": alpha, "sigma": sigma,
                                         "runtime_ms": elapsed_ms})
                    energy = float(np.sum(rec.rom_coeffs**2))
                    case_diag.append(
                        {
                            "case_id": case_id,
                            "method": method,
                            "n": n,
                            "m": m,
                            "mode1_energy_fraction": (
                                float(rec.rom_coeffs[0] ** 2 / energy) if energy > 0 else 0.0
                            ),
                        }
                    )
                return case_rows, case_timings, case_diag

            for case_rows, case_timings, case_diag in _map_cases(
                one_case, list(range(cfg["validation.count"])), cfg["workers"]
            ):
                rows.extend(case_rows)
                timings.extend(case_timings)
                diagnostics.extend(case_diag)

    decay = pod_decay_rows({"full": (training, basis)}, sorted(set(cfg["sweep.n"])))
    return RunResult(cfg, rows, decay, diagnostics, timings)


def pod_decay_rows(labeled: dict, n_values: list[int]) -> list[dict]:
    """Approximation-error decay rows for labeled (snapshots, basis) pairs."""
    rows = []
    for label in sorted(labeled):
        snapshots, basis = labeled[label]
        usable = [n for n in n_values if 1 <= n <= basis.dimension]
        errors = decay_curve(snapshots, basis, usable)
        rows.extend(
            {"label": label, "n": n, "approximation_error": err}
            for n, err in zip(usable, errors)
        )
    return rows


_RUNNERS = {
    "example1": run_example1,
    "example2": run_example2,
    "example3_analog": run_example3_analog,
}


def run_experiment(cfg: dict) -> RunResult:
    return _RUNNERS[cfg["experiment"]](cfg)
