import csv
import json

import numpy as np
import pytest

from assim.bench import (
    ConfigError,
    aggregate_rows,
    default_config,
    derive_seed,
    load_config,
    parse_config,
    parse_overrides,
    run_example1,
    run_example2,
    run_example3_analog,
    run_experiment,
)
from assim.cli import main as cli_main


def small_example1(**overrides):
    cfg = default_config("example1")
    cfg.update(
        {"validation.count": 8, "sweep.n": [1, 3, 5], "training.count": 64}
    )
    cfg.update(overrides)
    return cfg


class TestConfigParsing:
    def test_defaults_round_trip(self):
        cfg = parse_config("experiment = example1\n")
        assert cfg == default_config("example1")

    def test_values_and_comments(self):
        text = """
        # a comment
        experiment = example2
        validation.count = 5    # trailing comment
        sweep.n = 10,20
        dictionary.snap_truth = false
        """
        cfg = parse_config(text)
        assert cfg["validation.count"] == 5
        assert cfg["sweep.n"] == [10, 20]
        assert cfg["dictionary.snap_truth"] is False

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match=":3"):
            parse_config("experiment = example1\n\nnot.a.key = 1\n")

    def test_bad_value_reports_line(self):
        with pytest.raises(ConfigError, match=":2"):
            parse_config("experiment = example1\nvalidation.count = many\n")

    def test_missing_experiment(self):
        with pytest.raises(ConfigError, match="experiment"):
            parse_config("validation.count = 3\n")

    def test_key_for_wrong_experiment(self):
        with pytest.raises(ConfigError, match="does not apply"):
            parse_config("experiment = example1\ndictionary.stride = 4\n")

    def test_overrides(self):
        cfg = default_config("example1")
        out = parse_overrides(cfg, ["noise.sigma=0.5", "sweep.m=10,20"])
        assert out["noise.sigma"] == 0.5
        assert out["sweep.m"] == [10, 20]
        with pytest.raises(ConfigError):
            parse_overrides(cfg, ["bogus=1"])

    def test_empty_sweep_rejected(self):
        with pytest.raises(ConfigError, match="sweep.n"):
            parse_config("experiment = example1\nsweep.n =\n")


class TestSeeding:
    def test_deterministic_and_distinct(self):
        a = derive_seed(1, "noise", 0, "m", 25)
        assert a == derive_seed(1, "noise", 0, "m", 25)
        assert a != derive_seed(1, "noise", 1, "m", 25)
        assert a != derive_seed(2, "noise", 0, "m", 25)


class TestRunExample1:
    def test_noiseless_in_model_truths(self):
        cfg = small_example1(**{
            "validation.reuse_training": True,
            "sweep.alpha": [0.0],
            "noise.sigma": 0.0,
        })
        # full numerical rank of the training family
        from assim import SinusoidSpec, pod, sample_sinusoids
        from assim.bench import _grid

        grid = _grid(cfg)
        spec = SinusoidSpec(tuple(cfg["manifold.amplitude"]), tuple(cfg["manifold.period"]))
        train = sample_sinusoids(spec, grid, cfg["training.count"], derive_seed(cfg["master_seed"], "training"))
        sv = pod(train, len(train)).singular_values
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        cfg["sweep.n"] = [rank]

        res = run_example1(cfg)
        for agg in res.aggregates:
            assert agg["max"] <= 1e-8

    def test_rows_and_aggregates_consistent(self):
        res = run_example1(small_example1())
        recomputed = aggregate_rows(res.rows)
        assert recomputed == res.aggregates
        # 8 cases x 3 dims x 2 methods
        assert len(res.rows) == 48

    def test_determinism_in_memory(self):
        a = run_example1(small_example1())
        b = run_example1(small_example1())
        assert [(r.key(), r.error_e, r.seed) for r in a.rows] == [
            (r.key(), r.error_e, r.seed) for r in b.rows
        ]

    def test_bias_correction_helps(self):
        res = run_example1(small_example1())
        assert res.mean_error("bpbdw", n=5) < res.mean_error("pbdw", n=5)


class TestRunExample2:
    def test_zero_jump_heights_degenerate(self):
        cfg = default_config("example2")
        cfg.update({
            "validation.count": 4,
            "training.count": 64,
            "manifold.jump_height": [0.0, 0.0],
        })
        res = run_example2(cfg)
        e_split = res.mean_error("spbdw", n=20)
        e_plain = res.mean_error("pbdw", n=20)
        assert abs(e_split - e_plain) <= 0.10 * max(e_plain, 1e-12)

    def test_split_beats_plain_and_locates_jumps(self):
        cfg = default_config("example2")
        cfg.update({"validation.count": 8, "training.count": 128})
        res = run_example2(cfg)
        wins = sum(
            s < p for s, p in zip(res.errors("spbdw", n=20), res.errors("pbdw", n=20))
        )
        assert wins >= 7
        for diag in res.diagnostics:
            assert diag["jump_location_estimated"] != ""
            assert diag["jump_cells_off"] <= 2.0

    def test_pod_decay_rows(self):
        cfg = default_config("example2")
        cfg.update({"validation.count": 4, "training.count": 64, "sweep.n": [10]})
        res = run_example2(cfg)
        labels = {r["label"] for r in res.pod_decay}
        assert labels == {"fast", "full"}
        for label in labels:
            errors = [r["approximation_error"] for r in res.pod_decay if r["label"] == label]
            assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))


class TestRunExample3:
    def test_clean_data_recovers_truth(self):
        cfg = default_config("example3_analog")
        cfg.update({"validation.count": 4, "noise.alpha": 0.0, "noise.sigma": 0.0})
        res = run_example3_analog(cfg)
        for agg in res.aggregates:
            assert agg["max"] <= 1e-6

    def test_bias_correction_gain_and_mode1_dominance(self):
        cfg = default_config("example3_analog")
        cfg["validation.count"] = 12
        res = run_example3_analog(cfg)
        assert res.mean_error("bpbdw") <= res.mean_error("pbdw") / 1.5
        for diag in res.diagnostics:
            if diag["method"] == "bpbdw":
                assert diag["mode1_energy_fraction"] >= 0.90


class TestOutputs:
    def test_files_and_determinism(self, tmp_path):
        cfg = small_example1()
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        run_example1(cfg).write(a_dir)
        run_example1(cfg).write(b_dir)
        assert (a_dir / "results.csv").read_bytes() == (b_dir / "results.csv").read_bytes()
        assert (a_dir / "aggregates.csv").read_bytes() == (b_dir / "aggregates.csv").read_bytes()
        for name in ("results.csv", "aggregates.csv", "pod_decay.csv", "timings.csv", "run.json"):
            assert (a_dir / name).exists()

    def test_results_schema(self, tmp_path):
        run_example1(small_example1()).write(tmp_path)
        lines = (tmp_path / "results.csv").read_text().splitlines()
        assert lines[0] == "# schema_version=1"
        assert lines[1] == "case_id,method,n,m,alpha,sigma,error_e,beta,seed"

    def test_aggregates_recomputable_from_rows(self, tmp_path):
        result = run_example1(small_example1())
        result.write(tmp_path)
        with open(tmp_path / "results.csv") as fh:
            fh.readline()
            rows = list(csv.DictReader(fh))
        groups = {}
        for row in rows:
            key = (row["method"], int(row["n"]), int(row["m"]), float(row["alpha"]),
                   float(row["sigma"]))
            groups.setdefault(key, []).append(float(row["error_e"]))
        with open(tmp_path / "aggregates.csv") as fh:
            fh.readline()
            aggs = list(csv.DictReader(fh))
        assert len(aggs) == len(groups)
        for agg in aggs:
            key = (agg["method"], int(agg["n"]), int(agg["m"]), float(agg["alpha"]),
                   float(agg["sigma"]))
            errors = np.asarray(groups[key])
            assert float(agg["mean"]) == errors.mean()
            assert float(agg["max"]) == errors.max()
            assert float(agg["min"]) == errors.min()
            assert float(agg["stddev"]) == errors.std()

    def test_run_json(self, tmp_path):
        run_example1(small_example1()).write(tmp_path)
        payload = json.loads((tmp_path / "run.json").read_text())
        assert payload["schema_version"] == 1
        assert payload["config"]["experiment"] == "example1"
        assert "numpy" in payload["versions"]


class TestCli:
    def write_cfg(self, tmp_path):
        cfg_path = tmp_path / "bench.cfg"
        cfg_path.write_text(
            "experiment = example1\nvalidation.count = 4\nsweep.n = 1,3\ntraining.count = 32\n"
        )
        return cfg_path

    def test_run_command(self, tmp_path, capsys):
        cfg_path = self.write_cfg(tmp_path)
        out_dir = tmp_path / "out"
        code = cli_main(["run", "--config", str(cfg_path), "--out", str(out_dir)])
        assert code == 0
        assert (out_dir / "results.csv").exists()
        assert "example1" in capsys.readouterr().out

    def test_set_override(self, tmp_path):
        cfg_path = self.write_cfg(tmp_path)
        out_dir = tmp_path / "out"
        code = cli_main([
            "run", "--config", str(cfg_path), "--set", "validation.count=2",
            "--out", str(out_dir),
        ])
        assert code == 0
        payload = json.loads((out_dir / "run.json").read_text())
        assert payload["config"]["validation.count"] == 2

    def test_bad_config_is_reported(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.cfg"
        cfg_path.write_text("experiment = example1\nwhat = 1\n")
        code = cli_main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_pod_decay_command(self, tmp_path, capsys):
        cfg_path = self.write_cfg(tmp_path)
        code = cli_main(["pod-decay", "--config", str(cfg_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "label,n,approximation_error"

    def test_info_command(self, capsys):
        assert cli_main(["info"]) == 0
        out = capsys.readouterr().out
        assert "noise.sigma" in out
        assert "dictionary.stride" in out


class TestRunExperimentDispatch:
    def test_dispatch(self):
        cfg = small_example1()
        res = run_experiment(cfg)
        assert res.config["experiment"] == "example1"

    def test_wrong_runner_rejected(self):
        cfg = default_config("example2")
        with pytest.raises(ConfigError):
            run_example1(cfg)
