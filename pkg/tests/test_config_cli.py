import json

import pytest

from thermoc.cli import main
from thermoc.config import SimConfig, config_from_dict, load_config
from thermoc.dataset import load_csv
from thermoc.errors import ConfigError


class TestConfig:
    def test_defaults_validate(self):
        SimConfig().validate()

    def test_nested_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "dims": [4, 4, 1],
            "pir": 0.02,
            "detector": {"feature_set": 3, "sigma_index": 6},
            "response": {"hysteresis": 64},
        }))
        cfg = load_config(path)
        assert cfg.dims == (4, 4, 1)
        assert cfg.traffic.pir == 0.02
        assert cfg.detector.feature_set == 3
        assert cfg.response.hysteresis == 64

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="detector.bogus"):
            config_from_dict({"detector": {"bogus": 1}})
        with pytest.raises(ConfigError, match="unknown config key: nope"):
            config_from_dict({"nope": 1})

    def test_invariants_rejected(self):
        with pytest.raises(ConfigError, match="pir"):
            config_from_dict({"pir": 1.5})
        with pytest.raises(ConfigError, match="dims"):
            config_from_dict({"dims": [16, 16, 2]})
        with pytest.raises(ConfigError, match="sigma_index"):
            config_from_dict({"detector": {"sigma_index": 9}})
        with pytest.raises(ConfigError, match="t1"):
            config_from_dict({"detector": {"t1": 80.0, "t2": 75.0}})
        with pytest.raises(ConfigError, match="trace_path"):
            config_from_dict({"traffic": {"mode": "trace"}})

    def test_copy_is_deep(self):
        cfg = SimConfig()
        dup = cfg.copy()
        dup.detector.sigma_index = 7
        assert cfg.detector.sigma_index == 5


def _write_small_cfg(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "dims": [4, 4, 1],
        "sim_cycles": 1200,
        "pir": 0.02,
        "trojan": {"count": 2, "credit_cycles": 150, "delta": 3.2},
    }))
    return path


class TestCli:
    def test_run_baseline_clean(self, tmp_path, capsys):
        cfg = _write_small_cfg(tmp_path)
        out = tmp_path / "out"
        rc = main(["run", "--config", str(cfg), "--mode", "baseline",
                   "--seed", "1", "--out", str(out)])
        assert rc == 0
        report = json.loads((out / "metrics_baseline_seed1.json").read_text())
        assert report["metrics"]["drop_rate"] == 0.0
        assert report["metrics"]["recovery_time"] is None

    def test_run_reports_are_reproducible(self, tmp_path):
        cfg = _write_small_cfg(tmp_path)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        main(["run", "--config", str(cfg), "--mode", "mitigated",
              "--seed", "3", "--out", str(out1)])
        main(["run", "--config", str(cfg), "--mode", "mitigated",
              "--seed", "3", "--out", str(out2)])
        a = (out1 / "metrics_mitigated_seed3.json").read_bytes()
        b = (out2 / "metrics_mitigated_seed3.json").read_bytes()
        assert a == b

    def test_invalid_config_diagnostic(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"detector": {"sigma_index": 0}}))
        rc = main(["run", "--config", str(path), "--mode", "baseline"])
        assert rc == 2
        assert "sigma_index" in capsys.readouterr().err

    def test_export_dataset(self, tmp_path):
        cfg = _write_small_cfg(tmp_path)
        out = tmp_path / "out"
        csv = tmp_path / "events.csv"
        rc = main(["export-dataset", "--config", str(cfg), "--mode", "attack",
                   "--seed", "2", "--out", str(out), "--csv", str(csv)])
        assert rc == 0
        rows = load_csv(csv)
        assert rows

    def test_sweep_resumable(self, tmp_path):
        cfg = _write_small_cfg(tmp_path)
        out = tmp_path / "sweep"
        args = ["sweep", "--config", str(cfg), "--sets", "2", "--sigmas", "5",
                "--modes", "baseline,mitigated", "--severities", "1",
                "--seeds", "1,2", "--out", str(out)]
        assert main(args) == 0
        csv_text = (out / "sweep.csv").read_text()
        # 2 modes x 2 seeds x 2 tasks + header
        assert len(csv_text.strip().splitlines()) == 9
        index_before = (out / "index.json").read_text()
        assert main(args) == 0
        assert (out / "index.json").read_text() == index_before
        assert (out / "sweep.csv").read_text() == csv_text

    def test_sweep_requires_seeds(self, tmp_path, capsys):
        cfg = _write_small_cfg(tmp_path)
        rc = main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "s")])
        assert rc == 2

    def test_report_subcommand(self, tmp_path, capsys):
        cfg = _write_small_cfg(tmp_path)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg), "--mode", "baseline", "--seed", "1",
              "--out", str(out), "--coverage"])
        rc = main(["report", str(out / "metrics_baseline_seed1.json")])
        assert rc == 0
        text = capsys.readouterr().out
        assert "mode: baseline" in text
        assert "coverage sigma7" in text
