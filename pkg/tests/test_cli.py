import json
import time
from pathlib import Path

import pytest

from basketspan import cli
from basketspan.cli import ConfigError, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_config(**over):
    doc = {
        "name": "tiny",
        "payoff": {"kind": "BestOfCall", "dim": 2, "strike": 1.0},
        "sampling": {"lo": 0.0, "hi": 2.0, "m": 100, "seed": 0},
        "strategy": "nn",
        "train": {"n_options": 4, "epochs": 5},
        "runs": 2,
    }
    doc.update(over)
    return doc


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2) if isinstance(doc, dict) else doc)
    return str(path)


class TestParse:
    @pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
    def test_shipped_configs(self, path):
        cfg = cli.load_config(path)
        assert cfg.payoff.dim >= 1 and cfg.runs >= 1

    def test_line_and_field(self):
        text = json.dumps(small_config(train={"n_options": 4, "epohcs": 5}), indent=2)
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.field_path == "train.epohcs"
        assert info.value.line == text.splitlines().index('    "epohcs": 5') + 1

    def test_bad_json(self):
        with pytest.raises(ConfigError) as info:
            parse_config('{\n  "payoff": {\n  "kind": }\n}')
        assert info.value.line == 3

    @pytest.mark.parametrize("over, field", [
        (dict(strategy="ridge"), "strategy"),
        (dict(runs=0), "runs"),
        (dict(compare=["nn"], expect_lowest="ls_gd"), "expect_lowest"),
        (dict(sampling={"m": -3}), "sampling.m"),
        (dict(common_strike=0), "common_strike"),
        (dict(colour="red"), "colour"),
    ])
    def test_rejects(self, over, field):
        with pytest.raises(ConfigError) as info:
            parse_config(json.dumps(small_config(**over)))
        assert info.value.field_path == field

    def test_missing_train(self):
        doc = small_config()
        del doc["train"]
        with pytest.raises(ConfigError):
            parse_config(json.dumps(doc))


class TestCommands:
    def test_config_error_exit(self, tmp_path, capsys):
        path = write(tmp_path, small_config(runs="many"))
        assert cli.main(["train", "--config", path, "--out", str(tmp_path / "o")]) == 2
        assert "runs" in capsys.readouterr().err

    def test_usage_error_exit(self):
        assert cli.main(["frobnicate"]) == 2
        assert cli.main(["train"]) == 2

    def test_smoke_train(self, tmp_path):
        out = tmp_path / "smoke"
        t0 = time.perf_counter()
        assert cli.main(["train", "--config", str(CONFIGS / "smoke.json"), "--out", str(out)]) == 0
        assert time.perf_counter() - t0 < 5
        assert sorted(p.name for p in out.iterdir()) == ["loss_run0.csv", "portfolio_run0.csv", "report.json"]
        doc = json.loads((out / "report.json").read_text())
        assert doc["schema"] == 1 and len(doc["runs"]) == 1

    def test_seed_override(self, tmp_path):
        path = write(tmp_path, small_config(runs=1))
        cli.main(["train", "--config", path, "--seed-override", "9", "--out", str(tmp_path / "o")])
        doc = json.loads((tmp_path / "o" / "report.json").read_text())
        assert doc["runs"][0]["seed"] == 9

    def test_compare_four_rows(self, tmp_path):
        doc = small_config(compare=["ls_svd_regular", "ls_svd_uniform", "ls_gd", "nn"])
        doc["train"]["n_options"] = 9
        assert cli.main(["compare", "--config", write(tmp_path, doc), "--out", str(tmp_path / "c")]) == 0
        rows = (tmp_path / "c" / "compare.csv").read_text().splitlines()
        assert rows[0] == "strategy,mean_mae,ci95_half_width,runs"
        assert [r.split(",")[0] for r in rows[1:]] == ["ls_svd_regular", "ls_svd_uniform", "ls_gd", "nn"]

    def test_compare_expectation_failure(self, tmp_path):
        # five epochs cannot beat an exact least-squares fit on a small grid
        doc = small_config(compare=["ls_svd_uniform", "nn"], expect_lowest="nn")
        doc["train"]["n_options"] = 9
        assert cli.main(["compare", "--config", write(tmp_path, doc), "--out", str(tmp_path / "c")]) == 1

    def test_export_grid(self, tmp_path):
        doc = small_config(runs=1, export_grid={"points_per_dim": 4})
        assert cli.main(["export-grid", "--config", write(tmp_path, doc), "--out", str(tmp_path / "g")]) == 0
        assert len((tmp_path / "g" / "error_grid.csv").read_text().splitlines()) == 17

    def test_export_grid_requires_2d(self, tmp_path):
        doc = small_config(payoff={"kind": "BestOfCall", "dim": 3}, runs=1)
        assert cli.main(["export-grid", "--config", write(tmp_path, doc), "--out", str(tmp_path / "g")]) == 2


class TestVerify:
    def test_analytic_suite_passes(self, tmp_path, capsys):
        assert cli.main(["verify", "--suite", "analytic", "--out", str(tmp_path)]) == 0
        assert "FAIL" not in capsys.readouterr().out
        assert json.loads((tmp_path / "verify.json").read_text())["schema"] == 1

    def test_breach_exits_one(self, monkeypatch):
        monkeypatch.setitem(cli.SUITES, "analytic", lambda: [cli._check("broken", 1.0, 0.0, 1e-3)])
        assert cli.main(["verify", "--suite", "analytic"]) == 1

    def test_gradient_suite_small(self):
        checks = cli.gradient_suite(draws=5)
        assert len(checks) == 4 and all(c["passed"] for c in checks)
