import json

import numpy as np
import pytest

from cgan.losses import CGANConfig
from config.settings import merge_layers
from dataeval.metrics import ConfusionMatrix
from main import build_parser, main, resolve_config
from model.trainer import TrainingConfig


def _last_json(text):
    return json.loads(text.strip().splitlines()[-1])


def _error_line(stderr):
    for line in stderr.splitlines():
        try:
            payload = json.loads(line)
        except json.JSONDecodeError:
            continue
        if payload.get("status") == "error":
            return payload
    raise AssertionError(f"no error line in stderr: {stderr!r}")


def test_shape_plan_reports_flattened_lengths(tmp_path, capsys):
    assert main(["shape-plan", "--patch-size", "276", "--classes", "8", "--out", str(tmp_path)]) == 0
    printed = capsys.readouterr().out
    assert "115320" in printed and "807240" in printed
    assert (tmp_path / "shape_plan.csv").is_file()
    resolved = json.loads((tmp_path / "resolved_config.json").read_text(encoding="utf-8"))
    assert resolved["command"] == "shape-plan"
    assert resolved["model"]["patch_size"] == 276


def test_too_small_patch_exits_with_error(tmp_path, capsys):
    assert main(["shape-plan", "--patch-size", "19", "--out", str(tmp_path)]) == 1
    payload = _error_line(capsys.readouterr().err)
    assert payload["error"] == "ConfigurationError"
    assert "C3" in payload["message"]


def test_unknown_command_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["dance"])
    assert info.value.code == 2


def test_missing_manifest(tmp_path, capsys):
    code = main(["extract-patches", "--manifest", str(tmp_path / "absent.json"), "--out", str(tmp_path / "out")])
    assert code == 1
    assert _error_line(capsys.readouterr().err)["error"] == "ManifestError"


def test_flags_override_config_file(tmp_path):
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps({
        "seed": 5,
        "training": {"epochs": 3, "batch_size": 4},
        "patches": {"patch_size": 40},
    }), encoding="utf-8")
    args = build_parser().parse_args(["train", "--manifest", "m.json", "--config", str(config_file), "--epochs", "1"])
    config = resolve_config(args)
    assert config.seed == 5
    assert config.training.epochs == 1
    assert config.training.batch_size == 4
    assert config.patches.patch_size == 40
    assert config.model.patch_size == 40


def test_unreadable_config_file(tmp_path, capsys):
    code = main(["shape-plan", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == 1
    assert _error_line(capsys.readouterr().err)["error"] == "ConfigurationError"


class TestSynthData:
    def test_sample_count(self, tmp_path, capsys):
        argv = ["synth-data", "--subjects", "16", "--classes", "8", "--per", "4", "--seed", "7",
                "--out", str(tmp_path)]
        assert main(argv) == 0
        result = _last_json(capsys.readouterr().out)
        assert result["samples"] == 512
        assert result["subjects"] == 16

    def test_same_seed_same_bytes(self, tmp_path, capsys):
        for name in ("a", "b"):
            argv = ["synth-data", "--subjects", "2", "--classes", "2", "--per", "1", "--seed", "7",
                    "--out", str(tmp_path / name)]
            assert main(argv) == 0
        first = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.png"))
        assert first
        for rel in first:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
        assert (tmp_path / "a" / "manifest.json").read_text(encoding="utf-8").replace(str(tmp_path / "a"), "") == \
            (tmp_path / "b" / "manifest.json").read_text(encoding="utf-8").replace(str(tmp_path / "b"), "")


def test_plot_confusion(tmp_path, capsys):
    source = ConfusionMatrix(np.array([[3, 1], [0, 4]]), ["neutral", "happy"]).save_csv(tmp_path / "cm.csv")
    assert main(["plot", "--confusion", str(source), "--out", str(tmp_path / "plots")]) == 0
    svg = tmp_path / "plots" / "cm.svg"
    assert svg.is_file()
    assert _last_json(capsys.readouterr().out)["plot"] == str(svg)


def test_train_then_eval(tiny_manifest, tmp_path, capsys):
    model_dir = tmp_path / "model"
    argv = ["train", "--manifest", str(tiny_manifest), "--epochs", "1", "--batch-size", "8",
            "--seed", "3", "--out", str(model_dir)]
    assert main(argv) == 0
    trained = _last_json(capsys.readouterr().out)
    assert trained["train_samples"] == 24
    assert 0.0 <= trained["train_accuracy"] <= 1.0

    eval_dir = tmp_path / "eval"
    argv = ["eval", "--model", str(model_dir), "--manifest", str(tiny_manifest), "--out", str(eval_dir)]
    assert main(argv) == 0
    evaluated = _last_json(capsys.readouterr().out)
    assert evaluated["samples"] == 24
    assert 0.0 <= evaluated["accuracy"] <= 1.0
    assert (eval_dir / "confusion.csv").is_file()
    assert (eval_dir / "confusion.svg").is_file()


def test_unset_nested_flags_never_override():
    merged = merge_layers(
        {"threads": 2},
        {"training": {"epochs": 3}},
        {"training": {"epochs": None, "batch_size": 4}, "cgan": {"steps": None}, "seed": None},
    )
    assert merged == {"threads": 2, "training": {"epochs": 3, "batch_size": 4}}


def test_flags_alone_resolve_to_defaults():
    args = build_parser().parse_args(["train", "--manifest", "m.json"])
    config = resolve_config(args)
    assert config.training.epochs == TrainingConfig().epochs
    assert config.cgan.steps == CGANConfig().steps


def test_missing_history_file(tmp_path, capsys):
    code = main(["plot", "--history", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "plots")])
    assert code == 1
    assert _error_line(capsys.readouterr().err)["error"] == "FileNotFoundError"


@pytest.mark.slow
def test_domain_shift_fine_tune_delta_is_reproducible(tmp_path, capsys):
    for name, shift in (("source", "0.0"), ("target", "0.6")):
        argv = ["synth-data", "--subjects", "10", "--classes", "4", "--per", "2", "--noise", "0.01",
                "--domain-shift", shift, "--seed", "5", "--out", str(tmp_path / name)]
        assert main(argv) == 0
    argv = ["train", "--manifest", str(tmp_path / "source" / "manifest.json"), "--epochs", "10",
            "--batch-size", "16", "--seed", "1", "--out", str(tmp_path / "model")]
    assert main(argv) == 0

    recorded = []
    for run in ("a", "b"):
        argv = ["fine-tune", "--model", str(tmp_path / "model"), "--manifest", str(tmp_path / "target" / "manifest.json"),
                "--epochs", "50", "--batch-size", "16", "--fraction", "0.8", "--seed", "2",
                "--out", str(tmp_path / run)]
        assert main(argv) == 0
        recorded.append(json.loads((tmp_path / run / "fine_tune.json").read_text(encoding="utf-8")))
    capsys.readouterr()

    first, second = recorded
    assert first == second
    assert first["delta"] == pytest.approx(first["post_accuracy"] - first["pre_accuracy"])
    assert not set(first["tune_subjects"]) & set(first["test_subjects"])
