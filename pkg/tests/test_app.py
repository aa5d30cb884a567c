"""Tests for the sentsimp command line."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from sentsimp.app import _parse_systems, create_parser, main
from sentsimp.errors import ConfigError
from tests.helpers import write_lines


def run(capsys, *argv: str):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestParser:
    def test_requires_a_command(self):
        with pytest.raises(SystemExit) as info:
            create_parser().parse_args([])
        assert info.value.code == 2

    def test_common_options_on_every_command(self):
        args = create_parser().parse_args(["train", "--model", "lm", "--set", "epochs=1", "--set", "lr=0.1", "--desk"])
        assert args.model == "lm"
        assert args.overrides == ["epochs=1", "lr=0.1"]
        assert args.desk and args.workdir == "work"

    def test_system_pairs(self):
        systems = _parse_systems(["dress=out/d.txt", "runs/encdeca.txt"])
        assert systems == {"dress": Path("out/d.txt"), "encdeca": Path("runs/encdeca.txt")}
        with pytest.raises(ConfigError):
            _parse_systems(["=x"])
        with pytest.raises(ConfigError):
            _parse_systems([])


class TestEnv:
    def test_prints_resolved_config(self, capsys):
        code, out, _ = run(capsys, "env", "--desk", "--set", "seed=9")
        assert code == 0
        assert "sentsimp configuration" in out
        assert "desk" in out
        assert any(line.strip().startswith("seed") and line.rstrip().endswith("*") for line in out.splitlines())

    def test_bad_override_is_one_error_line(self, capsys):
        code, out, err = run(capsys, "env", "--set", "hidden_size=lots")
        assert code == 2
        lines = err.strip().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("error code=config message=")
        assert out == ""

    def test_missing_config_file(self, capsys, tmp_path: Path):
        code, _, err = run(capsys, "env", "--config", str(tmp_path / "nope.yaml"))
        assert code == 2 and "error code=config" in err


class TestCommands:
    def test_gen_synthetic(self, capsys, tmp_path: Path):
        code, out, _ = run(capsys, "gen-synthetic", "--out", str(tmp_path / "data"), "--n", "6", "--seed", "2")
        assert code == 0
        assert json.loads(out)["pairs"] == 6
        assert len((tmp_path / "data" / "complex.txt").read_text(encoding="utf-8").splitlines()) == 6

    def test_train_before_preprocess(self, capsys, tmp_path: Path):
        code, _, err = run(capsys, "train", "--workdir", str(tmp_path / "work"))
        assert code == 2
        assert err.strip().splitlines()[-1].startswith("error code=missing-artifact message=")

    def test_missing_input_file(self, capsys, tmp_path: Path):
        code, _, err = run(
            capsys, "preprocess", "--complex", str(tmp_path / "a"), "--simple", str(tmp_path / "b"),
            "--workdir", str(tmp_path / "work"),
        )
        assert code == 2 and "error code=io" in err

    def test_undecodable_input(self, capsys, tmp_path: Path):
        bad = tmp_path / "bad.txt"
        bad.write_bytes(b"\xff\xfe oops\n")
        code, _, err = run(capsys, "evaluate", "--source", str(bad), "--reference", str(bad), "--system", f"x={bad}")
        assert code == 2 and "error code=decode" in err

    def test_evaluate_one_system(self, capsys, tmp_path: Path):
        src = write_lines(tmp_path / "src.txt", ["the cat sat down .", "a dog ran ."])
        code, out, _ = run(
            capsys, "evaluate", "--source", str(src), "--reference", str(src),
            "--system", f"copy={src}", "--report", str(tmp_path / "r.json"),
        )
        assert code == 0
        report = json.loads(out)
        assert report["bleu"] == 100.0 and report["ter"] == 0.0
        assert json.loads((tmp_path / "r.json").read_text(encoding="utf-8")) == report

    def test_evaluate_compares_systems(self, capsys, tmp_path: Path):
        src = write_lines(tmp_path / "src.txt", ["the cat sat down .", "a dog ran ."])
        short = write_lines(tmp_path / "short.txt", ["the cat sat .", "a dog ran ."])
        code, out, _ = run(
            capsys, "evaluate", "--source", str(src), "--reference", str(short),
            "--system", f"copy={src}", "--system", f"short={short}", "--report", str(tmp_path / "r.json"),
        )
        assert code == 0
        assert "System comparison" in out
        reports = json.loads((tmp_path / "r.json").read_text(encoding="utf-8"))
        assert set(reports) == {"copy", "short"}
        assert reports["short"]["sari"]["total"] > reports["copy"]["sari"]["total"]
