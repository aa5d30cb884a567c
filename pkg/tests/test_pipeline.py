"""Tests for stage orchestration, simplification and evaluation reports."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from sentsimp.config import Config, apply_values, load_config
from sentsimp.errors import ConfigError, CorpusError, MissingArtifactError
from sentsimp.pipeline import (
    Simplifier,
    Workspace,
    content_hash,
    evaluate_outputs,
    load_simplifier,
    run_evaluate,
    run_gen_synthetic,
    run_preprocess,
    run_simplify,
    run_train,
    run_train_lexsimp,
    run_train_rl,
    write_manifest,
)
from sentsimp.reinforce import read_stats_csv
from sentsimp.textproc import Gazetteer, TokenSeq, read_lines
from tests.helpers import write_lines

TINY = {
    "hidden_size": 8,
    "num_layers": 1,
    "batch_size": 8,
    "epochs": 2,
    "sae_epochs": 1,
    "lm_epochs": 1,
    "lexsimp_epochs": 1,
    "heldout_size": 5,
    "curriculum_start": 2,
    "curriculum_step": 1,
    "curriculum_period": 1,
    "min_count": 0,
    "seed": 3,
}


def tiny_config(**changes) -> Config:
    return apply_values(Config(), {**TINY, **changes})


def toks(line: str) -> TokenSeq:
    return TokenSeq.from_line(line)


def prepare(tmp_path: Path, name: str, config: Config) -> Workspace:
    data = tmp_path / "data"
    if not (data / "complex.txt").exists():
        run_gen_synthetic(data, 30, 11)
    ws = Workspace(tmp_path / name)
    run_preprocess(ws, data / "complex.txt", data / "simple.txt", config, data / "gazetteer")
    return ws


def train_all(ws: Workspace, config: Config) -> None:
    for model in ("encdec", "sae", "lm"):
        run_train(ws, config, model)
    run_train_rl(ws, config)
    run_train_lexsimp(ws, config)


class TestWorkspace:
    def test_layout(self, tmp_path: Path):
        ws = Workspace(tmp_path)
        assert ws.train_complex.name == "train.complex"
        assert ws.checkpoint("dress").name == "dress.ckpt"
        assert ws.rl_stats.name == "rl_stats.csv"

    def test_require(self, tmp_path: Path):
        ws = Workspace(tmp_path)
        with pytest.raises(MissingArtifactError, match="preprocess"):
            ws.require(ws.vocab, "preprocess")

    def test_content_hash(self, tmp_path: Path):
        f = write_lines(tmp_path / "a.txt", ["x"])
        before = content_hash(f)
        write_lines(f, ["y"])
        assert content_hash(f) != before
        (tmp_path / "d").mkdir()
        write_lines(tmp_path / "d" / "PER.txt", ["John"])
        digest = content_hash(tmp_path / "d")
        assert len(digest) == 64 and digest == content_hash(tmp_path / "d")

    def test_manifest(self, tmp_path: Path):
        artifact = write_lines(tmp_path / "out.txt", ["a"])
        src = write_lines(tmp_path / "in.txt", ["b"])
        path = write_manifest(artifact, "simplify", Config(), [src, tmp_path / "absent"], {"system": "dress"})
        manifest = json.loads(path.read_text(encoding="utf-8"))
        assert path.name == "out.txt.manifest.json"
        assert manifest["stage"] == "simplify" and manifest["system"] == "dress"
        assert manifest["seed"] == Config().seed
        assert list(manifest["inputs"]) == ["in.txt"]


class TestStageOrder:
    def test_train_needs_preprocess(self, tmp_path: Path):
        with pytest.raises(MissingArtifactError, match="preprocess"):
            run_train(Workspace(tmp_path), tiny_config())

    def test_unknown_model(self, tmp_path: Path):
        ws = prepare(tmp_path, "work", tiny_config())
        with pytest.raises(ConfigError):
            run_train(ws, tiny_config(), "transformer")

    def test_rl_needs_reward_models(self, tmp_path: Path):
        ws = prepare(tmp_path, "work", tiny_config())
        with pytest.raises(MissingArtifactError, match="sae"):
            run_train_rl(ws, tiny_config())

    def test_simplify_needs_a_policy(self, tmp_path: Path):
        with pytest.raises(MissingArtifactError, match="train-rl"):
            load_simplifier(Workspace(tmp_path), tiny_config(), "dress")

    def test_unknown_system(self, tmp_path: Path):
        with pytest.raises(ConfigError):
            load_simplifier(Workspace(tmp_path), tiny_config(), "pbmt")


class TestPreprocess:
    def test_report_and_artifacts(self, tmp_path: Path):
        config = tiny_config()
        data = tmp_path / "data"
        run_gen_synthetic(data, 30, 11)
        ws = Workspace(tmp_path / "work")
        report = run_preprocess(ws, data / "complex.txt", data / "simple.txt", config, data / "gazetteer")
        assert (report.n_train, report.n_valid) == (25, 5)
        assert report.entities > 0
        assert len(read_lines(ws.train_complex)) == 25
        assert (ws.gazetteer / "PER.txt").is_file()
        assert Path(f"{ws.vocab}.manifest.json").is_file()
        assert "@1" in ws.train_complex.read_text(encoding="utf-8")

    def test_misaligned_input(self, tmp_path: Path):
        c = write_lines(tmp_path / "c.txt", ["a b", "c d"])
        s = write_lines(tmp_path / "s.txt", ["a"])
        with pytest.raises(CorpusError):
            run_preprocess(Workspace(tmp_path / "work"), c, s, tiny_config())


class TestEvaluate:
    SOURCES = [toks("the cat sat down ."), toks("a dog ran far away .")]

    def test_identity_report(self):
        report = evaluate_outputs(self.SOURCES, self.SOURCES, [self.SOURCES])
        assert report["bleu"] == 100.0
        assert report["ter"] == 0.0
        assert report["copy_rate"] == 1.0
        assert report["sari"]["total"] == 100.0
        assert report["edits"] == {"ins": 0.0, "del": 0.0, "sub": 0.0, "shift": 0.0}
        assert report["mean_len"] == 5.5

    def test_fields_are_rounded(self):
        outputs = [toks("the cat sat ."), toks("a dog ran .")]
        refs = [[toks("the cat sat ."), toks("a dog ran away .")], [toks("cat sat ."), toks("dog ran .")]]
        report = evaluate_outputs(self.SOURCES, outputs, refs)
        assert set(report) == {"bleu", "fkgl", "sari", "ter", "edits", "mean_len", "copy_rate"}
        for value in [report["bleu"], report["fkgl"], report["ter"], *report["sari"].values()]:
            assert round(value, 2) == value
        assert report["edits"]["del"] == 1.5

    def test_length_mismatch(self):
        with pytest.raises(CorpusError):
            evaluate_outputs(self.SOURCES, self.SOURCES[:1], [self.SOURCES])
        with pytest.raises(CorpusError):
            evaluate_outputs(self.SOURCES, self.SOURCES, [self.SOURCES[:1]])

    def test_files(self, tmp_path: Path):
        lines = [s.to_line() for s in self.SOURCES]
        src = write_lines(tmp_path / "src.txt", lines)
        report = run_evaluate(src, src, [src], tmp_path / "report.json")
        assert json.loads((tmp_path / "report.json").read_text(encoding="utf-8")) == report
        with pytest.raises(ConfigError):
            run_evaluate(src, src, [])


class TestSimplifier:
    def test_empty_sentence(self, tiny_policy, tiny_vocab):
        simplifier = Simplifier(tiny_policy, tiny_vocab, Gazetteer())
        assert simplifier.simplify(TokenSeq()) == TokenSeq()

    def test_output_uses_source_words_for_unknowns(self, tiny_policy, tiny_vocab):
        simplifier = Simplifier(tiny_policy, tiny_vocab, Gazetteer())
        out = simplifier.simplify(toks("a zebra c"))
        assert "<unk>" not in out
        assert all(t in tiny_vocab or t == "zebra" for t in out)


@pytest.mark.slow
class TestEndToEnd:
    def test_full_pipeline(self, tmp_path: Path):
        config = tiny_config()
        ws = prepare(tmp_path, "work", config)
        events = []
        history = run_train(ws, config, "encdec", on_event=lambda e, d: events.append(e))
        assert len(history.train) == 2 and len(history.heldout) == 3
        assert events.count("epoch_end") == 2
        run_train(ws, config, "sae")
        run_train(ws, config, "lm")
        stats = run_train_rl(ws, config, on_event=lambda e, d: events.append(e))
        assert [s.L for s in stats] == [2, 1]
        assert read_stats_csv(ws.rl_stats) == stats
        assert "validation" in events
        run_train_lexsimp(ws, config)

        test_in = write_lines(tmp_path / "test.complex", ["John utilize the old bridge .", "", "the city ."])
        for system in ("encdeca", "dress", "dress-ls"):
            out = tmp_path / f"{system}.out"
            assert run_simplify(ws, config, test_in, out, system) == 3
            assert len(out.read_text(encoding="utf-8").splitlines()) == 3
            manifest = json.loads(Path(f"{out}.manifest.json").read_text(encoding="utf-8"))
            assert manifest["system"] == system
        assert load_simplifier(ws, config).system == "dress-ls"

    def test_runs_are_reproducible(self, tmp_path: Path):
        config = tiny_config()
        outputs = []
        for name in ("a", "b"):
            ws = prepare(tmp_path, name, config)
            train_all(ws, config)
            out = tmp_path / f"{name}.out"
            run_simplify(ws, config, ws.valid_complex, out, "dress-ls")
            outputs.append(out.read_bytes())
        for artifact in ("encdec.ckpt", "dress.ckpt", "lexsimp.ckpt", "rl_stats.csv"):
            assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()
        assert outputs[0] == outputs[1]

    def test_resume_matches_uninterrupted_training(self, tmp_path: Path):
        config = tiny_config()
        full = prepare(tmp_path, "full", config)
        run_train(full, config, "encdec")

        split = prepare(tmp_path, "split", config)
        run_train(split, tiny_config(epochs=1), "encdec")
        history = run_train(split, config, "encdec", resume=True)
        assert len(history.train) == 2
        assert full.checkpoint("encdec").read_bytes() == split.checkpoint("encdec").read_bytes()

        for ws in (full, split):
            run_train(ws, config, "sae")
            run_train(ws, config, "lm")
        run_train_rl(full, config)
        run_train_rl(split, config, max_epochs=1)
        stats = run_train_rl(split, config, resume=True)
        assert [s.epoch for s in stats] == [1, 2]
        assert full.checkpoint("dress").read_bytes() == split.checkpoint("dress").read_bytes()
        assert full.rl_stats.read_bytes() == split.rl_stats.read_bytes()

    def test_desk_run_improves_on_pretraining(self, tmp_path: Path):
        config = load_config(desk=True)
        data = tmp_path / "data"
        run_gen_synthetic(data, 2000, 7)
        ws = Workspace(tmp_path / "work")
        run_preprocess(ws, data / "complex.txt", data / "simple.txt", config, data / "gazetteer")

        history = run_train(ws, config, "encdec")
        early = history.heldout[:6]
        assert all(after <= before * 1.02 for before, after in zip(early, early[1:]))
        assert early[-1] < early[0]

        run_train(ws, config, "sae")
        run_train(ws, config, "lm")
        rewards = {}

        def record(event, data):
            if event == "validation":
                rewards[data["stage"]] = data["reward"]

        run_train_rl(ws, config, on_event=record)
        assert rewards["rl"] > rewards["pretrained"]

        sari = {}
        for system in ("encdeca", "dress"):
            out = tmp_path / f"{system}.out"
            run_simplify(ws, config, ws.valid_complex, out, system)
            sari[system] = run_evaluate(ws.valid_complex, out, [ws.valid_simple])["sari"]["total"]
        assert sari["dress"] >= sari["encdeca"] + 2.0
