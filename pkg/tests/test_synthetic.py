"""Tests for the synthetic corpus generator."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from sentsimp.errors import ConfigError
from sentsimp.metrics import count_edits
from sentsimp.synthetic import (
    FULL_STOP,
    SyntheticGenerator,
    SyntheticRuleSet,
    generate_corpus,
)
from sentsimp.textproc import anonymize, load_corpus


def generate(n: int, seed: int, rules: SyntheticRuleSet = None):
    return generate_corpus(rules or SyntheticRuleSet.default(), n, np.random.default_rng(seed))


class TestRuleSet:
    def test_needs_some_rule(self):
        with pytest.raises(ConfigError):
            SyntheticRuleSet()

    def test_rare_and_simple_must_differ(self):
        with pytest.raises(ConfigError, match="both rare and simple"):
            SyntheticRuleSet(substitutions={"big": "large", "large": "big"})

    def test_span_tokens_must_not_reuse_rewrite_words(self):
        with pytest.raises(ConfigError, match="span tokens"):
            SyntheticRuleSet(substitutions={"observe": "see"}, spans=[("(", "see", "below", ")")])
        with pytest.raises(ConfigError, match="span tokens"):
            SyntheticRuleSet(triggers=["and"], spans=[("(", "and", "more", ")")])

    def test_triggers_must_not_reuse_rewrite_words(self):
        with pytest.raises(ConfigError, match="split triggers"):
            SyntheticRuleSet(substitutions={"utilize": "use"}, triggers=["use"])

    def test_default_rules_are_consistent(self):
        rules = SyntheticRuleSet.default()
        span_tokens = {t for span in rules.spans for t in span}
        rewrite = set(rules.substitutions) | set(rules.substitutions.values())
        assert not span_tokens & rewrite

    def test_filler_excludes_reserved_words(self):
        rules = SyntheticRuleSet(substitutions={"city": "town"}, filler=["city", "town", "road"])
        assert rules.filler == ["road"]

    def test_empty_filler(self):
        with pytest.raises(ConfigError, match="no filler"):
            SyntheticRuleSet(substitutions={"city": "town"}, filler=["city"])

    def test_from_file(self, tmp_path: Path):
        path = tmp_path / "rules.json"
        path.write_text(json.dumps({
            "substitutions": {"purchase": "buy"},
            "spans": ["( see below )", ["(", "now", ")"]],
            "triggers": ["and"],
            "entities": {"PER": ["John"]},
        }), encoding="utf-8")
        rules = SyntheticRuleSet.from_file(path)
        assert rules.spans == [("(", "see", "below", ")"), ("(", "now", ")")]
        assert "now" not in rules.filler
        assert rules.gazetteer().tag(["John", "ran"])


class TestGenerator:
    def test_deterministic(self):
        a, b = generate(30, 7), generate(30, 7)
        assert list(a.corpus) == list(b.corpus)
        assert [r.to_dict() for r in a.log] == [r.to_dict() for r in b.log]
        assert list(generate(30, 8).corpus) != list(a.corpus)

    def test_single_substitution(self):
        rules = SyntheticRuleSet(substitutions={"utilize": "use"})
        data = generate(20, 1, rules)
        for (c, s), record in zip(data.corpus, data.log):
            assert len(c) == len(s)
            diffs = [(x, y) for x, y in zip(c, s) if x != y]
            assert diffs == [("utilize", "use")]
            assert record.n_substitutions == 1 and record.n_deletions == 0
            assert c[-1] == s[-1] == FULL_STOP

    def test_log_matches_minimal_edits(self):
        data = generate(60, 3)
        assert data.totals()["split"] > 0 and data.totals()["del"] > 0
        for (c, s), record in zip(data.corpus, data.log):
            edits = count_edits(list(c), list(s))
            assert edits.total == record.n_substitutions + record.n_deletions
            assert edits.deletions - edits.insertions == record.n_deletions

    def test_log_matches_edits_when_span_and_substitution_meet(self):
        rules = SyntheticRuleSet(
            substitutions={"observe": "see", "inform": "tell"},
            spans=[("(", "shown", "below", ")")],
            triggers=["while"],
        )
        data = SyntheticGenerator(rules, np.random.default_rng(0), span_prob=1.0, split_prob=1.0).generate(40)
        for (c, s), record in zip(data.corpus, data.log):
            edits = count_edits(list(c), list(s))
            assert edits.total == record.n_substitutions + record.n_deletions

    def test_splits_produce_two_sentences(self):
        data = generate(60, 4)
        for (c, s), record in zip(data.corpus, data.log):
            expected = 2 if record.split else 1
            assert list(s).count(FULL_STOP) == expected
            if record.split:
                assert record.split in c

    def test_entities_are_found_by_the_gazetteer(self):
        rules = SyntheticRuleSet.default()
        data = SyntheticGenerator(rules, np.random.default_rng(5), entity_prob=1.0).generate(10)
        gazetteer = rules.gazetteer()
        for c, _ in data.corpus:
            _, entities = anonymize(c, gazetteer)
            assert len(entities) >= 1

    def test_needs_pairs(self):
        with pytest.raises(ConfigError):
            generate(0, 1)


class TestSave:
    def test_writes_corpus_log_and_gazetteer(self, tmp_path: Path):
        rules = SyntheticRuleSet.default()
        data = generate(12, 2, rules)
        paths = data.save(tmp_path / "out", rules)
        assert list(load_corpus(paths["complex"], paths["simple"])) == list(data.corpus)
        lines = paths["edits"].read_text(encoding="utf-8").splitlines()
        assert len(lines) == 12
        assert json.loads(lines[0]) == data.log[0].to_dict()
        assert (paths["gazetteer"] / "PER.txt").is_file()
