"""Stage orchestration: preprocess → train → train-rl → train-lexsimp → simplify → evaluate.

Every stage reads its inputs from a work directory, refuses to run when
an upstream artifact is missing, writes its artifact next to a run
manifest (stage, config, seed, input digests) and reports progress via
an ``on_event(event, data)`` callback.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import Config, save_config
from .errors import ConfigError, CorpusError, MissingArtifactError
from .lexsimp import LexSimpParams, decode_interpolated, train_lexsimp
from .metrics.bleu import bleu_corpus
from .metrics.readability import fkgl
from .metrics.sari import corpus_sari
from .metrics.stats import copy_rate, corpus_stats
from .ndgraph.optim import OptimState
from .ndgraph.rng import RngStreams
from .reinforce import (
    BaselineParams,
    EpochStats,
    mean_policy_reward,
    read_stats_csv,
    train_rl,
    write_stats_csv,
)
from .rewardmodels import LmParams, RewardContext, SaeParams, perplexity, train_lm, train_sae
from .seq2seq import Seq2SeqParams, decode, load_embeddings, nll_loss, unk_replace
from .synthetic import SyntheticCorpus, SyntheticRuleSet, generate_corpus
from .textproc import (
    Gazetteer,
    ParallelCorpus,
    TokenSeq,
    Vocab,
    anonymize,
    anonymize_corpus,
    build_vocab,
    deanonymize,
    load_corpus,
    read_lines,
    write_lines,
)
from .training import EventFn, FitHistory, Trainer

logger = logging.getLogger(__name__)

Pair = Tuple[List[int], List[int]]

SYSTEMS = ("encdeca", "dress", "dress-ls")


# ------------------------------------------------------------------
# Work directory and manifests
# ------------------------------------------------------------------

class Workspace:
    """Fixed artifact layout inside a work directory."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)

    def path(self, name: str) -> Path:
        return self.root / name

    @property
    def train_complex(self) -> Path:
        return self.path("train.complex")

    @property
    def train_simple(self) -> Path:
        return self.path("train.simple")

    @property
    def valid_complex(self) -> Path:
        return self.path("valid.complex")

    @property
    def valid_simple(self) -> Path:
        return self.path("valid.simple")

    @property
    def vocab(self) -> Path:
        return self.path("vocab.json")

    @property
    def gazetteer(self) -> Path:
        return self.path("gazetteer")

    @property
    def config(self) -> Path:
        return self.path("config.txt")

    def checkpoint(self, model: str) -> Path:
        return self.path(f"{model}.ckpt")

    @property
    def rl_stats(self) -> Path:
        return self.path("rl_stats.csv")

    def require(self, path: Path, stage: str) -> Path:
        if not Path(path).exists():
            raise MissingArtifactError(stage, path)
        return Path(path)


def content_hash(path: Path) -> str:
    """SHA-256 hex digest of a file, or of every file under a directory."""
    h = hashlib.sha256()
    path = Path(path)
    files = sorted(p for p in path.rglob("*") if p.is_file()) if path.is_dir() else [path]
    for f in files:
        if path.is_dir():
            h.update(str(f.relative_to(path)).encode("utf-8"))
        h.update(f.read_bytes())
    return h.hexdigest()


def write_manifest(
    artifact: Path,
    stage: str,
    config: Config,
    inputs: Sequence[Path],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write ``<artifact>.manifest.json`` describing how *artifact* was made."""
    manifest = {
        "stage": stage,
        "artifact": Path(artifact).name,
        "seed": config.seed,
        "config": config.to_dict(),
        "inputs": {Path(p).name: content_hash(p) for p in inputs if Path(p).exists()},
    }
    if extra:
        manifest.update(extra)
    out = Path(f"{artifact}.manifest.json")
    out.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return out


def _emit(on_event: Optional[EventFn], event: str, data: Dict[str, Any]) -> None:
    if on_event:
        on_event(event, data)


# ------------------------------------------------------------------
# gen-synthetic / preprocess
# ------------------------------------------------------------------

def run_gen_synthetic(
    out_dir: Path,
    n_pairs: int,
    seed: int,
    ruleset: Optional[SyntheticRuleSet] = None,
) -> SyntheticCorpus:
    ruleset = ruleset or SyntheticRuleSet.default()
    data = generate_corpus(ruleset, n_pairs, RngStreams(seed).stream("synthetic"))
    data.save(out_dir, ruleset)
    return data


@dataclass
class PreprocessReport:
    n_train: int
    n_valid: int
    vocab_size: int
    copy_rate: float
    entities: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_train": self.n_train,
            "n_valid": self.n_valid,
            "vocab_size": self.vocab_size,
            "copy_rate": self.copy_rate,
            "entities": self.entities,
        }


def run_preprocess(
    ws: Workspace,
    complex_path: Path,
    simple_path: Path,
    config: Config,
    gazetteer_dir: Optional[Path] = None,
) -> PreprocessReport:
    """Anonymize, split off a validation slice and build the vocabulary."""
    corpus = load_corpus(complex_path, simple_path)
    gazetteer = Gazetteer.from_dir(gazetteer_dir) if gazetteer_dir else Gazetteer()
    anon, maps = anonymize_corpus(corpus, gazetteer)
    train, valid = anon.split(config.heldout_size)
    vocab = build_vocab(train, config.min_count)

    ws.root.mkdir(parents=True, exist_ok=True)
    train.save(ws.train_complex, ws.train_simple)
    valid.save(ws.valid_complex, ws.valid_simple)
    vocab.save(ws.vocab)
    gazetteer.save(ws.gazetteer)
    save_config(config, ws.config)
    report = PreprocessReport(
        n_train=len(train),
        n_valid=len(valid),
        vocab_size=len(vocab),
        copy_rate=copy_rate(train.complex_side, train.simple_side),
        entities=sum(len(m) for m in maps),
    )
    inputs = [Path(complex_path), Path(simple_path)] + ([Path(gazetteer_dir)] if gazetteer_dir else [])
    write_manifest(ws.vocab, "preprocess", config, inputs, {"report": report.to_dict()})
    logger.info("Preprocessed %d train / %d valid pairs", report.n_train, report.n_valid)
    return report


def _load_prepared(ws: Workspace) -> Tuple[Vocab, ParallelCorpus, ParallelCorpus]:
    for p in (ws.vocab, ws.train_complex, ws.train_simple):
        ws.require(p, "preprocess")
    vocab = Vocab.load(ws.vocab)
    train = load_corpus(ws.train_complex, ws.train_simple)
    valid = (
        load_corpus(ws.valid_complex, ws.valid_simple)
        if ws.valid_complex.exists() and ws.valid_complex.stat().st_size > 0
        else ParallelCorpus()
    )
    return vocab, train, valid


def encode_pairs(corpus: ParallelCorpus, vocab: Vocab) -> List[Pair]:
    """Source ids and EOS-terminated target ids for every pair."""
    return [(vocab.encode(src), vocab.encode(tgt, add_eos=True)) for src, tgt in corpus]


# ------------------------------------------------------------------
# train (encoder-decoder, auto-encoder, language model)
# ------------------------------------------------------------------

def run_train(
    ws: Workspace,
    config: Config,
    model: str = "encdec",
    resume: bool = False,
    on_event: Optional[EventFn] = None,
) -> FitHistory:
    """Likelihood training of the policy (``encdec``), ``sae`` or ``lm``."""
    if model == "encdec":
        return _train_policy(ws, config, resume, on_event)
    vocab, train, valid = _load_prepared(ws)
    streams = RngStreams(config.seed)
    out = ws.checkpoint(model)
    if model == "sae":
        sentences = [vocab.encode(s) for s in train.complex_side + train.simple_side]
        heldout = [vocab.encode(s) for s in valid.complex_side + valid.simple_side]
        sae, history = train_sae(
            sentences, len(vocab), config.hidden_size, config.num_layers,
            config.fit_settings(config.sae_epochs, "sae"), streams, heldout, on_event,
        )
        save_checkpoint(out, sae, vocab, config.to_dict(), {"history": history.to_dict()})
    elif model == "lm":
        sentences = [vocab.encode(s) for s in train.simple_side]
        heldout = [vocab.encode(s) for s in valid.simple_side]
        lm, history = train_lm(
            sentences, len(vocab), config.hidden_size, config.num_layers,
            config.fit_settings(config.lm_epochs, "lm"), streams, heldout, on_event,
        )
        meta: Dict[str, Any] = {"history": history.to_dict()}
        if heldout:
            meta["heldout_perplexity"] = perplexity(lm, heldout)
        save_checkpoint(out, lm, vocab, config.to_dict(), meta)
    else:
        raise ConfigError(f"unknown model '{model}' (expected encdec, sae or lm)")
    write_manifest(out, f"train:{model}", config, [ws.vocab, ws.train_complex, ws.train_simple])
    return history


def _train_policy(
    ws: Workspace, config: Config, resume: bool, on_event: Optional[EventFn]
) -> FitHistory:
    vocab, train, valid = _load_prepared(ws)
    streams = RngStreams(config.seed)
    out = ws.checkpoint("encdec")
    settings = config.fit_settings(config.epochs, "encdec")

    start_epoch = 1
    history = FitHistory()
    state: Optional[OptimState] = None
    if resume and out.exists():
        ckpt = load_checkpoint(out, "seq2seq")
        policy: Seq2SeqParams = ckpt.model
        start_epoch = int(ckpt.metadata.get("epoch", 0)) + 1
        hist = ckpt.metadata.get("history", {})
        history = FitHistory(list(hist.get("train", [])), list(hist.get("heldout", [])))
        state = OptimState.restore(ckpt.metadata["optimizer"], ckpt.extra)
        logger.info("Resuming encoder-decoder training at epoch %d", start_epoch)
    else:
        policy = Seq2SeqParams.create(
            len(vocab), config.hidden_size, config.num_layers, streams.stream("init.policy")
        )
        if config.embeddings_path:
            for table in (policy.src_embed, policy.tgt_embed):
                table.value = load_embeddings(
                    Path(config.embeddings_path), vocab, config.hidden_size, table.value
                )

    train_pairs = encode_pairs(train, vocab)
    valid_pairs = encode_pairs(valid, vocab)

    def loss_fn(pair: Pair, drop: Any) -> Tuple[Any, int]:
        return nll_loss(policy, pair[0], pair[1], drop), len(pair[1])

    trainer: Trainer[Pair] = Trainer(policy.params, loss_fn, settings, streams, state, on_event)

    def save(epoch: int, hist: FitHistory) -> None:
        save_checkpoint(
            out, policy, vocab, config.to_dict(),
            {"epoch": epoch, "history": hist.to_dict(), "optimizer": trainer.state.meta()},
            trainer.state.arrays(),
        )

    history = trainer.fit(train_pairs, valid_pairs, start_epoch, save, history)
    if not out.exists():
        save(start_epoch - 1, history)
    write_manifest(out, "train:encdec", config, [ws.vocab, ws.train_complex, ws.train_simple])
    return history


# ------------------------------------------------------------------
# train-rl / train-lexsimp
# ------------------------------------------------------------------

def load_reward_context(
    ws: Workspace, config: Config, sae_path: Optional[Path] = None, lm_path: Optional[Path] = None
) -> RewardContext:
    sae_ckpt = load_checkpoint(sae_path or ws.checkpoint("sae"), "sae", stage="train --model sae")
    lm_ckpt = load_checkpoint(lm_path or ws.checkpoint("lm"), "lm", stage="train --model lm")
    sae: SaeParams = sae_ckpt.model
    lm: LmParams = lm_ckpt.model
    return RewardContext(config.reward_weights(), sae, lm)


def run_train_rl(
    ws: Workspace,
    config: Config,
    sae_path: Optional[Path] = None,
    lm_path: Optional[Path] = None,
    resume: bool = False,
    max_epochs: Optional[int] = None,
    on_event: Optional[EventFn] = None,
) -> List[EpochStats]:
    """REINFORCE fine-tuning of the pretrained encoder-decoder along the curriculum."""
    vocab, train, valid = _load_prepared(ws)
    out = ws.checkpoint("dress")
    context = load_reward_context(ws, config, sae_path, lm_path)

    start_epoch = 1
    baseline: Optional[BaselineParams] = None
    history: List[EpochStats] = []
    if resume and out.exists():
        ckpt = load_checkpoint(out, "seq2seq")
        start_epoch = int(ckpt.metadata.get("epoch", 0)) + 1
        baseline = BaselineParams.from_arrays(ckpt.extra)
        history = read_stats_csv(ws.rl_stats) if ws.rl_stats.exists() else []
        logger.info("Resuming RL training at epoch %d", start_epoch)
    else:
        ckpt = load_checkpoint(ws.checkpoint("encdec"), "seq2seq", stage="train")
    policy: Seq2SeqParams = ckpt.model

    pairs = encode_pairs(train, vocab)
    valid_pairs = encode_pairs(valid, vocab)
    if valid_pairs and start_epoch == 1:
        _emit(on_event, "validation", {"stage": "pretrained", "reward": mean_policy_reward(policy, valid_pairs, context)})

    def save(stats: EpochStats, b: BaselineParams) -> None:
        history.append(stats)
        save_checkpoint(
            out, policy, vocab, config.to_dict(),
            {"epoch": stats.epoch, "L": stats.L}, b.to_arrays(),
        )
        write_stats_csv(ws.rl_stats, history)
        _emit(on_event, "epoch_end", stats.to_row())

    train_rl(
        policy, pairs, context, config.rl_settings(), RngStreams(config.seed),
        baseline=baseline, start_epoch=start_epoch, max_epochs=max_epochs,
        on_epoch_end=save, on_event=on_event,
    )
    if valid_pairs:
        _emit(on_event, "validation", {"stage": "rl", "reward": mean_policy_reward(policy, valid_pairs, context)})
    if out.exists():
        write_manifest(
            out, "train-rl", config,
            [ws.checkpoint("encdec"), sae_path or ws.checkpoint("sae"), lm_path or ws.checkpoint("lm")],
        )
    return history


def run_train_lexsimp(
    ws: Workspace,
    config: Config,
    policy_path: Optional[Path] = None,
    on_event: Optional[EventFn] = None,
) -> FitHistory:
    """Train the lexical model on attention harvested from the likelihood-trained policy."""
    vocab, train, valid = _load_prepared(ws)
    policy_path = policy_path or ws.checkpoint("encdec")
    ckpt = load_checkpoint(policy_path, "seq2seq", stage="train")
    lex, history = train_lexsimp(
        encode_pairs(train, vocab), ckpt.model,
        config.fit_settings(config.lexsimp_epochs, "lexsimp"), RngStreams(config.seed),
        encode_pairs(valid, vocab), on_event,
    )
    out = ws.checkpoint("lexsimp")
    save_checkpoint(out, lex, vocab, config.to_dict(), {"history": history.to_dict()})
    write_manifest(out, "train-lexsimp", config, [policy_path, ws.vocab, ws.train_complex])
    return history


# ------------------------------------------------------------------
# simplify
# ------------------------------------------------------------------

@dataclass
class Simplifier:
    """Turns raw tokenized sentences into simplified ones."""

    policy: Seq2SeqParams
    vocab: Vocab
    gazetteer: Gazetteer
    lex: Optional[LexSimpParams] = None
    eta: float = 0.1
    max_len_factor: float = 1.5
    system: str = "dress"

    def simplify(self, tokens: Sequence[str]) -> TokenSeq:
        if not tokens:
            return TokenSeq()
        anon, entities = anonymize(tokens, self.gazetteer)
        ids = self.vocab.encode(anon)
        max_len = int(self.max_len_factor * len(ids) + 5)
        if self.lex is not None:
            result = decode_interpolated(self.policy, self.lex, ids, self.eta, max_len)
        else:
            result = decode(self.policy, ids, "greedy", max_len)
        out = unk_replace(result.tokens(self.vocab), result.alphas, anon)
        return deanonymize(out, entities)


def load_simplifier(
    ws: Workspace,
    config: Config,
    system: Optional[str] = None,
    eta: Optional[float] = None,
) -> Simplifier:
    """Assemble one of ``encdeca``, ``dress`` or ``dress-ls`` from the work directory."""
    if system is None:
        system = "dress-ls" if ws.checkpoint("lexsimp").exists() else "dress"
    if system not in SYSTEMS:
        raise ConfigError(f"unknown system '{system}' (expected one of {', '.join(SYSTEMS)})")
    if system == "encdeca":
        ckpt: Checkpoint = load_checkpoint(ws.checkpoint("encdec"), "seq2seq", stage="train")
    else:
        ckpt = load_checkpoint(ws.checkpoint("dress"), "seq2seq", stage="train-rl")
    lex = None
    if system == "dress-ls":
        lex = load_checkpoint(ws.checkpoint("lexsimp"), "lexsimp", stage="train-lexsimp").model
    gazetteer = Gazetteer.from_dir(ws.gazetteer) if ws.gazetteer.exists() else Gazetteer()
    return Simplifier(
        ckpt.model, ckpt.vocab, gazetteer, lex,
        config.eta if eta is None else eta, config.max_len_factor, system,
    )


def run_simplify(
    ws: Workspace,
    config: Config,
    input_path: Path,
    output_path: Path,
    system: Optional[str] = None,
    eta: Optional[float] = None,
    on_event: Optional[EventFn] = None,
) -> int:
    """Simplify *input_path* line by line; returns the number of lines written."""
    simplifier = load_simplifier(ws, config, system, eta)
    sources = read_lines(input_path)
    outputs: List[TokenSeq] = []
    for i, src in enumerate(sources, 1):
        outputs.append(simplifier.simplify(src))
        _emit(on_event, "batch", {"done": i, "total": len(sources)})
    write_lines(output_path, outputs)
    write_manifest(Path(output_path), "simplify", config, [Path(input_path)], {"system": simplifier.system})
    return len(outputs)


# ------------------------------------------------------------------
# evaluate
# ------------------------------------------------------------------

def evaluate_outputs(
    sources: Sequence[Sequence[str]],
    outputs: Sequence[Sequence[str]],
    references: Sequence[Sequence[Sequence[str]]],
) -> Dict[str, Any]:
    """Full metric report, rounded to two decimals.

    *references* holds one list of sentences per reference set.
    """
    if len(sources) != len(outputs):
        raise CorpusError(f"{len(sources)} source lines but {len(outputs)} output lines")
    for refs in references:
        if len(refs) != len(outputs):
            raise CorpusError(f"reference set has {len(refs)} lines, outputs have {len(outputs)}")
    per_sentence_refs = [[refs[i] for refs in references] for i in range(len(outputs))]
    sari_score = corpus_sari(sources, outputs, per_sentence_refs)
    stats = corpus_stats(sources, outputs)
    edits = stats.edits

    def r(x: float) -> float:
        return round(float(x), 2)

    return {
        "bleu": r(bleu_corpus(outputs, per_sentence_refs)),
        "fkgl": r(fkgl(outputs)),
        "sari": {k: r(v) for k, v in sari_score.to_dict().items()},
        "ter": r(edits.ter),
        "edits": {
            "ins": r(edits.insertions),
            "del": r(edits.deletions),
            "sub": r(edits.substitutions),
            "shift": r(edits.shifts),
        },
        "mean_len": r(edits.mean_length),
        "copy_rate": r(stats.copy_rate),
    }


def run_evaluate(
    source_path: Path,
    output_path: Path,
    reference_paths: Sequence[Path],
    report_path: Optional[Path] = None,
) -> Dict[str, Any]:
    if not reference_paths:
        raise ConfigError("evaluate needs at least one --reference file")
    report = evaluate_outputs(
        read_lines(source_path),
        read_lines(output_path),
        [read_lines(p) for p in reference_paths],
    )
    if report_path is not None:
        Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    return report
