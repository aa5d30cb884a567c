"""sentsimp: CLI entry point.

Trains and runs a reinforcement-learned sentence simplifier.

Usage:
    sentsimp gen-synthetic --out data --n 2000 --seed 7
    sentsimp preprocess --complex data/complex.txt --simple data/simple.txt --gazetteer data/gazetteer
    sentsimp train --model encdec            # then --model sae, --model lm
    sentsimp train-rl
    sentsimp train-lexsimp
    sentsimp simplify --input test.complex --output test.out --system dress-ls
    sentsimp evaluate --source test.complex --reference test.simple --system dress=test.out
    sentsimp env --desk
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .config import Config, load_config, print_env
from .errors import ConfigError, SentSimpError
from .pipeline import (
    SYSTEMS,
    Workspace,
    run_evaluate,
    run_gen_synthetic,
    run_preprocess,
    run_simplify,
    run_train,
    run_train_lexsimp,
    run_train_rl,
)
from .synthetic import SyntheticRuleSet
from .ui import CliPrinter, setup_logging


# ------------------------------------------------------------------
# Argument parsing
# ------------------------------------------------------------------

def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        metavar="PATH",
        help="Config file (key=value text, .yaml/.yml or .json)",
    )
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        dest="overrides",
        help="Override one config value (repeatable)",
    )
    common.add_argument(
        "--desk",
        action="store_true",
        help="Start from the small desk-scale preset instead of the full defaults",
    )
    common.add_argument(
        "--workdir",
        default="work",
        metavar="DIR",
        help="Directory holding the pipeline artifacts (default: work)",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    return common


def create_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="sentsimp",
        description="Sentence simplification with an encoder-decoder tuned by reinforcement learning.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("gen-synthetic", parents=[common], help="Write a synthetic parallel corpus")
    p.add_argument("--out", required=True, metavar="DIR", help="Output directory")
    p.add_argument("--n", type=int, default=2000, dest="n_pairs", help="Number of pairs (default: 2000)")
    p.add_argument("--seed", type=int, default=None, help="Random seed (default: config seed)")
    p.add_argument("--rules", metavar="PATH", help="JSON ruleset (default: built-in rules)")

    p = sub.add_parser("preprocess", parents=[common], help="Anonymize, split and build the vocabulary")
    p.add_argument("--complex", required=True, metavar="PATH", help="Complex side, one sentence per line")
    p.add_argument("--simple", required=True, metavar="PATH", help="Simple side, aligned with --complex")
    p.add_argument("--gazetteer", metavar="DIR", help="Directory with PER/LOC/ORG/MISC.txt entity lists")

    p = sub.add_parser("train", parents=[common], help="Likelihood training")
    p.add_argument(
        "--model",
        choices=["encdec", "sae", "lm"],
        default="encdec",
        help="encdec: the simplifier; sae: relevance auto-encoder; lm: fluency language model",
    )
    p.add_argument("--resume", action="store_true", help="Continue from the last saved epoch")

    p = sub.add_parser("train-rl", parents=[common], help="REINFORCE fine-tuning along the curriculum")
    p.add_argument("--sae", metavar="PATH", help="Auto-encoder checkpoint (default: <workdir>/sae.ckpt)")
    p.add_argument("--lm", metavar="PATH", help="Language model checkpoint (default: <workdir>/lm.ckpt)")
    p.add_argument("--resume", action="store_true", help="Continue from the last saved epoch")
    p.add_argument("--max-epochs", type=int, metavar="N", help="Stop after N epochs of this run")

    p = sub.add_parser("train-lexsimp", parents=[common], help="Train the lexical simplification model")
    p.add_argument("--policy", metavar="PATH", help="Policy to harvest attention from (default: encdec.ckpt)")

    p = sub.add_parser("simplify", parents=[common], help="Simplify a file of tokenized sentences")
    p.add_argument("--input", required=True, metavar="PATH")
    p.add_argument("--output", required=True, metavar="PATH")
    p.add_argument("--system", choices=list(SYSTEMS), help="Default: dress-ls if trained, else dress")
    p.add_argument("--eta", type=float, help="Lexical interpolation weight (default: config eta)")

    p = sub.add_parser("evaluate", parents=[common], help="Score system outputs")
    p.add_argument("--source", required=True, metavar="PATH", help="Complex source sentences")
    p.add_argument(
        "--reference",
        action="append",
        default=[],
        required=True,
        metavar="PATH",
        help="Reference simplifications (repeatable for multiple references)",
    )
    p.add_argument(
        "--system",
        action="append",
        default=[],
        metavar="NAME=PATH",
        dest="systems",
        help="System output to score (repeatable; a bare PATH is named after the file)",
    )
    p.add_argument("--report", metavar="PATH", help="Write the JSON report here as well")

    sub.add_parser("env", parents=[common], help="Print the resolved configuration")
    return parser


def _parse_systems(items: Sequence[str]) -> Dict[str, Path]:
    systems: Dict[str, Path] = {}
    for item in items:
        name, sep, path = item.partition("=")
        if not sep:
            name, path = Path(item).stem, item
        if not name or not path:
            raise ConfigError(f"malformed --system '{item}' (expected NAME=PATH)")
        systems[name] = Path(path)
    if not systems:
        raise ConfigError("evaluate needs at least one --system output")
    return systems


# ------------------------------------------------------------------
# Commands
# ------------------------------------------------------------------

def _cmd_gen_synthetic(args: argparse.Namespace, config: Config, printer: CliPrinter) -> None:
    ruleset = SyntheticRuleSet.from_file(Path(args.rules)) if args.rules else SyntheticRuleSet.default()
    seed = config.seed if args.seed is None else args.seed
    data = run_gen_synthetic(Path(args.out), args.n_pairs, seed, ruleset)
    printer.file_written(args.out)
    printer.result_json({"pairs": len(data.corpus), **data.totals()})


def _cmd_preprocess(args: argparse.Namespace, config: Config, printer: CliPrinter) -> None:
    ws = Workspace(Path(args.workdir))
    report = run_preprocess(
        ws, Path(args.complex), Path(args.simple), config,
        Path(args.gazetteer) if args.gazetteer else None,
    )
    printer.file_written(ws.vocab)
    printer.result_json(report.to_dict())


def _cmd_train(args: argparse.Namespace, config: Config, printer: CliPrinter) -> None:
    ws = Workspace(Path(args.workdir))
    history = run_train(ws, config, args.model, args.resume, on_event=printer.event)
    printer.file_written(ws.checkpoint(args.model))
    printer.result_json(history.to_dict())


def _cmd_train_rl(args: argparse.Namespace, config: Config, printer: CliPrinter) -> None:
    ws = Workspace(Path(args.workdir))
    stats = run_train_rl(
        ws, config,
        Path(args.sae) if args.sae else None,
        Path(args.lm) if args.lm else None,
        args.resume, args.max_epochs, on_event=printer.event,
    )
    printer.file_written(ws.checkpoint("dress"))
    printer.result_json([s.to_row() for s in stats])


def _cmd_train_lexsimp(args: argparse.Namespace, config: Config, printer: CliPrinter) -> None:
    ws = Workspace(Path(args.workdir))
    history = run_train_lexsimp(
        ws, config, Path(args.policy) if args.policy else None, on_event=printer.event
    )
    printer.file_written(ws.checkpoint("lexsimp"))
    printer.result_json(history.to_dict())


def _cmd_simplify(args: argparse.Namespace, config: Config, printer: CliPrinter) -> None:
    ws = Workspace(Path(args.workdir))
    n = run_simplify(
        ws, config, Path(args.input), Path(args.output), args.system, args.eta,
        on_event=printer.event,
    )
    printer.file_written(args.output)
    printer.result_json({"lines": n})


def _cmd_evaluate(args: argparse.Namespace, config: Config, printer: CliPrinter) -> None:
    systems = _parse_systems(args.systems)
    references = [Path(p) for p in args.reference]
    reports: Dict[str, Any] = {}
    for name, path in systems.items():
        report_path: Optional[Path] = None
        if len(systems) == 1 and args.report:
            report_path = Path(args.report)
        reports[name] = run_evaluate(Path(args.source), path, references, report_path)
    if len(systems) == 1:
        printer.result_json(next(iter(reports.values())))
        return
    if args.report:
        Path(args.report).write_text(json.dumps(reports, indent=2, sort_keys=True), encoding="utf-8")
    printer.report_table(reports)
    printer.result_json(reports)


COMMANDS = {
    "gen-synthetic": _cmd_gen_synthetic,
    "preprocess": _cmd_preprocess,
    "train": _cmd_train,
    "train-rl": _cmd_train_rl,
    "train-lexsimp": _cmd_train_lexsimp,
    "simplify": _cmd_simplify,
    "evaluate": _cmd_evaluate,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse *argv*, run one command and return its exit status."""
    parser = create_parser()
    args = parser.parse_args(argv)

    printer = CliPrinter("sentsimp", verbose=args.verbose)
    setup_logging(printer.console, args.verbose)

    try:
        config_path = Path(args.config) if args.config else None
        config = load_config(config_path, args.overrides, args.desk)
        if args.command == "env":
            printer.output_console.print(print_env(config, config_path, args.desk), highlight=False)
            return 0
        printer.header({"command": args.command, "seed": config.seed, "workdir": getattr(args, "workdir", "-")})
        COMMANDS[args.command](args, config, printer)
    except SentSimpError as exc:
        printer.error_line(exc.one_line())
        return 2
    except UnicodeDecodeError as exc:
        printer.error_line(f"error code=decode message={exc}")
        return 2
    except OSError as exc:
        printer.error_line(f"error code=io message={' '.join(str(exc).split())}")
        return 2
    except KeyboardInterrupt:
        printer.console.print("\n[info]Interrupted.[/info]")
        return 130
    printer.done()
    return 0


# ------------------------------------------------------------------
# Entry point
# ------------------------------------------------------------------

def cli() -> None:
    """Main entry point for the sentsimp command."""
    sys.exit(main())


if __name__ == "__main__":
    cli()
