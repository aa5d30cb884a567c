"""Rich console output for the sentsimp CLI.

Status chatter, progress bars and log records go to stderr; JSON reports
and tables go to stdout so they can be piped.
"""

from __future__ import annotations

import json
import logging
from typing import Any, Dict, Mapping, Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskID, TextColumn
from rich.table import Table
from rich.theme import Theme

SENTSIMP_THEME = Theme({
    "accent": "bold #4FB0C6",
    "accent.dim": "#2E6F7E",
    "info": "dim",
    "success": "bold bright_green",
    "err": "bold red",
})


def setup_logging(console: Console, verbose: bool = False) -> None:
    """Route the root logger through a RichHandler on *console*."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=verbose, markup=False)],
        force=True,
    )


class CliPrinter:
    """Progress, status lines and result rendering for one CLI run."""

    def __init__(self, title: str = "sentsimp", verbose: bool = False) -> None:
        self.title = title
        self.verbose = verbose
        self.console = Console(stderr=True, theme=SENTSIMP_THEME)
        self.output_console = Console(theme=SENTSIMP_THEME)
        self._progress: Optional[Progress] = None
        self._task: Optional[TaskID] = None

    # ── Status lines ───────────────────────────────────────────────

    def header(self, fields: Mapping[str, Any]) -> None:
        body = "\n".join(f"[info]{k}:[/info] {v}" for k, v in fields.items())
        self.console.print(Panel(body, title=f"[accent]{self.title}[/accent]", border_style="accent.dim"))

    def step(self, icon: str, message: str) -> None:
        self.console.print(f"  {icon}  {message}")

    def file_written(self, path: Any) -> None:
        self.step("💾", f"Wrote [accent]{path}[/accent]")

    def error_line(self, line: str) -> None:
        """Print a machine-parseable error line verbatim."""
        self.console.print(line, markup=False, highlight=False, soft_wrap=True)

    def done(self) -> None:
        self._stop_progress()
        self.console.print("  [success]✓ Done[/success]")

    # ── Progress driven by on_event callbacks ──────────────────────

    def _start_progress(self, description: str, total: int) -> None:
        self._stop_progress()
        self._progress = Progress(
            SpinnerColumn("dots", style="accent"),
            TextColumn("{task.description}"),
            BarColumn(bar_width=30, style="accent.dim", complete_style="accent"),
            TextColumn("[info]{task.completed}/{task.total}[/info]"),
            console=self.console,
            transient=True,
        )
        self._progress.start()
        self._task = self._progress.add_task(description, total=total)

    def _stop_progress(self) -> None:
        if self._progress is not None:
            self._progress.stop()
        self._progress = None
        self._task = None

    def event(self, event: str, data: Dict[str, Any]) -> None:
        """Render a training or decoding event."""
        if event == "epoch_start":
            label = f"epoch {data['epoch']}"
            if "epochs" in data:
                label += f"/{data['epochs']}"
            if "L" in data:
                label += f" (L={data['L']})"
            self.step("🔁", label)
        elif event == "batch":
            total = int(data.get("total", 0))
            if self._progress is None or self._task is None:
                self._start_progress(f"epoch {data['epoch']}" if "epoch" in data else "sentences", total)
            assert self._progress is not None and self._task is not None
            self._progress.update(self._task, completed=int(data["done"]), total=total)
            if data["done"] >= total:
                self._stop_progress()
        elif event == "epoch_end":
            self._stop_progress()
            if "mean_reward" in data:
                self.step(
                    "📈",
                    f"epoch {data['epoch']} L={data['L']} reward={data['mean_reward']:.4f} "
                    f"nll={data['mean_nll']:.4f}",
                )
            else:
                heldout = data.get("heldout") or []
                train = data.get("train") or []
                msg = f"epoch {data['epoch']} train={train[-1]:.4f}" if train else f"epoch {data['epoch']}"
                if heldout:
                    msg += f" heldout={heldout[-1]:.4f}"
                self.step("📈", msg)
        elif event == "validation":
            self.step("🎯", f"{data['stage']} validation reward {data['reward']:.4f}")
        elif self.verbose:
            self.step("·", f"{event} {data}")

    # ── Results ────────────────────────────────────────────────────

    def result_json(self, data: Any) -> None:
        self.output_console.print_json(json.dumps(data, sort_keys=True))

    def report_table(self, reports: Mapping[str, Mapping[str, Any]]) -> None:
        """One row per system: BLEU, FKGL, SARI, length, TER and edit counts."""
        table = Table(title="System comparison", header_style="accent")
        table.add_column("System")
        for col in ("BLEU", "FKGL", "SARI", "Len", "TER", "Ins", "Del", "Sub", "Shift"):
            table.add_column(col, justify="right")
        for name, r in reports.items():
            e = r["edits"]
            table.add_row(
                name,
                *(f"{v:.2f}" for v in (
                    r["bleu"], r["fkgl"], r["sari"]["total"], r["mean_len"], r["ter"],
                    e["ins"], e["del"], e["sub"], e["shift"],
                )),
            )
        self.output_console.print(table)
