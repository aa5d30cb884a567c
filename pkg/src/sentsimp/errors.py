"""Exception hierarchy shared by every sentsimp module.

Each error carries a short, stable ``code`` so the CLI can print a
one-line machine-parseable message.
"""

from __future__ import annotations


class SentSimpError(Exception):
    """Base class for all sentsimp errors."""

    code = "error"

    def one_line(self) -> str:
        message = " ".join(str(self).split())
        return f"error code={self.code} message={message}"


class ConfigError(SentSimpError, ValueError):
    code = "config"


class CorpusError(SentSimpError, ValueError):
    code = "corpus"


class AlignmentError(CorpusError):
    code = "alignment"


class VocabError(SentSimpError, ValueError):
    code = "vocab"


class ShapeError(SentSimpError, ValueError):
    code = "shape"


class GraphError(SentSimpError, ValueError):
    code = "graph"


class MetricError(SentSimpError, ValueError):
    code = "metric"


class RewardError(SentSimpError, ValueError):
    code = "reward"


class ScheduleError(SentSimpError, ValueError):
    code = "schedule"


class CheckpointError(SentSimpError):
    code = "checkpoint"


class MissingArtifactError(SentSimpError, FileNotFoundError):
    """An upstream pipeline stage has not produced its artifact yet."""

    code = "missing-artifact"

    def __init__(self, stage: str, path: object) -> None:
        self.stage = stage
        self.path = path
        super().__init__(
            f"{path} not found; run the '{stage}' stage first"
        )
