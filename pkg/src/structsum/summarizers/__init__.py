"""Summarizer contract, built-in baselines and the external-process adapter."""

from __future__ import annotations

import shlex
import sys

from structsum.summarizers.base import (
    DEFAULT_MAX_OUTPUT,
    SummarizeRequest,
    SummarizeResponse,
    Summarizer,
)
from structsum.summarizers.extractive import (
    FrequencySummarizer,
    LeadSummarizer,
    OracleSummarizer,
    SentenceSpan,
    freq_extractive_summarize,
    lead_summarize,
    oracle_extractive_summarize,
    split_sentences,
)
from structsum.summarizers.external import (
    BackendCrashed,
    BackendError,
    BackendPool,
    BackendTimeout,
    ExternalBackend,
    ExternalSummarizer,
    ProtocolViolation,
    external_summarize,
)

BUILTIN = {
    "lead": LeadSummarizer,
    "freq": FrequencySummarizer,
    "oracle": OracleSummarizer,
}

ECHO_BACKEND_COMMAND = [sys.executable, "-m", "structsum.summarizers.echo_backend"]


def make_summarizer(spec: str, workers: int = 1, timeout: float = 120.0):
    """Resolve a backend spec: a built-in name or an external command line."""
    if spec in BUILTIN:
        return BUILTIN[spec]()
    argv = shlex.split(spec)
    if not argv:
        raise ValueError("empty backend command")
    if argv[0] == "echo-backend":
        # resolve without relying on the console script being on PATH
        argv = ECHO_BACKEND_COMMAND + argv[1:]
    return ExternalSummarizer(argv, workers=workers, timeout=timeout, name=spec)


__all__ = [
    "BUILTIN",
    "BackendCrashed",
    "BackendError",
    "BackendPool",
    "BackendTimeout",
    "DEFAULT_MAX_OUTPUT",
    "ECHO_BACKEND_COMMAND",
    "ExternalBackend",
    "ExternalSummarizer",
    "FrequencySummarizer",
    "LeadSummarizer",
    "OracleSummarizer",
    "ProtocolViolation",
    "SentenceSpan",
    "SummarizeRequest",
    "SummarizeResponse",
    "Summarizer",
    "external_summarize",
    "freq_extractive_summarize",
    "lead_summarize",
    "make_summarizer",
    "oracle_extractive_summarize",
    "split_sentences",
]
