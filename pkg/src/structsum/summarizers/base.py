from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

DEFAULT_MAX_OUTPUT = 120


@dataclass(frozen=True)
class SummarizeRequest:
    id: str
    source_tokens: tuple[str, ...]
    max_output_tokens: int = DEFAULT_MAX_OUTPUT
    # Only the oracle baseline reads this; it never crosses the wire.
    reference_tokens: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        object.__setattr__(self, "source_tokens", tuple(self.source_tokens))
        if self.reference_tokens is not None:
            object.__setattr__(self, "reference_tokens", tuple(self.reference_tokens))


@dataclass(frozen=True)
class SummarizeResponse:
    id: str
    summary_tokens: tuple[str, ...]
    truncated: bool = False


@runtime_checkable
class Summarizer(Protocol):
    name: str

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse: ...


def make_response(
    request: SummarizeRequest, tokens: Sequence[str]
) -> SummarizeResponse:
    return SummarizeResponse(request.id, tuple(tokens[: request.max_output_tokens]))
