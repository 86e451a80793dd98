"""Dependency-free extractive baselines: lead, word frequency, ROUGE oracle."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Collection, Sequence

from structsum.rouge import rouge_n
from structsum.summarizers.base import SummarizeRequest, SummarizeResponse, make_response
from structsum.text import normalize_tokens

_TERMINAL = (".", "!", "?")
_CLOSERS = "\"')]}’”"


@dataclass(frozen=True)
class SentenceSpan:
    start: int
    end: int

    def __len__(self) -> int:
        return self.end - self.start


def _ends_sentence(token: str) -> bool:
    return token.rstrip(_CLOSERS).endswith(_TERMINAL)


def split_sentences(tokens: Sequence[str]) -> list[SentenceSpan]:
    """Partition ``tokens`` at tokens that end in ``.``, ``!`` or ``?``.

    A trailing run without terminal punctuation forms the last sentence.
    """
    spans = []
    start = 0
    for i, tok in enumerate(tokens):
        if _ends_sentence(tok):
            spans.append(SentenceSpan(start, i + 1))
            start = i + 1
    if start < len(tokens):
        spans.append(SentenceSpan(start, len(tokens)))
    return spans


def _emit(tokens: Sequence[str], spans: Collection[SentenceSpan]) -> list[str]:
    out: list[str] = []
    for span in sorted(spans, key=lambda s: s.start):
        out.extend(tokens[span.start : span.end])
    return out


def lead_summarize(request: SummarizeRequest) -> SummarizeResponse:
    return make_response(request, request.source_tokens)


def freq_extractive_summarize(
    request: SummarizeRequest, stopwords: Collection[str] = ()
) -> SummarizeResponse:
    tokens = request.source_tokens
    budget = request.max_output_tokens
    spans = split_sentences(tokens)
    stop = {w.lower() for w in stopwords}

    def content(span: SentenceSpan) -> list[str]:
        return [w for w in normalize_tokens(tokens[span.start : span.end]) if w not in stop]

    freq = Counter(w for span in spans for w in content(span))

    def score(span: SentenceSpan) -> float:
        words = content(span)
        return sum(freq[w] for w in words) / len(words) if words else 0.0

    ranked = sorted(range(len(spans)), key=lambda i: (-score(spans[i]), i))
    chosen: list[SentenceSpan] = []
    used = 0
    for i in ranked:
        if used + len(spans[i]) > budget:
            break
        chosen.append(spans[i])
        used += len(spans[i])
    if not chosen and ranked:
        # the best sentence alone overflows the budget; keep its prefix
        best = spans[ranked[0]]
        return make_response(request, tokens[best.start : best.end])
    return make_response(request, _emit(tokens, chosen))


def oracle_extractive_summarize(
    source_tokens: Sequence[str], reference_tokens: Sequence[str], budget: int
) -> list[str]:
    """Greedy sentence selection maximizing ROUGE-1 F1 against the reference.

    Each step adds the sentence (fitting in the remaining budget) that gives
    the highest F1, ties to the earlier sentence. Selection stops when no
    candidate strictly improves F1.
    """
    spans = split_sentences(source_tokens)
    chosen: list[SentenceSpan] = []
    used = 0
    best_f1 = 0.0
    remaining = list(spans)
    while True:
        pick = None
        for span in remaining:
            if used + len(span) > budget:
                continue
            f1 = rouge_n(_emit(source_tokens, [*chosen, span]), reference_tokens, 1).f1
            if f1 > best_f1:
                best_f1, pick = f1, span
        if pick is None:
            break
        chosen.append(pick)
        remaining.remove(pick)
        used += len(pick)
    return _emit(source_tokens, chosen)


class LeadSummarizer:
    name = "lead"

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse:
        return lead_summarize(request)


class FrequencySummarizer:
    name = "freq"

    def __init__(self, stopwords: Collection[str] = ()):
        self.stopwords = frozenset(stopwords)

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse:
        return freq_extractive_summarize(request, self.stopwords)


class OracleSummarizer:
    """Upper-bound extractive baseline; needs ``request.reference_tokens``."""

    name = "oracle"

    def summarize(self, request: SummarizeRequest) -> SummarizeResponse:
        if request.reference_tokens is None:
            raise ValueError("oracle summarizer needs reference tokens")
        tokens = oracle_extractive_summarize(
            request.source_tokens, request.reference_tokens, request.max_output_tokens
        )
        return make_response(request, tokens)
