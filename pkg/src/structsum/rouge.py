"""ROUGE-1, ROUGE-2 and ROUGE-L precision/recall/F1.

Tokens are lowercased and stripped of surrounding punctuation before
counting; there is no stemming and no stopword removal. ROUGE-L is the plain
(beta = 1) LCS F-measure over the whole token sequence.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from structsum.text import normalize_tokens

METRICS = ("rouge-1", "rouge-2", "rouge-l")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, matches: int, cand_total: int, ref_total: int) -> RougeScore:
        # f1 = 2pr/(p+r) = 2m/(|cand|+|ref|); one division keeps it correctly rounded
        p = matches / cand_total if cand_total else 0.0
        r = matches / ref_total if ref_total else 0.0
        f = 2 * matches / (cand_total + ref_total) if matches else 0.0
        return cls(p, r, f)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int = 1) -> RougeScore:
    if n not in (1, 2):
        raise ValueError("only ROUGE-1 and ROUGE-2 are supported")
    cand = ngrams(normalize_tokens(candidate), n)
    ref = ngrams(normalize_tokens(reference), n)
    matches = sum((cand & ref).values())
    return RougeScore.from_counts(matches, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Exact longest-common-subsequence length, O(len(a) * len(b)) time."""
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            if x == y:
                cur.append(prev[j] + 1)
            else:
                cur.append(max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    cand = normalize_tokens(candidate)
    ref = normalize_tokens(reference)
    return RougeScore.from_counts(lcs_length(cand, ref), len(cand), len(ref))


def score_all(candidate: Sequence[str], reference: Sequence[str]) -> dict[str, RougeScore]:
    return {
        "rouge-1": rouge_n(candidate, reference, 1),
        "rouge-2": rouge_n(candidate, reference, 2),
        "rouge-l": rouge_l(candidate, reference),
    }


@dataclass(frozen=True)
class MetricSummary:
    mean_f1: float | None
    scored: int
    skipped: int


@dataclass
class EvalReport:
    """Corpus-level mean F1 per metric (arithmetic mean over scored pairs).

    Per-pair values are kept and summed with ``math.fsum``, so the means do
    not depend on the order in which partial reports are merged.
    """

    f1s: dict[str, list[float]] = field(default_factory=lambda: {m: [] for m in METRICS})
    skipped: int = 0

    @property
    def scored(self) -> int:
        return len(self.f1s["rouge-1"])

    def add(self, candidate: Sequence[str], reference: Sequence[str]) -> None:
        if not normalize_tokens(reference):
            self.skipped += 1
            return
        for name, score in score_all(candidate, reference).items():
            self.f1s[name].append(score.f1)

    def merge(self, other: EvalReport) -> EvalReport:
        return EvalReport(
            {m: self.f1s[m] + other.f1s[m] for m in METRICS},
            self.skipped + other.skipped,
        )

    def mean(self, metric: str) -> float | None:
        values = self.f1s[metric]
        return math.fsum(values) / len(values) if values else None

    def summary(self, metric: str) -> MetricSummary:
        return MetricSummary(self.mean(metric), self.scored, self.skipped)

    def to_dict(self) -> dict:
        return {
            m: {
                "f1": None if self.mean(m) is None else round(self.mean(m), 4),
                "scored": self.scored,
                "skipped": self.skipped,
            }
            for m in METRICS
        }

    def render(self) -> str:
        lines = [f"{'metric':<8}  {'F1':>6}  {'scored':>6}  {'skipped':>7}"]
        for m in METRICS:
            mean = self.mean(m)
            shown = "-" if mean is None else f"{mean:.4f}"
            lines.append(f"{m.upper():<8}  {shown:>6}  {self.scored:>6}  {self.skipped:>7}")
        return "\n".join(lines)


def evaluate_corpus(pairs: Iterable[tuple[Sequence[str], Sequence[str]]]) -> EvalReport:
    """Score ``(candidate, reference)`` pairs; empty references are skipped."""
    report = EvalReport()
    for candidate, reference in pairs:
        report.add(candidate, reference)
    return report
